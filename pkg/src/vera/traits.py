"""Species trait store: CSV ingestion, lookup, and default-rate derivation.

A local trait table stands in for a live biodiversity database. Each
record carries the life-history traits used to seed simulation
parameters: lifespan, body mass, offspring count, and reproductive
maturity. Body mass is stored but not consumed by any current archetype
(reserved for biomass accounting).
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

from .model import EntityParameters

__all__ = [
    "TraitRecord",
    "RowError",
    "IngestReport",
    "TraitStore",
    "TraitFormatError",
    "derive_params",
    "TRAIT_CSV_HEADER",
]

TRAIT_CSV_HEADER = [
    "species_id",
    "common_name",
    "lifespan_years",
    "body_mass_g",
    "offspring_count",
    "reproductive_maturity_years",
]


class TraitFormatError(ValueError):
    """Raised when a trait CSV stream has the wrong header."""


@dataclass(frozen=True)
class TraitRecord:
    """Life-history traits for one species.

    Invariants: lifespan and body mass positive, offspring count and
    maturity non-negative, maturity strictly below lifespan, everything
    finite.
    """

    species_id: str
    common_name: str
    lifespan: float  # years
    body_mass: float  # grams
    offspring_count: float  # expected offspring per lifetime
    reproductive_maturity: float  # years

    def check(self) -> Optional[str]:
        """Return the name of the first violated field, or None."""
        numeric = {
            "lifespan_years": self.lifespan,
            "body_mass_g": self.body_mass,
            "offspring_count": self.offspring_count,
            "reproductive_maturity_years": self.reproductive_maturity,
        }
        for name, value in numeric.items():
            if not math.isfinite(value):
                return name
        if self.lifespan <= 0:
            return "lifespan_years"
        if self.body_mass <= 0:
            return "body_mass_g"
        if self.offspring_count < 0:
            return "offspring_count"
        if self.reproductive_maturity < 0:
            return "reproductive_maturity_years"
        if self.reproductive_maturity >= self.lifespan:
            return "reproductive_maturity_years"
        return None


@dataclass(frozen=True)
class RowError:
    line: int
    field: str
    message: str


@dataclass
class IngestReport:
    """Outcome of one ingestion pass: rows loaded plus per-row errors."""

    loaded: int = 0
    errors: list[RowError] = field(default_factory=list)


def derive_params(record: TraitRecord) -> EntityParameters:
    """Map traits to default per-year rates.

    death_rate is the reciprocal of lifespan; birth_rate spreads lifetime
    offspring over the reproductive span. Initial population and carrying
    capacity are left unset: they describe the scenario, not the species.
    """
    death_rate = 1.0 / record.lifespan
    birth_rate = record.offspring_count / (record.lifespan - record.reproductive_maturity)
    return EntityParameters(birth_rate=birth_rate, death_rate=death_rate)


class TraitStore:
    """In-memory trait table keyed by species id.

    Reads are lock-free against an immutable snapshot; ingestion builds a
    new snapshot under a lock and swaps it in whole, so readers never see
    a partially ingested store.
    """

    def __init__(self) -> None:
        self._records: dict[str, TraitRecord] = {}
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[TraitRecord]:
        return sorted(self._records.values(), key=lambda r: r.species_id)

    def get(self, species_id: str) -> Optional[TraitRecord]:
        return self._records.get(species_id)

    def ingest(self, source: Union[str, TextIO]) -> IngestReport:
        """Load trait rows from CSV; bad rows are reported, not fatal.

        The stream must start with the canonical header. A malformed or
        invariant-violating row yields a :class:`RowError` with its line
        number and offending field; remaining rows still load. A repeated
        species_id replaces the earlier record.
        """
        stream = io.StringIO(source) if isinstance(source, str) else source
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise TraitFormatError(f"missing header; expected {','.join(TRAIT_CSV_HEADER)}")
        if [h.strip() for h in header] != TRAIT_CSV_HEADER:
            raise TraitFormatError(
                f"bad header {','.join(header)!r}; expected {','.join(TRAIT_CSV_HEADER)}"
            )

        report = IngestReport()
        with self._write_lock:
            records = dict(self._records)
            for line, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(TRAIT_CSV_HEADER):
                    report.errors.append(
                        RowError(line, "row", f"expected {len(TRAIT_CSV_HEADER)} fields, got {len(row)}")
                    )
                    continue
                values: dict[str, float] = {}
                bad_field = None
                for name, cell in zip(TRAIT_CSV_HEADER[2:], row[2:]):
                    try:
                        values[name] = float(cell)
                    except ValueError:
                        report.errors.append(RowError(line, name, f"not a number: {cell!r}"))
                        bad_field = name
                        break
                if bad_field:
                    continue
                species_id = row[0].strip()
                if not species_id:
                    report.errors.append(RowError(line, "species_id", "species_id is empty"))
                    continue
                record = TraitRecord(
                    species_id=species_id,
                    common_name=row[1].strip(),
                    lifespan=values["lifespan_years"],
                    body_mass=values["body_mass_g"],
                    offspring_count=values["offspring_count"],
                    reproductive_maturity=values["reproductive_maturity_years"],
                )
                violated = record.check()
                if violated is not None:
                    report.errors.append(
                        RowError(line, violated, "violates trait invariants; row rejected")
                    )
                    continue
                records[record.species_id] = record
                report.loaded += 1
            self._records = records
        return report

    def lookup(self, query: str) -> list[TraitRecord]:
        """Exact species_id hit first, then common-name substring matches
        in alphabetical order."""
        records = self._records
        out: list[TraitRecord] = []
        exact = records.get(query)
        if exact is not None:
            out.append(exact)
        needle = query.lower()
        matches = [
            r
            for r in records.values()
            if needle in r.common_name.lower() and r is not exact
        ]
        matches.sort(key=lambda r: (r.common_name.lower(), r.species_id))
        out.extend(matches)
        return out

    def dump_csv(self, stream: TextIO) -> None:
        """Write the store back out in the canonical CSV format,
        sorted by species id."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(TRAIT_CSV_HEADER)
        for record in self.records():
            writer.writerow(
                [
                    record.species_id,
                    record.common_name,
                    _trim(record.lifespan),
                    _trim(record.body_mass),
                    _trim(record.offspring_count),
                    _trim(record.reproductive_maturity),
                ]
            )


def _trim(value: float) -> str:
    # 5 → "5", 0.25 → "0.25"
    return format(value, "g")
