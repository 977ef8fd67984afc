"""Reconciling simulations with observed data.

Ground-truth trajectories are imported from CSV, scored against simulated
trajectories by root-mean-square error (simulation linearly interpolated
to the observation times), and a derivative-free coordinate search
recommends new parameter values that shrink the discrepancy.

The search never touches the input model: it returns a recommendation the
user may apply or discard. Fitting always runs the deterministic ODE
engine, so identical inputs give identical recommendations.
"""

from __future__ import annotations

import csv
import io
import math
import warnings as _warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, TextIO, Union

import numpy as np

from .compiler import (
    CompileError,
    CompileWarning,
    InvalidModelError,
    compile_model,
)
from .engine import EngineError, RunConfig, TimeSeries, run_ode
from .model import (
    ConceptualModel,
    EntityParameters,
    InteractionParameters,
    RelationKind,
)

__all__ = [
    "ObservationSeries",
    "ObservationFormatError",
    "CalibrationError",
    "ParameterPath",
    "Evaluation",
    "FitResult",
    "import_observations",
    "discrepancy",
    "recommend_parameters",
    "observations_to_dict",
    "observations_from_dict",
    "fit_result_to_dict",
]

OBSERVATION_CSV_HEADER = ["time", "entity_id", "population"]

_ENTITY_FIELDS = ("initial_population", "birth_rate", "death_rate", "carrying_capacity")
_INTERACTION_FIELDS = ("rate", "efficiency")


class ObservationFormatError(ValueError):
    """Observation CSV is malformed (bad header, field, or ragged grid)."""


class CalibrationError(ValueError):
    """Simulation and observations cannot be compared as requested."""


@dataclass(frozen=True)
class ObservationSeries:
    """Observed populations on a shared, strictly increasing time grid."""

    times: tuple[float, ...]
    series: dict[str, tuple[float, ...]]
    provenance: str = ""


def import_observations(source: Union[str, TextIO], provenance: str = "") -> ObservationSeries:
    """Parse ``time,entity_id,population`` rows into aligned series.

    Rows may arrive in any order; they are grouped by entity and sorted by
    time. A repeated (time, entity) pair keeps the last value and warns.
    Every entity must be observed at every time in the file, since all
    series share one grid. Malformed fields abort with the line number.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ObservationFormatError(
            f"missing header; expected {','.join(OBSERVATION_CSV_HEADER)}"
        )
    if [h.strip() for h in header] != OBSERVATION_CSV_HEADER:
        raise ObservationFormatError(
            f"bad header {','.join(header)!r}; expected {','.join(OBSERVATION_CSV_HEADER)}"
        )

    points: dict[str, dict[float, float]] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ObservationFormatError(f"line {line}: expected 3 fields, got {len(row)}")
        try:
            t = float(row[0])
        except ValueError:
            raise ObservationFormatError(f"line {line}: time is not a number: {row[0]!r}")
        try:
            value = float(row[2])
        except ValueError:
            raise ObservationFormatError(
                f"line {line}: population is not a number: {row[2]!r}"
            )
        if not math.isfinite(t):
            raise ObservationFormatError(f"line {line}: time must be finite")
        if not math.isfinite(value) or value < 0:
            raise ObservationFormatError(f"line {line}: population must be finite and >= 0")
        entity_id = row[1].strip()
        if not entity_id:
            raise ObservationFormatError(f"line {line}: entity_id is empty")
        per_entity = points.setdefault(entity_id, {})
        if t in per_entity:
            _warnings.warn(
                f"duplicate observation for ({t}, {entity_id}); keeping the later row",
                stacklevel=2,
            )
        per_entity[t] = value

    if not points:
        return ObservationSeries(times=(), series={}, provenance=provenance)

    times = sorted({t for per_entity in points.values() for t in per_entity})
    series: dict[str, tuple[float, ...]] = {}
    for entity_id in sorted(points):
        per_entity = points[entity_id]
        missing = [t for t in times if t not in per_entity]
        if missing:
            raise ObservationFormatError(
                f"entity {entity_id!r} has no observation at time {missing[0]}; "
                "all series must share one time grid"
            )
        series[entity_id] = tuple(per_entity[t] for t in times)
    return ObservationSeries(times=tuple(times), series=series, provenance=provenance)


def discrepancy(sim: TimeSeries, obs: ObservationSeries) -> float:
    """RMSE between simulation and observations, pooled over every
    (entity, time) pair; the simulation is linearly interpolated to the
    observation times."""
    if not obs.times:
        return 0.0
    sim_times = np.asarray(sim.times, dtype=float)
    obs_times = np.asarray(obs.times, dtype=float)
    lo, hi = sim_times[0], sim_times[-1]
    slack = 1e-9 * max(1.0, abs(hi))
    outside = obs_times[(obs_times < lo - slack) | (obs_times > hi + slack)]
    if outside.size:
        raise CalibrationError(
            f"observation time {outside[0]} is outside the simulated range [{lo}, {hi}]"
        )

    total = 0.0
    count = 0
    for entity_id, observed in obs.series.items():
        if entity_id not in sim.series:
            raise CalibrationError(f"observed entity {entity_id!r} is not in the simulation")
        predicted = np.interp(obs_times, sim_times, sim.values(entity_id))
        residual = predicted - np.asarray(observed, dtype=float)
        total += float(np.dot(residual, residual))
        count += residual.size
    return math.sqrt(total / count)


# ---------------------------------------------------------------------------
# parameter paths


@dataclass(frozen=True)
class ParameterPath:
    """Addresses one tunable number in a model.

    String forms: ``birth_rate@kudzu`` for entity parameters and
    ``rate@bug->kudzu:consumes`` for interaction parameters.
    """

    field: str
    entity_id: Optional[str] = None
    relation_key: Optional[tuple[str, str, str]] = None

    @classmethod
    def parse(cls, text: str) -> "ParameterPath":
        if "@" not in text:
            raise CalibrationError(
                f"bad parameter path {text!r}; expected field@entity or "
                "field@source->target:kind"
            )
        fieldname, _, rest = text.partition("@")
        if "->" in rest:
            endpoints, _, kind = rest.rpartition(":")
            source, _, target = endpoints.partition("->")
            if not (source and target and kind):
                raise CalibrationError(f"bad interaction path {text!r}")
            try:
                RelationKind(kind)
            except ValueError:
                raise CalibrationError(f"unknown relation kind in path {text!r}")
            if fieldname not in _INTERACTION_FIELDS:
                raise CalibrationError(
                    f"{fieldname!r} is not an interaction field; expected one of "
                    f"{_INTERACTION_FIELDS}"
                )
            return cls(field=fieldname, relation_key=(source, target, kind))
        if fieldname not in _ENTITY_FIELDS:
            raise CalibrationError(
                f"{fieldname!r} is not an entity field; expected one of {_ENTITY_FIELDS}"
            )
        return cls(field=fieldname, entity_id=rest)

    def __str__(self) -> str:
        if self.entity_id is not None:
            return f"{self.field}@{self.entity_id}"
        source, target, kind = self.relation_key  # type: ignore[misc]
        return f"{self.field}@{source}->{target}:{kind}"

    def get(self, model: ConceptualModel) -> Optional[float]:
        if self.entity_id is not None:
            params = model.entity_params.get(self.entity_id)
            return getattr(params, self.field) if params is not None else None
        params = model.interaction_params.get(self.relation_key)
        return getattr(params, self.field) if params is not None else None

    def with_value(self, model: ConceptualModel, value: float) -> ConceptualModel:
        if self.entity_id is not None:
            entity_params = dict(model.entity_params)
            current = entity_params.get(self.entity_id, EntityParameters())
            entity_params[self.entity_id] = replace(current, **{self.field: value})
            return replace(model, entity_params=entity_params)
        interaction_params = dict(model.interaction_params)
        current = interaction_params.get(self.relation_key, InteractionParameters())
        interaction_params[self.relation_key] = replace(current, **{self.field: value})
        return replace(model, interaction_params=interaction_params)


# ---------------------------------------------------------------------------
# recommendation search


@dataclass(frozen=True)
class Evaluation:
    """One objective evaluation: the probed values and their discrepancy."""

    params: dict[str, float]
    discrepancy: float


@dataclass(frozen=True)
class FitResult:
    best_params: dict[str, float]
    best_discrepancy: float
    initial_discrepancy: float
    evaluations: int
    trace: tuple[Evaluation, ...]


_INITIAL_STEP = 0.5
_MIN_STEP = 1e-3


def recommend_parameters(
    model: ConceptualModel,
    obs: ObservationSeries,
    free: Sequence[Union[str, ParameterPath]],
    budget: int,
    dt: Optional[float] = None,
) -> FitResult:
    """Coordinate pattern search over the free parameters.

    Each round probes every free parameter at ``value * (1 +/- step)``
    (multiplicative, so rates stay non-negative); the better probe is
    accepted when it strictly improves the discrepancy, and the step
    halves after a round with no improvement. The search stops when the
    evaluation budget is spent or the step falls below 1e-3.

    The objective is the RMSE of the ODE trajectory of the re-compiled
    model against ``obs``. Probes whose simulation fails score +inf and
    the search moves on. The input model is never modified.
    """
    if budget < 1:
        raise CalibrationError("budget must be >= 1")
    if not obs.times:
        raise CalibrationError("no observations to fit against")
    paths = [p if isinstance(p, ParameterPath) else ParameterPath.parse(p) for p in free]
    if not paths:
        raise CalibrationError("no free parameters given")

    values: list[float] = []
    for path in paths:
        value = path.get(model)
        if value is None:
            raise CalibrationError(f"free parameter {path} has no current value in the model")
        values.append(float(value))

    duration = max(obs.times)
    if duration <= 0:
        raise CalibrationError("observations must extend past time 0")
    config = RunConfig(duration=duration, dt=dt if dt is not None else duration / 500.0)

    def build(candidate: Sequence[float]) -> ConceptualModel:
        patched = model
        for path, value in zip(paths, candidate):
            patched = path.with_value(patched, value)
        return patched

    def objective(candidate: Sequence[float]) -> float:
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore", CompileWarning)
            return discrepancy(run_ode(compile_model(build(candidate)), config), obs)

    def snapshot(candidate: Sequence[float]) -> dict[str, float]:
        return {str(path): float(v) for path, v in zip(paths, candidate)}

    trace: list[Evaluation] = []

    # The starting point must evaluate cleanly; later probes may fail soft.
    initial = objective(values)
    evaluations = 1
    trace.append(Evaluation(snapshot(values), initial))

    best_values = list(values)
    best_score = initial
    step = _INITIAL_STEP
    while evaluations < budget and step >= _MIN_STEP:
        improved_this_round = False
        for index in range(len(paths)):
            probe_best: Optional[tuple[float, list[float]]] = None
            for factor in (1.0 + step, 1.0 - step):
                if evaluations >= budget:
                    break
                candidate = list(best_values)
                candidate[index] = best_values[index] * factor
                try:
                    score = objective(candidate)
                except (InvalidModelError, CompileError, EngineError, CalibrationError):
                    score = math.inf
                evaluations += 1
                trace.append(Evaluation(snapshot(candidate), score))
                if probe_best is None or score < probe_best[0]:
                    probe_best = (score, candidate)
            if probe_best is not None and probe_best[0] < best_score:
                best_score, best_values = probe_best[0], probe_best[1]
                improved_this_round = True
            if evaluations >= budget:
                break
        if not improved_this_round:
            step /= 2.0

    return FitResult(
        best_params=snapshot(best_values),
        best_discrepancy=best_score,
        initial_discrepancy=initial,
        evaluations=evaluations,
        trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# wire formats


def observations_to_dict(obs: ObservationSeries) -> dict:
    return {
        "times": list(obs.times),
        "series": {entity_id: list(values) for entity_id, values in obs.series.items()},
        "provenance": obs.provenance,
    }


def observations_from_dict(doc: dict) -> ObservationSeries:
    times = tuple(float(t) for t in doc.get("times", []))
    series = {
        str(entity_id): tuple(float(v) for v in values)
        for entity_id, values in doc.get("series", {}).items()
    }
    for entity_id, values in series.items():
        if len(values) != len(times):
            raise ObservationFormatError(
                f"series {entity_id!r} has {len(values)} values for {len(times)} times"
            )
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ObservationFormatError("times must be strictly increasing")
    if any(v < 0 or not math.isfinite(v) for values in series.values() for v in values):
        raise ObservationFormatError("populations must be finite and >= 0")
    return ObservationSeries(
        times=times, series=series, provenance=str(doc.get("provenance", ""))
    )


def fit_result_to_dict(result: FitResult) -> dict:
    def clean(value: float):
        return value if math.isfinite(value) else None

    return {
        "best_params": result.best_params,
        "best_discrepancy": clean(result.best_discrepancy),
        "initial_discrepancy": clean(result.initial_discrepancy),
        "evaluations": result.evaluations,
        "trace": [
            {"params": e.params, "discrepancy": clean(e.discrepancy)} for e in result.trace
        ],
    }
