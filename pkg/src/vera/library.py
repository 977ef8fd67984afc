"""Durable model library: save, load, list, copy, with lineage tracking.

Storage is one canonical JSON document per model under ``models/`` plus
an ``index.json`` of summaries. Every file write goes through a temp file
and an atomic rename, so a crash can never leave a half-written record;
if a crash lands between the model write and the index write, the index
is reconciled from the directory on the next open.

Single-writer, multi-reader: writes serialize through one lock and swap
the in-memory index wholesale, so readers only ever see committed state.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

from .compiler import InvalidModelError
from .model import (
    ConceptualModel,
    Violation,
    model_from_json,
    model_to_json,
    validate_model,
)

__all__ = ["StoredModel", "ModelSummary", "ModelLibrary", "NotFoundError"]


class NotFoundError(KeyError):
    def __init__(self, model_id: str):
        self.model_id = model_id
        super().__init__(f"no stored model with id {model_id!r}")


@dataclass(frozen=True)
class ModelSummary:
    id: str
    name: str
    tags: tuple[str, ...]
    created_at: str
    revised_at: str
    lineage: Optional[str]


@dataclass(frozen=True)
class StoredModel:
    model: ConceptualModel
    created_at: str
    revised_at: str
    tags: tuple[str, ...]

    @property
    def lineage(self) -> Optional[str]:
        return self.model.lineage


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


class ModelLibrary:
    """Model store rooted at a directory (created on first use)."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.models_dir = self.root / "models"
        self.index_path = self.root / "index.json"
        self.models_dir.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self._index: dict[str, ModelSummary] = {}
        self._reload_index()

    # -- persistence ------------------------------------------------------

    def _reload_index(self) -> None:
        entries: dict[str, ModelSummary] = {}
        if self.index_path.exists():
            raw = json.loads(self.index_path.read_text(encoding="utf-8"))
            for model_id, entry in raw.get("models", {}).items():
                entries[model_id] = ModelSummary(
                    id=model_id,
                    name=entry.get("name", model_id),
                    tags=tuple(entry.get("tags", [])),
                    created_at=entry.get("created_at", ""),
                    revised_at=entry.get("revised_at", ""),
                    lineage=entry.get("lineage"),
                )
        # Reconcile with the directory: adopt files the index missed
        # (crash window) and drop entries whose file vanished.
        on_disk = {p.stem: p for p in self.models_dir.glob("*.json")}
        for model_id in list(entries):
            if model_id not in on_disk:
                del entries[model_id]
        changed = set(entries) != set(on_disk)
        for model_id, path in on_disk.items():
            if model_id in entries:
                continue
            model = model_from_json(path.read_text(encoding="utf-8"))
            stamp = datetime.fromtimestamp(path.stat().st_mtime, timezone.utc).isoformat()
            entries[model_id] = ModelSummary(
                id=model_id,
                name=model.name,
                tags=(),
                created_at=stamp,
                revised_at=stamp,
                lineage=model.lineage,
            )
        self._index = entries
        if changed:
            self._write_index(entries)

    def _write_index(self, entries: dict[str, ModelSummary]) -> None:
        doc = {
            "models": {
                model_id: {
                    "name": s.name,
                    "tags": list(s.tags),
                    "created_at": s.created_at,
                    "revised_at": s.revised_at,
                    "lineage": s.lineage,
                }
                for model_id, s in sorted(entries.items())
            }
        }
        _atomic_write(self.index_path, json.dumps(doc, indent=2) + "\n")

    def _model_path(self, model_id: str) -> Path:
        if not model_id or "/" in model_id or model_id in (".", ".."):
            raise NotFoundError(model_id)
        return self.models_dir / f"{model_id}.json"

    # -- operations -------------------------------------------------------

    def save(self, model: ConceptualModel, tags: Optional[list[str]] = None) -> str:
        """Insert or revise a model; returns its id.

        Invalid models are rejected with the full validation report. A
        save whose lineage chain loops back on itself is rejected: the
        lineage relation must stay a forest.
        """
        report = validate_model(model)
        if report:
            raise InvalidModelError(report)
        with self._write_lock:
            self._check_lineage(model)
            now = _now()
            existing = self._index.get(model.id)
            created = existing.created_at if existing else now
            revised = max(now, created)
            new_tags = tuple(tags) if tags is not None else (existing.tags if existing else ())
            _atomic_write(self._model_path(model.id), model_to_json(model))
            entries = dict(self._index)
            entries[model.id] = ModelSummary(
                id=model.id,
                name=model.name,
                tags=new_tags,
                created_at=created,
                revised_at=revised,
                lineage=model.lineage,
            )
            self._write_index(entries)
            self._index = entries
        return model.id

    def _check_lineage(self, model: ConceptualModel) -> None:
        seen = {model.id}
        parent = model.lineage
        while parent is not None:
            if parent in seen:
                raise InvalidModelError(
                    [Violation("lineage_cycle", model.id, "lineage must form a forest")]
                )
            seen.add(parent)
            entry = self._index.get(parent)
            parent = entry.lineage if entry else None

    def load(self, model_id: str) -> StoredModel:
        entry = self._index.get(model_id)
        path = self._model_path(model_id)
        if entry is None or not path.exists():
            raise NotFoundError(model_id)
        model = model_from_json(path.read_text(encoding="utf-8"))
        return StoredModel(
            model=model,
            created_at=entry.created_at,
            revised_at=entry.revised_at,
            tags=entry.tags,
        )

    def list(self, query: Optional[str] = None) -> list[ModelSummary]:
        """Summaries, newest revision first; ``query`` filters by name
        substring (case-insensitive) or exact tag."""
        entries = list(self._index.values())
        if query:
            needle = query.lower()
            entries = [
                s for s in entries if needle in s.name.lower() or query in s.tags
            ]
        return sorted(entries, key=lambda s: (s.revised_at, s.id), reverse=True)

    def copy(self, model_id: str, new_name: str) -> str:
        """Deep-copy a stored model under a fresh id with lineage set to
        the source; edits to the copy never touch the original."""
        source = self.load(model_id)
        new_id = uuid.uuid4().hex[:12]
        while new_id in self._index:  # pragma: no cover - astronomically rare
            new_id = uuid.uuid4().hex[:12]
        duplicate = replace(
            source.model,
            id=new_id,
            name=new_name,
            entities=tuple(source.model.entities),
            relations=tuple(source.model.relations),
            entity_params=dict(source.model.entity_params),
            interaction_params=dict(source.model.interaction_params),
            lineage=model_id,
        )
        return self.save(duplicate, tags=list(source.tags))

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._index
