"""Conceptual-model language: typed entity/relation graphs with parameters.

A conceptual model is the user's hypothesis about a phenomenon: a set of
entities (populations and resources) wired together by typed relations,
plus the numeric parameters needed to simulate it. This module defines the
model types, validation, the node+link complexity score, and a structural
diff/apply pair used by the copy/revise workflow.

All types are immutable values; every operation here is pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

__all__ = [
    "EntityKind",
    "RelationKind",
    "Entity",
    "Relation",
    "EntityParameters",
    "InteractionParameters",
    "ConceptualModel",
    "ComplexityScore",
    "Violation",
    "ModelDelta",
    "ModelFormatError",
    "validate_model",
    "complexity",
    "diff_models",
    "apply_delta",
    "structural_equal",
    "model_to_dict",
    "model_from_dict",
    "model_to_json",
    "model_from_json",
]


class EntityKind(str, Enum):
    BIOTIC = "biotic"
    ABIOTIC = "abiotic"


class RelationKind(str, Enum):
    CONSUMES = "consumes"
    INHIBITS = "inhibits"
    ENHANCES = "enhances"
    COMPETES_WITH = "competes_with"
    CONSUMES_RESOURCE = "consumes_resource"


# Relations are identified by this triple; interaction parameters key on it.
RelationKey = tuple[str, str, str]


@dataclass(frozen=True)
class Entity:
    """A node in the model: a population (biotic) or a resource (abiotic).

    Ids are caller-supplied slugs so that diffs stay stable across
    copy/revise chains. Only biotic entities may carry a ``species_ref``
    linking them to a trait-store record.
    """

    id: str
    name: str
    kind: EntityKind
    species_ref: Optional[str] = None


@dataclass(frozen=True)
class Relation:
    """A typed, directed link between two entities.

    Direction follows the actor: for ``consumes`` the source is the
    consumer (predator) and the target is the consumed (prey); for
    ``consumes_resource`` the source feeds on the abiotic target.
    """

    source: str
    target: str
    kind: RelationKind

    @property
    def key(self) -> RelationKey:
        return (self.source, self.target, self.kind.value)


@dataclass(frozen=True)
class EntityParameters:
    """Per-entity simulation parameters; fields missing until supplied.

    Rates are per-capita per model time unit. ``carrying_capacity`` absent
    means growth is unbounded for that entity.
    """

    initial_population: Optional[float] = None
    birth_rate: Optional[float] = None
    death_rate: Optional[float] = None
    carrying_capacity: Optional[float] = None


@dataclass(frozen=True)
class InteractionParameters:
    """Per-relation parameters: encounter rate and, for ``consumes``,
    the fraction of consumed prey converted into consumer births."""

    rate: float = 0.0
    efficiency: float = 0.0


@dataclass(frozen=True)
class ComplexityScore:
    nodes: int
    links: int
    total: int


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate_model`."""

    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ConceptualModel:
    """The user's hypothesis: entities + relations + parameters.

    ``entity_params`` and ``interaction_params`` are treated as immutable;
    operations that change a model return a new instance.
    """

    id: str
    name: str
    description: str = ""
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()
    entity_params: dict[str, EntityParameters] = field(default_factory=dict)
    interaction_params: dict[RelationKey, InteractionParameters] = field(default_factory=dict)
    lineage: Optional[str] = None

    def entity(self, entity_id: str) -> Entity:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)

    def biotic_entities(self) -> tuple[Entity, ...]:
        return tuple(e for e in self.entities if e.kind is EntityKind.BIOTIC)


class ModelFormatError(ValueError):
    """Raised when a model document does not follow the JSON schema."""


# ---------------------------------------------------------------------------
# validation


def _check_finite(value: float, what: str, subject: str, out: list[Violation]) -> None:
    if not math.isfinite(value):
        out.append(Violation("invalid_entity_param", subject, f"{what} must be finite"))


def validate_model(model: ConceptualModel) -> list[Violation]:
    """Enumerate every invariant violation in ``model``.

    An empty report means the model is valid. Violations are data, not
    errors: models under construction (e.g. with parameters still missing)
    validate clean; completeness is checked at compile time instead.
    """
    out: list[Violation] = []
    seen_ids: set[str] = set()
    for e in model.entities:
        if e.id in seen_ids:
            out.append(Violation("duplicate_entity_id", e.id, f"entity id {e.id!r} is not unique"))
        seen_ids.add(e.id)
        if e.kind is EntityKind.ABIOTIC and e.species_ref is not None:
            out.append(
                Violation(
                    "species_ref_on_abiotic",
                    e.id,
                    f"abiotic entity {e.id!r} must not carry a species_ref",
                )
            )

    by_id = {e.id: e for e in model.entities}
    seen_relations: set[RelationKey] = set()
    for r in model.relations:
        subject = "->".join((r.source, r.target)) + f":{r.kind.value}"
        missing = False
        for endpoint in (r.source, r.target):
            if endpoint not in by_id:
                out.append(
                    Violation(
                        "unknown_entity",
                        subject,
                        f"relation references missing entity id {endpoint!r}",
                    )
                )
                missing = True
        if r.key in seen_relations:
            out.append(Violation("duplicate_relation", subject, "relation appears more than once"))
        seen_relations.add(r.key)
        if missing:
            continue
        if r.source == r.target:
            out.append(
                Violation("self_relation", subject, "relation source and target must differ")
            )
            continue
        src, dst = by_id[r.source], by_id[r.target]
        if r.kind is RelationKind.CONSUMES_RESOURCE:
            if dst.kind is not EntityKind.ABIOTIC:
                out.append(
                    Violation(
                        "resource_target_not_abiotic",
                        subject,
                        "consumes_resource requires an abiotic target",
                    )
                )
            if src.kind is not EntityKind.BIOTIC:
                out.append(
                    Violation(
                        "endpoint_not_biotic",
                        subject,
                        "consumes_resource requires a biotic source",
                    )
                )
        elif r.kind is RelationKind.COMPETES_WITH:
            if src.kind is not EntityKind.BIOTIC or dst.kind is not EntityKind.BIOTIC:
                out.append(
                    Violation(
                        "competitor_not_biotic",
                        subject,
                        "competes_with requires both endpoints biotic",
                    )
                )
        else:
            # consumes / inhibits / enhances act between populations
            if src.kind is not EntityKind.BIOTIC or dst.kind is not EntityKind.BIOTIC:
                out.append(
                    Violation(
                        "endpoint_not_biotic",
                        subject,
                        f"{r.kind.value} requires both endpoints biotic",
                    )
                )

    for entity_id, params in model.entity_params.items():
        if entity_id not in by_id:
            out.append(
                Violation(
                    "orphan_entity_params",
                    entity_id,
                    f"entity_params key {entity_id!r} names no entity",
                )
            )
        if params.initial_population is not None:
            _check_finite(params.initial_population, "initial_population", entity_id, out)
            if params.initial_population < 0:
                out.append(
                    Violation(
                        "invalid_entity_param",
                        entity_id,
                        "initial_population must be >= 0",
                    )
                )
        for rate_name in ("birth_rate", "death_rate"):
            value = getattr(params, rate_name)
            if value is None:
                continue
            _check_finite(value, rate_name, entity_id, out)
            if value < 0:
                out.append(
                    Violation("invalid_entity_param", entity_id, f"{rate_name} must be >= 0")
                )
        if params.carrying_capacity is not None:
            _check_finite(params.carrying_capacity, "carrying_capacity", entity_id, out)
            if params.carrying_capacity <= 0:
                out.append(
                    Violation(
                        "invalid_entity_param",
                        entity_id,
                        "carrying_capacity must be > 0",
                    )
                )

    relation_keys = {r.key for r in model.relations}
    for key, params in model.interaction_params.items():
        subject = f"{key[0]}->{key[1]}:{key[2]}"
        if key not in relation_keys:
            out.append(
                Violation(
                    "orphan_interaction_params",
                    subject,
                    "interaction_params key matches no relation",
                )
            )
        if not math.isfinite(params.rate) or params.rate < 0:
            out.append(
                Violation("invalid_interaction_param", subject, "rate must be finite and >= 0")
            )
        if not math.isfinite(params.efficiency) or not 0.0 <= params.efficiency <= 1.0:
            out.append(
                Violation(
                    "invalid_interaction_param",
                    subject,
                    "efficiency must lie in [0, 1]",
                )
            )
    return out


def complexity(model: ConceptualModel) -> ComplexityScore:
    """Model complexity: node count, link count, and their sum."""
    nodes = len(model.entities)
    links = len(model.relations)
    return ComplexityScore(nodes=nodes, links=links, total=nodes + links)


# ---------------------------------------------------------------------------
# diff / apply


@dataclass(frozen=True)
class ModelDelta:
    """Structural edit set turning one model into another.

    Produced by :func:`diff_models`; :func:`apply_delta` replays it.
    ``None`` values in the param-change maps delete the entry; ``None``
    for name/description means unchanged.
    """

    added_entities: tuple[Entity, ...] = ()
    removed_entities: tuple[str, ...] = ()
    changed_entities: tuple[Entity, ...] = ()
    added_relations: tuple[Relation, ...] = ()
    removed_relations: tuple[RelationKey, ...] = ()
    entity_param_changes: dict[str, Optional[EntityParameters]] = field(default_factory=dict)
    interaction_param_changes: dict[RelationKey, Optional[InteractionParameters]] = field(
        default_factory=dict
    )
    name_change: Optional[str] = None
    description_change: Optional[str] = None

    @property
    def is_empty(self) -> bool:
        return not (
            self.added_entities
            or self.removed_entities
            or self.changed_entities
            or self.added_relations
            or self.removed_relations
            or self.entity_param_changes
            or self.interaction_param_changes
            or self.name_change is not None
            or self.description_change is not None
        )


def diff_models(a: ConceptualModel, b: ConceptualModel) -> ModelDelta:
    """Compute the edits that turn ``a`` into ``b`` (id/lineage ignored)."""
    a_entities = {e.id: e for e in a.entities}
    b_entities = {e.id: e for e in b.entities}
    added = tuple(e for e in b.entities if e.id not in a_entities)
    removed = tuple(e.id for e in a.entities if e.id not in b_entities)
    changed = tuple(
        e for e in b.entities if e.id in a_entities and e != a_entities[e.id]
    )

    a_relations = {r.key: r for r in a.relations}
    b_relations = {r.key: r for r in b.relations}
    added_rel = tuple(r for r in b.relations if r.key not in a_relations)
    removed_rel = tuple(r.key for r in a.relations if r.key not in b_relations)

    ep_changes: dict[str, Optional[EntityParameters]] = {}
    for key in {*a.entity_params, *b.entity_params}:
        if a.entity_params.get(key) != b.entity_params.get(key):
            ep_changes[key] = b.entity_params.get(key)
    ip_changes: dict[RelationKey, Optional[InteractionParameters]] = {}
    for key in {*a.interaction_params, *b.interaction_params}:
        if a.interaction_params.get(key) != b.interaction_params.get(key):
            ip_changes[key] = b.interaction_params.get(key)

    return ModelDelta(
        added_entities=added,
        removed_entities=removed,
        changed_entities=changed,
        added_relations=added_rel,
        removed_relations=removed_rel,
        entity_param_changes=ep_changes,
        interaction_param_changes=ip_changes,
        name_change=b.name if b.name != a.name else None,
        description_change=b.description if b.description != a.description else None,
    )


def apply_delta(delta: ModelDelta, model: ConceptualModel) -> ConceptualModel:
    """Replay ``delta`` on ``model``; id and lineage are carried over."""
    removed_ids = set(delta.removed_entities)
    changed = {e.id: e for e in delta.changed_entities}
    entities = tuple(
        changed.get(e.id, e) for e in model.entities if e.id not in removed_ids
    ) + delta.added_entities

    removed_rel = set(delta.removed_relations)
    relations = tuple(
        r for r in model.relations if r.key not in removed_rel
    ) + delta.added_relations

    entity_params = dict(model.entity_params)
    for key, value in delta.entity_param_changes.items():
        if value is None:
            entity_params.pop(key, None)
        else:
            entity_params[key] = value
    interaction_params = dict(model.interaction_params)
    for key, value in delta.interaction_param_changes.items():
        if value is None:
            interaction_params.pop(key, None)
        else:
            interaction_params[key] = value

    return replace(
        model,
        name=delta.name_change if delta.name_change is not None else model.name,
        description=(
            delta.description_change
            if delta.description_change is not None
            else model.description
        ),
        entities=entities,
        relations=relations,
        entity_params=entity_params,
        interaction_params=interaction_params,
    )


def structural_equal(a: ConceptualModel, b: ConceptualModel) -> bool:
    """Equality ignoring id, lineage, and entity/relation ordering."""
    return (
        a.name == b.name
        and a.description == b.description
        and {e.id: e for e in a.entities} == {e.id: e for e in b.entities}
        and {r.key for r in a.relations} == {r.key for r in b.relations}
        and a.entity_params == b.entity_params
        and a.interaction_params == b.interaction_params
    )


# ---------------------------------------------------------------------------
# JSON document schema (shared by library, service, and UI)

_ENTITY_KEYS = {"id", "name", "kind", "species_ref"}
_RELATION_KEYS = {"source", "target", "kind"}
_ENTITY_PARAM_KEYS = {"initial_population", "birth_rate", "death_rate", "carrying_capacity"}
_INTERACTION_KEYS = {"source", "target", "kind", "rate", "efficiency"}
_MODEL_KEYS = {
    "id",
    "name",
    "description",
    "entities",
    "relations",
    "entity_params",
    "interaction_params",
    "lineage",
}


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ModelFormatError(f"unknown field(s) {sorted(unknown)} in {where}")


def _number(value, where: str, required: bool = True) -> Optional[float]:
    if value is None:
        if required:
            raise ModelFormatError(f"{where} must be a number")
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFormatError(f"{where} must be a number, got {value!r}")
    return float(value)


def model_to_dict(model: ConceptualModel) -> dict:
    """Canonical JSON document for ``model``.

    Key order follows the schema; optional fields are omitted when absent;
    parameter maps are emitted in sorted key order so that serialization is
    a deterministic fixed point (save/load/save is byte-stable).
    """
    doc: dict = {
        "id": model.id,
        "name": model.name,
        "description": model.description,
        "entities": [],
        "relations": [],
        "entity_params": {},
        "interaction_params": [],
    }
    for e in model.entities:
        entry: dict = {"id": e.id, "name": e.name, "kind": e.kind.value}
        if e.species_ref is not None:
            entry["species_ref"] = e.species_ref
        doc["entities"].append(entry)
    for r in model.relations:
        doc["relations"].append({"source": r.source, "target": r.target, "kind": r.kind.value})
    for entity_id in sorted(model.entity_params):
        p = model.entity_params[entity_id]
        entry = {}
        for key in ("initial_population", "birth_rate", "death_rate", "carrying_capacity"):
            value = getattr(p, key)
            if value is not None:
                entry[key] = value
        doc["entity_params"][entity_id] = entry
    for key in sorted(model.interaction_params):
        p = model.interaction_params[key]
        doc["interaction_params"].append(
            {
                "source": key[0],
                "target": key[1],
                "kind": key[2],
                "rate": p.rate,
                "efficiency": p.efficiency,
            }
        )
    if model.lineage is not None:
        doc["lineage"] = {"parent_id": model.lineage}
    return doc


def model_from_dict(doc: dict) -> ConceptualModel:
    """Parse a model document, rejecting unknown fields."""
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    _reject_unknown(doc, _MODEL_KEYS, "model")
    for required in ("id", "name"):
        if required not in doc or not isinstance(doc[required], str):
            raise ModelFormatError(f"model requires a string {required!r} field")

    entities = []
    for i, entry in enumerate(doc.get("entities", [])):
        _reject_unknown(entry, _ENTITY_KEYS, f"entities[{i}]")
        try:
            kind = EntityKind(entry["kind"])
        except (KeyError, ValueError):
            raise ModelFormatError(
                f"entities[{i}] requires kind 'biotic' or 'abiotic'"
            ) from None
        entities.append(
            Entity(
                id=str(entry["id"]),
                name=str(entry.get("name", entry["id"])),
                kind=kind,
                species_ref=entry.get("species_ref"),
            )
        )

    relations = []
    for i, entry in enumerate(doc.get("relations", [])):
        _reject_unknown(entry, _RELATION_KEYS, f"relations[{i}]")
        try:
            kind = RelationKind(entry["kind"])
        except (KeyError, ValueError):
            raise ModelFormatError(
                f"relations[{i}] requires kind one of "
                f"{[k.value for k in RelationKind]}"
            ) from None
        relations.append(Relation(source=str(entry["source"]), target=str(entry["target"]), kind=kind))

    entity_params = {}
    ep_doc = doc.get("entity_params", {})
    if not isinstance(ep_doc, dict):
        raise ModelFormatError("entity_params must be an object keyed by entity id")
    for entity_id, entry in ep_doc.items():
        _reject_unknown(entry, _ENTITY_PARAM_KEYS, f"entity_params[{entity_id!r}]")
        entity_params[entity_id] = EntityParameters(
            initial_population=_number(
                entry.get("initial_population"), "initial_population", required=False
            ),
            birth_rate=_number(entry.get("birth_rate"), "birth_rate", required=False),
            death_rate=_number(entry.get("death_rate"), "death_rate", required=False),
            carrying_capacity=_number(
                entry.get("carrying_capacity"), "carrying_capacity", required=False
            ),
        )

    interaction_params = {}
    for i, entry in enumerate(doc.get("interaction_params", [])):
        _reject_unknown(entry, _INTERACTION_KEYS, f"interaction_params[{i}]")
        try:
            key = (str(entry["source"]), str(entry["target"]), RelationKind(entry["kind"]).value)
        except (KeyError, ValueError):
            raise ModelFormatError(
                f"interaction_params[{i}] requires source, target, and a valid kind"
            ) from None
        interaction_params[key] = InteractionParameters(
            rate=_number(entry.get("rate", 0.0), "rate") or 0.0,
            efficiency=_number(entry.get("efficiency", 0.0), "efficiency") or 0.0,
        )

    lineage = None
    if "lineage" in doc and doc["lineage"] is not None:
        _reject_unknown(doc["lineage"], {"parent_id"}, "lineage")
        lineage = doc["lineage"].get("parent_id")

    return ConceptualModel(
        id=doc["id"],
        name=doc["name"],
        description=str(doc.get("description", "")),
        entities=tuple(entities),
        relations=tuple(relations),
        entity_params=entity_params,
        interaction_params=interaction_params,
        lineage=lineage,
    )


def model_to_json(model: ConceptualModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def model_from_json(text: str) -> ConceptualModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from exc
    return model_from_dict(doc)
