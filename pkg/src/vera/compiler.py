"""Model-to-simulation compiler.

Bridges the conceptual-model language and the simulation engine: a model
is first classified into one of four canonical ecological archetypes (or
the generalized fallback) by pure graph-shape rules, then lowered into a
stochastic reaction system the engine can execute either as an
agent-based (tau-leaping) run or as its mean-field ODE.

Lowering rules, per biotic entity and relation:

* every biotic entity gets a birth reaction (logistic when a carrying
  capacity applies, otherwise linear) and a linear death reaction;
* ``consumes`` (source = consumer) adds a mass-action predation loss on
  the prey plus a conversion birth on the consumer scaled by efficiency;
* ``inhibits`` / ``enhances`` add a mass-action extra death / extra birth
  on the target;
* ``competes_with`` adds symmetric mass-action extra deaths on both ends;
* ``consumes_resource`` adds no reaction: it turns the consumer's birth
  logistic, with the capacity taken from the resource. Multiple consumed
  resources contribute the sum of their capacities, replacing the
  consumer's own ceiling.

A relation without interaction parameters compiles inert (rate 0) with a
warning rather than guessing a magnitude.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .model import (
    ConceptualModel,
    EntityKind,
    EntityParameters,
    RelationKind,
    Violation,
    validate_model,
)
from .traits import TraitStore, derive_params

__all__ = [
    "Archetype",
    "Reaction",
    "SimulationSpec",
    "SpawnResult",
    "InvalidModelError",
    "CompileError",
    "CompileWarning",
    "classify_archetype",
    "compile_model",
    "spawn_defaults",
    "spec_to_dict",
]


class Archetype(str, Enum):
    EXPONENTIAL_GROWTH = "exponential_growth"
    LOGISTIC_GROWTH = "logistic_growth"
    PREDATOR_PREY = "predator_prey"
    COMPETITIVE_EXCLUSION = "competitive_exclusion"
    GENERALIZED = "generalized"


class PropensityKind(str, Enum):
    LINEAR = "linear"  # rate * N[entity]
    LOGISTIC_BIRTH = "logistic_birth"  # rate * N[entity] * max(0, 1 - N[entity]/K)
    MASS_ACTION = "mass_action"  # rate * N[entity] * N[partner]


@dataclass(frozen=True)
class Reaction:
    """One population-changing event channel.

    The propensity is fully described by (kind, rate, entity, partner,
    carrying_capacity); ``deltas`` maps entity ids to the integer
    population change applied each time the reaction fires.
    """

    label: str
    kind: PropensityKind
    rate: float
    entity: str
    deltas: dict[str, int]
    partner: Optional[str] = None
    carrying_capacity: Optional[float] = None


@dataclass(frozen=True)
class SimulationSpec:
    """Executable form of a conceptual model."""

    populations: tuple[tuple[str, float], ...]
    reactions: tuple[Reaction, ...]
    archetype: Archetype


@dataclass(frozen=True)
class SpawnResult:
    """Model with trait-derived defaults filled in, plus the ids of
    entities whose species_ref had no trait record."""

    model: ConceptualModel
    warnings: tuple[str, ...]


class InvalidModelError(ValueError):
    """Model failed validation; carries the full report."""

    def __init__(self, report: list[Violation]):
        self.report = report
        lines = "; ".join(f"{v.code}({v.subject})" for v in report)
        super().__init__(f"model is invalid: {lines}")


class CompileError(ValueError):
    """Model is valid but not yet runnable (parameters missing)."""


class CompileWarning(UserWarning):
    """Non-fatal compilation default was applied."""


def _capacity(model: ConceptualModel, entity_id: str) -> Optional[float]:
    params = model.entity_params.get(entity_id)
    return params.carrying_capacity if params is not None else None


def classify_archetype(model: ConceptualModel) -> Archetype:
    """Classify ``model`` by graph shape alone.

    The four named archetypes are claimed only on an exact structural
    match; everything else, including any composite model, falls to
    ``generalized``. Abiotic entities that no relation touches are inert
    and do not affect classification.
    """
    report = validate_model(model)
    if report:
        raise InvalidModelError(report)

    biotic = model.biotic_entities()
    relations = model.relations

    if len(biotic) == 1:
        b = biotic[0]
        own_k = _capacity(model, b.id)
        if not relations and own_k is None:
            return Archetype.EXPONENTIAL_GROWTH
        grazing = all(
            r.kind is RelationKind.CONSUMES_RESOURCE and r.source == b.id for r in relations
        )
        if grazing and (own_k is not None or relations):
            return Archetype.LOGISTIC_GROWTH
        return Archetype.GENERALIZED

    if len(biotic) == 2:
        pair = {biotic[0].id, biotic[1].id}
        if len(relations) == 1:
            r = relations[0]
            if {r.source, r.target} == pair:
                if r.kind is RelationKind.CONSUMES:
                    return Archetype.PREDATOR_PREY
                if r.kind is RelationKind.COMPETES_WITH:
                    return Archetype.COMPETITIVE_EXCLUSION
        if (
            len(relations) == 2
            and all(r.kind is RelationKind.CONSUMES_RESOURCE for r in relations)
            and {relations[0].source, relations[1].source} == pair
            and relations[0].target == relations[1].target
        ):
            return Archetype.COMPETITIVE_EXCLUSION

    return Archetype.GENERALIZED


def _interaction(model: ConceptualModel, key: tuple[str, str, str]) -> tuple[float, float]:
    """Rate and efficiency for a relation, defaulting inert with a warning."""
    params = model.interaction_params.get(key)
    if params is None:
        _warnings.warn(
            f"relation {key[0]}->{key[1]} ({key[2]}) has no interaction parameters; "
            "compiled with rate 0",
            CompileWarning,
            stacklevel=3,
        )
        return 0.0, 0.0
    return params.rate, params.efficiency


def compile_model(model: ConceptualModel) -> SimulationSpec:
    """Lower a valid, fully parameterized model to a reaction system.

    Raises :class:`InvalidModelError` on validation failures and
    :class:`CompileError` when a biotic entity lacks initial population,
    birth rate, or death rate.
    """
    report = validate_model(model)
    if report:
        raise InvalidModelError(report)

    biotic = model.biotic_entities()
    missing = []
    for e in biotic:
        p = model.entity_params.get(e.id)
        if (
            p is None
            or p.initial_population is None
            or p.birth_rate is None
            or p.death_rate is None
        ):
            missing.append(e.id)
    if missing:
        raise CompileError(
            f"biotic entities missing simulation parameters: {', '.join(missing)}"
        )

    # Effective carrying capacity: consumed resources replace the entity's
    # own ceiling with the sum of theirs.
    capacity: dict[str, Optional[float]] = {
        e.id: model.entity_params[e.id].carrying_capacity for e in biotic
    }
    from_resources: dict[str, float] = {}
    for r in model.relations:
        if r.kind is not RelationKind.CONSUMES_RESOURCE:
            continue
        resource_k = _capacity(model, r.target)
        if resource_k is None:
            _warnings.warn(
                f"resource {r.target!r} has no carrying_capacity; "
                f"growth of {r.source!r} is not capped by it",
                CompileWarning,
                stacklevel=2,
            )
            continue
        from_resources[r.source] = from_resources.get(r.source, 0.0) + resource_k
    capacity.update(from_resources)

    reactions: list[Reaction] = []
    for e in biotic:
        p = model.entity_params[e.id]
        k = capacity[e.id]
        if k is not None:
            reactions.append(
                Reaction(
                    label=f"birth:{e.id}",
                    kind=PropensityKind.LOGISTIC_BIRTH,
                    rate=p.birth_rate,
                    entity=e.id,
                    deltas={e.id: 1},
                    carrying_capacity=k,
                )
            )
        else:
            reactions.append(
                Reaction(
                    label=f"birth:{e.id}",
                    kind=PropensityKind.LINEAR,
                    rate=p.birth_rate,
                    entity=e.id,
                    deltas={e.id: 1},
                )
            )
        reactions.append(
            Reaction(
                label=f"death:{e.id}",
                kind=PropensityKind.LINEAR,
                rate=p.death_rate,
                entity=e.id,
                deltas={e.id: -1},
            )
        )

    for r in model.relations:
        if r.kind is RelationKind.CONSUMES_RESOURCE:
            continue  # handled via carrying capacity above
        rate, efficiency = _interaction(model, r.key)
        if r.kind is RelationKind.CONSUMES:
            predator, prey = r.source, r.target
            reactions.append(
                Reaction(
                    label=f"predation:{predator}->{prey}",
                    kind=PropensityKind.MASS_ACTION,
                    rate=rate,
                    entity=prey,
                    partner=predator,
                    deltas={prey: -1},
                )
            )
            reactions.append(
                Reaction(
                    label=f"conversion:{prey}->{predator}",
                    kind=PropensityKind.MASS_ACTION,
                    rate=efficiency * rate,
                    entity=prey,
                    partner=predator,
                    deltas={predator: 1},
                )
            )
        elif r.kind is RelationKind.INHIBITS:
            reactions.append(
                Reaction(
                    label=f"inhibition:{r.source}->{r.target}",
                    kind=PropensityKind.MASS_ACTION,
                    rate=rate,
                    entity=r.target,
                    partner=r.source,
                    deltas={r.target: -1},
                )
            )
        elif r.kind is RelationKind.ENHANCES:
            reactions.append(
                Reaction(
                    label=f"enhancement:{r.source}->{r.target}",
                    kind=PropensityKind.MASS_ACTION,
                    rate=rate,
                    entity=r.target,
                    partner=r.source,
                    deltas={r.target: 1},
                )
            )
        elif r.kind is RelationKind.COMPETES_WITH:
            for victim, other in ((r.source, r.target), (r.target, r.source)):
                reactions.append(
                    Reaction(
                        label=f"competition:{other}->{victim}",
                        kind=PropensityKind.MASS_ACTION,
                        rate=rate,
                        entity=victim,
                        partner=other,
                        deltas={victim: -1},
                    )
                )

    populations = tuple(
        (e.id, float(model.entity_params[e.id].initial_population)) for e in biotic
    )
    return SimulationSpec(
        populations=populations,
        reactions=tuple(reactions),
        archetype=classify_archetype(model),
    )


def spawn_defaults(model: ConceptualModel, store: TraitStore) -> SpawnResult:
    """Fill missing birth/death rates from the trait store.

    Only biotic entities carrying a ``species_ref`` are touched, and only
    their missing rate fields: values the user already set are never
    overwritten. Unknown species refs leave the entity unfilled and add
    its id to the warning set.
    """
    unfilled: list[str] = []
    params = dict(model.entity_params)
    for e in model.biotic_entities():
        if e.species_ref is None:
            continue
        current = params.get(e.id, EntityParameters())
        if current.birth_rate is not None and current.death_rate is not None:
            continue
        record = store.get(e.species_ref)
        if record is None:
            unfilled.append(e.id)
            continue
        derived = derive_params(record)
        params[e.id] = replace(
            current,
            birth_rate=current.birth_rate if current.birth_rate is not None else derived.birth_rate,
            death_rate=current.death_rate if current.death_rate is not None else derived.death_rate,
        )
    return SpawnResult(model=replace(model, entity_params=params), warnings=tuple(unfilled))


def spec_to_dict(spec: SimulationSpec) -> dict:
    """JSON form of a compiled spec: archetype, populations, reaction inventory."""
    reactions = []
    for r in spec.reactions:
        entry: dict = {
            "label": r.label,
            "kind": r.kind.value,
            "rate": r.rate,
            "entity": r.entity,
        }
        if r.partner is not None:
            entry["partner"] = r.partner
        if r.carrying_capacity is not None:
            entry["carrying_capacity"] = r.carrying_capacity
        entry["deltas"] = dict(sorted(r.deltas.items()))
        reactions.append(entry)
    return {
        "archetype": spec.archetype.value,
        "populations": [
            {"entity": entity_id, "initial_population": n} for entity_id, n in spec.populations
        ],
        "reactions": reactions,
    }
