"""Shared builders for test fixtures.

Models are built through the JSON parser so every fixture also exercises
the document schema.
"""

from __future__ import annotations

import random

from vera.calibration import ObservationSeries
from vera.compiler import compile_model
from vera.engine import RunConfig, run_ode
from vera.model import ConceptualModel, model_from_dict


def biotic(entity_id, name=None, species_ref=None):
    entry = {"id": entity_id, "name": name or entity_id, "kind": "biotic"}
    if species_ref is not None:
        entry["species_ref"] = species_ref
    return entry


def abiotic(entity_id, name=None):
    return {"id": entity_id, "name": name or entity_id, "kind": "abiotic"}


def rel(source, target, kind):
    return {"source": source, "target": target, "kind": kind}


def eparams(n0=None, birth=None, death=None, k=None):
    entry = {}
    if n0 is not None:
        entry["initial_population"] = n0
    if birth is not None:
        entry["birth_rate"] = birth
    if death is not None:
        entry["death_rate"] = death
    if k is not None:
        entry["carrying_capacity"] = k
    return entry


def iparams(source, target, kind, rate, efficiency=0.0):
    return {"source": source, "target": target, "kind": kind, "rate": rate, "efficiency": efficiency}


def make_model(
    entities=(),
    relations=(),
    entity_params=None,
    interaction_params=(),
    model_id="m",
    name=None,
    description="",
    lineage=None,
) -> ConceptualModel:
    doc = {
        "id": model_id,
        "name": name or model_id,
        "description": description,
        "entities": list(entities),
        "relations": list(relations),
        "entity_params": dict(entity_params or {}),
        "interaction_params": list(interaction_params),
    }
    if lineage is not None:
        doc["lineage"] = {"parent_id": lineage}
    return model_from_dict(doc)


# -- archetype fixtures -------------------------------------------------------


def exponential_model(n0=100.0, birth=0.1, death=0.0, model_id="exp"):
    return make_model(
        entities=[biotic("n")],
        entity_params={"n": eparams(n0=n0, birth=birth, death=death)},
        model_id=model_id,
        name="Exponential growth",
    )


def logistic_model(n0=10.0, birth=0.5, death=0.0, k=1000.0, model_id="logi"):
    return make_model(
        entities=[biotic("n")],
        entity_params={"n": eparams(n0=n0, birth=birth, death=death, k=k)},
        model_id=model_id,
        name="Logistic growth",
    )


def predator_prey_model(
    prey_n0=600.0,
    pred_n0=500.0,
    prey_birth=1.0,
    pred_death=0.5,
    encounter=0.002,
    efficiency=0.5,
    model_id="lv",
):
    return make_model(
        entities=[biotic("prey"), biotic("pred")],
        relations=[rel("pred", "prey", "consumes")],
        entity_params={
            "prey": eparams(n0=prey_n0, birth=prey_birth, death=0.0),
            "pred": eparams(n0=pred_n0, birth=0.0, death=pred_death),
        },
        interaction_params=[iparams("pred", "prey", "consumes", encounter, efficiency)],
        model_id=model_id,
        name="Predator and prey",
    )


def competition_model(
    k1=1000.0,
    k2=600.0,
    n0=500.0,
    birth=0.5,
    pressure=0.00075,
    model_id="comp",
):
    return make_model(
        entities=[biotic("sp1"), biotic("sp2")],
        relations=[rel("sp1", "sp2", "competes_with")],
        entity_params={
            "sp1": eparams(n0=n0, birth=birth, death=0.0, k=k1),
            "sp2": eparams(n0=n0, birth=birth, death=0.0, k=k2),
        },
        interaction_params=[iparams("sp1", "sp2", "competes_with", pressure)],
        model_id=model_id,
        name="Two-species competition",
    )


def kudzu_model(model_id="kudzu-invasion"):
    """Invasive vine, its biological control, and the native tree it crowds."""
    return make_model(
        entities=[
            biotic("kudzu", "Kudzu"),
            biotic("kudzu_bug", "Kudzu bug"),
            biotic("hornbeam", "American hornbeam"),
        ],
        relations=[
            rel("kudzu", "hornbeam", "inhibits"),
            rel("kudzu_bug", "kudzu", "consumes"),
        ],
        entity_params={
            "kudzu": eparams(n0=1000.0, birth=0.8, death=0.1, k=2000.0),
            "kudzu_bug": eparams(n0=200.0, birth=0.0, death=0.3),
            "hornbeam": eparams(n0=300.0, birth=0.4, death=0.1, k=500.0),
        },
        interaction_params=[
            iparams("kudzu", "hornbeam", "inhibits", 0.0002),
            iparams("kudzu_bug", "kudzu", "consumes", 0.002, 0.3),
        ],
        model_id=model_id,
        name="Kudzu invasion",
    )


# -- randomized models --------------------------------------------------------

_KINDS = ["consumes", "inhibits", "enhances", "competes_with", "consumes_resource"]


def random_model(rng: random.Random, model_id="rand") -> ConceptualModel:
    """A structurally valid random model for property tests."""
    n_biotic = rng.randint(1, 5)
    n_abiotic = rng.randint(0, 2)
    entities = [biotic(f"b{i}") for i in range(n_biotic)]
    entities += [abiotic(f"a{i}") for i in range(n_abiotic)]
    biotic_ids = [f"b{i}" for i in range(n_biotic)]
    abiotic_ids = [f"a{i}" for i in range(n_abiotic)]

    relations = []
    seen = set()
    for _ in range(rng.randint(0, 6)):
        kind = rng.choice(_KINDS)
        if kind == "consumes_resource":
            if not abiotic_ids:
                continue
            source, target = rng.choice(biotic_ids), rng.choice(abiotic_ids)
        else:
            if n_biotic < 2:
                continue
            source, target = rng.sample(biotic_ids, 2)
        if (source, target, kind) in seen:
            continue
        seen.add((source, target, kind))
        relations.append(rel(source, target, kind))

    entity_params = {}
    for entity_id in biotic_ids:
        if rng.random() < 0.9:
            entity_params[entity_id] = eparams(
                n0=float(rng.randint(0, 2000)),
                birth=round(rng.uniform(0, 2), 3),
                death=round(rng.uniform(0, 1), 3),
                k=float(rng.randint(100, 5000)) if rng.random() < 0.5 else None,
            )
    for entity_id in abiotic_ids:
        if rng.random() < 0.5:
            entity_params[entity_id] = eparams(k=float(rng.randint(100, 5000)))

    interaction_params = []
    for r in relations:
        if rng.random() < 0.8:
            interaction_params.append(
                iparams(
                    r["source"],
                    r["target"],
                    r["kind"],
                    round(rng.uniform(0, 0.01), 6),
                    round(rng.uniform(0, 1), 3),
                )
            )

    return make_model(
        entities=entities,
        relations=relations,
        entity_params=entity_params,
        interaction_params=interaction_params,
        model_id=model_id,
        name=f"random model {rng.randint(0, 10**6)}",
        description=rng.choice(["", "draft", "revised idea"]),
    )


def synth_observations(model, duration, dt, sample_every) -> ObservationSeries:
    """Ground truth generated by the ODE engine itself (the data generator
    is then the oracle for recovery tests)."""
    ts = run_ode(compile_model(model), RunConfig(duration=duration, dt=dt, record_every=sample_every))
    return ObservationSeries(
        times=tuple(ts.times[1:]),
        series={k: tuple(v[1:]) for k, v in ts.series.items()},
        provenance="synthetic",
    )
