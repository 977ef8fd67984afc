"""Simulation engines: stochastic tau-leaping and mean-field RK4.

A compiled :class:`~vera.compiler.SimulationSpec` runs two ways:

* :func:`run_stochastic` executes the reaction system as an agent-based
  simulation: at each fixed step of length ``dt``, each reaction fires a
  Poisson(propensity * dt) number of times (tau-leaping) and its deltas
  are applied. Reaction counts are first applied jointly; if that would
  drive any population negative, the step is redone reaction-by-reaction
  in spec order with the overshooting reaction's count truncated so the
  state stays non-negative. Runs are bit-reproducible for a given seed
  (numpy PCG64, one generator per run).

* :func:`run_ode` integrates the mean-field limit
  ``dN/dt = sum_r delta_r * propensity_r(N)`` with classical fixed-step
  fourth-order Runge-Kutta. It serves as the deterministic formative
  curve and as the oracle the stochastic engine is tested against.

* :func:`ensemble_mean` averages many stochastic runs (seeds ``seed``,
  ``seed+1``, ...) pointwise; with enough runs it converges to the ODE
  trajectory, which is exactly how the engines cross-check each other.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .compiler import PropensityKind, SimulationSpec

__all__ = [
    "RunConfig",
    "RunMeta",
    "TimeSeries",
    "EngineError",
    "EngineTimeout",
    "run_stochastic",
    "run_ode",
    "ensemble_mean",
    "timeseries_to_dict",
    "timeseries_from_dict",
]

# numpy's Poisson sampler rejects means beyond ~9.2e18; fail with a
# diagnosable engine error well before that.
_MAX_EVENT_MEAN = 2.0**62


class EngineError(RuntimeError):
    """Simulation aborted; ``step`` is the step index at failure."""

    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"step {step}: {message}")


class EngineTimeout(EngineError):
    """Run exceeded its wall-clock budget."""


@dataclass(frozen=True)
class RunConfig:
    """How to run a spec: horizon, step size, seed, and recording stride."""

    duration: float
    dt: float
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError("duration must be positive and finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if self.dt > self.duration:
            raise ValueError("dt must not exceed duration")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def steps(self) -> int:
        # Enough whole steps to cover the full duration.
        return max(1, math.ceil(self.duration / self.dt - 1e-9))


@dataclass(frozen=True)
class RunMeta:
    engine: str  # "stochastic" | "ode"
    dt: float
    seed: Optional[int] = None


@dataclass
class TimeSeries:
    """Per-entity population trajectories on a shared time grid.

    Stochastic runs carry integer counts; ODE runs (and ensemble means,
    which average integer runs) carry reals.
    """

    times: list[float]
    series: dict[str, list]
    meta: RunMeta

    def values(self, entity_id: str) -> np.ndarray:
        return np.asarray(self.series[entity_id], dtype=float)


# ---------------------------------------------------------------------------
# compiled numeric form


class _System:
    """SimulationSpec lowered to flat numpy arrays for fast stepping."""

    def __init__(self, spec: SimulationSpec):
        self.entity_ids = [entity_id for entity_id, _ in spec.populations]
        index = {entity_id: i for i, entity_id in enumerate(self.entity_ids)}
        self.initial = np.array([n for _, n in spec.populations], dtype=float)

        reactions = spec.reactions
        self.rate = np.array([r.rate for r in reactions], dtype=float)
        self.primary = np.array(
            [index[r.entity] for r in reactions], dtype=np.intp
        ).reshape(-1)

        log_rows = [i for i, r in enumerate(reactions) if r.kind is PropensityKind.LOGISTIC_BIRTH]
        self.log_rows = np.array(log_rows, dtype=np.intp)
        self.log_primary = self.primary[self.log_rows]
        self.log_capacity = np.array(
            [reactions[i].carrying_capacity for i in log_rows], dtype=float
        )

        mass_rows = [i for i, r in enumerate(reactions) if r.kind is PropensityKind.MASS_ACTION]
        self.mass_rows = np.array(mass_rows, dtype=np.intp)
        self.mass_partner = np.array(
            [index[reactions[i].partner] for i in mass_rows], dtype=np.intp
        )

        self.deltas = np.zeros((len(reactions), len(self.entity_ids)), dtype=np.int64)
        for row, r in enumerate(reactions):
            for entity_id, change in r.deltas.items():
                self.deltas[row, index[entity_id]] = change
        self.deltas_t = self.deltas.T.copy()

    def propensities(self, state: np.ndarray) -> np.ndarray:
        a = self.rate * state[self.primary]
        if self.log_rows.size:
            a[self.log_rows] *= np.maximum(
                0.0, 1.0 - state[self.log_primary] / self.log_capacity
            )
        if self.mass_rows.size:
            a[self.mass_rows] *= state[self.mass_partner]
        return a


def _record_indices(steps: int, stride: int) -> np.ndarray:
    idx = np.arange(0, steps + 1, stride)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    return idx


class _Deadline:
    def __init__(self, budget: Optional[float]):
        self.expiry = None if budget is None else time.monotonic() + budget

    def check(self, step: int) -> None:
        if self.expiry is not None and step % 512 == 0 and time.monotonic() > self.expiry:
            raise EngineTimeout(step, "wall-clock budget exhausted")


def _truncated_apply(state: np.ndarray, counts: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Apply reactions one at a time, cutting counts that would overshoot 0."""
    for row in range(len(counts)):
        k = counts[row]
        if k == 0:
            continue
        change = deltas[row]
        trial = state + change * k
        negative = trial < 0
        if negative.any():
            k = min(k, int(np.min(state[negative] // -change[negative])))
        state = state + change * k
    return state


def _run_stochastic_grid(
    spec: SimulationSpec, config: RunConfig, seed: int, deadline: Optional[float]
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    system = _System(spec)
    steps = config.steps
    rec = _record_indices(steps, int(config.record_every))
    out = np.zeros((len(rec), len(system.entity_ids)), dtype=np.int64)

    state = np.rint(system.initial).astype(np.int64)
    rng = np.random.default_rng(seed)
    clock = _Deadline(deadline)

    out[0] = state
    cursor = 1
    for step in range(1, steps + 1):
        clock.check(step)
        a = system.propensities(state.astype(float))
        mean_events = a * config.dt
        if not np.isfinite(mean_events).all() or mean_events.max(initial=0.0) > _MAX_EVENT_MEAN:
            raise EngineError(step, "propensity overflow (population diverged?)")
        counts = rng.poisson(mean_events)
        candidate = state + system.deltas_t @ counts
        if (candidate >= 0).all():
            state = candidate
        else:
            state = _truncated_apply(state, counts, system.deltas)
        if cursor < len(rec) and rec[cursor] == step:
            out[cursor] = state
            cursor += 1

    times = rec * config.dt
    return times, out, system.entity_ids


def run_stochastic(
    spec: SimulationSpec, config: RunConfig, deadline: Optional[float] = None
) -> TimeSeries:
    """Tau-leaping agent-based run; bit-identical for identical inputs."""
    times, grid, entity_ids = _run_stochastic_grid(spec, config, config.seed, deadline)
    return TimeSeries(
        times=[float(t) for t in times],
        series={
            entity_id: [int(v) for v in grid[:, i]] for i, entity_id in enumerate(entity_ids)
        },
        meta=RunMeta(engine="stochastic", dt=config.dt, seed=config.seed),
    )


def run_ode(
    spec: SimulationSpec, config: RunConfig, deadline: Optional[float] = None
) -> TimeSeries:
    """Mean-field trajectory via classical fixed-step RK4."""
    system = _System(spec)
    steps = config.steps
    rec = _record_indices(steps, int(config.record_every))
    out = np.zeros((len(rec), len(system.entity_ids)), dtype=float)

    dt = config.dt
    state = system.initial.copy()
    clock = _Deadline(deadline)

    def rhs(y: np.ndarray) -> np.ndarray:
        return system.deltas_t @ system.propensities(y)

    out[0] = state
    cursor = 1
    for step in range(1, steps + 1):
        clock.check(step)
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # mass-action overshoot guard at the extinction boundary
        np.maximum(state, 0.0, out=state)
        if not np.isfinite(state).all():
            raise EngineError(step, "non-finite state")
        if cursor < len(rec) and rec[cursor] == step:
            out[cursor] = state
            cursor += 1

    times = rec * config.dt
    return TimeSeries(
        times=[float(t) for t in times],
        series={
            entity_id: [float(v) for v in out[:, i]]
            for i, entity_id in enumerate(system.entity_ids)
        },
        meta=RunMeta(engine="ode", dt=config.dt, seed=None),
    )


def ensemble_mean(
    spec: SimulationSpec,
    config: RunConfig,
    n_runs: int,
    deadline: Optional[float] = None,
) -> TimeSeries:
    """Pointwise mean of ``n_runs`` stochastic runs seeded ``seed..seed+n-1``.

    Members are independent (one generator each), so execution order can
    never change the result; the mean is accumulated in seed order.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    total: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None
    entity_ids: list[str] = []
    for i in range(n_runs):
        times, grid, entity_ids = _run_stochastic_grid(
            spec, config, config.seed + i, deadline
        )
        if total is None:
            total = grid.astype(float)
        else:
            total += grid
    assert total is not None and times is not None
    mean = total / n_runs
    return TimeSeries(
        times=[float(t) for t in times],
        series={
            entity_id: [float(v) for v in mean[:, i]] for i, entity_id in enumerate(entity_ids)
        },
        meta=RunMeta(engine="stochastic", dt=config.dt, seed=config.seed),
    )


# ---------------------------------------------------------------------------
# wire format


def timeseries_to_dict(ts: TimeSeries) -> dict:
    return {
        "times": ts.times,
        "series": {entity_id: values for entity_id, values in ts.series.items()},
        "meta": {"seed": ts.meta.seed, "engine": ts.meta.engine, "dt": ts.meta.dt},
    }


def timeseries_from_dict(doc: dict) -> TimeSeries:
    meta = doc.get("meta", {})
    return TimeSeries(
        times=[float(t) for t in doc["times"]],
        series={str(k): list(v) for k, v in doc["series"].items()},
        meta=RunMeta(
            engine=str(meta.get("engine", "ode")),
            dt=float(meta.get("dt", 0.0)),
            seed=meta.get("seed"),
        ),
    )
