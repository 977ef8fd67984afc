"""Engine behavior: determinism, non-negativity, and oracle agreement.

Expected values for growth curves come from the closed forms
N0*exp(r*t) and K/(1+((K-N0)/N0)*exp(-r*t)), computed here, never from
the integrator under test.
"""

import math

import numpy as np
import pytest

from vera.compiler import compile_model
from vera.engine import (
    EngineError,
    EngineTimeout,
    RunConfig,
    ensemble_mean,
    run_ode,
    run_stochastic,
    timeseries_from_dict,
    timeseries_to_dict,
)

from helpers import (
    biotic,
    eparams,
    exponential_model,
    logistic_model,
    make_model,
    predator_prey_model,
)


class TestRunConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            RunConfig(duration=0, dt=0.1)
        with pytest.raises(ValueError):
            RunConfig(duration=1, dt=0)
        with pytest.raises(ValueError):
            RunConfig(duration=1, dt=2)
        with pytest.raises(ValueError):
            RunConfig(duration=1, dt=0.1, record_every=0)

    def test_steps_cover_the_duration(self):
        assert RunConfig(duration=10, dt=0.3).steps * 0.3 >= 10 - 1e-9
        assert RunConfig(duration=10, dt=0.01).steps == 1000


class TestStochastic:
    def test_zero_rates_hold_populations_constant(self):
        spec = compile_model(exponential_model(n0=250.0, birth=0.0, death=0.0))
        ts = run_stochastic(spec, RunConfig(duration=5, dt=0.1, seed=1))
        assert set(ts.series["n"]) == {250}

    def test_extinction_is_absorbing(self):
        spec = compile_model(exponential_model(n0=0.0, birth=0.9, death=0.1))
        ts = run_stochastic(spec, RunConfig(duration=5, dt=0.1, seed=2))
        assert set(ts.series["n"]) == {0}

    def test_mean_of_1000_seeds_matches_closed_form(self):
        # oracle: N0 * exp((b-d) t) = 1000 * e^1
        oracle = 1000.0 * math.exp((0.2 - 0.1) * 10.0)
        spec = compile_model(exponential_model(n0=1000.0, birth=0.2, death=0.1))
        mean = ensemble_mean(spec, RunConfig(duration=10, dt=0.02, seed=100, record_every=500), 1000)
        final = mean.series["n"][-1]
        assert abs(final - oracle) / oracle < 0.05

    def test_identical_inputs_are_bit_identical(self):
        spec = compile_model(predator_prey_model())
        config = RunConfig(duration=3, dt=0.05, seed=77)
        a = run_stochastic(spec, config)
        b = run_stochastic(spec, config)
        assert a == b
        assert timeseries_to_dict(a) == timeseries_to_dict(b)

    def test_different_seeds_differ(self):
        spec = compile_model(predator_prey_model())
        a = run_stochastic(spec, RunConfig(duration=3, dt=0.05, seed=1))
        b = run_stochastic(spec, RunConfig(duration=3, dt=0.05, seed=2))
        assert a.series != b.series

    def test_counts_are_nonnegative_integers(self):
        spec = compile_model(exponential_model(n0=30.0, birth=0.1, death=2.5))
        ts = run_stochastic(spec, RunConfig(duration=10, dt=0.5, seed=5))
        for v in ts.series["n"]:
            assert isinstance(v, int)
            assert v >= 0

    def test_overshoot_truncation_floors_at_zero(self):
        # death propensity*dt >> N so Poisson draws overshoot constantly
        spec = compile_model(exponential_model(n0=50.0, birth=0.0, death=10.0))
        ts = run_stochastic(spec, RunConfig(duration=4, dt=0.5, seed=9))
        assert min(ts.series["n"]) == 0
        assert all(v >= 0 for v in ts.series["n"])

    def test_propensity_overflow_aborts_with_step_index(self):
        spec = compile_model(exponential_model(n0=1e12, birth=1e7, death=0.0))
        with pytest.raises(EngineError) as exc:
            run_stochastic(spec, RunConfig(duration=2, dt=1.0, seed=0))
        assert exc.value.step >= 1

    def test_wall_clock_deadline(self):
        spec = compile_model(exponential_model(n0=100.0, birth=0.01, death=0.01))
        with pytest.raises(EngineTimeout):
            run_stochastic(spec, RunConfig(duration=5000, dt=0.1, seed=0), deadline=0.0)

    def test_record_stride_and_tail(self):
        spec = compile_model(exponential_model())
        ts = run_stochastic(spec, RunConfig(duration=1.0, dt=0.1, seed=0, record_every=3))
        # steps=10 -> recorded at 0,3,6,9 plus the final step
        assert ts.times == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
        assert len(ts.series["n"]) == len(ts.times)


class TestOde:
    def test_exponential_closed_form(self):
        oracle = 100.0 * math.exp(0.1 * 10.0)  # 271.8281828...
        spec = compile_model(exponential_model(n0=100.0, birth=0.1, death=0.0))
        ts = run_ode(spec, RunConfig(duration=10, dt=0.01))
        assert ts.series["n"][-1] == pytest.approx(oracle, abs=1e-3)

    def test_logistic_closed_form(self):
        K, N0, r, t = 1000.0, 10.0, 0.5, 10.0
        oracle = K / (1.0 + ((K - N0) / N0) * math.exp(-r * t))  # 599.8596...
        spec = compile_model(logistic_model(n0=N0, birth=r, death=0.0, k=K))
        ts = run_ode(spec, RunConfig(duration=t, dt=0.01))
        assert ts.series["n"][-1] == pytest.approx(oracle, abs=0.5)

    def test_logistic_equilibrium_stays_put(self):
        spec = compile_model(logistic_model(n0=1000.0, birth=0.5, death=0.0, k=1000.0))
        ts = run_ode(spec, RunConfig(duration=10, dt=0.05))
        assert all(v == pytest.approx(1000.0) for v in ts.series["n"])

    def test_identical_inputs_identical_output(self):
        spec = compile_model(predator_prey_model())
        config = RunConfig(duration=5, dt=0.01)
        assert run_ode(spec, config) == run_ode(spec, config)

    def test_values_stay_nonnegative(self):
        spec = compile_model(exponential_model(n0=5.0, birth=0.0, death=50.0))
        ts = run_ode(spec, RunConfig(duration=2, dt=0.1))
        assert all(v >= 0 for v in ts.series["n"])

    def test_net_rate_matters_not_the_split(self):
        # dN/dt = (b-d)N: same r from different (b, d) splits
        fast = compile_model(exponential_model(n0=100.0, birth=0.3, death=0.2))
        slow = compile_model(exponential_model(n0=100.0, birth=0.1, death=0.0))
        config = RunConfig(duration=5, dt=0.01)
        assert run_ode(fast, config).series["n"][-1] == pytest.approx(
            run_ode(slow, config).series["n"][-1]
        )


class TestEnsemble:
    def test_singleton_mean_equals_the_run_itself(self):
        spec = compile_model(exponential_model(n0=500.0, birth=0.2, death=0.1))
        config = RunConfig(duration=2, dt=0.1, seed=42)
        single = run_stochastic(spec, config)
        mean = ensemble_mean(spec, config, 1)
        assert mean.times == single.times
        assert mean.series["n"] == pytest.approx(single.series["n"])

    def test_zero_rate_mean_is_constant(self):
        spec = compile_model(exponential_model(n0=123.0, birth=0.0, death=0.0))
        mean = ensemble_mean(spec, RunConfig(duration=2, dt=0.1, seed=0), 5)
        assert set(mean.series["n"]) == {123.0}

    def test_members_use_consecutive_seeds(self):
        spec = compile_model(exponential_model(n0=400.0, birth=0.3, death=0.1))
        config = RunConfig(duration=2, dt=0.1, seed=10)
        mean = ensemble_mean(spec, config, 3)
        members = [
            run_stochastic(spec, RunConfig(duration=2, dt=0.1, seed=10 + i)) for i in range(3)
        ]
        expected = np.mean([m.series["n"] for m in members], axis=0)
        assert mean.series["n"] == pytest.approx(list(expected))

    def test_rejects_empty_ensemble(self):
        spec = compile_model(exponential_model())
        with pytest.raises(ValueError):
            ensemble_mean(spec, RunConfig(duration=1, dt=0.1), 0)


class TestLogisticMeanField:
    def test_ensemble_tracks_ode_at_half_capacity_start(self):
        spec = compile_model(logistic_model(n0=500.0, birth=0.5, death=0.0, k=1000.0))
        config = RunConfig(duration=8, dt=0.02, seed=7, record_every=50)
        ode = run_ode(spec, config)
        mean = ensemble_mean(spec, config, 300)
        o = np.array(ode.series["n"])
        s = np.array(mean.series["n"])
        mask = o >= 100
        assert np.max(np.abs(s[mask] - o[mask]) / o[mask]) < 0.05


class TestWireFormat:
    def test_round_trip(self):
        spec = compile_model(predator_prey_model())
        ts = run_stochastic(spec, RunConfig(duration=1, dt=0.1, seed=3))
        doc = timeseries_to_dict(ts)
        assert set(doc) == {"times", "series", "meta"}
        assert set(doc["meta"]) == {"seed", "engine", "dt"}
        back = timeseries_from_dict(doc)
        assert back.times == ts.times
        assert back.series == ts.series
        assert back.meta == ts.meta

    def test_ode_meta_has_no_seed(self):
        spec = compile_model(exponential_model())
        doc = timeseries_to_dict(run_ode(spec, RunConfig(duration=1, dt=0.1)))
        assert doc["meta"]["seed"] is None
        assert doc["meta"]["engine"] == "ode"
