"""Observation import, RMSE discrepancy, and parameter recommendation."""

import math
import random

import pytest

from vera.calibration import (
    CalibrationError,
    ObservationFormatError,
    ObservationSeries,
    ParameterPath,
    discrepancy,
    fit_result_to_dict,
    import_observations,
    observations_from_dict,
    observations_to_dict,
    recommend_parameters,
)
from vera.engine import RunMeta, TimeSeries
from vera.model import model_to_json

from helpers import exponential_model, predator_prey_model, synth_observations

OBS_HEADER = "time,entity_id,population\n"


def series(times, values, entity="n", engine="ode"):
    return TimeSeries(
        times=list(times),
        series={entity: list(values)},
        meta=RunMeta(engine=engine, dt=1.0, seed=None),
    )


class TestImport:
    def test_header_only_gives_empty_series(self):
        obs = import_observations(OBS_HEADER)
        assert obs.times == ()
        assert obs.series == {}

    def test_three_rows_one_entity(self):
        obs = import_observations(OBS_HEADER + "0,n,5\n1,n,7\n2,n,6\n")
        assert obs.times == (0.0, 1.0, 2.0)
        assert obs.series == {"n": (5.0, 7.0, 6.0)}

    def test_interleaved_entities_align(self):
        # grouped and sorted by hand: rabbit (100,110,130), fox (10,12,9)
        text = OBS_HEADER + (
            "0,fox,10\n"
            "0,rabbit,100\n"
            "1,rabbit,110\n"
            "1,fox,12\n"
            "2,fox,9\n"
            "2,rabbit,130\n"
        )
        obs = import_observations(text)
        assert obs.times == (0.0, 1.0, 2.0)
        assert obs.series["rabbit"] == (100.0, 110.0, 130.0)
        assert obs.series["fox"] == (10.0, 12.0, 9.0)

    def test_duplicate_point_keeps_last_and_warns(self):
        text = OBS_HEADER + "0,n,5\n1,n,7\n1,n,9\n"
        with pytest.warns(UserWarning, match="duplicate"):
            obs = import_observations(text)
        assert obs.series["n"] == (5.0, 9.0)

    def test_non_numeric_field_reports_line(self):
        with pytest.raises(ObservationFormatError, match="line 3"):
            import_observations(OBS_HEADER + "0,n,5\n1,n,abc\n")

    def test_negative_population_rejected(self):
        with pytest.raises(ObservationFormatError, match="line 2"):
            import_observations(OBS_HEADER + "0,n,-5\n")

    def test_ragged_grid_rejected(self):
        text = OBS_HEADER + "0,a,1\n1,a,2\n0,b,3\n"
        with pytest.raises(ObservationFormatError, match="'b'"):
            import_observations(text)

    def test_bad_header_rejected(self):
        with pytest.raises(ObservationFormatError, match="header"):
            import_observations("t,id,pop\n")

    def test_wire_round_trip(self):
        obs = import_observations(OBS_HEADER + "0,n,5\n1,n,7\n", provenance="x.csv")
        assert observations_from_dict(observations_to_dict(obs)) == obs


class TestDiscrepancy:
    def test_identical_data_scores_zero(self):
        sim = series([0, 1, 2], [5.0, 7.0, 6.0])
        obs = ObservationSeries(times=(0.0, 1.0, 2.0), series={"n": (5.0, 7.0, 6.0)})
        assert discrepancy(sim, obs) == 0.0

    def test_single_point_error(self):
        # sqrt(((1-1)^2 + (2-2)^2 + (3-5)^2)/3) = sqrt(4/3)
        sim = series([0, 1, 2], [1.0, 2.0, 3.0])
        obs = ObservationSeries(times=(0.0, 1.0, 2.0), series={"n": (1.0, 2.0, 5.0)})
        assert discrepancy(sim, obs) == pytest.approx(math.sqrt(4.0 / 3.0))

    def test_constant_offset_gives_that_offset(self):
        sim = series([0, 1, 2, 3], [10.0, 12.0, 9.0, 14.0])
        obs = ObservationSeries(
            times=(0.0, 1.0, 2.0, 3.0), series={"n": (13.0, 15.0, 12.0, 17.0)}
        )
        assert discrepancy(sim, obs) == pytest.approx(3.0)

    def test_interpolates_between_grid_points(self):
        sim = series([0, 2], [0.0, 10.0])
        obs = ObservationSeries(times=(1.0,), series={"n": (5.0,)})
        assert discrepancy(sim, obs) == 0.0

    def test_unknown_entity_named(self):
        sim = series([0, 1], [1.0, 2.0])
        obs = ObservationSeries(times=(0.0,), series={"ghost": (1.0,)})
        with pytest.raises(CalibrationError, match="ghost"):
            discrepancy(sim, obs)

    def test_out_of_range_time_named(self):
        sim = series([0, 1], [1.0, 2.0])
        obs = ObservationSeries(times=(5.0,), series={"n": (1.0,)})
        with pytest.raises(CalibrationError, match="5.0"):
            discrepancy(sim, obs)

    def test_empty_observations_score_zero(self):
        assert discrepancy(series([0, 1], [1.0, 2.0]), ObservationSeries((), {})) == 0.0


class TestParameterPath:
    def test_entity_path_round_trip(self):
        path = ParameterPath.parse("birth_rate@kudzu")
        assert path.field == "birth_rate"
        assert path.entity_id == "kudzu"
        assert str(path) == "birth_rate@kudzu"

    def test_interaction_path_round_trip(self):
        path = ParameterPath.parse("rate@bug->kudzu:consumes")
        assert path.relation_key == ("bug", "kudzu", "consumes")
        assert str(path) == "rate@bug->kudzu:consumes"

    def test_get_and_set_on_entity(self):
        m = exponential_model(birth=0.1)
        path = ParameterPath.parse("birth_rate@n")
        assert path.get(m) == 0.1
        patched = path.with_value(m, 0.4)
        assert path.get(patched) == 0.4
        assert path.get(m) == 0.1  # original untouched

    def test_get_and_set_on_interaction(self):
        m = predator_prey_model(encounter=0.002)
        path = ParameterPath.parse("rate@pred->prey:consumes")
        assert path.get(m) == 0.002
        assert path.get(path.with_value(m, 0.005)) == 0.005

    @pytest.mark.parametrize(
        "bad",
        ["birth_rate", "speed@n", "rate@a->b:flies_with", "rate@->:consumes"],
    )
    def test_bad_paths_rejected(self, bad):
        with pytest.raises(CalibrationError):
            ParameterPath.parse(bad)


class TestRecommend:
    def test_budget_one_returns_the_initial_point(self):
        m = exponential_model(birth=0.1)
        obs = synth_observations(exponential_model(birth=0.3), 5, 0.01, 100)
        result = recommend_parameters(m, obs, ["birth_rate@n"], budget=1)
        assert result.evaluations == 1
        assert result.best_params == {"birth_rate@n": 0.1}
        assert result.best_discrepancy == result.initial_discrepancy
        assert len(result.trace) == 1

    def test_matching_observations_need_no_change(self):
        m = exponential_model(birth=0.25)
        obs = synth_observations(m, 5, 0.01, 50)
        result = recommend_parameters(m, obs, ["birth_rate@n"], budget=100, dt=0.01)
        assert result.initial_discrepancy == pytest.approx(0.0, abs=1e-9)
        assert result.best_params["birth_rate@n"] == 0.25

    def test_recovers_growth_rate_from_synthetic_data(self):
        # the generator is the oracle: data made at b=0.3, search starts at 0.1
        truth = exponential_model(birth=0.3)
        obs = synth_observations(truth, 10, 0.02, 25)
        start = exponential_model(birth=0.1)
        result = recommend_parameters(start, obs, ["birth_rate@n"], budget=200, dt=0.02)
        assert result.evaluations <= 200
        recovered = result.best_params["birth_rate@n"]
        assert abs(recovered - 0.3) / 0.3 < 0.02

    def test_never_mutates_the_input_model(self):
        m = exponential_model(birth=0.1)
        before = model_to_json(m)
        obs = synth_observations(exponential_model(birth=0.3), 5, 0.02, 50)
        recommend_parameters(m, obs, ["birth_rate@n"], budget=50)
        assert model_to_json(m) == before

    def test_failed_probes_score_infinite_and_search_continues(self):
        # efficiency starts at 0.9; the first upward probe (1.35) is invalid
        truth = predator_prey_model(efficiency=0.45)
        obs = synth_observations(truth, 4, 0.02, 25)
        start = predator_prey_model(efficiency=0.9)
        result = recommend_parameters(
            start, obs, ["efficiency@pred->prey:consumes"], budget=60, dt=0.02
        )
        assert any(math.isinf(e.discrepancy) for e in result.trace)
        assert result.best_discrepancy < result.initial_discrepancy
        assert abs(result.best_params["efficiency@pred->prey:consumes"] - 0.45) < 0.05

    def test_invariants_on_randomized_instances(self):
        rng = random.Random(123)
        for _ in range(10):
            truth_b = rng.uniform(0.1, 0.6)
            start_b = truth_b * rng.uniform(0.3, 3.0)
            budget = rng.randint(1, 80)
            obs = synth_observations(exponential_model(birth=truth_b), 6, 0.02, 50)
            result = recommend_parameters(
                exponential_model(birth=start_b), obs, ["birth_rate@n"], budget=budget, dt=0.05
            )
            assert result.evaluations <= budget
            assert result.best_discrepancy <= result.initial_discrepancy
            assert result.evaluations == len(result.trace)
            finite = [e.discrepancy for e in result.trace if math.isfinite(e.discrepancy)]
            assert min(finite) == result.best_discrepancy

    def test_fitting_is_deterministic(self):
        obs = synth_observations(exponential_model(birth=0.3), 6, 0.02, 50)
        start = exponential_model(birth=0.12)
        a = recommend_parameters(start, obs, ["birth_rate@n"], budget=60)
        b = recommend_parameters(start, obs, ["birth_rate@n"], budget=60)
        assert fit_result_to_dict(a) == fit_result_to_dict(b)

    def test_unknown_path_rejected(self):
        obs = synth_observations(exponential_model(birth=0.3), 5, 0.02, 50)
        with pytest.raises(CalibrationError, match="no current value"):
            recommend_parameters(
                exponential_model(), obs, ["carrying_capacity@n"], budget=10
            )

    def test_requires_observations(self):
        with pytest.raises(CalibrationError, match="no observations"):
            recommend_parameters(
                exponential_model(), ObservationSeries((), {}), ["birth_rate@n"], budget=10
            )
