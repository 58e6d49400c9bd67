import numpy as np
import pytest

from tipping_lab.core.ErrorHandle import ModelError
from tipping_lab.core.Scenario import ScenarioConfig
from tipping_lab.enums.Enums import AlleeType
from tipping_lab.models.Allee import (CollapsePoint, _scan_result, _window_extremes, allee_type, balance_average,
                                      capacity_crossings, collapse_scan, frozen_collapse_bracket,
                                      strength_ratios, zero_exponent)
from tipping_lab.models.PopulationModels import build_model
from tipping_lab.fields.Profiles import TransitionProfile
from tipping_lab.processing.Mappers import ModelMapper, ProfileMapper
from tipping_lab.utility.path_utils import load_scenario_text

HORIZON = 200.0


@pytest.fixture
def strong_model():
    # x (1 - x)(x - 1/2): equilibria 0, 1/2, 1
    return build_model("multiplicative", {"r": 1.0, "K": 1.0, "S": 0.5})


@pytest.fixture
def weak_model():
    # x (1 - x)(x + 1): equilibria -1, 0, 1
    return build_model("multiplicative", {"r": 1.0, "K": 1.0, "S": -1.0})


def _scenario(name):
    config = ScenarioConfig.from_yaml(load_scenario_text(f"{name}.yaml"))
    return ModelMapper().map(config), ProfileMapper().map(config), config

#-----------------------------------------------------------------------------------------------

def test_window_extremes_of_ramp():
    t = np.linspace(0.0, 10.0, 1001)
    high, low = _window_extremes(t, t, 2.0)
    assert high == pytest.approx(9.0)
    assert low == pytest.approx(1.0)


def test_window_longer_than_samples():
    t = np.linspace(0.0, 10.0, 1001)
    with pytest.raises(ModelError):
        _window_extremes(t, t, 20.0)

#-----------------------------------------------------------------------------------------------

def test_strong_allee_type(strong_model):
    report = allee_type(strong_model, horizon=HORIZON)
    assert report.allee_type == AlleeType.STRONG
    assert report.zero_exponent == pytest.approx(-0.5)
    assert report.sup_indicator == pytest.approx(-0.5)
    assert report.three_solutions
    assert report.nonnegative_solutions == 3
    low, high = report.strength
    assert low == pytest.approx(0.5, abs=1e-5)
    assert high == pytest.approx(0.5, abs=1e-5)
    record = report.to_record()
    assert record["type"] == AlleeType.STRONG.value
    assert record["indicators"][0]["length"] == 100.0


@pytest.mark.parametrize("s", [0.5, 0.9])
def test_strength_ratio_is_threshold_over_capacity(s):
    model = build_model("multiplicative", {"r": 1.0, "K": 1.0, "S": s})
    low, high = strength_ratios(model, horizon=HORIZON)
    assert low == pytest.approx(s, abs=1e-5)
    assert high == pytest.approx(s, abs=1e-5)


def test_weak_allee_type(weak_model):
    report = allee_type(weak_model, horizon=HORIZON)
    assert report.allee_type == AlleeType.WEAK
    assert report.inf_indicator == pytest.approx(1.0)
    assert report.nonnegative_solutions == 2
    assert report.strength is None
    with pytest.raises(ModelError):
        strength_ratios(weak_model, horizon=HORIZON, report=report)


def test_short_horizon_has_no_window(strong_model):
    with pytest.raises(ModelError):
        allee_type(strong_model, horizon=50.0)


def test_allee_type_needs_zero_solution():
    model = build_model("polynomial", {"c0": 1.0, "c1": 1.0, "c3": -1.0})
    with pytest.raises(ModelError):
        allee_type(model, horizon=HORIZON)

#-----------------------------------------------------------------------------------------------

def test_upper_solution_balances_at_capacity(weak_model):
    assert balance_average(weak_model, horizon=HORIZON) == pytest.approx(0.0, abs=1e-6)
    crossings = capacity_crossings(weak_model, horizon=HORIZON)
    assert crossings.crossings == 0
    assert crossings.constant_equal
    assert crossings.to_record()["crossings"] == 0


def test_balance_needs_multiplicative_model():
    model = build_model("polynomial", {"c1": 1.0, "c3": -1.0})
    with pytest.raises(ModelError):
        balance_average(model, horizon=HORIZON)

#-----------------------------------------------------------------------------------------------

def test_collapse_scan_needs_family(strong_model):
    with pytest.raises(ModelError):
        collapse_scan(strong_model, TransitionProfile.arctan_sigmoid(0.0, 1.0), [1.0, 2.0])


def test_frozen_bracket_needs_holling3(strong_model):
    with pytest.raises(ModelError):
        frozen_collapse_bracket(strong_model)


@pytest.fixture
def holling_family():
    model = build_model("holling3-family", {"r": 1.0, "K": 30.0, "S": 10.0, "beta": 800.0})
    return model.family


def test_scan_result_brackets_first_collapse(holling_family):
    points = [CollapsePoint(2.0, 0.0, True, "collapse"),
              CollapsePoint(0.5, 25.0, False, "persistence"),
              CollapsePoint(1.0, 20.0, False, "persistence")]
    scan = _scan_result(points, holling_family, 600.0)
    assert [p.d for p in scan.points] == [0.5, 1.0, 2.0]
    assert scan.bracket == (1.0, 2.0)
    assert scan.monotone
    frame = scan.to_frame()
    assert list(frame.columns) == ["d", "tail", "collapsed"]
    assert scan.curves_frame().empty


def test_scan_result_flags_non_monotone_tails(holling_family):
    points = [CollapsePoint(0.5, 20.0, False, "persistence"),
              CollapsePoint(1.0, 25.0, False, "persistence")]
    scan = _scan_result(points, holling_family, 600.0)
    assert scan.bracket is None
    assert not scan.monotone

#-----------------------------------------------------------------------------------------------

@pytest.mark.slow
def test_strong_predation_ramp_collapses():
    model, profile, config = _scenario("holling3-strong")
    scan = collapse_scan(model, profile, [1.1, 1.5], horizon=config.analysis.horizon)
    assert [p.collapsed for p in scan.points] == [False, True]
    assert scan.points[0].tail > 10.0
    assert scan.points[1].tail < 0.1
    assert scan.bracket == (1.1, 1.5)


@pytest.mark.slow
def test_weak_predation_ramp_persists():
    model, profile, config = _scenario("holling3-weak")
    scan = collapse_scan(model, profile, [100.0, 200.0, 400.0], horizon=config.analysis.horizon)
    assert not any(p.collapsed for p in scan.points)
    assert scan.bracket is None
    assert scan.monotone
    tails = [p.tail for p in scan.points]
    assert tails[0] > tails[1] > tails[2]

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("s, expected", [(0.5, -25.0), (-1.0, 50.0), (0.0, 0.0)])
def test_zero_exponent_two_ways(s, expected):
    model = build_model("multiplicative", {"r": 1.0, "K": 1.0, "S": s})
    by_quad, by_integrator = zero_exponent(model.base_field, 50.0)
    assert by_quad == pytest.approx(expected, abs=1e-10)
    assert by_integrator == pytest.approx(by_quad, abs=1e-8)


def test_additive_model_indicator_is_r_minus_a_over_b():
    # h_x(t, 0) = r - a/b = 1 - 0.5/0.25 < 0
    model = build_model("additive-holling2", {"r": 1.0, "K": 2.0, "a": 0.5, "b": 0.25})
    report = allee_type(model, horizon=HORIZON)
    assert report.allee_type == AlleeType.STRONG
    assert report.sup_indicator == pytest.approx(-1.0)
    assert not report.three_solutions
    assert report.strength is None
