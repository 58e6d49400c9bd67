import math

import numpy as np
import pytest

from tipping_lab.core.ErrorHandle import ConfigError, ModelError
from tipping_lab.enums.Enums import ModelKind, Monotonicity
from tipping_lab.models.PopulationModels import I_BETA_CONSTANT, build_model, i_beta_sup

SQRT5_2 = 1.1180339887498949

STRONG_K = {"kind": "sin2", "amplitude": 60.0, "frequency": 1.0, "offset": 30.0}


@pytest.fixture
def strong_holling():
    return build_model("holling3-family", {
        "r": 1.0,
        "K": STRONG_K,
        "S": {"kind": "cos2", "amplitude": 20.0, "frequency": SQRT5_2, "offset": 20.0},
        "beta": 800.0,
    })


@pytest.fixture
def weak_holling():
    return build_model("holling3-family", {
        "r": {"kind": "cos2", "amplitude": 0.1, "frequency": SQRT5_2, "offset": 0.01},
        "K": STRONG_K,
        "S": -0.01,
        "beta": 5e5,
    })

#-----------------------------------------------------------------------------------------------

def test_multiplicative_field_factorization():
    model = build_model(ModelKind.MULTIPLICATIVE, {"r": 2.0, "K": 3.0, "S": 1.0})
    x = np.linspace(-1.0, 4.0, 11)
    expected = 2.0 * x * (1 - x / 3.0) * (x - 1.0) / 3.0
    assert np.allclose(model.base_field(0.0, x), expected)
    assert model.zero_is_solution
    assert model.family.monotonicity == Monotonicity.NONDECREASING


def test_migration_family_adds_phi():
    model = build_model("migration-family", {"r": 1.0, "K": 1.0, "S": 0.5, "phi": 0.8})
    assert model.family.evaluate(0.0, 0.0, 2.0) == pytest.approx(1.6)


def test_holling3_family_direction(strong_holling):
    direction = strong_holling.family.direction
    assert direction(0.0, math.sqrt(800.0)) == pytest.approx(-0.5)
    assert strong_holling.family.monotonicity == Monotonicity.NONINCREASING


def test_additive_holling2_is_half_line():
    model = build_model("additive-holling2", {"r": 1.0, "K": 2.0, "a": 0.3, "b": 0.5})
    assert model.base_field.state_min == 0.0
    x = 1.0
    assert model.base_field(0.0, x) == pytest.approx(x * (1 - x / 2.0) - 0.3 * x / (x + 0.5))


def test_polynomial_model_with_direction():
    model = build_model("polynomial", {"c1": 1.0, "c3": -1.0, "direction": {"c0": 1.0}})
    assert model.family.evaluate(0.0, 1.0, 0.5) == pytest.approx(0.5)
    assert not model.zero_is_solution


def test_model_config_round_trip(strong_holling):
    data = strong_holling.to_config()
    rebuilt = build_model(data["kind"], data["coefficients"])
    x = np.linspace(0.0, 90.0, 7)
    assert np.allclose(rebuilt.base_field(1.0, x), strong_holling.base_field(1.0, x))

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("kind, coefficients, key", [
    ("logistic", {}, "model.kind"),
    ("multiplicative", {"r": 1.0, "K": 1.0}, "model.coefficients"),
    ("multiplicative", {"r": 1.0, "K": 1.0, "S": 0.5, "zeta": 2.0}, "model.coefficients.zeta"),
    ("multiplicative", {"r": 1.0, "K": {"kind": "wave"}, "S": 0.5}, "model.coefficients.K.kind"),
])
def test_build_model_config_errors(kind, coefficients, key):
    with pytest.raises(ConfigError) as err:
        build_model(kind, coefficients)
    assert err.value.key == key


@pytest.mark.parametrize("kind, coefficients", [
    ("multiplicative", {"r": 1.0, "K": -1.0, "S": 0.5}),
    ("multiplicative", {"r": 0.0, "K": 1.0, "S": 0.5}),
    ("multiplicative", {"r": 1.0, "K": 1.0, "S": -2.0}),
    ("migration-family", {"r": 1.0, "K": 1.0, "S": 0.5, "phi": 0.0}),
    ("holling3-family", {"r": 1.0, "K": 1.0, "S": 0.5, "beta": -1.0}),
    ("additive-holling2", {"r": 1.0, "K": 1.0, "a": -0.1, "b": 0.5}),
])
def test_build_model_constraint_errors(kind, coefficients):
    with pytest.raises((ModelError, ConfigError)):
        build_model(kind, coefficients)

#-----------------------------------------------------------------------------------------------

def test_i_beta_constant_coefficients():
    assert i_beta_sup(1.0, 1.0, 1.0) == pytest.approx(I_BETA_CONSTANT)
    assert i_beta_sup(1.0, 1.0, 4.0) == pytest.approx(8.0 * I_BETA_CONSTANT)


def test_i_beta_of_strong_and_weak_populations(strong_holling, weak_holling):
    assert strong_holling.i_beta_sup() > 3.5
    assert weak_holling.i_beta_sup() > 560.0


def test_i_beta_needs_holling3():
    model = build_model("multiplicative", {"r": 1.0, "K": 1.0, "S": 0.5})
    with pytest.raises(ModelError):
        model.i_beta_sup()
