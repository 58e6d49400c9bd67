import math

import numpy as np
import pytest

from tipping_lab.core.ErrorHandle import ConfigError, ProfileError
from tipping_lab.fields.Coefficients import (Arctan, Clip, Constant, Cos2, Gaussian, Product, Quotient,
                                             Sampled, Sin2, Sum, TimeClamp, TimeDerivative, TimeRescale,
                                             coefficient_from_config)

SQRT5_2 = math.sqrt(5.0) / 2.0


@pytest.fixture
def carrying_capacity():
    # K(t) = 30 + 60 sin^2(t)
    return Sin2(amplitude=60.0, frequency=1.0, offset=30.0)


@pytest.fixture
def sample_times():
    return np.linspace(-20.0, 20.0, 401)

#-----------------------------------------------------------------------------------------------

def test_constant_evaluates_scalar_and_array():
    c = Constant(2.5)
    assert c(3.0) == 2.5
    assert np.all(c(np.arange(4.0)) == 2.5)
    assert c.dt(1.0) == 0.0
    assert c.is_constant
    assert c.to_config() == 2.5


def test_sin2_values_and_bounds(carrying_capacity, sample_times):
    values = carrying_capacity(sample_times)
    assert carrying_capacity(0.0) == pytest.approx(30.0)
    assert carrying_capacity(math.pi / 2) == pytest.approx(90.0)
    lo, hi = carrying_capacity.interval()
    assert (lo, hi) == (30.0, 90.0)
    assert np.all(values >= lo - 1e-12) and np.all(values <= hi + 1e-12)


def test_cos2_quasi_periodic_frequency():
    s = Cos2(amplitude=20.0, frequency=SQRT5_2, offset=20.0)
    assert s(0.0) == pytest.approx(40.0)
    t = math.pi / (2 * SQRT5_2)
    assert s(t) == pytest.approx(20.0, abs=1e-12)


@pytest.mark.parametrize("coefficient", [
    Sin2(amplitude=60.0, frequency=1.0, offset=30.0),
    Cos2(amplitude=0.1, frequency=SQRT5_2, offset=0.01),
    Arctan(amplitude=1.0 / math.pi, rate=1.0, offset=0.5),
    Gaussian(amplitude=1.5, width=10.0, center=2.0, offset=-1.0),
    TimeRescale(Arctan(amplitude=1.0), rate=3.0, shift=-1.0),
])
def test_closed_form_derivative_matches_finite_difference(coefficient, sample_times):
    h = 1e-6
    numeric = (coefficient(sample_times + h) - coefficient(sample_times - h)) / (2 * h)
    assert np.allclose(coefficient.dt(sample_times), numeric, atol=1e-6)
    lo, hi = coefficient.dt_interval()
    assert np.all(numeric >= lo - 1e-6) and np.all(numeric <= hi + 1e-6)


def test_product_and_sum_derivatives(carrying_capacity, sample_times):
    r = Cos2(amplitude=0.1, frequency=SQRT5_2, offset=0.01)
    expr = r * carrying_capacity + 3.0
    assert isinstance(expr, Sum)
    assert isinstance(expr.terms[0], Product)
    expected = r.dt(sample_times) * carrying_capacity(sample_times) + r(sample_times) * carrying_capacity.dt(sample_times)
    assert np.allclose(expr.dt(sample_times), expected)


def test_algebra_simplifies_constants(carrying_capacity):
    assert (Constant(2.0) + 3.0) == Constant(5.0)
    assert (carrying_capacity * 1.0) is carrying_capacity
    assert (carrying_capacity + 0.0) is carrying_capacity
    assert (carrying_capacity * 0.0) == Constant(0.0)
    assert (carrying_capacity / 2.0)(0.0) == pytest.approx(15.0)


def test_quotient_rejects_denominator_through_zero():
    with pytest.raises(ConfigError):
        Quotient(Constant(1.0), Sin2(amplitude=2.0, frequency=1.0, offset=-1.0))


def test_quotient_interval_encloses_values(carrying_capacity, sample_times):
    q = Constant(1.0) / carrying_capacity
    lo, hi = q.interval()
    assert lo == pytest.approx(1.0 / 90.0)
    assert hi == pytest.approx(1.0 / 30.0)
    assert np.all((q(sample_times) >= lo - 1e-15) & (q(sample_times) <= hi + 1e-15))


def test_gaussian_rejects_nonpositive_width():
    with pytest.raises(ConfigError):
        Gaussian(amplitude=1.0, width=0.0)


def test_clip_limits_range():
    c = Clip(Arctan(amplitude=1.0), lower=-0.5, upper=0.5)
    assert c(100.0) == 0.5
    assert c(-100.0) == -0.5
    assert c.dt(100.0) == 0.0
    assert c.interval() == (-0.5, 0.5)


def test_time_clamp_freezes_one_side():
    child = Arctan(amplitude=1.0)
    after = TimeClamp(child, at_time=0.0, keep="after")
    before = TimeClamp(child, at_time=0.0, keep="before")
    assert after(-5.0) == pytest.approx(0.0)
    assert after(5.0) == pytest.approx(math.atan(5.0))
    assert before(5.0) == pytest.approx(0.0)
    assert after.dt(-1.0) == 0.0
    with pytest.raises(ConfigError):
        TimeClamp(child, at_time=0.0, keep="sideways")


def test_sampled_interpolates_and_has_no_derivative():
    s = Sampled(times=(0.0, 1.0, 2.0), samples=(0.0, 2.0, 1.0))
    assert s(0.5) == pytest.approx(1.0)
    assert s(-3.0) == 0.0
    assert s(9.0) == 1.0
    assert s.interval() == (0.0, 2.0)
    with pytest.raises(ProfileError):
        s.dt(0.5)
    with pytest.raises(ConfigError):
        Sampled(times=(0.0, 0.0), samples=(1.0, 1.0))


def test_time_derivative_has_no_second_derivative():
    d = TimeDerivative(Arctan(amplitude=1.0))
    assert d(0.0) == pytest.approx(1.0)
    with pytest.raises(ProfileError):
        d.dt(0.0)

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("node_cfg, t, expected", [
    (3.0, 1.0, 3.0),
    ({"kind": "constant", "value": -0.01}, 5.0, -0.01),
    ({"kind": "sin2", "amplitude": 60, "frequency": 1, "offset": 30}, 0.0, 30.0),
    ({"kind": "arctan", "amplitude": 1.0, "rate": 2.0}, 0.0, 0.0),
    ({"kind": "sum", "terms": [1.0, {"kind": "gaussian", "amplitude": 2.0, "width": 10.0}]}, 0.0, 3.0),
    ({"kind": "product", "factors": [2.0, {"kind": "cos2", "amplitude": 1.0, "frequency": 1.0}]}, 0.0, 2.0),
    ({"kind": "clamp", "child": {"kind": "arctan", "amplitude": 1.0}, "at": 0.0}, -4.0, 0.0),
    ({"kind": "sampled", "times": [0, 2], "values": [0, 4]}, 1.0, 2.0),
])
def test_coefficient_from_config(node_cfg, t, expected):
    assert coefficient_from_config(node_cfg)(t) == pytest.approx(expected)


def test_to_config_is_accepted_back(carrying_capacity):
    expr = Cos2(amplitude=0.1, frequency=SQRT5_2, offset=0.01) * carrying_capacity + Gaussian(1.0, 10.0)
    rebuilt = coefficient_from_config(expr.to_config())
    t = np.linspace(-5, 5, 11)
    assert np.allclose(rebuilt(t), expr(t))


@pytest.mark.parametrize("node_cfg, key", [
    ({"kind": "sin2", "amplitude": 1.0, "frequency": 1.0, "bogus": 1}, "coef.bogus"),
    ({"kind": "nope"}, "coef.kind"),
    ({"amplitude": 1.0}, "coef"),
    (True, "coef"),
    ({"kind": "sin2", "amplitude": 1.0}, "coef"),
])
def test_coefficient_from_config_errors_carry_key(node_cfg, key):
    with pytest.raises(ConfigError) as err:
        coefficient_from_config(node_cfg, "coef")
    assert err.value.key == key
