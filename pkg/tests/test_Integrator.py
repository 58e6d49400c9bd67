from dataclasses import fields
import math

import numpy as np
import pytest

from tipping_lab.core.ErrorHandle import InvalidSettings
from tipping_lab.core.Settings import IntegratorSettings
from tipping_lab.enums.Enums import Direction, Side, TerminalStatus
from tipping_lab.fields.ScalarField import polynomial_field
from tipping_lab.processing.Integrator import Trajectory, integrate, pullback_limit, reverse_pullback_limit


@pytest.fixture
def decay():
    # x' = -x
    return polynomial_field(c1=-1.0)


@pytest.fixture
def cubic():
    # x' = -x^3 + x; bounded solutions -1, 0, 1
    return polynomial_field(c1=1.0, c3=-1.0)

#-----------------------------------------------------------------------------------------------

def test_forward_integration_matches_exponential(decay):
    traj = integrate(decay, 0.0, 1.0, 5.0)
    assert traj.completed
    assert traj.direction == Direction.FORWARD
    assert traj.x_end == pytest.approx(math.exp(-5.0), rel=1e-8)
    assert traj.int_fx[-1] == pytest.approx(-5.0, rel=1e-9)
    assert traj(2.5) == pytest.approx(math.exp(-2.5), rel=1e-7)


def test_backward_integration(decay):
    traj = integrate(decay, 0.0, 1.0, -2.0)
    assert traj.direction == Direction.BACKWARD
    assert traj.t_end == -2.0
    assert traj.x_end == pytest.approx(math.exp(2.0), rel=1e-8)
    asc = traj.ascending()
    assert asc.t[0] == -2.0 and asc.t[-1] == 0.0
    assert traj.span == (-2.0, 0.0)


def test_output_grid_step(decay):
    traj = integrate(decay, 0.0, 1.0, 1.0, IntegratorSettings(output_step=0.25))
    assert np.allclose(traj.t, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_endpoints_only(decay):
    traj = integrate(decay, 0.0, 1.0, 3.0, IntegratorSettings().endpoints_only())
    assert len(traj.t) == 2


def test_blow_up_is_reported():
    # x' = x^2 from x(0) = 1 leaves every bound before t = 1
    traj = integrate(polynomial_field(c2=1.0), 0.0, 1.0, 5.0, IntegratorSettings(guard_radius=100.0))
    assert traj.blew_up
    assert traj.status == TerminalStatus.BLOW_UP
    assert traj.event_sign == 1
    assert 0.9 < traj.event_time <= 1.0


def test_guard_ignores_inward_motion(decay):
    traj = integrate(decay, 0.0, 50.0, 1.0, IntegratorSettings(guard_radius=10.0))
    assert traj.completed


@pytest.mark.parametrize("s, x0, t_end", [
    (0.0, 1.0, 0.0),
    (0.0, math.nan, 1.0),
    (0.0, math.inf, 1.0),
])
def test_integrate_rejects_bad_input(decay, s, x0, t_end):
    with pytest.raises(InvalidSettings):
        integrate(decay, s, x0, t_end)


def test_settings_validation():
    with pytest.raises(InvalidSettings):
        IntegratorSettings(rtol=-1.0)
    with pytest.raises(InvalidSettings):
        IntegratorSettings(method="Euler")

#-----------------------------------------------------------------------------------------------

def test_trajectory_helpers(decay):
    traj = integrate(decay, 0.0, 1.0, 4.0)
    assert traj.covers(0.0, 4.0)
    assert not traj.covers(-1.0, 4.0)
    assert math.isnan(float(traj(5.0)))
    part = traj.restrict(1.0, 2.0)
    assert part.span == pytest.approx((1.0, 2.0))
    frame = traj.to_frame()
    assert list(frame.columns) == ["t", "x", "int_fx"]
    assert traj.summary()["status"] == "reached-horizon"


def test_from_samples_integrates_slope(decay):
    t = np.linspace(0.0, 2.0, 2001)
    traj = Trajectory.from_samples(decay, t, np.exp(-t))
    assert traj.int_fx[-1] == pytest.approx(-2.0)
    assert traj.dxdt[0] == pytest.approx(-1.0)

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("side, expected", [(Side.UPPER, 1.0), (Side.LOWER, -1.0)])
def test_pullback_limit_reaches_extremal_equilibria(cubic, side, expected):
    value, converged = pullback_limit(cubic, 0.0, side, (25.0, 50.0, 100.0), rho=2.0)
    assert converged
    assert value == pytest.approx(expected, abs=1e-8)


def test_pullback_limit_rejects_bad_schedule(cubic):
    with pytest.raises(InvalidSettings):
        pullback_limit(cubic, 0.0, Side.UPPER, (50.0, 25.0), rho=2.0)


def test_reverse_pullback_finds_repulsive_equilibrium(cubic):
    value, converged = reverse_pullback_limit(cubic, 0.0, lambda s: 0.3, (25.0, 50.0, 100.0))
    assert converged
    assert value == pytest.approx(0.0, abs=1e-8)

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("x0, t_end, tol", [(1.0, 3.0, 1e-8), (0.5, 2.0, 1e-6)])
def test_time_reversal_returns_to_start(decay, cubic, x0, t_end, tol):
    for field_ in (decay, cubic):
        forward = integrate(field_, 0.0, x0, t_end)
        back = integrate(field_, t_end, forward.x_end, 0.0)
        assert back.completed
        assert back.x_end == pytest.approx(x0, abs=tol)


@pytest.mark.parametrize("x0", [-1.5, 0.2, 1.7])
def test_halving_tolerances_keeps_the_solution(cubic, x0):
    settings = IntegratorSettings()
    coarse = integrate(cubic, 0.0, x0, 10.0, settings)
    fine = integrate(cubic, 0.0, x0, 10.0, settings.refined())
    assert fine.t == pytest.approx(coarse.t)
    assert np.max(np.abs(fine.x - coarse.x)) < 1e-8


def test_trajectory_fields(decay):
    names = {f.name for f in fields(Trajectory)}
    assert "interpolation_order" not in names
    traj = integrate(decay, 0.0, 1.0, 1.0)
    assert traj(0.5) == pytest.approx(math.exp(-0.5), rel=1e-7)
