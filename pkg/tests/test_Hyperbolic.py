import math

import numpy as np
import pytest
from scipy.stats import linregress

from tipping_lab.core.ErrorHandle import InvalidSettings
from tipping_lab.core.Settings import AnalysisSettings, AuditGrids
from tipping_lab.enums.Enums import DichotomyType, NotFoundReason, Side
from tipping_lab.fields.Coefficients import Sin2
from tipping_lab.fields.Profiles import TransitionProfile
from tipping_lab.fields.ScalarField import additive_family, polynomial_field
from tipping_lab.processing.Hyperbolic import (continue_hyperbolic, dichotomy_exponent, extremal_solution,
                                               frozen_triple, in_Rf, middle_solution, perturbation_norm,
                                               uniform_separation)
from tipping_lab.processing.Integrator import Trajectory


@pytest.fixture
def cubic():
    return polynomial_field(c1=1.0, c3=-1.0)


@pytest.fixture
def family(cubic):
    return additive_family(cubic, label="cubic")


@pytest.fixture
def grid():
    return np.linspace(0.0, 400.0, 8001)


def _cubic_roots(gamma):
    # -x^3 + x + gamma, ascending
    return np.sort(np.roots([-1.0, 0.0, 1.0, gamma]).real)

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("x, kind, exponent", [
    (1.0, DichotomyType.ATTRACTIVE, -2.0),
    (0.0, DichotomyType.REPULSIVE, 1.0),
])
def test_dichotomy_exponent_of_equilibria(cubic, grid, x, kind, exponent):
    traj = Trajectory.from_samples(cubic, grid, np.full_like(grid, x))
    estimate = dichotomy_exponent(cubic, traj)
    assert estimate.classification == kind
    assert estimate.exponent == pytest.approx(exponent)
    assert estimate.k == pytest.approx(1.0)
    assert estimate.beta == pytest.approx(abs(exponent) - 1e-3)


def test_dichotomy_exponent_of_nonhyperbolic_solution(grid):
    flat = polynomial_field(c3=-1.0)
    traj = Trajectory.from_samples(flat, grid, np.zeros_like(grid))
    estimate = dichotomy_exponent(flat, traj)
    assert estimate.classification == DichotomyType.INDETERMINATE
    assert estimate.window == 100.0


def test_dichotomy_exponent_needs_long_trajectory(cubic):
    t = np.linspace(0.0, 100.0, 101)
    traj = Trajectory.from_samples(cubic, t, np.ones_like(t))
    with pytest.raises(InvalidSettings):
        dichotomy_exponent(cubic, traj)


def test_uniform_separation(cubic, grid):
    a = Trajectory.from_samples(cubic, grid, np.ones_like(grid))
    b = Trajectory.from_samples(cubic, grid, -np.ones_like(grid))
    assert uniform_separation(a, b) == pytest.approx(2.0)

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("side, expected", [(Side.UPPER, 1.0), (Side.LOWER, -1.0)])
def test_extremal_solution(cubic, side, expected):
    traj = extremal_solution(cubic, side, (0.0, 100.0))
    assert traj.completed
    assert traj.span == (0.0, 100.0)
    assert np.allclose(traj.x, expected, atol=1e-7)


@pytest.mark.parametrize("gamma", [0.0, 0.2])
def test_frozen_triple_matches_cubic_roots(family, gamma):
    triple = frozen_triple(family, gamma, (0.0, 400.0))
    assert triple.found
    lower, middle, upper = _cubic_roots(gamma)
    assert triple.lower(200.0) == pytest.approx(lower, abs=1e-6)
    assert triple.middle(200.0) == pytest.approx(middle, abs=1e-6)
    assert triple.upper(200.0) == pytest.approx(upper, abs=1e-6)
    assert triple.estimates["middle"].classification == DichotomyType.REPULSIVE
    assert triple.separations["lower_upper"] > 1.0
    record = triple.to_record()
    assert record["found"] is True
    assert list(triple.to_frame().columns) == ["t", "lower", "middle", "upper"]


def test_frozen_triple_past_the_fold(family):
    # one equilibrium only beyond gamma = 2 / (3 sqrt 3)
    result = frozen_triple(family, 1.0, (0.0, 400.0))
    assert not result.found
    assert result.reason == NotFoundReason.COLLAPSED
    assert result.to_record()["reason"] == "collapsed-to-fewer"


def test_in_rf(family):
    grids = AuditGrids.coarse()
    inside = in_Rf(family, 0.2, grids=grids)
    outside = in_Rf(family, 1.0, grids=grids)
    assert inside and inside.h5_passed
    assert not outside
    assert outside.to_record()["member"] is False


def test_middle_solution_of_constant_profile(family):
    profile = TransitionProfile.constant(0.2)
    traj = middle_solution(family, profile, 50.0, (-100.0, 100.0))
    assert traj.completed
    assert traj(0.0) == pytest.approx(_cubic_roots(0.2)[1], abs=1e-6)


def test_middle_solution_rejects_short_span(family):
    with pytest.raises(InvalidSettings):
        middle_solution(family, TransitionProfile.constant(0.0), 50.0, (-100.0, 10.0))

#-----------------------------------------------------------------------------------------------

@pytest.mark.parametrize("x_base, which", [(1.0, 2), (0.0, 1), (-1.0, 0)])
def test_continuation_lands_on_perturbed_equilibrium(cubic, x_base, which):
    t = np.linspace(0.0, 60.0, 1201)
    base = Trajectory.from_samples(cubic, t, np.full_like(t, x_base))
    perturbed = cubic.with_forcing(0.1)
    result = continue_hyperbolic(cubic, base, perturbed, rho=2.0)
    assert np.allclose(result.x, _cubic_roots(0.1)[which], atol=1e-8)


def test_perturbation_norm(cubic):
    t = np.linspace(0.0, 10.0, 11)
    assert perturbation_norm(cubic, cubic.with_forcing(0.1), t, 2.0) == pytest.approx(0.1)
    assert perturbation_norm(cubic, cubic, t, 2.0) == 0.0


def test_continuation_needs_samples(cubic):
    t = np.array([0.0, 1.0])
    base = Trajectory.from_samples(cubic, t, np.ones_like(t))
    with pytest.raises(InvalidSettings):
        continue_hyperbolic(cubic, base, cubic, rho=2.0, settings=AnalysisSettings())

#-----------------------------------------------------------------------------------------------

FOLD = 2.0 / (3.0 * math.sqrt(3.0))


@pytest.mark.parametrize("a", [-2.0, -0.5, 0.5, 2.0])
def test_dichotomy_exponent_of_linear_equation(grid, a):
    linear = polynomial_field(c1=a)
    traj = Trajectory.from_samples(linear, grid, np.zeros_like(grid))
    estimate = dichotomy_exponent(linear, traj)
    assert estimate.exponent == pytest.approx(a, abs=1e-9)
    expected = DichotomyType.ATTRACTIVE if a < 0 else DichotomyType.REPULSIVE
    assert estimate.classification == expected


@pytest.mark.slow
@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_frozen_triple_exists_up_to_the_fold(family, sign):
    assert frozen_triple(family, sign * (FOLD - 1e-4), (0.0, 400.0)).found
    assert not frozen_triple(family, sign * (FOLD + 1e-4), (0.0, 400.0)).found


@pytest.mark.slow
def test_frozen_triple_across_gamma(family):
    for gamma in np.linspace(-0.3, 0.3, 8):
        triple = frozen_triple(family, gamma, (0.0, 400.0))
        assert triple.found
        roots = _cubic_roots(gamma)
        for name, root in zip(("lower", "middle", "upper"), roots):
            assert np.max(np.abs(getattr(triple, name).x - root)) < 1e-6

#-----------------------------------------------------------------------------------------------

def test_continuation_correction_is_linear_in_forcing(cubic):
    t = np.linspace(0.0, 60.0, 1201)
    base = Trajectory.from_samples(cubic, t, np.ones_like(t))
    deltas = np.geomspace(1e-4, 1e-1, 7)
    corrections = [np.max(np.abs(continue_hyperbolic(cubic, base, cubic.with_forcing(d), rho=2.0).x - 1.0))
                   for d in deltas]
    fit = linregress(np.log(deltas), np.log(corrections))
    assert fit.slope == pytest.approx(1.0, abs=0.02)
    assert fit.rvalue ** 2 >= 0.999


@pytest.mark.slow
def test_ordered_fields_have_ordered_extremal_solutions():
    rng = np.random.default_rng(20)
    for _ in range(20):
        c1 = rng.uniform(1.0, 2.0)
        forcing = Sin2(amplitude=rng.uniform(0.0, 0.1), frequency=rng.uniform(0.5, 2.0),
                       offset=rng.uniform(-0.05, 0.05))
        upper_field = polynomial_field(c1=c1, c3=-1.0).with_forcing(forcing)
        lower_field = upper_field.with_forcing(-rng.uniform(0.01, 0.1))
        for side in (Side.LOWER, Side.UPPER):
            below = extremal_solution(lower_field, side, (0.0, 50.0))
            above = extremal_solution(upper_field, side, (0.0, 50.0))
            assert np.all(below.x <= above(below.t) + 1e-7)
