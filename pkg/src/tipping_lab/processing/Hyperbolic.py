"""
Hyperbolic and extremal bounded solutions: l, u by pullback, the repulsive
middle solution by reverse-time pullback, dichotomy estimates, frozen-equation
triples and the continuation of hyperbolic solutions under perturbation.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging
import math
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..core import Config as cfg
from ..core.ErrorHandle import (BlowUpError, ContractionFailed, FutureNotInRf, InvalidSettings,
                                PullbackNotConverged)
from ..core.Settings import AnalysisSettings, AuditGrids
from ..enums.Enums import DichotomyType, Direction, NotFoundReason, Side
from ..fields.Audit import coercivity_radius, hypothesis_audit
from ..fields.Profiles import TransitionProfile
from ..fields.ScalarField import ParametricFamily, ScalarField
from ..providers.CacheManager import cache_for
from .Integrator import Trajectory, integrate, pullback_limit, reverse_pullback_limit

logger = logging.getLogger(__name__)

_RADIUS_TIMES = cfg.COERCIVITY_MAX_TIMES
_START_TOL = 1e-4
_LOOKAHEAD = 200.0


@lru_cache(maxsize=256)
def _radius(field_: ScalarField, lo: float, hi: float, slope: float, bound: float) -> float:
    return coercivity_radius(field_, slope, bound, times=np.linspace(lo, hi, _RADIUS_TIMES))


def field_radius(field_: ScalarField, lo: float, hi: float, settings: AnalysisSettings) -> float:
    """Coercivity radius of the field on the time window [lo, hi] (memoized)."""
    return _radius(field_, float(lo), float(hi), settings.coercivity_slope, settings.coercivity_search_bound)


# --- dichotomy ---

@dataclass
class DichotomyEstimate:
    window: float
    lengths: Tuple[float, ...]
    sup: float
    inf: float
    classification: DichotomyType
    k: float
    beta: float
    samples: int

    @property
    def exponent(self) -> float:
        """Representative exponent: sup for attractive, inf for repulsive, mean otherwise."""
        if self.classification == DichotomyType.ATTRACTIVE:
            return self.sup
        if self.classification == DichotomyType.REPULSIVE:
            return self.inf
        return 0.5 * (self.sup + self.inf)

    def to_record(self) -> Dict[str, Any]:
        return {"window": self.window, "lengths": list(self.lengths), "sup": self.sup, "inf": self.inf,
                "classification": self.classification.value, "k": self.k, "beta": self.beta,
                "samples": self.samples}


def _window_averages(traj: Trajectory, length: float) -> Tuple[np.ndarray, np.ndarray]:
    asc = traj.ascending()
    starts = asc.t[asc.t + length <= asc.t[-1] + 1e-9]
    ends = np.minimum(starts + length, asc.t[-1])
    increments = asc.integral_fx(ends) - np.interp(starts, asc.t, asc.int_fx)
    return starts, increments


def dichotomy_exponent(field_: ScalarField, traj: Trajectory, window: float = cfg.DICHOTOMY_WINDOW,
                       margin: float = cfg.DICHOTOMY_MARGIN, retry: bool = True) -> DichotomyEstimate:
    """Window-averaged exponents of h_x along the trajectory.

    Windows of every length >= l split into windows with length in [l, 2l], so
    the sup/inf over those lengths bound all longer windows as well.
    """
    lo, hi = traj.span
    if hi - lo < 4 * window - 1e-9:
        raise InvalidSettings(f"trajectory span {hi - lo:g} shorter than 4 windows of {window:g}")
    lengths = tuple(np.linspace(window, 2 * window, cfg.DICHOTOMY_WINDOW_LENGTHS))
    averages = []
    for length in lengths:
        _, inc = _window_averages(traj, length)
        averages.append(inc / length)
    averages = np.concatenate(averages)
    sup, inf = float(averages.max()), float(averages.min())
    if sup < -margin:
        kind = DichotomyType.ATTRACTIVE
    elif inf > margin:
        kind = DichotomyType.REPULSIVE
    else:
        kind = DichotomyType.INDETERMINATE

    if kind == DichotomyType.INDETERMINATE and retry and hi - lo >= 8 * window - 1e-9:
        logger.info("dichotomy indeterminate with window %g, retrying with %g", window, 2 * window)
        return dichotomy_exponent(field_, traj, 2 * window, margin, retry=False)

    if kind == DichotomyType.INDETERMINATE:
        k, beta = math.nan, 0.0
    else:
        beta = (abs(sup) if kind == DichotomyType.ATTRACTIVE else abs(inf)) - margin
        sign = 1.0 if kind == DichotomyType.ATTRACTIVE else -1.0
        k = 1.0
        for length in np.linspace(window / 40.0, 2 * window, 80):
            _, inc = _window_averages(traj, length)
            k = max(k, float(np.max(np.exp(sign * inc + beta * length))))
    return DichotomyEstimate(window=float(window), lengths=tuple(float(v) for v in lengths), sup=sup, inf=inf,
                             classification=kind, k=k, beta=float(beta), samples=int(averages.size))


def uniform_separation(a: Trajectory, b: Trajectory) -> float:
    """min over the shared grid of |a(t) - b(t)|."""
    lo = max(a.span[0], b.span[0])
    hi = min(a.span[1], b.span[1])
    if hi < lo:
        raise ValueError("trajectories share no time interval")
    asc = a.ascending()
    t = asc.t[(asc.t >= lo - 1e-12) & (asc.t <= hi + 1e-12)]
    if t.size == 0:
        t = np.array([lo, hi])
    diff = np.abs(asc(t) - b(t))
    return float(np.nanmin(diff))


# --- extremal and middle solutions ---

def extremal_solution(field_: ScalarField, side: Side, span: Tuple[float, float],
                      settings: Optional[AnalysisSettings] = None) -> Trajectory:
    """u (upper) or l (lower) on the span: pullback at the span start, then forward."""
    settings = settings or AnalysisSettings()
    a, b = float(span[0]), float(span[1])
    schedule = settings.horizon_schedule()
    rho = field_radius(field_, a - schedule[-1], b, settings)
    integ = settings.integrator
    cache = cache_for(settings.cache_dir)
    value, converged = pullback_limit(field_, a, side, schedule, settings.pullback_tol, integ, rho, cache=cache)
    if not converged:
        raise PullbackNotConverged(a, math.nan, schedule[-1])
    traj = integrate(field_, a, value, b, integ.with_guard(settings.guard_factor * rho), cache=cache)
    if not traj.completed:
        raise BlowUpError(traj.event_time, traj.event_sign,
                          f"{Side(side).value} solution left the guard radius at t={traj.event_time:.6g}")
    return traj


def _midpoint_start(field_: ScalarField, settings: AnalysisSettings, rho: float,
                    lower: Optional[Trajectory] = None, upper: Optional[Trajectory] = None) -> Callable[[float], float]:
    """s -> midpoint between the extremal solutions at s (reverse-pullback seeds)."""
    schedule = settings.horizon_schedule()
    integ = settings.integrator

    def start(s: float) -> float:
        if lower is not None and upper is not None and lower.covers(s, s) and upper.covers(s, s):
            return 0.5 * float(lower(s) + upper(s))
        lo, ok_lo = pullback_limit(field_, s, Side.LOWER, schedule, _START_TOL, integ, rho)
        hi, ok_hi = pullback_limit(field_, s, Side.UPPER, schedule, _START_TOL, integ, rho)
        if not (ok_lo and ok_hi):
            raise PullbackNotConverged(s, math.nan, schedule[-1])
        return 0.5 * (lo + hi)

    return start


def repulsive_solution(field_: ScalarField, anchor: float, start: Callable[[float], float],
                       settings: AnalysisSettings) -> float:
    """Value at anchor of the repulsive solution, by pullback in reversed time."""
    value, converged = reverse_pullback_limit(field_, anchor, start, settings.horizon_schedule(),
                                              settings.pullback_tol, settings.integrator,
                                              cache=cache_for(settings.cache_dir))
    if not converged:
        raise PullbackNotConverged(anchor, math.nan, settings.horizon_schedule()[-1])
    return value


def middle_solution(family: ParametricFamily, profile: TransitionProfile, clamp_r: float,
                    span: Tuple[float, float], settings: Optional[AnalysisSettings] = None,
                    future_triple: Optional["HyperbolicTriple"] = None) -> Trajectory:
    """m_Gamma on the span, possibly ending in a backward blow-up.

    The repulsive solution of the clamped-future field is located by reverse
    pullback at the span end (>= clamp_r, where clamped and transition fields
    coincide) and continued backward with the transition field.
    """
    settings = settings or AnalysisSettings()
    a, b = float(span[0]), float(span[1])
    if b < clamp_r:
        raise InvalidSettings(f"span end {b:g} must not precede the clamp time {clamp_r:g}")
    gamma_plus = profile.future_limit
    if future_triple is None:
        w = settings.dichotomy_window
        future_triple = frozen_triple(family, gamma_plus, (b, b + 8 * w), settings)
    if not future_triple.found:
        raise FutureNotInRf(f"gamma+={gamma_plus:g}: {future_triple.reason.value}")

    clamped = family.compose(profile.clamp_future(clamp_r))
    frozen = family.freeze(gamma_plus)
    schedule = settings.horizon_schedule()
    rho_future = field_radius(frozen, b, b + 2 * schedule[-1], settings)
    start = _midpoint_start(frozen, settings, rho_future, future_triple.lower, future_triple.upper)
    m_end = repulsive_solution(clamped, b, start, settings)

    transition = family.compose(profile)
    rho = field_radius(transition, a - schedule[-1], b, settings)
    traj = integrate(transition, b, m_end, a, settings.integrator.with_guard(settings.guard_factor * rho),
                     cache=cache_for(settings.cache_dir))
    if traj.blew_up:
        logger.info("middle solution blows up backward at t=%.6g (%s)", traj.event_time,
                    "+inf" if traj.event_sign > 0 else "-inf")
    return traj


# --- frozen triples ---

@dataclass
class NotFound:
    gamma: float
    reason: NotFoundReason
    detail: str = ""

    found = False

    def to_record(self) -> Dict[str, Any]:
        return {"gamma": self.gamma, "found": False, "reason": self.reason.value, "detail": self.detail}


@dataclass
class HyperbolicTriple:
    gamma: float
    lower: Trajectory
    middle: Trajectory
    upper: Trajectory
    estimates: Dict[str, DichotomyEstimate]
    separations: Dict[str, float]

    found = True

    @property
    def span(self) -> Tuple[float, float]:
        return self.lower.span

    def to_frame(self) -> pd.DataFrame:
        t = self.lower.ascending().t
        return pd.DataFrame({"t": t, "lower": self.lower(t), "middle": self.middle(t), "upper": self.upper(t)})

    def to_record(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "found": True,
            "span": list(self.span),
            "separations": dict(self.separations),
            "estimates": {k: v.to_record() for k, v in self.estimates.items()},
            "start_values": {"lower": float(self.lower.ascending().x[0]),
                             "middle": float(self.middle.ascending().x[0]),
                             "upper": float(self.upper.ascending().x[0])},
        }


TripleResult = Union[HyperbolicTriple, NotFound]


def frozen_triple(family: ParametricFamily, gamma: float, span: Tuple[float, float],
                  settings: Optional[AnalysisSettings] = None) -> TripleResult:
    """Three uniformly separated hyperbolic solutions of the frozen field, or NotFound.

    The working span is extended to at least 8 dichotomy windows.
    """
    settings = settings or AnalysisSettings()
    field_ = family.freeze(gamma)
    a = float(span[0])
    w = settings.dichotomy_window
    b = max(float(span[1]), a + 8 * w)
    eps = settings.separation_threshold
    try:
        lower_ext = extremal_solution(field_, Side.LOWER, (a, b + _LOOKAHEAD), settings)
        upper_ext = extremal_solution(field_, Side.UPPER, (a, b + _LOOKAHEAD), settings)
    except PullbackNotConverged as e:
        return NotFound(gamma, NotFoundReason.INDETERMINATE, str(e))
    lower, upper = lower_ext.restrict(a, b), upper_ext.restrict(a, b)
    sep_lu = uniform_separation(lower, upper)
    if sep_lu < eps:
        return NotFound(gamma, NotFoundReason.COLLAPSED, f"l and u separated by {sep_lu:.3e}")

    schedule = settings.horizon_schedule()
    rho = field_radius(field_, a - schedule[-1], b + 2 * schedule[-1], settings)
    try:
        m_end = repulsive_solution(field_, b, _midpoint_start(field_, settings, rho, lower_ext, upper_ext),
                                   settings)
    except PullbackNotConverged as e:
        return NotFound(gamma, NotFoundReason.INDETERMINATE, str(e))
    except BlowUpError as e:
        return NotFound(gamma, NotFoundReason.COLLAPSED, str(e))
    middle = integrate(field_, b, m_end, a, settings.integrator.with_guard(settings.guard_factor * rho),
                       cache=cache_for(settings.cache_dir))
    if not middle.completed:
        return NotFound(gamma, NotFoundReason.COLLAPSED, f"middle solution stopped: {middle.status.value}")
    middle = middle.ascending()

    t = lower.t
    gap_lm = float(np.min(middle(t) - lower.x))
    gap_mu = float(np.min(upper.x - middle(t)))
    if min(gap_lm, gap_mu) < eps:
        return NotFound(gamma, NotFoundReason.COLLAPSED,
                        f"middle solution within {min(gap_lm, gap_mu):.3e} of an extremal one")

    estimates = {
        "lower": dichotomy_exponent(field_, lower, w, settings.dichotomy_margin),
        "middle": dichotomy_exponent(field_, middle, w, settings.dichotomy_margin),
        "upper": dichotomy_exponent(field_, upper, w, settings.dichotomy_margin),
    }
    expected = {"lower": DichotomyType.ATTRACTIVE, "middle": DichotomyType.REPULSIVE,
                "upper": DichotomyType.ATTRACTIVE}
    wrong = [k for k, v in estimates.items() if v.classification != expected[k]]
    if wrong:
        return NotFound(gamma, NotFoundReason.INDETERMINATE,
                        ", ".join(f"{k} is {estimates[k].classification.value}" for k in wrong))
    triple = HyperbolicTriple(gamma=float(gamma), lower=lower, middle=middle, upper=upper, estimates=estimates,
                              separations={"lower_middle": gap_lm, "middle_upper": gap_mu, "lower_upper": sep_lu})
    logger.info("frozen triple at gamma=%g: separations %.3e/%.3e", gamma, gap_lm, gap_mu)
    return triple


@dataclass
class RfMembership:
    gamma: float
    member: bool
    h5_passed: bool
    triple: Optional[TripleResult] = None
    audit: Any = field(default=None, repr=False)

    def __bool__(self) -> bool:
        return self.member

    def to_record(self) -> Dict[str, Any]:
        return {"gamma": self.gamma, "member": self.member, "h5_passed": self.h5_passed,
                "triple": None if self.triple is None else self.triple.to_record()}


def in_Rf(family: ParametricFamily, gamma: float, span: Tuple[float, float] = (0.0, 400.0),
          settings: Optional[AnalysisSettings] = None, grids: Optional[AuditGrids] = None) -> RfMembership:
    """True iff the h5 audit passes at gamma and the frozen triple exists."""
    settings = settings or AnalysisSettings()
    audit = hypothesis_audit(family, (gamma, gamma), grids or AuditGrids.coarse())
    if not audit.h5.passed:
        return RfMembership(float(gamma), False, False, None, audit)
    triple = frozen_triple(family, gamma, span, settings)
    return RfMembership(float(gamma), bool(triple.found), True, triple, audit)


# --- continuation ---

def _kernel_weights(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """A(z) = int_0^1 v e^{zv} dv, B(z) = int_0^1 (1-v) e^{zv} dv."""
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    a = np.where(small, 0.5 + z / 3 + z ** 2 / 8 + z ** 3 / 30, (ez * (zs - 1.0) + 1.0) / zs ** 2)
    b = np.where(small, 0.5 + z / 6 + z ** 2 / 24 + z ** 3 / 120, (ez - 1.0 - zs) / zs ** 2)
    return a, b


def perturbation_norm(base_field: ScalarField, perturbed_field: ScalarField, times: np.ndarray, rho: float) -> float:
    """sup |g - h| + sup |g_x - h_x| over the sampled strip |x| <= rho."""
    t = times if len(times) <= 2001 else np.linspace(times[0], times[-1], 2001)
    x = np.linspace(-rho, rho, 201)
    T, X = t[:, None], x[None, :]
    d0 = np.max(np.abs(perturbed_field.evaluate(T, X, 0) - base_field.evaluate(T, X, 0)))
    d1 = np.max(np.abs(perturbed_field.evaluate(T, X, 1) - base_field.evaluate(T, X, 1)))
    return float(d0 + d1)


def continue_hyperbolic(base_field: ScalarField, base_solution: Trajectory, perturbed_field: ScalarField,
                        rho: float, settings: Optional[AnalysisSettings] = None) -> Trajectory:
    """Hyperbolic solution of the perturbed field near base_solution.

    Iterates y = T y for y' = a(t) y + r(t, y), a = h_x along the base solution,
    with exact exponential weights on each grid step (r linear per step).
    Repulsive bases are handled by sweeping the grid backward in time.
    """
    settings = settings or AnalysisSettings()
    asc = base_solution.ascending()
    t, xb, a, I = asc.t, asc.x, asc.fx, asc.int_fx
    if len(t) < 3:
        raise InvalidSettings("base solution needs at least three samples")
    h_base = np.asarray(base_field.evaluate(t, xb, 0), dtype=float)
    attractive = (I[-1] - I[0]) < 0
    norm = perturbation_norm(base_field, perturbed_field, t, rho)
    logger.debug("continuation: perturbation norm %.3e, %s base", norm, "attractive" if attractive else "repulsive")

    if attractive:
        z = np.diff(I)
        h = np.diff(t)
    else:
        z = I[:-1] - I[1:]
        h = t[:-1] - t[1:]
    decay = math.exp(float(np.sum(z)))
    if decay > settings.kernel_cutoff:
        logger.warning("kernel decays only to %.3e across the span; start values still influence the result", decay)
    A, B = _kernel_weights(z)
    E, HA, HB = np.exp(z), h * A, h * B

    def residual(y):
        return np.asarray(perturbed_field.evaluate(t, xb + y, 0), dtype=float) - h_base - a * y

    n = len(t)
    y = np.zeros(n)
    for iteration in range(1, settings.contraction_max_iter + 1):
        r = residual(y)
        new = np.empty(n)
        if attractive:
            new[0] = r[0] / -a[0] if a[0] < 0 else 0.0
            for i in range(1, n):
                new[i] = E[i - 1] * new[i - 1] + HA[i - 1] * r[i - 1] + HB[i - 1] * r[i]
        else:
            new[-1] = r[-1] / -a[-1] if a[-1] > 0 else 0.0
            for i in range(n - 2, -1, -1):
                new[i] = E[i] * new[i + 1] + HA[i] * r[i + 1] + HB[i] * r[i]
        if not np.all(np.isfinite(new)):
            raise ContractionFailed(f"non-finite iterate at iteration {iteration}")
        change = float(np.max(np.abs(new - y)))
        y = new
        if change < settings.contraction_tol:
            logger.debug("continuation converged in %d iterations (sup correction %.3e)",
                         iteration, float(np.max(np.abs(y))))
            return Trajectory.from_samples(perturbed_field, t, xb + y, direction=Direction.BOTH)
    raise ContractionFailed(f"iterates not Cauchy after {settings.contraction_max_iter} iterations")
