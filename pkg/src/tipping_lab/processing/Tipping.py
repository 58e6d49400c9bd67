"""
Parametric tipping: scans of the classification gap over rate, phase or size
parameters, bisection of its sign changes, and shift problems
x' = h(t, x - d Gamma(t)) reduced to y' = h(t, y) - d Gamma'(t).
"""
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import warnings

import numpy as np
import pandas as pd

from ..core import Config as cfg
from ..core.ErrorHandle import InvalidSettings, NoSignChange, NonMonotonePhi, TippingLabError
from ..core.Settings import AnalysisSettings
from ..enums.Enums import CaseName, ParameterKind
from ..fields.Coefficients import TimeDerivative
from ..fields.Profiles import TransitionProfile
from ..fields.ScalarField import ParametricFamily, ScalarField, additive_family
from ..utility.parallel import map_async, map_sync
from .Classify import FrozenTriples, analysis_span, classify_detailed, gap_at_witness, transition_solutions
from .Hyperbolic import frozen_triple
from .Integrator import Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProfileBuilder:
    """Picklable parameter -> profile map."""
    base: TransitionProfile
    kind: ParameterKind

    def __call__(self, p: float) -> TransitionProfile:
        if self.kind == ParameterKind.RATE:
            return self.base.rate(p)
        if self.kind == ParameterKind.PHASE:
            return self.base.phase(p)
        if self.kind == ParameterKind.SIZE_SPLIT:
            return self.base.split(p)
        return self.base.derivative_profile(-p)


@dataclass
class SweepPoint:
    parameter: float
    case: CaseName
    gap: float
    residual_l: float
    residual_u: float
    reason: str = ""

    def to_record(self) -> Dict[str, Any]:
        return {"parameter": self.parameter, "case": self.case.value, "gap": self.gap,
                "residual_l": self.residual_l, "residual_u": self.residual_u, "reason": self.reason}


@dataclass
class CriticalValue:
    value: float
    half_width: float
    bracket: Tuple[float, float]
    cases: Tuple[CaseName, CaseName]

    def to_record(self) -> Dict[str, Any]:
        return {"value": self.value, "half_width": self.half_width, "bracket": list(self.bracket),
                "cases": [c.value for c in self.cases]}


@dataclass
class TippingResult:
    kind: ParameterKind
    samples: List[SweepPoint]
    critical: List[CriticalValue] = field(default_factory=list)
    monotone: bool = True
    inside_rf: bool = False
    case_map: Dict[str, str] = field(default_factory=dict)
    pair: Optional[Tuple[float, float]] = None

    @property
    def values(self) -> List[float]:
        return [c.value for c in self.critical]

    def to_record(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "critical": [c.to_record() for c in self.critical],
            "pair": None if self.pair is None else list(self.pair),
            "case_map": dict(self.case_map),
            "monotone": self.monotone,
            "inside_rf": self.inside_rf,
            "phi_samples": [s.to_record() for s in self.samples],
        }

    def to_frame(self) -> pd.DataFrame:
        return sweep_frame(self.samples)


def sweep_frame(points: Sequence[SweepPoint]) -> pd.DataFrame:
    """Sweep CSV layout: parameter, case, gap, residual_u, residual_l."""
    return pd.DataFrame({
        "parameter": [p.parameter for p in points],
        "case": [p.case.value for p in points],
        "gap": [p.gap for p in points],
        "residual_u": [p.residual_u for p in points],
        "residual_l": [p.residual_l for p in points],
    })


# --- gap and sweep evaluation ---

def shared_triples(family: ParametricFamily, builder, parameters: Sequence[float],
                   span: Optional[Tuple[float, float]] = None,
                   settings: Optional[AnalysisSettings] = None) -> FrozenTriples:
    """Frozen triples computed once for a scan whose profiles share their limits.

    The future triple covers the tail window of every parameter's span.
    """
    settings = settings or AnalysisSettings()
    try:
        profiles = [builder(float(p)) for p in parameters]
        limits = {profile.limits for profile in profiles}
        if len(limits) != 1:
            return FrozenTriples()
        gamma_minus, gamma_plus = limits.pop()
        spans = [span or analysis_span(profile, settings)[0] for profile in profiles]
    except TippingLabError as e:
        logger.warning("frozen triples not shared: %s", e)
        return FrozenTriples()
    tail = min(b - settings.tail_fraction * (b - a) for a, b in spans)
    end = max(b for _, b in spans)
    future = frozen_triple(family, gamma_plus, (tail, end), settings)
    past = None
    if gamma_minus != gamma_plus:
        start = min(a for a, _ in spans)
        past = frozen_triple(family, gamma_minus, (start, start + 8 * settings.dichotomy_window), settings)
    logger.info("shared frozen triples for %d parameters (future over [%.6g, %.6g])", len(profiles), tail, end)
    return FrozenTriples(past=past, future=future)


def gap_function(family: ParametricFamily, builder, p: float, span: Optional[Tuple[float, float]] = None,
                 settings: Optional[AnalysisSettings] = None,
                 triples: Optional[FrozenTriples] = None) -> float:
    """Signed gap at parameter p: positive on the tracking side, negative after tipping."""
    profile = builder(p)
    future = triples.future if triples is not None else None
    sol = transition_solutions(family, profile, span, settings, future=future)
    return gap_at_witness(sol, profile)[0]


def evaluate_point(family: ParametricFamily, builder, p: float, span: Optional[Tuple[float, float]],
                   settings: AnalysisSettings, triples: Optional[FrozenTriples] = None) -> SweepPoint:
    """Full classification at one parameter; analysis errors become Unclassifiable points."""
    try:
        label = classify_detailed(family, builder(p), span, settings, triples)
    except TippingLabError as e:
        logger.warning("parameter %g: %s", p, e)
        return SweepPoint(float(p), CaseName.UNCLASSIFIABLE, math.nan, math.nan, math.nan,
                          f"{type(e).__name__}: {e}")
    res = label.residuals
    return SweepPoint(float(p), label.case, label.gap,
                      min(res["lower_vs_lower"], res["lower_vs_middle"], res["lower_vs_upper"]),
                      min(res["upper_vs_lower"], res["upper_vs_middle"], res["upper_vs_upper"]),
                      label.reason)


def _sweep_jobs(family, builder, parameters, span, settings, triples):
    if triples is None:
        triples = shared_triples(family, builder, parameters, span, settings)
    return [(family, builder, float(p), span, settings, triples) for p in parameters]


async def sweep_async(family: ParametricFamily, builder, parameters: Sequence[float],
                      span: Optional[Tuple[float, float]] = None,
                      settings: Optional[AnalysisSettings] = None,
                      triples: Optional[FrozenTriples] = None) -> List[SweepPoint]:
    """Classification at every parameter (process pool when workers > 1), sorted by parameter."""
    settings = settings or AnalysisSettings()
    points = await map_async(evaluate_point, _sweep_jobs(family, builder, parameters, span, settings, triples),
                             settings.workers, settings.progress, desc="sweep")
    return sorted(points, key=lambda pt: pt.parameter)


def sweep(family: ParametricFamily, builder, parameters: Sequence[float],
          span: Optional[Tuple[float, float]] = None,
          settings: Optional[AnalysisSettings] = None,
          triples: Optional[FrozenTriples] = None) -> List[SweepPoint]:
    settings = settings or AnalysisSettings()
    points = map_sync(evaluate_point, _sweep_jobs(family, builder, parameters, span, settings, triples),
                      settings.workers, settings.progress, desc="sweep")
    return sorted(points, key=lambda pt: pt.parameter)


# --- scan grids ---

def rate_grid(c_lo: float, c_hi: float, per_decade: int = cfg.RATE_SCAN_PER_DECADE) -> np.ndarray:
    if not 0 < c_lo < c_hi:
        raise InvalidSettings(f"rate range must satisfy 0 < c_lo < c_hi, got [{c_lo}, {c_hi}]")
    n = max(2, int(math.ceil(per_decade * math.log10(c_hi / c_lo))) + 1)
    return np.geomspace(c_lo, c_hi, n)


def linear_grid(lo: float, hi: float, points: int = cfg.SIZE_SCAN_POINTS, include_zero: bool = False) -> np.ndarray:
    if not lo < hi:
        raise InvalidSettings(f"scan range must satisfy lo < hi, got [{lo}, {hi}]")
    grid = np.linspace(lo, hi, points)
    if include_zero and lo < 0 < hi:
        grid = np.union1d(grid, [0.0])
    return grid


# --- generic engine ---

def _sign_changes(points: Sequence[SweepPoint]) -> List[Tuple[SweepPoint, SweepPoint]]:
    valid = [p for p in points if math.isfinite(p.gap) and p.gap != 0.0]
    return [(a, b) for a, b in zip(valid, valid[1:]) if (a.gap > 0) != (b.gap > 0)]


def _is_monotone(points: Sequence[SweepPoint]) -> bool:
    gaps = np.array([p.gap for p in points if math.isfinite(p.gap)])
    if gaps.size < 3:
        return True
    d = np.diff(gaps)
    tiny = 1e-12 * max(1.0, float(np.max(np.abs(gaps))))
    return bool(np.all(d >= -tiny) or np.all(d <= tiny))


def _profile_inside(profile: TransitionProfile, rf_interval: Optional[Tuple[float, float]]) -> bool:
    if rf_interval is None:
        return False
    lo, hi = profile.extrema()
    return rf_interval[0] <= lo and hi <= rf_interval[1]


def bisect_bracket(phi: Callable[[float], float], lo: float, hi: float, tol: float) -> Tuple[float, float, float]:
    """Bisection of a sign change of phi on [lo, hi] down to a half-width <= tol.

    Returns (midpoint, lo, hi) of the final bracket.
    """
    f_lo = phi(lo)
    if f_lo * phi(hi) > 0:
        raise NoSignChange(f"no sign change on [{lo:g}, {hi:g}]")
    while 0.5 * (hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        f_mid = phi(mid)
        if f_lo * f_mid > 0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lo, hi


def locate_tipping(family: ParametricFamily, builder, grid: Sequence[float], kind: ParameterKind,
                   tol: Optional[float] = None, settings: Optional[AnalysisSettings] = None,
                   span: Optional[Tuple[float, float]] = None,
                   rf_interval: Optional[Tuple[float, float]] = None,
                   triples: Optional[FrozenTriples] = None) -> TippingResult:
    """Scan the grid, then bisect every sign change of the gap to tol.

    Frozen triples are computed once and reused by every scan point and bisection step.
    """
    settings = settings or AnalysisSettings()
    tol = tol or settings.bisection_tol
    if triples is None:
        triples = shared_triples(family, builder, grid, span, settings)
    points = sweep(family, builder, grid, span, settings, triples)
    monotone = _is_monotone(points)
    if not monotone:
        warnings.warn(f"sampled gap over {kind.value} is not monotone", NonMonotonePhi)

    base = getattr(builder, "base", None)
    if base is not None and kind in (ParameterKind.RATE, ParameterKind.PHASE) and _profile_inside(base, rf_interval):
        # the profile never leaves R_f: tracking for every parameter
        negative = [p.parameter for p in points if math.isfinite(p.gap) and p.gap < 0]
        if negative:
            logger.warning("negative gap at %s although the profile stays inside R_f", negative)
        return TippingResult(kind, points, [], monotone, inside_rf=True)

    changes = _sign_changes(points)
    if not changes:
        raise NoSignChange(f"gap keeps its sign over {kind.value} in [{grid[0]:g}, {grid[-1]:g}]")
    if len(changes) > 1:
        logger.warning("%d sign changes over %s; reporting all", len(changes), kind.value)

    memo: Dict[float, float] = {p.parameter: p.gap for p in points}

    def phi(p: float) -> float:
        if p not in memo:
            memo[p] = gap_function(family, builder, p, span, settings, triples)
            logger.debug("gap(%s=%.10g) = %.6e", kind.value, p, memo[p])
        return memo[p]

    critical = []
    for left, right in changes:
        value, lo, hi = bisect_bracket(phi, left.parameter, right.parameter, tol)
        critical.append(CriticalValue(float(value), 0.5 * (hi - lo), (left.parameter, right.parameter),
                                      (left.case, right.case)))
        logger.info("critical %s: %.10g +- %.3g (bracket [%g, %g], %s -> %s)", kind.value, value, 0.5 * (hi - lo),
                    left.parameter, right.parameter, left.case.value, right.case.value)
    return TippingResult(kind, points, critical, monotone)


def find_rate_tipping(family: ParametricFamily, profile: TransitionProfile, c_lo: float, c_hi: float,
                      tol: Optional[float] = None, settings: Optional[AnalysisSettings] = None,
                      rf_interval: Optional[Tuple[float, float]] = None) -> TippingResult:
    settings = settings or AnalysisSettings()
    grid = rate_grid(c_lo, c_hi, settings.rate_scan_per_decade)
    return locate_tipping(family, ProfileBuilder(profile, ParameterKind.RATE), grid, ParameterKind.RATE,
                          tol, settings, rf_interval=rf_interval)


def find_phase_tipping(family: ParametricFamily, profile: TransitionProfile, c_lo: float, c_hi: float,
                       tol: Optional[float] = None, settings: Optional[AnalysisSettings] = None,
                       rf_interval: Optional[Tuple[float, float]] = None) -> TippingResult:
    settings = settings or AnalysisSettings()
    grid = linear_grid(c_lo, c_hi, settings.size_scan_points)
    return locate_tipping(family, ProfileBuilder(profile, ParameterKind.PHASE), grid, ParameterKind.PHASE,
                          tol, settings, rf_interval=rf_interval)


def _size_pair(result: TippingResult) -> TippingResult:
    below = [c for c in result.critical if c.value < 0]
    above = [c for c in result.critical if c.value > 0]
    if not below or not above:
        raise NoSignChange(f"{result.kind.value}: need crossings on both sides of 0, "
                           f"found {[round(c.value, 6) for c in result.critical]}")
    d_minus = max(below, key=lambda c: c.value)
    d_plus = min(above, key=lambda c: c.value)
    outer_lo = [p for p in result.samples if p.parameter < d_minus.value]
    outer_hi = [p for p in result.samples if p.parameter > d_plus.value]
    case_map = {
        "below": outer_lo[0].case.value if outer_lo else None,
        "between": CaseName.A.value,
        "above": outer_hi[-1].case.value if outer_hi else None,
    }
    return replace(result, pair=(d_minus.value, d_plus.value), case_map=case_map)


def find_size_tipping(family: ParametricFamily, profile: TransitionProfile, d_lo: float, d_hi: float,
                      tol: Optional[float] = None, settings: Optional[AnalysisSettings] = None) -> TippingResult:
    """(d-, d+) for Gamma_d = Delta1 + d Delta2: tracking strictly between them."""
    settings = settings or AnalysisSettings()
    if not d_lo < 0 < d_hi:
        raise InvalidSettings(f"size range must contain 0 in its interior, got [{d_lo}, {d_hi}]")
    profile.split_orientation()
    grid = linear_grid(d_lo, d_hi, settings.size_scan_points, include_zero=True)
    result = locate_tipping(family, ProfileBuilder(profile, ParameterKind.SIZE_SPLIT), grid,
                            ParameterKind.SIZE_SPLIT, tol, settings)
    return _size_pair(result)


# --- shift problems ---

def shift_field(h: ScalarField, profile: TransitionProfile, d: float) -> ScalarField:
    """y' = h(t, y) - d Gamma'(t), equivalent to x' = h(t, x - d Gamma(t)) with x = y + d Gamma."""
    if d == 0:
        return h
    profile.expression.dt(0.0)
    return h.with_forcing(TimeDerivative(profile.expression) * (-float(d)))


def shift_back(traj: Trajectory, profile: TransitionProfile, d: float) -> Trajectory:
    """x = y + d Gamma(t); the h_x integral is unchanged."""
    shift = float(d) * profile.expression.values(traj.t)
    slope = float(d) * profile.expression.dt_values(traj.t) if d else 0.0
    return replace(traj, x=traj.x + shift, dxdt=traj.dxdt + slope, x0=float(traj.x[0] + shift[0]))


def find_shift_tipping(h: ScalarField, profile: TransitionProfile, d_lo: float, d_hi: float,
                       tol: Optional[float] = None, settings: Optional[AnalysisSettings] = None) -> TippingResult:
    """(d-, d+) for x' = h(t, x - d Gamma(t))."""
    settings = settings or AnalysisSettings()
    if not d_lo < 0 < d_hi:
        raise InvalidSettings(f"shift range must contain 0 in its interior, got [{d_lo}, {d_hi}]")
    profile.derivative_profile()
    grid = linear_grid(d_lo, d_hi, settings.size_scan_points, include_zero=True)
    result = locate_tipping(additive_family(h), ProfileBuilder(profile, ParameterKind.SIZE_SHIFT), grid,
                            ParameterKind.SIZE_SHIFT, tol, settings)
    return _size_pair(result)
