"""
Allee-effect analyses on population models: type from the dichotomy of the
zero solution, strength ratios kappa/beta, balance identities along the upper
solution, and collapse scans for growing predation or migration size.
"""
from dataclasses import dataclass, field
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, quad, trapezoid

from ..core import Config as cfg
from ..core.ErrorHandle import ModelError
from ..core.Settings import AnalysisSettings
from ..enums.Enums import AlleeType, ModelKind, Monotonicity, Side
from ..fields.Profiles import TransitionProfile
from ..fields.ScalarField import ParametricFamily, ScalarField
from ..processing.Hyperbolic import TripleResult, extremal_solution, frozen_triple
from ..processing.Integrator import Trajectory, integrate
from ..utility.parallel import map_async, map_sync
from .PopulationModels import PopulationModel

logger = logging.getLogger(__name__)

_INDICATOR_STEP = 0.01
_NONNEGATIVE_TOL = 1e-6
_COLLAPSE_PAST = 50.0


@dataclass
class IndicatorWindow:
    length: float
    sup: float
    inf: float

    def to_record(self) -> Dict[str, float]:
        return {"length": self.length, "sup": self.sup, "inf": self.inf}


@dataclass
class AlleeReport:
    allee_type: AlleeType
    gamma: float
    zero_exponent: float
    indicators: List[IndicatorWindow]
    stable: bool
    three_solutions: bool
    nonnegative_solutions: Optional[int] = None
    strength: Optional[Tuple[float, float]] = None
    triple: Optional[TripleResult] = field(default=None, repr=False, compare=False)

    @property
    def sup_indicator(self) -> float:
        return self.indicators[-1].sup

    @property
    def inf_indicator(self) -> float:
        return self.indicators[-1].inf

    def to_record(self) -> Dict[str, Any]:
        return {
            "type": self.allee_type.value,
            "gamma": self.gamma,
            "zero_exponent": self.zero_exponent,
            "indicators": [w.to_record() for w in self.indicators],
            "indicator_stable": self.stable,
            "three_solutions": self.three_solutions,
            "nonnegative_solutions": self.nonnegative_solutions,
            "strength_ratios": None if self.strength is None else list(self.strength),
            "triple": None if self.triple is None else self.triple.to_record(),
        }


def _window_extremes(t: np.ndarray, values: np.ndarray, length: float) -> Tuple[float, float]:
    """(sup, inf) of averages of values over windows of exactly the given length."""
    integral = cumulative_trapezoid(values, t, initial=0.0)
    step = t[1] - t[0]
    k = int(round(length / step))
    if k < 1 or k >= len(t):
        raise ModelError(f"window {length:g} does not fit the sampled horizon {t[-1] - t[0]:g}")
    averages = (integral[k:] - integral[:-k]) / (t[k] - t[0])
    return float(averages.max()), float(averages.min())


def _zero_slope(field_: ScalarField, t: np.ndarray) -> np.ndarray:
    return np.asarray(field_.evaluate(t, np.zeros_like(t), 1), dtype=float)


def zero_exponent(field_: ScalarField, horizon: float) -> Tuple[float, float]:
    """Integral of h_x(t, 0) over [0, horizon]: (adaptive quadrature, integrator column along x = 0)."""
    by_quad = quad(lambda s: float(field_.evaluate(s, 0.0, 1)), 0.0, horizon,
                   limit=max(200, int(horizon)), epsabs=1e-12, epsrel=1e-12)[0]
    traj = integrate(field_, 0.0, 0.0, horizon)
    return by_quad, float(traj.int_fx[-1])


def _check_zero_solution(model: PopulationModel, field_: ScalarField, t: np.ndarray):
    if not model.zero_is_solution:
        raise ModelError(f"x = 0 is not a solution of the {model.kind.value} model")
    residual = float(np.max(np.abs(field_.evaluate(t, np.zeros_like(t), 0))))
    if residual > 1e-12:
        raise ModelError(f"x = 0 is not a solution (|f(t,0)| up to {residual:.3e})")


def allee_type(model: PopulationModel, gamma: float = 0.0, horizon: float = cfg.ALLEE_HORIZON,
               settings: Optional[AnalysisSettings] = None,
               windows: Sequence[float] = cfg.INDICATOR_WINDOWS) -> AlleeReport:
    """Strong when 0 is attractive (sup of window averages of h_x(t,0) < 0), weak when repulsive."""
    settings = settings or AnalysisSettings()
    field_ = model.family.freeze(gamma)
    t = np.linspace(0.0, horizon, int(round(horizon / _INDICATOR_STEP)) + 1)
    _check_zero_solution(model, field_, t)
    slope = _zero_slope(field_, t)
    usable = [w for w in sorted(windows) if w <= horizon / 2]
    if not usable:
        raise ModelError(f"horizon {horizon:g} too short for indicator windows {list(windows)}")
    indicators = [IndicatorWindow(float(w), *_window_extremes(t, slope, w)) for w in usable]
    stable = True
    if len(indicators) > 1:
        a, b = indicators[-2], indicators[-1]
        scale = max(1.0, abs(b.sup), abs(b.inf))
        stable = abs(a.sup - b.sup) <= cfg.INDICATOR_STABILITY * scale and \
            abs(a.inf - b.inf) <= cfg.INDICATOR_STABILITY * scale
        if not stable:
            logger.warning("Allee indicators still moving between windows %g and %g", a.length, b.length)

    last = indicators[-1]
    if last.sup < 0:
        kind = AlleeType.STRONG
    elif last.inf > 0:
        kind = AlleeType.WEAK
    else:
        kind = AlleeType.INDETERMINATE

    triple = None
    nonnegative = None
    if field_.state_min is None:
        triple = frozen_triple(model.family, gamma, (0.0, 8 * settings.dichotomy_window), settings)
    else:
        # rational terms are singular below state_min; no search over the whole line
        logger.info("half-line model %s: three-solution search skipped", model.kind.value)
    if triple is not None and triple.found:
        nonnegative = sum(int(np.min(s.x) >= -_NONNEGATIVE_TOL) for s in (triple.lower, triple.middle, triple.upper))
    report = AlleeReport(kind, float(gamma), float(trapezoid(slope, t) / horizon), indicators, stable,
                         triple is not None and bool(triple.found), nonnegative, triple=triple)
    if kind == AlleeType.STRONG and report.three_solutions and nonnegative == 3:
        report.strength = strength_ratios(model, gamma, horizon, settings, report=report)
    logger.info("Allee type at gamma=%g: %s (sup %.4g, inf %.4g, three solutions: %s)",
                gamma, kind.value, last.sup, last.inf, report.three_solutions)
    return report


def strength_ratios(model: PopulationModel, gamma: float = 0.0, horizon: float = cfg.ALLEE_HORIZON,
                    settings: Optional[AnalysisSettings] = None,
                    report: Optional[AlleeReport] = None) -> Tuple[float, float]:
    """(min, max) window averages of kappa/beta: middle over upper solution."""
    settings = settings or AnalysisSettings()
    if report is None:
        report = allee_type(model, gamma, horizon, settings)
    if report.allee_type != AlleeType.STRONG or not report.three_solutions:
        raise ModelError(f"strength ratios need a strong Allee effect with three solutions "
                         f"(got {report.allee_type.value}, three solutions: {report.three_solutions})")
    triple = frozen_triple(model.family, gamma, (0.0, horizon), settings)
    if not triple.found:
        raise ModelError(f"no hyperbolic triple over [0, {horizon:g}]: {triple.reason.value}")
    t = np.linspace(0.0, horizon, int(round(horizon / cfg.DEFAULT_OUTPUT_STEP)) + 1)
    ratio = triple.middle(t) / triple.upper(t)
    length = max(w for w in cfg.INDICATOR_WINDOWS if w <= horizon / 2) if horizon >= 2 * min(
        cfg.INDICATOR_WINDOWS) else horizon / 2
    high, low = _window_extremes(t, ratio, length)
    return low, high


def _upper_solution(model: PopulationModel, gamma: float, horizon: float,
                    settings: AnalysisSettings) -> Trajectory:
    if not model.has("S"):
        raise ModelError("balance identities need a multiplicative model (r, K, S)")
    return extremal_solution(model.family.freeze(gamma), Side.UPPER, (0.0, horizon), settings)


def balance_average(model: PopulationModel, gamma: float = 0.0, horizon: float = cfg.ALLEE_HORIZON,
                    settings: Optional[AnalysisSettings] = None) -> float:
    """Time average of r (K - beta)(beta - S)/K^2 along the upper solution beta; tends to 0."""
    settings = settings or AnalysisSettings()
    upper = _upper_solution(model, gamma, horizon, settings)
    r, K, S = (model.coefficient(k).values(upper.t) for k in ("r", "K", "S"))
    integrand = r * (K - upper.x) * (upper.x - S) / K ** 2
    return float(trapezoid(integrand, upper.t) / (upper.t[-1] - upper.t[0]))


@dataclass
class CapacityCrossings:
    crossings: int
    max_deviation: float
    constant_equal: bool

    def to_record(self) -> Dict[str, Any]:
        return {"crossings": self.crossings, "max_deviation": self.max_deviation,
                "constant_equal": self.constant_equal}


def capacity_crossings(model: PopulationModel, gamma: float = 0.0, horizon: float = cfg.ALLEE_HORIZON,
                       settings: Optional[AnalysisSettings] = None, tol: float = 1e-6) -> CapacityCrossings:
    """Sign changes of K - beta along the upper solution."""
    settings = settings or AnalysisSettings()
    upper = _upper_solution(model, gamma, horizon, settings)
    diff = model.coefficient("K").values(upper.t) - upper.x
    deviation = float(np.max(np.abs(diff)))
    signs = np.sign(diff[np.abs(diff) > tol])
    crossings = int(np.count_nonzero(np.diff(signs))) if signs.size > 1 else 0
    return CapacityCrossings(crossings, deviation, deviation <= tol)


# --- collapse scan ---

@dataclass
class CollapsePoint:
    d: float
    tail: float
    collapsed: bool
    status: str
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)

    def to_record(self) -> Dict[str, Any]:
        return {"d": self.d, "tail": self.tail, "collapsed": self.collapsed, "status": self.status}


@dataclass
class CollapseScan:
    points: List[CollapsePoint]
    bracket: Optional[Tuple[float, float]]
    monotone: bool
    horizon: float

    def to_record(self) -> Dict[str, Any]:
        return {"horizon": self.horizon, "monotone": self.monotone,
                "bracket": None if self.bracket is None else list(self.bracket),
                "points": [p.to_record() for p in self.points]}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"d": [p.d for p in self.points], "tail": [p.tail for p in self.points],
                             "collapsed": [p.collapsed for p in self.points]})

    def curves_frame(self, step: float = 0.5) -> pd.DataFrame:
        """u_Gamma for every d on a common grid (figure data)."""
        curves = [p for p in self.points if p.trajectory is not None]
        if not curves:
            return pd.DataFrame()
        lo = max(p.trajectory.span[0] for p in curves)
        hi = min(p.trajectory.span[1] for p in curves)
        t = np.arange(lo, hi + 1e-9, step)
        data = {"t": t}
        for p in curves:
            data[f"u_d={p.d:g}"] = p.trajectory(t)
        return pd.DataFrame(data)


def collapse_point(family: ParametricFamily, profile: TransitionProfile, d: float, horizon: float,
                   settings: AnalysisSettings) -> CollapsePoint:
    field_ = family.compose(profile.scale(d))
    upper = extremal_solution(field_, Side.UPPER, (-_COLLAPSE_PAST, horizon), settings)
    tail = upper.restrict(horizon - settings.tail_fraction * horizon, horizon)
    value = float(np.mean(tail.x))
    collapsed = value < settings.extinction_eps
    logger.debug("collapse scan d=%g: tail %.6g (%s)", d, value, "collapse" if collapsed else "persists")
    return CollapsePoint(float(d), value, collapsed, "collapse" if collapsed else "persistence", upper)


def _scan_result(points: List[CollapsePoint], family: ParametricFamily, horizon: float) -> CollapseScan:
    points = sorted(points, key=lambda p: p.d)
    bracket = None
    for prev, cur in zip(points, points[1:]):
        if not prev.collapsed and cur.collapsed:
            bracket = (prev.d, cur.d)
            break
    tails = np.array([p.tail for p in points])
    if family.monotonicity == Monotonicity.NONINCREASING:
        monotone = bool(np.all(np.diff(tails) <= 1e-9))
    elif family.monotonicity == Monotonicity.NONDECREASING:
        monotone = bool(np.all(np.diff(tails) >= -1e-9))
    else:
        monotone = True
    if not monotone:
        logger.warning("collapse scan tails are not monotone in d")
    return CollapseScan(points, bracket, monotone, float(horizon))


def _collapse_jobs(model, profile, d_grid, horizon, settings):
    if model.kind not in (ModelKind.HOLLING3_FAMILY, ModelKind.MIGRATION_FAMILY):
        raise ModelError(f"collapse scans need a holling3 or migration family, got {model.kind.value}")
    return [(model.family, profile, float(d), float(horizon), settings) for d in d_grid]


def collapse_scan(model: PopulationModel, profile: TransitionProfile, d_grid: Sequence[float],
                  horizon: float = cfg.COLLAPSE_TAIL_HORIZON,
                  settings: Optional[AnalysisSettings] = None) -> CollapseScan:
    """Tail of u_Gamma for Gamma scaled by each d; brackets the first persistence -> collapse switch."""
    settings = settings or AnalysisSettings()
    jobs = _collapse_jobs(model, profile, d_grid, horizon, settings)
    points = map_sync(collapse_point, jobs, settings.workers, settings.progress, desc="collapse")
    return _scan_result(points, model.family, horizon)


async def collapse_scan_async(model: PopulationModel, profile: TransitionProfile, d_grid: Sequence[float],
                              horizon: float = cfg.COLLAPSE_TAIL_HORIZON,
                              settings: Optional[AnalysisSettings] = None) -> CollapseScan:
    settings = settings or AnalysisSettings()
    jobs = _collapse_jobs(model, profile, d_grid, horizon, settings)
    points = await map_async(collapse_point, jobs, settings.workers, settings.progress, desc="collapse")
    return _scan_result(points, model.family, horizon)


def _has_positive_triple(family: ParametricFamily, gamma: float, span: Tuple[float, float],
                         settings: AnalysisSettings) -> bool:
    triple = frozen_triple(family, gamma, span, settings)
    return bool(triple.found) and all(np.min(s.x) >= -_NONNEGATIVE_TOL
                                      for s in (triple.lower, triple.middle, triple.upper))


def frozen_collapse_bracket(model: PopulationModel, gamma_hi: Optional[float] = None, points: int = 9,
                            span: Tuple[float, float] = (0.0, 400.0),
                            settings: Optional[AnalysisSettings] = None) -> Optional[Tuple[float, float]]:
    """Bracket of the predation weight where the frozen Holling III family loses its nonnegative triple."""
    settings = settings or AnalysisSettings()
    if model.kind != ModelKind.HOLLING3_FAMILY:
        raise ModelError("frozen collapse brackets are defined for the Holling III family only")
    hi = model.i_beta_sup() if gamma_hi is None else float(gamma_hi)
    grid = np.linspace(0.0, hi, points)
    jobs = [(model.family, float(g), span, settings) for g in grid]
    found = map_sync(_has_positive_triple, jobs, settings.workers, settings.progress, desc="frozen")
    if not found[0]:
        raise ModelError("no nonnegative hyperbolic triple at gamma = 0")
    switch = next((i for i, ok in enumerate(found) if not ok), None)
    if switch is None:
        logger.info("frozen triple persists up to gamma=%g", hi)
        return None
    lo, hi = float(grid[switch - 1]), float(grid[switch])
    while hi - lo > settings.bisection_tol:
        mid = 0.5 * (lo + hi)
        if _has_positive_triple(model.family, mid, span, settings):
            lo = mid
        else:
            hi = mid
    logger.info("frozen collapse bracketed in (%g, %g)", lo, hi)
    return lo, hi
