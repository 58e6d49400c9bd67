"""
Case classification of transition equations x' = f(t, x, Gamma(t)).

Two criteria are evaluated and cross-checked: the sign of
min(m - l, u - m) at a witness time, and which future frozen solution each
extremal solution tracks over the tail window.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core import Config as cfg
from ..core.ErrorHandle import FutureNotInRf, InconsistentCriteria, InvalidSettings, PastNotInRf
from ..core.Settings import AnalysisSettings
from ..enums.Enums import CaseName, Side
from ..fields.Profiles import TransitionProfile
from ..fields.ScalarField import ParametricFamily
from ..providers.CacheManager import cache_for
from .Hyperbolic import (HyperbolicTriple, TripleResult, extremal_solution, field_radius, frozen_triple,
                         middle_solution)
from .Integrator import Trajectory, integrate

logger = logging.getLogger(__name__)

RESIDUAL_KEYS = ("lower_vs_lower", "lower_vs_middle", "lower_vs_upper",
                 "upper_vs_lower", "upper_vs_middle", "upper_vs_upper")
CSV_COLUMNS = ("case", "gap", "t_gamma") + RESIDUAL_KEYS

# (tracked by l, tracked by u) -> case
_TAIL_CASES = {
    ("lower", "upper"): CaseName.A,
    ("middle", "upper"): CaseName.B1,
    ("lower", "middle"): CaseName.B2,
    ("upper", "upper"): CaseName.C1,
    ("lower", "lower"): CaseName.C2,
}
_ADJACENT = {
    CaseName.B1: {CaseName.A, CaseName.C1},
    CaseName.B2: {CaseName.A, CaseName.C2},
}


@dataclass
class CaseLabel:
    case: CaseName
    gap: float
    t_gamma: float
    residuals: Dict[str, float]
    span: Tuple[float, float]
    clamp_r: float
    reason: str = ""
    gap_case: Optional[CaseName] = None
    tail_case: Optional[CaseName] = None
    past_checked: bool = False
    lower: Optional[Trajectory] = field(default=None, repr=False, compare=False)
    middle: Optional[Trajectory] = field(default=None, repr=False, compare=False)
    upper: Optional[Trajectory] = field(default=None, repr=False, compare=False)
    future: Optional[HyperbolicTriple] = field(default=None, repr=False, compare=False)

    @property
    def classified(self) -> bool:
        return self.case != CaseName.UNCLASSIFIABLE

    @property
    def tipped(self) -> bool:
        return self.case in (CaseName.C1, CaseName.C2, CaseName.B1, CaseName.B2)

    def to_record(self) -> Dict[str, Any]:
        return {
            "case": self.case.value,
            "reason": self.reason,
            "gap": self.gap,
            "t_gamma": self.t_gamma,
            "residuals": dict(self.residuals),
            "span": list(self.span),
            "clamp_r": self.clamp_r,
            "gap_case": None if self.gap_case is None else self.gap_case.value,
            "tail_case": None if self.tail_case is None else self.tail_case.value,
            "past_checked": self.past_checked,
            "middle_status": None if self.middle is None else self.middle.status.value,
            "middle_event_time": None if self.middle is None else self.middle.event_time,
        }

    def to_csv_row(self) -> str:
        values = [self.case.value, _fmt(self.gap), _fmt(self.t_gamma)]
        values += [_fmt(self.residuals.get(k, math.nan)) for k in RESIDUAL_KEYS]
        return ",".join(values)

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_COLUMNS)

    def to_frame(self) -> pd.DataFrame:
        """l, m, u on the grid of l; m is NaN where it is not defined."""
        if self.lower is None:
            return pd.DataFrame(columns=["t", "lower", "middle", "upper"])
        t = self.lower.t
        middle = np.full_like(t, np.nan)
        if self.middle is not None:
            lo, hi = self.middle.span
            inside = (t >= lo) & (t <= hi)
            middle[inside] = self.middle(t[inside])
        return pd.DataFrame({"t": t, "lower": self.lower.x, "middle": middle, "upper": self.upper(t)})


def _fmt(value: float) -> str:
    return cfg.FLOAT_FORMAT % value


def analysis_span(profile: TransitionProfile, settings: AnalysisSettings) -> Tuple[Tuple[float, float], float]:
    """((a, b), clamp_r): clamp_r is the profile horizon, padded on both sides."""
    r = profile.horizon(settings.profile_tol)
    if r > settings.max_span:
        logger.warning("profile horizon %.4g exceeds max_span %.4g; truncating", r, settings.max_span)
        r = settings.max_span
    pad = max(cfg.SPAN_PAD_MIN, cfg.SPAN_PAD_FRACTION * r)
    return (-r - pad, r + pad), r


def extended_span(span: Tuple[float, float], clamp_r: float,
                  settings: AnalysisSettings) -> Optional[Tuple[float, float]]:
    """The span with its future padding doubled, or None past the longest pullback horizon."""
    a, b = float(span[0]), float(span[1])
    pad = max(b - clamp_r, cfg.SPAN_PAD_MIN)
    if 2 * pad > settings.horizon_schedule()[-1]:
        return None
    return a, clamp_r + 2 * pad


@dataclass
class FrozenTriples:
    """Frozen triples at gamma- and gamma+ shared by the classifications of one scan."""
    past: Optional[TripleResult] = None
    future: Optional[TripleResult] = None

    def past_for(self, gamma: float) -> Optional[TripleResult]:
        if self.past is not None and self.past.gamma == gamma:
            return self.past
        return None


@dataclass
class TransitionSolutions:
    lower: Trajectory
    middle: Trajectory
    upper: Trajectory
    future: HyperbolicTriple
    span: Tuple[float, float]
    clamp_r: float


def transition_solutions(family: ParametricFamily, profile: TransitionProfile,
                         span: Optional[Tuple[float, float]] = None,
                         settings: Optional[AnalysisSettings] = None,
                         future: Optional[TripleResult] = None) -> TransitionSolutions:
    """l_Gamma, m_Gamma, u_Gamma on the span plus the future frozen triple over the tail.

    A precomputed future triple is reused when it belongs to gamma+ and covers the tail.
    """
    settings = settings or AnalysisSettings()
    default_span, clamp_r = analysis_span(profile, settings)
    if span is None:
        span = default_span
    a, b = float(span[0]), float(span[1])
    if b < clamp_r:
        raise InvalidSettings(f"span end {b:g} precedes the clamp horizon {clamp_r:g}")
    tail_start = b - settings.tail_fraction * (b - a)
    if future is not None and future.gamma != profile.future_limit:
        future = None
    if future is None or (future.found and not future.lower.covers(tail_start, b)):
        future = frozen_triple(family, profile.future_limit, (tail_start, b), settings)
    if not future.found:
        raise FutureNotInRf(f"gamma+={profile.future_limit:g}: {future.reason.value} ({future.detail})")

    transition = family.compose(profile)
    lower = extremal_solution(transition, Side.LOWER, (a, b), settings)
    upper = extremal_solution(transition, Side.UPPER, (a, b), settings)
    middle = middle_solution(family, profile, clamp_r, (a, b), settings, future_triple=future)
    return TransitionSolutions(lower, middle.ascending(), upper, future, (a, b), clamp_r)


def gap_at_witness(sol: TransitionSolutions, profile: TransitionProfile) -> Tuple[float, float, float, float]:
    """(gap, witness time, m - l, u - m) at t_Gamma, or at the earliest time m is defined."""
    times = sol.lower.t
    t_gamma = profile.steepest_time(times)
    m_start = sol.middle.span[0]
    t_w = max(t_gamma, m_start)
    below = float(sol.middle(t_w) - sol.lower(t_w))
    above = float(sol.upper(t_w) - sol.middle(t_w))
    return min(below, above), t_w, below, above


def _gap_case(below: float, above: float, tol_b: float) -> CaseName:
    gap = min(below, above)
    if abs(gap) < tol_b:
        return CaseName.B1 if abs(below) <= abs(above) else CaseName.B2
    if gap > 0:
        return CaseName.A
    return CaseName.C1 if below < above else CaseName.C2


def tail_residuals(sol: TransitionSolutions, tail_fraction: float) -> Dict[str, float]:
    a, b = sol.span
    tail = sol.lower.restrict(b - tail_fraction * (b - a), b).t
    residuals = {}
    for name, traj in (("lower", sol.lower), ("upper", sol.upper)):
        values = traj(tail)
        for other, ref in (("lower", sol.future.lower), ("middle", sol.future.middle),
                           ("upper", sol.future.upper)):
            residuals[f"{name}_vs_{other}"] = float(np.nanmax(np.abs(values - ref(tail))))
    return residuals


def _tracked(residuals: Dict[str, float], name: str, tol: float) -> List[str]:
    return [other for other in ("lower", "middle", "upper") if residuals[f"{name}_vs_{other}"] < tol]


def _nearest(residuals: Dict[str, float], name: str) -> str:
    return min(("lower", "middle", "upper"), key=lambda other: residuals[f"{name}_vs_{other}"])


def _unambiguous(tracked_l: List[str], tracked_u: List[str]) -> bool:
    return len(tracked_l) == 1 and len(tracked_u) == 1


def _past_check(family: ParametricFamily, profile: TransitionProfile, span: Optional[Tuple[float, float]],
                settings: AnalysisSettings, triples: Optional[FrozenTriples]) -> bool:
    gamma_minus, gamma_plus = profile.limits
    if gamma_minus == gamma_plus:
        return False
    past = triples.past_for(gamma_minus) if triples is not None else None
    if past is None:
        default_span, _ = analysis_span(profile, settings)
        a = float((span or default_span)[0])
        past = frozen_triple(family, gamma_minus, (a, a + 8 * settings.dichotomy_window), settings)
    if not past.found:
        raise PastNotInRf(f"gamma-={gamma_minus:g}: {past.reason.value} ({past.detail})")
    return True


def classify_detailed(family: ParametricFamily, profile: TransitionProfile,
                      span: Optional[Tuple[float, float]] = None,
                      settings: Optional[AnalysisSettings] = None,
                      triples: Optional[FrozenTriples] = None) -> CaseLabel:
    """CaseLabel with l, m, u and the future triple attached.

    Without an explicit span, the future padding is doubled while the tail
    tracking stays ambiguous (slowly attracting future solutions near a fold).
    """
    settings = settings or AnalysisSettings()
    past_checked = _past_check(family, profile, span, settings, triples)
    future = triples.future if triples is not None else None

    sol = transition_solutions(family, profile, span, settings, future=future)
    residuals = tail_residuals(sol, settings.tail_fraction)
    tracked_l = _tracked(residuals, "lower", settings.tracking_tol)
    tracked_u = _tracked(residuals, "upper", settings.tracking_tol)
    while span is None and not _unambiguous(tracked_l, tracked_u):
        longer = extended_span(sol.span, sol.clamp_r, settings)
        if longer is None:
            break
        logger.info("tail tracking ambiguous on [%.6g, %.6g]; extending the span to %.6g",
                    sol.span[0], sol.span[1], longer[1])
        sol = transition_solutions(family, profile, longer, settings, future=sol.future)
        residuals = tail_residuals(sol, settings.tail_fraction)
        tracked_l = _tracked(residuals, "lower", settings.tracking_tol)
        tracked_u = _tracked(residuals, "upper", settings.tracking_tol)

    gap, t_w, below, above = gap_at_witness(sol, profile)
    gap_case = _gap_case(below, above, settings.tol_b)
    label = CaseLabel(case=gap_case, gap=gap, t_gamma=t_w, residuals=residuals, span=sol.span,
                      clamp_r=sol.clamp_r, gap_case=gap_case, past_checked=past_checked,
                      lower=sol.lower, middle=sol.middle, upper=sol.upper, future=sol.future)

    if not _unambiguous(tracked_l, tracked_u):
        nearest = _TAIL_CASES.get((_nearest(residuals, "lower"), _nearest(residuals, "upper")))
        ambiguity = f"tail tracking ambiguous: l tracks {tracked_l or 'none'}, u tracks {tracked_u or 'none'}"
        if nearest is not None and nearest == gap_case and gap_case not in _ADJACENT:
            # residuals still decaying, but the nearest future solutions confirm a definite gap sign
            label.tail_case = nearest
            label.reason = f"{ambiguity}; nearest future solutions agree with the gap criterion"
            logger.warning("%s (case %s)", label.reason, gap_case.value)
            return label
        label.case = CaseName.UNCLASSIFIABLE
        label.reason = ambiguity
        logger.warning("unclassifiable: %s", label.reason)
        return label
    tail_case = _TAIL_CASES.get((tracked_l[0], tracked_u[0]))
    if tail_case is None:
        label.case = CaseName.UNCLASSIFIABLE
        label.reason = f"no case with l -> {tracked_l[0]}, u -> {tracked_u[0]}"
        logger.warning("unclassifiable: %s", label.reason)
        return label
    label.tail_case = tail_case

    if tail_case != gap_case:
        b_case, other = (tail_case, gap_case) if tail_case in _ADJACENT else (gap_case, tail_case)
        if b_case not in _ADJACENT or other not in _ADJACENT[b_case]:
            raise InconsistentCriteria(f"gap criterion gives {gap_case.value} (gap={gap:.3e} at t={t_w:.6g}), "
                                       f"tail criterion gives {tail_case.value}")
        # near a tipping point: keep the gap verdict unless the gap itself collapsed
        logger.warning("near-critical instance: gap says %s, tails say %s", gap_case.value, tail_case.value)
        label.case = gap_case
    logger.info("classified %s as %s (gap %.3e at t=%.6g)", profile.describe(), label.case.value, gap, t_w)
    return label


def classify(family: ParametricFamily, profile: TransitionProfile,
             span: Optional[Tuple[float, float]] = None,
             settings: Optional[AnalysisSettings] = None,
             triples: Optional[FrozenTriples] = None) -> CaseLabel:
    return classify_detailed(family, profile, span, settings, triples)


# --- forward attraction ---

@dataclass
class ProbeOutcome:
    s: float
    x0: float
    side: str
    converged: bool
    residual: float
    entry_time: Optional[float]

    def to_record(self) -> Dict[str, Any]:
        return {"s": self.s, "x0": self.x0, "side": self.side, "converged": self.converged,
                "residual": self.residual, "entry_time": self.entry_time}


@dataclass
class ProbeReport:
    case: CaseName
    rho: float
    outcomes: List[ProbeOutcome]
    consistent: bool

    def to_record(self) -> Dict[str, Any]:
        return {"case": self.case.value, "rho": self.rho, "consistent": self.consistent,
                "outcomes": [o.to_record() for o in self.outcomes]}


def _probe_consistent(case: CaseName, outcomes: Sequence[ProbeOutcome]) -> bool:
    outside = [o for o in outcomes if o.side in ("above", "below")]
    if case == CaseName.A:
        return all(o.converged for o in outside)
    if case in (CaseName.C1, CaseName.B1):
        return all(o.converged for o in outside if o.side == "above")
    if case in (CaseName.C2, CaseName.B2):
        return all(o.converged for o in outside if o.side == "below")
    return True


def forward_attraction_probe(label: CaseLabel, family: ParametricFamily, profile: TransitionProfile,
                             probes: Sequence[Tuple[float, float]],
                             settings: Optional[AnalysisSettings] = None) -> ProbeReport:
    """Forward runs from (s, x0) outside [l(s), u(s)] compared with the nearest extremal solution."""
    if label.lower is None or label.upper is None:
        raise InvalidSettings("probe needs a label produced by classify_detailed")
    settings = settings or AnalysisSettings()
    a, b = label.span
    transition = family.compose(profile)
    rho = field_radius(transition, a, b, settings)
    run = settings.integrator.with_guard(max(settings.guard_factor * rho, 2.0 * max(abs(x) for _, x in probes)))
    tail_start = b - settings.tail_fraction * (b - a)
    outcomes = []
    for s, x0 in probes:
        s, x0 = float(s), float(x0)
        if not a <= s < b:
            raise InvalidSettings(f"probe time {s:g} outside the span [{a:g}, {b:g})")
        lo, hi = float(label.lower(s)), float(label.upper(s))
        if x0 > hi:
            side, target = "above", label.upper
        elif x0 < lo:
            side, target = "below", label.lower
        else:
            side, target = "inside", None
        traj = integrate(transition, s, x0, b, run, cache=cache_for(settings.cache_dir))
        inside = np.flatnonzero(np.abs(traj.x) <= rho)
        entry = float(traj.t[inside[0]]) if inside.size else None
        if target is None or not traj.completed:
            residual, converged = math.nan, False
        else:
            tail = traj.restrict(max(tail_start, s), b)
            residual = float(np.max(np.abs(tail.x - target(tail.t))))
            converged = residual < settings.tracking_tol
        outcomes.append(ProbeOutcome(s, x0, side, converged, residual, entry))
    report = ProbeReport(label.case, float(rho), outcomes, _probe_consistent(label.case, outcomes))
    if not report.consistent:
        logger.warning("probe outcomes do not match case %s", label.case.value)
    return report
