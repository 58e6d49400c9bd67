from dataclasses import dataclass, field
import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from ..core import Config as cfg
from ..core.ErrorHandle import CoercivityNotDetected
from ..core.Settings import AuditGrids
from .ScalarField import ParametricFamily, ScalarField

logger = logging.getLogger(__name__)

_RHO_START = 1e-3
_VERIFY_REFINE = 10
_VERIFY_MAX_TIMES = 20001


def _subsample(times: np.ndarray, limit: int) -> np.ndarray:
    if len(times) <= limit:
        return times
    return np.linspace(times[0], times[-1], limit)


def _shell(field_: ScalarField, points: int) -> np.ndarray:
    """Unit shell 1 <= |x| <= COERCIVITY_SHELL, positive side only on half-lines."""
    radii = np.geomspace(1.0, cfg.COERCIVITY_SHELL, points)
    if field_.state_min is not None:
        return radii
    return np.concatenate([-radii[::-1], radii])


def _excess(field_: ScalarField, rho: float, slope: float, times: np.ndarray, shell: np.ndarray) -> float:
    """max over samples of f(t,x)/x + slope with |x| in [rho, 10 rho]."""
    x = rho * shell
    values = field_.evaluate(times[:, None], x[None, :]) / x[None, :]
    return float(np.max(values)) + slope


def coercivity_radius(field_: ScalarField, slope: float = cfg.COERCIVITY_SLOPE,
                      search_bound: float = cfg.COERCIVITY_SEARCH_BOUND,
                      times: Optional[np.ndarray] = None) -> float:
    """Smallest rho (on a geometric search) with f(t,x)/x <= -slope for |x| >= rho.

    The returned value is verified on a 10x refined time/state grid.
    """
    if slope < 1:
        raise ValueError(f"slope must be >= 1, got {slope}")
    if times is None:
        times = AuditGrids().times()
    times = _subsample(np.asarray(times, dtype=float), cfg.COERCIVITY_MAX_TIMES)
    shell = _shell(field_, cfg.COERCIVITY_SHELL_POINTS)

    radii = [_RHO_START]
    while radii[-1] < search_bound:
        radii.append(min(radii[-1] * 2.0, search_bound))
    excess = [_excess(field_, r, slope, times, shell) for r in radii]
    failing = [i for i, e in enumerate(excess) if e > 0]
    if failing and failing[-1] == len(radii) - 1:
        raise CoercivityNotDetected(slope, search_bound)
    if not failing:
        rho = radii[0]
    else:
        k = failing[-1]
        rho = brentq(lambda r: _excess(field_, r, slope, times, shell), radii[k], radii[k + 1],
                     xtol=1e-12, rtol=1e-12)

    # verification on the refined grid
    fine_times = _subsample(np.linspace(times[0], times[-1], _VERIFY_REFINE * (len(times) - 1) + 1),
                            _VERIFY_MAX_TIMES)
    fine_shell = _shell(field_, _VERIFY_REFINE * cfg.COERCIVITY_SHELL_POINTS)
    rho *= 1.0 + 1e-9
    for attempt in range(60):
        if _excess(field_, rho, slope, fine_times, fine_shell) <= 0:
            logger.debug("coercivity radius %.6g (slope %g)", rho, slope)
            return float(rho)
        rho *= 1.0 + 1e-6 if attempt < 10 else 1.05
    raise CoercivityNotDetected(slope, search_bound)


@dataclass
class AuditCheck:
    passed: bool
    worst: float
    witness: Dict[str, float] = field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        return {"passed": self.passed, "worst": self.worst, "witness": dict(self.witness)}


@dataclass
class AuditReport:
    """Hypotheses h2 (partials), h3 (coercivity), h4 (d-concavity), h5 (strict margin)."""
    gamma_range: Tuple[float, float]
    rho: float
    h2: AuditCheck
    h3: AuditCheck
    h4: AuditCheck
    h5: AuditCheck
    monotonicity: AuditCheck

    @property
    def passed(self) -> bool:
        return all(c.passed for c in (self.h2, self.h3, self.h4, self.h5, self.monotonicity))

    def to_record(self) -> Dict[str, Any]:
        return {
            "gamma_range": list(self.gamma_range),
            "rho": self.rho,
            "passed": self.passed,
            "h2": self.h2.to_record(),
            "h3": self.h3.to_record(),
            "h4": self.h4.to_record(),
            "h5": self.h5.to_record(),
            "monotonicity": self.monotonicity.to_record(),
        }


class _Worst:
    """Running extreme with its witness point."""

    def __init__(self, sign: float):
        self.sign = sign
        self.value = -math.inf * sign
        self.witness: Dict[str, float] = {}

    def update(self, values: np.ndarray, t: np.ndarray, x: np.ndarray, gamma: float):
        idx = np.unravel_index(np.argmax(self.sign * values), values.shape)
        candidate = float(values[idx])
        if self.sign * candidate > self.sign * self.value:
            self.value = candidate
            self.witness = {"t": float(t[idx[0]]), "x": float(x[min(idx[1], len(x) - 1)]), "gamma": float(gamma)}


def hypothesis_audit(family: ParametricFamily, gamma_range: Tuple[float, float],
                     grids: Optional[AuditGrids] = None) -> AuditReport:
    """Grid audit of h2-h5 over t x [-3rho, 3rho] x gamma samples. Failures are entries, not errors."""
    grids = grids or AuditGrids()
    lo, hi = float(min(gamma_range)), float(max(gamma_range))
    times = grids.times()
    gammas = grids.gammas(lo, hi)

    # f is affine in gamma, so the coercivity radius over [lo, hi] is attained at an endpoint
    rho, h3_fail = 0.0, None
    leading_ok = True
    for g in {lo, hi}:
        frozen = family.freeze(g)
        lead_lo, lead_hi = frozen.leading_interval()
        if frozen.degree < 2 or lead_hi >= 0:
            leading_ok = False
            h3_fail = g
        try:
            rho = max(rho, coercivity_radius(frozen, times=times))
        except CoercivityNotDetected:
            h3_fail = g
    h3 = AuditCheck(h3_fail is None and leading_ok, rho if h3_fail is None else math.inf,
                    {} if h3_fail is None else {"gamma": h3_fail})
    if h3_fail is not None:
        logger.warning("coercivity not detected at gamma=%g", h3_fail)
        rho = rho or 10.0

    x_lo = -grids.x_factor * rho
    if family.base.state_min is not None or family.direction.state_min is not None:
        x_lo = max(v for v in (family.base.state_min, family.direction.state_min) if v is not None)
    x = grids.model_copy(update={"x_min": x_lo}).states(rho)
    dx = np.diff(x)
    h = grids.fd_step

    h2 = _Worst(+1.0)
    h4 = _Worst(+1.0)
    h5 = _Worst(-1.0)
    mono = _Worst(-1.0 if family.monotonicity.value == "nondecreasing" else +1.0)
    for g in gammas:
        frozen = family.freeze(g)
        for start in range(0, len(times), cfg.AUDIT_CHUNK):
            t = times[start:start + cfg.AUDIT_CHUNK]
            T, X = t[:, None], x[None, :]
            p = frozen.partials(T, X)
            for k in (1, 2, 3):
                cd = (frozen.evaluate(T, X + h, k - 1) - frozen.evaluate(T, X - h, k - 1)) / (2.0 * h)
                h2.update(np.abs(p[k] - cd) / (1.0 + np.abs(p[k])), t, x, g)
            h4.update(p[3], t, x, g)
            h5.update(-np.diff(p[2], axis=1) / dx[None, :], t, x, g)
            if family.monotonicity.value != "unknown":
                mono.update(family.direction.evaluate(T, X), t, x, g)

    if family.monotonicity.value == "unknown":
        mono_check = AuditCheck(True, 0.0)
    elif family.monotonicity.value == "nondecreasing":
        mono_check = AuditCheck(mono.value >= 0, mono.value, mono.witness)
    else:
        mono_check = AuditCheck(mono.value <= 0, mono.value, mono.witness)

    report = AuditReport(
        gamma_range=(lo, hi),
        rho=float(rho),
        h2=AuditCheck(h2.value <= grids.fd_tol, h2.value, h2.witness),
        h3=h3,
        h4=AuditCheck(h4.value <= 0.0, h4.value, h4.witness),
        h5=AuditCheck(h5.value > grids.h5_margin, h5.value, h5.witness),
        monotonicity=mono_check,
    )
    logger.info("audit gamma in [%g, %g]: h2=%s h3=%s h4=%s h5=%s", lo, hi,
                report.h2.passed, report.h3.passed, report.h4.passed, report.h5.passed)
    return report
