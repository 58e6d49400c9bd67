"""
Adaptive integration of x' = h(t, x) with the path integral of h_x carried as a
second state component, sampled onto a uniform dense-output grid.
"""
from dataclasses import dataclass, replace
from functools import cached_property
import logging
import math
from typing import TYPE_CHECKING, Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import DOP853, RK45, cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline

from ..core import Config as cfg
from ..core.ErrorHandle import BlowUpError, InvalidSettings
from ..core.Settings import IntegratorSettings
from ..enums.Enums import Direction, Side, TerminalStatus
from ..fields.ScalarField import ScalarField

if TYPE_CHECKING:
    from ..providers.CacheManager import TrajectoryCache

logger = logging.getLogger(__name__)

_SOLVERS = {"DOP853": DOP853, "RK45": RK45}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense numerical solution; samples ordered in the integration direction.

    int_fx[i] = integral of h_x(tau, x(tau)) from the anchor to t[i].
    """
    anchor: float
    x0: float
    t: np.ndarray
    x: np.ndarray
    dxdt: np.ndarray
    fx: np.ndarray
    int_fx: np.ndarray
    direction: Direction
    status: TerminalStatus = TerminalStatus.REACHED_HORIZON
    event_time: Optional[float] = None
    event_sign: int = 0

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def x_end(self) -> float:
        return float(self.x[-1])

    @property
    def blew_up(self) -> bool:
        return self.status == TerminalStatus.BLOW_UP

    @property
    def completed(self) -> bool:
        return self.status == TerminalStatus.REACHED_HORIZON

    @property
    def span(self) -> Tuple[float, float]:
        return float(min(self.t[0], self.t[-1])), float(max(self.t[0], self.t[-1]))

    def ascending(self) -> "Trajectory":
        if len(self.t) < 2 or self.t[-1] > self.t[0]:
            return self
        return replace(self, t=self.t[::-1], x=self.x[::-1], dxdt=self.dxdt[::-1],
                       fx=self.fx[::-1], int_fx=self.int_fx[::-1])

    @cached_property
    def _splines(self) -> Tuple[CubicHermiteSpline, CubicHermiteSpline]:
        asc = self.ascending()
        return (CubicHermiteSpline(asc.t, asc.x, asc.dxdt, extrapolate=False),
                CubicHermiteSpline(asc.t, asc.int_fx, asc.fx, extrapolate=False))

    def __call__(self, t):
        """x(t) by cubic Hermite interpolation; NaN outside the sampled span."""
        return self._splines[0](t)

    def integral_fx(self, t):
        return self._splines[1](t)

    def covers(self, a: float, b: float) -> bool:
        lo, hi = self.span
        return lo <= a + 1e-9 and hi >= b - 1e-9

    def restrict(self, a: float, b: float) -> "Trajectory":
        """Samples with a <= t <= b (ascending order)."""
        asc = self.ascending()
        keep = (asc.t >= a - 1e-12) & (asc.t <= b + 1e-12)
        return replace(asc, t=asc.t[keep], x=asc.x[keep], dxdt=asc.dxdt[keep],
                       fx=asc.fx[keep], int_fx=asc.int_fx[keep])

    def resample(self, times: np.ndarray) -> np.ndarray:
        return np.asarray(self(np.asarray(times, dtype=float)))

    def to_frame(self) -> pd.DataFrame:
        asc = self.ascending()
        return pd.DataFrame({"t": asc.t, "x": asc.x, "int_fx": asc.int_fx})

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format=cfg.FLOAT_FORMAT)

    def summary(self) -> dict:
        return {"anchor": self.anchor, "x0": self.x0, "t_end": self.t_end, "x_end": self.x_end,
                "status": self.status.value, "event_time": self.event_time,
                "event_sign": self.event_sign, "samples": int(len(self.t))}

    @classmethod
    def from_samples(cls, field_: ScalarField, t: np.ndarray, x: np.ndarray,
                     direction: Direction = Direction.FORWARD) -> "Trajectory":
        """Builds a trajectory from given samples, integrating h_x by the trapezoid rule."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        fx = np.asarray(field_.evaluate(t, x, 1), dtype=float)
        int_fx = cumulative_trapezoid(fx, t, initial=0.0)
        return cls(anchor=float(t[0]), x0=float(x[0]), t=t, x=x,
                   dxdt=np.asarray(field_.evaluate(t, x, 0), dtype=float),
                   fx=fx, int_fx=int_fx, direction=direction)


def _output_grid(s: float, t_end: float, step: Optional[float]) -> np.ndarray:
    if step is None:
        return np.array([s, t_end])
    n = int(math.floor(abs(t_end - s) / step + 1e-9))
    grid = s + math.copysign(step, t_end - s) * np.arange(n + 1)
    if abs(grid[-1] - t_end) > 1e-9 * max(1.0, abs(t_end)):
        grid = np.append(grid, t_end)
    else:
        grid[-1] = t_end
    return grid


def integrate(field_: ScalarField, s: float, x0: float, t_end: float,
              settings: Optional[IntegratorSettings] = None,
              cache: Optional["TrajectoryCache"] = None) -> Trajectory:
    """Integrates from (s, x0) to t_end (either direction).

    Stops early with status blow-up when |x| exceeds the guard radius while moving
    away from the origin, or step-collapse when the step drops below min_step.
    """
    settings = settings or IntegratorSettings()
    if t_end == s:
        raise InvalidSettings("t_end must differ from s")
    if not math.isfinite(x0):
        raise InvalidSettings(f"initial state must be finite, got {x0}")
    if cache is not None:
        hit = cache.load(field_, s, x0, t_end, settings)
        if hit is not None:
            return hit

    sign = 1.0 if t_end > s else -1.0
    direction = Direction.FORWARD if sign > 0 else Direction.BACKWARD

    def rhs(t, y):
        f, fx = field_.value_and_slope(t, y[0])
        return np.array([f, fx])

    solver = _SOLVERS[settings.method](rhs, s, np.array([float(x0), 0.0]), t_end,
                                       rtol=settings.rtol, atol=settings.atol,
                                       max_step=settings.max_step)
    grid = _output_grid(s, t_end, settings.output_step)
    times, states = [grid[:1]], [np.array([[float(x0)], [0.0]])]
    next_idx = 1
    status, event_time, event_sign = TerminalStatus.REACHED_HORIZON, None, 0
    guard = settings.guard_radius
    x_prev = float(x0)

    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            logger.warning("integrator failed at t=%.6g: %s", solver.t, message)
            status, event_time = TerminalStatus.STEP_COLLAPSE, float(solver.t)
            break
        x_now = float(solver.y[0])
        if not math.isfinite(x_now):
            status, event_time, event_sign = TerminalStatus.BLOW_UP, float(solver.t_old), int(math.copysign(1, x_prev))
            break
        # grid points passed by this step
        stop = next_idx
        while stop < len(grid) and sign * (grid[stop] - solver.t) <= 0:
            stop += 1
        if stop > next_idx:
            dense = solver.dense_output()
            chunk = grid[next_idx:stop]
            times.append(chunk)
            states.append(dense(chunk).reshape(2, -1))
            next_idx = stop
        if guard is not None and abs(x_now) > guard:
            f_now = field_.value_and_slope(solver.t, x_now)[0]
            if x_now * f_now * sign > 0:
                status, event_time, event_sign = TerminalStatus.BLOW_UP, float(solver.t), int(math.copysign(1, x_now))
                if sign * (solver.t - times[-1][-1]) > 0:
                    times.append(np.array([solver.t]))
                    states.append(solver.y.reshape(2, 1).copy())
                break
        remaining = abs(t_end - solver.t)
        if solver.status == "running" and solver.step_size < settings.min_step and remaining > settings.min_step:
            status, event_time = TerminalStatus.STEP_COLLAPSE, float(solver.t)
            break
        x_prev = x_now

    t = np.concatenate(times)
    y = np.concatenate(states, axis=1)
    x = y[0]
    traj = Trajectory(anchor=float(s), x0=float(x0), t=t, x=x,
                      dxdt=np.asarray(field_.evaluate(t, x, 0), dtype=float),
                      fx=np.asarray(field_.evaluate(t, x, 1), dtype=float),
                      int_fx=y[1], direction=direction, status=status,
                      event_time=event_time, event_sign=event_sign)
    if status != TerminalStatus.REACHED_HORIZON:
        logger.debug("integration from (%.6g, %.6g) stopped: %s at t=%.6g", s, x0, status.value, event_time)
    if cache is not None:
        cache.store(field_, s, x0, t_end, settings, traj)
    return traj


def pullback_limit(field_: ScalarField, anchor: float, x0_rule: Side, horizons: Sequence[float],
                   tol: float = cfg.PULLBACK_TOL, settings: Optional[IntegratorSettings] = None,
                   rho: Optional[float] = None, cache: Optional["TrajectoryCache"] = None) -> Tuple[float, bool]:
    """Value at `anchor` of solutions started at anchor - H from +rho or -rho.

    Returns (value, converged); converged once two successive horizons agree within tol.
    """
    if len(horizons) < 2 or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise InvalidSettings(f"horizons must be increasing with >= 2 entries: {horizons}")
    settings = settings or IntegratorSettings()
    if rho is None:
        from ..fields.Audit import coercivity_radius
        rho = coercivity_radius(field_, times=np.linspace(anchor - horizons[-1], anchor, cfg.COERCIVITY_MAX_TIMES))
    start = rho if Side(x0_rule) == Side.UPPER else -rho
    run = settings.endpoints_only().with_guard(settings.guard_radius or cfg.GUARD_FACTOR * rho)
    previous = None
    for H in horizons:
        traj = integrate(field_, anchor - H, start, anchor, run, cache=cache)
        if not traj.completed:
            raise BlowUpError(traj.event_time if traj.event_time is not None else anchor - H, traj.event_sign,
                              f"pullback from {start:+.6g} at horizon {H:g} stopped: {traj.status.value}")
        value = traj.x_end
        if previous is not None and abs(value - previous) < tol:
            logger.debug("pullback %s at t=%.6g converged with H=%g: %.12g", Side(x0_rule).value, anchor, H, value)
            return value, True
        previous = value
    logger.warning("pullback %s at t=%.6g not converged by H=%g", Side(x0_rule).value, anchor, horizons[-1])
    return previous, False


def reverse_pullback_limit(field_: ScalarField, anchor: float, start: Callable[[float], float],
                           horizons: Sequence[float], tol: float = cfg.PULLBACK_TOL,
                           settings: Optional[IntegratorSettings] = None,
                           cache: Optional["TrajectoryCache"] = None) -> Tuple[float, bool]:
    """Pullback in reversed time: solutions started at anchor + H from start(anchor + H)
    integrated backward to anchor. Repulsive solutions are the limits."""
    settings = settings or IntegratorSettings()
    run = settings.endpoints_only()
    previous = None
    for H in horizons:
        s = anchor + H
        traj = integrate(field_, s, float(start(s)), anchor, run, cache=cache)
        if not traj.completed:
            raise BlowUpError(traj.event_time if traj.event_time is not None else s, traj.event_sign,
                              f"reverse pullback from t={s:g} stopped: {traj.status.value}")
        value = traj.x_end
        if previous is not None and abs(value - previous) < tol:
            return value, True
        previous = value
    return previous, False
