from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import Config as cfg
from .ErrorHandle import InvalidSettings


class IntegratorSettings(BaseModel):
    """Adaptive integrator knobs. guard_radius None disables blow-up detection."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    rtol: float = cfg.DEFAULT_RTOL
    atol: float = cfg.DEFAULT_ATOL
    max_step: float = cfg.DEFAULT_MAX_STEP
    min_step: float = cfg.DEFAULT_MIN_STEP
    guard_radius: Optional[float] = None
    output_step: Optional[float] = cfg.DEFAULT_OUTPUT_STEP   # None -> endpoints only
    method: str = "DOP853"

    @model_validator(mode='after')
    def check_values(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise InvalidSettings(f"tolerances must be positive (rtol={self.rtol}, atol={self.atol})")
        if self.min_step <= 0 or self.max_step <= self.min_step:
            raise InvalidSettings(f"need 0 < min_step < max_step (got {self.min_step}, {self.max_step})")
        if self.guard_radius is not None and self.guard_radius <= 0:
            raise InvalidSettings(f"guard_radius must be positive, got {self.guard_radius}")
        if self.output_step is not None and self.output_step <= 0:
            raise InvalidSettings(f"output_step must be positive, got {self.output_step}")
        if self.method not in cfg.INTEGRATOR_METHODS:
            raise InvalidSettings(f"unknown method {self.method}; use one of {cfg.INTEGRATOR_METHODS}")
        return self

    def with_guard(self, guard_radius: Optional[float]) -> "IntegratorSettings":
        return self.model_copy(update={"guard_radius": guard_radius})

    def endpoints_only(self) -> "IntegratorSettings":
        return self.model_copy(update={"output_step": None})

    def refined(self, factor: float = 0.5) -> "IntegratorSettings":
        """Tolerances scaled by factor (convergence diagnostics)."""
        return self.model_copy(update={"rtol": self.rtol * factor, "atol": self.atol * factor})


class AnalysisSettings(BaseModel):
    """Thresholds shared by the hyperbolic, classify, tipping and models layers"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    integrator: IntegratorSettings = Field(default_factory=IntegratorSettings)

    pullback_horizons: Tuple[float, ...] = cfg.PULLBACK_HORIZONS
    pullback_max_horizon: float = cfg.PULLBACK_MAX_HORIZON
    pullback_tol: float = cfg.PULLBACK_TOL

    coercivity_slope: float = cfg.COERCIVITY_SLOPE
    coercivity_search_bound: float = cfg.COERCIVITY_SEARCH_BOUND
    guard_factor: float = cfg.GUARD_FACTOR

    separation_threshold: float = cfg.SEPARATION_THRESHOLD
    dichotomy_margin: float = cfg.DICHOTOMY_MARGIN
    dichotomy_window: float = cfg.DICHOTOMY_WINDOW

    contraction_tol: float = cfg.CONTRACTION_TOL
    contraction_max_iter: int = cfg.CONTRACTION_MAX_ITER
    kernel_cutoff: float = cfg.KERNEL_CUTOFF

    tracking_tol: float = cfg.TRACKING_TOL
    tail_fraction: float = cfg.TAIL_FRACTION
    tol_b: float = cfg.TOL_B
    profile_tol: float = cfg.PROFILE_TOL
    max_span: float = cfg.MAX_SPAN

    bisection_tol: float = cfg.BISECTION_TOL
    rate_scan_per_decade: int = cfg.RATE_SCAN_PER_DECADE
    size_scan_points: int = cfg.SIZE_SCAN_POINTS

    extinction_eps: float = cfg.EXTINCTION_EPS

    workers: int = 1
    progress: bool = False
    cache_dir: Optional[str] = None

    @model_validator(mode='after')
    def check_values(self):
        horizons = self.pullback_horizons
        if len(horizons) < 2 or any(b <= a for a, b in zip(horizons, horizons[1:])) or horizons[0] <= 0:
            raise InvalidSettings(f"pullback_horizons must be positive, increasing, >= 2 entries: {horizons}")
        if self.pullback_max_horizon < horizons[-1]:
            raise InvalidSettings("pullback_max_horizon below the last scheduled horizon")
        if self.coercivity_slope < 1:
            raise InvalidSettings(f"coercivity_slope must be >= 1, got {self.coercivity_slope}")
        if self.guard_factor <= 1:
            raise InvalidSettings("guard radius must exceed the coercivity radius (guard_factor > 1)")
        if not 0 < self.tail_fraction < 1:
            raise InvalidSettings(f"tail_fraction must lie in (0, 1), got {self.tail_fraction}")
        for name in ("pullback_tol", "separation_threshold", "dichotomy_margin", "dichotomy_window",
                     "contraction_tol", "kernel_cutoff", "tracking_tol", "tol_b", "profile_tol",
                     "max_span", "bisection_tol", "extinction_eps"):
            if getattr(self, name) <= 0:
                raise InvalidSettings(f"{name} must be positive")
        if self.workers < 1:
            raise InvalidSettings("workers must be >= 1")
        return self

    def horizon_schedule(self) -> Tuple[float, ...]:
        """Scheduled horizons followed by doublings up to pullback_max_horizon."""
        schedule = list(self.pullback_horizons)
        while schedule[-1] * 2 <= self.pullback_max_horizon:
            schedule.append(schedule[-1] * 2)
        return tuple(schedule)

    def with_integrator(self, **updates) -> "AnalysisSettings":
        return self.model_copy(update={"integrator": self.integrator.model_copy(update=updates)})

    def updated(self, **updates) -> "AnalysisSettings":
        """Validated copy with updated fields"""
        data = self.model_dump()
        data.update(updates)
        return AnalysisSettings(**data)


class AuditGrids(BaseModel):
    """Sampling grids for the hypothesis audit"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_start: float = cfg.AUDIT_T_RANGE[0]
    t_end: float = cfg.AUDIT_T_RANGE[1]
    t_step: float = cfg.AUDIT_T_STEP
    x_factor: float = cfg.AUDIT_X_FACTOR
    x_step: float = cfg.AUDIT_X_STEP
    x_max_points: int = cfg.AUDIT_X_MAX_POINTS
    x_min: Optional[float] = None        # overrides -x_factor*rho (half-line models)
    gamma_points: int = cfg.AUDIT_GAMMA_POINTS
    fd_step: float = cfg.AUDIT_FD_STEP
    fd_tol: float = cfg.AUDIT_FD_TOL
    h5_margin: float = cfg.AUDIT_H5_MARGIN

    @model_validator(mode='after')
    def check_values(self):
        if self.t_end <= self.t_start or self.t_step <= 0:
            raise InvalidSettings("audit time grid is empty")
        if self.x_step <= 0 or self.x_max_points < 3 or self.x_factor <= 0:
            raise InvalidSettings("audit state grid is empty")
        if self.gamma_points < 1:
            raise InvalidSettings("audit gamma grid is empty")
        return self

    @classmethod
    def coarse(cls) -> "AuditGrids":
        """Cheaper grid for membership checks and tests"""
        return cls(t_step=0.25, x_max_points=241, gamma_points=9)

    def times(self) -> np.ndarray:
        n = int(round((self.t_end - self.t_start) / self.t_step)) + 1
        return np.linspace(self.t_start, self.t_end, n)

    def states(self, rho: float) -> np.ndarray:
        lo = -self.x_factor * rho if self.x_min is None else self.x_min
        hi = self.x_factor * rho
        n = int(round((hi - lo) / self.x_step)) + 1
        return np.linspace(lo, hi, int(np.clip(n, 3, self.x_max_points)))

    def gammas(self, lo: float, hi: float) -> np.ndarray:
        if hi == lo:
            return np.array([lo])
        return np.linspace(lo, hi, self.gamma_points)
