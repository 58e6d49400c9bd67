"""
Transition profiles Gamma(t) with asymptotic limits gamma-/gamma+ and the
rate / phase / scale / split / clamp transforms acting on them.
"""
from dataclasses import dataclass, replace
import logging
import math
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from ..core.ErrorHandle import ConfigError, ProfileError
from ..enums.Enums import ProfileKind
from .Coefficients import (Arctan, Clip, CoefficientFn, Constant, Gaussian, Sampled,
                           TimeClamp, TimeDerivative, TimeRescale, coefficient_from_config)

logger = logging.getLogger(__name__)

_TAIL_SAMPLES = np.geomspace(1.0, 8.0, 257)
_HORIZON_START = 1e-3
_HORIZON_LIMIT = 1e12
_EXTREMA_POINTS = 40001

TRANSFORM_NAMES = ("rate", "phase", "scale", "split", "clamp_future", "clamp_past")


def _thaw_value(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_thaw_value(v) for v in value]
    return value


@dataclass(frozen=True)
class TransitionProfile:
    kind: ProfileKind
    expression: CoefficientFn
    past_limit: float
    future_limit: float
    parameters: Tuple[Tuple[str, Any], ...] = ()
    transforms: Tuple[Tuple[str, float], ...] = ()

    # --- construction ---
    @classmethod
    def constant(cls, value: float) -> "TransitionProfile":
        value = float(value)
        return cls(ProfileKind.CONSTANT, Constant(value), value, value, (("value", value),))

    @classmethod
    def arctan_sigmoid(cls, past: float, future: float, center: float = 0.0) -> "TransitionProfile":
        """past + (future - past) * (1/2 + arctan(t - center)/pi)"""
        past, future = float(past), float(future)
        center = float(center)
        expr = Arctan(amplitude=(future - past) / math.pi, rate=1.0, center=center,
                      offset=0.5 * (past + future))
        return cls(ProfileKind.ARCTAN_SIGMOID, expr, past, future,
                   (("past", past), ("future", future), ("center", center)))

    @classmethod
    def gaussian_impulse(cls, limit: float, peak: float, width: float = 10.0,
                         center: float = 0.0) -> "TransitionProfile":
        """limit + (peak - limit) * exp(-(t - center)^2 / width)"""
        limit, peak = float(limit), float(peak)
        width, center = float(width), float(center)
        expr = Gaussian(amplitude=peak - limit, width=width, center=center, offset=limit)
        return cls(ProfileKind.GAUSSIAN_IMPULSE, expr, limit, limit,
                   (("limit", limit), ("peak", peak), ("width", width), ("center", center)))

    @classmethod
    def custom_sampled(cls, times: Iterable[float], values: Iterable[float],
                       past: Optional[float] = None, future: Optional[float] = None) -> "TransitionProfile":
        times, values = tuple(float(t) for t in times), tuple(float(v) for v in values)
        expr = Sampled(times, values)
        past = values[0] if past is None else float(past)
        future = values[-1] if future is None else float(future)
        if not (math.isclose(past, values[0], abs_tol=1e-12) and math.isclose(future, values[-1], abs_tol=1e-12)):
            raise ProfileError("sampled profile limits must equal its first and last samples")
        return cls(ProfileKind.CUSTOM_SAMPLED, expr, past, future,
                   (("times", times), ("values", values)))

    @classmethod
    def from_expression(cls, expression: CoefficientFn, past: float, future: float) -> "TransitionProfile":
        past, future = float(past), float(future)
        return cls(ProfileKind.EXPRESSION, expression, past, future,
                   (("coefficient", expression), ("past", past), ("future", future)))

    # --- evaluation ---
    def value(self, t):
        return self.expression.value(t)

    def __call__(self, t):
        return self.expression.value(t)

    def derivative(self, t):
        """Closed-form Gamma'(t); sampled profiles raise ProfileError."""
        return self.expression.dt(t)

    @property
    def limits(self) -> Tuple[float, float]:
        return self.past_limit, self.future_limit

    @property
    def is_constant(self) -> bool:
        return self.expression.is_constant

    # --- transforms ---
    def _with(self, expression: CoefficientFn, name: str, value: float,
              past: Optional[float] = None, future: Optional[float] = None) -> "TransitionProfile":
        return replace(self, expression=expression,
                       past_limit=self.past_limit if past is None else past,
                       future_limit=self.future_limit if future is None else future,
                       transforms=self.transforms + ((name, float(value)),))

    def rate(self, c: float) -> "TransitionProfile":
        """Gamma(c t), c > 0"""
        if c <= 0:
            raise ProfileError(f"rate must be positive, got {c}")
        return self._with(TimeRescale(self.expression, rate=float(c)), "rate", c)

    def phase(self, c: float) -> "TransitionProfile":
        """Gamma(t + c)"""
        return self._with(TimeRescale(self.expression, shift=float(c)), "phase", c)

    def scale(self, d: float) -> "TransitionProfile":
        """d * Gamma(t)"""
        return self._with(self.expression * float(d), "scale", d,
                          past=d * self.past_limit, future=d * self.future_limit)

    def split_orientation(self) -> str:
        """'above' when sup Gamma > max limit, 'below' when inf Gamma < min limit."""
        lo, hi = self.extrema()
        top, bottom = max(self.limits), min(self.limits)
        tol = 1e-12 * max(1.0, abs(top), abs(bottom))
        if hi > top + tol:
            return "above"
        if lo < bottom - tol:
            return "below"
        raise ProfileError("split needs sup Gamma > max(gamma-, gamma+) or inf Gamma < min(gamma-, gamma+)")

    def split_parts(self) -> Tuple[CoefficientFn, CoefficientFn]:
        """(Delta1, Delta2) with Gamma = Delta1 + Delta2."""
        if self.split_orientation() == "above":
            delta1 = Clip(self.expression, upper=max(self.limits))
        else:
            delta1 = Clip(self.expression, lower=min(self.limits))
        return delta1, self.expression - delta1

    def split(self, d: float) -> "TransitionProfile":
        """Gamma_d = Delta1 + d * Delta2; limits unchanged."""
        delta1, delta2 = self.split_parts()
        return self._with(delta1 + delta2 * float(d), "split", d)

    def clamp_future(self, r: float) -> "TransitionProfile":
        """Gamma_r^+: Gamma(r) on (-inf, r], Gamma afterwards."""
        past = float(self.expression.value(float(r)))
        return self._with(TimeClamp(self.expression, float(r), keep="after"), "clamp_future", r, past=past)

    def clamp_past(self, r: float) -> "TransitionProfile":
        """Gamma_r^-: Gamma up to -r, Gamma(-r) on [-r, inf)."""
        future = float(self.expression.value(-float(r)))
        return self._with(TimeClamp(self.expression, -float(r), keep="before"), "clamp_past", r, future=future)

    def apply_transform(self, name: str, value: float) -> "TransitionProfile":
        if name not in TRANSFORM_NAMES:
            raise ConfigError(f"unknown transform '{name}'", key=f"transforms.{name}")
        return getattr(self, name)(float(value))

    def derivative_profile(self, factor: float = 1.0) -> "TransitionProfile":
        """factor * Gamma'(t) as a profile with limits 0."""
        self.expression.dt(0.0)  # raises ProfileError without a closed form
        return TransitionProfile.from_expression(TimeDerivative(self.expression) * float(factor), 0.0, 0.0)

    # --- asymptotics ---
    def _tail(self, T: float) -> float:
        s = T * _TAIL_SAMPLES
        plus = np.max(np.abs(self.expression.values(s) - self.future_limit))
        minus = np.max(np.abs(self.expression.values(-s) - self.past_limit))
        return float(max(plus, minus))

    def horizon(self, eps: float) -> float:
        """T with |Gamma(t) - gamma-+| < eps for |t| >= T (sampled tail check)."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        if self._tail(_HORIZON_START) < eps:
            return 0.0
        T = _HORIZON_START
        while self._tail(T) >= eps:
            T *= 2.0
            if T > _HORIZON_LIMIT:
                raise ProfileError(f"profile does not settle within {eps:g} of its limits")

        def g(s):
            return math.log(self._tail(s) + 1e-300) - math.log(eps)

        return float(brentq(g, T / 2.0, T, xtol=1e-6 * T))

    def extrema(self, eps: float = 1e-9, max_span: float = 1e6) -> Tuple[float, float]:
        """Sampled (inf, sup) of Gamma, limits included."""
        H = min(self.horizon(eps), max_span) + 1.0
        values = self.expression.values(np.linspace(-H, H, _EXTREMA_POINTS))
        lo = min(float(values.min()), self.past_limit, self.future_limit)
        hi = max(float(values.max()), self.past_limit, self.future_limit)
        return lo, hi

    def steepest_time(self, times: np.ndarray) -> float:
        """Latest sample time maximizing |Gamma'|; midpoint for flat profiles."""
        try:
            slope = np.abs(self.expression.dt_values(times))
        except ProfileError:
            slope = np.abs(np.gradient(self.expression.values(times), times))
        peak = float(slope.max())
        if peak <= 0:
            return float(0.5 * (times[0] + times[-1]))
        idx = np.flatnonzero(slope >= peak * (1.0 - 1e-6))[-1]
        return float(times[idx])

    # --- serialization ---
    def describe(self) -> str:
        params = ",".join(f"{k}={v:g}" for k, v in self.parameters if isinstance(v, float))
        ops = "".join(f"|{name}={value:g}" for name, value in self.transforms)
        return f"{self.kind.value}({params}){ops}"

    def to_config(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        for key, value in self.parameters:
            data[key] = value.to_config() if isinstance(value, CoefficientFn) else _thaw_value(value)
        if self.transforms:
            data["transforms"] = [{name: value} for name, value in self.transforms]
        return data

    @classmethod
    def from_config(cls, data: Dict[str, Any], path: str = "profile") -> "TransitionProfile":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("profile must be a table with 'kind'", key=path)
        try:
            kind = ProfileKind(data["kind"])
        except ValueError:
            raise ConfigError(f"unknown profile kind {data['kind']!r}", key=f"{path}.kind") from None
        allowed = {
            ProfileKind.CONSTANT: {"value"},
            ProfileKind.ARCTAN_SIGMOID: {"past", "future", "center"},
            ProfileKind.GAUSSIAN_IMPULSE: {"limit", "peak", "width", "center"},
            ProfileKind.CUSTOM_SAMPLED: {"times", "values", "past", "future"},
            ProfileKind.EXPRESSION: {"coefficient", "past", "future"},
        }[kind] | {"kind", "transforms"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown profile keys {sorted(unknown)}", key=f"{path}.{sorted(unknown)[0]}")
        args = {k: v for k, v in data.items() if k not in ("kind", "transforms")}
        try:
            if kind == ProfileKind.CONSTANT:
                profile = cls.constant(args["value"])
            elif kind == ProfileKind.ARCTAN_SIGMOID:
                profile = cls.arctan_sigmoid(args["past"], args["future"], float(args.get("center", 0.0)))
            elif kind == ProfileKind.GAUSSIAN_IMPULSE:
                profile = cls.gaussian_impulse(args["limit"], args["peak"], float(args.get("width", 10.0)),
                                               float(args.get("center", 0.0)))
            elif kind == ProfileKind.CUSTOM_SAMPLED:
                profile = cls.custom_sampled(args["times"], args["values"], args.get("past"), args.get("future"))
            else:
                profile = cls.from_expression(coefficient_from_config(args["coefficient"], f"{path}.coefficient"),
                                              args["past"], args["future"])
        except KeyError as e:
            raise ConfigError(f"missing profile field {e.args[0]!r}", key=path) from None
        except ProfileError as e:
            raise ConfigError(str(e), key=path) from None
        for i, step in enumerate(data.get("transforms", ()) or ()):
            if not isinstance(step, dict) or len(step) != 1:
                raise ConfigError("each transform is a one-entry table, e.g. {rate: 0.5}",
                                  key=f"{path}.transforms[{i}]")
            (name, value), = step.items()
            try:
                profile = profile.apply_transform(name, value)
            except (ConfigError, ProfileError, TypeError, ValueError) as e:
                raise ConfigError(getattr(e, "detail", str(e)), key=f"{path}.transforms[{i}]") from None
        return profile
