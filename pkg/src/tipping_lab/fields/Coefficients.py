"""
Closed-form time coefficients r(t), K(t), S(t), phi(t), ... as immutable
expression trees.

Every node evaluates on floats (math fast path used by the integrator) and on
numpy arrays (grids), knows its closed-form time derivative where one exists,
and bounds its range by interval arithmetic over the node structure.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
import math
from typing import Any, ClassVar, Dict, Tuple, Type, Union

import numpy as np

from ..core.ErrorHandle import ConfigError, ProfileError

Number = Union[int, float]
Interval = Tuple[float, float]


def _mul(a: Interval, b: Interval) -> Interval:
    products = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    products = [0.0 if math.isnan(p) else p for p in products]
    return min(products), max(products)


def _add(a: Interval, b: Interval) -> Interval:
    return a[0] + b[0], a[1] + b[1]


def _hull(a: Interval, b: Interval) -> Interval:
    return min(a[0], b[0]), max(a[1], b[1])


def _scale(a: Interval, k: float) -> Interval:
    return (a[0] * k, a[1] * k) if k >= 0 else (a[1] * k, a[0] * k)


class CoefficientFn(ABC):
    """Bounded, uniformly continuous closed-form function of time."""
    kind: ClassVar[str] = ""

    # --- evaluation ---
    def value(self, t):
        """Evaluate at a float (returns float) or an array (returns array)."""
        if np.ndim(t) == 0:
            return self.at(float(t))
        return self.values(np.asarray(t, dtype=float))

    def __call__(self, t):
        return self.value(t)

    @abstractmethod
    def at(self, t: float) -> float: ...

    @abstractmethod
    def values(self, t: np.ndarray) -> np.ndarray: ...

    # --- time derivative ---
    def dt(self, t):
        if np.ndim(t) == 0:
            return self.dt_at(float(t))
        return self.dt_values(np.asarray(t, dtype=float))

    @abstractmethod
    def dt_at(self, t: float) -> float: ...

    @abstractmethod
    def dt_values(self, t: np.ndarray) -> np.ndarray: ...

    # --- bounds ---
    @abstractmethod
    def interval(self) -> Interval:
        """Enclosure [lo, hi] of the range over all real t."""

    @abstractmethod
    def dt_interval(self) -> Interval:
        """Enclosure of the range of the time derivative."""

    def bound(self) -> float:
        lo, hi = self.interval()
        return max(abs(lo), abs(hi))

    def derivative(self) -> "CoefficientFn":
        return TimeDerivative(self)

    # --- serialization ---
    @abstractmethod
    def to_config(self) -> Any: ...

    @property
    def is_constant(self) -> bool:
        return False

    # --- algebra ---
    def __add__(self, other) -> "CoefficientFn":
        other = as_coefficient(other)
        if isinstance(self, Constant) and isinstance(other, Constant):
            return Constant(self.c + other.c)
        if isinstance(other, Constant) and other.c == 0:
            return self
        if isinstance(self, Constant) and self.c == 0:
            return other
        terms = (self.terms if isinstance(self, Sum) else (self,)) + \
                (other.terms if isinstance(other, Sum) else (other,))
        return Sum(terms)

    __radd__ = __add__

    def __mul__(self, other) -> "CoefficientFn":
        other = as_coefficient(other)
        if isinstance(self, Constant) and isinstance(other, Constant):
            return Constant(self.c * other.c)
        for a, b in ((self, other), (other, self)):
            if isinstance(a, Constant):
                if a.c == 0:
                    return Constant(0.0)
                if a.c == 1:
                    return b
        factors = (self.factors if isinstance(self, Product) else (self,)) + \
                  (other.factors if isinstance(other, Product) else (other,))
        return Product(factors)

    __rmul__ = __mul__

    def __neg__(self) -> "CoefficientFn":
        return self * -1.0

    def __sub__(self, other) -> "CoefficientFn":
        return self + (-as_coefficient(other))

    def __rsub__(self, other) -> "CoefficientFn":
        return as_coefficient(other) + (-self)

    def __truediv__(self, other) -> "CoefficientFn":
        other = as_coefficient(other)
        if isinstance(other, Constant):
            if other.c == 0:
                raise ZeroDivisionError("division by the zero coefficient")
            return self * (1.0 / other.c)
        return Quotient(self, other)

    def __rtruediv__(self, other) -> "CoefficientFn":
        return as_coefficient(other) / self


@dataclass(frozen=True)
class Constant(CoefficientFn):
    c: float
    kind: ClassVar[str] = "constant"

    def at(self, t):
        return self.c

    def values(self, t):
        return np.full_like(t, self.c, dtype=float)

    def dt_at(self, t):
        return 0.0

    def dt_values(self, t):
        return np.zeros_like(t, dtype=float)

    def interval(self):
        return self.c, self.c

    def dt_interval(self):
        return 0.0, 0.0

    def derivative(self):
        return Constant(0.0)

    @property
    def is_constant(self):
        return True

    def to_config(self):
        return float(self.c)


@dataclass(frozen=True)
class Sin2(CoefficientFn):
    """offset + amplitude * sin^2(frequency*t + phase)"""
    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0
    kind: ClassVar[str] = "sin2"

    def at(self, t):
        return self.offset + self.amplitude * math.sin(self.frequency * t + self.phase) ** 2

    def values(self, t):
        return self.offset + self.amplitude * np.sin(self.frequency * t + self.phase) ** 2

    def dt_at(self, t):
        return self.amplitude * self.frequency * math.sin(2.0 * (self.frequency * t + self.phase))

    def dt_values(self, t):
        return self.amplitude * self.frequency * np.sin(2.0 * (self.frequency * t + self.phase))

    def interval(self):
        return self.offset + min(0.0, self.amplitude), self.offset + max(0.0, self.amplitude)

    def dt_interval(self):
        k = abs(self.amplitude * self.frequency)
        return -k, k

    def to_config(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "frequency": self.frequency,
                "phase": self.phase, "offset": self.offset}


@dataclass(frozen=True)
class Cos2(CoefficientFn):
    """offset + amplitude * cos^2(frequency*t + phase)"""
    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0
    kind: ClassVar[str] = "cos2"

    def at(self, t):
        return self.offset + self.amplitude * math.cos(self.frequency * t + self.phase) ** 2

    def values(self, t):
        return self.offset + self.amplitude * np.cos(self.frequency * t + self.phase) ** 2

    def dt_at(self, t):
        return -self.amplitude * self.frequency * math.sin(2.0 * (self.frequency * t + self.phase))

    def dt_values(self, t):
        return -self.amplitude * self.frequency * np.sin(2.0 * (self.frequency * t + self.phase))

    def interval(self):
        return self.offset + min(0.0, self.amplitude), self.offset + max(0.0, self.amplitude)

    def dt_interval(self):
        k = abs(self.amplitude * self.frequency)
        return -k, k

    def to_config(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "frequency": self.frequency,
                "phase": self.phase, "offset": self.offset}


@dataclass(frozen=True)
class Arctan(CoefficientFn):
    """offset + amplitude * arctan(rate * (t - center))"""
    amplitude: float
    rate: float = 1.0
    center: float = 0.0
    offset: float = 0.0
    kind: ClassVar[str] = "arctan"

    def at(self, t):
        return self.offset + self.amplitude * math.atan(self.rate * (t - self.center))

    def values(self, t):
        return self.offset + self.amplitude * np.arctan(self.rate * (t - self.center))

    def dt_at(self, t):
        u = self.rate * (t - self.center)
        return self.amplitude * self.rate / (1.0 + u * u)

    def dt_values(self, t):
        u = self.rate * (t - self.center)
        return self.amplitude * self.rate / (1.0 + u * u)

    def interval(self):
        k = abs(self.amplitude) * math.pi / 2.0
        return self.offset - k, self.offset + k

    def dt_interval(self):
        k = self.amplitude * self.rate
        return min(0.0, k), max(0.0, k)

    def to_config(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "rate": self.rate,
                "center": self.center, "offset": self.offset}


@dataclass(frozen=True)
class Gaussian(CoefficientFn):
    """offset + amplitude * exp(-(t - center)^2 / width)"""
    amplitude: float
    width: float = 1.0
    center: float = 0.0
    offset: float = 0.0
    kind: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigError("gaussian width must be positive", key="width")

    def at(self, t):
        u = t - self.center
        return self.offset + self.amplitude * math.exp(-u * u / self.width)

    def values(self, t):
        u = t - self.center
        return self.offset + self.amplitude * np.exp(-u * u / self.width)

    def dt_at(self, t):
        u = t - self.center
        return -2.0 * self.amplitude * u / self.width * math.exp(-u * u / self.width)

    def dt_values(self, t):
        u = t - self.center
        return -2.0 * self.amplitude * u / self.width * np.exp(-u * u / self.width)

    def interval(self):
        return self.offset + min(0.0, self.amplitude), self.offset + max(0.0, self.amplitude)

    def dt_interval(self):
        k = abs(self.amplitude) * math.sqrt(2.0 / self.width) * math.exp(-0.5)
        return -k, k

    def to_config(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "width": self.width,
                "center": self.center, "offset": self.offset}


@dataclass(frozen=True)
class Sum(CoefficientFn):
    terms: Tuple[CoefficientFn, ...]
    kind: ClassVar[str] = "sum"

    def at(self, t):
        return sum(term.at(t) for term in self.terms)

    def values(self, t):
        out = np.zeros_like(t, dtype=float)
        for term in self.terms:
            out = out + term.values(t)
        return out

    def dt_at(self, t):
        return sum(term.dt_at(t) for term in self.terms)

    def dt_values(self, t):
        out = np.zeros_like(t, dtype=float)
        for term in self.terms:
            out = out + term.dt_values(t)
        return out

    def interval(self):
        out = (0.0, 0.0)
        for term in self.terms:
            out = _add(out, term.interval())
        return out

    def dt_interval(self):
        out = (0.0, 0.0)
        for term in self.terms:
            out = _add(out, term.dt_interval())
        return out

    def to_config(self):
        return {"kind": self.kind, "terms": [term.to_config() for term in self.terms]}


@dataclass(frozen=True)
class Product(CoefficientFn):
    factors: Tuple[CoefficientFn, ...]
    kind: ClassVar[str] = "product"

    def at(self, t):
        out = 1.0
        for factor in self.factors:
            out *= factor.at(t)
        return out

    def values(self, t):
        out = np.ones_like(t, dtype=float)
        for factor in self.factors:
            out = out * factor.values(t)
        return out

    def dt_at(self, t):
        vals = [f.at(t) for f in self.factors]
        total = 0.0
        for i, factor in enumerate(self.factors):
            term = factor.dt_at(t)
            for j, v in enumerate(vals):
                if j != i:
                    term *= v
            total += term
        return total

    def dt_values(self, t):
        vals = [f.values(t) for f in self.factors]
        total = np.zeros_like(t, dtype=float)
        for i, factor in enumerate(self.factors):
            term = factor.dt_values(t)
            for j, v in enumerate(vals):
                if j != i:
                    term = term * v
            total = total + term
        return total

    def interval(self):
        out = (1.0, 1.0)
        for factor in self.factors:
            out = _mul(out, factor.interval())
        return out

    def dt_interval(self):
        total = (0.0, 0.0)
        for i, factor in enumerate(self.factors):
            term = factor.dt_interval()
            for j, other in enumerate(self.factors):
                if j != i:
                    term = _mul(term, other.interval())
            total = _add(total, term)
        return total

    def to_config(self):
        return {"kind": self.kind, "factors": [f.to_config() for f in self.factors]}


@dataclass(frozen=True)
class Quotient(CoefficientFn):
    numerator: CoefficientFn
    denominator: CoefficientFn
    kind: ClassVar[str] = "quotient"

    def __post_init__(self):
        lo, hi = self.denominator.interval()
        if lo <= 0 <= hi:
            raise ConfigError(f"denominator range [{lo:g}, {hi:g}] contains zero", key="denominator")

    def at(self, t):
        return self.numerator.at(t) / self.denominator.at(t)

    def values(self, t):
        return self.numerator.values(t) / self.denominator.values(t)

    def dt_at(self, t):
        n, d = self.numerator.at(t), self.denominator.at(t)
        return (self.numerator.dt_at(t) * d - n * self.denominator.dt_at(t)) / (d * d)

    def dt_values(self, t):
        n, d = self.numerator.values(t), self.denominator.values(t)
        return (self.numerator.dt_values(t) * d - n * self.denominator.dt_values(t)) / (d * d)

    def _reciprocal(self) -> Interval:
        lo, hi = self.denominator.interval()
        return 1.0 / hi, 1.0 / lo

    def interval(self):
        return _mul(self.numerator.interval(), self._reciprocal())

    def dt_interval(self):
        inv = self._reciprocal()
        inv2 = _mul(inv, inv)
        first = _mul(self.numerator.dt_interval(), inv)
        second = _mul(_mul(self.numerator.interval(), self.denominator.dt_interval()), inv2)
        return first[0] - second[1], first[1] - second[0]

    def to_config(self):
        return {"kind": self.kind, "numerator": self.numerator.to_config(),
                "denominator": self.denominator.to_config()}


@dataclass(frozen=True)
class TimeRescale(CoefficientFn):
    """child(rate * t + shift)"""
    child: CoefficientFn
    rate: float = 1.0
    shift: float = 0.0
    kind: ClassVar[str] = "rescale"

    def at(self, t):
        return self.child.at(self.rate * t + self.shift)

    def values(self, t):
        return self.child.values(self.rate * t + self.shift)

    def dt_at(self, t):
        return self.rate * self.child.dt_at(self.rate * t + self.shift)

    def dt_values(self, t):
        return self.rate * self.child.dt_values(self.rate * t + self.shift)

    def interval(self):
        return self.child.interval()

    def dt_interval(self):
        return _scale(self.child.dt_interval(), self.rate)

    def to_config(self):
        return {"kind": self.kind, "child": self.child.to_config(),
                "rate": self.rate, "shift": self.shift}


@dataclass(frozen=True)
class Clip(CoefficientFn):
    """child limited to [lower, upper]; None leaves that side open."""
    child: CoefficientFn
    lower: float = None
    upper: float = None
    kind: ClassVar[str] = "clip"

    def _lo(self):
        return -math.inf if self.lower is None else self.lower

    def _hi(self):
        return math.inf if self.upper is None else self.upper

    def at(self, t):
        return min(max(self.child.at(t), self._lo()), self._hi())

    def values(self, t):
        return np.clip(self.child.values(t), self._lo(), self._hi())

    def dt_at(self, t):
        v = self.child.at(t)
        return self.child.dt_at(t) if self._lo() < v < self._hi() else 0.0

    def dt_values(self, t):
        v = self.child.values(t)
        inside = (v > self._lo()) & (v < self._hi())
        return np.where(inside, self.child.dt_values(t), 0.0)

    def interval(self):
        lo, hi = self.child.interval()
        return min(max(lo, self._lo()), self._hi()), min(max(hi, self._lo()), self._hi())

    def dt_interval(self):
        return _hull(self.child.dt_interval(), (0.0, 0.0))

    def to_config(self):
        return {"kind": self.kind, "child": self.child.to_config(),
                "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class TimeClamp(CoefficientFn):
    """Freezes the child on one side of `at`.

    keep='after'  -> child(max(t, at)): constant on (-inf, at]
    keep='before' -> child(min(t, at)): constant on [at, inf)
    """
    child: CoefficientFn
    at_time: float
    keep: str = "after"
    kind: ClassVar[str] = "clamp"

    def __post_init__(self):
        if self.keep not in ("after", "before"):
            raise ConfigError(f"clamp keep must be 'after' or 'before', got {self.keep}", key="keep")

    def _map(self, t):
        if self.keep == "after":
            return np.maximum(t, self.at_time)
        return np.minimum(t, self.at_time)

    def _active(self, t):
        return t > self.at_time if self.keep == "after" else t < self.at_time

    def at(self, t):
        return self.child.at(max(t, self.at_time) if self.keep == "after" else min(t, self.at_time))

    def values(self, t):
        return self.child.values(self._map(t))

    def dt_at(self, t):
        return self.child.dt_at(t) if self._active(t) else 0.0

    def dt_values(self, t):
        return np.where(self._active(t), self.child.dt_values(t), 0.0)

    def interval(self):
        return self.child.interval()

    def dt_interval(self):
        return _hull(self.child.dt_interval(), (0.0, 0.0))

    def to_config(self):
        return {"kind": self.kind, "child": self.child.to_config(),
                "at": self.at_time, "keep": self.keep}


@dataclass(frozen=True)
class Sampled(CoefficientFn):
    """Piecewise-linear data, constant beyond the first and last sample."""
    times: Tuple[float, ...]
    samples: Tuple[float, ...]
    kind: ClassVar[str] = "sampled"

    def __post_init__(self):
        if len(self.times) != len(self.samples) or len(self.times) < 2:
            raise ConfigError("sampled coefficient needs >= 2 matching times/values", key="times")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("sample times must be strictly increasing", key="times")

    def at(self, t):
        return float(np.interp(t, self.times, self.samples))

    def values(self, t):
        return np.interp(t, self.times, self.samples)

    def dt_at(self, t):
        raise ProfileError("sampled coefficients have no closed-form time derivative")

    def dt_values(self, t):
        raise ProfileError("sampled coefficients have no closed-form time derivative")

    def interval(self):
        return float(min(self.samples)), float(max(self.samples))

    def dt_interval(self):
        slopes = np.diff(self.samples) / np.diff(self.times)
        return min(0.0, float(slopes.min())), max(0.0, float(slopes.max()))

    def to_config(self):
        return {"kind": self.kind, "times": list(self.times), "values": list(self.samples)}


@dataclass(frozen=True)
class TimeDerivative(CoefficientFn):
    """Closed-form d/dt of the child. Second derivatives are not provided."""
    child: CoefficientFn
    kind: ClassVar[str] = "derivative"

    def at(self, t):
        return self.child.dt_at(t)

    def values(self, t):
        return self.child.dt_values(t)

    def dt_at(self, t):
        raise ProfileError("second time derivatives are not available")

    def dt_values(self, t):
        raise ProfileError("second time derivatives are not available")

    def interval(self):
        return self.child.dt_interval()

    def dt_interval(self):
        raise ProfileError("second time derivatives are not available")

    def to_config(self):
        return {"kind": self.kind, "child": self.child.to_config()}


# --- config parsing ---

_SIMPLE_NODES: Dict[str, Type[CoefficientFn]] = {
    "sin2": Sin2,
    "cos2": Cos2,
    "arctan": Arctan,
    "gaussian": Gaussian,
}


def _take(node_cfg: Dict[str, Any], allowed, path: str) -> Dict[str, Any]:
    unknown = set(node_cfg) - set(allowed) - {"kind"}
    if unknown:
        raise ConfigError(f"unknown coefficient keys {sorted(unknown)}", key=f"{path}.{sorted(unknown)[0]}")
    return {k: node_cfg[k] for k in allowed if k in node_cfg}


def as_coefficient(value: Any) -> CoefficientFn:
    if isinstance(value, CoefficientFn):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool):
        return Constant(float(value))
    raise TypeError(f"cannot use {type(value).__name__} as a coefficient")


def coefficient_from_config(node_cfg: Any, path: str = "coefficient") -> CoefficientFn:
    """Build a CoefficientFn from a YAML value: a number or a {kind: ...} table."""
    if isinstance(node_cfg, bool):
        raise ConfigError("booleans are not coefficients", key=path)
    if isinstance(node_cfg, (int, float)):
        return Constant(float(node_cfg))
    if not isinstance(node_cfg, dict) or "kind" not in node_cfg:
        raise ConfigError("coefficient must be a number or a table with 'kind'", key=path)
    kind = node_cfg["kind"]
    try:
        if kind == "constant":
            return Constant(float(_take(node_cfg, ("value",), path)["value"]))
        if kind in _SIMPLE_NODES:
            cls = _SIMPLE_NODES[kind]
            fields = [f for f in cls.__dataclass_fields__ if f != "kind"]
            return cls(**{k: float(v) for k, v in _take(node_cfg, fields, path).items()})
        if kind == "sum":
            terms = _take(node_cfg, ("terms",), path)["terms"]
            return Sum(tuple(coefficient_from_config(s, f"{path}.terms[{i}]") for i, s in enumerate(terms)))
        if kind == "product":
            factors = _take(node_cfg, ("factors",), path)["factors"]
            return Product(tuple(coefficient_from_config(s, f"{path}.factors[{i}]") for i, s in enumerate(factors)))
        if kind == "quotient":
            data = _take(node_cfg, ("numerator", "denominator"), path)
            return Quotient(coefficient_from_config(data["numerator"], f"{path}.numerator"),
                            coefficient_from_config(data["denominator"], f"{path}.denominator"))
        if kind == "rescale":
            data = _take(node_cfg, ("child", "rate", "shift"), path)
            return TimeRescale(coefficient_from_config(data["child"], f"{path}.child"),
                               float(data.get("rate", 1.0)), float(data.get("shift", 0.0)))
        if kind == "clip":
            data = _take(node_cfg, ("child", "lower", "upper"), path)
            return Clip(coefficient_from_config(data["child"], f"{path}.child"),
                        data.get("lower"), data.get("upper"))
        if kind == "clamp":
            data = _take(node_cfg, ("child", "at", "keep"), path)
            return TimeClamp(coefficient_from_config(data["child"], f"{path}.child"),
                             float(data["at"]), data.get("keep", "after"))
        if kind == "sampled":
            data = _take(node_cfg, ("times", "values"), path)
            return Sampled(tuple(float(v) for v in data["times"]), tuple(float(v) for v in data["values"]))
        if kind == "derivative":
            data = _take(node_cfg, ("child",), path)
            return TimeDerivative(coefficient_from_config(data["child"], f"{path}.child"))
    except KeyError as e:
        raise ConfigError(f"missing field {e.args[0]!r} for coefficient kind '{kind}'", key=path) from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad value for coefficient kind '{kind}': {e}", key=path) from None
    raise ConfigError(f"unknown coefficient kind '{kind}'", key=f"{path}.kind")
