from dataclasses import dataclass, field
import math
from typing import TYPE_CHECKING, Any, Dict, Optional, Tuple

import numpy as np

from ..core.ErrorHandle import ConfigError
from ..enums.Enums import Monotonicity
from .Coefficients import CoefficientFn, Constant, as_coefficient, coefficient_from_config

if TYPE_CHECKING:
    from .Profiles import TransitionProfile

_FACTORIAL_RATIO = {  # j!/(j-k)! for j in 0..3, k in 0..3
    (j, k): math.factorial(j) // math.factorial(j - k) for j in range(4) for k in range(j + 1)
}


@dataclass(frozen=True)
class HollingIII:
    """-weight(t) * x^2 / (beta + x^2)"""
    weight: CoefficientFn
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigError(f"Holling III beta must be positive, got {self.beta}", key="beta")

    def partial(self, w, x, order: int):
        b = self.beta
        x2 = x * x
        q = b + x2
        if order == 0:
            h = x2 / q
        elif order == 1:
            h = 2.0 * b * x / q ** 2
        elif order == 2:
            h = 2.0 * b * (b - 3.0 * x2) / q ** 3
        else:
            h = -24.0 * b * x * (b - x2) / q ** 4
        return -w * h

    def scaled(self, factor: CoefficientFn) -> "HollingIII":
        return HollingIII(self.weight * factor, self.beta)

    def to_config(self) -> Dict[str, Any]:
        return {"weight": self.weight.to_config(), "beta": self.beta}


@dataclass(frozen=True)
class HollingII:
    """-weight(t) * x / (half_saturation(t) + x), defined for x > -half_saturation"""
    weight: CoefficientFn
    half_saturation: CoefficientFn

    def __post_init__(self):
        lo, _ = self.half_saturation.interval()
        if lo <= 0:
            raise ConfigError("Holling II half-saturation must stay positive", key="half_saturation")

    def partial(self, w, b, x, order: int):
        q = b + x
        if order == 0:
            h = x / q
        elif order == 1:
            h = b / q ** 2
        elif order == 2:
            h = -2.0 * b / q ** 3
        else:
            h = 6.0 * b / q ** 4
        return -w * h

    def scaled(self, factor: CoefficientFn) -> "HollingII":
        return HollingII(self.weight * factor, self.half_saturation)

    def to_config(self) -> Dict[str, Any]:
        return {"weight": self.weight.to_config(), "half_saturation": self.half_saturation.to_config()}


@dataclass(frozen=True)
class ScalarField:
    """h(t,x) = c0 + c1 x + c2 x^2 + c3 x^3 + rational predation terms.

    `state_min` marks a half-line state space (Holling II terms); audits and the
    coercivity search then only look at x >= state_min.
    """
    coefficients: Tuple[CoefficientFn, CoefficientFn, CoefficientFn, CoefficientFn]
    holling3: Tuple[HollingIII, ...] = ()
    holling2: Tuple[HollingII, ...] = ()
    state_min: Optional[float] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.coefficients) != 4:
            raise ConfigError("a scalar field needs exactly four polynomial coefficients c0..c3",
                              key="coefficients")

    # --- evaluation ---
    def evaluate(self, t, x, order: int = 0):
        """f(t,x) or its x-partial of the given order; broadcasts arrays."""
        if order not in (0, 1, 2, 3):
            raise ValueError(f"order must be 0..3, got {order}")
        if np.ndim(t) == 0 and np.ndim(x) == 0:
            return self._evaluate_scalar(float(t), float(x), order)
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        coeffs = [c.values(t) for c in self.coefficients]
        out = np.zeros(np.broadcast(t, x).shape)
        for j in range(order, 4):
            if self.coefficients[j].is_constant and self.coefficients[j].c == 0:
                continue
            out = out + _FACTORIAL_RATIO[(j, order)] * coeffs[j] * x ** (j - order)
        for term in self.holling3:
            out = out + term.partial(term.weight.values(t), x, order)
        for term in self.holling2:
            out = out + term.partial(term.weight.values(t), term.half_saturation.values(t), x, order)
        return out

    def __call__(self, t, x):
        return self.evaluate(t, x, 0)

    def _evaluate_scalar(self, t: float, x: float, order: int) -> float:
        out = 0.0
        for j in range(order, 4):
            c = self.coefficients[j]
            if c.is_constant and c.c == 0:
                continue
            out += _FACTORIAL_RATIO[(j, order)] * c.at(t) * x ** (j - order)
        for term in self.holling3:
            out += term.partial(term.weight.at(t), x, order)
        for term in self.holling2:
            out += term.partial(term.weight.at(t), term.half_saturation.at(t), x, order)
        return out

    def value_and_slope(self, t: float, x: float) -> Tuple[float, float]:
        """(f, f_x) at one point; the integrator's right-hand side."""
        c0, c1, c2, c3 = (c.at(t) for c in self.coefficients)
        f = c0 + x * (c1 + x * (c2 + x * c3))
        fx = c1 + x * (2.0 * c2 + 3.0 * c3 * x)
        for term in self.holling3:
            w = term.weight.at(t)
            f += term.partial(w, x, 0)
            fx += term.partial(w, x, 1)
        for term in self.holling2:
            w, b = term.weight.at(t), term.half_saturation.at(t)
            f += term.partial(w, b, x, 0)
            fx += term.partial(w, b, x, 1)
        return f, fx

    def partials(self, t, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.evaluate(t, x, k) for k in range(4))

    # --- structure ---
    @property
    def degree(self) -> int:
        for j in (3, 2, 1, 0):
            c = self.coefficients[j]
            if not (c.is_constant and c.c == 0):
                return j
        return 0

    def leading_interval(self) -> Tuple[float, float]:
        return self.coefficients[self.degree].interval()

    def __add__(self, other: "ScalarField") -> "ScalarField":
        coeffs = tuple(a + b for a, b in zip(self.coefficients, other.coefficients))
        state_min = _merge_state_min(self.state_min, other.state_min)
        return ScalarField(coeffs, self.holling3 + other.holling3, self.holling2 + other.holling2,
                           state_min, self.label or other.label)

    def scaled(self, factor) -> "ScalarField":
        """Every term multiplied by a time coefficient (or number)."""
        factor = as_coefficient(factor)
        return ScalarField(tuple(c * factor for c in self.coefficients),
                           tuple(h.scaled(factor) for h in self.holling3),
                           tuple(h.scaled(factor) for h in self.holling2),
                           self.state_min, self.label)

    def with_forcing(self, forcing) -> "ScalarField":
        """Adds a purely time dependent term to c0."""
        c0, c1, c2, c3 = self.coefficients
        return ScalarField((c0 + as_coefficient(forcing), c1, c2, c3),
                           self.holling3, self.holling2, self.state_min, self.label)

    def relabel(self, label: str) -> "ScalarField":
        return ScalarField(self.coefficients, self.holling3, self.holling2, self.state_min, label)

    def to_config(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {f"c{j}": c.to_config() for j, c in enumerate(self.coefficients)}
        if self.holling3:
            data["holling3"] = [h.to_config() for h in self.holling3]
        if self.holling2:
            data["holling2"] = [h.to_config() for h in self.holling2]
        if self.state_min is not None:
            data["state_min"] = self.state_min
        return data

    @classmethod
    def from_config(cls, data: Dict[str, Any], path: str = "field") -> "ScalarField":
        allowed = {"c0", "c1", "c2", "c3", "holling3", "holling2", "state_min"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown field keys {sorted(unknown)}", key=f"{path}.{sorted(unknown)[0]}")
        coeffs = tuple(coefficient_from_config(data.get(f"c{j}", 0.0), f"{path}.c{j}") for j in range(4))
        try:
            h3 = tuple(HollingIII(coefficient_from_config(h["weight"], f"{path}.holling3.weight"), float(h["beta"]))
                       for h in data.get("holling3", ()))
            h2 = tuple(HollingII(coefficient_from_config(h["weight"], f"{path}.holling2.weight"),
                                 coefficient_from_config(h["half_saturation"], f"{path}.holling2.half_saturation"))
                       for h in data.get("holling2", ()))
        except KeyError as e:
            raise ConfigError(f"missing rational-term field {e.args[0]!r}", key=path) from None
        return cls(coeffs, h3, h2, data.get("state_min"))


def _merge_state_min(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def polynomial_field(c0=0.0, c1=0.0, c2=0.0, c3=0.0, label: str = "") -> ScalarField:
    return ScalarField(tuple(as_coefficient(c) for c in (c0, c1, c2, c3)), label=label)


ZERO_FIELD = polynomial_field()


@dataclass(frozen=True)
class ParametricFamily:
    """f(t,x,gamma) = base(t,x) + gamma * direction(t,x)."""
    base: ScalarField
    direction: ScalarField
    monotonicity: Monotonicity = Monotonicity.UNKNOWN
    label: str = field(default="", compare=False)

    def evaluate(self, t, x, gamma, order: int = 0):
        return self.base.evaluate(t, x, order) + gamma * self.direction.evaluate(t, x, order)

    def freeze(self, gamma: float) -> ScalarField:
        return (self.base + self.direction.scaled(Constant(float(gamma)))).relabel(
            f"{self.label}[gamma={gamma:g}]")

    def compose(self, profile: "TransitionProfile") -> ScalarField:
        return (self.base + self.direction.scaled(profile.expression)).relabel(
            f"{self.label}[{profile.describe()}]")

    def check_monotonicity(self, times: np.ndarray, states: np.ndarray) -> bool:
        """Grid confirmation of the declared monotonicity flag (UNKNOWN passes)."""
        if self.monotonicity == Monotonicity.UNKNOWN:
            return True
        d = self.direction.evaluate(times[:, None], states[None, :])
        if self.monotonicity == Monotonicity.NONDECREASING:
            return bool(np.all(d >= 0))
        return bool(np.all(d <= 0))

    def to_config(self) -> Dict[str, Any]:
        return {"base": self.base.to_config(), "direction": self.direction.to_config(),
                "monotonicity": self.monotonicity.value}

    @classmethod
    def from_config(cls, data: Dict[str, Any], path: str = "family") -> "ParametricFamily":
        unknown = set(data) - {"base", "direction", "monotonicity"}
        if unknown:
            raise ConfigError(f"unknown family keys {sorted(unknown)}", key=f"{path}.{sorted(unknown)[0]}")
        try:
            mono = Monotonicity(data.get("monotonicity", Monotonicity.UNKNOWN.value))
        except ValueError:
            raise ConfigError(f"bad monotonicity {data.get('monotonicity')!r}", key=f"{path}.monotonicity") from None
        return cls(ScalarField.from_config(data.get("base", {}), f"{path}.base"),
                   ScalarField.from_config(data.get("direction", {}), f"{path}.direction"), mono)


def additive_family(h: ScalarField, label: str = "") -> ParametricFamily:
    """f(t,x,gamma) = h(t,x) + gamma."""
    return ParametricFamily(h, polynomial_field(c0=1.0), Monotonicity.NONDECREASING, label or h.label)


def evaluate(field_: ScalarField, t, x, order: int = 0):
    return field_.evaluate(t, x, order)


def freeze(family: ParametricFamily, gamma: float) -> ScalarField:
    return family.freeze(gamma)


def compose(family: ParametricFamily, profile: "TransitionProfile") -> ScalarField:
    return family.compose(profile)
