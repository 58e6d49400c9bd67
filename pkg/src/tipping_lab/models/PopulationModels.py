"""
Population models with Allee effect as parametric d-concave families.

multiplicative      x' = r x (1 - x/K) (x - S)/K
migration-family    multiplicative + gamma * phi(t)
holling3-family     multiplicative - gamma * x^2 / (beta + x^2)
additive-holling2   x' = r x (1 - x/K) - a x / (x + b)   (half-line x >= 0)
polynomial          c0 + c1 x + c2 x^2 + c3 x^3 (+ gamma * direction)
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core.ErrorHandle import ConfigError, ModelError
from ..core.Settings import AuditGrids
from ..enums.Enums import ModelKind, Monotonicity
from ..fields.Coefficients import CoefficientFn, Constant, as_coefficient, coefficient_from_config
from ..fields.ScalarField import (ZERO_FIELD, HollingII, HollingIII, ParametricFamily, ScalarField,
                                  polynomial_field)

logger = logging.getLogger(__name__)

# 64 / (5 sqrt(5 - 2 sqrt 5) (7 + 3 sqrt 5))
I_BETA_CONSTANT = 64.0 / (5.0 * math.sqrt(5.0 - 2.0 * math.sqrt(5.0)) * (7.0 + 3.0 * math.sqrt(5.0)))

REQUIRED_COEFFICIENTS = {
    ModelKind.MULTIPLICATIVE: ("r", "K", "S"),
    ModelKind.MIGRATION_FAMILY: ("r", "K", "S", "phi"),
    ModelKind.HOLLING3_FAMILY: ("r", "K", "S", "beta"),
    ModelKind.ADDITIVE_HOLLING2: ("r", "K", "a", "b"),
    ModelKind.POLYNOMIAL: (),
}
OPTIONAL_COEFFICIENTS = {
    ModelKind.POLYNOMIAL: ("c0", "c1", "c2", "c3", "direction"),
}


@dataclass(frozen=True)
class PopulationModel:
    kind: ModelKind
    coefficients: Tuple[Tuple[str, Any], ...]
    family: ParametricFamily
    provenance: str = field(default="", compare=False)

    def coefficient(self, name: str) -> Any:
        for key, value in self.coefficients:
            if key == name:
                return value
        raise KeyError(f"model {self.kind.value} has no coefficient '{name}'")

    def has(self, name: str) -> bool:
        return any(key == name for key, _ in self.coefficients)

    @property
    def base_field(self) -> ScalarField:
        return self.family.base

    @property
    def zero_is_solution(self) -> bool:
        return self.kind != ModelKind.POLYNOMIAL or (
            self.family.base.coefficients[0].is_constant and self.family.base.coefficients[0].c == 0
            and self.family.direction.coefficients[0].is_constant and self.family.direction.coefficients[0].c == 0)

    def i_beta_sup(self, times: Optional[np.ndarray] = None) -> float:
        if self.kind != ModelKind.HOLLING3_FAMILY:
            raise ModelError("I_beta is defined for the Holling III family only")
        return i_beta_sup(self.coefficient("r"), self.coefficient("K"), self.coefficient("beta"), times)

    def to_config(self) -> Dict[str, Any]:
        coeffs = {}
        for key, value in self.coefficients:
            if isinstance(value, CoefficientFn):
                coeffs[key] = value.to_config()
            elif isinstance(value, ScalarField):
                coeffs[key] = value.to_config()
            else:
                coeffs[key] = value
        data = {"kind": self.kind.value, "coefficients": coeffs}
        if self.provenance:
            data["provenance"] = self.provenance
        return data


def _multiplicative_field(r: CoefficientFn, K: CoefficientFn, S: CoefficientFn) -> ScalarField:
    K2 = K * K
    return ScalarField((Constant(0.0), -(r * S) / K, r * (K + S) / K2, -r / K2))


def _check_positive(name: str, coefficient: CoefficientFn, times: np.ndarray):
    low = float(np.min(coefficient.values(times)))
    if low <= 0:
        raise ModelError(f"{name} must be positive, minimum on the audit grid is {low:g}")


def _check_constraints(kind: ModelKind, coeffs: Dict[str, Any], times: np.ndarray):
    if kind == ModelKind.POLYNOMIAL:
        return
    _check_positive("r", coeffs["r"], times)
    _check_positive("K", coeffs["K"], times)
    if "S" in coeffs:
        low = float(np.min(coeffs["S"].values(times) + coeffs["K"].values(times)))
        if low < 0:
            raise ModelError(f"S + K must be nonnegative, minimum on the audit grid is {low:g}")
    if kind == ModelKind.MIGRATION_FAMILY and float(np.min(coeffs["phi"].values(times))) <= 0:
        raise ModelError("migration weight phi must be positively bounded from below")
    if kind == ModelKind.ADDITIVE_HOLLING2:
        _check_positive("b", coeffs["b"], times)
        if float(np.min(coeffs["a"].values(times))) < 0:
            raise ModelError("predation weight a must be nonnegative")


def build_model(kind, coefficients: Dict[str, Any], provenance: str = "",
                times: Optional[np.ndarray] = None) -> PopulationModel:
    """PopulationModel with its parametric family; constraints checked on the audit time grid."""
    try:
        kind = ModelKind(kind)
    except ValueError:
        raise ConfigError(f"unknown model kind {kind!r}; use one of {[k.value for k in ModelKind]}",
                          key="model.kind") from None
    required = REQUIRED_COEFFICIENTS[kind]
    allowed = set(required) | set(OPTIONAL_COEFFICIENTS.get(kind, ()))
    missing = [k for k in required if k not in coefficients]
    if missing:
        raise ConfigError(f"{kind.value} model needs coefficients {missing}", key="model.coefficients")
    unknown = sorted(set(coefficients) - allowed)
    if unknown:
        raise ConfigError(f"unknown coefficients {unknown} for {kind.value}", key=f"model.coefficients.{unknown[0]}")

    coeffs: Dict[str, Any] = {}
    for name, value in coefficients.items():
        if name == "beta":
            coeffs[name] = float(value)
        elif name == "direction":
            coeffs[name] = value if isinstance(value, ScalarField) else ScalarField.from_config(
                value, "model.coefficients.direction")
        elif isinstance(value, CoefficientFn):
            coeffs[name] = value
        else:
            coeffs[name] = coefficient_from_config(value, f"model.coefficients.{name}")
    times = AuditGrids().times() if times is None else times
    _check_constraints(kind, coeffs, times)

    if kind == ModelKind.POLYNOMIAL:
        base = polynomial_field(*(coeffs.get(f"c{j}", 0.0) for j in range(4)))
        direction = coeffs.get("direction", ZERO_FIELD)
        family = ParametricFamily(base, direction, Monotonicity.UNKNOWN, label="polynomial")
    elif kind == ModelKind.ADDITIVE_HOLLING2:
        r, K = coeffs["r"], coeffs["K"]
        base = ScalarField((Constant(0.0), r, -r / K, Constant(0.0)),
                           holling2=(HollingII(coeffs["a"], coeffs["b"]),), state_min=0.0)
        family = ParametricFamily(base, ScalarField(ZERO_FIELD.coefficients, state_min=0.0),
                                  Monotonicity.NONDECREASING, label=kind.value)
    else:
        base = _multiplicative_field(coeffs["r"], coeffs["K"], coeffs["S"])
        if kind == ModelKind.MIGRATION_FAMILY:
            family = ParametricFamily(base, polynomial_field(c0=coeffs["phi"]), Monotonicity.NONDECREASING,
                                      label=kind.value)
        elif kind == ModelKind.HOLLING3_FAMILY:
            if coeffs["beta"] <= 0:
                raise ModelError(f"beta must be positive, got {coeffs['beta']}")
            direction = ScalarField(ZERO_FIELD.coefficients, holling3=(HollingIII(Constant(1.0), coeffs["beta"]),))
            family = ParametricFamily(base, direction, Monotonicity.NONINCREASING, label=kind.value)
        else:
            family = ParametricFamily(base, ZERO_FIELD, Monotonicity.NONDECREASING, label=kind.value)

    model = PopulationModel(kind, tuple(coeffs.items()), family, provenance)
    logger.debug("built %s model (%s)", kind.value, provenance or "user")
    return model


def i_beta_sup(r, K, beta: float, times: Optional[np.ndarray] = None) -> float:
    """Upper end of the gamma interval keeping the Holling III family d-concave."""
    if beta <= 0:
        raise ModelError(f"beta must be positive, got {beta}")
    r, K = as_coefficient(r), as_coefficient(K)
    times = AuditGrids().times() if times is None else np.asarray(times, dtype=float)
    ratio = r.values(times) / K.values(times) ** 2
    if r.is_constant and K.is_constant:
        ratio = np.array([r.c / K.c ** 2])
    return float(beta ** 1.5 * I_BETA_CONSTANT * np.min(ratio))
