from typing import Optional, TypeVar

# Type variables for generic programming
T = TypeVar('T')
E = TypeVar('E', bound=Exception)

# Domain-specific errors


class TippingLabError(Exception):
    """Base analysis error"""
    pass


class ConfigError(TippingLabError):
    """Scenario document could not be parsed or validated"""
    def __init__(self, message: str, key: Optional[str] = None,
                 line: Optional[int] = None):
        self.key = key
        self.line = line
        self.detail = message
        where = []
        if key:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        self.message = f"{message} ({', '.join(where)})" if where else message
        super().__init__(self.message)


class InvalidSettings(TippingLabError):
    """Numeric settings out of range"""
    pass


class ProfileError(TippingLabError):
    """Transition profile cannot serve the requested operation"""
    pass


class ModelError(TippingLabError):
    """Population model coefficients violate their constraints"""
    pass


class CoercivityNotDetected(TippingLabError):
    """No coercivity radius found below the search bound"""
    def __init__(self, slope: float, search_bound: float):
        self.slope = slope
        self.search_bound = search_bound
        super().__init__(
            f"f(t,x)/x <= -{slope} not reached for |x| <= {search_bound}")


class BlowUpError(TippingLabError):
    """Trajectory left the guard radius where boundedness was expected"""
    def __init__(self, time: float, sign: int, message: str = None):
        self.time = time
        self.sign = sign
        super().__init__(message or f"blow-up at t={time:.6g} towards {'+' if sign > 0 else '-'}inf")


class PullbackNotConverged(TippingLabError):
    """Pullback values not Cauchy within the horizon schedule"""
    def __init__(self, anchor: float, last_difference: float, horizon: float):
        self.anchor = anchor
        self.last_difference = last_difference
        self.horizon = horizon
        super().__init__(
            f"pullback at t={anchor:.6g} not converged (diff={last_difference:.3e}, H={horizon:g})")


class FutureNotInRf(TippingLabError):
    """Future limit equation lacks three hyperbolic solutions"""
    pass


class PastNotInRf(TippingLabError):
    """Past limit equation lacks three hyperbolic solutions"""
    pass


class InconsistentCriteria(TippingLabError):
    """Tail test and gap test disagree"""
    pass


class ContractionFailed(TippingLabError):
    """Fixed-point iterates of the continuation map are not Cauchy"""
    pass


class NoSignChange(TippingLabError):
    """Gap function keeps its sign over the scanned range"""
    pass


class ScenarioError(TippingLabError):
    """Scenario source error"""
    def __init__(self, source: str, original_error: Exception,
                 message: str = None):
        self.source = source
        self.original_error = original_error
        self.message = message or f"{source} error: {original_error}"
        super().__init__(self.message)


class NonMonotonePhi(UserWarning):
    """Sampled gap function is not monotone"""
    pass
