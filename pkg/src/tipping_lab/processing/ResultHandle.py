from dataclasses import dataclass
from functools import wraps
import logging
import time
from typing import Callable, Generic, Optional, TypeVar

from ..core.ErrorHandle import TippingLabError

logger = logging.getLogger(__name__)

T = TypeVar('T')
U = TypeVar('U')
E = TypeVar('E', bound=Exception)


@dataclass
class Result(Generic[T, E]):
    """Outcome of one analysis step: a value or the error that stopped the railway."""
    success: bool
    value: Optional[T] = None
    error: Optional[E] = None

    @classmethod
    def ok(cls, value: T) -> 'Result[T, E]':
        return cls(success=True, value=value)

    @classmethod
    def fail(cls, error: E) -> 'Result[T, E]':
        return cls(success=False, error=error)

    def unwrap(self) -> T:
        if self.success:
            return self.value
        raise self.error

    def map(self, func: Callable[[T], U]) -> 'Result[U, Exception]':
        """func applied to a successful value; failures pass through unchanged."""
        if not self.success:
            return self
        try:
            return Result.ok(func(self.value))
        except Exception as e:
            return Result.fail(e)

    def __repr__(self):
        if self.success:
            return f"<Result OK value={type(self.value).__name__}>"
        return f"<Result FAIL {type(self.error).__name__}: {self.error}>"


def _log_failure(name: str, error: Exception, tag: str = "") -> None:
    # analysis errors are expected outcomes; tracebacks only for the unexpected ones
    expected = isinstance(error, TippingLabError)
    logger.error("[ERROR] %s%s failed (%s): %s", tag, name, type(error).__name__, error,
                 exc_info=not expected or logger.isEnabledFor(logging.DEBUG))


def result_decorator(func: Callable[..., T]) -> Callable[..., Result[T, Exception]]:
    """Pipeline step wrapper: return value -> Result.ok, exception -> Result.fail."""
    @wraps(func)
    def wrapper(*args, **kwargs) -> Result[T, Exception]:
        name = func.__qualname__
        logger.debug("[DEBUG] %s called", name)
        started = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            _log_failure(name, e)
            return Result.fail(e)
        logger.info("[OK] %s completed in %.3fs", name, time.perf_counter() - started)
        return Result.ok(result)
    return wrapper


def async_result_decorator(func: Callable[..., T]) -> Callable[..., Result[T, Exception]]:
    @wraps(func)
    async def wrapper(*args, **kwargs) -> Result[T, Exception]:
        name = func.__qualname__
        logger.debug("[DEBUG] [async] %s called", name)
        started = time.perf_counter()
        try:
            result = await func(*args, **kwargs)
        except Exception as e:
            _log_failure(name, e, "[async] ")
            return Result.fail(e)
        logger.info("[OK] [async] %s completed in %.3fs", name, time.perf_counter() - started)
        return Result.ok(result)
    return wrapper
