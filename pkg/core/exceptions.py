"""
Exception hierarchy for attrdim.

Every error carries the process exit code the CLI reports for it and can be
rendered as the machine-readable error JSON written by ``main.py``.
"""

from typing import Any, Dict, List, Optional, Sequence


class AttrDimError(Exception):
    """Базовая ошибка библиотеки."""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """
        Returns the error as a JSON-serializable dictionary.

        Returns:
            Dict with error type, message, exit code and details
        """
        return {
            "error": type(self).__name__,
            "detail": self.message,
            "exit_code": self.exit_code,
            **{key: _jsonable(value) for key, value in self.details.items()},
        }


class ArgumentError(AttrDimError, ValueError):
    """Invalid argument passed to an operation."""

    exit_code = 2


class ConfigError(AttrDimError):
    """Run configuration failed schema validation."""

    exit_code = 2

    def __init__(self, message: str, errors: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message, errors=errors or [])


class DivergenceError(AttrDimError):
    """A trajectory left the finite region (blow-up)."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        last_state: Sequence[float],
        last_time: float,
        sample_index: Optional[int] = None,
    ):
        super().__init__(
            message, last_state=list(last_state), last_time=last_time, sample_index=sample_index
        )
        self.last_state = list(last_state)
        self.last_time = last_time
        self.sample_index = sample_index

    def for_sample(self, sample_index: int) -> "DivergenceError":
        """Returns a copy of the error tagged with the failing sample index."""
        return DivergenceError(
            f"sample {sample_index}: {self.message}",
            self.last_state,
            self.last_time,
            sample_index=sample_index,
        )


class InsufficientDataError(AttrDimError):
    """Not enough usable rows/scales for an estimate."""

    exit_code = 4


class UnboundedError(AttrDimError):
    """A bound is infinite for the given input (degenerate spectrum)."""

    exit_code = 4


class BudgetError(AttrDimError):
    """A resource budget (e.g. curve vertices) was exceeded."""

    exit_code = 4


class DependencyError(AttrDimError):
    """A prerequisite artifact is missing."""

    exit_code = 5

    def __init__(self, message: str, missing: str):
        super().__init__(message, missing=missing)
        self.missing = missing


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):  # numpy scalar
        return value.item()
    return value
