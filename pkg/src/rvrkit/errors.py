"""Exception hierarchy shared by every module.

Validation errors carry the offending residual so callers can report *how far*
an input is from satisfying the invariant, not only that it failed.
"""

from __future__ import annotations


class RvrError(Exception):
    """Base class for all errors raised by rvrkit."""


class ValidationError(RvrError, ValueError):
    """An operator or table failed one of its invariants."""

    def __init__(self, message: str, residual: float | None = None, what: str | None = None):
        super().__init__(message)
        self.residual = residual
        self.what = what


class NotHermitian(ValidationError):
    pass


class NotIdempotent(ValidationError):
    pass


class NotDensity(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class DimensionMismatch(RvrError, ValueError):
    pass


class BadIndex(RvrError, IndexError):
    pass


class NonRealResult(RvrError, ArithmeticError):
    pass


class OutOfRange(RvrError, ValueError):
    pass


class NotCommuting(RvrError, ValueError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.pair = pair


class UndeclaredPair(RvrError, KeyError):
    """Joint probability of a pair is not defined (noncommuting projectors)."""

    def __init__(self, j: int, k: int):
        super().__init__(f"pair ({j}, {k}) has no defined joint probability")
        self.pair = (j, k)

    def __str__(self) -> str:  # KeyError would otherwise repr() the message
        return self.args[0]


class ZeroVariance(RvrError, ZeroDivisionError):
    pass


class TooManyVariables(RvrError, ValueError):
    pass


class NumericallyAmbiguous(RvrError, ArithmeticError):
    """LP infeasibility measure sits inside the ambiguity band around the threshold."""

    def __init__(self, message: str, phase1_value: float):
        super().__init__(message)
        self.phase1_value = phase1_value


class UnknownLabel(RvrError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else ""


class ScenarioSyntaxError(RvrError, ValueError):
    """Scenario document is malformed; ``position`` is a JSON path or line:col."""

    def __init__(self, message: str, position: str = ""):
        super().__init__(f"{position}: {message}" if position else message)
        self.position = position


class UnknownBuiltin(RvrError, ValueError):
    pass
