"""Error hierarchy for oridt.

Every error carries the exit code the command-line runner reports for it.
"""

from __future__ import annotations

from typing import Any, Optional


class OridtError(Exception):
    """A generic oridt error occurred."""

    exit_code = 1

    def details(self) -> dict[str, Any]:
        return {}


class ConfigError(OridtError):
    """The run configuration is malformed or out of range."""

    exit_code = 2

    def __init__(self, message: str, errors: Optional[list[dict[str, Any]]] = None) -> None:
        super().__init__(message)
        self.errors = errors or []

    def details(self) -> dict[str, Any]:
        return {"errors": self.errors} if self.errors else {}


# quiver validation

class QuiverViolation(ConfigError):
    """One violated condition of a quiver with involution."""

    def __init__(self, subject: str, message: str) -> None:
        super().__init__(f"{subject}: {message}")
        self.subject = subject

    def details(self) -> dict[str, Any]:
        return {"kind": type(self).__name__, "subject": self.subject}


class NonInvolutiveError(QuiverViolation):
    """sigma is not an involution on nodes or arrows."""


class ArrowOrientationMismatchError(QuiverViolation):
    """sigma does not send an arrow i -> j to an arrow sigma(j) -> sigma(i)."""


class FixedArrowNotFixedError(QuiverViolation):
    """An arrow i -> sigma(i) is moved by sigma."""


class SignConditionViolatedError(QuiverViolation):
    """The signs s and tau are incompatible with sigma."""


class QuiverValidationError(ConfigError):
    """A quiver description violates one or more conditions."""

    def __init__(self, violations: list[QuiverViolation]) -> None:
        lines = "; ".join(str(v) for v in violations)
        super().__init__(f"{len(violations)} violated condition(s): {lines}")
        self.violations = list(violations)

    @property
    def kinds(self) -> set[type]:
        return {type(v) for v in self.violations}

    def details(self) -> dict[str, Any]:
        return {"violations": [v.details() | {"message": str(v)} for v in self.violations]}


# arithmetic

class DivisionByZeroError(OridtError, ZeroDivisionError):
    """Division of a scalar by zero."""


class NotSymmetricError(OridtError, ValueError):
    """A dimension vector expected to be sigma-symmetric is not."""


class OutOfRangeError(OridtError, ValueError):
    """An integer argument lies outside its admissible range."""


class PoleAtPointError(OridtError, ValueError):
    """A rational function has a pole at the evaluation point."""


class EvenPrimeError(OridtError, ValueError):
    """The evaluation point is not an odd prime."""


class ZeroDimVectorError(OridtError, ValueError):
    """A slope or coefficient was requested for the zero dimension vector."""


# series

class BoundMismatchError(OridtError, ValueError):
    """Two truncated series have different bounds."""


class ZeroVectorError(OridtError, ValueError):
    """A dilogarithm was requested on the zero dimension vector."""


class InvalidBaseError(OridtError, ValueError):
    """A dilogarithm base other than q or q^2."""


# engine

class NotSigmaCompatibleError(OridtError, ValueError):
    """A stability is not sigma-compatible."""


class InadmissibleError(OridtError, ValueError):
    """A dimension vector is not an admissible self-dual dimension vector."""


class NonIntegralInvariantError(OridtError):
    """A factorization produced a non-integral invariant."""

    def __init__(self, message: str, residual: Optional[dict[str, str]] = None) -> None:
        super().__init__(message)
        self.residual = residual or {}

    def details(self) -> dict[str, Any]:
        return {"residual": self.residual}


class NotFiniteTypeWarning(UserWarning):
    """Factorization was requested outside finite type and sigma-genericity."""


# oracle

class OddSymplecticDimensionError(OridtError, ValueError):
    """A symplectic form was requested on an odd-dimensional space."""


class CapExceededError(OridtError):
    """An enumeration would exceed its configured cap."""

    exit_code = 3

    def __init__(self, what: str, required: int, cap: int) -> None:
        super().__init__(f"{what} needs {required} elements, cap is {cap}")
        self.what = what
        self.required = required
        self.cap = cap

    def details(self) -> dict[str, Any]:
        return {"what": self.what, "required": self.required, "cap": self.cap}


# runner

class GoldenMismatchError(OridtError):
    """A report differs from its stored golden file."""

    def __init__(self, message: str, path: str) -> None:
        super().__init__(message)
        self.path = path

    def details(self) -> dict[str, Any]:
        return {"path": self.path}
