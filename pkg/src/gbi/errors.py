"""Error taxonomy shared by every layer of the engine.

Domain failures raise a GbiError subclass so callers (CLI, HTTP service)
can map them to structured responses.  Plain contract misuse (wrong key
order, empty subsets, malformed arguments) raises ValueError instead.
"""

from __future__ import annotations


class GbiError(Exception):
    """Base class for all domain errors."""


class UnknownVariable(GbiError):
    """A referenced variable is not part of the distribution or net."""


class ImpossibleEvidence(GbiError):
    """Asserted evidence has (numerically) zero prior probability."""


class InfeasibleConstraintSet(GbiError):
    """No probability distribution satisfies the accepted constraints."""


class ConstraintOutOfRange(GbiError):
    """A constraint value falls outside its feasible interval."""

    def __init__(self, message: str, lo: float, hi: float):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class ZeroCondition(GbiError):
    """A conditional constraint was given on a zero-probability condition."""


class UndeterminedCondition(GbiError):
    """A conditional constraint references a condition with no accepted value."""


class ConflictingEvidence(GbiError):
    """A variable is asserted with a value contradicting an earlier assertion."""


class NotEvidenceVariable(GbiError):
    """Evidence was asserted on a variable not declared as a binary evidence variable."""


class ConsistencyError(GbiError):
    """Shared-set marginals of two distributions disagree beyond tolerance."""


class InvalidNet(GbiError):
    """A net failed structural validation; carries the full report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(GbiError):
    """A document violates the storage schema; carries the offending path."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class UnsupportedVersion(GbiError):
    """A document declares a format version this build cannot read."""
