"""Exception hierarchy for the hroots package."""

from __future__ import annotations


class HrootsError(Exception):
    """Base class for all hroots errors."""


# ---- polynomial construction / manipulation ----

class EmptyInput(HrootsError):
    """Coefficient sequence was empty."""


class LeadingCoefficientZero(HrootsError):
    """Leading coefficient must be nonzero."""


class DegreeZero(HrootsError):
    """Operation requires a polynomial of degree at least one."""


class ConstantTermZero(HrootsError):
    """Taylor expansion of P'/P at 0 requires P(0) != 0."""


# ---- coefficient streams and determinants ----

class InsufficientStream(HrootsError):
    """Stream cannot supply the coefficient indices a determinant needs."""


class PrecisionExhausted(HrootsError):
    """Cancellation consumed the mantissa budget and escalation is capped.

    Carries the (k, r) cell where trust was lost, when known.
    """

    def __init__(self, message: str, k: int | None = None, r: int | None = None):
        super().__init__(message)
        self.k = k
        self.r = r


# ---- ratio traces and the solver ----

class TooFewPoints(HrootsError):
    """Ratio trace has fewer usable points than the verdict window."""


class GapInProducts(HrootsError):
    """A needed product of roots did not converge (modulus tie)."""


class IllConditionedSystem(HrootsError):
    """Power-sum linear system for multiplicities is numerically singular."""


class NonIntegerMultiplicity(HrootsError):
    """Multiplicity solve did not round cleanly to positive integers."""


class NoModulusGap(HrootsError):
    """No strict modulus gap at the requested position."""


class ShiftBudgetExhausted(HrootsError):
    """Random shifts failed to break all modulus ties within the budget."""


class ResidualCheckFailed(HrootsError):
    """A computed root does not satisfy the residual tolerance."""


class NoConvergence(HrootsError):
    """Simultaneous iteration failed to converge within its caps."""


# ---- CLI ----

class ParseError(HrootsError):
    """Polynomial input could not be parsed."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
