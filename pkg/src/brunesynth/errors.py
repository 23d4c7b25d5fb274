"""Exception hierarchy.

Errors derive from either :class:`ValidationError` (bad or inadmissible input)
or :class:`NumericalError` (an algorithm could not complete).  The CLI maps the
first family to exit code 1 and the second to exit code 2.
"""

from __future__ import annotations


class BruneError(Exception):
    """Base class for all package errors."""


class ValidationError(BruneError, ValueError):
    """Input is malformed or violates a documented precondition."""


class NumericalError(BruneError, ArithmeticError):
    """A numerical procedure failed."""


# model_core
class SingularResolvent(NumericalError):
    pass


class SingularTransform(NumericalError):
    pass


class DegreeError(ValidationError):
    pass


class UnstablePole(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# fitting
class ConvergenceFailure(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class EnforcementFailure(NumericalError):
    pass


class EmptyInput(ValidationError):
    pass


# synthesis
class NotPR(ValidationError):
    pass


class InductiveDegenerateUnsupported(ValidationError):
    pass


class StructureMismatch(NumericalError):
    pass


class NonPositiveElement(NumericalError):
    pass


class DegenerateK22(NumericalError):
    pass


class ResonantEigenvalue(NumericalError):
    pass


class NonCanonicalAntisymmetry(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class SingularMinor(NumericalError):
    pass


class StageError(NumericalError):
    """Wraps a failure raised while extracting a given stage."""

    def __init__(self, index: int, cause: BruneError):
        super().__init__(f"stage {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause


# loops / quantization / dissipation
class GyratorPresent(ValidationError):
    pass


class UnitTurnsRatio(ValidationError):
    pass


class SingularCapacitance(NumericalError):
    pass


class NotPD(NumericalError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class WrongTermination(ValidationError):
    pass


class ZeroFrequency(ValidationError):
    pass


# io
class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFormat(ValidationError):
    pass


class SingularConversion(NumericalError):
    pass


class EigenOrderingAmbiguity(UserWarning):
    """The smallest Hermitian eigenvalue is (nearly) repeated at the extraction frequency."""


class ClampWarning(UserWarning):
    """A value within tolerance of zero was clamped."""


class SingularCapacitanceWarning(UserWarning):
    """The assembled capacitance matrix is singular (for instance all ``C_J = 0``)."""


class CoordinateFallbackWarning(UserWarning):
    """A coordinate transform was skipped and untransformed coordinates are used."""
