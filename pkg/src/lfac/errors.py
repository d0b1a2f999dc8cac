"""Exception hierarchy shared by the cable model, network and solver layers."""


class LfacError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(LfacError, ValueError):
    """Cable geometry or material data violates a physical invariant."""


class BesselEvaluationError(LfacError, ArithmeticError):
    """A Bessel-function evaluation returned a non-finite value."""


class IllConditionedError(LfacError, ArithmeticError):
    """A matrix needed for the reduction is too ill-conditioned to invert.

    ``condition`` carries the estimate that triggered the refusal.
    """

    def __init__(self, message, condition=float("nan")):
        super().__init__(message)
        self.condition = condition


class BranchCutError(LfacError, ArithmeticError):
    """An eigenvalue of ZY lies on the negative real axis."""


class ExtractionError(LfacError, ValueError):
    """The positive-sequence Pi model cannot be extracted."""


class SamplingError(LfacError):
    """A reference sample failed; ``omega`` identifies the offending frequency."""

    def __init__(self, message, omega):
        super().__init__(f"{message} (omega={omega!r} rad/s)")
        self.omega = omega


class FitError(LfacError, ValueError):
    """Polynomial fit cannot be computed (underdetermined or rank deficient)."""


class CaseError(LfacError, ValueError):
    """A case or design document failed validation.

    ``location`` is a human-readable path to the offending entry.
    """

    def __init__(self, message, location=""):
        text = f"{location}: {message}" if location else message
        super().__init__(text)
        self.location = location


class FrequencyRangeError(LfacError, ValueError):
    """Frequency lies outside the range a branch model was fitted for."""
