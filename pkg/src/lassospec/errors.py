"""Exception types for the lasso-graph spectral pipeline.

Every failure mode that callers are expected to branch on gets its own
class; plain bad arguments raise ValueError.
"""


class ComputationError(Exception):
    """Base class for numerical failures in the pipeline."""


class DivergedIntegrationError(ComputationError):
    """The ODE state became non-finite during integration."""


class StiffnessError(ComputationError):
    """Step size underflow or step budget exhausted in the integrator."""


class BracketingError(ComputationError):
    """A root expected inside a bracket could not be isolated there."""


class NumberingAmbiguityError(ComputationError):
    """Root count in a bracket disagrees with the expected eigenvalue numbering.

    Carries the offending bracket so the caller can inspect or widen it.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class IncompleteSubspectrumError(ComputationError):
    """An index required by the subspectrum pattern is missing."""


class AssumptionViolation(ComputationError):
    """One of the spectral assumptions (A1 distinctness, A2 positivity,
    A3 no common zeros of h and d) fails for the supplied data."""

    def __init__(self, which, message, diagnostics=None):
        super().__init__(f"{which}: {message}")
        self.which = which
        self.diagnostics = diagnostics or {}


class SpectralDataInconsistencyError(ComputationError):
    """Spectral data violates a structural identity (negative radicand,
    nonpositive norming constant, sign mismatch)."""


class MultipleZeroError(ComputationError):
    """A zero assumed simple looks multiple (derivative below tolerance)."""


class DegenerateSystemError(ComputationError):
    """The Gram matrix of the moment system is numerically singular."""


class NonConvergenceError(ComputationError):
    """A linear solve left a residual above its acceptance threshold."""


class IllConditionedError(ComputationError):
    """A discretized integral-equation system is too ill-conditioned to
    trust (usually a too-aggressive truncation)."""


class StageError(ComputationError):
    """Wraps a failure with the pipeline stage where it occurred."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
