"""Exception taxonomy shared by every module.

Two families matter to the CLI: configuration/validation problems exit
with code 2, numerical-quality problems with code 3. Everything else is
a plain bug and propagates.
"""


class ArtifactError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(ArtifactError):
    """Bad inputs: out-of-range parameters, malformed configs or files."""

    exit_code = 2


class DomainError(ValidationError):
    """An argument violates a documented precondition."""


class ParseError(ValidationError):
    """Malformed persisted artifact. Carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StateError(ValidationError):
    """Operation on an object whose state cannot support it (e.g. empty model)."""


class NumericalError(ArtifactError):
    """Numerical-quality failures: the math did not cooperate."""

    exit_code = 3


class SingularityError(NumericalError):
    """Null space is not one-dimensional where it must be."""


class BranchAmbiguityError(NumericalError):
    """Eigenvalue branch tracking lost spectral isolation; shrink lambda."""


class ConditioningError(NumericalError):
    """A constrained solve is too ill-conditioned to trust."""


class DegenerateSampleError(NumericalError):
    """A zero-coherence baseline moment vanished; the sample is unusable."""


class GenerationQualityError(NumericalError):
    """Degenerate-sample rate too high; the requested ranges are pathological."""


class AbsorbingStateError(NumericalError):
    """A jump process reached a state with zero total escape rate."""


class InfeasibleConstraintError(NumericalError):
    """Scenario rejection sampling accepted less than 1% of attempts."""
