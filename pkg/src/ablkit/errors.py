"""Exception types shared across the toolkit."""


class AblkitError(Exception):
    """Base class for every toolkit-specific error."""


class DimensionMismatchError(AblkitError, ValueError):
    """Operands live in Hilbert spaces of different dimension."""


class ValidationError(AblkitError, ValueError):
    """A constructed value violates one of its algebraic invariants."""


class DegenerateSpanError(AblkitError, ValueError):
    """Input kets are linearly dependent beyond the orthonormalization cutoff."""


class ImpossiblePostselectionError(AblkitError):
    """Conditioning on a postselection that the measurement can never reach."""


class ZeroProjectionError(AblkitError):
    """Projective update of a state orthogonal to the target subspace."""


class TooManyBranchesError(AblkitError, ValueError):
    """Refused coarse-graining enumeration; partition count grows too fast."""


class UndefinedTermError(AblkitError):
    """A mixture term carries nonzero weight but an undefined conditional."""


class NoPostselectedTrialsError(AblkitError):
    """A simulated ensemble contains no postselected trials to condition on."""


class ScenarioParseError(AblkitError, ValueError):
    """A scenario file could not be parsed; the message carries field context."""
