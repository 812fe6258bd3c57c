"""Error hierarchy for the dcs library.

Every error is a ValueError so callers that only guard against bad values keep working.
"""


class DcsError(ValueError):
    """Base class for all dcs errors."""


class InvalidParamsError(DcsError):
    """Parameters violate a documented invariant (sparsity, dimensions, rates, scales)."""


class InvalidRegimeError(InvalidParamsError):
    """A RIP constant lies outside the range where the recovery guarantee holds."""


class NodeIndexError(DcsError, IndexError):
    """Node index outside 1..J."""


class DimensionMismatchError(DcsError):
    """Array shapes do not agree."""


class NonFiniteInputError(DcsError):
    """Input contains NaN or infinity."""


class InstanceTooLargeError(DcsError):
    """Exhaustive search would enumerate too many supports."""


class MissingSideInformationError(DcsError):
    """A side-information algorithm was called without node 1."""


class SharedMatrixError(DcsError):
    """Per-node sensing matrices are required but all nodes share one."""


class EmptyInputError(DcsError):
    """An operation that needs at least one item received none."""


class InvalidConfigError(DcsError):
    """An experiment configuration is inconsistent."""


class UnwritablePathError(DcsError, OSError):
    """An output path cannot be written."""
