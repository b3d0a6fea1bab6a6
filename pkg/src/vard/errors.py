"""Exception types shared across the package."""


class VardError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateFeatureError(VardError):
    """A feature cannot support the requested basis (too few distinct values,
    constant column, single-level categorical, ...)."""


class IllConditionedPenaltyError(VardError):
    """The curvature penalty matrix has an eigenvalue at or below the
    numerical floor, so it cannot be whitened."""


class EmptyBlockError(VardError):
    """A coefficient block has no usable coordinate (all Gram eigenvalues
    are zero)."""


class InconsistentStateError(VardError):
    """A block state violates the closed-form coupling between r2, mu and
    phi (e.g. an active block carrying a zero posterior variance)."""


class DegenerateFoldError(VardError):
    """A cross-validation training fold is too small to rebuild the
    preprocessing pipeline (knots, encodings)."""


class SchemaError(VardError):
    """The data file or column specification is malformed."""
