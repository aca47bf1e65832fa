"""Exception hierarchy.

Everything derives from ``ResDMDError`` (itself a ``ValueError``) so callers
can catch library failures with a single clause.
"""


class ResDMDError(ValueError):
    pass


class ParseError(ResDMDError):
    """Malformed matrix file."""


class ShapeError(ResDMDError):
    """Inconsistent array shapes."""


class EmbeddingError(ResDMDError):
    """A realization is too short for the requested delay."""


class RankError(ResDMDError):
    """Data has no usable rank (e.g. all zeros)."""


class DegenerateError(ResDMDError):
    """A normalising quantity vanished (zero norm, zero scale, ...)."""


class ConfigurationError(ResDMDError):
    """Unsupported combination of options."""
