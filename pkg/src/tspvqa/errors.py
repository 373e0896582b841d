"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested problem size exceeds a hard resource guard."""


class DimensionError(ValueError):
    """Array shapes or index ranges do not agree."""


class ConsistencyError(RuntimeError):
    """An internal numerical identity was violated beyond tolerance."""
