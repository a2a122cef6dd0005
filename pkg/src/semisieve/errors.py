class InputError(ValueError):
    """Raised for malformed arguments: out-of-range ids, bad parameters, bad files."""


class CapacityError(RuntimeError):
    """Raised when an exact computation would exceed its configured work cap."""


class InfeasibleError(ValueError):
    """Raised when a fractional point lies outside the cardinality polytope."""


class InvariantError(AssertionError):
    """Raised when an algorithm state violates a structural invariant."""
