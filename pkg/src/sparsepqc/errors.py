"""Exception types shared across the package."""


class SparsePqcError(Exception):
    """Base class for all errors raised by this package."""


class CapacityError(SparsePqcError):
    """Requested system size exceeds the simulator's memory guard."""


class WireError(SparsePqcError):
    """Duplicate or out-of-range qubit index."""


class ValidationError(SparsePqcError):
    """An input violates a documented precondition."""


class ParseError(SparsePqcError):
    """A file or string could not be parsed."""


class ConfigError(SparsePqcError):
    """Configuration is malformed or inconsistent."""


class ShapeError(SparsePqcError):
    """Array or vector length does not match the expected arity."""


class ScheduleError(SparsePqcError):
    """A topology update was requested outside the allowed schedule."""


class InfeasibleSparsityError(SparsePqcError):
    """Requested sparsity cannot satisfy the per-block structural guarantees."""
