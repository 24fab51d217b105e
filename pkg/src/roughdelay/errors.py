"""Exception types raised across the package."""


class RoughDelayError(Exception):
    """Base class for all package errors."""


class GridMismatchError(RoughDelayError, ValueError):
    """Time grids, steps or delays are not commensurate."""


class OutOfWindowError(RoughDelayError, ValueError):
    """A requested shift or interval leaves the sampled window."""


class ConfigError(RoughDelayError, ValueError):
    """Invalid parameters or configuration."""


class WrongKindError(RoughDelayError, TypeError):
    """Operation applied to the wrong kind of controlled path."""


class DivergenceError(RoughDelayError, ArithmeticError):
    """Numerical blow-up during time stepping."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ContractionError(RoughDelayError, ValueError):
    """The fixed-point map is not a contraction."""

    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor
