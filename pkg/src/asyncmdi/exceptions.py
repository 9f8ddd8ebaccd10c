"""Exception types raised by the simulator."""


class ParameterError(ValueError):
    """A configuration or argument value is outside its valid range."""


class DomainError(ValueError):
    """A function was evaluated outside the domain where it is defined."""


class NumericError(ArithmeticError):
    """A numerical procedure produced an unusable result."""


class ScenarioMismatchError(ValueError):
    """Two objects describe different scenarios and cannot be compared."""
