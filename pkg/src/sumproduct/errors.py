class ValidationError(ValueError):
    """Bad input: out-of-range parameters, malformed literals, non-primes."""


class InvariantViolation(AssertionError):
    """A checked mathematical identity or inequality failed."""


class ConstantFloorError(RuntimeError):
    """An energy-increment step missed its configured correlation or energy floor.

    ``trace`` carries the decomposition state up to the failing step so the
    mis-sized constant can be diagnosed.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class IterationCapExceeded(RuntimeError):
    pass
