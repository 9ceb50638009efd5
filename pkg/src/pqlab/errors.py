"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An input violates a documented precondition (shape, finiteness, parity, ...)."""


class OutOfRangeError(ValueError):
    """A parameter lies outside its admissible range."""


class UnsupportedRegimeError(ValueError):
    """The requested exponents fall outside the regime the estimate covers.

    Raised by the higher-integrability and Lipschitz-budget machinery when
    q >= p + 2, where the bracket exponents degenerate.
    """


class ConfigError(InvalidInputError):
    """An experiment configuration file is malformed or inconsistent."""


class NonConvergenceError(RuntimeError):
    """Iteration failed to reach tolerance.

    Carries the best iterate reached so far in ``best`` (a Solution or field
    array, depending on the caller).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NumericalBlowupError(RuntimeError):
    """A non-finite value appeared during iteration."""
