"""Exception types raised by the simulator."""


class ChsmcError(Exception):
    """Base class for all simulator errors."""


class ValidationError(ChsmcError, ValueError):
    """A parameter or configuration value violates its constraints."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(ChsmcError, ValueError):
    """A configuration file could not be parsed."""

    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class NonZeroMean(ChsmcError, ValueError):
    """Input to the inverse Neumann Laplacian does not have zero mean."""


class NoConvergence(ChsmcError, RuntimeError):
    """A scalar resolvent solve did not converge."""


class MeanOutsideDomain(ChsmcError, ValueError):
    """The initial mean of phi is not in the interior of D(beta)."""


class PotentialInfinite(ChsmcError, ValueError):
    """The convex potential is infinite on the initial phase field."""


class Blowup(ChsmcError, RuntimeError):
    """The time stepper produced non-finite or huge values."""


class MeanMismatch(ChsmcError, ValueError):
    """Two initial phase fields have different means."""


class ParamMismatch(ChsmcError, ValueError):
    """Model parameters do not satisfy a required relation."""
