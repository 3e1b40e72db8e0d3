"""Exception types shared across the lab."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class EscapedDomain(DomainError):
    """An iterate left the domain (0, delta) of a map family."""

    def __init__(self, step, value, delta):
        self.step = step
        self.value = value
        self.delta = delta
        super().__init__(
            f"iterate {step} = {value!r} left the domain (0, {delta!r})"
        )


class NonContracting(DomainError):
    """Iterates of an expanding-in-u map do not tend to 0."""


class InversionFailure(DomainError):
    """Monotone root-finding for an inverse map could not bracket."""


class NoBracket(DomainError):
    """No sign change was found for the sparkling-connection equation."""


class InvalidConfig(ValueError):
    """A scenario or model configuration is malformed or inconsistent."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)


class OrderingViolation(ValueError):
    """The interleaving order of the exterior roots does not hold."""


class OutOfRange(ValueError):
    """A value falls outside the range covered by a stored table."""


class DegenerateClass(ValueError):
    """Every coordinate of a projective point is zero."""


class AmbiguousRegime(ValueError):
    """Rational/irrational detection disagrees and the caller must decide."""


class BoundViolation(AssertionError):
    """A proven counting bound failed; indicates a numerical defect."""
