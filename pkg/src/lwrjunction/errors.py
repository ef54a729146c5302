"""Exception hierarchy shared by the solver, simulator and CLI."""


class ValidationError(ValueError):
    """Input rejected before any computation.

    ``errors`` holds every problem found, not just the first one.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DomainError(ValidationError):
    """A value lies outside the domain of an operation (e.g. density > k_j)."""


class ConfigurationError(ValidationError):
    """A network scenario cannot be simulated as configured (CFL, topology)."""


class CapacityError(ValidationError):
    """A brute-force routine was asked for a problem larger than its cap."""


class InvariantError(RuntimeError):
    """An internal cross-check failed; the result would be wrong."""
