"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class OutOfRegimeError(ValueError):
    """A perturbative expression was evaluated where it does not apply.

    ``magnitude`` carries the offending value of the correction term.
    """

    def __init__(self, message, magnitude):
        super().__init__(message)
        self.magnitude = magnitude


class IntegrationError(RuntimeError):
    """The amplitude integrator lost unitarity beyond tolerance."""

    def __init__(self, message, drift, sample_index=None):
        super().__init__(message)
        self.drift = drift
        self.sample_index = sample_index
