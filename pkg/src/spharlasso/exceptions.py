"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a numerical routine."""


class StationarityError(ValueError):
    """An autoregressive coefficient row has a characteristic root in the closed unit disk."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""
