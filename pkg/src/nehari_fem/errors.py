"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or inconsistent input (sizes, bounds, exponents, weights)."""


class DomainError(ValueError):
    """Argument outside the domain of a scalar or field operation."""


class SingularityGuardError(ValueError):
    """A field value that must stay above the positivity floor dropped below it."""


class NoIntersectionError(DomainError):
    """The ray {t u : t > 0} does not meet the Nehari manifold."""


class InfeasibleRayError(NoIntersectionError):
    """Every restart of the branch solver started on a ray missing the manifold."""
