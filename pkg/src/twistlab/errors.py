"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class ReferenceAmplitudeError(InvalidInputError):
    """The reference configuration has (numerically) zero amplitude."""


class SingularInputError(InvalidInputError):
    """A closed-form expression hits a pole or branch point."""


class NormalizationError(InvalidInputError):
    """A normalized state was required."""


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""
