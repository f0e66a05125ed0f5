"""Exception and warning types shared across the package."""


class PdflowError(Exception):
    """Base class for all pdflow errors."""


class DimensionMismatchError(PdflowError, ValueError):
    """An array argument has the wrong length or shape.

    Carries the name of the offending field so callers can report it.
    """

    def __init__(self, field, expected, got):
        self.field = field
        self.expected = expected
        self.got = got
        super().__init__(
            f"dimension mismatch in '{field}': expected {expected}, got {got}"
        )


class ValidationError(PdflowError, ValueError):
    """Problem data violates a structural requirement (e.g. definiteness)."""


class DomainError(PdflowError, ValueError):
    """A point lies outside the admissible domain (lambda >= 0)."""


class IntegrationError(PdflowError, RuntimeError):
    """Integration aborted; carries the offending state and time."""

    def __init__(self, message, t=None, x=None, lam=None):
        self.t = t
        self.x = x
        self.lam = lam
        super().__init__(message)


class WitnessSearchError(PdflowError, RuntimeError):
    """The counterexample witness search exhausted its candidate grid."""


class SlaterUnverifiedWarning(UserWarning):
    """No interior candidate was supplied, so the strict-feasibility
    (Slater) check was skipped."""
