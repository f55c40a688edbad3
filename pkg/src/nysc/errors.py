"""Exception types raised across the library.

Every failure mode maps to one of these so the command line layer can
translate them into stable exit codes.
"""


class NyscError(Exception):
    """Base class for all library-specific failures."""


class InvalidArgumentError(NyscError, ValueError):
    """A caller-supplied argument violates a precondition."""


class SizeLimitError(NyscError):
    """A dense n-by-n computation was requested above the configured cap."""


class DegenerateGraphError(NyscError):
    """The exact similarity graph has an isolated sample (zero degree)."""


class DegenerateDegreeError(NyscError):
    """Approximate degrees came out nonpositive beyond numerical noise."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        # sample indices whose estimated degree was unusable
        self.indices = list(indices) if indices is not None else []


class NotPsdError(NyscError):
    """A matrix expected to be positive semidefinite is not, beyond tolerance."""


class NumericalError(NyscError):
    """A numerical routine failed to converge or produced unusable output."""


class UndefinedMetricError(NyscError):
    """A requested score is undefined for the given inputs."""
