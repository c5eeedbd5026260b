"""Exception hierarchy shared by all gapmoments modules."""

from __future__ import annotations


class GapMomentsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GapMomentsError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class PreconditionError(GapMomentsError, ValueError):
    """The caller violated a documented precondition (e.g. too few base primes)."""


class ToleranceError(GapMomentsError, ArithmeticError):
    """A numerical routine failed to reach the requested tolerance."""


class CorruptSnapshotError(GapMomentsError):
    """A snapshot file is malformed or violates the sum(tau_d) == pi - 1 identity."""


class ResumeMismatchError(GapMomentsError):
    """Existing output conflicts with the configuration of a resumed run."""


class TruncatedRunError(GapMomentsError):
    """The prime stream ended before the final checkpoint was reached.

    ``completed`` holds every histogram finished before the stream ran out and
    ``last_checkpoint`` the bound of the last one (``None`` if there is none).
    """

    def __init__(self, message: str, completed: list | None = None):
        super().__init__(message)
        self.completed = list(completed or [])
        self.last_checkpoint = self.completed[-1].x if self.completed else None
