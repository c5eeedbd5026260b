"""Prime-gap histograms, exact gap moments, and their closed-form predictors."""

from .errors import (CorruptSnapshotError, DomainError, GapMomentsError,
                     PreconditionError, ResumeMismatchError, ToleranceError,
                     TruncatedRunError)
from .gapstats import (CheckpointPlan, GapHistogram, MomentSet, accumulate,
                       import_counts, iter_accumulate, negative_moment_exact,
                       positive_moment_exact, read_snapshot, tau, write_snapshot)
from .sieve import PrimeStream, SegmentPlan, base_sieve, pi_exact, prime_stream, sieve_segment

__version__ = "0.1.0"
