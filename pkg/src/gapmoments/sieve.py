"""Segmented, odd-only sieve of Eratosthenes.

Only odd numbers are represented (prime 2 is special-cased), one flag per odd
number.  Segments can be sieved in worker processes, but the stream always
delivers them in ascending order so that consecutive-prime gaps can be taken
across segment boundaries.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, PreconditionError

# 2**18 odd numbers per segment: 256 KiB of flags, sized for a typical L2 cache.
DEFAULT_SEGMENT_SIZE = 1 << 18


def base_sieve(n: int) -> np.ndarray:
    """Return all primes ``<= n`` in increasing order as an ``int64`` array."""
    if n < 2:
        raise DomainError(f"base_sieve needs n >= 2, got {n}")
    # flags[i] stands for the odd number 2*i + 1
    flags = np.ones((n + 1) // 2, dtype=bool)
    flags[0] = False
    for i in range(1, (math.isqrt(n) - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[p * p // 2 :: p] = False
    odd = 2 * np.flatnonzero(flags).astype(np.int64) + 1
    return np.concatenate((np.array([2], dtype=np.int64), odd))


def _check_base_cover(hi: int, base_primes: Sequence[int]) -> None:
    root = math.isqrt(hi)
    last = int(base_primes[-1]) if len(base_primes) else 1
    if last >= root:
        return
    # base primes may legitimately stop short of isqrt(hi) if no prime lies in between
    for m in range(last + 1, root + 1):
        if m >= 2 and all(m % int(p) for p in base_primes if int(p) * int(p) <= m):
            raise PreconditionError(
                f"base primes end at {last} but {m} <= sqrt({hi}) is prime"
            )


def sieve_segment(lo: int, hi: int, base_primes: Sequence[int]) -> np.ndarray:
    """Primality flags for the odd numbers ``lo, lo+2, ..., hi``.

    Element ``i`` of the returned boolean array is true iff ``lo + 2*i`` is
    prime.  ``base_primes`` must contain every prime up to ``isqrt(hi)``.
    """
    if lo < 3 or hi < lo or lo % 2 == 0 or hi % 2 == 0:
        raise PreconditionError(f"need odd 3 <= lo <= hi, got lo={lo}, hi={hi}")
    _check_base_cover(hi, base_primes)
    primes = np.asarray(base_primes, dtype=np.int64)
    primes = primes[(primes > 2) & (primes * primes <= hi)]
    return _sieve_odd_range(lo, hi, primes)


def _sieve_odd_range(lo: int, hi: int, primes: np.ndarray) -> np.ndarray:
    # primes: odd base primes with p*p <= hi, already validated
    seg = np.ones((hi - lo) // 2 + 1, dtype=bool)
    if primes.size == 0:
        return seg
    first = np.maximum(primes * primes, -(-lo // primes) * primes)
    first += primes * (first % 2 == 0)
    offsets = (first - lo) // 2
    for p, off in zip(primes.tolist(), offsets.tolist()):
        seg[off::p] = False
    return seg


@dataclass(frozen=True)
class SegmentPlan:
    """How the odd numbers in ``[start, limit]`` are cut into segments."""

    limit: int
    segment_size: int = DEFAULT_SEGMENT_SIZE
    start: int = 2
    base_primes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.limit < 2:
            raise DomainError(f"limit must be >= 2, got {self.limit}")
        if self.segment_size <= 0:
            raise DomainError(f"segment_size must be positive, got {self.segment_size}")
        if self.start < 2:
            raise DomainError(f"start must be >= 2, got {self.start}")
        root = math.isqrt(self.limit)
        bp = base_sieve(root) if root >= 2 else np.zeros(0, dtype=np.int64)
        object.__setattr__(self, "base_primes", bp)

    def segments(self) -> Iterator[tuple[int, int]]:
        """Yield ``(lo, hi)`` odd bounds of each segment in ascending order."""
        lo = max(3, self.start | 1)
        top = self.limit if self.limit % 2 else self.limit - 1
        span = 2 * self.segment_size
        while lo <= top:
            hi = min(lo + span - 2, top)
            yield lo, hi
            lo = hi + 2


def _segment_primes(lo: int, hi: int, base_primes: np.ndarray) -> np.ndarray:
    odd = base_primes[1:]
    odd = odd[odd * odd <= hi]
    seg = _sieve_odd_range(lo, hi, odd)
    return lo + 2 * np.flatnonzero(seg).astype(np.int64)


_WORKER_BASE: np.ndarray | None = None


def _init_worker(base_primes: np.ndarray) -> None:
    global _WORKER_BASE
    _WORKER_BASE = base_primes


def _worker_segment(bounds: tuple[int, int]) -> np.ndarray:
    return _segment_primes(bounds[0], bounds[1], _WORKER_BASE)


class PrimeStream:
    """Ordered stream of the primes in ``[start, limit]``.

    Iterating yields Python ints; :meth:`chunks` yields one ``int64`` array per
    segment and is what the bulk consumers use.  Output does not depend on
    ``segment_size`` or ``workers``.
    """

    def __init__(self, limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE,
                 workers: int = 1, start: int = 2):
        if workers < 1:
            raise DomainError(f"workers must be >= 1, got {workers}")
        self.plan = SegmentPlan(limit, segment_size, start)
        self.workers = workers

    @property
    def limit(self) -> int:
        return self.plan.limit

    @property
    def start(self) -> int:
        return self.plan.start

    def chunks(self) -> Iterator[np.ndarray]:
        if self.start <= 2:
            yield np.array([2], dtype=np.int64)
        if self.workers == 1:
            for lo, hi in self.plan.segments():
                yield _segment_primes(lo, hi, self.plan.base_primes)
            return
        # bounded look-ahead keeps memory flat while preserving order
        window = 2 * self.workers
        with ProcessPoolExecutor(self.workers, initializer=_init_worker,
                                 initargs=(self.plan.base_primes,)) as pool:
            pending: deque = deque()
            for bounds in self.plan.segments():
                pending.append(pool.submit(_worker_segment, bounds))
                if len(pending) >= window:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()

    def __iter__(self) -> Iterator[int]:
        for chunk in self.chunks():
            yield from chunk.tolist()

    def to_array(self) -> np.ndarray:
        parts = list(self.chunks())
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(parts)


def prime_stream(limit: int, *, segment_size: int = DEFAULT_SEGMENT_SIZE,
                 workers: int = 1, start: int = 2) -> PrimeStream:
    return PrimeStream(limit, segment_size=segment_size, workers=workers, start=start)


def pi_exact(x: int, *, segment_size: int = DEFAULT_SEGMENT_SIZE, workers: int = 1) -> int:
    """Number of primes ``<= x``."""
    if x < 2:
        return 0
    return sum(len(c) for c in prime_stream(x, segment_size=segment_size,
                                            workers=workers).chunks())


def prev_prime(n: int) -> int:
    """Largest prime ``<= n`` (``n >= 2``)."""
    if n < 2:
        raise DomainError(f"no prime <= {n}")
    width = 256
    while True:
        lo = max(2, n - width)
        found = prime_stream(n, start=lo).to_array()
        if found.size:
            return int(found[-1])
        width *= 4
