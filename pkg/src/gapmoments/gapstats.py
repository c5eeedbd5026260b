"""Gap histograms tau_d(x), exact moments, and snapshot files.

A :class:`GapHistogram` stores its counts densely by half-gap: slot ``i``
holds tau_{2i} for ``i >= 1`` and slot 0 holds the single odd gap d=1 of the
pair (2, 3).  With that layout ``sum(tau_d) == pi(x) - 1`` holds exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (CorruptSnapshotError, DomainError, PreconditionError,
                     TruncatedRunError)
from .sieve import PrimeStream, prev_prime


@dataclass(frozen=True, eq=False)
class GapHistogram:
    x: int
    pi_x: int
    half_counts: np.ndarray  # int64; see module docstring for the slot layout

    def __post_init__(self):
        hc = np.asarray(self.half_counts, dtype=np.int64)
        # trailing zero slots carry no information; trim so equal histograms compare equal
        nz = np.flatnonzero(hc)
        hc = hc[: nz[-1] + 1] if nz.size else hc[:0]
        hc.setflags(write=False)
        object.__setattr__(self, "half_counts", hc)

    @classmethod
    def from_counts(cls, x: int, pi_x: int, counts: Mapping[int, int]) -> "GapHistogram":
        """Build from a ``{d: tau_d}`` mapping; odd ``d > 1`` is rejected."""
        size = 1
        for d in counts:
            if d < 1 or (d > 1 and d % 2):
                raise DomainError(f"impossible gap d={d}")
            size = max(size, d // 2 + 1)
        hc = np.zeros(size, dtype=np.int64)
        for d, c in counts.items():
            if c < 0:
                raise DomainError(f"negative count for d={d}")
            hc[d // 2] += c
        return cls(x, pi_x, hc)

    @property
    def counts(self) -> dict[int, int]:
        """Nonzero bins as ``{d: tau_d}`` in ascending ``d``."""
        out = {}
        for i in np.flatnonzero(self.half_counts).tolist():
            out[1 if i == 0 else 2 * i] = int(self.half_counts[i])
        return out

    @property
    def max_gap(self) -> int:
        n = len(self.half_counts)
        if n == 0:
            return 0
        return 1 if n == 1 else 2 * (n - 1)

    @property
    def total(self) -> int:
        return int(self.half_counts.sum())

    def tau(self, d: int) -> int:
        return tau(self, d)

    def check_identity(self) -> None:
        if self.total != self.pi_x - 1 and not (self.pi_x == 0 and self.total == 0):
            raise CorruptSnapshotError(
                f"identity sum(tau_d) = pi - 1 fails at x={self.x}: "
                f"sum={self.total}, pi={self.pi_x}")

    def __eq__(self, other):
        if not isinstance(other, GapHistogram):
            return NotImplemented
        return (self.x == other.x and self.pi_x == other.pi_x
                and np.array_equal(self.half_counts, other.half_counts))

    def __repr__(self):
        return f"GapHistogram(x={self.x}, pi_x={self.pi_x}, max_gap={self.max_gap})"


def tau(hist: GapHistogram, d: int) -> int:
    """tau_d for the histogram's bound; 0 for bins never seen."""
    if d < 1:
        raise DomainError(f"gap must be >= 1, got {d}")
    if d > 1 and d % 2:
        return 0
    i = d // 2
    return int(hist.half_counts[i]) if i < len(hist.half_counts) else 0


@dataclass(frozen=True)
class CheckpointPlan:
    """Geometric checkpoints ``start, start*ratio, ...`` up to ``stop``.

    ``stop`` itself is always the last checkpoint, even when it is not a
    member of the progression.
    """

    stop: int
    start: int = 2**15
    ratio: int = 2

    def __post_init__(self):
        if self.start < 4:
            raise DomainError(f"checkpoint start must be >= 4, got {self.start}")
        if self.ratio < 2:
            raise DomainError(f"checkpoint ratio must be >= 2, got {self.ratio}")
        if self.stop < self.start:
            raise DomainError(f"stop {self.stop} is below start {self.start}")

    def checkpoints(self) -> list[int]:
        out = []
        c = self.start
        while c <= self.stop:
            out.append(c)
            c *= self.ratio
        if out[-1] != self.stop:
            out.append(self.stop)
        return out


def _as_checkpoints(plan) -> list[int]:
    if isinstance(plan, CheckpointPlan):
        return plan.checkpoints()
    cps = sorted({int(c) for c in plan})
    if not cps or cps[0] < 2:
        raise DomainError("explicit checkpoints must be >= 2")
    return cps


def accumulate(stream: PrimeStream, plan: CheckpointPlan | Sequence[int],
               initial: GapHistogram | None = None) -> list[GapHistogram]:
    """Run the gap histogram over ``stream`` and snapshot it at each checkpoint.

    A pair is counted at checkpoint ``c`` when its larger prime is ``<= c``.
    When ``initial`` is given, the stream must start at ``initial.x + 1`` and
    counting continues from that histogram.
    """
    return list(iter_accumulate(stream, plan, initial))


def iter_accumulate(stream: PrimeStream, plan: CheckpointPlan | Sequence[int],
                    initial: GapHistogram | None = None) -> Iterator[GapHistogram]:
    """Generator form of :func:`accumulate`, yielding each snapshot when done."""
    cps = _as_checkpoints(plan)
    if initial is not None:
        if stream.start != initial.x + 1:
            raise PreconditionError(
                f"resumed stream must start at {initial.x + 1}, not {stream.start}")
        cps = [c for c in cps if c > initial.x]
        counts = initial.half_counts.astype(np.int64).copy()
        n_primes = initial.pi_x
        prev = prev_prime(initial.x) if initial.x >= 2 else None
    else:
        if stream.start > 2:
            raise PreconditionError("a fresh accumulation needs a stream starting at 2")
        counts = np.zeros(1, dtype=np.int64)
        n_primes = 0
        prev = None

    out: list[GapHistogram] = []
    pos = 0

    def add(gaps: np.ndarray) -> None:
        nonlocal counts
        if gaps.size == 0:
            return
        b = np.bincount(gaps >> 1)
        if len(b) > len(counts):
            counts = np.pad(counts, (0, len(b) - len(counts)))
        counts[: len(b)] += b

    for chunk in stream.chunks():
        if chunk.size == 0:
            continue
        gaps = np.diff(chunk, prepend=prev) if prev is not None else np.diff(chunk)
        # gaps[j] closes at chunk[j] when prev exists, else at chunk[j+1]
        shift = 0 if prev is not None else 1
        done = 0
        while pos < len(cps) and cps[pos] < chunk[-1]:
            c = cps[pos]
            cut = int(np.searchsorted(chunk, c, side="right"))
            add(gaps[done: max(cut - shift, done)])
            done = max(cut - shift, done)
            hist = GapHistogram(c, n_primes + cut, counts.copy())
            out.append(hist)
            yield hist
            pos += 1
        add(gaps[done:])
        n_primes += len(chunk)
        prev = int(chunk[-1])

    while pos < len(cps) and cps[pos] <= stream.limit:
        hist = GapHistogram(cps[pos], n_primes, counts.copy())
        out.append(hist)
        yield hist
        pos += 1
    if pos < len(cps):
        raise TruncatedRunError(
            f"prime stream ended at {stream.limit} before checkpoint {cps[pos]}", out)


@dataclass(frozen=True)
class MomentSet:
    x: int
    k: float
    value: float
    kind: str  # "positive" | "negative"


def negative_moment_exact(hist: GapHistogram, k: float) -> MomentSet:
    """``sum_d tau_d / d**k`` over every bin, the d=1 pair included."""
    if not k > 0:
        raise DomainError(f"negative moment needs k > 0, got {k}; "
                          "use positive_moment_exact")
    terms = [c / d**k for d, c in hist.counts.items()]
    return MomentSet(hist.x, k, math.fsum(terms), "negative")


def positive_moment_exact(hist: GapHistogram, k: float) -> MomentSet:
    """``sum_d tau_d * d**k`` over every bin, the d=1 pair included."""
    if not k > 0:
        raise DomainError(f"positive moment needs k > 0, got {k}")
    terms = [c * float(d) ** k for d, c in hist.counts.items()]
    return MomentSet(hist.x, k, math.fsum(terms), "positive")


# snapshot files ---------------------------------------------------------------

def snapshot_name(x: int) -> str:
    return f"tau_{x}.csv"


def format_snapshot(hist: GapHistogram) -> str:
    lines = [f"# x={hist.x}", f"# pi={hist.pi_x}"]
    lines += [f"{d},{c}" for d, c in hist.counts.items()]
    return "\n".join(lines) + "\n"


def write_snapshot(hist: GapHistogram, path: str | os.PathLike) -> Path:
    """Write ``hist`` atomically; a half-written file is never left at ``path``."""
    hist.check_identity()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_snapshot(hist))
    os.replace(tmp, path)
    return path


def _parse_rows(lines: Iterable[str], source: str) -> Iterator[tuple[int, int]]:
    last = 0
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace("\t", ",").replace(" ", ",").split(",")
        parts = [p for p in parts if p]
        if len(parts) != 2:
            raise CorruptSnapshotError(f"{source}:{lineno}: expected 'd,count', got {raw!r}")
        try:
            d, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise CorruptSnapshotError(f"{source}:{lineno}: non-integer field in {raw!r}") from None
        if d <= last:
            raise CorruptSnapshotError(f"{source}:{lineno}: gaps not strictly ascending")
        if c < 0 or (d > 1 and d % 2):
            raise CorruptSnapshotError(f"{source}:{lineno}: invalid bin {d},{c}")
        last = d
        yield d, c


def parse_snapshot(text: str, source: str = "<snapshot>") -> GapHistogram:
    header: dict[str, int] = {}
    lines = text.split("\n")
    for line in lines:
        if line.startswith("#") and "=" in line:
            key, _, val = line[1:].partition("=")
            try:
                header[key.strip()] = int(val.strip())
            except ValueError:
                raise CorruptSnapshotError(f"{source}: bad header line {line!r}") from None
    if "x" not in header or "pi" not in header:
        raise CorruptSnapshotError(f"{source}: missing '# x=' or '# pi=' header")
    counts = dict(_parse_rows(lines, source))
    hist = GapHistogram.from_counts(header["x"], header["pi"], counts)
    hist.check_identity()
    return hist


def read_snapshot(path: str | os.PathLike) -> GapHistogram:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptSnapshotError(f"{path}: not UTF-8 ({exc})") from None
    return parse_snapshot(text, str(path))


def import_counts(path: str | os.PathLike, x: int, pi_x: int | None = None) -> GapHistogram:
    """Load an external headerless ``d,count`` table as a histogram at ``x``.

    Comment lines are ignored.  When ``pi_x`` is omitted it is recomputed from
    ``sum(tau_d) = pi - 1``.  Tables listing only even gaps get the d=1 bin
    of the pair (2, 3) added, so the identity and the moment convention agree
    with sieved histograms.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        counts = dict(_parse_rows(fh, str(path)))
    if 1 not in counts and x >= 3:
        counts[1] = 1
    total = sum(counts.values())
    if pi_x is None:
        pi_x = total + 1
    hist = GapHistogram.from_counts(x, pi_x, counts)
    hist.check_identity()
    return hist
