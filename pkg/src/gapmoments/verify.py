"""Self-checks run by ``gapmoments verify``.

Each check returns a short detail string on success and raises
``AssertionError`` (or a package error) on failure.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

from . import predictors as pr
from . import specialfn as sf
from .gapstats import (accumulate, negative_moment_exact, positive_moment_exact,
                       read_snapshot)
from .report import REFERENCE_RATIOS, TABLES, build_row
from .sieve import pi_exact, prime_stream


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@lru_cache(maxsize=4)
def trial_division_primes(n: int) -> list[int]:
    """All primes ``<= n`` by trial division; slow but independent of the sieve."""
    primes: list[int] = []
    for m in range(2, n + 1):
        is_prime = True
        for p in primes:
            if p * p > m:
                break
            if m % p == 0:
                is_prime = False
                break
        if is_prime:
            primes.append(m)
    return primes


def _close(a: float, b: float, rel: float) -> bool:
    return abs(a - b) <= rel * abs(b)


def check_sieve_oracle(bound: int = 10**6, samples: int = 50, seed: int = 1) -> str:
    oracle = trial_division_primes(bound)
    stream = prime_stream(bound, segment_size=1 << 12).to_array().tolist()
    assert stream == oracle, "sieve output differs from trial division"
    rng = random.Random(seed)
    for x in [rng.randrange(0, bound + 1) for _ in range(samples)]:
        assert pi_exact(x) == bisect.bisect_right(oracle, x), f"pi({x}) mismatch"
    return f"{len(oracle)} primes <= {bound}, {samples} random pi(x) values"


def check_histogram_oracle(bound: int = 10**6, samples: int = 20, seed: int = 2) -> str:
    oracle = trial_division_primes(bound)
    rng = random.Random(seed)
    xs = sorted({rng.randrange(3, bound + 1) for _ in range(samples)})
    hists = accumulate(prime_stream(bound), xs)
    for h in hists:
        ps = oracle[: bisect.bisect_right(oracle, h.x)]
        counts: dict[int, int] = {}
        for a, b in zip(ps, ps[1:]):
            counts[b - a] = counts.get(b - a, 0) + 1
        assert h.pi_x == len(ps) and h.counts == dict(sorted(counts.items())), \
            f"histogram mismatch at x={h.x}"
        assert positive_moment_exact(h, 1).value == ps[-1] - 2, f"telescoping fails at {h.x}"
        brute = math.fsum(1.0 / (b - a) for a, b in zip(ps, ps[1:]))
        assert _close(negative_moment_exact(h, 1).value, brute, 1e-12), f"M_-1 at {h.x}"
    return f"{len(hists)} histograms match brute-force enumeration"


def check_polylog_closed_form() -> str:
    for q in (0.1, 0.5, 0.9, 0.99):
        assert _close(sf.polylog(1, q), -math.log1p(-q), 1e-10), f"Li_1({q})"
    return "Li_1(q) = -log(1-q) at q in {0.1, 0.5, 0.9, 0.99}"


def check_pronic_series() -> str:
    for q in (0.1, 0.5, 0.9):
        direct = math.fsum(q**n / (n * (n + 1)) for n in range(1, 2000))
        assert _close(sf.pronic_series(q), direct, 1e-10), f"pronic series at q={q}"
    return "sum q^n/(n(n+1)) closed form matches termwise sum"


def check_zeta() -> str:
    assert _close(sf.zeta_int(2), math.pi**2 / 6, 1e-13)
    assert _close(sf.zeta_int(4), math.pi**4 / 90, 1e-13)
    return "zeta(2), zeta(4) match closed forms to 1e-13"


def check_gamma() -> str:
    for n in range(16):
        assert _close(sf.gamma_fn(n + 1), math.factorial(n), 1e-12), f"Gamma({n + 1})"
    return "Gamma(n+1) = n! for n <= 15"


def check_bombieri() -> str:
    avg = sf.bombieri_average(10**6)
    target = 2 / sf.twin_prime_constant()
    assert abs(avg - target) < 1e-3, f"average {avg} vs 2/C2 = {target}"
    return f"mean over k <= 10^6 = {avg:.6f}, 2/C2 = {target:.6f}"


def check_twin_prime_constant() -> str:
    prod = sf.twin_prime_product(10**6)
    assert _close(prod, sf.twin_prime_constant(), 1e-6)
    return f"truncated product to 10^6 = {prod:.10f}"


def check_predictor_consistency() -> str:
    for e in range(20, 41, 4):
        inp = pr.PredictorInput.from_li(2.0**e)
        assert _close(pr.mk_meanfield(inp, 1), pr.m1_pred_pi(inp), 1e-10), f"k=1 at 2^{e}"
        assert pr.mk_meanfield(inp, 2) > pr.m2_pred_pi(inp), f"k=2 ordering at 2^{e}"
    inp = pr.PredictorInput.from_li(2.0**40)
    zeta4, mf4 = pr.mk_zeta(inp, 4), pr.mk_meanfield(inp, 4)
    # the zeta form keeps the d=4 term free of q; compare against the all-gap
    # mean-field sum built the same way
    q = inp.q
    mf4_flat = mf4 + 2 * inp.pi_sq_over_x / (1 - 2 * inp.density) / 16 * (1 - q) / 16
    assert _close(zeta4, mf4_flat, 1e-3), f"zeta form {zeta4} vs {mf4_flat}"
    return ("meanfield(1) = M1_PI, meanfield(2) > M2_PI; at 2^40 zeta(4) form vs "
            f"meanfield(4): {zeta4 / mf4 - 1:+.2e}, vs same with flat d=4 term: "
            f"{zeta4 / mf4_flat - 1:+.2e}")


def check_m4_coefficients() -> str:
    """Compare the stored M_{-4} constants with the small-gap sums they come from."""
    lead_pi = float(pr.M4_PI_COEFFS[0])
    lead_log = float(pr.M4_LOG_COEFFS[0])
    d10 = 1 + 2**-4 + 2 / 3**4 + 1 / 4**4 + (4 / 3) / 5**4
    d14 = d10 + 2 / 6**4 + (6 / 5) / 7**4
    assert _close(lead_log, d10, 1e-12) and _close(lead_pi, d14, 1e-12)
    return (f"pi-form constant {lead_pi:.7f} = gaps d<=14, log-form constant "
            f"{lead_log:.7f} = gaps d<=10 (discrepancy {lead_pi - lead_log:.2e})")


def check_snapshots(data_dir: Path) -> list[CheckResult]:
    out = []
    for path in sorted(Path(data_dir).glob("tau_*.csv")):
        name = f"identity:{path.name}"
        try:
            h = read_snapshot(path)
            out.append(CheckResult(name, True, f"x={h.x}, pi={h.pi_x}"))
        except Exception as exc:  # noqa: BLE001 - every failure is reported by name
            out.append(CheckResult(name, False, str(exc)))
    return out


def check_table_rows(x: int = 2**24, tol: float = 5e-4) -> str:
    (hist,) = accumulate(prime_stream(x), [x])
    parts = []
    for table, (k, f2, f1, dec) in TABLES.items():
        row = build_row(hist, k, [f2, f1])
        ref2, ref1 = REFERENCE_RATIOS[table][x]
        r2, r1 = row.ratios[f2], row.ratios[f1]
        assert abs(r2 - ref2) <= tol and abs(r1 - ref1) <= tol, \
            f"table {table} at x={x}: got ({r2:.6f}, {r1:.6f}), expected ({ref2}, {ref1})"
        parts.append(f"T{table} ({r2:.{dec}f}, {r1:.{dec}f})")
    return ", ".join(parts)


QUICK: list[tuple[str, Callable[[], str]]] = [
    ("sieve_vs_trial_division", check_sieve_oracle),
    ("histogram_vs_enumeration", check_histogram_oracle),
    ("polylog_closed_form", check_polylog_closed_form),
    ("pronic_series", check_pronic_series),
    ("zeta_closed_forms", check_zeta),
    ("gamma_factorial", check_gamma),
    ("bombieri_average", check_bombieri),
    ("twin_prime_constant", check_twin_prime_constant),
    ("predictor_consistency", check_predictor_consistency),
    ("m4_coefficients", check_m4_coefficients),
]

FULL: list[tuple[str, Callable[[], str]]] = [
    ("table_rows_2^24", check_table_rows),
]


def run_checks(level: str = "quick", data_dir: Path | None = None) -> list[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown verification level {level!r}")
    checks = QUICK + (FULL if level == "full" else [])
    results = []
    for name, fn in checks:
        try:
            results.append(CheckResult(name, True, fn()))
        except Exception as exc:  # noqa: BLE001
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    if data_dir is not None and Path(data_dir).is_dir():
        results.extend(check_snapshots(Path(data_dir)))
    return results
