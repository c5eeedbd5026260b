"""Special functions used by the gap-moment predictors.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError, ToleranceError
from .sieve import base_sieve

# 2 * prod_{p>2} (1 - 1/(p-1)^2)
TWIN_PRIME_CONSTANT = 1.320323631693739

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-12
    max_terms: int = 10**6

    def __post_init__(self):
        if not self.rel > 0:
            raise DomainError(f"rel tolerance must be positive, got {self.rel}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_TOL = Tolerance()


def li_series(x: float, n_terms: int | None = None) -> float:
    """Truncated asymptotic expansion of the logarithmic integral.

    Sums ``n! x / log(x)**(n+1)`` for ``n = 0 .. n0`` with ``n0 = floor(log x)``
    unless ``n_terms`` overrides the cut.  The lower-limit constant of the
    integral is not included.
    """
    if not x >= math.e ** 2:
        raise DomainError(f"li_series needs x >= e^2, got {x}")
    L = math.log(x)
    n0 = math.floor(L) if n_terms is None else n_terms
    if n0 < 0:
        raise DomainError(f"n_terms must be >= 0, got {n_terms}")
    terms = []
    term = x / L
    for n in range(n0 + 1):
        terms.append(term)
        term *= (n + 1) / L
    return math.fsum(terms)


def li_numeric(x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """``Li(x) = int_2^x du / log u`` by adaptive quadrature.

    Integrates ``e^t / t`` over ``[log 2, log x]``, which is smooth and far less
    stiff than the original integrand on a wide range.
    """
    if not x >= 2:
        raise DomainError(f"li_numeric needs x >= 2, got {x}")
    if x == 2:
        return 0.0
    a, b = math.log(2.0), math.log(x)
    # quadpack refuses relative targets below 50 ulp
    value, abserr = integrate.quad(lambda t: math.exp(t) / t, a, b, epsabs=0.0,
                                   epsrel=max(tol.rel, 50 * _EPS), limit=200)
    if abserr > tol.rel * abs(value):
        raise ToleranceError(f"quadrature for Li({x}) stalled at error {abserr:.3g}")
    return value


def polylog(k: int, q: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """``Li_k(q) = sum_{n>=1} q**n / n**k`` for real ``|q| < 1``.

    Summation stops once the geometric bound on the remaining tail,
    ``|term| * |q| / (1 - |q|)``, drops below ``tol.rel`` of the partial sum.
    """
    if k < 1 or int(k) != k:
        raise DomainError(f"polylog order must be an integer >= 1, got {k}")
    if not abs(q) < 1:
        raise DomainError(f"polylog needs |q| < 1, got {q}")
    if q == 0:
        return 0.0
    aq = abs(q)
    tail_factor = aq / (1.0 - aq)
    terms = []
    power = 1.0
    partial = 0.0
    for n in range(1, tol.max_terms + 1):
        power *= q
        term = power / n**k
        terms.append(term)
        partial += term
        if abs(term) * tail_factor <= tol.rel * abs(partial):
            return math.fsum(terms)
    raise ToleranceError(f"polylog({k}, {q}) did not converge in {tol.max_terms} terms")


def pronic_series(q: float) -> float:
    """Closed form of ``sum_{n>=1} q**n / (n (n+1))`` for ``0 < |q| < 1``."""
    if not abs(q) < 1:
        raise DomainError(f"pronic_series needs |q| < 1, got {q}")
    if q == 0:
        return 0.0
    return (q + (1.0 - q) * math.log1p(-q)) / q


_ZETA_CUTOFF = 10_000


@lru_cache(maxsize=None)
def zeta_int(k: int) -> float:
    """Riemann zeta at an integer ``k >= 2``.

    Direct sum below ``N = 10**4``; the tail from ``N`` on is the integral
    plus Euler-Maclaurin corrections through the third derivative.
    """
    if int(k) != k or k < 2:
        raise DomainError(f"zeta_int needs an integer k >= 2, got {k}")
    k = int(k)
    N = _ZETA_CUTOFF
    n = np.arange(1, N, dtype=np.float64)
    head = math.fsum((n ** -k).tolist())
    tail = (N ** (1 - k) / (k - 1)
            + 0.5 * N ** -k
            + k * N ** (-k - 1) / 12.0
            - k * (k + 1) * (k + 2) * N ** (-k - 3) / 720.0)
    return head + tail


def gamma_fn(s: float) -> float:
    if not s > 0:
        raise DomainError(f"gamma_fn needs s > 0, got {s}")
    return math.gamma(s)


def _odd_prime_factors(n: int) -> list[int]:
    while n % 2 == 0:
        n //= 2
    out = []
    p = 3
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 2
    if n > 1:
        out.append(n)
    return out


def singular_series(d: int) -> Fraction:
    """Exact ``prod_{p | d, p odd} (p-1)/(p-2)``; 1 for powers of two."""
    if d < 2 or d % 2:
        raise DomainError(f"singular_series needs an even d >= 2, got {d}")
    if d > 2**32:
        raise DomainError(f"singular_series limited to d <= 2**32, got {d}")
    out = Fraction(1)
    for p in _odd_prime_factors(d):
        out *= Fraction(p - 1, p - 2)
    return out


def twin_prime_constant() -> float:
    return TWIN_PRIME_CONSTANT


def twin_prime_product(bound: int) -> float:
    """Truncated product ``2 prod_{2<p<=bound} (1 - 1/(p-1)^2)``.

    Converges like ``1/(bound log bound)``; useful only as a sanity check on
    :data:`TWIN_PRIME_CONSTANT`.
    """
    p = base_sieve(bound)[1:].astype(np.float64)
    return 2.0 * math.exp(float(np.sum(np.log1p(-1.0 / (p - 1.0) ** 2))))


def singular_series_table(n: int) -> np.ndarray:
    """Float array ``s`` with ``s[k]`` the odd-prime product for ``k = 0..n``.

    ``s[0]`` is unused and set to 0.
    """
    s = np.ones(n + 1, dtype=np.float64)
    s[0] = 0.0
    if n >= 3:
        for p in base_sieve(n)[1:].tolist():
            s[p::p] *= (p - 1) / (p - 2)
    return s


def bombieri_average(n: int) -> float:
    """Mean of the odd-prime product ``prod_{p|k, p>2} (p-1)/(p-2)`` over ``1 <= k <= n``.

    Tends to ``2 / C2`` as ``n`` grows.
    """
    if n < 1:
        raise DomainError(f"bombieri_average needs n >= 1, got {n}")
    s = singular_series_table(n)
    return math.fsum(s[1:].tolist()) / n
