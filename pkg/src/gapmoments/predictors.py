"""Closed-form models for the gap counts tau_d(x) and the gap moments.

Formulas come in two flavours.  The ``*_pi`` ones take the pair (x, pi(x))
through :class:`PredictorInput`; the ``*_log`` ones take x alone and are
expansions in ``1/log x``.  Everything is evaluated in double precision with
``pi^2/x`` formed as ``(pi/x) * pi`` to keep intermediates small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import DomainError, GapMomentsError
from .specialfn import (TWIN_PRIME_CONSTANT, gamma_fn, li_series, polylog,
                        pronic_series, singular_series, zeta_int)

FORMULA_IDS = (
    "TAU_MODEL", "M1_PI", "M1_LOG", "M1_ASY", "M2_PI", "M2_LOG", "MK_TRUNC",
    "M4_PI", "M4_LOG", "MK_MEANFIELD", "MK_ZETA", "POS_GAMMA", "POS_FACTORIAL",
)

PI_SOURCES = ("exact", "snapshot", "li")

# M_{-4} in powers of t = pi/x; the d <= 14 truncation expanded and cut after t^4
M4_PI_COEFFS = tuple(Fraction(n, d) for n, d in (
    (34081595473, 31116960000),
    (-2500235267, 15558480000),
    (2244748963, 7779240000),
    (-1178322017, 3889620000),
    (33735178, 121550625),
))

# M_{-4} in powers of 1/log x
M4_LOG_COEFFS = tuple(Fraction(n, d) for n, d in (
    (14168273, 12960000),
    (14168273, 6480000),
    (4680091, 864000),
    (27005921, 6480000),
))


@dataclass(frozen=True)
class PredictorInput:
    """A bound ``x`` with the prime count used for it.

    ``source`` records where ``pi_x`` came from: ``exact`` (sieved),
    ``snapshot`` (read from an imported histogram) or ``li`` (model).
    """

    x: float
    pi_x: float
    source: str = "exact"

    def __post_init__(self):
        if self.source not in PI_SOURCES:
            raise DomainError(f"unknown pi source {self.source!r}")
        if not (self.x > 0 and 0 < 2 * self.pi_x < self.x):
            raise DomainError(
                f"need 0 < 2*pi(x) < x, got x={self.x}, pi={self.pi_x}")

    @classmethod
    def from_li(cls, x: float) -> "PredictorInput":
        return cls(x, li_series(x), "li")

    @property
    def density(self) -> float:
        return self.pi_x / self.x

    @property
    def q(self) -> float:
        """``1 - 2 pi/x``, the per-step survival probability of the gap model."""
        return 1.0 - 2.0 * self.density

    @property
    def pi_sq_over_x(self) -> float:
        return self.density * self.pi_x


@dataclass
class PredictionRecord:
    x: float
    k: float
    predicted: float | None
    formula_id: str
    exact: float | None = None
    error: str | None = None

    @property
    def ratio(self) -> float | None:
        if self.exact is None or self.predicted is None:
            return None
        return self.exact / self.predicted

    def to_dict(self) -> dict:
        return {"formula_id": self.formula_id, "x": self.x, "k": self.k,
                "predicted": self.predicted, "exact": self.exact,
                "ratio": self.ratio, "error": self.error}


# gap counts ---------------------------------------------------------------

def tau_model(d: int, inp: PredictorInput) -> float:
    """Predicted tau_d(x); d = 2 and d = 4 share the twin-prime form."""
    if d < 2 or d % 2:
        raise DomainError(f"tau_model needs an even d >= 2, got {d}")
    base = TWIN_PRIME_CONSTANT * inp.pi_sq_over_x
    if d <= 4:
        return base
    return base * float(singular_series(d)) * inp.q ** (d // 2 - 1)


# first negative moment ------------------------------------------------------

def m1_pred_pi(inp: PredictorInput) -> float:
    x, pi = inp.x, inp.pi_x
    return pi * (pi / (x - 2 * pi)) * math.log(x / (2 * pi))


def _loglog(x: float, name: str) -> tuple[float, float]:
    if not x > math.e:
        raise DomainError(f"{name} needs x > e, got {x}")
    L = math.log(x)
    return L, math.log(L)


def m1_pred_log(x: float) -> float:
    L, LL = _loglog(x, "m1_pred_log")
    log2 = math.log(2.0)
    value = x * ((LL - log2) / L**2 + (8 * LL - 1 - 8 * log2) / L**3)
    if not value > 0:
        raise DomainError(f"m1_pred_log is not positive at x={x}")
    return value


def m1_asymptotic(x: float) -> float:
    """``x log log x / log^2 x``."""
    if not x > math.e ** math.e:
        raise DomainError(f"m1_asymptotic needs x > e^e, got {x}")
    L = math.log(x)
    return x * math.log(L) / L**2


# second negative moment -----------------------------------------------------

def m2_pred_pi(inp: PredictorInput) -> float:
    """Mean-field estimate with ``1/n^2`` replaced by ``1/(n(n+1))``.

    Algebraically equal to ``pi^2 / (2 (x - 2 pi)) * sum q^n / (n(n+1))``.
    """
    x, pi = inp.x, inp.pi_x
    r = 2 * pi / (x - 2 * pi)
    return 0.5 * pi * (pi / (x - 2 * pi)) * (1 + r * math.log(2 * pi / x))


def m2_pred_pi_series(inp: PredictorInput) -> float:
    """:func:`m2_pred_pi` evaluated through the pronic series closed form."""
    x, pi = inp.x, inp.pi_x
    return 2 * pi * (pi / (x - 2 * pi)) / 4 * pronic_series(inp.q)


def m2_pred_log(x: float) -> float:
    L, LL = _loglog(x, "m2_pred_log")
    value = 0.5 * x / L**2 * (1 - 2 * LL / L)
    if not value > 0:
        raise DomainError(f"m2_pred_log is not positive at x={x}")
    return value


# general k --------------------------------------------------------------------

def mk_truncated(inp: PredictorInput, k: float, d_max: int = 10) -> float:
    """Sum of the tau_d model over the smallest gaps ``d <= d_max``.

    The d = 2 and d = 4 terms carry no power of ``q``; each ``d >= 6`` term is
    ``s(d) (2/d)^k q^(d/2 - 1)``.
    """
    if not k > 0:
        raise DomainError(f"mk_truncated needs k > 0, got {k}")
    if d_max < 2 or d_max % 2:
        raise DomainError(f"d_max must be even and >= 2, got {d_max}")
    q = inp.q
    terms = [1.0]
    if d_max >= 4:
        terms.append(2.0 ** -k)
    for d in range(6, d_max + 1, 2):
        terms.append(float(singular_series(d)) * (2.0 / d) ** k * q ** (d // 2 - 1))
    return TWIN_PRIME_CONSTANT * inp.pi_sq_over_x / 2.0**k * math.fsum(terms)


def _poly(coeffs, t: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + float(c)
    return acc


def m4_pred_pi(inp: PredictorInput) -> float:
    return TWIN_PRIME_CONSTANT * inp.pi_sq_over_x / 16.0 * _poly(M4_PI_COEFFS, inp.density)


def m4_pred_log(x: float) -> float:
    if not x > 1:
        raise DomainError(f"m4_pred_log needs x > 1, got {x}")
    L = math.log(x)
    return TWIN_PRIME_CONSTANT * x / (16.0 * L**2) * _poly(M4_LOG_COEFFS, 1.0 / L)


def mk_meanfield(inp: PredictorInput, k: int) -> float:
    """Gap model summed over all d with s(d) replaced by its mean 2/C2."""
    if int(k) != k or k < 1:
        raise DomainError(f"mk_meanfield needs an integer k >= 1, got {k}")
    x, pi = inp.x, inp.pi_x
    return 2 * pi * (pi / (x - 2 * pi)) / 2.0**k * polylog(int(k), inp.q)


def mk_zeta(inp: PredictorInput, k: int) -> float:
    """Expansion of :func:`mk_meanfield` to second order in ``pi/x``."""
    if int(k) != k or k < 4:
        raise DomainError(f"mk_zeta needs an integer k >= 4, got {k}")
    k = int(k)
    x, pi = inp.x, inp.pi_x
    t = inp.density
    bracket = math.fsum([
        zeta_int(k),
        -2 * t * (zeta_int(k - 1) - 2.0 ** -k),
        2 * t * t * (zeta_int(k - 2) - zeta_int(k - 1) - 2.0 ** (1 - k)),
    ])
    return pi * (pi / (x - 2 * pi)) / 2.0 ** (k - 1) * bracket


# positive moments -----------------------------------------------------------

def pos_moment_pred(inp: PredictorInput, k: float) -> float:
    """``Gamma(k+1) x^k / pi^(k-1)``, valid for non-integer ``k`` too."""
    if not k > 0:
        raise DomainError(f"pos_moment_pred needs k > 0, got {k}")
    return gamma_fn(k + 1) * inp.x * (1.0 / inp.density) ** (k - 1)


def pos_moment_asym(x: float, k: float) -> float:
    """``k! x log^(k-1) x`` with ``Gamma(k+1)`` for non-integer ``k``."""
    if not k > 0:
        raise DomainError(f"pos_moment_asym needs k > 0, got {k}")
    if not x > 1:
        raise DomainError(f"pos_moment_asym needs x > 1, got {x}")
    return gamma_fn(k + 1) * x * math.log(x) ** (k - 1)


# dispatch -------------------------------------------------------------------

def _negative_formulas(k: float) -> dict[str, Callable[[PredictorInput], float]]:
    table: dict[str, Callable[[PredictorInput], float]] = {}
    if k == 1:
        table["M1_PI"] = m1_pred_pi
        table["M1_LOG"] = lambda inp: m1_pred_log(inp.x)
        table["M1_ASY"] = lambda inp: m1_asymptotic(inp.x)
    if k == 2:
        table["M2_PI"] = m2_pred_pi
        table["M2_LOG"] = lambda inp: m2_pred_log(inp.x)
    if k == 4:
        table["M4_PI"] = m4_pred_pi
        table["M4_LOG"] = lambda inp: m4_pred_log(inp.x)
    table["MK_TRUNC"] = lambda inp: mk_truncated(inp, k)
    table["MK_MEANFIELD"] = lambda inp: mk_meanfield(inp, k)
    table["MK_ZETA"] = lambda inp: mk_zeta(inp, k)
    return table


def predict_all(inp: PredictorInput, k: float, exact: float | None = None,
                positive: bool = False) -> list[PredictionRecord]:
    """Evaluate every formula applicable to order ``k``.

    A formula that rejects its input yields a record with ``error`` set
    instead of aborting the whole set.
    """
    if k == 0:
        raise DomainError("moment order k must be nonzero")
    if positive:
        table = {
            "POS_GAMMA": lambda i: pos_moment_pred(i, k),
            "POS_FACTORIAL": lambda i: pos_moment_asym(i.x, k),
        }
    else:
        table = _negative_formulas(k)
    out = []
    for fid, fn in table.items():
        try:
            out.append(PredictionRecord(inp.x, k, fn(inp), fid, exact))
        except GapMomentsError as exc:
            out.append(PredictionRecord(inp.x, k, None, fid, exact, error=str(exc)))
    return out
