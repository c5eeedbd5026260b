"""Exact-versus-predicted moment tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import DomainError
from .gapstats import GapHistogram, negative_moment_exact
from .predictors import PredictorInput, predict_all

# table number -> (moment order, pi-form formula, log-form formula, decimals)
TABLES = {
    1: (1, "M1_PI", "M1_LOG", 4),
    2: (2, "M2_PI", "M2_LOG", 4),
    3: (4, "M4_PI", "M4_LOG", 6),
}

# Published exact/predicted ratios: {table: {x: (pi-form ratio, log-form ratio)}}
REFERENCE_RATIOS: dict[int, dict[int, tuple[float, float]]] = {
    1: {
        2**24: (0.8738, 0.7638), 2**26: (0.8731, 0.7664), 2**28: (0.8734, 0.7699),
        2**30: (0.8738, 0.7734), 2**32: (0.8741, 0.7769), 2**34: (0.8744, 0.7803),
        2**36: (0.8748, 0.7836), 2**38: (0.8751, 0.7867), 2**40: (0.8755, 0.7898),
        2**42: (0.8759, 0.7927), 2**44: (0.8762, 0.7955), 2**46: (0.8766, 0.7982),
        2**48: (0.8770, 0.8007), 161 * 10**16: (0.8793, 0.8145),
        4 * 10**18: (0.8795, 0.8157),
    },
    2: {
        2**24: (1.3318, 1.8391), 2**26: (1.3224, 1.7811), 2**28: (1.3167, 1.7357),
        2**30: (1.3122, 1.6979), 2**32: (1.3081, 1.6653), 2**34: (1.3044, 1.6369),
        2**36: (1.3009, 1.6119), 2**38: (1.2978, 1.5900), 2**40: (1.2951, 1.5704),
        2**42: (1.2926, 1.5530), 2**44: (1.2903, 1.5373), 2**46: (1.2882, 1.5231),
        2**48: (1.2862, 1.5102), 161 * 10**16: (1.2767, 1.4501),
        4 * 10**18: (1.2760, 1.4453),
    },
    3: {
        2**24: (1.012003, 1.008288), 2**26: (1.007536, 1.004022),
        2**28: (1.006260, 1.002853), 2**30: (1.006038, 1.002751),
        2**32: (1.005621, 1.002445), 2**34: (1.005218, 1.002190),
        2**36: (1.004711, 1.001826), 2**38: (1.004403, 1.001666),
        2**40: (1.004104, 1.001513), 2**42: (1.003863, 1.001417),
        2**44: (1.003657, 1.001349), 2**46: (1.003471, 1.001297),
        2**48: (1.003311, 1.001265), 161 * 10**16: (1.002630, 1.001258),
        4 * 10**18: (1.002580, 1.001268),
    },
}


@dataclass
class ReportRow:
    x: int
    k: float
    exact: float | None
    pi_source: str
    predicted: dict[str, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    gap_one_term: float = 0.0  # contribution of the (2, 3) pair to ``exact``

    @property
    def ratios(self) -> dict[str, float]:
        if self.exact is None:
            return {}
        return {fid: self.exact / v for fid, v in self.predicted.items()}

    @property
    def absent(self) -> bool:
        return self.exact is None


def table_spec(table: int | None, k: float | None) -> tuple[float, list[str] | None, int]:
    """Moment order, formula columns (``None`` = all applicable) and decimals."""
    if table is not None:
        if table not in TABLES:
            raise DomainError(f"unknown table {table}; choose 1, 2 or 3")
        order, f2, f1, dec = TABLES[table]
        return order, [f2, f1], dec
    if k is None or k <= 0:
        raise DomainError("custom reports need a moment order k > 0")
    return k, None, 6


def build_row(hist: GapHistogram, k: float, formulas: list[str] | None,
              pi_source: str = "exact") -> ReportRow:
    exact = negative_moment_exact(hist, k).value
    if pi_source == "li":
        inp = PredictorInput.from_li(hist.x)
    else:
        inp = PredictorInput(hist.x, hist.pi_x, pi_source)
    row = ReportRow(hist.x, k, exact, pi_source, gap_one_term=float(hist.tau(1)))
    for rec in predict_all(inp, k, exact):
        if formulas is not None and rec.formula_id not in formulas:
            continue
        if rec.error is not None:
            row.errors[rec.formula_id] = rec.error
        else:
            row.predicted[rec.formula_id] = rec.predicted
    return row


def absent_row(x: int, k: float, pi_source: str) -> ReportRow:
    return ReportRow(x, k, None, pi_source)


def _columns(rows: list[ReportRow], formulas: list[str] | None) -> list[str]:
    if formulas is not None:
        return list(formulas)
    cols: list[str] = []
    for r in rows:
        for fid in r.predicted:
            if fid not in cols:
                cols.append(fid)
    return cols


def render(rows: list[ReportRow], fmt: str = "text", formulas: list[str] | None = None,
           decimals: int = 6, title: str | None = None) -> str:
    cols = _columns(rows, formulas)
    if fmt == "json":
        payload = {
            "title": title,
            "columns": cols,
            "rows": [{
                "x": r.x, "k": r.k, "pi_source": r.pi_source, "absent": r.absent,
                "exact": r.exact, "predicted": r.predicted, "ratios": r.ratios,
                "errors": r.errors, "gap_one_term": r.gap_one_term,
            } for r in rows],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "k", "pi_source", "exact"] + [f"ratio_{c}" for c in cols])
        for r in rows:
            ratios = r.ratios
            w.writerow([r.x, r.k, r.pi_source, "" if r.exact is None else repr(r.exact)]
                       + [repr(ratios[c]) if c in ratios else "" for c in cols])
        return buf.getvalue()
    if fmt != "text":
        raise DomainError(f"unknown format {fmt!r}")

    header = ["x", "M_exact"] + [f"M/{c}" for c in cols]
    body = []
    for r in rows:
        if r.absent:
            body.append([_fmt_x(r.x), "absent"] + ["-"] * len(cols))
            continue
        ratios = r.ratios
        body.append([_fmt_x(r.x), f"{r.exact:.6g}"]
                    + [f"{ratios[c]:.{decimals}f}" if c in ratios else "n/a" for c in cols])
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h)
              for i, h in enumerate(header)]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for b in body:
        lines.append("  ".join(v.rjust(w) for v, w in zip(b, widths)))
    present = [r for r in rows if not r.absent and r.exact]
    if present:
        worst = max(r.gap_one_term / r.exact for r in present)
        lines.append(f"(exact sums include the d=1 pair (2,3); its share is at most "
                     f"{worst:.2e} of M_exact here)")
    return "\n".join(lines) + "\n"


def _fmt_x(x: int) -> str:
    if x > 0 and x & (x - 1) == 0:
        return f"2^{x.bit_length() - 1}"
    return str(x)
