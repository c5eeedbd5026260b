"""Command-line entry point: ``gapmoments {collect,report,predict,verify,import}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .errors import (CorruptSnapshotError, DomainError, GapMomentsError,
                     PreconditionError, ResumeMismatchError, TruncatedRunError)
from .gapstats import (CheckpointPlan, accumulate, import_counts, iter_accumulate,
                       negative_moment_exact, positive_moment_exact, read_snapshot,
                       snapshot_name, write_snapshot)
from .predictors import PredictorInput, predict_all
from .report import absent_row, build_row, render, table_spec
from .sieve import DEFAULT_SEGMENT_SIZE, prime_stream
from .verify import run_checks

log = logging.getLogger("gapmoments")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DOMAIN = 4
EXIT_VERIFY = 5
EXIT_DATA = 6

MANIFEST = "run.json"


class UsageError(Exception):
    pass


def parse_bound(text: str) -> int:
    """Parse ``16777216``, ``2^24``, ``2**24``, ``4e18`` or ``1.61e18`` as an integer."""
    s = text.strip().replace("_", "")
    for op in ("**", "^"):
        if op in s:
            base, _, exp = s.partition(op)
            try:
                return int(base) ** int(exp)
            except ValueError:
                break
    try:
        value = Decimal(s)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not an integer bound: {text!r}") from None
    if value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"bound must be an integer: {text!r}")
    return int(value)


def parse_order(text: str) -> float:
    try:
        k = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return int(k) if k.is_integer() else k


def default_data_dir() -> Path:
    return Path(os.environ.get("GAPMOMENTS_DATA_DIR", "gapdata"))


def _data_dir(args) -> Path:
    return Path(args.out) if args.out else default_data_dir()


# collect ----------------------------------------------------------------------

def _check_manifest(out: Path, config: dict) -> None:
    path = out / MANIFEST
    if path.exists():
        try:
            old = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ResumeMismatchError(f"{path}: unreadable manifest ({exc})") from None
        for key in ("start", "ratio", "checkpoints"):
            if old.get(key) != config.get(key):
                raise ResumeMismatchError(
                    f"{path}: existing run has {key}={old.get(key)!r}, "
                    f"this run asks for {config.get(key)!r}")
    path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_collect(args) -> int:
    out = _data_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    if args.checkpoints:
        cps = sorted(set(args.checkpoints))
        stop = max(cps)
        config = {"start": None, "ratio": None, "checkpoints": cps}
    else:
        if args.stop is None:
            raise UsageError("collect needs --stop or --checkpoints")
        plan = CheckpointPlan(args.stop, args.start, args.ratio)
        cps = plan.checkpoints()
        stop = args.stop
        config = {"start": args.start, "ratio": args.ratio, "checkpoints": None}
    _check_manifest(out, config)

    initial = None
    for c in cps:
        path = out / snapshot_name(c)
        if not path.exists():
            break
        hist = read_snapshot(path)
        if hist.x != c:
            raise ResumeMismatchError(f"{path}: header says x={hist.x}, expected {c}")
        initial = hist
    remaining = [c for c in cps if initial is None or c > initial.x]
    if initial is not None:
        log.info("resuming after existing snapshot at x=%d", initial.x)
    if not remaining:
        log.info("all %d snapshots already present in %s", len(cps), out)
        return EXIT_OK

    stream = prime_stream(stop, segment_size=args.segment_size, workers=args.workers,
                          start=initial.x + 1 if initial else 2)
    t0 = time.perf_counter()
    for hist in iter_accumulate(stream, remaining, initial):
        path = write_snapshot(hist, out / snapshot_name(hist.x))
        log.info("x=%d pi=%d max_gap=%d -> %s (%.1fs)", hist.x, hist.pi_x,
                 hist.max_gap, path.name, time.perf_counter() - t0)
    return EXIT_OK


# report -------------------------------------------------------------------------

def _load_snapshots(args) -> dict[int, object]:
    paths = [Path(p) for p in args.snapshot] if args.snapshot else \
        sorted(_data_dir(args).glob("tau_*.csv"))
    hists = {}
    for p in paths:
        h = read_snapshot(p)
        hists[h.x] = h
    return hists


def cmd_report(args) -> int:
    k, formulas, decimals = table_spec(args.table, args.k)
    hists = _load_snapshots(args)
    xs = sorted(args.x) if args.x else sorted(hists)
    if not xs:
        raise FileNotFoundError(f"no snapshots found in {_data_dir(args)}")
    rows = []
    for x in xs:
        if x in hists:
            rows.append(build_row(hists[x], k, formulas, args.pi_source))
        else:
            rows.append(absent_row(x, k, args.pi_source))
    if args.table:
        title = f"Table {args.table}: M_-{k} exact / predicted (pi source: {args.pi_source})"
    else:
        title = f"M_-{k} exact / predicted (pi source: {args.pi_source})"
    sys.stdout.write(render(rows, args.format, formulas, decimals, title))
    missing = [r.x for r in rows if r.absent]
    if missing:
        log.error("no snapshot for x in %s", missing)
        return EXIT_IO
    return EXIT_OK


# predict ----------------------------------------------------------------------

def cmd_predict(args) -> int:
    k = args.k
    if k is None or k == 0 or k < 0:
        raise UsageError("predict needs a moment order k > 0")
    x = args.x
    exact = None
    if args.pi_source == "li":
        inp = PredictorInput.from_li(x)
    else:
        if args.pi_source == "snapshot":
            hist = read_snapshot(_data_dir(args) / snapshot_name(x))
        else:
            (hist,) = accumulate(prime_stream(x, workers=args.workers), [x])
        inp = PredictorInput(x, hist.pi_x, args.pi_source)
        moment = positive_moment_exact if args.positive else negative_moment_exact
        exact = moment(hist, k).value
    records = predict_all(inp, k, exact, positive=args.positive)
    payload = {
        "x": x, "k": k, "pi_x": inp.pi_x, "pi_source": inp.source,
        "kind": "positive" if args.positive else "negative",
        "exact": exact, "records": [r.to_dict() for r in records],
    }
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


# verify -----------------------------------------------------------------------

def cmd_verify(args) -> int:
    results = run_checks(args.level, _data_dir(args))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_VERIFY
    return EXIT_OK


# import -----------------------------------------------------------------------

def cmd_import(args) -> int:
    src = Path(args.file)
    with open(src, encoding="utf-8") as fh:
        has_header = any(line.startswith("# x=") for line in fh)
    if has_header and args.x is None:
        hist = read_snapshot(src)
    else:
        if args.x is None:
            raise UsageError("headerless tables need --x")
        hist = import_counts(src, args.x, args.pi)
    out = _data_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = write_snapshot(hist, out / snapshot_name(hist.x))
    print(f"imported x={hist.x} pi={hist.pi_x} bins={len(hist.counts)} -> {path}")
    return EXIT_OK


# wiring -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapmoments",
        description="Prime-gap histograms and moment predictors.")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_flag(p):
        p.add_argument("--out", help="data directory (default: $GAPMOMENTS_DATA_DIR or ./gapdata)")

    p = sub.add_parser("collect", help="sieve and write gap-histogram snapshots")
    p.add_argument("--stop", type=parse_bound, help="last checkpoint, e.g. 2^30")
    p.add_argument("--start", type=parse_bound, default=2**15, help="first checkpoint (default 2^15)")
    p.add_argument("--ratio", type=int, default=2, help="checkpoint growth factor (default 2)")
    p.add_argument("--checkpoints", type=parse_bound, nargs="+",
                   help="explicit checkpoint list instead of a geometric plan")
    p.add_argument("--segment-size", type=parse_bound, default=DEFAULT_SEGMENT_SIZE,
                   help="odd numbers per sieve segment")
    p.add_argument("--workers", type=int, default=1, help="sieve processes")
    data_flag(p)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("report", help="exact/predicted moment tables")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--table", type=int, choices=(1, 2, 3), help="k=1, 2 or 4 reference table")
    group.add_argument("--k", type=parse_order, help="custom negative-moment order")
    p.add_argument("--x", type=parse_bound, nargs="+", help="bounds to report")
    p.add_argument("--snapshot", nargs="+", help="explicit snapshot files")
    p.add_argument("--pi-source", choices=("exact", "snapshot", "li"), default="exact",
                   help="where pi(x) comes from")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    data_flag(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("predict", help="evaluate every applicable formula at x")
    p.add_argument("--x", type=parse_bound, required=True, help="bound x")
    p.add_argument("--k", type=parse_order, required=True, help="moment order")
    p.add_argument("--pi-source", choices=("exact", "snapshot", "li"), default="exact",
                   help="where pi(x) comes from")
    p.add_argument("--positive", action="store_true", help="positive moment M_k instead")
    p.add_argument("--workers", type=int, default=1, help="sieve processes")
    data_flag(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify", help="run the self-check suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    data_flag(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("import", help="import an external d,count table")
    p.add_argument("file", help="text file of d,count rows")
    p.add_argument("--x", type=parse_bound, help="bound the counts refer to")
    p.add_argument("--pi", type=parse_bound, help="pi(x); default sum(tau_d) + 1")
    data_flag(p)
    p.set_defaults(func=cmd_import)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with EXIT_USAGE
    except TruncatedRunError as exc:
        log.error("%s (last completed checkpoint: %s)", exc, exc.last_checkpoint)
        return EXIT_IO
    except (CorruptSnapshotError, ResumeMismatchError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (DomainError, PreconditionError) as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN
    except GapMomentsError as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
