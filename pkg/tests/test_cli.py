import csv
import io
import json
import subprocess
import sys

import pytest

from gapmoments import cli
from gapmoments.gapstats import accumulate, read_snapshot, snapshot_name, write_snapshot
from gapmoments.report import build_row, render
from gapmoments.sieve import prime_stream


def run(capsys, *argv):
    code = cli.main(["-q", *argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("text, value", [
    ("16777216", 2**24), ("2^24", 2**24), ("2**10", 1024), ("4e18", 4 * 10**18),
    ("1.61e18", 161 * 10**16), ("1_000", 1000),
])
def test_parse_bound(text, value):
    assert cli.parse_bound(text) == value


def test_parse_bound_rejects_fractions():
    with pytest.raises(Exception):
        cli.parse_bound("2.5")


# collect ----------------------------------------------------------------------

def test_collect_writes_one_snapshot_per_checkpoint(tmp_path, capsys):
    code, _, _ = run(capsys, "collect", "--stop", "2^20", "--out", str(tmp_path))
    assert code == 0
    names = sorted(p.name for p in tmp_path.glob("tau_*.csv"))
    assert names == sorted(snapshot_name(2**e) for e in range(15, 21))
    assert read_snapshot(tmp_path / snapshot_name(2**20)).pi_x == 82025


def test_collect_single_checkpoint_at_100(tmp_path, capsys):
    code, _, _ = run(capsys, "collect", "--stop", "100", "--start", "100",
                     "--out", str(tmp_path))
    assert code == 0
    assert read_snapshot(tmp_path / "tau_100.csv").tau(2) == 8


def test_collect_resume_gives_identical_snapshots(tmp_path, capsys):
    ref, part = tmp_path / "ref", tmp_path / "part"
    assert run(capsys, "collect", "--stop", "2^20", "--out", str(ref))[0] == 0
    # a run killed after 2^18 leaves snapshots up to 2^18 behind
    assert run(capsys, "collect", "--stop", "2^18", "--out", str(part))[0] == 0
    assert run(capsys, "collect", "--stop", "2^20", "--out", str(part))[0] == 0
    for p in ref.glob("tau_*.csv"):
        assert (part / p.name).read_bytes() == p.read_bytes()


def test_collect_resume_after_interrupted_write(tmp_path, capsys):
    assert run(capsys, "collect", "--stop", "2^19", "--out", str(tmp_path))[0] == 0
    (tmp_path / snapshot_name(2**19)).unlink()
    (tmp_path / (snapshot_name(2**19) + ".tmp")).write_text("# x=5")  # leftover
    assert run(capsys, "collect", "--stop", "2^19", "--out", str(tmp_path))[0] == 0
    (h,) = accumulate(prime_stream(2**19), [2**19])
    assert read_snapshot(tmp_path / snapshot_name(2**19)) == h


def test_collect_resume_mismatch(tmp_path, capsys):
    assert run(capsys, "collect", "--stop", "2^16", "--out", str(tmp_path))[0] == 0
    code, _, _ = run(capsys, "collect", "--stop", "2^18", "--ratio", "4", "--out", str(tmp_path))
    assert code == cli.EXIT_DATA
    # a snapshot whose header disagrees with its checkpoint
    other = tmp_path / "other"
    other.mkdir()
    (other / snapshot_name(2**15)).write_text(
        (tmp_path / snapshot_name(2**16)).read_text())
    code, _, _ = run(capsys, "collect", "--stop", "2^16", "--out", str(other))
    assert code == cli.EXIT_DATA


def test_collect_uses_env_data_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("GAPMOMENTS_DATA_DIR", str(tmp_path / "env"))
    assert run(capsys, "collect", "--stop", "2^15")[0] == 0
    assert (tmp_path / "env" / snapshot_name(2**15)).exists()


def test_collect_deterministic_across_workers(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--stop", "2^19", "--start", "2^15", "--segment-size", "4096"]
    assert run(capsys, "collect", *args, "--workers", "1", "--out", str(a))[0] == 0
    assert run(capsys, "collect", *args, "--workers", "3", "--out", str(b))[0] == 0
    for p in a.glob("tau_*.csv"):
        assert (b / p.name).read_bytes() == p.read_bytes()


def test_collect_explicit_checkpoints(tmp_path, capsys):
    assert run(capsys, "collect", "--checkpoints", "100", "1000", "97",
               "--out", str(tmp_path))[0] == 0
    assert sorted(p.name for p in tmp_path.glob("tau_*.csv")) == \
        ["tau_100.csv", "tau_1000.csv", "tau_97.csv"]


# report -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def snapdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("snaps")
    for h in accumulate(prime_stream(2**20), [2**16, 2**18, 2**20]):
        write_snapshot(h, d / snapshot_name(h.x))
    return d


def test_report_text_table(snapdir, capsys):
    code, out, _ = run(capsys, "report", "--table", "1", "--out", str(snapdir))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("Table 1")
    assert "M/M1_PI" in lines[1] and "M/M1_LOG" in lines[1]
    assert any(l.strip().startswith("2^16") for l in lines)
    row = next(l for l in lines if l.strip().startswith("2^20")).split()
    assert len(row[2].split(".")[1]) == 4


def test_report_table3_six_decimals(snapdir, capsys):
    code, out, _ = run(capsys, "report", "--table", "3", "--x", "2^20", "--out", str(snapdir))
    assert code == 0
    row = next(l for l in out.splitlines() if l.strip().startswith("2^20")).split()
    assert len(row[2].split(".")[1]) == 6


def test_report_csv_and_json_agree(snapdir, capsys):
    _, out_csv, _ = run(capsys, "report", "--table", "2", "--format", "csv", "--out", str(snapdir))
    _, out_json, _ = run(capsys, "report", "--table", "2", "--format", "json", "--out", str(snapdir))
    rows = list(csv.DictReader(io.StringIO(out_csv)))
    data = json.loads(out_json)
    assert [int(r["x"]) for r in rows] == [r["x"] for r in data["rows"]] == [2**16, 2**18, 2**20]
    for r, j in zip(rows, data["rows"]):
        assert float(r["ratio_M2_PI"]) == j["ratios"]["M2_PI"]
        assert j["gap_one_term"] == 1.0


def test_report_is_idempotent(snapdir, capsys):
    outs = {run(capsys, "report", "--k", "3", "--format", "json", "--out", str(snapdir))[1]
            for _ in range(2)}
    assert len(outs) == 1


def test_report_missing_row(snapdir, capsys):
    code, out, _ = run(capsys, "report", "--table", "1", "--x", "2^16", "2^22",
                       "--out", str(snapdir))
    assert code == cli.EXIT_IO
    assert "absent" in out


def test_report_custom_k_and_li_source(snapdir, capsys):
    code, out, _ = run(capsys, "report", "--k", "4", "--pi-source", "li", "--format", "json",
                       "--out", str(snapdir))
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["pi_source"] == "li"
    assert {"M4_PI", "M4_LOG", "MK_MEANFIELD", "MK_ZETA", "MK_TRUNC"} <= set(row["ratios"])


def test_report_row_matches_direct_computation(snapdir):
    h = read_snapshot(snapdir / snapshot_name(2**20))
    row = build_row(h, 1, ["M1_PI", "M1_LOG"])
    assert set(row.ratios) == {"M1_PI", "M1_LOG"}
    assert "0." in render([row], "text", ["M1_PI", "M1_LOG"], 4)


def test_report_corrupt_snapshot(tmp_path, capsys):
    (tmp_path / "tau_100.csv").write_text("# x=100\n# pi=25\n1,1\n2,9\n")
    code, _, _ = run(capsys, "report", "--table", "1", "--out", str(tmp_path))
    assert code == cli.EXIT_DATA


# predict ----------------------------------------------------------------------

def test_predict_k1_exact(capsys):
    code, out, _ = run(capsys, "predict", "--x", "2^20", "--k", "1")
    assert code == 0
    data = json.loads(out)
    ids = {r["formula_id"] for r in data["records"]}
    assert {"M1_PI", "M1_LOG", "M1_ASY", "MK_MEANFIELD"} <= ids
    assert data["pi_x"] == 82025 and data["pi_source"] == "exact"
    assert all(r["ratio"] is not None for r in data["records"] if r["error"] is None)
    assert {r["formula_id"] for r in data["records"] if r["error"]} == {"MK_ZETA"}


def test_predict_k3_reports_zeta_domain_error(capsys):
    code, out, _ = run(capsys, "predict", "--x", "2^30", "--k", "3", "--pi-source", "li")
    assert code == 0
    recs = {r["formula_id"]: r for r in json.loads(out)["records"]}
    assert recs["MK_MEANFIELD"]["predicted"] > 0
    assert recs["MK_ZETA"]["predicted"] is None and recs["MK_ZETA"]["error"]


def test_predict_k0_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["predict", "--x", "1000", "--k", "0"])
    assert err.value.code == cli.EXIT_USAGE


def test_predict_from_snapshot_and_positive(snapdir, capsys):
    code, out, _ = run(capsys, "predict", "--x", "2^18", "--k", "2", "--positive",
                       "--pi-source", "snapshot", "--out", str(snapdir))
    assert code == 0
    data = json.loads(out)
    assert data["kind"] == "positive"
    assert {r["formula_id"] for r in data["records"]} == {"POS_GAMMA", "POS_FACTORIAL"}


def test_predict_domain_error_exit(capsys):
    code, _, _ = run(capsys, "predict", "--x", "5", "--k", "1", "--pi-source", "li")
    assert code == cli.EXIT_DOMAIN


# import / verify ----------------------------------------------------------------

def test_import_headerless(tmp_path, capsys):
    src = tmp_path / "ext.txt"
    src.write_text("# gaps below 100\n2,8\n4,7\n6,7\n8,1\n")
    code, out, _ = run(capsys, "import", str(src), "--x", "100", "--out", str(tmp_path / "d"))
    assert code == 0 and "pi=25" in out
    (h,) = accumulate(prime_stream(100), [100])
    assert read_snapshot(tmp_path / "d" / "tau_100.csv") == h


def test_import_bad_pi(tmp_path, capsys):
    src = tmp_path / "ext.txt"
    src.write_text("2,8\n4,7\n")
    code, _, _ = run(capsys, "import", str(src), "--x", "100", "--pi", "99",
                     "--out", str(tmp_path / "d"))
    assert code == cli.EXIT_DATA


def test_import_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "import", str(tmp_path / "nope"), "--x", "100")
    assert code == cli.EXIT_IO


def test_verify_quick_passes(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--out", str(tmp_path))
    assert code == 0, out
    assert "FAIL" not in out


def test_verify_names_corrupt_snapshot(tmp_path, capsys, monkeypatch):
    from gapmoments import verify
    monkeypatch.setattr(verify, "QUICK", verify.QUICK[2:4])  # skip the slow oracles
    (tmp_path / "tau_100.csv").write_text("# x=100\n# pi=25\n1,1\n2,9\n")
    code, out, _ = run(capsys, "verify", "--out", str(tmp_path))
    assert code == cli.EXIT_VERIFY
    assert "FAIL  identity:tau_100.csv" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gapmoments.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("collect", "report", "predict", "verify", "import"):
        assert cmd in proc.stdout
