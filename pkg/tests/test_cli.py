import csv
import io
import json
import subprocess
import sys

import pytest

from decoyqkd.cli import EXIT_ABORT, EXIT_OK, EXIT_USAGE, main
from decoyqkd.polytope import ConstraintSet
from decoyqkd.sim import read_record


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def simulate(tmp_path, name="s.rec", *extra):
    path = tmp_path / name
    argv = ["simulate", "--n", "1e7", "--mu", "0.5", "--eta", "0.1", "--y0", "3e-6",
            "--seed", "7", "--out", str(path), *extra]
    assert main(argv) == EXIT_OK
    return path


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_simulate_writes_five_levels(tmp_path):
    path = simulate(tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# decoyqkd-session n_cycles=10000000")
    assert len(lines) == 6
    rec = read_record(path.open())
    assert rec.n_cycles == 10**7


def test_simulate_to_stdout_and_usage_errors(capsys):
    code, out, _ = run(["simulate", "--n", "1000", "--mu", "0.5"], capsys)
    assert code == EXIT_OK and out.count("\n") == 6
    for argv in (
        ["simulate", "--n", "0", "--mu", "0.5"],
        ["simulate", "--mu", "0.5"],
        ["simulate", "--n", "1.5", "--mu", "0.5"],
        ["simulate", "--n", "10", "--n-scaled", "1e5", "--mu", "0.5"],
        ["simulate", "--n", "10", "--mu", "0.5", "--channel", "laser"],
        ["simulate", "--n", "10", "--mu", "-1"],
        ["bogus"],
    ):
        code, _, err = run(argv, capsys)
        assert code == EXIT_USAGE, argv
        assert err


def test_analyze_honest_record(tmp_path, capsys):
    path = simulate(tmp_path)
    code, out, _ = run(["analyze", str(path)], capsys)
    assert code == EXIT_OK
    report = kv(out)
    assert int(report["s_bound"]) > 0
    assert float(report["y1_lo"]) <= 0.1000027 <= float(report["y1_hi"])
    assert report["m_levels"] == "5" and report["abort"] == "0"
    code, out, _ = run(["analyze", str(path), "--json"], capsys)
    assert json.loads(out)["s_bound"] == int(report["s_bound"])


def test_analyze_dump_polytope(tmp_path, capsys):
    path = simulate(tmp_path)
    poly = tmp_path / "r.hs"
    code, _, _ = run(["analyze", str(path), "--dump-polytope", str(poly)], capsys)
    assert code == EXIT_OK
    cs = ConstraintSet.load(poly.open())
    assert (cs.dimension, len(cs)) == (12, 34)


def test_pns_record_collapses(tmp_path, capsys):
    path = simulate(tmp_path, "pns.rec", "--channel", "pns")
    code, out, _ = run(["analyze", str(path)], capsys)
    assert code in (EXIT_OK, EXIT_ABORT)
    report = kv(out)
    assert report["abort"] == "1" or float(report["y1_lo"]) < 5e-3


def test_custom_channel_file(tmp_path, capsys):
    chan = tmp_path / "yields.txt"
    chan.write_text("# y0 .. y3\n3e-6 0.1 0.19 0.271\n")
    out = tmp_path / "c.rec"
    assert main(["simulate", "--n", "1e6", "--mu", "0.5", "--channel", f"custom:{chan}",
                 "--out", str(out)]) == EXIT_OK
    assert "channel=custom" in out.read_text().splitlines()[0]
    code, _, err = run(["simulate", "--n", "10", "--mu", "0.5", "--channel",
                        f"custom:{tmp_path / 'missing'}"], capsys)
    assert code == EXIT_USAGE and "channel" in err


def test_malformed_record_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.rec"
    bad.write_text("# decoyqkd-session\n0 0.0 abc 1\n")
    code, _, err = run(["analyze", str(bad)], capsys)
    assert code == EXIT_USAGE and "bad level line" in err
    code, _, _ = run(["analyze", str(tmp_path / "nope.rec")], capsys)
    assert code == EXIT_USAGE


def test_small_k_on_strong_pulses_is_rejected(tmp_path, capsys):
    # Base intensity 2.2: the one-laser level keeps tail 0.377 at K=2 but the
    # two-laser level (4.4) loses most of its mass.
    path = tmp_path / "hot.rec"
    assert main(["simulate", "--n", "1e5", "--mu", "2.2", "--out", str(path)]) == EXIT_OK
    code, _, err = run(["analyze", str(path), "--k", "2"], capsys)
    assert code == EXIT_USAGE
    assert "increase K" in err and "j=2" in err


def test_infeasible_record_exits_3(tmp_path, capsys):
    path = tmp_path / "odd.rec"
    path.write_text("# decoyqkd-session\n0 0.0 1000000 0\n1 0.5 1000000 0 0 0\n2 1.0 1000000 1000000\n")
    code, out, _ = run(["analyze", str(path)], capsys)
    assert code == EXIT_ABORT and kv(out)["abort"] == "1"


def parse_csv(text):
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    comments = [ln for ln in text.splitlines() if ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(rows)))), comments


def test_sweep_table(capsys):
    code, out, _ = run(["sweep", "--n-scaled", "1e6", "--eta", "1e-3", "--mu-grid", "0.3:0.6:0.05",
                        "--seeds", "2"], capsys)
    assert code == EXIT_OK
    rows, comments = parse_csv(out)
    assert len(rows) == 7 * 2
    assert list(rows[0]) == ["mu", "eta", "N", "seed", "y1_lo", "y1_hi", "rate_lo", "rate_true",
                             "s_bound", "b1_max", "abort"]
    assert rows[0]["N"] == str(10**9)
    assert comments[0].startswith("# command=sweep")
    argmax = float(comments[-1].split()[1].split("=")[1])
    assert abs(argmax - 0.45) <= 0.07
    # Rows ordered by (mu, seed index).
    assert [float(r["mu"]) for r in rows] == sorted(float(r["mu"]) for r in rows)


def test_sweep_parallel_matches_serial(capsys):
    argv = ["sweep", "--n", "1e8", "--eta", "1e-2", "--mu-grid", "0.2:0.6:0.1", "--seeds", "2"]
    _, serial, _ = run(argv, capsys)
    _, parallel, _ = run(argv + ["--jobs", "3"], capsys)
    assert serial == parallel


def test_sweep_summary_and_bad_grid(capsys):
    code, out, _ = run(["sweep", "--n", "1e8", "--eta", "1e-2", "--mu-grid", "0.3:0.5:0.1",
                        "--seeds", "3", "--summary"], capsys)
    assert code == EXIT_OK
    rows, _ = parse_csv(out)
    assert len(rows) == 3 and list(rows[0]) == ["mu", "rate_lo_q25", "rate_lo_median", "rate_lo_q75"]
    code, _, _ = run(["sweep", "--n", "1e8", "--mu-grid", "0.5:0.3:0.1"], capsys)
    assert code == EXIT_USAGE
    code, _, _ = run(["sweep", "--mu-grid", "0.3:0.5:0.1"], capsys)
    assert code == EXIT_USAGE


def test_compare_rates(capsys):
    code, out, _ = run(["compare-rates", "--eta-grid", "1e-3,1e-2", "--n", "1e9",
                        "--mu-grid", "0.2:0.7:0.05"], capsys)
    assert code == EXIT_OK
    rows, comments = parse_csv(out)
    assert [float(r["eta"]) for r in rows] == [1e-3, 1e-2]
    for r in rows:
        assert float(r["conventional_rate"]) == float(r["eta"]) ** 2 / 2
        assert float(r["decoy_rate"]) > float(r["conventional_rate"])
        assert 0 <= float(r["f"]) <= 1
    assert comments[-1].startswith("# slope_decoy=")


def test_compare_rates_lossless_channel(capsys):
    code, out, _ = run(["compare-rates", "--eta-grid", "1", "--n", "1e6", "--mu-grid", "0.5:0.6:0.1"], capsys)
    assert code == EXIT_OK
    rows, _ = parse_csv(out)
    assert float(rows[0]["conventional_rate"]) == 0.5
    assert float(rows[0]["mu_conventional"]) == 1.0


def test_determinism_byte_identical(tmp_path, capsys):
    a = simulate(tmp_path, "a.rec").read_bytes()
    b = simulate(tmp_path, "b.rec").read_bytes()
    assert a == b
    outs = [run(["analyze", str(tmp_path / "a.rec")], capsys)[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "decoyqkd", "simulate", "--n", "1000", "--mu", "0.5", "--seed", "3"],
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.startswith("# decoyqkd-session")
    bad = subprocess.run([sys.executable, "-m", "decoyqkd", "simulate", "--n", "0", "--mu", "0.5"],
                         capture_output=True, text=True)
    assert bad.returncode == EXIT_USAGE
