from __future__ import annotations

import io
import json
import math
import subprocess
import sys

import pytest

from lampwalk.cli import EXIT_CERT, EXIT_INVALID, EXIT_OK, main, manifest_to_argv

FULL2 = {"vertices": 1, "alphabet": ["0", "1"], "edges": [[0, "0", 0], [0, "1", 0]]}


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def full2(tmp_path):
    path = tmp_path / "full2.json"
    path.write_text(json.dumps(FULL2))
    return str(path)


def test_rate_of_escape_example():
    code, out, _ = run("simulate", "rate-of-escape", "--kernel", "biased:0.7",
                       "--n", "10000", "--trials", "200", "--seed", "7")
    assert code == EXIT_OK
    s = json.loads(out)
    assert s["seed"] == 7 and s["trials"] == 200
    assert abs(s["estimate"] - 0.4) <= 4 * s["stderr"]
    assert s["manifest"]["kernel"] == "biased:0.7"


def test_entropy_report_example(full2):
    code, out, _ = run("entropy", "report", "--graph", full2, "--forbid", "11")
    assert code == EXIT_OK
    s = json.loads(out)
    assert s["strict"] is True
    assert s["h"] == pytest.approx(0.6931, abs=1e-4)
    assert max(v for _, _, v in s["h_F"]) == pytest.approx(0.4812, abs=1e-4)


def test_schreier_example():
    code, out, _ = run("schreier", "build", "--group", "z2", "--subgroup", "trivial", "--psi", "a=t")
    assert code == EXIT_OK
    s = json.loads(out)
    assert s["vertices"] == 2 and s["names"] == ["1", "t"]
    assert sorted(map(tuple, s["edges"])) == [(0, "a", 1), (1, "a", 0)]
    assert s["fully_deterministic"] and s["uniformly_connected"] == 1


def test_schreier_output_feeds_entropy(tmp_path):
    code, out, _ = run("schreier", "build", "--group", "cyclic:3", "--psi", "a=t,b=t2")
    graph = tmp_path / "g.json"
    graph.write_text(out)
    code, out, _ = run("entropy", "identity-check", "--graph", str(graph))
    assert code == EXIT_OK
    assert json.loads(out)["h_spectral"] == pytest.approx(math.log(2))


def test_summaries_are_byte_identical():
    argv = ("simulate", "support-growth", "--kernel", "sws:biased:0.7", "--n", "300",
            "--trials", "12", "--seed", "5")
    assert run(*argv)[1] == run(*argv)[1]
    threaded = run(*argv, "--threads", "3")[1]
    assert json.loads(threaded)["estimate"] == json.loads(run(*argv)[1])["estimate"]


def test_usage_errors_exit_2(tmp_path):
    assert run("simulate", "range", "--n", "10")[0] == EXIT_INVALID  # no seed
    assert run("simulate", "range", "--seed", "1", "--kernel", "levy:2")[0] == EXIT_INVALID
    assert run("simulate", "range", "--seed", "1", "--n", "0")[0] == EXIT_INVALID
    assert run("bogus")[0] == EXIT_INVALID
    assert run("entropy", "report", "--graph", str(tmp_path / "missing.json"))[0] == EXIT_INVALID
    assert run("schreier", "build", "--group", "z2", "--psi", "a=1:0")[0] == EXIT_INVALID
    assert run("schreier", "build", "--group", "cyclic:4", "--psi", "a=t2")[0] == EXIT_INVALID
    code, _, err = run("simulate", "range", "--seed", "1", "--threads", "0")
    assert code == EXIT_INVALID and "threads" in err


def test_certification_failures_exit_3(tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"vertices": 1, "alphabet": ["a", "b"], "edges": [[0, "a", 0]]}))
    code, _, err = run("entropy", "report", "--graph", str(g), "--forbid", "b")
    assert code == EXIT_CERT and "relatively_dense" in err
    code, _, err = run("entropy", "substoch-check", "--graph", str(g), "--forbid", "b")
    assert code == EXIT_CERT
    two = tmp_path / "two.json"
    two.write_text(json.dumps({"vertices": 2, "alphabet": ["a"], "edges": [[0, "a", 1]]}))
    code, _, err = run("entropy", "report", "--graph", str(two), "--forbid", "a")
    assert code == EXIT_CERT and "uniformly_connected" in err


def test_substoch_check_full_shift(full2):
    code, out, _ = run("entropy", "substoch-check", "--graph", full2, "--forbid", "11")
    assert code == EXIT_OK
    assert json.loads(out)["max_row_sum"] == 0.75


def test_csv_and_json_files(tmp_path):
    out_dir = tmp_path / "res"
    code, out, _ = run("spectral", "rho", "--kernel", "biased:0.7", "--nmax", "200",
                       "--out", str(out_dir), "--format", "both")
    assert code == EXIT_OK
    s = json.loads((out_dir / "summary.json").read_text())
    assert s == json.loads(out)
    assert s["estimate"] == pytest.approx(2 * math.sqrt(0.21), abs=0.01)
    lines = (out_dir / "roots.csv").read_text().splitlines()
    assert lines[0] == "n,root" and len(lines) > 10


def test_trial_csv_to_stdout():
    code, out, _ = run("simulate", "range", "--n", "50", "--trials", "4", "--seed", "2",
                       "--format", "csv")
    lines = out.splitlines()
    assert code == EXIT_OK and lines[0] == "trial,n,statistic" and len(lines) == 5


def test_green_and_laplace():
    code, out, _ = run("spectral", "green", "--kernel", "biased:0.7", "--nmax", "300")
    assert json.loads(out)["green"] == pytest.approx(2.5, abs=1e-3)
    code, out, _ = run("simulate", "laplace-range", "--n", "64", "--trials", "400", "--seed", "3")
    s = json.loads(out)
    assert abs(s["estimate"] - s["exact"]) <= 4 * s["stderr"]


def test_cutpoints_and_limit_config():
    code, out, _ = run("simulate", "cutpoints", "--q", "2", "--n", "2000", "--trials", "20",
                       "--seed", "9")
    s = json.loads(out)
    assert code == EXIT_OK and abs(s["estimate"] - 0.5) <= 4 * s["stderr"] + 1e-9
    code, out, _ = run("simulate", "limit-config", "--kernel", "sws:biased:0.8", "--n", "1000",
                       "--trials", "10", "--seed", "9")
    assert code == EXIT_OK and json.loads(out)["estimate"] > 0.5


def test_manifest_run(tmp_path):
    manifest = {"command": "simulate", "statistic": "sws-return", "kernel": "srw:lattice:1",
                "n": 2, "trials": 2000, "seed": 11}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    code, out, _ = run("run", str(path))
    assert code == EXIT_OK
    s = json.loads(out)
    assert s["manifest"]["seed"] == 11 and abs(s["estimate"] - 0.125) <= 4 * s["stderr"]
    assert run("run", str(path))[1] == out
    assert manifest_to_argv({"command": "entropy", "check": "report", "graph": "g", "x": "0"}) == \
        ["entropy", "report", "--graph", "g", "--from", "0"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"statistic": "range"}))
    assert run("run", str(bad))[0] == EXIT_INVALID
    bad.write_text("{not json")
    assert run("run", str(bad))[0] == EXIT_INVALID


def test_console_module_exit_code():
    proc = subprocess.run([sys.executable, "-m", "lampwalk", "simulate", "range"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_INVALID and "seed" in proc.stderr
