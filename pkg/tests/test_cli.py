import json

import pytest

from besqlab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_wallach_check_member(capsys):
    code, out, _ = run(capsys, "wallach-check", "-p", "3", "-b", "0.5", "--x0", "diag:1,0,0")
    assert code == 0
    assert json.loads(out) == {"member": True, "branch": "discrete", "rank": 1}


def test_wallach_check_non_member(capsys):
    code, out, _ = run(capsys, "wallach-check", "-p", "3", "-b", "0.5", "--x0", "diag:1,1,0")
    assert code == 2 and json.loads(out)["member"] is False


def test_wallach_check_bad_point(capsys):
    code, _, err = run(capsys, "wallach-check", "-p", "2", "-b", "1", "--x0", "diag:1,-1")
    assert code == 1 and "positive semidefinite" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["wallach-check", "-p", "2"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    assert cli.resolve_seed(None) == 42
    assert cli.resolve_seed(None, 9) == 9
    monkeypatch.setenv(cli.SEED_ENV, "5")
    assert cli.resolve_seed(None, 9) == 5
    assert cli.resolve_seed(3, 9) == 3


def test_simulate_writes_one_file_per_path(capsys, tmp_path):
    out = tmp_path / "paths"
    code, stdout, _ = run(capsys, "simulate", "--mode", "matrix", "-p", "2", "-a", "3", "--t", "0.25",
                          "--dt", "0.0625", "--paths", "3", "--seed", "1", "--out", str(out))
    assert code == 0 and len(stdout.split()) == 3
    lines = (out / "matrix_path_00002.csv").read_text().splitlines()
    assert lines[0] == "t,x11,x12,x22" and len(lines) == 6


def test_simulate_is_reproducible(capsys, tmp_path):
    for d in ("a", "b"):
        run(capsys, "simulate", "--mode", "particles", "--lambda0", "1,2", "-a", "1", "--t", "0.5",
            "--dt", "0.0625", "--seed", "4", "--out", str(tmp_path / d))
    a = (tmp_path / "a" / "particles_path_00000.csv").read_text()
    assert a == (tmp_path / "b" / "particles_path_00000.csv").read_text()
    assert a.splitlines()[0] == "t,lambda1,lambda2"


def test_simulate_scalar_exact(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--mode", "scalar", "--delta", "-0.5", "--x0", "0", "--exact-law",
                     "--t", "0.5", "--dt", "0.125", "--out", str(tmp_path))
    rows = (tmp_path / "scalar_path_00000.csv").read_text().splitlines()
    assert code == 0 and rows[0] == "t,x"
    assert all(float(r.split(",")[1]) <= 0 for r in rows[1:])


def test_simulate_scalar_bad_start(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--mode", "scalar", "--x0", "diag:1", "--out", str(tmp_path))
    assert code == 1 and "numeric" in err


def test_verify_positional_experiment(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "comparison", "-p", "2", "-a", "0.5", "--lambda0", "0,1",
                       "--paths", "20", "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass" and rep["experiment"] == "comparison"
    assert (tmp_path / "comparison.json").exists()


def test_verify_preset_override_and_env_seed(capsys, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "123")
    code, out, _ = run(capsys, "verify", "--preset", "negativity-p2-a0.5", "--paths", "200")
    rep = json.loads(out)
    assert code == 0 and rep["config"]["n_paths"] == 200 and rep["provenance"]["master_seed"] == 123


def test_verify_precondition_failure(capsys):
    code, _, err = run(capsys, "verify", "laplace", "-p", "2", "-a", "0.5", "--x0", "diag:1,2", "--paths", "5")
    assert code == 1 and "non-solvable" in err and "alpha=0.5" in err


def test_verify_failed_verdict_exits_two(capsys):
    # a zero exit budget cannot be met by a run that exits
    code, out, _ = run(capsys, "verify", "psd-retention", "-p", "2", "-a", "1", "--x0", "diag:0.001,2",
                       "--paths", "50", "--scheme", "euler", "--exit-budget", "1e-9", "--psd-slack", "1e-6")
    assert code == 2 and json.loads(out)["verdict"] == "fail"


def test_verify_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = noncollision\np = 2\nalpha = 1\nx0 = diag:1,2\nn_paths = 10\nname = nc\n")
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--seed", "8")
    rep = json.loads(out)
    assert code == 0 and rep["name"] == "nc" and rep["provenance"]["master_seed"] == 8


def test_verify_needs_experiment(capsys):
    code, _, err = run(capsys, "verify")
    assert code == 1 and "no experiment" in err
    code, _, err = run(capsys, "verify", "--preset", "nope")
    assert code == 1 and "unknown preset" in err


def test_suite_only_subset(capsys, tmp_path):
    code, out, err = run(capsys, "suite", "--only", "comparison-p2-a0.5", "noncollision-p2-a1",
                         "--scale", "0.02", "--out", str(tmp_path))
    summary = json.loads(out)
    assert code == 0 and summary["n_experiments"] == 2 and summary["all_pass"]
    assert "PASS" in err
    assert (tmp_path / "summary.json").exists()
