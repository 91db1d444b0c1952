import csv
import io

import pytest

from scaling_lab.cli import EXIT_DOMINANCE, EXIT_USAGE, main, threads

CONST = ["--mu", "1000", "--eps", "1000", "--theta", "0.5", "--L", "0.5"]


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, list(csv.DictReader(io.StringIO(out)))


def test_eval_constant(capsys):
    code, rows = run(capsys, ["eval"] + CONST)
    assert code == 0 and len(rows) == 1
    assert rows[0]["argmin"] == "constant"
    assert float(rows[0]["total"]) == pytest.approx(0.125, rel=1e-15)


def test_sweep_rows(capsys):
    argv = ["sweep", "--mu", "1", "--eps", "1e-3", "--theta", "0.5", "--L", "0.5",
            "--axis1", "mu:0.1:1:2", "--axis2", "L:0.5:5:2"]
    code, rows = run(capsys, argv)
    assert code == 0 and len(rows) == 4
    assert sorted({float(r["mu"]) for r in rows}) == pytest.approx([0.1, 1.0])


def test_sweep_with_energy(capsys):
    argv = ["sweep"] + CONST + ["--axis1", "L:0.5:1:2", "--axis2", "mu:1000:2000:2", "--with-energy"]
    code, rows = run(capsys, argv)
    assert code == 0
    for r in rows:
        assert float(r["ratio"]) == pytest.approx(1.0, rel=1e-12)


def test_sweep_deterministic_across_threads(capsys, monkeypatch):
    argv = ["sweep", "--mu", "1", "--eps", "1e-3", "--theta", "0.5", "--L", "0.5",
            "--axis1", "eps:1e-4:1e-2:3", "--axis2", "L:0.5:2:2", "--with-energy"]
    monkeypatch.setenv("SCALING_LAB_THREADS", "1")
    main(argv)
    a = capsys.readouterr().out
    monkeypatch.setenv("SCALING_LAB_THREADS", "3")
    main(argv)
    b = capsys.readouterr().out
    assert a == b


def test_threads_env(monkeypatch):
    monkeypatch.setenv("SCALING_LAB_THREADS", "2")
    assert threads() == 2
    monkeypatch.setenv("SCALING_LAB_THREADS", "0")
    assert threads() == 1


def test_necessity_case1(capsys):
    code, rows = run(capsys, ["necessity", "--case", "1", "--jmax", "1e6"])
    assert code == 0
    assert rows and all(r["verdict"] == "pass" for r in rows)


def test_energy_breakdown(capsys):
    code, rows = run(capsys, ["energy"] + CONST)
    assert code == 0
    assert float(rows[0]["total"]) == pytest.approx(0.125, rel=1e-12)


def test_domain_error_exit(capsys):
    assert main(["eval", "--mu", "-1", "--eps", "1", "--theta", "0.5", "--L", "1"]) == EXIT_USAGE
    assert "mu" in capsys.readouterr().err


def test_bad_axis(capsys):
    argv = ["sweep"] + CONST + ["--axis1", "mu:1:2", "--axis2", "L:1:2:2"]
    assert main(argv) == EXIT_USAGE


def test_dominance_exit(capsys):
    argv = ["fit", "--regime", "Branching", "--axis", "L", "--lo", "1", "--hi", "10"] + CONST
    assert main(argv) == EXIT_DOMINANCE


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# constant point\nmu = 1000\neps = 1000\ntheta = 0.5\nL = 0.5\n")
    code, rows = run(capsys, ["--config", str(cfg), "eval"])
    assert code == 0 and rows[0]["argmin"] == "constant"
    code, rows = run(capsys, ["--config", str(cfg), "eval", "--L", "2"])
    assert float(rows[0]["L"]) == 2.0


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mu 1000\n")
    assert main(["--config", str(cfg), "eval"]) == EXIT_USAGE
