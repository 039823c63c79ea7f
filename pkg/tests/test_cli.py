import subprocess
import sys
from pathlib import Path

import pytest

from hartree_scattering.cli import main

ROOT = Path(__file__).resolve().parents[1]
SMOKE = ROOT / "configs" / "smoke.txt"


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "run"
    assert main(["run", str(SMOKE), "--output-dir", str(out)]) == 0
    return out


def test_run_writes_directory(run_dir, capsys):
    assert (run_dir / "diagnostics.csv").exists()


def test_fit(run_dir, capsys):
    capsys.readouterr()
    assert main(["fit", str(run_dir), "--quantity", "linf", "--window", "1:4"]) == 0
    header, line = capsys.readouterr().out.strip().splitlines()
    assert header == "quantity,t_a,t_b,slope,intercept,residual,samples"
    assert line.startswith("linf,1.0,4.0,")


def test_fit_bad_window(run_dir, capsys):
    assert main(["fit", str(run_dir), "--quantity", "linf", "--window", "3:3.1"]) == 1
    assert "error" in capsys.readouterr().err


def test_analyze_and_compare(run_dir, capsys):
    assert main(["analyze", str(run_dir)]) == 0
    assert (run_dir / "analysis.csv").exists()
    capsys.readouterr()
    assert main(["compare", str(run_dir), str(run_dir)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "column,worst_relative_difference"
    assert lines[-1].startswith("_matched,")


def test_converge(capsys):
    assert main(["converge", str(SMOKE), "--vary", "tau", "--values", "0.05,0.025,0.0125",
                 "--t-end", "0.2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "tau,difference,order,energy_drift" and len(out) == 4


def test_invalid_beta_exits_1(tmp_path, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text(SMOKE.read_text() + "beta = 0.9\n")
    assert main(["run", str(cfg), "--output-dir", str(tmp_path / "x")]) == 1
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "beta" in err


def test_abort_exits_2(tmp_path, capsys):
    # a wide datum on a small box breaches the boundary shell immediately
    cfg = tmp_path / "tight.txt"
    cfg.write_text(SMOKE.read_text() + "sigma = 12\n")
    assert main(["run", str(cfg), "--output-dir", str(tmp_path / "y")]) == 2
    assert "aborted" in capsys.readouterr().err
    assert (tmp_path / "y" / "error.txt").exists()


def test_missing_run_dir(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "nope")]) == 1


def test_selftest_subprocess():
    proc = subprocess.run([sys.executable, "-m", "hartree_scattering.cli", "selftest"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert proc.stdout.strip().splitlines()[-1].startswith(tuple("0123456789"))
    assert "FAIL" not in proc.stdout
