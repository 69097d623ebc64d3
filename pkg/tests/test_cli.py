import os
import subprocess
import sys

import pytest

from symground.cli import main
from symground.metrics import read_metrics


def test_validate_bundled(capsys):
    assert main(["validate", "default"]) == 0
    assert "default: ok" in capsys.readouterr().out


def test_validate_reports_field(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("world:\n  jump_prob: 1.5\n")
    assert main(["validate", str(p)]) == 2
    assert "ScenarioError: world.jump_prob" in capsys.readouterr().err


def test_missing_scenario(capsys):
    assert main(["validate", "no_such_scenario"]) == 2
    assert "ScenarioError" in capsys.readouterr().err


def test_run_writes_csv_and_plot(tmp_path, capsys):
    assert main(["run", "default", "--seed", "1", "--steps", "30", "--out", str(tmp_path)]) == 0
    series = read_metrics(tmp_path / "default_seed1.csv")
    assert len(series) == 31
    assert (tmp_path / "default_seed1.svg").exists()


def test_capped_run_exit_code(tmp_path, capsys):
    p = tmp_path / "plague.yaml"
    p.write_text(
        "fitness: {r_max: 0.5, capacity: .inf, death_rate: 0.0}\n"
        "population: {n0: 10, steps: 100, hard_cap: 50}\n"
        "variant: {kind: fixed, sigma: 0.0}\n"
    )
    assert main(["run", str(p), "--out", str(tmp_path), "--no-plot"]) == 3
    assert "CappedGrowthError" in capsys.readouterr().err
    partial = read_metrics(tmp_path / "plague_seed0.csv")
    assert partial.capped_at is not None


def test_compare_small(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text("world: {m_e: 2, m_i: 2, diffusion: 0.02}\nfitness: {true_weights: [1, 1], capacity: 30}\n"
                 "population: {n0: 10, steps: 40}\n")
    assert main(["compare", str(p), "--seeds", "10", "--sigma-grid", "0.01", "0.1"]) == 0
    assert "win_rate" in capsys.readouterr().out


def test_compare_too_few_seeds(capsys):
    assert main(["compare", "default", "--seeds", "3", "--steps", "5"]) == 4


def test_gest_small(tmp_path, capsys):
    p = tmp_path / "g.yaml"
    p.write_text("world: {m_e: 2, m_i: 2, diffusion: 0.02}\nfitness: {true_weights: [1, 1], capacity: 30}\n"
                 "population: {n0: 10, steps: 30}\nvariant: {kind: gest}\n")
    assert main(["gest", str(p), "--seeds", "10", "--lambda-grid", "0", "1", "--isolated"]) == 0
    out = capsys.readouterr().out
    assert "lambda=0:" in out and "lambda=1:" in out


def test_symbols_small(capsys):
    assert main(["symbols", "naming", "--rounds", "20", "--seeds", "3"]) == 0
    assert "agreement" in capsys.readouterr().out


def test_list(capsys):
    assert main(["list"]) == 0
    assert "naming" in capsys.readouterr().out.split()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "symground", "validate", "hazard"], capture_output=True, text=True)
    assert r.returncode == 0 and "hazard: ok" in r.stdout
