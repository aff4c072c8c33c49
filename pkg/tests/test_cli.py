import json
import subprocess
import sys
from pathlib import Path

import pytest


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "rumidas", *map(str, args)],
        capture_output=True,
        text=True,
        env=env,
    )


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    res = run_cli("simulate", "--out", out, "--days", "420", "--seed", "5")
    assert res.returncode == 0, res.stderr
    return out


def write_config(path: Path, sim_dir: Path, **overrides) -> Path:
    cfg = {
        "window": 200,
        "eval_start": "2006-08-01",
        "eval_end": "2006-08-20",
        "horizons": "[1, 3]",
        "n_draws": 600,
        "burn_in": 150,
        "n_boot": 300,
        "seed": 9,
        "out": "out",
    }
    cfg.update(overrides)
    text = f"""\
data:
  target: {sim_dir}/target.csv
  monthly:
    macro: {sim_dir}/macro.csv

plan:
  estimation_window_days: {cfg["window"]}
  evaluation:
    start: {cfg["eval_start"]}
    end: {cfg["eval_end"]}
  horizons: {cfg["horizons"]}
  refit_every: 7

models:
  bar3:
    benchmark: AR3
  rumidas:
    hf_lags: [1, 2, 7]
    lf:
      - {{name: macro, lags: 1}}

benchmark: bar3

mcmc:
  n_draws: {cfg["n_draws"]}
  burn_in: {cfg["burn_in"]}

scoring:
  n_boot: {cfg["n_boot"]}

seed: {cfg["seed"]}
output_dir: {cfg["out"]}
predictive_components: 40
"""
    path.write_text(text)
    return path


class TestSimulate:
    def test_writes_bundle_and_starter_config(self, sim_dir):
        assert (sim_dir / "target.csv").is_file()
        assert (sim_dir / "macro.csv").is_file()
        assert (sim_dir / "config.yaml").is_file()

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("simulate", "--out", a, "--days", "200", "--seed", "3").returncode == 0
        assert run_cli("simulate", "--out", b, "--days", "200", "--seed", "3").returncode == 0
        assert (a / "target.csv").read_bytes() == (b / "target.csv").read_bytes()
        assert (a / "macro.csv").read_bytes() == (b / "macro.csv").read_bytes()

    def test_explosive_dgp_exits_with_error(self, tmp_path):
        res = run_cli("simulate", "--out", tmp_path / "x", "--ar", "1.05")
        assert res.returncode == 2
        assert "explosive" in res.stderr


class TestValidate:
    def test_valid_config_ok(self, sim_dir, tmp_path):
        cfg = write_config(tmp_path / "good.yaml", sim_dir)
        res = run_cli("validate", cfg)
        assert res.returncode == 0
        assert res.stdout.strip() == "OK"

    def test_starter_config_is_valid(self, sim_dir):
        res = run_cli("validate", sim_dir / "config.yaml")
        assert res.returncode == 0, res.stderr

    def test_zero_horizon_rejected(self, sim_dir, tmp_path):
        cfg = write_config(tmp_path / "bad.yaml", sim_dir, horizons="[0, 1]")
        res = run_cli("validate", cfg)
        assert res.returncode == 1
        assert "horizons must be >= 1" in res.stderr

    def test_monthly_coverage_ending_before_evaluation(self, sim_dir, tmp_path):
        # truncate the monthly file so its releases end before the evaluation
        macro = (sim_dir / "macro.csv").read_text().splitlines()
        short = tmp_path / "macro_short.csv"
        short.write_text("\n".join(macro[:4]) + "\n")
        cfg_text = write_config(tmp_path / "cov.yaml", sim_dir).read_text()
        cfg_text = cfg_text.replace(f"{sim_dir}/macro.csv", str(short))
        cfg = tmp_path / "cov.yaml"
        cfg.write_text(cfg_text)
        res = run_cli("validate", cfg)
        assert res.returncode == 1
        assert "coverage ends" in res.stderr
        assert "2006-08-01" in res.stderr  # names the evaluation start

    def test_missing_file_reported(self, sim_dir, tmp_path):
        cfg = write_config(tmp_path / "missing.yaml", sim_dir)
        cfg.write_text(cfg.read_text().replace("target.csv", "nope.csv"))
        res = run_cli("validate", cfg)
        assert res.returncode == 1
        assert "file not found" in res.stderr


@pytest.fixture(scope="module")
def run_output(sim_dir, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("fc")
    cfg = write_config(tmp / "run.yaml", sim_dir, out=str(tmp / "out"))
    res = run_cli("forecast", cfg)
    assert res.returncode == 0, res.stderr
    return tmp / "out"


class TestForecast:
    def test_outputs_exist_and_no_partials(self, run_output):
        for name in [
            "forecasts.csv",
            "errors.csv",
            "scores.csv",
            "scores.jsonl",
            "scores_rmse.md",
            "scores_crps.md",
            "scores_logscore.md",
            "mcs.csv",
            "manifest.json",
        ]:
            assert (run_output / name).is_file(), name
        assert not list(run_output.glob("*.partial"))
        assert list((run_output / "components").glob("*.npy"))

    def test_record_count(self, run_output):
        lines = (run_output / "forecasts.csv").read_text().splitlines()
        assert len(lines) - 1 == 20 * 2 * 2  # days x horizons x models

    def test_manifest_contents(self, run_output):
        manifest = json.loads((run_output / "manifest.json").read_text())
        assert manifest["master_seed"] == 9
        assert "config_sha256" in manifest and "versions" in manifest

    def test_rerun_is_byte_identical(self, sim_dir, tmp_path):
        cfg1 = write_config(tmp_path / "r1.yaml", sim_dir, out=str(tmp_path / "o1"))
        res1 = run_cli("forecast", cfg1)
        assert res1.returncode == 0, res1.stderr
        res2 = run_cli("forecast", cfg1, "--out", tmp_path / "o2")
        assert res2.returncode == 0
        t1 = tree_bytes(tmp_path / "o1")
        t2 = tree_bytes(tmp_path / "o2")
        assert t1.keys() == t2.keys()
        mismatches = [k for k in t1 if t1[k] != t2[k]]
        assert mismatches == []

    def test_jobs_flag_never_changes_bytes(self, sim_dir, tmp_path):
        cfg = write_config(tmp_path / "j.yaml", sim_dir, out=str(tmp_path / "j1"),
                           eval_end="2006-08-10")
        assert run_cli("forecast", cfg).returncode == 0
        assert run_cli("forecast", cfg, "--jobs", "2", "--out", tmp_path / "j2").returncode == 0
        t1, t2 = tree_bytes(tmp_path / "j1"), tree_bytes(tmp_path / "j2")
        assert t1.keys() == t2.keys()
        assert [k for k in t1 if t1[k] != t2[k]] == []


class TestScore:
    def test_rescoring_reproduces_tables(self, sim_dir, tmp_path):
        cfg = write_config(tmp_path / "s.yaml", sim_dir, out=str(tmp_path / "so"))
        assert run_cli("forecast", cfg).returncode == 0
        out2 = tmp_path / "rescored"
        res = run_cli("score", cfg, "--forecasts", tmp_path / "so" / "forecasts.csv",
                      "--out", out2)
        assert res.returncode == 0, res.stderr
        assert (out2 / "scores.csv").read_bytes() == (tmp_path / "so" / "scores.csv").read_bytes()
        assert (out2 / "mcs.csv").read_bytes() == (tmp_path / "so" / "mcs.csv").read_bytes()

    def test_missing_dump_is_validation_failure(self, sim_dir, tmp_path):
        cfg = write_config(tmp_path / "m.yaml", sim_dir)
        res = run_cli("score", cfg, "--forecasts", tmp_path / "absent.csv")
        assert res.returncode == 1
