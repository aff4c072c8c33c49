"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The structural
reproduction (criterion 7) runs the full 2-model x 7-horizon x 500-day
sweep at 6000 draws and is the slow part of the suite.
"""

import math
import subprocess
import sys
import time
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from rumidas import (
    DailySeries,
    DesignMatrix,
    DgpParams,
    ForecastPlan,
    LfTerm,
    LossSeries,
    McmcConfig,
    ModelSpec,
    NormalGammaPrior,
    PredictiveDensity,
    benchmark_spec,
    build_score_table,
    crps_mixture,
    diebold_mariano,
    gibbs_sample,
    model_confidence_set,
    run_plan,
    simulate_dgp,
)
from rumidas.forecast import audit_plan

JOBS = 2


def report(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS")


def empirical_crps(samples: np.ndarray, y: float) -> float:
    x = np.sort(samples)
    n = len(x)
    weights = 2 * np.arange(1, n + 1) - n - 1
    return float(np.abs(x - y).mean() - float(weights @ x) / (n * n))


# ---------------------------------------------------------------------------
# 1. Posterior correctness with sigma2 fixed
# ---------------------------------------------------------------------------


def test_c1_posterior_correctness_fixed_sigma():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    T, p, sigma2 = 200, 10, 1.0
    X = rng.standard_normal((T, p))
    gamma_true = rng.standard_normal(p)
    y = X @ gamma_true + math.sqrt(sigma2) * rng.standard_normal(T)
    design = DesignMatrix.from_arrays(X, y)
    prior = NormalGammaPrior(np.zeros(p), 25.0 * np.eye(p), 2.0, 2.0)

    vinv = np.linalg.inv(prior.gamma_cov)
    Vbar = np.linalg.inv(vinv + X.T @ X / sigma2)
    gbar = Vbar @ (vinv @ prior.gamma_mean + X.T @ y / sigma2)

    draws = gibbs_sample(
        design, prior, McmcConfig(n_draws=41000, burn_in=1000, seed=11), fix_sigma2=sigma2
    )
    S = len(draws)
    se = np.sqrt(np.diag(Vbar) / S)
    worst = np.max(np.abs(draws.gamma.mean(axis=0) - gbar) / se)
    assert worst < 3.0, f"worst coordinate deviation {worst:.2f} MC standard errors"

    cov = np.cov(draws.gamma.T)
    frob = np.linalg.norm(cov - Vbar) / np.linalg.norm(Vbar)
    assert frob < 0.05, f"chain covariance off by {frob:.3%} (Frobenius, relative)"

    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    report(f"1 posterior-correctness (worst z {worst:.2f}, cov {frob:.3%}, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 2. No-data sanity: prior reproduction
# ---------------------------------------------------------------------------


def test_c2_empty_design_reproduces_prior():
    p = 4
    mean = np.array([1.0, -2.0, 0.5, 3.0])
    cov = np.diag([2.0, 1.0, 0.5, 4.0])
    a, b = 3.0, 2.0
    prior = NormalGammaPrior(mean, cov, a, b)
    design = DesignMatrix.from_arrays(np.empty((0, p)), np.empty(0))
    draws = gibbs_sample(design, prior, McmcConfig(n_draws=41000, burn_in=1000, seed=22))
    S = len(draws)

    se = np.sqrt(np.diag(cov) / S)
    assert np.all(np.abs(draws.gamma.mean(axis=0) - mean) < 4 * se)
    frob = np.linalg.norm(np.cov(draws.gamma.T) - cov) / np.linalg.norm(cov)
    assert frob < 0.05
    prec = 1.0 / draws.sigma2
    prec_se = math.sqrt(a / b**2 / S)
    assert abs(prec.mean() - a / b) < 4 * prec_se
    report(f"2 no-data prior reproduction (cov {frob:.3%})")


# ---------------------------------------------------------------------------
# 3. Diffuse-prior equivalence with OLS
# ---------------------------------------------------------------------------


def test_c3_diffuse_prior_matches_ols():
    rng = np.random.default_rng(303)
    T, p = 1000, 12
    X = rng.standard_normal((T, p))
    y = X @ rng.standard_normal(p) + rng.standard_normal(T)
    design = DesignMatrix.from_arrays(X, y)
    prior = NormalGammaPrior(np.zeros(p), 1e6 * np.eye(p), 0.01, 0.01)
    draws = gibbs_sample(design, prior, McmcConfig(n_draws=6000, burn_in=1000, seed=33))
    ols, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    rel = np.linalg.norm(draws.gamma.mean(axis=0) - ols) / np.linalg.norm(ols)
    assert rel < 1e-2, f"relative deviation from OLS {rel:.2e}"
    report(f"3 diffuse-prior vs OLS (rel {rel:.2e})")


# ---------------------------------------------------------------------------
# 4. CRPS closed form against the sampling oracle
# ---------------------------------------------------------------------------


def test_c4_crps_oracle():
    rng = np.random.default_rng(404)
    for mu, sd, y in [(0.0, 1.0, 0.0), (1.3, 1.0, 0.2), (-0.7, 0.5, -2.0)]:
        pred = PredictiveDensity(np.array([mu]), np.array([sd]))
        closed = crps_mixture(pred, y)
        mc = empirical_crps(mu + sd * rng.standard_normal(10**6), y)
        assert abs(closed - mc) < 1e-3, f"single Gaussian ({mu},{sd}) at {y}: {abs(closed-mc):.2e}"

    means = rng.standard_normal(100) * 2.0
    sds = np.abs(rng.standard_normal(100)) + 0.3
    pred = PredictiveDensity(means, sds)
    closed = crps_mixture(pred, 0.8)
    mc = empirical_crps(pred.sample(rng, 10**6), 0.8)
    rel = abs(closed - mc) / abs(mc)
    assert rel < 0.01, f"100-component mixture: rel {rel:.3%}"
    report(f"4 CRPS closed form vs sampling oracle (mixture rel {rel:.3%})")


# ---------------------------------------------------------------------------
# 5. Diebold-Mariano size under the null
# ---------------------------------------------------------------------------


def test_c5_dm_size():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    T, reps = 300, 2000
    dates = tuple(date(2020, 1, 1) + timedelta(days=i) for i in range(T))
    base = LossSeries(dates, np.full(T, 5.0))
    rejections = 0
    for _ in range(reps):
        d = rng.standard_normal(T)
        if diebold_mariano(LossSeries(dates, d + 5.0), base, h=1).pvalue_one_sided < 0.05:
            rejections += 1
    rate = rejections / reps
    elapsed = time.perf_counter() - t0
    assert 0.035 <= rate <= 0.065, f"size {rate:.3%}"
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    report(f"5 DM size under the null ({rate:.2%} at nominal 5%, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 6. Model confidence set behavior
# ---------------------------------------------------------------------------


def test_c6_mcs_behavior():
    T, runs = 500, 200
    dates = tuple(date(2020, 1, 1) + timedelta(days=i) for i in range(T))

    rng = np.random.default_rng(606)
    eliminated = 0
    for s in range(runs):
        L = 1.0 + rng.standard_normal((T, 3))
        L[:, 2] += 10.0  # a model worse by ten loss standard deviations
        losses = {f"m{i}": LossSeries(dates, L[:, i]) for i in range(3)}
        res = model_confidence_set(losses, 0.10, n_boot=500, seed=s)
        eliminated += "m2" not in res.included
    assert eliminated >= int(0.99 * runs), f"dominated model eliminated in {eliminated}/{runs}"

    rng = np.random.default_rng(607)
    kept = np.zeros(3)
    for s in range(runs):
        L = 1.0 + rng.standard_normal((T, 3))
        losses = {f"m{i}": LossSeries(dates, L[:, i]) for i in range(3)}
        res = model_confidence_set(losses, 0.10, n_boot=500, seed=10_000 + s)
        for i in range(3):
            kept[i] += f"m{i}" in res.included
    retention = kept / runs
    assert np.all(retention >= 1 - 0.10 - 0.03), f"retention {retention}"
    report(
        f"6 MCS behavior (dominated out {eliminated}/{runs}, retention min {retention.min():.2%})"
    )


# ---------------------------------------------------------------------------
# 7 + 8. Structural reproduction and the real-time audit
# ---------------------------------------------------------------------------

DGP = DgpParams(
    ar_coefs=(0.3,),
    lf_loadings=(0.9,),
    noise_sd=1.0,
    lf_ar=0.8,
    lf_noise_sd=2.5,
    period_profile=tuple(1.0 + 0.7 * np.cos(4 * np.pi * np.arange(28) / 28)),
)

RUMIDAS_SPEC = ModelSpec(lf_terms=(LfTerm("macro"),))


def _structural_trial(seed: int):
    """One desk-scale end-to-end run; returns per-horizon outcome flags."""
    window, eval_days = 730, 200
    bundle = simulate_dgp(DGP, window + eval_days + 45, seed=seed)
    eval_start = bundle.target.start + timedelta(days=window + 9)
    plan = ForecastPlan(
        models=(("bar3", benchmark_spec("AR3")), ("rumidas", RUMIDAS_SPEC)),
        evaluation=(eval_start, eval_start + timedelta(days=eval_days - 1)),
        horizons=(1, 2, 3),
        estimation_window_days=window,
        refit_every=7,
        mcmc=McmcConfig(n_draws=2000, burn_in=500),
        master_seed=seed,
    )
    records = run_plan(plan, bundle, jobs=JOBS)
    table = build_score_table(
        [r for r in records if r.error is None and r.realized is not None],
        "bar3", 0.10, n_boot=500, seed=seed,
    )
    ok = True
    for h in (1, 2, 3):
        for metric in ("rmse", "crps"):
            cell = table.cell(metric, h, "rumidas")
            ok &= cell.value < 1.0 and cell.dm_pvalue_one_sided < 0.05
            ok &= not table.cell(metric, h, "bar3").in_mcs
    return ok


@pytest.fixture(scope="module")
def full_sweep():
    """Paper-scale sweep: 2 models x 7 horizons x 500 origins x 6000 draws."""
    window, eval_days, max_h = 7 * 365, 500, 28
    bundle = simulate_dgp(DGP, window + 5 + eval_days + max_h + 7, seed=777)
    eval_start = bundle.target.start + timedelta(days=window + 5)
    plan = ForecastPlan(
        models=(("bar3", benchmark_spec("AR3")), ("rumidas", RUMIDAS_SPEC)),
        evaluation=(eval_start, eval_start + timedelta(days=eval_days - 1)),
        horizons=(1, 2, 3, 7, 14, 21, 28),
        estimation_window_days=window,
        refit_every=1,
        mcmc=McmcConfig(n_draws=6000, burn_in=1000),
        master_seed=777,
    )
    t0 = time.perf_counter()
    records = run_plan(plan, bundle, jobs=JOBS)
    table = build_score_table(
        [r for r in records if r.error is None and r.realized is not None],
        "bar3", 0.10, n_boot=5000, seed=777,
    )
    elapsed = time.perf_counter() - t0
    return plan, bundle, records, table, elapsed


def test_c7_structural_table_reproduction(full_sweep):
    successes = sum(_structural_trial(seed) for seed in range(20))
    assert successes >= 18, f"structural finding held in {successes}/20 seeds"

    plan, bundle, records, table, elapsed = full_sweep
    assert len(records) == 500 * 7 * 2
    assert sum(r.error is not None for r in records) == 0
    for h in (1, 2, 3):
        for metric in ("rmse", "crps"):
            cell = table.cell(metric, h, "rumidas")
            assert cell.value < 1.0 and cell.dm_pvalue_one_sided < 0.05
            assert not table.cell(metric, h, "bar3").in_mcs
    assert elapsed < 900.0, f"full sweep took {elapsed:.0f}s"
    gains = {h: 1 - table.cell("rmse", h, "rumidas").value for h in (1, 2, 3)}
    report(
        "7 structural reproduction "
        f"({successes}/20 seeds; full sweep {elapsed:.0f}s; "
        f"short-horizon RMSE gains {min(gains.values()):.0%}..{max(gains.values()):.0%})"
    )


def test_c8_realtime_discipline_audit(full_sweep):
    plan, bundle, _, _, _ = full_sweep
    report_obj = audit_plan(plan, bundle)
    assert report_obj.ok, f"violations: {report_obj.violations[:5]}"
    assert report_obj.cells_checked == 500 * 7 * 2
    assert report_obj.rows_checked > 0
    report(
        f"8 real-time audit (zero look-ahead across {report_obj.cells_checked} cells, "
        f"{report_obj.rows_checked} row values)"
    )


# ---------------------------------------------------------------------------
# 9. End-to-end CLI determinism
# ---------------------------------------------------------------------------


def test_c9_cli_determinism(tmp_path):
    def cli(*args):
        res = subprocess.run(
            [sys.executable, "-m", "rumidas", *map(str, args)],
            capture_output=True, text=True,
        )
        assert res.returncode == 0, res.stderr
        return res

    sim = tmp_path / "bundle"
    cli("simulate", "--out", sim, "--days", "420", "--seed", "5")
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        f"""\
data:
  target: {sim}/target.csv
  monthly:
    macro: {sim}/macro.csv
plan:
  estimation_window_days: 200
  evaluation: {{start: 2006-08-01, end: 2006-08-30}}
  horizons: [1, 3, 7]
  refit_every: 7
models:
  bar3: {{benchmark: AR3}}
  rumidas:
    hf_lags: [1, 2, 7]
    lf: [{{name: macro, lags: 1}}]
benchmark: bar3
mcmc: {{n_draws: 800, burn_in: 200}}
scoring: {{n_boot: 300}}
seed: 13
predictive_components: 50
"""
    )
    cli("forecast", cfg, "--out", tmp_path / "o1")
    cli("forecast", cfg, "--out", tmp_path / "o2", "--jobs", "2")

    def tree(root: Path) -> dict[str, bytes]:
        return {
            str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()
        }

    t1, t2 = tree(tmp_path / "o1"), tree(tmp_path / "o2")
    assert t1.keys() == t2.keys()
    diffs = [k for k in t1 if t1[k] != t2[k]]
    assert diffs == [], f"outputs differ: {diffs}"
    report(f"9 CLI determinism ({len(t1)} files byte-identical across reruns and --jobs)")
