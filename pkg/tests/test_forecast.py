from datetime import date, timedelta

import numpy as np
import pytest

from rumidas import (
    DailySeries,
    DgpParams,
    ForecastPlan,
    LfTerm,
    McmcConfig,
    ModelSpec,
    NumericalError,
    SeriesBundle,
    SpecError,
    WindowError,
    align_monthly_to_daily,
    audit_plan,
    benchmark_spec,
    read_records_csv,
    run_plan,
    simulate_dgp,
    write_records_csv,
)
from rumidas.forecast import derive_seed, validate_plan, write_errors_csv


def small_plan(bundle, *, horizons=(1, 3), eval_days=20, window=200, refit=7,
               models=None, draws=600, burn=150, seed=11, components=40):
    models = models or (
        ("bar1", benchmark_spec("AR1")),
        ("rumidas", ModelSpec(lf_terms=(LfTerm("macro"),))),
    )
    eval_start = bundle.target.start + timedelta(days=window + 9)
    return ForecastPlan(
        models=models,
        evaluation=(eval_start, eval_start + timedelta(days=eval_days - 1)),
        horizons=horizons,
        estimation_window_days=window,
        refit_every=refit,
        mcmc=McmcConfig(n_draws=draws, burn_in=burn),
        master_seed=seed,
        predictive_components=components,
    )


@pytest.fixture(scope="module")
def bundle():
    return simulate_dgp(DgpParams(), 320, seed=2)


class TestSimulateDgp:
    def test_decoupled_loading_gives_uncorrelated_series(self):
        params = DgpParams(lf_loadings=(0.0,), lf_level=0.0, target_level=0.0)
        b = simulate_dgp(params, 2000, seed=4)
        step = align_monthly_to_daily(b.monthly["macro"], b.target)
        mask = ~np.isnan(step.values)
        r = np.corrcoef(b.target.values[mask], step.values[mask])[0, 1]
        assert abs(r) < 0.07

    def test_pass_through(self):
        params = DgpParams(
            ar_coefs=(0.0,), lf_loadings=(1.0,), noise_sd=0.0,
            lf_level=0.0, target_level=0.0,
        )
        b = simulate_dgp(params, 400, seed=9)
        step = align_monthly_to_daily(b.monthly["macro"], b.target)
        for i in range(1, 400):
            expected = step.values[i - 1]
            if np.isnan(expected):
                expected = 0.0  # zero initial values before the first release
            assert b.target.values[i] == pytest.approx(expected, abs=1e-12)

    def test_ar1_autocorrelation(self):
        params = DgpParams(ar_coefs=(0.7,), lf_loadings=(0.0,),
                           lf_level=0.0, target_level=0.0)
        b = simulate_dgp(params, 100_000, seed=12)
        x = b.target.values
        x = x - x.mean()
        acf1 = float(x[1:] @ x[:-1] / (x @ x))
        assert acf1 == pytest.approx(0.7, abs=0.02)

    def test_explosive_rejected(self):
        with pytest.raises(SpecError, match="explosive"):
            DgpParams(ar_coefs=(1.01,))
        with pytest.raises(SpecError, match="unit circle"):
            DgpParams(lf_ar=1.0)

    def test_deterministic(self):
        a = simulate_dgp(DgpParams(), 300, seed=3)
        b = simulate_dgp(DgpParams(), 300, seed=3)
        np.testing.assert_array_equal(a.target.values, b.target.values)
        np.testing.assert_array_equal(a.monthly["macro"].values, b.monthly["macro"].values)

    def test_period_profile_changes_dynamics(self):
        flat = simulate_dgp(DgpParams(), 300, seed=5)
        prof = tuple(1.0 + 0.5 * np.cos(4 * np.pi * np.arange(28) / 28))
        varying = simulate_dgp(DgpParams(period_profile=prof), 300, seed=5)
        assert not np.allclose(flat.target.values, varying.target.values)


class TestRunPlan:
    def test_record_count_is_days_times_horizons_times_models(self, bundle):
        plan = small_plan(bundle, eval_days=15, horizons=(1, 2, 7))
        records = run_plan(plan, bundle)
        assert len(records) == 15 * 3 * 2
        keys = {(r.model_id, r.origin_date, r.horizon) for r in records}
        assert len(keys) == len(records)
        for r in records:
            assert r.target_date == r.origin_date + timedelta(days=r.horizon)

    def test_deterministic_and_jobs_invariant(self, bundle):
        plan = small_plan(bundle, eval_days=10)
        a = run_plan(plan, bundle, jobs=1)
        b = run_plan(plan, bundle, jobs=2)
        assert len(a) == len(b)
        for ra, rb in zip(a, b):
            assert (ra.model_id, ra.origin_date, ra.horizon) == (
                rb.model_id, rb.origin_date, rb.horizon
            )
            np.testing.assert_array_equal(ra.comp_means, rb.comp_means)
            np.testing.assert_array_equal(ra.comp_sds, rb.comp_sds)
            assert ra.mean == rb.mean and ra.realized == rb.realized

    def test_refit_block_reuses_parameter_draws(self, bundle):
        plan = small_plan(bundle, eval_days=14, refit=7, horizons=(1,))
        records = [r for r in run_plan(plan, bundle) if r.model_id == "bar1"]
        # component sigmas depend only on the fit, so they match inside a block
        np.testing.assert_array_equal(records[0].comp_sds, records[3].comp_sds)
        np.testing.assert_array_equal(records[0].comp_sds, records[6].comp_sds)
        assert not np.array_equal(records[0].comp_sds, records[7].comp_sds)
        # forecasts still differ inside the block through the regressors
        assert records[0].mean != records[1].mean

    def test_refit_every_day_changes_draws_daily(self, bundle):
        plan = small_plan(bundle, eval_days=4, refit=1, horizons=(1,))
        records = [r for r in run_plan(plan, bundle) if r.model_id == "bar1"]
        assert not np.array_equal(records[0].comp_sds, records[1].comp_sds)

    def test_window_size_never_changes_emitted_dates(self, bundle):
        plan_large = small_plan(bundle, window=200, eval_days=12)
        # same evaluation range with a shorter trailing window
        plan_small = ForecastPlan(
            models=plan_large.models,
            evaluation=plan_large.evaluation,
            horizons=plan_large.horizons,
            estimation_window_days=150,
            refit_every=plan_large.refit_every,
            mcmc=plan_large.mcmc,
            master_seed=plan_large.master_seed,
            predictive_components=plan_large.predictive_components,
        )
        keys = lambda recs: [(r.model_id, r.origin_date, r.horizon, r.target_date) for r in recs]
        assert keys(run_plan(plan_small, bundle)) == keys(run_plan(plan_large, bundle))

    def test_origin_at_series_end_uses_fallback_regressors(self, bundle):
        eval_end = bundle.target.end
        plan = ForecastPlan(
            models=(("bar1", benchmark_spec("AR1")),),
            evaluation=(eval_end, eval_end),
            horizons=(1, 3),
            estimation_window_days=150,
            mcmc=McmcConfig(n_draws=400, burn_in=100),
            master_seed=3,
        )
        records = run_plan(plan, bundle)
        assert len(records) == 2
        assert all(r.error is None for r in records)
        assert all(r.realized is None for r in records)  # beyond observed data

    def test_coverage_of_90pct_interval(self):
        # pure AR(1) with phi=0.9: predictive intervals should be calibrated
        params = DgpParams(ar_coefs=(0.9,), lf_loadings=(0.0,),
                           lf_level=0.0, target_level=0.0, noise_sd=1.0)
        data = simulate_dgp(params, 2400, seed=31)
        plan = ForecastPlan(
            models=(("bar1", benchmark_spec("AR1")),),
            evaluation=(
                data.target.start + timedelta(days=320),
                data.target.start + timedelta(days=320 + 1999),
            ),
            horizons=(1,),
            estimation_window_days=300,
            refit_every=7,
            mcmc=McmcConfig(n_draws=1500, burn_in=300),
            master_seed=17,
            predictive_components=100,
        )
        records = run_plan(plan, data, jobs=2)
        inside = 0
        scored = 0
        for r in records:
            if r.realized is None:
                continue
            u = r.predictive.cdf(r.realized)
            inside += 0.05 <= u <= 0.95
            scored += 1
        assert scored == 2000
        assert 0.87 <= inside / scored <= 0.93

    def test_errored_cells_surface_not_vanish(self, bundle, monkeypatch):
        import rumidas.forecast as fc

        plan = small_plan(bundle, eval_days=14, refit=7, horizons=(1,))
        bad_anchor = plan.evaluation[0] + timedelta(days=7)
        real = fc.gibbs_arrays

        def flaky(X, y, prior, cfg, **kw):
            if cfg.seed == derive_seed(plan.master_seed, "bar1", 1, bad_anchor):
                raise NumericalError("synthetic failure")
            return real(X, y, prior, cfg, **kw)

        monkeypatch.setattr(fc, "gibbs_arrays", flaky)
        records = run_plan(plan, bundle)
        assert len(records) == 14 * 2
        errored = [r for r in records if r.error is not None]
        assert len(errored) == 7  # the whole bad refit block for bar1
        assert all("synthetic failure" in r.error for r in errored)
        assert all(r.model_id == "bar1" for r in errored)


class TestValidatePlan:
    def test_insufficient_history(self, bundle):
        eval_start = bundle.target.start + timedelta(days=50)
        plan = ForecastPlan(
            models=(("bar1", benchmark_spec("AR1")),),
            evaluation=(eval_start, eval_start + timedelta(days=5)),
            horizons=(1,),
            estimation_window_days=200,
        )
        with pytest.raises(WindowError, match="plan needs"):
            validate_plan(plan, bundle)

    def test_target_gap_named(self, bundle):
        vals = np.array(bundle.target.values)
        gap_at = 150  # inside the estimation windows of the evaluation range
        vals[gap_at] = np.nan
        gappy = SeriesBundle(DailySeries(bundle.target.start, vals), bundle.monthly, {})
        plan = small_plan(bundle, eval_days=10)
        with pytest.raises(WindowError, match="target gap at"):
            validate_plan(plan, gappy)

    def test_unknown_series_fails_fast(self, bundle):
        plan = small_plan(
            bundle,
            models=(("bad", ModelSpec(lf_terms=(LfTerm("missing"),))),),
        )
        with pytest.raises(SpecError, match="unknown monthly"):
            validate_plan(plan, bundle)

    def test_plan_invariants(self):
        with pytest.raises(SpecError, match="horizons"):
            ForecastPlan(
                models=(("m", benchmark_spec("AR1")),),
                evaluation=(date(2020, 1, 1), date(2020, 1, 5)),
                horizons=(0,),
            )
        with pytest.raises(SpecError, match="unique"):
            ForecastPlan(
                models=(("m", benchmark_spec("AR1")), ("m", benchmark_spec("AR3"))),
                evaluation=(date(2020, 1, 1), date(2020, 1, 5)),
            )


class TestAudit:
    def test_clean_run_passes(self, bundle):
        plan = small_plan(bundle, eval_days=8)
        report = audit_plan(plan, bundle)
        assert report.ok
        assert report.cells_checked == 8 * 2 * 2
        assert report.rows_checked > 0

    def test_audit_catches_lookahead(self, bundle, monkeypatch):
        import rumidas.design as dz

        real = dz._released_values

        def leaky(monthly, asof_ordinals, lag):
            # use releases up to the row date itself: one-day look-ahead
            return real(monthly, np.asarray(asof_ordinals) + 1, lag)

        monkeypatch.setattr(dz, "_released_values", leaky)
        plan = small_plan(bundle, eval_days=8)
        report = audit_plan(plan, bundle)
        assert not report.ok
        assert any("latest release before row" in v for v in report.violations)


class TestRecordIo:
    def test_roundtrip(self, bundle, tmp_path):
        plan = small_plan(bundle, eval_days=6)
        records = run_plan(plan, bundle)
        path = tmp_path / "forecasts.csv"
        write_records_csv(records, path, tmp_path / "components")
        back = read_records_csv(path)
        assert len(back) == len(records)
        for ra, rb in zip(records, back):
            assert (ra.model_id, ra.origin_date, ra.horizon) == (
                rb.model_id, rb.origin_date, rb.horizon
            )
            assert ra.mean == rb.mean and ra.realized == rb.realized
            np.testing.assert_array_equal(ra.comp_means, rb.comp_means)
            np.testing.assert_array_equal(ra.comp_sds, rb.comp_sds)

    def test_errors_csv(self, bundle, tmp_path, monkeypatch):
        import rumidas.forecast as fc

        plan = small_plan(bundle, eval_days=7, refit=7, horizons=(1,))
        monkeypatch.setattr(
            fc, "gibbs_arrays",
            lambda *a, **k: (_ for _ in ()).throw(NumericalError("boom")),
        )
        records = run_plan(plan, bundle)
        p = tmp_path / "errors.csv"
        n = write_errors_csv(records, p)
        assert n == len(records) == 14
        assert "boom" in p.read_text()


class TestSeeds:
    def test_derive_seed_is_stable_and_distinct(self):
        s1 = derive_seed(1, "model", 3, date(2020, 1, 1))
        s2 = derive_seed(1, "model", 3, date(2020, 1, 1))
        assert s1 == s2
        others = {
            derive_seed(1, "model", 4, date(2020, 1, 1)),
            derive_seed(1, "other", 3, date(2020, 1, 1)),
            derive_seed(2, "model", 3, date(2020, 1, 1)),
            derive_seed(1, "model", 3, date(2020, 1, 2)),
        }
        assert s1 not in others and len(others) == 4
