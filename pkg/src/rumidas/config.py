"""Run configuration: YAML parsing, static validation, and materialization."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import yaml

from .bayes import McmcConfig
from .calendars import interpolate_weekends, read_daily_csv, read_monthly_csv
from .calendars import PeriodScheme
from .design import ExogTerm, LfTerm, ModelSpec, benchmark_spec
from .errors import ConfigError
from .forecast import ForecastPlan, PriorSettings, SeriesBundle

OUTPUT_DIR_ENV = "RUMIDAS_OUTPUT_DIR"


@dataclass(frozen=True)
class ScoringSettings:
    alpha: float = 0.10
    n_boot: int = 5000
    dm_sided: str = "one"
    dm_small_sample: bool = False


@dataclass(frozen=True)
class RunConfig:
    path: Path
    target_csv: Path
    monthly_csv: dict[str, Path]
    daily_csv: dict[str, Path]
    interpolate: tuple[str, ...]
    models: tuple[tuple[str, ModelSpec], ...]
    benchmark: str
    evaluation: tuple[date, date]
    horizons: tuple[int, ...]
    estimation_window_days: int
    refit_every: int
    prior: PriorSettings
    mcmc: McmcConfig
    scoring: ScoringSettings
    seed: int
    output_dir: Path
    predictive_components: int
    holidays: tuple[date, ...] = field(default=())


def _as_date(value, where: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"{where}: invalid date {value!r}") from exc


def _parse_model(name: str, raw: dict, where: str) -> ModelSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: model entry must be a mapping")
    if "benchmark" in raw:
        extra = set(raw) - {"benchmark", "seasonal_dummies", "intercept"}
        if extra:
            raise ConfigError(f"{where}: benchmark model takes no fields {sorted(extra)}")
        return benchmark_spec(
            raw["benchmark"],
            seasonal=bool(raw.get("seasonal_dummies", True)),
            intercept=bool(raw.get("intercept", True)),
        )
    known = {"hf_lags", "lf", "exog", "seasonal_dummies", "intercept", "k",
             "interact_hf_lags", "period_scheme"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{where}: unknown model fields {sorted(extra)}")
    lf_terms = tuple(
        LfTerm(str(t["name"]), int(t.get("lags", 1))) for t in raw.get("lf", [])
    )
    exog_terms = tuple(
        ExogTerm(str(t["name"]), tuple(int(j) for j in t.get("lags", [1])))
        for t in raw.get("exog", [])
    )
    try:
        scheme = PeriodScheme(raw.get("period_scheme", "fixed_block"))
    except ValueError as exc:
        raise ConfigError(f"{where}: unknown period_scheme {raw.get('period_scheme')!r}") from exc
    return ModelSpec(
        hf_lags=tuple(int(j) for j in raw.get("hf_lags", [1, 2, 7])),
        lf_terms=lf_terms,
        exog_terms=exog_terms,
        seasonal_dummies=bool(raw.get("seasonal_dummies", True)),
        k=int(raw.get("k", 28)),
        intercept=bool(raw.get("intercept", True)),
        interact_hf_lags=bool(raw.get("interact_hf_lags", True)),
        period_scheme=scheme,
    )


def load_config(path) -> RunConfig:
    """Parse and type-check a YAML run configuration."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc})") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    def section(name: str, required: bool = True) -> dict:
        sec = raw.get(name, {})
        if required and not sec:
            raise ConfigError(f"{path}: missing section {name!r}")
        if not isinstance(sec, dict):
            raise ConfigError(f"{path}: section {name!r} must be a mapping")
        return sec

    data = section("data")
    if "target" not in data:
        raise ConfigError(f"{path}: data.target is required")
    base = path.parent
    target_csv = base / str(data["target"])
    monthly_csv = {str(k): base / str(v) for k, v in (data.get("monthly") or {}).items()}
    daily_csv = {str(k): base / str(v) for k, v in (data.get("daily") or {}).items()}
    interpolate = tuple(str(s) for s in data.get("interpolate", []))
    for s in interpolate:
        if s not in daily_csv:
            raise ConfigError(f"{path}: data.interpolate names unknown daily series {s!r}")

    plan_sec = section("plan")
    if "evaluation" not in plan_sec:
        raise ConfigError(f"{path}: plan.evaluation is required")
    ev = plan_sec["evaluation"]
    evaluation = (
        _as_date(ev.get("start"), f"{path}: plan.evaluation.start"),
        _as_date(ev.get("end"), f"{path}: plan.evaluation.end"),
    )
    horizons = tuple(int(h) for h in plan_sec.get("horizons", [1, 2, 3, 7, 14, 21, 28]))
    if any(h < 1 for h in horizons) or not horizons:
        raise ConfigError(f"{path}: plan.horizons: horizons must be >= 1")

    models_sec = section("models")
    models = tuple(
        (str(name), _parse_model(str(name), m, f"{path}: models.{name}"))
        for name, m in models_sec.items()
    )
    benchmark = str(raw.get("benchmark", ""))
    if not benchmark:
        raise ConfigError(f"{path}: benchmark model name is required")
    if benchmark not in dict(models):
        raise ConfigError(f"{path}: benchmark {benchmark!r} is not a configured model")

    prior_sec = section("prior", required=False)
    prior = PriorSettings(
        mean=float(prior_sec.get("mean", 0.0)),
        cov_scale=float(prior_sec.get("cov_scale", 1e6)),
        a=float(prior_sec.get("a", 0.01)),
        b=float(prior_sec.get("b", 0.01)),
    )
    mcmc_sec = section("mcmc", required=False)
    mcmc = McmcConfig(
        n_draws=int(mcmc_sec.get("n_draws", 6000)),
        burn_in=int(mcmc_sec.get("burn_in", 1000)),
        thin=int(mcmc_sec.get("thin", 1)),
        seed=0,  # per-fit seeds derive from the master seed
    )
    scoring_sec = section("scoring", required=False)
    scoring = ScoringSettings(
        alpha=float(scoring_sec.get("alpha", 0.10)),
        n_boot=int(scoring_sec.get("n_boot", 5000)),
        dm_sided=str(scoring_sec.get("dm_sided", "one")),
        dm_small_sample=bool(scoring_sec.get("dm_small_sample", False)),
    )
    if scoring.dm_sided not in ("one", "two"):
        raise ConfigError(f"{path}: scoring.dm_sided must be 'one' or 'two'")
    if scoring.n_boot < 100:
        raise ConfigError(f"{path}: scoring.n_boot must be at least 100")

    out_default = os.environ.get(OUTPUT_DIR_ENV, "out")
    holidays = tuple(_as_date(d, f"{path}: holidays") for d in raw.get("holidays", []))
    return RunConfig(
        path=path,
        target_csv=target_csv,
        monthly_csv=monthly_csv,
        daily_csv=daily_csv,
        interpolate=interpolate,
        models=models,
        benchmark=benchmark,
        evaluation=evaluation,
        horizons=horizons,
        estimation_window_days=int(plan_sec.get("estimation_window_days", 7 * 365)),
        refit_every=int(plan_sec.get("refit_every", 1)),
        prior=prior,
        mcmc=mcmc,
        scoring=scoring,
        seed=int(raw.get("seed", 0)),
        output_dir=Path(str(raw.get("output_dir", out_default))),
        predictive_components=int(raw.get("predictive_components", 200)),
        holidays=holidays,
    )


def validate_config(cfg: RunConfig) -> list[str]:
    """Static diagnostics (schema, file existence, coverage); no sampling."""
    problems: list[str] = []
    for label, p in [("data.target", cfg.target_csv)] + [
        (f"data.monthly.{k}", v) for k, v in cfg.monthly_csv.items()
    ] + [(f"data.daily.{k}", v) for k, v in cfg.daily_csv.items()]:
        if not Path(p).is_file():
            problems.append(f"{label}: file not found: {p}")
    if problems:
        return problems

    try:
        bundle = load_bundle(cfg)
        plan = build_plan(cfg)
    except Exception as exc:  # noqa: BLE001 - every load error is a diagnostic
        return [str(exc)]

    eval_start, eval_end = cfg.evaluation
    for name, monthly in bundle.monthly.items():
        last_release = monthly.release_dates[-1]
        if last_release < eval_start:
            problems.append(
                f"data.monthly.{name}: coverage ends at release {last_release}, "
                f"before evaluation start {eval_start}"
            )
    from .forecast import validate_plan

    try:
        validate_plan(plan, bundle)
    except Exception as exc:  # noqa: BLE001
        problems.append(str(exc))
    return problems


def load_bundle(cfg: RunConfig) -> SeriesBundle:
    target = read_daily_csv(cfg.target_csv)
    monthly = {name: read_monthly_csv(p, cfg.holidays) for name, p in cfg.monthly_csv.items()}
    daily = {}
    for name, p in cfg.daily_csv.items():
        s = read_daily_csv(p)
        if name in cfg.interpolate:
            s = interpolate_weekends(s)
        daily[name] = s
    return SeriesBundle(target, monthly, daily)


def build_plan(cfg: RunConfig) -> ForecastPlan:
    return ForecastPlan(
        models=cfg.models,
        evaluation=cfg.evaluation,
        horizons=cfg.horizons,
        estimation_window_days=cfg.estimation_window_days,
        refit_every=cfg.refit_every,
        prior=cfg.prior,
        mcmc=cfg.mcmc,
        master_seed=cfg.seed,
        predictive_components=cfg.predictive_components,
    )
