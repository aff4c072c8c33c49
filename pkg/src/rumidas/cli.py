"""Batch command-line front end.

Commands: ``validate`` (static config checks), ``simulate`` (write a
synthetic CSV bundle), ``forecast`` (run the sweep and score it), and
``score`` (re-score an existing forecast dump).  Exit codes: 0 success,
1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .config import (
    RunConfig,
    build_plan,
    load_bundle,
    load_config,
    validate_config,
)
from .errors import ConfigError, RumidasError
from .forecast import (
    DgpParams,
    read_records_csv,
    run_plan,
    simulate_dgp,
    write_errors_csv,
    write_records_csv,
)
from .scoring import METRICS, build_score_table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumidas",
        description="Forecast a daily series from monthly releases with "
        "Bayesian reverse-MIDAS regressions, and score competing models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="statically validate a run config")
    p_val.add_argument("config", type=Path)

    p_sim = sub.add_parser("simulate", help="write a synthetic CSV bundle")
    p_sim.add_argument("--out", type=Path, required=True, help="output directory")
    p_sim.add_argument("--days", type=int, default=1200)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--start", type=str, default="2006-01-01")
    p_sim.add_argument("--ar", type=float, nargs="+", default=[0.25])
    p_sim.add_argument("--loading", type=float, nargs="+", default=[0.8])
    p_sim.add_argument("--noise-sd", type=float, default=1.0)
    p_sim.add_argument("--lf-ar", type=float, default=0.7)
    p_sim.add_argument("--lf-noise-sd", type=float, default=2.0)

    p_fc = sub.add_parser("forecast", help="run the rolling forecast sweep")
    p_fc.add_argument("config", type=Path)
    p_fc.add_argument("--out", type=Path, default=None, help="override output directory")
    p_fc.add_argument("--seed", type=int, default=None, help="override master seed")
    p_fc.add_argument("--jobs", type=int, default=1, help="parallel workers")

    p_sc = sub.add_parser("score", help="re-score an existing forecast dump")
    p_sc.add_argument("config", type=Path)
    p_sc.add_argument("--forecasts", type=Path, required=True, help="forecast-record CSV")
    p_sc.add_argument("--out", type=Path, default=None, help="override output directory")
    return parser


def _manifest(cfg: RunConfig) -> dict:
    import numpy
    import scipy

    return {
        "config_sha256": hashlib.sha256(Path(cfg.path).read_bytes()).hexdigest(),
        "config_file": Path(cfg.path).name,
        "master_seed": cfg.seed,
        "versions": {
            "rumidas": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
    }


def _write_scores(records, cfg: RunConfig, outdir: Path, partial: list[Path]) -> None:
    table = build_score_table(
        [r for r in records if r.error is None and r.realized is not None],
        cfg.benchmark,
        cfg.scoring.alpha,
        n_boot=cfg.scoring.n_boot,
        seed=cfg.seed,
        dm_sided=cfg.scoring.dm_sided,
        dm_small_sample=cfg.scoring.dm_small_sample,
    )
    p = outdir / "scores.csv.partial"
    table.to_csv(p)
    partial.append(p)
    p = outdir / "scores.jsonl.partial"
    table.to_jsonl(p)
    partial.append(p)
    for metric in METRICS:
        p = outdir / f"scores_{metric}.md.partial"
        p.write_text(table.to_markdown(metric))
        partial.append(p)
    mcs_lines = ["metric,horizon,model,in_mcs,mcs_pvalue"]
    for c in table.cells:
        mcs_lines.append(f"{c.metric},{c.horizon},{c.model},{int(c.in_mcs)},{c.mcs_pvalue!r}")
    p = outdir / "mcs.csv.partial"
    p.write_text("\n".join(mcs_lines) + "\n")
    partial.append(p)


def _finalize(partial: list[Path]) -> None:
    for p in partial:
        p.rename(p.with_suffix(""))


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        problems = validate_config(cfg)
    except ConfigError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    if problems:
        for msg in problems:
            print(f"ERROR: {msg}", file=sys.stderr)
        return 1
    print("OK")
    return 0


def cmd_simulate(args) -> int:
    from datetime import date

    params = DgpParams(
        ar_coefs=tuple(args.ar),
        lf_loadings=tuple(args.loading),
        noise_sd=args.noise_sd,
        lf_ar=args.lf_ar,
        lf_noise_sd=args.lf_noise_sd,
    )
    bundle = simulate_dgp(params, args.days, args.seed, start=date.fromisoformat(args.start))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    from .calendars import write_daily_csv, write_monthly_csv

    write_daily_csv(outdir / "target.csv", bundle.target)
    for name, monthly in bundle.monthly.items():
        write_monthly_csv(outdir / f"{name}.csv", monthly)
    _write_starter_config(outdir, bundle, args.seed)
    print(f"wrote synthetic bundle to {outdir}")
    return 0


def _write_starter_config(outdir: Path, bundle, seed: int) -> None:
    """A runnable config pointing at the freshly written bundle."""
    target = bundle.target
    monthly_name = next(iter(bundle.monthly))
    window = min(730, max(365, len(target) // 3))
    eval_start = target.start.toordinal() + window + 7
    eval_days = max(30, (target.end.toordinal() - 28) - eval_start)
    from datetime import date

    cfg = f"""\
data:
  target: target.csv
  monthly:
    {monthly_name}: {monthly_name}.csv

plan:
  estimation_window_days: {window}
  evaluation:
    start: {date.fromordinal(eval_start).isoformat()}
    end: {date.fromordinal(eval_start + eval_days).isoformat()}
  horizons: [1, 2, 3, 7, 14, 21, 28]
  refit_every: 7

models:
  bar1:
    benchmark: AR1
  bar3:
    benchmark: AR3
  rumidas:
    hf_lags: [1, 2, 7]
    lf:
      - {{name: {monthly_name}, lags: 1}}

benchmark: bar3

mcmc:
  n_draws: 2000
  burn_in: 500

scoring:
  n_boot: 1000

seed: {seed}
output_dir: out
"""
    (outdir / "config.yaml").write_text(cfg)


def cmd_forecast(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        from dataclasses import replace

        cfg = replace(cfg, output_dir=args.out)
    problems = validate_config(cfg)
    if problems:
        for msg in problems:
            print(f"ERROR: {msg}", file=sys.stderr)
        return 1

    bundle = load_bundle(cfg)
    plan = build_plan(cfg)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    partial: list[Path] = []

    records = run_plan(plan, bundle, jobs=max(1, args.jobs))
    p = outdir / "forecasts.csv.partial"
    write_records_csv(records, p, outdir / "components")
    partial.append(p)
    p = outdir / "errors.csv.partial"
    n_err = write_errors_csv(records, p)
    partial.append(p)
    _write_scores(records, cfg, outdir, partial)
    p = outdir / "manifest.json.partial"
    p.write_text(json.dumps(_manifest(cfg), indent=2, sort_keys=True) + "\n")
    partial.append(p)
    _finalize(partial)
    print(f"wrote {len(records)} records ({n_err} errored) and score tables to {outdir}")
    return 0


def cmd_score(args) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        from dataclasses import replace

        cfg = replace(cfg, output_dir=args.out)
    try:
        records = read_records_csv(args.forecasts)
    except OSError as exc:
        raise ConfigError(f"cannot read forecast dump: {exc}") from exc
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    partial: list[Path] = []
    _write_scores(records, cfg, outdir, partial)
    _finalize(partial)
    print(f"re-scored {len(records)} records into {outdir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "simulate": cmd_simulate,
        "forecast": cmd_forecast,
        "score": cmd_score,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    except RumidasError as exc:
        print(f"RUNTIME ERROR: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
