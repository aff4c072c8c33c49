"""Point and density forecast evaluation.

Covers RMSE, the exact CRPS of an equal-weight Gaussian mixture, the
log predictive score, Diebold-Mariano tests with a Bartlett long-run
variance, and the model confidence set via moving-block bootstrap with
iterative elimination of the worst performer.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.special
import scipy.stats

from .bayes import PredictiveDensity
from .errors import ConfigError, ScoreError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class LossSeries:
    """Per-date losses for one model (squared error, CRPS, or negative log score)."""

    dates: tuple[date, ...]
    losses: np.ndarray

    def __post_init__(self) -> None:
        losses = np.asarray(self.losses, dtype=float)
        dates = tuple(self.dates)
        if losses.shape != (len(dates),):
            raise ScoreError("dates and losses must have equal length")
        if not np.isfinite(losses).all():
            raise ScoreError("losses must be finite")
        losses = losses.copy() if losses.flags.writeable else losses
        losses.setflags(write=False)
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "dates", dates)

    def __len__(self) -> int:
        return len(self.losses)

    @property
    def mean(self) -> float:
        return float(self.losses.mean())


def rmse(records: Iterable) -> float:
    """Root mean squared error of predictive means against realizations."""
    errs = [
        r.mean - r.realized
        for r in records
        if r.realized is not None and r.mean is not None
    ]
    if not errs:
        raise ScoreError("no records with realized values")
    e = np.asarray(errs, dtype=float)
    return float(np.sqrt(np.mean(e * e)))


def _crps_kernel(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """E|Z| for Z ~ N(mu, var), elementwise; handles var == 0 as |mu|."""
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    out = np.abs(mu)
    pos = var > 0
    if np.any(pos):
        s = np.sqrt(var[pos])
        z = mu[pos] / s
        out = np.array(out, dtype=float)
        out[pos] = mu[pos] * (2.0 * scipy.special.ndtr(z) - 1.0) + 2.0 * s * np.exp(
            -0.5 * z * z
        ) / _SQRT_2PI
    return out


def crps_mixture(pred: PredictiveDensity, realized: float, chunk: int = 1024) -> float:
    """Exact CRPS of the equal-weight Gaussian mixture at ``realized``.

    Uses the closed form
        CRPS = mean_s E|N(y - mu_s, s_s^2)|
               - (1/2) mean_{s,s'} E|N(mu_s - mu_s', s_s^2 + s_s'^2)|,
    accumulating the pairwise term in row chunks to bound memory.
    """
    mu = pred.means
    var = pred.sds ** 2
    if not (var > 0).all():
        raise ScoreError("component variances must be positive")
    n = len(mu)
    term1 = float(_crps_kernel(realized - mu, var).mean())
    pair_sum = 0.0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        dm = mu[lo:hi, None] - mu[None, :]
        dv = var[lo:hi, None] + var[None, :]
        pair_sum += float(_crps_kernel(dm, dv).sum())
    return term1 - pair_sum / (2.0 * n * n)


def log_predictive_score(pred: PredictiveDensity, realized: float) -> float:
    """Log of the mixture density at the realization (log-sum-exp over components)."""
    return pred.logpdf(realized)


@dataclass(frozen=True)
class DmResult:
    statistic: float
    pvalue: float
    pvalue_one_sided: float
    pvalue_two_sided: float
    nobs: int


def diebold_mariano(
    loss_a: LossSeries,
    loss_b: LossSeries,
    h: int = 1,
    sided: str = "one",
    small_sample: bool = False,
) -> DmResult:
    """Test equal expected loss between two aligned loss series.

    The statistic is mean(d) / sqrt(LRV/T) for d = loss_a - loss_b with
    a Bartlett long-run variance truncated at lag h-1.  The one-sided
    p-value is the right tail: small values mean the second series has
    significantly lower loss (call with the benchmark first).
    ``small_sample`` applies the Harvey-Leybourne-Newbold correction and
    Student-t(T-1) tails.
    """
    if sided not in ("one", "two"):
        raise ScoreError("sided must be 'one' or 'two'")
    if loss_a.dates != loss_b.dates:
        raise ScoreError("loss series are not date-aligned")
    T = len(loss_a)
    if T < 10:
        raise ScoreError(f"need at least 10 aligned losses, got {T}")
    if h < 1:
        raise ScoreError("horizon must be >= 1")
    d = loss_a.losses - loss_b.losses
    dbar = float(d.mean())
    dc = d - dbar
    lrv = float(dc @ dc) / T
    for j in range(1, h):
        if j >= T:
            break
        lrv += 2.0 * (1.0 - j / h) * float(dc[j:] @ dc[:-j]) / T
    lrv = max(lrv, 0.0)

    scale = float(np.mean(np.abs(d))) or 1.0
    if lrv <= (1e-15 * scale) ** 2:
        if abs(dbar) <= 1e-15 * scale:
            stat = 0.0
        else:
            stat = math.inf if dbar > 0 else -math.inf
    else:
        stat = dbar / math.sqrt(lrv / T)
        if small_sample:
            stat *= math.sqrt((T + 1 - 2 * h + h * (h - 1) / T) / T)

    if small_sample:
        dist = scipy.stats.t(T - 1)
    else:
        dist = scipy.stats.norm()
    if math.isinf(stat):
        one = 0.0 if stat > 0 else 1.0
        two = 0.0
    else:
        one = float(dist.sf(stat))
        two = float(2.0 * dist.sf(abs(stat)))
    return DmResult(stat, one if sided == "one" else two, one, two, T)


def dm_stars(pvalue: float) -> str:
    """Significance stars at the 10/5/1 percent levels."""
    if pvalue < 0.01:
        return "***"
    if pvalue < 0.05:
        return "**"
    if pvalue < 0.10:
        return "*"
    return ""


def moving_block_indices(
    T: int, block_length: int, n_boot: int, rng: np.random.Generator
) -> np.ndarray:
    """(n_boot, T) index array of concatenated random blocks."""
    if not 1 <= block_length <= T:
        raise ScoreError(f"block length must be in [1, {T}]")
    n_blocks = -(-T // block_length)
    starts = rng.integers(0, T - block_length + 1, size=(n_boot, n_blocks))
    idx = (starts[:, :, None] + np.arange(block_length)[None, None, :]).reshape(n_boot, -1)
    return idx[:, :T]


@dataclass(frozen=True)
class McsResult:
    """Survivors, per-model MCS p-values, and the elimination trace."""

    included: tuple[str, ...]
    pvalues: dict[str, float]
    eliminated: tuple[tuple[str, float, float], ...]  # (model, statistic, step p)
    alpha: float
    block_length: int
    n_boot: int


def model_confidence_set(
    losses: Mapping[str, LossSeries],
    alpha: float = 0.10,
    *,
    block_length: int | None = None,
    n_boot: int = 5000,
    seed: int = 0,
) -> McsResult:
    """Model confidence set at level ``alpha`` with the max-t statistic.

    Relative average losses are tested against a moving-block bootstrap
    null; while the test rejects, the model with the largest t-statistic
    is eliminated.  The reported per-model p-value is the running
    maximum of the step p-values, and survivors keep the set.
    """
    if n_boot < 100:
        raise ConfigError("n_boot must be at least 100")
    names = list(losses.keys())
    if len(names) < 2:
        raise ScoreError("need at least two models")
    first = losses[names[0]]
    for nm in names[1:]:
        if losses[nm].dates != first.dates:
            raise ScoreError(f"losses of {nm!r} are not aligned with {names[0]!r}")
    L = np.column_stack([losses[nm].losses for nm in names])
    T, M = L.shape
    if block_length is None:
        block_length = max(1, math.ceil(T ** (1.0 / 3.0)))

    if np.all(L == L[:, [0]]):
        return McsResult(tuple(names), {nm: 1.0 for nm in names}, (), alpha, block_length, n_boot)

    rng = np.random.default_rng(seed)
    idx = moving_block_indices(T, block_length, n_boot, rng)
    # Bootstrap column means, chunked over replicates to bound memory.
    Lboot = np.empty((n_boot, M))
    step = max(1, int(2e7 // max(1, T * M)))
    for lo in range(0, n_boot, step):
        Lboot[lo : lo + step] = L[idx[lo : lo + step]].mean(axis=1)
    Lbar = L.mean(axis=0)

    cur = list(range(M))
    eliminated: list[tuple[str, float, float]] = []
    pvalues: dict[str, float] = {}
    running_p = 0.0
    while len(cur) > 1:
        m = len(cur)
        scalef = m / (m - 1)
        dbar = scalef * (Lbar[cur] - Lbar[cur].mean())
        dboot = scalef * (Lboot[:, cur] - Lboot[:, cur].mean(axis=1, keepdims=True))
        zeta = dboot - dbar
        sd = np.sqrt((zeta * zeta).mean(axis=0))
        safe_sd = np.where(sd > 0, sd, 1.0)
        # zero bootstrap variance: the sign of the mean decides the statistic
        degenerate = np.where(dbar > 0, np.inf, np.where(dbar < 0, -np.inf, 0.0))
        tstats = np.where(sd > 0, dbar / safe_sd, degenerate)
        tboot = np.where(sd > 0, zeta / safe_sd, -np.inf)
        worst = int(np.argmax(tstats))
        tmax = float(tstats[worst])
        tboot_max = tboot.max(axis=1)
        pval = float(np.mean(tboot_max >= tmax))
        running_p = max(running_p, pval)
        if pval < alpha:
            name = names[cur[worst]]
            pvalues[name] = running_p
            eliminated.append((name, tmax, pval))
            del cur[worst]
        else:
            break
    survivors = tuple(names[i] for i in cur)
    for nm in survivors:
        pvalues[nm] = 1.0 if len(survivors) == 1 else max(running_p, pvalues.get(nm, running_p))
    return McsResult(survivors, pvalues, tuple(eliminated), alpha, block_length, n_boot)


# ---------------------------------------------------------------------------
# Score table assembly
# ---------------------------------------------------------------------------

METRICS = ("rmse", "crps", "logscore")


def squared_error_losses(records: Sequence) -> LossSeries:
    recs = sorted(records, key=lambda r: r.target_date)
    return LossSeries(
        tuple(r.target_date for r in recs),
        np.array([(r.mean - r.realized) ** 2 for r in recs]),
    )


def crps_losses(records: Sequence) -> LossSeries:
    recs = sorted(records, key=lambda r: r.target_date)
    return LossSeries(
        tuple(r.target_date for r in recs),
        np.array([crps_mixture(r.predictive, r.realized) for r in recs]),
    )


def neg_logscore_losses(records: Sequence) -> LossSeries:
    recs = sorted(records, key=lambda r: r.target_date)
    return LossSeries(
        tuple(r.target_date for r in recs),
        np.array([-log_predictive_score(r.predictive, r.realized) for r in recs]),
    )


_LOSS_FN = {
    "rmse": squared_error_losses,
    "crps": crps_losses,
    "logscore": neg_logscore_losses,
}


@dataclass(frozen=True)
class ScoreCell:
    metric: str
    horizon: int
    model: str
    value: float  # level for the benchmark; ratio (rmse/crps) or difference (logscore) otherwise
    level: float  # the model's own average metric, always
    dm_statistic: float | None
    dm_pvalue_one_sided: float | None
    dm_pvalue_two_sided: float | None
    stars: str
    in_mcs: bool
    mcs_pvalue: float


@dataclass(frozen=True)
class ScoreTable:
    """Evaluation report: benchmark rows in levels, other models relative."""

    benchmark: str
    alpha: float
    horizons: tuple[int, ...]
    models: tuple[str, ...]
    cells: tuple[ScoreCell, ...]

    def cell(self, metric: str, horizon: int, model: str) -> ScoreCell:
        for c in self.cells:
            if (c.metric, c.horizon, c.model) == (metric, horizon, model):
                return c
        raise KeyError((metric, horizon, model))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "metric",
                    "horizon",
                    "model",
                    "value",
                    "level",
                    "dm_statistic",
                    "dm_pvalue_one_sided",
                    "dm_pvalue_two_sided",
                    "stars",
                    "in_mcs",
                    "mcs_pvalue",
                ]
            )
            for c in self.cells:
                writer.writerow(
                    [
                        c.metric,
                        c.horizon,
                        c.model,
                        repr(c.value),
                        repr(c.level),
                        "" if c.dm_statistic is None else repr(c.dm_statistic),
                        "" if c.dm_pvalue_one_sided is None else repr(c.dm_pvalue_one_sided),
                        "" if c.dm_pvalue_two_sided is None else repr(c.dm_pvalue_two_sided),
                        c.stars,
                        int(c.in_mcs),
                        repr(c.mcs_pvalue),
                    ]
                )

    @classmethod
    def from_csv(cls, path, benchmark: str, alpha: float) -> "ScoreTable":
        cells = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                cells.append(
                    ScoreCell(
                        rec["metric"],
                        int(rec["horizon"]),
                        rec["model"],
                        float(rec["value"]),
                        float(rec["level"]),
                        float(rec["dm_statistic"]) if rec["dm_statistic"] else None,
                        float(rec["dm_pvalue_one_sided"]) if rec["dm_pvalue_one_sided"] else None,
                        float(rec["dm_pvalue_two_sided"]) if rec["dm_pvalue_two_sided"] else None,
                        rec["stars"],
                        bool(int(rec["in_mcs"])),
                        float(rec["mcs_pvalue"]),
                    )
                )
        horizons = tuple(sorted({c.horizon for c in cells}))
        models = tuple(dict.fromkeys(c.model for c in cells))
        return cls(benchmark, alpha, horizons, models, tuple(cells))

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for c in self.cells:
                fh.write(json.dumps(c.__dict__, sort_keys=True, default=str) + "\n")

    def to_markdown(self, metric: str) -> str:
        """One aligned table per metric: rows are models, columns horizons."""
        header = ["model"] + [f"h={h}" for h in self.horizons]
        rows = [header]
        for m in self.models:
            row = [m if m != self.benchmark else f"{m} (benchmark, level)"]
            for h in self.horizons:
                c = self.cell(metric, h, m)
                mark = "+" if c.in_mcs else ""
                row.append(f"{c.value:.4f}{c.stars}{mark}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for i, r in enumerate(rows):
            lines.append("| " + " | ".join(v.ljust(w) for v, w in zip(r, widths)) + " |")
            if i == 0:
                lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
        return "\n".join(lines) + "\n"


def _common_records(records: Sequence, horizon: int) -> dict[str, dict[date, object]]:
    """Scorable records per model restricted to the horizon's common dates."""
    by_model: dict[str, dict[date, object]] = {}
    for r in records:
        if r.horizon != horizon:
            continue
        ok = r.error is None and r.realized is not None and r.mean is not None
        by_model.setdefault(r.model_id, {})
        if ok:
            by_model[r.model_id][r.target_date] = r
    if not by_model:
        raise ScoreError(f"no records at horizon {horizon}")
    common: set[date] | None = None
    for dates in by_model.values():
        common = set(dates) if common is None else common & set(dates)
    if not common:
        raise ScoreError(f"no common evaluation dates at horizon {horizon}")
    keep = sorted(common)
    return {m: {d: by_model[m][d] for d in keep} for m in by_model}


def build_score_table(
    records: Sequence,
    benchmark_id: str,
    alpha: float = 0.10,
    *,
    n_boot: int = 5000,
    seed: int = 0,
    dm_sided: str = "one",
    dm_small_sample: bool = False,
) -> ScoreTable:
    """Aggregate forecast records into the evaluation report.

    Per metric and horizon: the benchmark's average in levels, other
    models as RMSE/CRPS ratios or log-score differences, one-sided DM
    stars against the benchmark, and MCS membership over all models.
    """
    model_ids = tuple(dict.fromkeys(r.model_id for r in records))
    if benchmark_id not in model_ids:
        raise ConfigError(f"benchmark {benchmark_id!r} not among models {model_ids}")
    horizons = tuple(sorted({r.horizon for r in records}))
    cells: list[ScoreCell] = []
    for h in horizons:
        per_model = _common_records(records, h)
        if benchmark_id not in per_model:
            raise ConfigError(f"benchmark {benchmark_id!r} has no records at horizon {h}")
        loss_series: dict[str, dict[str, LossSeries]] = {
            metric: {m: _LOSS_FN[metric](list(per_model[m].values())) for m in per_model}
            for metric in METRICS
        }
        T = len(next(iter(loss_series["rmse"].values())))
        for metric in METRICS:
            series = loss_series[metric]
            mcs = model_confidence_set(
                series,
                alpha,
                block_length=max(h, math.ceil(T ** (1.0 / 3.0))),
                n_boot=n_boot,
                seed=_mcs_seed(seed, metric, h),
            )
            bench = series[benchmark_id]
            for m in model_ids:
                if m not in series:
                    continue
                lvl = _level(metric, series[m])
                if m == benchmark_id:
                    cells.append(
                        ScoreCell(metric, h, m, lvl, lvl, None, None, None, "",
                                  m in mcs.included, mcs.pvalues[m])
                    )
                    continue
                value = _relative(metric, lvl, _level(metric, bench))
                dm = diebold_mariano(
                    bench, series[m], h=h, sided=dm_sided, small_sample=dm_small_sample
                )
                cells.append(
                    ScoreCell(
                        metric, h, m, value, lvl,
                        dm.statistic, dm.pvalue_one_sided, dm.pvalue_two_sided,
                        dm_stars(dm.pvalue_one_sided if dm_sided == "one" else dm.pvalue_two_sided),
                        m in mcs.included, mcs.pvalues[m],
                    )
                )
    return ScoreTable(benchmark_id, alpha, horizons, model_ids, tuple(cells))


def _level(metric: str, series: LossSeries) -> float:
    if metric == "rmse":
        return float(math.sqrt(series.mean))
    if metric == "crps":
        return series.mean
    return -series.mean  # average log score (higher is better)


def _relative(metric: str, level: float, bench_level: float) -> float:
    if metric == "logscore":
        return level - bench_level
    return level / bench_level


def _mcs_seed(seed: int, metric: str, horizon: int) -> int:
    digest = hashlib.blake2b(
        f"mcs|{seed}|{metric}|{horizon}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") >> 1
