"""Regression designs: dummy-interacted reverse-MIDAS layout and AR benchmarks.

The single-equation layout puts one coefficient per within-block day on
every low-frequency term and (optionally) on every high-frequency lag:
a row whose date falls on block day ``i`` carries its values in column
``i`` of each k-column group and structural zeros elsewhere.  Benchmarks
are the same machinery with plain (non-interacted) lags.

Column order is deterministic: low-frequency groups, high-frequency lag
groups in ascending lag, daily exogenous lags, seasonal indicators,
intercept.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Mapping, Sequence

import numpy as np

from .calendars import DailySeries, MonthlyReleaseSeries, PeriodIndex, PeriodScheme
from .errors import DesignError, SpecError

SEASON_NAMES = ("spring", "summer", "autumn", "winter")

# Meteorological seasons: Mar-May, Jun-Aug, Sep-Nov, Dec-Feb.
_SEASON_OF_MONTH = {m: 0 for m in (3, 4, 5)}
_SEASON_OF_MONTH.update({m: 1 for m in (6, 7, 8)})
_SEASON_OF_MONTH.update({m: 2 for m in (9, 10, 11)})
_SEASON_OF_MONTH.update({m: 3 for m in (12, 1, 2)})

_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


@dataclass(frozen=True)
class LfTerm:
    """A low-frequency predictor entering as dummy-interacted release lags."""

    name: str
    lags: int = 1

    def __post_init__(self) -> None:
        if self.lags < 1:
            raise SpecError(f"lf term {self.name!r}: lags must be >= 1")


@dataclass(frozen=True)
class ExogTerm:
    """A daily exogenous series entering as plain lags."""

    name: str
    lags: tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        lags = tuple(int(j) for j in self.lags)
        object.__setattr__(self, "lags", lags)
        if not lags or any(j < 1 for j in lags) or list(lags) != sorted(set(lags)):
            raise SpecError(f"exog term {self.name!r}: lags must be sorted unique positives")


@dataclass(frozen=True)
class ModelSpec:
    """Specification of one regression model."""

    hf_lags: tuple[int, ...] = (1, 2, 7)
    lf_terms: tuple[LfTerm, ...] = ()
    exog_terms: tuple[ExogTerm, ...] = ()
    seasonal_dummies: bool = True
    k: int = 28
    intercept: bool = True
    interact_hf_lags: bool = True
    period_scheme: PeriodScheme = PeriodScheme.FIXED_BLOCK

    def __post_init__(self) -> None:
        lags = tuple(int(j) for j in self.hf_lags)
        object.__setattr__(self, "hf_lags", lags)
        object.__setattr__(self, "lf_terms", tuple(self.lf_terms))
        object.__setattr__(self, "exog_terms", tuple(self.exog_terms))
        if not lags or any(j < 1 for j in lags) or list(lags) != sorted(set(lags)):
            raise SpecError("hf_lags must be a nonempty sorted set of positive integers")
        if self.k < 2:
            raise SpecError("k must be >= 2")
        names = [t.name for t in self.lf_terms] + [t.name for t in self.exog_terms]
        if len(names) != len(set(names)):
            raise SpecError("duplicate predictor names in spec")

    @property
    def max_hf_lag(self) -> int:
        lags = list(self.hf_lags)
        for t in self.exog_terms:
            lags.extend(t.lags)
        return max(lags)

    @property
    def seasonal_count(self) -> int:
        if not self.seasonal_dummies:
            return 0
        # winter is the reference season when an intercept is present
        return 3 if self.intercept else 4

    def column_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for t in self.lf_terms:
            for ell in range(1, t.lags + 1):
                names.extend(f"{t.name}_l{ell}_p{i}" for i in range(1, self.k + 1))
        for j in self.hf_lags:
            if self.interact_hf_lags:
                names.extend(f"lag{j}_p{i}" for i in range(1, self.k + 1))
            else:
                names.append(f"lag{j}")
        for t in self.exog_terms:
            names.extend(f"{t.name}_lag{j}" for j in t.lags)
        names.extend(SEASON_NAMES[: self.seasonal_count])
        if self.intercept:
            names.append("intercept")
        if len(names) != len(set(names)):
            raise SpecError("overlapping column names")
        return tuple(names)

    @property
    def n_columns(self) -> int:
        n_lf = self.k * sum(t.lags for t in self.lf_terms)
        n_hf = len(self.hf_lags) * (self.k if self.interact_hf_lags else 1)
        n_ex = sum(len(t.lags) for t in self.exog_terms)
        return n_lf + n_hf + n_ex + self.seasonal_count + (1 if self.intercept else 0)


def benchmark_spec(order: str | int, *, seasonal: bool = True, intercept: bool = True) -> ModelSpec:
    """Benchmark autoregressions: order 1 uses lag {1}; order 3 uses lags {1,2,7}."""
    key = str(order).upper().lstrip("AR") or str(order)
    if key == "1":
        lags: tuple[int, ...] = (1,)
    elif key == "3":
        lags = (1, 2, 7)
    else:
        raise SpecError(f"unknown benchmark order {order!r} (use AR1 or AR3)")
    return ModelSpec(
        hf_lags=lags,
        lf_terms=(),
        exog_terms=(),
        seasonal_dummies=seasonal,
        intercept=intercept,
        interact_hf_lags=False,
    )


@dataclass(frozen=True)
class DesignMatrix:
    """Regressand, named regressor matrix, and the date of each row."""

    y: np.ndarray
    X: np.ndarray
    column_names: tuple[str, ...]
    row_ordinals: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        ords = np.asarray(self.row_ordinals, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],) or ords.shape != (X.shape[0],):
            raise SpecError("inconsistent design shapes")
        if X.shape[1] != len(self.column_names):
            raise SpecError("column name count does not match matrix width")
        y, X, ords = (a.copy() if a.flags.writeable else a for a in (y, X, ords))
        for arr in (y, X, ords):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "row_ordinals", ords)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    def __len__(self) -> int:
        return len(self.y)

    @property
    def row_dates(self) -> list[date]:
        return [date.fromordinal(int(o)) for o in self.row_ordinals]

    @classmethod
    def from_arrays(
        cls,
        X: np.ndarray,
        y: np.ndarray,
        column_names: Sequence[str] | None = None,
        start: date = date(2000, 1, 1),
    ) -> "DesignMatrix":
        """Wrap plain arrays (synthetic designs) with consecutive row dates."""
        X = np.asarray(X, dtype=float)
        names = tuple(column_names) if column_names is not None else tuple(
            f"x{j}" for j in range(X.shape[1])
        )
        ords = start.toordinal() + np.arange(X.shape[0])
        return cls(np.asarray(y, dtype=float), X, names, ords)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "y", *self.column_names])
            for o, yv, row in zip(self.row_ordinals, self.y, self.X):
                writer.writerow(
                    [date.fromordinal(int(o)).isoformat(), repr(float(yv))]
                    + [repr(float(v)) for v in row]
                )


def _season_codes(ordinals: np.ndarray) -> np.ndarray:
    d64 = (np.asarray(ordinals, dtype=np.int64) - _EPOCH_ORDINAL).astype("datetime64[D]")
    months = d64.astype("datetime64[M]").astype(int) % 12 + 1
    lut = np.array([_SEASON_OF_MONTH[m] for m in range(1, 13)])
    return lut[months - 1]


def _boundary_dates(
    spec: ModelSpec,
    lf: Mapping[str, MonthlyReleaseSeries],
    boundaries: Sequence[date] | None,
) -> tuple[date, ...]:
    if boundaries is not None:
        return tuple(sorted(set(boundaries)))
    merged: set[date] = set()
    for term in spec.lf_terms:
        merged.update(lf[term.name].release_dates)
    return tuple(sorted(merged))


def _released_values(
    monthly: MonthlyReleaseSeries, asof_ordinals: np.ndarray, lag: int
) -> np.ndarray:
    """Value of the ``lag``-th most recent release as of each ordinal (NaN if none)."""
    pos = np.searchsorted(monthly.release_ordinals, asof_ordinals, side="right") - 1
    pos = pos - (lag - 1)
    return np.where(pos >= 0, monthly.values[np.clip(pos, 0, None)], np.nan)


def _assemble(
    spec: ModelSpec,
    x_window: np.ndarray,
    row_pos: np.ndarray,
    row_ords: np.ndarray,
    lf: Mapping[str, MonthlyReleaseSeries],
    exog_windows: Mapping[str, np.ndarray],
    bound_dates: tuple[date, ...],
) -> tuple[np.ndarray, np.ndarray]:
    """Regressor matrix for rows at ``row_ords`` plus a validity mask.

    ``x_window``/``exog_windows`` are the window-sliced value arrays and
    ``row_pos`` the row positions within them; every lagged regressor is
    taken from inside the window.  Rows use information up to the day
    before their date: lag ``j`` reads position ``row_pos - j`` and
    low-frequency terms read releases up to ``date - 1``.
    """
    n = len(row_ords)
    X = np.zeros((n, spec.n_columns))
    ok = np.ones(n, dtype=bool)

    needs_dummies = bool(spec.lf_terms) or spec.interact_hf_lags
    if needs_dummies:
        if spec.period_scheme is PeriodScheme.FIXED_BLOCK and not bound_dates:
            raise SpecError(
                "FIXED_BLOCK dummies need release boundaries: supply an lf term or boundaries"
            )
        pidx = PeriodIndex(spec.k, spec.period_scheme, bound_dates)
        idx, valid = pidx.indices(row_ords)
        ok &= valid
        col_of_row = idx - 1  # offset within each k-column group
    else:
        col_of_row = None

    rows = np.arange(n)
    off = 0
    for term in spec.lf_terms:
        vals_by_lag = [
            _released_values(lf[term.name], row_ords - 1, ell)
            for ell in range(1, term.lags + 1)
        ]
        for vals in vals_by_lag:
            ok &= np.isfinite(vals)
            X[rows, off + np.clip(col_of_row, 0, spec.k - 1)] = np.nan_to_num(vals)
            off += spec.k
    for j in spec.hf_lags:
        vals = x_window[row_pos - j]
        ok &= np.isfinite(vals)
        if spec.interact_hf_lags:
            X[rows, off + np.clip(col_of_row, 0, spec.k - 1)] = np.nan_to_num(vals)
            off += spec.k
        else:
            X[:, off] = np.nan_to_num(vals)
            off += 1
    for term in spec.exog_terms:
        ev = exog_windows[term.name]
        for j in term.lags:
            vals = ev[row_pos - j]
            ok &= np.isfinite(vals)
            X[:, off] = np.nan_to_num(vals)
            off += 1
    if spec.seasonal_count:
        codes = _season_codes(row_ords)
        for s in range(spec.seasonal_count):
            X[:, off] = codes == s
            off += 1
    if spec.intercept:
        X[:, off] = 1.0
        off += 1
    assert off == spec.n_columns
    return X, ok


def _window_slices(
    spec: ModelSpec,
    target: DailySeries,
    exog: Mapping[str, DailySeries],
    window: tuple[date, date] | None,
) -> tuple[np.ndarray, Mapping[str, np.ndarray], date, date]:
    if window is None:
        window = (target.start, target.end)
    ws, we = window
    if not target.covers(ws, we):
        raise DesignError(
            f"window {ws}..{we} outside target coverage {target.start}..{target.end}"
        )
    x_win = target.slice(ws, we).values
    exog_win: dict[str, np.ndarray] = {}
    for term in spec.exog_terms:
        if term.name not in exog:
            raise SpecError(f"spec references unknown daily series {term.name!r}")
        s = exog[term.name]
        if not s.covers(ws, we):
            raise DesignError(f"daily series {term.name!r} does not cover window {ws}..{we}")
        exog_win[term.name] = s.slice(ws, we).values
    return x_win, exog_win, ws, we


def build_rumidas(
    spec: ModelSpec,
    target: DailySeries,
    lf: Mapping[str, MonthlyReleaseSeries] | None = None,
    exog: Mapping[str, DailySeries] | None = None,
    window: tuple[date, date] | None = None,
    boundaries: Sequence[date] | None = None,
) -> DesignMatrix:
    """Build the one-step design over ``window`` (both ends inclusive).

    Rows run from ``window_start + max_lag`` to ``window_end`` so that
    every lag is drawn from inside the window; rows with any missing
    regressor (or an undefined block index) are dropped.
    """
    lf = dict(lf or {})
    exog = dict(exog or {})
    for term in spec.lf_terms:
        if term.name not in lf:
            raise SpecError(f"spec references unknown monthly series {term.name!r}")
    x_win, exog_win, ws, we = _window_slices(spec, target, exog, window)

    max_lag = spec.max_hf_lag
    n_win = len(x_win)
    if n_win <= max_lag:
        raise DesignError(f"window {ws}..{we} too short for max lag {max_lag}")
    row_pos = np.arange(max_lag, n_win)
    row_ords = ws.toordinal() + row_pos
    bound_dates = _boundary_dates(spec, lf, boundaries)

    X, ok = _assemble(spec, x_win, row_pos, row_ords, lf, exog_win, bound_dates)
    y = x_win[row_pos]
    ok &= np.isfinite(y)
    if not ok.any():
        raise DesignError(f"no usable rows in window {ws}..{we}")
    return DesignMatrix(y[ok], X[ok], spec.column_names(), row_ords[ok])


def build_benchmark(
    order: str | int,
    target: DailySeries,
    window: tuple[date, date] | None = None,
    *,
    seasonal: bool = True,
    intercept: bool = True,
) -> DesignMatrix:
    """Benchmark AR design: plain lags plus seasonal dummies."""
    return build_rumidas(
        benchmark_spec(order, seasonal=seasonal, intercept=intercept), target, window=window
    )


def regressor_row(
    spec: ModelSpec,
    at: date,
    target: DailySeries,
    lf: Mapping[str, MonthlyReleaseSeries] | None = None,
    exog: Mapping[str, DailySeries] | None = None,
    window: tuple[date, date] | None = None,
    boundaries: Sequence[date] | None = None,
) -> np.ndarray:
    """Single regressor vector for a row dated ``at`` (information up to ``at - 1``).

    ``at`` may fall one day past the end of the target series: only its
    lags must be observed.  Raises :class:`DesignError` when any required
    value is missing.
    """
    lf = dict(lf or {})
    exog = dict(exog or {})
    if window is None:
        window = (target.start, target.end)
    ws, we = window
    x_win, exog_win, ws, we = _window_slices(spec, target, exog, (ws, we))
    pos = (at - ws).days
    if not spec.max_hf_lag <= pos <= len(x_win):
        raise DesignError(f"row date {at} outside usable window {ws}..{we}")
    bound_dates = _boundary_dates(spec, lf, boundaries)
    X, ok = _assemble(
        spec,
        x_win,
        np.array([pos]),
        np.array([at.toordinal()]),
        lf,
        exog_win,
        bound_dates,
    )
    if not ok[0]:
        raise DesignError(f"missing regressor data for row dated {at}")
    return X[0]


def horizon_shift(design: DesignMatrix, h: int) -> DesignMatrix:
    """Direct-forecast design: pair each regressor row with the regressand h-1 days later.

    ``h=1`` returns the design unchanged; rows whose shifted target date
    has no row in the design are dropped, and ``row_dates`` refer to the
    forecast target date.
    """
    if h < 1:
        raise SpecError("horizon must be >= 1")
    if h == 1:
        return design
    ords = design.row_ordinals
    target_ords = ords + (h - 1)
    j = np.searchsorted(ords, target_ords)
    j_clipped = np.clip(j, 0, len(ords) - 1)
    keep = (j < len(ords)) & (ords[j_clipped] == target_ords)
    if not keep.any():
        raise DesignError(f"horizon {h} exceeds the usable sample")
    return DesignMatrix(
        design.y[j_clipped[keep]],
        design.X[keep],
        design.column_names,
        target_ords[keep],
    )
