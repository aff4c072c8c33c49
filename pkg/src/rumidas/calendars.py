"""Daily/monthly calendars, release-date alignment, and within-block period indexing.

A monthly statistic only enters the information set on its release date
(typically the first working day of the following month), so the daily
picture of a monthly series is a right-continuous step function.  The
within-block period index drives the dummy structure of the
reverse-MIDAS regression: day 1 is the first day after a release, and
the index counts up to ``k`` (clamping there for calendar months longer
than ``k`` days).
"""

from __future__ import annotations

import bisect
import calendar as _stdcal
import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import AlignmentError, InterpolationError

ONE_DAY = timedelta(days=1)

# Offset between date.toordinal() and numpy datetime64[D] (1970-01-01).
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


def _as_readonly(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DailySeries:
    """Contiguous daily observations.

    ``values[i]`` is the observation on ``start + i`` days.  NaN marks a
    missing observation (e.g. a non-trading day, or dates before the
    first release of an aligned monthly series); infinities are rejected.
    """

    start: date
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if np.isinf(arr).any():
            raise ValueError("values must be finite (NaN marks missing)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_pairs(cls, dates: Sequence[date], values: Iterable[float]) -> "DailySeries":
        """Build from explicit dates, checking the one-day contiguity invariant."""
        dates = list(dates)
        if not dates:
            raise ValueError("empty date list")
        for prev, cur in zip(dates, dates[1:]):
            if (cur - prev).days != 1:
                raise ValueError(f"dates must be contiguous daily; gap between {prev} and {cur}")
        arr = np.asarray(list(values), dtype=float)
        if len(arr) != len(dates):
            raise ValueError("dates and values must have equal length")
        return cls(dates[0], arr)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> date:
        return self.start + timedelta(days=len(self.values) - 1)

    @property
    def dates(self) -> list[date]:
        return [self.start + timedelta(days=i) for i in range(len(self.values))]

    @property
    def ordinals(self) -> np.ndarray:
        return self.start.toordinal() + np.arange(len(self.values))

    def index_of(self, d: date) -> int:
        i = (d - self.start).days
        if not 0 <= i < len(self.values):
            raise KeyError(f"{d} outside series coverage {self.start}..{self.end}")
        return i

    def value_on(self, d: date) -> float:
        return float(self.values[self.index_of(d)])

    def covers(self, start: date, end: date) -> bool:
        return self.start <= start and end <= self.end

    def slice(self, start: date, end: date) -> "DailySeries":
        """Inclusive date-range slice; must lie inside coverage."""
        i0 = self.index_of(start)
        i1 = self.index_of(end)
        if i1 < i0:
            raise ValueError("slice end precedes start")
        return DailySeries(start, self.values[i0 : i1 + 1])

    def with_values(self, values: Iterable[float]) -> "DailySeries":
        return DailySeries(self.start, np.asarray(list(values), dtype=float))


@dataclass(frozen=True)
class MonthlyReleaseSeries:
    """Monthly observations paired with the daily date each becomes usable.

    ``release_dates[i]`` must fall strictly after the last day of
    ``months[i]``: a month's statistic is published in a later month.
    """

    months: tuple[tuple[int, int], ...]
    values: np.ndarray
    release_dates: tuple[date, ...]

    def __post_init__(self) -> None:
        months = tuple((int(y), int(m)) for y, m in self.months)
        object.__setattr__(self, "months", months)
        object.__setattr__(self, "values", _as_readonly(self.values))
        object.__setattr__(self, "release_dates", tuple(self.release_dates))
        if not (len(months) == len(self.values) == len(self.release_dates)):
            raise ValueError("months, values and release_dates must have equal length")
        if len(months) == 0:
            raise ValueError("empty monthly series")
        for (y, m) in months:
            if not 1 <= m <= 12:
                raise ValueError(f"invalid month {(y, m)}")
        for a, b in zip(months, months[1:]):
            if b <= a:
                raise ValueError("months must be strictly increasing")
        for a, b in zip(self.release_dates, self.release_dates[1:]):
            if b <= a:
                raise ValueError("release_dates must be strictly increasing")
        if not np.isfinite(self.values).all():
            raise ValueError("monthly values must be finite")
        for (y, m), rel in zip(months, self.release_dates):
            last_day = date(y, m, _stdcal.monthrange(y, m)[1])
            if rel <= last_day:
                raise ValueError(
                    f"release {rel} for month {(y, m)} must fall after {last_day}"
                )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def release_ordinals(self) -> np.ndarray:
        return np.array([d.toordinal() for d in self.release_dates], dtype=np.int64)


def first_working_day(year: int, month: int, holidays: Iterable[date] = ()) -> date:
    """First Monday-to-Friday date of the month that is not a holiday."""
    holidays = set(holidays)
    d = date(year, month, 1)
    while d.weekday() >= 5 or d in holidays:
        d += ONE_DAY
    return d


def synthesize_release_dates(
    months: Sequence[tuple[int, int]], holidays: Iterable[date] = ()
) -> tuple[date, ...]:
    """Release rule for statistics published at the start of the following month."""
    out = []
    for y, m in months:
        ny, nm = (y + 1, 1) if m == 12 else (y, m + 1)
        out.append(first_working_day(ny, nm, holidays))
    return tuple(out)


class PeriodScheme(str, Enum):
    """How the within-block day index is assigned."""

    FIXED_BLOCK = "fixed_block"
    CALENDAR_DAY = "calendar_day"


@dataclass(frozen=True)
class PeriodIndex:
    """Within-block day index in ``{1..k}``.

    ``FIXED_BLOCK`` counts days since the most recent block boundary
    strictly before the date (boundaries are release dates), clamping at
    ``k``; ``CALENDAR_DAY`` uses ``min(day_of_month, k)``.
    """

    k: int = 28
    scheme: PeriodScheme = PeriodScheme.FIXED_BLOCK
    boundaries: tuple[date, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be >= 2")
        bounds = tuple(sorted(set(self.boundaries)))
        object.__setattr__(self, "boundaries", bounds)
        if self.scheme is PeriodScheme.FIXED_BLOCK and not bounds:
            raise ValueError("FIXED_BLOCK scheme requires at least one boundary date")

    def index_of(self, d: date) -> int:
        if self.scheme is PeriodScheme.CALENDAR_DAY:
            return min(d.day, self.k)
        i = bisect.bisect_left(self.boundaries, d)
        if i == 0:
            raise ValueError(f"{d} precedes the first block boundary {self.boundaries[0]}")
        return min((d - self.boundaries[i - 1]).days, self.k)

    def indices(self, ordinals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized ``index_of`` over date ordinals.

        Returns ``(idx, valid)``; under ``FIXED_BLOCK``, dates on or
        before the first boundary are flagged invalid instead of raising.
        """
        ordinals = np.asarray(ordinals, dtype=np.int64)
        if self.scheme is PeriodScheme.CALENDAR_DAY:
            d64 = (ordinals - _EPOCH_ORDINAL).astype("datetime64[D]")
            day = (d64 - d64.astype("datetime64[M]").astype("datetime64[D]")).astype(int) + 1
            return np.minimum(day, self.k), np.ones(len(ordinals), dtype=bool)
        bord = np.array([b.toordinal() for b in self.boundaries], dtype=np.int64)
        pos = np.searchsorted(bord, ordinals, side="left") - 1
        valid = pos >= 0
        idx = np.minimum(ordinals - bord[np.clip(pos, 0, None)], self.k)
        idx[~valid] = 0
        return idx, valid


def period_index(
    d: date,
    k: int,
    scheme: PeriodScheme = PeriodScheme.FIXED_BLOCK,
    boundaries: Sequence[date] = (),
) -> int:
    """Within-block day index of ``d``; see :class:`PeriodIndex`."""
    return PeriodIndex(k=k, scheme=scheme, boundaries=tuple(boundaries)).index_of(d)


def align_monthly_to_daily(monthly: MonthlyReleaseSeries, calendar: DailySeries) -> DailySeries:
    """Daily step series holding, on each date, the most recently released value.

    Dates before the first release carry NaN.  Values become usable on
    the release date itself, never earlier, so the output never peeks
    past the information set of the day.
    """
    if len(calendar) == 0:
        raise AlignmentError("empty daily calendar")
    cal_ords = calendar.ordinals
    rel_ords = monthly.release_ordinals
    pos = np.searchsorted(rel_ords, cal_ords, side="right") - 1
    out = np.where(pos >= 0, monthly.values[np.clip(pos, 0, None)], np.nan)
    return DailySeries(calendar.start, out)


def interpolate_weekends(
    series: DailySeries,
    non_trading: Callable[[date], bool] | None = None,
) -> DailySeries:
    """Fill non-trading-day gaps by linear interpolation between observed neighbors.

    ``non_trading`` defaults to Saturday/Sunday.  A NaN on a trading
    date, a leading/trailing gap, or fewer than two observations raise
    :class:`InterpolationError` (no extrapolation is attempted).
    """
    if non_trading is None:
        non_trading = lambda d: d.weekday() >= 5  # noqa: E731
    vals = series.values
    missing = np.isnan(vals)
    if not missing.any():
        return series
    obs = np.flatnonzero(~missing)
    if len(obs) < 2:
        raise InterpolationError("need at least two observed points to interpolate")
    if missing[0] or missing[-1]:
        which = series.start if missing[0] else series.end
        raise InterpolationError(f"leading/trailing gap at {which}: refusing to extrapolate")
    for i in np.flatnonzero(missing):
        d = series.start + timedelta(days=int(i))
        if not non_trading(d):
            raise InterpolationError(f"gap at trading date {d}")
    filled = np.interp(np.arange(len(vals)), obs, vals[obs])
    return DailySeries(series.start, filled)


# ---------------------------------------------------------------------------
# CSV ingestion (schemas: daily "date,value"; monthly "year,month,value[,release_date]")
# ---------------------------------------------------------------------------


def read_daily_csv(path) -> DailySeries:
    """Read a daily CSV; missing calendar days become NaN rows.

    Dates must be ISO-8601 and strictly increasing; an empty value field
    is read as NaN.
    """
    rows: list[tuple[date, float]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames[:2]] != ["date", "value"]:
            raise ValueError(f"{path}: expected header 'date,value'")
        for rec in reader:
            d = date.fromisoformat(rec["date"].strip())
            raw = rec["value"].strip()
            rows.append((d, float(raw) if raw else float("nan")))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if b <= a:
            raise ValueError(f"{path}: dates must be strictly increasing ({a} then {b})")
    start, end = rows[0][0], rows[-1][0]
    vals = np.full((end - start).days + 1, np.nan)
    for d, v in rows:
        vals[(d - start).days] = v
    return DailySeries(start, vals)


def write_daily_csv(path, series: DailySeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for d, v in zip(series.dates, series.values):
            writer.writerow([d.isoformat(), "" if np.isnan(v) else repr(float(v))])


def read_monthly_csv(path, holidays: Iterable[date] = ()) -> MonthlyReleaseSeries:
    """Read a monthly CSV; absent release dates follow the first-working-day rule."""
    months: list[tuple[int, int]] = []
    values: list[float] = []
    releases: list[date | None] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"year", "month", "value"}
        have = {c.strip() for c in (reader.fieldnames or [])}
        if not need <= have:
            raise ValueError(f"{path}: expected header 'year,month,value[,release_date]'")
        for rec in reader:
            months.append((int(rec["year"]), int(rec["month"])))
            values.append(float(rec["value"]))
            raw = (rec.get("release_date") or "").strip()
            releases.append(date.fromisoformat(raw) if raw else None)
    if not months:
        raise ValueError(f"{path}: no data rows")
    synth = synthesize_release_dates(months, holidays)
    final = tuple(r if r is not None else s for r, s in zip(releases, synth))
    return MonthlyReleaseSeries(tuple(months), np.asarray(values), final)


def write_monthly_csv(path, monthly: MonthlyReleaseSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "month", "value", "release_date"])
        for (y, m), v, r in zip(monthly.months, monthly.values, monthly.release_dates):
            writer.writerow([y, m, repr(float(v)), r.isoformat()])
