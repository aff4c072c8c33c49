"""Release-calendar alignment: how a monthly statistic becomes a daily series.

A monthly figure is only usable from the day it is published, typically
the first working day of the following month.  This script builds a toy
monthly series, aligns it onto a daily calendar, and shows the step
structure and the within-block period index that drives the
dummy-interacted regression.
"""

from datetime import date

import numpy as np

from rumidas import (
    DailySeries,
    MonthlyReleaseSeries,
    PeriodIndex,
    align_monthly_to_daily,
    synthesize_release_dates,
)

months = [(2018, m) for m in range(9, 13)]
values = np.array([101.3, 99.8, 102.4, 105.0])
releases = synthesize_release_dates(months, holidays=[date(2019, 1, 1)])
monthly = MonthlyReleaseSeries(tuple(months), values, releases)

print("month      value   usable from")
for (y, m), v, r in zip(monthly.months, monthly.values, monthly.release_dates):
    print(f"{y}-{m:02d}    {v:7.1f}   {r}")

calendar = DailySeries(date(2018, 12, 24), np.zeros(16))
aligned = align_monthly_to_daily(monthly, calendar)

pidx = PeriodIndex(k=28, boundaries=releases)
print("\ndate         latest released value   block day")
for d, v in zip(aligned.dates, aligned.values):
    try:
        i = pidx.index_of(d)
    except ValueError:
        i = "-"
    print(f"{d}   {v:21.1f}   {i}")

print(
    "\nNote the December figure appears on 2019-01-02 (the 1st is a holiday),"
    "\nand the block-day counter resets to 1 the day after each release."
)
