"""Forecast comparison machinery on hand-made losses.

Shows the Diebold-Mariano test (benchmark first, one-sided p-value small
when the challenger is better) and the model confidence set with its
elimination trace.
"""

from datetime import date, timedelta

import numpy as np

from rumidas import LossSeries, diebold_mariano, model_confidence_set

rng = np.random.default_rng(3)
T = 400
dates = tuple(date(2020, 1, 1) + timedelta(days=i) for i in range(T))
common = np.abs(rng.standard_normal(T)) + 1.0

losses = {
    "benchmark": LossSeries(dates, common + 0.30 + 0.1 * rng.standard_normal(T)),
    "good": LossSeries(dates, common + 0.05 + 0.1 * rng.standard_normal(T)),
    "better": LossSeries(dates, common + 0.1 * rng.standard_normal(T)),
    "awful": LossSeries(dates, common + 2.0 + 0.1 * rng.standard_normal(T)),
}

print("Diebold-Mariano against the benchmark (H1: challenger has lower loss):")
for name in ("good", "better", "awful"):
    res = diebold_mariano(losses["benchmark"], losses[name], h=1)
    print(f"  {name:<8} statistic {res.statistic:7.2f}   one-sided p {res.pvalue_one_sided:.4f}")

res = model_confidence_set(losses, alpha=0.10, n_boot=2000, seed=0)
print(f"\nmodel confidence set at 10%: {res.included}")
print("elimination trace (model, max-t statistic, step p-value):")
for name, stat, p in res.eliminated:
    print(f"  {name:<10} {stat:6.2f}   {p:.4f}")
print("MCS p-values:", {k: round(v, 4) for k, v in res.pvalues.items()})
