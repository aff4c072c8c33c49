"""Regression layouts: the dummy-interacted mixed-frequency design vs AR benchmarks.

Builds both designs on simulated data and prints their column structure.
Each row of the mixed-frequency design activates exactly one column per
k-column group (the column of its block day); the benchmarks use plain
lags.
"""

import numpy as np

from rumidas import (
    DgpParams,
    LfTerm,
    ModelSpec,
    build_benchmark,
    build_rumidas,
    simulate_dgp,
)

bundle = simulate_dgp(DgpParams(), 400, seed=1)

spec = ModelSpec(hf_lags=(1, 2, 7), lf_terms=(LfTerm("macro"),), k=28)
design = build_rumidas(spec, bundle.target, bundle.monthly)
print(f"mixed-frequency design: {design.X.shape[0]} rows x {design.X.shape[1]} columns")
print("column groups:")
print("  monthly predictor :", design.column_names[0], "...", design.column_names[27])
print("  daily lag 1       :", design.column_names[28], "...", design.column_names[55])
print("  daily lag 2       :", design.column_names[56], "...", design.column_names[83])
print("  daily lag 7       :", design.column_names[84], "...", design.column_names[111])
print("  deterministic     :", ", ".join(design.column_names[112:]))

row = design.X[100]
active = np.flatnonzero(row != 0)
print(f"\nrow 100 ({design.row_dates[100]}) has {len(active)} active columns:")
for j in active:
    print(f"  {design.column_names[j]:<16} = {row[j]:.3f}")

bench = build_benchmark("AR3", bundle.target)
print(f"\nAR benchmark: {bench.X.shape[0]} rows x {bench.X.shape[1]} columns")
print("columns:", ", ".join(bench.column_names))
