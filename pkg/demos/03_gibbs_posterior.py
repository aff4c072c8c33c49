"""Gibbs sampling for the regression: posterior vs OLS, and the predictive density.

With a vague prior the posterior mean reproduces least squares; the
predictive is a mixture of one Gaussian per retained draw, which is what
the density scores (CRPS, log score) are computed from.
"""

import numpy as np

from rumidas import (
    DesignMatrix,
    McmcConfig,
    NormalGammaPrior,
    crps_mixture,
    gibbs_sample,
    log_predictive_score,
    posterior_predictive,
)

rng = np.random.default_rng(0)
T, p = 400, 5
X = rng.standard_normal((T, p))
gamma_true = np.array([1.5, -0.8, 0.0, 0.4, 2.0])
y = X @ gamma_true + 0.7 * rng.standard_normal(T)
design = DesignMatrix.from_arrays(X, y)

prior = NormalGammaPrior.diffuse(p)
draws = gibbs_sample(design, prior, McmcConfig(n_draws=6000, burn_in=1000, seed=42))

ols, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
print("coefficient   truth     OLS    posterior mean   posterior sd")
for j in range(p):
    print(
        f"x{j}          {gamma_true[j]:7.3f} {ols[j]:8.3f} {draws.gamma[:, j].mean():12.3f}"
        f" {draws.gamma[:, j].std():14.3f}"
    )
print(f"sigma2 posterior mean: {draws.sigma2.mean():.3f} (truth 0.49)")

z_new = rng.standard_normal(p)
pred = posterior_predictive(draws, z_new)
outcome = float(z_new @ gamma_true)
print(f"\npredictive at a new regressor point ({len(pred)} components):")
print(f"  mean {pred.mean:.3f}, outcome {outcome:.3f}")
print(f"  CRPS      {crps_mixture(pred, outcome):.4f}")
print(f"  log score {log_predictive_score(pred, outcome):.4f}")
