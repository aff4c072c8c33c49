"""Gibbs sampler for linear regression with an independent Normal-Gamma prior.

Coefficients gamma get a Normal prior N(m, V) and the error precision
1/sigma^2 a Gamma(a, b) prior (shape/rate throughout).  The conditionals
are conjugate:

    gamma | sigma2, data ~ N(gbar, Vbar),
        Vbar = (V^-1 + X'X / sigma2)^-1,
        gbar = Vbar (V^-1 m + X'y / sigma2)
    1/sigma2 | gamma, data ~ Gamma(a + T/2, b + 0.5 * sum (y - X gamma)^2)

The default method diagonalizes X'X against the prior precision once,
so each sweep costs O(p) plus one O(p^2) transform at the end; the
textbook per-iteration Cholesky of Vbar is kept as ``method="chol"``.
Both produce draws from the same conditionals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.special

from .design import DesignMatrix
from .errors import NumericalError, SpecError

try:  # pragma: no cover - exercised implicitly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

# Floor for pre-generated Gamma(a,1) variates: shapes below ~0.02 put real mass
# at subnormals, and b / 0.0 would overflow the retained sigma2.
_GAMMA_FLOOR = 1e-290


@dataclass(frozen=True)
class NormalGammaPrior:
    """Independent Normal prior on coefficients, Gamma prior on the precision."""

    gamma_mean: np.ndarray
    gamma_cov: np.ndarray
    a: float = 0.01
    b: float = 0.01

    def __post_init__(self) -> None:
        mean = np.asarray(self.gamma_mean, dtype=float)
        cov = np.asarray(self.gamma_cov, dtype=float)
        if mean.ndim != 1 or cov.shape != (len(mean), len(mean)):
            raise SpecError("prior mean/covariance dimensions are inconsistent")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise SpecError("gamma_cov must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise SpecError("gamma_cov must be positive definite") from exc
        if not (self.a > 0 and self.b > 0):
            raise SpecError("Gamma shape and rate must be positive")
        mean, cov = (a.copy() if a.flags.writeable else a for a in (mean, cov))
        for arr in (mean, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "gamma_mean", mean)
        object.__setattr__(self, "gamma_cov", cov)

    @classmethod
    def diffuse(cls, ncols: int, cov_scale: float = 1e6, a: float = 0.01, b: float = 0.01) -> "NormalGammaPrior":
        """Vague default: zero mean, cov_scale * I, small Gamma hyperparameters."""
        return cls(np.zeros(ncols), cov_scale * np.eye(ncols), a, b)

    def __len__(self) -> int:
        return len(self.gamma_mean)


@dataclass(frozen=True)
class McmcConfig:
    n_draws: int = 6000
    burn_in: int = 1000
    seed: int = 0
    thin: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.burn_in < self.n_draws:
            raise SpecError("burn_in must satisfy 0 <= burn_in < n_draws")
        if self.thin < 1:
            raise SpecError("thin must be >= 1")

    @property
    def n_retained(self) -> int:
        return len(range(self.burn_in, self.n_draws, self.thin))


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained coefficient and variance draws."""

    gamma: np.ndarray
    sigma2: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self) -> None:
        gamma = np.asarray(self.gamma, dtype=float)
        sigma2 = np.asarray(self.sigma2, dtype=float)
        if gamma.ndim != 2 or sigma2.shape != (gamma.shape[0],):
            raise SpecError("draw array shapes are inconsistent")
        if gamma.shape[1] != len(self.column_names):
            raise SpecError("column names do not match coefficient dimension")
        if not (sigma2 > 0).all():
            raise SpecError("all retained sigma2 draws must be positive")
        gamma, sigma2 = (a.copy() if a.flags.writeable else a for a in (gamma, sigma2))
        for arr in (gamma, sigma2):
            arr.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    def __len__(self) -> int:
        return len(self.sigma2)

    def subsample(self, n: int) -> "PosteriorDraws":
        """Evenly strided subset of retained draws (all of them when n >= len)."""
        if n >= len(self) or n < 1:
            return self
        idx = np.round(np.linspace(0, len(self) - 1, n)).astype(int)
        return PosteriorDraws(self.gamma[idx], self.sigma2[idx], self.column_names)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([*self.column_names, "sigma2"])
            for g, s2 in zip(self.gamma, self.sigma2):
                writer.writerow([repr(float(v)) for v in g] + [repr(float(s2))])

    @classmethod
    def from_csv(cls, path) -> "PosteriorDraws":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader]
        arr = np.asarray(rows)
        return cls(arr[:, :-1], arr[:, -1], tuple(header[:-1]))


@dataclass(frozen=True)
class PredictiveDensity:
    """Equal-weight Gaussian mixture over retained posterior draws."""

    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self) -> None:
        means = np.asarray(self.means, dtype=float)
        sds = np.asarray(self.sds, dtype=float)
        if means.shape != sds.shape or means.ndim != 1 or len(means) == 0:
            raise SpecError("component arrays must be equal-length 1-D and nonempty")
        if not (sds > 0).all():
            raise SpecError("component standard deviations must be positive")
        means, sds = (a.copy() if a.flags.writeable else a for a in (means, sds))
        for arr in (means, sds):
            arr.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)

    def __len__(self) -> int:
        return len(self.means)

    @property
    def mean(self) -> float:
        return float(self.means.mean())

    def logpdf(self, y: float) -> float:
        z = (y - self.means) / self.sds
        comps = -0.5 * z * z - np.log(self.sds) - 0.5 * np.log(2 * np.pi)
        return float(scipy.special.logsumexp(comps) - np.log(len(self)))

    def cdf(self, y: float) -> float:
        return float(scipy.special.ndtr((y - self.means) / self.sds).mean())

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Monte Carlo paths from the mixture."""
        comp = rng.integers(0, len(self), size=n)
        return self.means[comp] + self.sds[comp] * rng.standard_normal(n)


def _eig_sweep_loops(
    lam: np.ndarray,
    c0: np.ndarray,
    c1: np.ndarray,
    yty: float,
    Z: np.ndarray,
    gvar: np.ndarray,
    b_prior: float,
    sigma2_init: float,
    burn_in: int,
    thin: int,
    n_keep: int,
    update_gamma: bool,
    update_sigma: bool,
    w_fixed: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Gibbs sweep in the eigenbasis, O(p) per iteration (numba kernel)."""
    n_draws, p = Z.shape
    W = np.empty((n_keep, p))
    s2out = np.empty(n_keep)
    sigma2 = sigma2_init
    w = w_fixed.copy()
    ki = 0
    for it in range(n_draws):
        if update_gamma:
            inv_s2 = 1.0 / sigma2
            for j in range(p):
                d = 1.0 / (1.0 + lam[j] * inv_s2)
                w[j] = d * (c0[j] + c1[j] * inv_s2) + np.sqrt(d) * Z[it, j]
        if update_sigma:
            acc1 = 0.0
            acc2 = 0.0
            for j in range(p):
                acc1 += w[j] * c1[j]
                acc2 += lam[j] * w[j] * w[j]
            rss = yty - 2.0 * acc1 + acc2
            if rss < 0.0:
                rss = 0.0
            sigma2 = (b_prior + 0.5 * rss) / gvar[it]
        if it >= burn_in and (it - burn_in) % thin == 0:
            for j in range(p):
                W[ki, j] = w[j]
            s2out[ki] = sigma2
            ki += 1
    return W, s2out


def _eig_sweep_numpy(
    lam, c0, c1, yty, Z, gvar, b_prior, sigma2_init, burn_in, thin, n_keep,
    update_gamma, update_sigma, w_fixed,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized fallback with identical semantics (summation order may differ)."""
    n_draws, p = Z.shape
    W = np.empty((n_keep, p))
    s2out = np.empty(n_keep)
    sigma2 = sigma2_init
    w = w_fixed
    ki = 0
    for it in range(n_draws):
        if update_gamma:
            d = 1.0 / (1.0 + lam / sigma2)
            w = d * (c0 + c1 / sigma2) + np.sqrt(d) * Z[it]
        if update_sigma:
            rss = yty - 2.0 * float(w @ c1) + float((lam * w) @ w)
            sigma2 = (b_prior + 0.5 * max(rss, 0.0)) / gvar[it]
        if it >= burn_in and (it - burn_in) % thin == 0:
            W[ki] = w
            s2out[ki] = sigma2
            ki += 1
    return W, s2out


if _HAVE_NUMBA:
    _eig_sweep = numba.njit(cache=True)(_eig_sweep_loops)
else:  # pragma: no cover
    _eig_sweep = _eig_sweep_numpy


def _ols_init(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    T, p = X.shape
    if T == 0:
        return np.zeros(p), 1.0
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = T - p
    s2 = float(resid @ resid / dof) if dof > 0 else 1.0
    return coef, s2 if s2 > 0 else 1.0


def _prior_diag(prior: NormalGammaPrior) -> np.ndarray | None:
    """Diagonal of the prior covariance, or None when it has off-diagonal mass."""
    cov = prior.gamma_cov
    d = np.diag(cov)
    if np.count_nonzero(cov - np.diag(d)) == 0:
        return d
    return None


def _prior_factor(prior: NormalGammaPrior) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factor L of the prior precision and V^-1 * prior mean."""
    diag = _prior_diag(prior)
    if diag is not None:
        return np.diag(1.0 / np.sqrt(diag)), prior.gamma_mean / diag
    p = len(prior)
    cov_chol = np.linalg.cholesky(prior.gamma_cov)
    # V^-1 = L L' with L = inv(chol(V))' ; solve against identity once.
    inv_chol = scipy.linalg.solve_triangular(cov_chol, np.eye(p), lower=True, check_finite=False)
    vinv = inv_chol.T @ inv_chol
    vinv = 0.5 * (vinv + vinv.T)
    L = np.linalg.cholesky(vinv)
    r0 = vinv @ prior.gamma_mean
    return L, r0


def gibbs_arrays(
    X: np.ndarray,
    y: np.ndarray,
    prior: NormalGammaPrior,
    cfg: McmcConfig,
    *,
    method: str = "eig",
    fix_sigma2: float | None = None,
    fix_gamma: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the sampler on raw arrays; returns (gamma draws, sigma2 draws).

    ``fix_sigma2``/``fix_gamma`` freeze one block of the sweep, which
    turns the other conditional into an iid sampler (used to verify the
    conditionals in isolation).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    T, p = X.shape
    if y.shape != (T,):
        raise SpecError("X and y have inconsistent shapes")
    if len(prior) != p:
        raise SpecError(f"prior dimension {len(prior)} does not match {p} columns")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise SpecError("design must not contain missing values")
    if fix_gamma is not None:
        fix_gamma = np.asarray(fix_gamma, dtype=float)
        if fix_gamma.shape != (p,):
            raise SpecError("fix_gamma dimension mismatch")
    if fix_sigma2 is not None and fix_sigma2 <= 0:
        raise SpecError("fix_sigma2 must be positive")
    if method not in ("eig", "chol"):
        raise SpecError(f"unknown sampler method {method!r}")

    rng = np.random.default_rng(cfg.seed)
    XtX = X.T @ X
    XtX = 0.5 * (XtX + XtX.T)
    Xty = X.T @ y
    yty = float(y @ y)
    abar = prior.a + 0.5 * T

    keep = range(cfg.burn_in, cfg.n_draws, cfg.thin)
    n_keep = len(keep)
    kept_sigma2 = np.empty(n_keep)

    if method == "chol":
        gamma0, sigma2 = _ols_init(X, y)
        if fix_sigma2 is not None:
            sigma2 = float(fix_sigma2)
        kept_gamma = np.empty((n_keep, p))
        L, r0 = _prior_factor(prior)
        vinv = L @ L.T
        gamma = gamma0
        ki = 0
        for it in range(cfg.n_draws):
            if fix_gamma is None:
                A = vinv + XtX / sigma2
                A = 0.5 * (A + A.T)
                try:
                    c, low = scipy.linalg.cho_factor(A, lower=True)
                except np.linalg.LinAlgError as exc:
                    raise NumericalError(
                        f"posterior precision not SPD (cond ~ {np.linalg.cond(A):.3e})"
                    ) from exc
                gbar = scipy.linalg.cho_solve((c, low), r0 + Xty / sigma2)
                z = rng.standard_normal(p)
                gamma = gbar + scipy.linalg.solve_triangular(c.T, z, lower=False)
            else:
                gamma = fix_gamma
            if fix_sigma2 is None:
                resid = y - X @ gamma
                bbar = prior.b + 0.5 * float(resid @ resid)
                sigma2 = bbar / max(rng.gamma(abar), _GAMMA_FLOOR)
            if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
                kept_gamma[ki] = gamma
                kept_sigma2[ki] = sigma2
                ki += 1
        return kept_gamma, kept_sigma2

    # One-time diagonalization: with V^-1 = L L' and M = L^-1 X'X L^-T = Q D Q',
    # Vbar = U diag(1/(1 + d/sigma2)) U' for U = L^-T Q, and w = U^-1 gamma
    # makes both the mean update and the residual sum O(p) per sweep.
    diag = _prior_diag(prior)
    if diag is not None:
        sqrt_cov = np.sqrt(diag)
        r0 = prior.gamma_mean / diag
        M = XtX * np.outer(sqrt_cov, sqrt_cov)
        M = 0.5 * (M + M.T)
        lam, Q = scipy.linalg.eigh(M, check_finite=False)
        U = Q * sqrt_cov[:, None]
        w_transform = lambda g: Q.T @ (g / sqrt_cov)  # noqa: E731 - U^-1 @ g
    else:
        L, r0 = _prior_factor(prior)
        M = scipy.linalg.solve_triangular(L, XtX, lower=True, check_finite=False)
        M = scipy.linalg.solve_triangular(L, M.T, lower=True, check_finite=False)
        M = 0.5 * (M + M.T)
        lam, Q = scipy.linalg.eigh(M, check_finite=False)
        U = scipy.linalg.solve_triangular(L.T, Q, lower=False, check_finite=False)
        w_transform = lambda g: Q.T @ (L.T @ g)  # noqa: E731
    if lam[-1] < -1e-6 * max(1.0, abs(lam[-1])):
        raise NumericalError("eigendecomposition produced large negative eigenvalues")
    lam = np.clip(lam, 0.0, None)
    c0 = U.T @ r0
    c1 = U.T @ Xty

    if fix_sigma2 is not None:
        sigma2 = float(fix_sigma2)
    else:
        # OLS residual variance for the initial state, computed in the
        # eigenbasis: the prior scale cancels from c1^2 / lam.
        rank = lam > len(lam) * np.finfo(float).eps * max(lam[-1], 0.0)
        rss0 = yty - float((c1[rank] ** 2 / lam[rank]).sum()) if rank.any() else yty
        dof = T - int(rank.sum())
        sigma2 = rss0 / dof if (dof > 0 and rss0 > 0) else 1.0

    Z = rng.standard_normal((cfg.n_draws, p))
    if fix_sigma2 is None:
        gvar = np.maximum(rng.gamma(abar, 1.0, size=cfg.n_draws), _GAMMA_FLOOR)
    else:
        gvar = np.ones(cfg.n_draws)
    if fix_gamma is not None:
        w_fixed = w_transform(fix_gamma)
    else:
        w_fixed = np.zeros(p)
    W, kept_sigma2 = _eig_sweep(
        lam,
        c0,
        c1,
        yty,
        Z,
        gvar,
        prior.b,
        sigma2,
        cfg.burn_in,
        cfg.thin,
        n_keep,
        fix_gamma is None,
        fix_sigma2 is None,
        w_fixed,
    )
    return W @ U.T, kept_sigma2


def gibbs_sample(
    design: DesignMatrix,
    prior: NormalGammaPrior,
    cfg: McmcConfig,
    *,
    method: str = "eig",
    fix_sigma2: float | None = None,
    fix_gamma: np.ndarray | None = None,
) -> PosteriorDraws:
    """Draw from the posterior of the regression held by ``design``.

    Deterministic for fixed (design, prior, cfg, method).  With zero
    rows the retained draws reproduce the prior.
    """
    gamma, sigma2 = gibbs_arrays(
        design.X,
        design.y,
        prior,
        cfg,
        method=method,
        fix_sigma2=fix_sigma2,
        fix_gamma=fix_gamma,
    )
    return PosteriorDraws(gamma, sigma2, design.column_names)


def posterior_predictive(draws: PosteriorDraws, z_future: Sequence[float]) -> PredictiveDensity:
    """Draw-by-draw predictive for a regressor vector: one Gaussian per draw."""
    z = np.asarray(z_future, dtype=float)
    if z.shape != (draws.gamma.shape[1],):
        raise SpecError(
            f"regressor vector has length {z.shape}, expected {draws.gamma.shape[1]}"
        )
    return PredictiveDensity(draws.gamma @ z, np.sqrt(draws.sigma2))
