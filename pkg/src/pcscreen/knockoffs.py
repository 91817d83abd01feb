"""Second-order Gaussian knockoffs.

Standardizes a feature submatrix to correlation scale, picks the diagonal
h-vector (equicorrelated closed form or a small SDP), assembles the joint
second-moment target

    G = [[Sigma, Sigma - diag(h)], [Sigma - diag(h), Sigma]],

and samples knockoff rows from the conditional Gaussian

    Xknock | X ~ N( (Sigma - diag(h)) Sigma^-1 x,
                    2 diag(h) - diag(h) Sigma^-1 diag(h) ),

the unique mechanism matching G exactly for Gaussian X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumn, DimensionMismatch, InfeasibleH, SolverFailure
from .kernel import as_sample_matrix

MIN_EIGENVALUE = 1e-8
FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class CovarianceEstimate:
    """Column means/scales used for standardization plus the correlation matrix.

    ``sigma`` is symmetric with unit diagonal and smallest eigenvalue at least
    1e-8 (jittered toward the identity when necessary; the blend used is
    recorded in ``jitter_applied``).
    """

    mu: np.ndarray
    sigma: np.ndarray
    scale: np.ndarray
    jitter_applied: float


@dataclass(frozen=True)
class KnockoffModel:
    """Everything needed to draw knockoffs: h, conditional factors, diagnostics."""

    cov: CovarianceEstimate
    h: np.ndarray
    construction: str
    cond_mean_factor: np.ndarray
    cond_cov_root: np.ndarray
    clip_magnitude: float
    g_lambda_min: float


def estimate_covariance(x):
    """Standardize columns to mean 0 / variance 1 and form the correlation matrix.

    Jitters toward the identity (preserving the unit diagonal) when the
    smallest eigenvalue falls below 1e-8.
    """
    xm = as_sample_matrix(x, "x")
    n, d = xm.shape
    mu = xm.mean(axis=0)
    centered = xm - mu
    sumsq = np.einsum("ij,ij->j", centered, centered)
    if np.any(sumsq <= 0.0):
        raise DegenerateColumn(f"column {int(np.argmin(sumsq))} has zero variance")
    scale = np.sqrt(sumsq / (n - 1))
    z = centered / scale
    sigma = (z.T @ z) / (n - 1)
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 1.0)
    jitter = 0.0
    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    if lam_min < MIN_EIGENVALUE:
        # (sigma + eps I)/(1 + eps) keeps the unit diagonal and lifts the
        # smallest eigenvalue to (lam + eps)/(1 + eps); eps below is the
        # smallest blend restoring the bound, nudged up if round-off bites.
        eps = (MIN_EIGENVALUE - lam_min) / (1.0 - MIN_EIGENVALUE)
        for _ in range(20):
            candidate = (sigma + eps * np.eye(d)) / (1.0 + eps)
            np.fill_diagonal(candidate, 1.0)
            if float(np.linalg.eigvalsh(candidate)[0]) >= MIN_EIGENVALUE:
                break
            eps *= 1.1
        sigma = candidate
        jitter = eps
    return CovarianceEstimate(mu=mu, sigma=sigma, scale=scale, jitter_applied=float(jitter))


def standardize(x, cov):
    """Apply the stored column standardization."""
    return (as_sample_matrix(x, "x") - cov.mu) / cov.scale


def equicorrelated_h(cov):
    """The equicorrelated diagonal: h_j = min(2 lambda_min(sigma), 1) for all j."""
    lam_min = float(np.linalg.eigvalsh(cov.sigma)[0])
    return np.full(cov.sigma.shape[0], min(2.0 * lam_min, 1.0))


def sdp_h(cov, tol=FEASIBILITY_TOL, max_iter=500):
    """Minimize sum |1 - h_j| subject to 0 <= h_j <= 1 and diag(h) <= 2 sigma.

    Log-barrier interior-point method: maximize

        sum h_j + mu [ logdet(2 sigma - diag(h)) + sum log h_j + sum log(1 - h_j) ]

    by damped Newton steps while shrinking mu toward 0, which follows the
    central path to the optimum.  The final iterate is polished by snapping
    h_j within 1e-6 of the box ends to exactly 0 or 1 when the result stays
    feasible within ``tol``, and is compared against the equicorrelated
    point, so the returned objective never exceeds the equicorrelated
    objective.

    ``max_iter`` bounds the total Newton iterations; exhausting it returns
    the best feasible iterate so far rather than failing.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    sigma = cov.sigma
    d = sigma.shape[0]
    two_sigma = 2.0 * sigma
    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    if lam_min <= 0.0:
        raise SolverFailure("2*sigma is not positive definite; no feasible h exists")

    def chol(hvec):
        try:
            return np.linalg.cholesky(two_sigma - np.diag(hvec))
        except np.linalg.LinAlgError:
            return None

    def barrier_value(hvec, factor, mu):
        logdet = 2.0 * float(np.sum(np.log(np.diag(factor))))
        return float(np.sum(hvec)) + mu * (
            logdet + float(np.sum(np.log(hvec))) + float(np.sum(np.log(1.0 - hvec)))
        )

    # strictly interior start: uniform h = lambda_min keeps 2 sigma - diag(h)
    # at smallest eigenvalue >= lambda_min > 0
    h = np.full(d, min(lam_min, 1.0 - 1e-4))
    factor = chol(h)
    if factor is None:
        raise SolverFailure("could not find a strictly feasible starting point")

    iterations = 0
    mu = 1.0
    while mu > 1e-9 and iterations < max_iter:
        for _ in range(50):
            if iterations >= max_iter:
                break
            iterations += 1
            inv = np.linalg.inv(two_sigma - np.diag(h))
            grad = 1.0 + mu * (-np.diag(inv) + 1.0 / h - 1.0 / (1.0 - h))
            curv = mu * (inv * inv + np.diag(1.0 / h**2 + 1.0 / (1.0 - h) ** 2))
            step = np.linalg.solve(curv, grad)
            decrement = float(grad @ step)
            if decrement < 1e-12:
                break
            value = barrier_value(h, factor, mu)
            t = 1.0
            while t > 1e-14:
                trial = h + t * step
                if np.all(trial > 0.0) and np.all(trial < 1.0):
                    trial_factor = chol(trial)
                    if trial_factor is not None and barrier_value(
                        trial, trial_factor, mu
                    ) > value + 0.25 * t * decrement:
                        h = trial
                        factor = trial_factor
                        break
                t *= 0.5
            else:
                break
        mu *= 0.2

    # polish: exact box values are allowed when feasibility holds within tol
    snapped = np.where(h > 1.0 - 1e-6, 1.0, np.where(h < 1e-6, 0.0, h))
    if float(np.linalg.eigvalsh(two_sigma - np.diag(snapped))[0]) >= -tol:
        h = snapped
    h_eq = equicorrelated_h(cov)
    if float(np.sum(np.abs(1.0 - h))) <= float(np.sum(np.abs(1.0 - h_eq))):
        return h
    return h_eq


def build_knockoff_model(cov, h, construction="equicorrelated"):
    """Assemble conditional-sampling factors and verify the joint target is PSD.

    The conditional mean factor is computed as I - diag(h) sigma^-1 (equal to
    (sigma - diag(h)) sigma^-1), so h = 0 yields the exact identity and a zero
    conditional covariance.  Negative conditional-covariance eigenvalues from
    round-off are clipped at 0 and the clip magnitude recorded.
    """
    sigma = cov.sigma
    d = sigma.shape[0]
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (d,):
        raise DimensionMismatch(f"h has shape {h.shape}, expected ({d},)")
    if np.any(h < -FEASIBILITY_TOL):
        raise InfeasibleH(f"h has negative entries (min {h.min():.3e})")
    h = np.maximum(h, 0.0)
    g = np.block([[sigma, sigma - np.diag(h)], [sigma - np.diag(h), sigma]])
    g_lambda_min = float(np.linalg.eigvalsh(g)[0])
    if g_lambda_min < -FEASIBILITY_TOL:
        raise InfeasibleH(f"joint covariance is not PSD: lambda_min = {g_lambda_min:.3e}")
    sigma_inv = np.linalg.inv(sigma)
    h_sigma_inv = h[:, None] * sigma_inv
    cond_mean_factor = np.eye(d) - h_sigma_inv
    v = np.diag(2.0 * h) - h_sigma_inv * h[None, :]
    v = 0.5 * (v + v.T)
    eigenvalues, vectors = np.linalg.eigh(v)
    clip = float(max(0.0, -eigenvalues[0]))
    root = vectors * np.sqrt(np.maximum(eigenvalues, 0.0))[None, :]
    return KnockoffModel(
        cov=cov,
        h=h,
        construction=str(construction),
        cond_mean_factor=cond_mean_factor,
        cond_cov_root=root,
        clip_magnitude=clip,
        g_lambda_min=g_lambda_min,
    )


def sample_knockoffs(x, model, seed):
    """Draw one knockoff row per observation row of standardized ``x``.

    Row i of the output is cond_mean_factor @ x_i + R @ z_i with z_i standard
    normal from the seeded generator; fully deterministic given (x, model,
    seed).
    """
    xm = as_sample_matrix(x, "x")
    d = model.cond_mean_factor.shape[0]
    if xm.shape[1] != d:
        raise DimensionMismatch(f"x has {xm.shape[1]} columns but the model expects {d}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(xm.shape)
    return xm @ model.cond_mean_factor.T + z @ model.cond_cov_root.T
