"""Centered-angle kernel for squared sample projection covariance/correlation.

For samples ``X = (x_1, ..., x_n)^T`` and ``Y = (y_1, ..., y_n)^T`` the
statistic is assembled from per-observation "angle slices": slice ``r`` holds

    a_klr = arccos( <x_k - x_r, x_l - x_r> / (|x_k - x_r| |x_l - x_r|) ),

with ``a_klr = 0`` whenever ``k = r``, ``l = r``, or either difference is the
zero vector.  Each slice is double-centered,

    A_klr = a_klr - abar_{k.r} - abar_{.lr} + abar_{..r},

and the accumulated sums

    s_xy = n^-3 sum_{k,l,r} A_klr B_klr,   s_xx = n^-3 sum A^2,
    s_yy = n^-3 sum B^2,

yield the squared sample projection correlation ``s_xy / sqrt(s_xx s_yy)``.

Two evaluation strategies are used, chosen by column counts only — never by
whether a response cache happens to be supplied — so cached and uncached calls
return bitwise-identical results:

* one-dimensional samples: with ``s_k = sign(x_k - x_r)`` and ``u = |s|`` the
  angle slice is exactly ``pi/2 (u u^T - s s^T)``, so every centered slice has
  rank <= 2 and all three sums collapse to dot products of centered sign
  factors (O(n^2) total per pair, no arccos);
* multi-dimensional samples: slices are materialized one ``r`` at a time
  (O(n^2) working memory) and contracted directly.

Per-slice contributions are gathered into an array indexed by ``r`` and reduced
with a single ``np.sum``, fixing the accumulation order for run-to-run
reproducibility.  Cross terms combine in the role-symmetric order
``(uu + ss) - (us + su)`` so that the X/Y symmetry of the formula also holds
bitwise.

``naive_pcov_stats`` at the bottom is a deliberately literal translation of the
formulas (materialize every angle, every mean, every centered value, then sum
in scalar loops) and shares no code with the fast paths above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InputTooLarge

DEFAULT_MEMORY_BUDGET = 256 * 1024 * 1024

_HALF_PI = math.pi / 2.0


def as_sample_matrix(data, name="sample"):
    """Validate and return an n x m float64 observation matrix.

    One-dimensional input is treated as a single column.  Rows are
    observations, columns are variables.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 1- or 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] < 2:
        raise DimensionMismatch(f"{name} needs at least 2 observations, got {arr.shape[0]}")
    if arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} needs at least 1 column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class PcStats:
    """The three accumulated slice sums, already scaled by n^-3."""

    s_xy: float
    s_xx: float
    s_yy: float
    n: int


@dataclass(frozen=True)
class ResponseCache:
    """Precomputed response-side quantities shared across feature evaluations.

    ``slices`` holds all n centered response slices when the 8*n^3-byte tensor
    fits the budget, otherwise ``None`` (slices are then recomputed per call).
    ``sign_factors`` is the compact (stilde, utilde) rank-2 representation,
    kept whenever the response is univariate.  ``self_sum`` is the raw
    sum-of-squares of the centered response slices (not yet scaled by n^-3).
    All fields are byproducts of the exact code paths an uncached call runs,
    so supplying a cache never changes any result bit.
    """

    n: int
    q: int
    memory_budget_bytes: int
    slices: tuple[np.ndarray, ...] | None
    sign_factors: tuple[np.ndarray, np.ndarray] | None
    self_sum: float

    @property
    def materialized(self):
        return self.slices is not None


def angle_slice(points, r):
    """Angle matrix of all observation pairs as seen from observation ``r``.

    Entry (k, l) is the angle at vertex x_r spanned by x_k - x_r and
    x_l - x_r.  Entries in row/column r, and rows/columns of any observation
    coinciding with x_r, are zero.
    """
    x = as_sample_matrix(points, "points")
    n = x.shape[0]
    if not 0 <= r < n:
        raise IndexError(f"slice index {r} outside 0..{n - 1}")
    return _angle_slice_raw(x, r)


def _angle_slice_raw(x, r):
    diff = x - x[r]
    norms = np.sqrt(np.einsum("im,im->i", diff, diff))
    cos = diff @ diff.T
    denom = np.outer(norms, norms)
    np.divide(cos, denom, out=cos, where=denom > 0.0)
    np.clip(cos, -1.0, 1.0, out=cos)
    angles = np.arccos(cos)
    # Coincident difference vectors (k = l, or exact duplicate points) span
    # an angle of exactly 0; going through arccos instead would amplify 1-ulp
    # rounding of the norms into ~1e-8 noise.
    same = np.all(diff[:, None, :] == diff[None, :, :], axis=2)
    angles[same] = 0.0
    degenerate = norms == 0.0
    angles[degenerate, :] = 0.0
    angles[:, degenerate] = 0.0
    return angles


def center_slice(slice_values):
    """Double-center an angle slice.

    Subtracts row and column means and adds back the grand mean; all means
    divide by the full n (forced zeros included), matching the definition.
    """
    a = np.asarray(slice_values, dtype=np.float64)
    return a - a.mean(axis=1, keepdims=True) - a.mean(axis=0, keepdims=True) + a.mean()


# ---------------------------------------------------------------------------
# univariate fast path: centered rank-2 slice factors
#
# For a 1-D sample the angle between scalar differences is 0 (same sign), pi
# (opposite signs) or forced 0 (a zero difference), which is exactly
# pi/2 (u_k u_l - s_k s_l).  Double-centering an outer product v w^T gives
# vtilde wtilde^T, hence A_r = pi/2 (utilde utilde^T - stilde stilde^T).
# ---------------------------------------------------------------------------


def _centered_sign_factors(col):
    """Centered rank-2 factors of every angle slice of a univariate sample.

    Returns (stilde, utilde); row r of each holds the centered factors of
    slice r, i.e. A_r = pi/2 (utilde_r utilde_r^T - stilde_r stilde_r^T).
    """
    s = np.sign(col[None, :] - col[:, None])
    u = np.abs(s)
    s -= s.mean(axis=1, keepdims=True)
    u -= u.mean(axis=1, keepdims=True)
    return s, u


def _factor_self_sum(s, u):
    """sum_r sum_kl A_r^2 for rank-2 centered slices."""
    uu = np.einsum("rk,rk->r", u, u)
    us = np.einsum("rk,rk->r", u, s)
    ss = np.einsum("rk,rk->r", s, s)
    per_slice = (uu * uu + ss * ss) - 2.0 * (us * us)
    return _HALF_PI * _HALF_PI * float(per_slice.sum())


def _factor_cross_sum(sx, ux, sy, uy):
    """sum_r sum_kl A_r B_r for two rank-2 centered slice families."""
    uu = np.einsum("rk,rk->r", ux, uy)
    us = np.einsum("rk,rk->r", ux, sy)
    su = np.einsum("rk,rk->r", sx, uy)
    ss = np.einsum("rk,rk->r", sx, sy)
    per_slice = (uu * uu + ss * ss) - (us * us + su * su)
    return _HALF_PI * _HALF_PI * float(per_slice.sum())


def _factor_slice_cross_sum(s, u, other, n):
    """sum_r sum_kl A_r M_r with A_r rank-2 and M_r = other(r) a full slice."""
    parts = np.empty(n)
    for r in range(n):
        m = other(r)
        parts[r] = np.einsum("k,kl,l->", u[r], m, u[r]) - np.einsum("k,kl,l->", s[r], m, s[r])
    return _HALF_PI * float(parts.sum())


def _slice_self_sum(provider, n):
    parts = np.empty(n)
    for r in range(n):
        b = provider(r)
        parts[r] = np.einsum("kl,kl->", b, b)
    return float(parts.sum())


def _slice_cross_sum(provider_a, provider_b, n):
    parts = np.empty(n)
    for r in range(n):
        parts[r] = np.einsum("kl,kl->", provider_a(r), provider_b(r))
    return float(parts.sum())


def _slice_provider(sample, cached_slices):
    if cached_slices is not None:
        return lambda r: cached_slices[r]
    return lambda r: center_slice(_angle_slice_raw(sample, r))


def build_response_cache(y, memory_budget_bytes=DEFAULT_MEMORY_BUDGET):
    """Precompute response-side slice data for repeated pcov_stats calls.

    The full centered-slice tensor (8*n^3 bytes) is materialized iff it fits
    the budget; otherwise slices are recomputed per call.  For univariate
    responses the compact sign-factor representation is always kept.
    """
    ym = as_sample_matrix(y, "y")
    n, q = ym.shape
    slices = None
    if 8 * n**3 <= memory_budget_bytes:
        slices = tuple(center_slice(_angle_slice_raw(ym, r)) for r in range(n))
    factors = None
    if q == 1:
        factors = _centered_sign_factors(ym[:, 0])
        self_sum = _factor_self_sum(*factors)
    else:
        self_sum = _slice_self_sum(_slice_provider(ym, slices), n)
    return ResponseCache(
        n=n,
        q=q,
        memory_budget_bytes=int(memory_budget_bytes),
        slices=slices,
        sign_factors=factors,
        self_sum=self_sum,
    )


def pcov_stats(x, y, cache=None):
    """Accumulated centered-slice sums between two sample matrices.

    Parameters
    ----------
    x, y : array-like, shape (n, m) and (n, q)
        Observation matrices with a shared row count.
    cache : ResponseCache, optional
        Precomputed response-side data from :func:`build_response_cache`.
        Results are bitwise identical with and without it.

    Returns
    -------
    PcStats with s_xy, s_xx, s_yy already scaled by n^-3.
    """
    xm = as_sample_matrix(x, "x")
    ym = as_sample_matrix(y, "y")
    n = xm.shape[0]
    if ym.shape[0] != n:
        raise DimensionMismatch(f"x has {n} observations but y has {ym.shape[0]}")
    if cache is not None and (cache.n != n or cache.q != ym.shape[1]):
        raise DimensionMismatch("cache was built for a different response matrix shape")

    y_factors = cache.sign_factors if cache is not None else None
    y_slices = cache.slices if cache is not None else None
    raw_yy = cache.self_sum if cache is not None else None
    if ym.shape[1] == 1 and y_factors is None:
        y_factors = _centered_sign_factors(ym[:, 0])

    if xm.shape[1] == 1:
        sx, ux = _centered_sign_factors(xm[:, 0])
        raw_xx = _factor_self_sum(sx, ux)
        if ym.shape[1] == 1:
            sy, uy = y_factors
            raw_xy = _factor_cross_sum(sx, ux, sy, uy)
            if raw_yy is None:
                raw_yy = _factor_self_sum(sy, uy)
        else:
            provider = _slice_provider(ym, y_slices)
            raw_xy = _factor_slice_cross_sum(sx, ux, provider, n)
            if raw_yy is None:
                raw_yy = _slice_self_sum(provider, n)
    else:
        x_provider = _slice_provider(xm, None)
        raw_xx = _slice_self_sum(x_provider, n)
        if ym.shape[1] == 1:
            sy, uy = y_factors
            raw_xy = _factor_slice_cross_sum(sy, uy, x_provider, n)
            if raw_yy is None:
                raw_yy = _factor_self_sum(sy, uy)
        else:
            y_provider = _slice_provider(ym, y_slices)
            raw_xy = _slice_cross_sum(x_provider, y_provider, n)
            if raw_yy is None:
                raw_yy = _slice_self_sum(y_provider, n)

    scale = float(n) ** 3
    return PcStats(s_xy=raw_xy / scale, s_xx=raw_xx / scale, s_yy=raw_yy / scale, n=n)


def projection_correlation_sq(x, y, cache=None):
    """Squared sample projection correlation between two sample matrices.

    Returns ``s_xy / sqrt(s_xx * s_yy)``, with 0 when the denominator
    vanishes (the 0/0 = 0 convention for degenerate samples).  The value is
    not clamped below zero: downstream statistics difference two of these and
    clamping would bias signs.  Equal inputs short-circuit to exactly 1.0,
    the correctly-rounded value of the exact ratio.
    """
    xm = as_sample_matrix(x, "x")
    ym = as_sample_matrix(y, "y")
    if xm.shape[0] != ym.shape[0]:
        raise DimensionMismatch(f"x has {xm.shape[0]} observations but y has {ym.shape[0]}")
    stats = pcov_stats(xm, ym, cache)
    denom_sq = stats.s_xx * stats.s_yy
    if denom_sq <= 0.0:
        return 0.0
    if xm.shape == ym.shape and np.array_equal(xm, ym):
        return 1.0
    return stats.s_xy / math.sqrt(denom_sq)


# ---------------------------------------------------------------------------
# naive reference implementation (shares no code with the fast paths)
# ---------------------------------------------------------------------------


def naive_pcov_stats(x, y):
    """Reference statistics by the most literal translation of the formulas.

    Materializes every angle a_klr, every row/column/grand mean and every
    centered value in nested lists, then sums with scalar loops.  Guarded to
    n <= 64; use only as a test oracle.
    """
    xm = as_sample_matrix(x, "x")
    ym = as_sample_matrix(y, "y")
    n = xm.shape[0]
    if ym.shape[0] != n:
        raise DimensionMismatch(f"x has {n} observations but y has {ym.shape[0]}")
    if n > 64:
        raise InputTooLarge(f"naive reference limited to n <= 64, got {n}")
    a = _naive_centered_slices(xm)
    b = _naive_centered_slices(ym)
    s_xy = 0.0
    s_xx = 0.0
    s_yy = 0.0
    for r in range(n):
        for k in range(n):
            for l in range(n):
                s_xy += a[r][k][l] * b[r][k][l]
                s_xx += a[r][k][l] * a[r][k][l]
                s_yy += b[r][k][l] * b[r][k][l]
    n3 = float(n * n * n)
    return PcStats(s_xy=s_xy / n3, s_xx=s_xx / n3, s_yy=s_yy / n3, n=n)


def _naive_centered_slices(m):
    rows = [tuple(float(v) for v in row) for row in m]
    n = len(rows)
    dim = len(rows[0])
    centered = []
    for r in range(n):
        raw = [[0.0] * n for _ in range(n)]
        for k in range(n):
            if k == r:
                continue
            dk = [rows[k][i] - rows[r][i] for i in range(dim)]
            nk = math.sqrt(sum(v * v for v in dk))
            if nk == 0.0:
                continue
            for l in range(n):
                if l == r:
                    continue
                dl = [rows[l][i] - rows[r][i] for i in range(dim)]
                nl = math.sqrt(sum(v * v for v in dl))
                if nl == 0.0:
                    continue
                if dl == dk:
                    continue  # identical difference vectors: angle exactly 0
                cos = sum(dk[i] * dl[i] for i in range(dim)) / (nk * nl)
                raw[k][l] = math.acos(min(1.0, max(-1.0, cos)))
        row_mean = [sum(raw[k][l] for l in range(n)) / n for k in range(n)]
        col_mean = [sum(raw[k][l] for k in range(n)) / n for l in range(n)]
        grand = sum(row_mean) / n
        centered.append(
            [
                [raw[k][l] - row_mean[k] - col_mean[l] + grand for l in range(n)]
                for k in range(n)
            ]
        )
    return centered
