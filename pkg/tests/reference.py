"""Independent reference computations used as test oracles.

Everything here is written straight from the definitions with plain Python
scalars (``math.fsum`` accumulation) or direct simulation, and shares no code
with the package implementations it is used to check.
"""

from __future__ import annotations

import math

import numpy as np


def angle_matrix_fsum(points, r):
    """All pairwise angles seen from observation ``r``, in extended precision.

    Scalar evaluation: every dot product and squared norm is accumulated with
    ``math.fsum``.  Entries involving observation ``r`` or a zero difference
    are zero by convention, and pairs whose difference vectors are identical
    subtend an angle of exactly zero (their true cosine is exactly 1; going
    through ``acos`` would turn 1-ulp square-root rounding into ~1e-8 noise).
    """
    pts = [[float(v) for v in row] for row in points]
    n = len(pts)
    dim = len(pts[0])
    diffs = [[pts[k][i] - pts[r][i] for i in range(dim)] for k in range(n)]
    norms = [math.sqrt(math.fsum(v * v for v in d)) for d in diffs]
    out = [[0.0] * n for _ in range(n)]
    for k in range(n):
        if k == r or norms[k] == 0.0:
            continue
        for l in range(n):
            if l == r or norms[l] == 0.0 or diffs[k] == diffs[l]:
                continue
            cos = math.fsum(a * b for a, b in zip(diffs[k], diffs[l]))
            cos /= norms[k] * norms[l]
            out[k][l] = math.acos(max(-1.0, min(1.0, cos)))
    return np.array(out)


def double_center_fsum(values):
    """Per-entry four-term double centering with fsum row/column/grand means."""
    a = [[float(v) for v in row] for row in values]
    n = len(a)
    row_means = [math.fsum(row) / n for row in a]
    col_means = [math.fsum(a[k][l] for k in range(n)) / n for l in range(n)]
    grand = math.fsum(row_means) / n
    return np.array(
        [
            [a[k][l] - row_means[k] - col_means[l] + grand for l in range(n)]
            for k in range(n)
        ]
    )


def pearson_abs_fsum(x_col, y_col):
    """|sample Pearson correlation| via the covariance formula, fsum sums.

    Returns 0 when either centered sum of squares vanishes.
    """
    xs = [float(v) for v in x_col]
    ys = [float(v) for v in y_col]
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = math.fsum((a - mx) * (a - mx) for a in xs)
    syy = math.fsum((b - my) * (b - my) for b in ys)
    if sxx <= 0.0 or syy <= 0.0:
        return 0.0
    return abs(sxy) / math.sqrt(sxx * syy)


def brute_force_selection(w_values, alpha):
    """(t, selected positions, fdp estimate) by trying every candidate threshold.

    Literal enumeration of the selection rule: every distinct nonzero |w| is a
    candidate, and the winner is the smallest one whose ratio
    ``(1 + #{w <= -t}) / #{w >= t}`` is defined (positive denominator) and at
    most ``alpha``.
    """
    values = [float(v) for v in w_values]
    feasible = []
    for t in sorted({abs(v) for v in values} - {0.0}):
        pos = sum(1 for v in values if v >= t)
        neg = sum(1 for v in values if v <= -t)
        if pos > 0 and (1 + neg) / pos <= alpha:
            feasible.append(t)
    if not feasible:
        return math.inf, (), 0.0
    t = min(feasible)
    selected = tuple(j for j, v in enumerate(values) if v >= t)
    neg = sum(1 for v in values if v <= -t)
    return t, selected, neg / max(1, len(selected))


def coin_flip_feasibility(s, k_max, trials, seed):
    """Simulated per-k feasibility frequencies of the knockoff+ ratio event.

    Setting: the ``s`` active statistics are positive and ranked above every
    null, and each of the ``k_max`` null statistics carries an independent
    fair sign.  The candidate threshold sitting at the k-th largest null is
    feasible for some level below 1/s iff the ``m`` minus signs among those k
    nulls satisfy ``(1 + m) * s < s + k - m`` — the selection ratio with s+k-m
    statistics at or above the candidate and m at or below its negation,
    cross-multiplied in exact integers.  Returns frequencies ``ahat[k]`` for
    k = 0..k_max (entry 0 is 0).
    """
    rng = np.random.default_rng(seed)
    minus = rng.integers(0, 2, size=(trials, k_max))
    m = np.cumsum(minus, axis=1)
    k = np.arange(1, k_max + 1)
    feasible = (1 + m) * s < s + k[None, :] - m
    ahat = np.zeros(k_max + 1)
    ahat[1:] = feasible.mean(axis=0)
    return ahat


def chain_stop_mass(a):
    """The b-chain built from per-k feasibility values:
    ``b[k] = a[k] * max(0, 1 - a[k-1] - ... - a[1])``."""
    b = np.zeros_like(np.asarray(a, dtype=np.float64))
    partial = 0.0
    for k in range(1, b.size):
        b[k] = a[k] * max(0.0, 1.0 - partial)
        partial += a[k]
    return b


def scan_stop_frequencies(s, k_max, trials, seed):
    """Stop-by-k frequencies of the sequential threshold scan itself.

    One shared sign sequence per trial; the scan visits null candidates from
    the largest statistic downward (k ascending) and stops at the first
    feasible position.  ``out[k]`` is the fraction of trials stopped at a
    position <= k.
    """
    rng = np.random.default_rng(seed)
    minus = rng.integers(0, 2, size=(trials, k_max))
    m = np.cumsum(minus, axis=1)
    k = np.arange(1, k_max + 1)
    feasible = (1 + m) * s < s + k[None, :] - m
    stopped = np.maximum.accumulate(feasible, axis=1)
    out = np.zeros(k_max + 1)
    out[1:] = stopped.mean(axis=0)
    return out
