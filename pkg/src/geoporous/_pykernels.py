"""Numpy implementations of the hot loops.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same tie-breaking; ``geoporous.kernels`` picks one at import.
All inputs are float64 arrays; distance matrices are precomputed by the caller,
so the kernels never need to know which metric produced them.
"""
from __future__ import annotations

import numpy as np


def max_pair_quotient(dx, dy, min_dist=0.0):
    """Largest ``dy[i, j] / dx[i, j]`` over ``i < j`` with ``dx[i, j] > min_dist``.

    Returns ``(value, i, j)``; ties resolve to the lexicographically smallest
    pair. With no admissible pair the result is ``(0.0, -1, -1)``.
    """
    dx = np.asarray(dx, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    n = dx.shape[0]
    if n < 2:
        return 0.0, -1, -1
    iu, ju = np.triu_indices(n, k=1)
    den = dx[iu, ju]
    ok = den > min_dist
    if not ok.any():
        return 0.0, -1, -1
    q = np.full(den.shape, -np.inf)
    q[ok] = dy[iu, ju][ok] / den[ok]
    k = int(np.argmax(q))
    return float(q[k]), int(iu[k]), int(ju[k])


def row_max_quotient(dx, dy, radius=np.inf, min_dist=0.0):
    """Per-row maximum of ``dy / dx`` over ``j != i`` with ``min_dist < dx < radius``.

    Rows without an admissible partner get ``nan``.
    """
    dx = np.asarray(dx, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    n = dx.shape[0]
    ok = (dx > min_dist) & (dx < radius)
    ok[np.arange(n), np.arange(n)] = False
    q = np.full(dx.shape, -np.inf)
    q[ok] = dy[ok] / dx[ok]
    out = q.max(axis=1) if n else np.empty(0)
    out[~ok.any(axis=1)] = np.nan
    return out


def directed_hausdorff(d):
    """``max_i min_j d[i, j]`` for a nonempty distance matrix."""
    d = np.asarray(d, dtype=np.float64)
    return float(d.min(axis=1).max())


def weighted_inf(values, weights, d):
    """``out[y, w] = min_z values[z, w] + weights[z, w] * d[z, y]``.

    ``values`` and ``weights`` are ``(n_z, m)``, ``d`` is ``(n_z, n_y)``;
    the result is ``(n_y, m)``.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    n_z, m = values.shape
    out = np.empty((d.shape[1], m))
    # chunk over y to bound the (n_z, chunk, m) temporary
    chunk = max(1, 4_000_000 // max(1, n_z * m))
    for start in range(0, d.shape[1], chunk):
        dd = d[:, start:start + chunk]
        terms = values[:, None, :] + weights[:, None, :] * dd[:, :, None]
        out[start:start + chunk] = terms.min(axis=0)
    return out
