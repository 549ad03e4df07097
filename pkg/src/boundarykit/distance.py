"""Exact distance transforms to a set of seed pixels.

``euclidean`` follows the separable lower-envelope-of-parabolas algorithm of
Felzenszwalb & Huttenlocher (columns, then rows) on squared distances.
``chebyshev`` is the two-pass chamfer sweep with unit 8-neighbour weights,
which is exact for the chessboard metric.
"""
from __future__ import annotations

import numba
import numpy as np

METRICS = ("euclidean", "chebyshev")

_FAR = 1e20


@numba.njit(cache=True)
def _envelope_1d(f, out, v, z):
    n = f.shape[0]
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d = q - v[k]
        out[q] = d * d + f[v[k]]


@numba.njit(cache=True)
def _squared_edt(seeds):
    h, w = seeds.shape
    grid = np.empty((h, w))
    for r in range(h):
        for c in range(w):
            grid[r, c] = 0.0 if seeds[r, c] else _FAR
    n = max(h, w)
    f = np.empty(n)
    out = np.empty(n)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    for c in range(w):
        for r in range(h):
            f[r] = grid[r, c]
        _envelope_1d(f[:h], out[:h], v, z)
        for r in range(h):
            grid[r, c] = out[r]
    for r in range(h):
        for c in range(w):
            f[c] = grid[r, c]
        _envelope_1d(f[:w], out[:w], v, z)
        for c in range(w):
            grid[r, c] = out[c]
    return grid


@numba.njit(cache=True)
def _chessboard(seeds):
    h, w = seeds.shape
    big = h + w + 1
    d = np.empty((h, w), dtype=np.int64)
    for r in range(h):
        for c in range(w):
            d[r, c] = 0 if seeds[r, c] else big
    for r in range(h):
        for c in range(w):
            best = d[r, c]
            if r > 0:
                best = min(best, d[r - 1, c] + 1)
                if c > 0:
                    best = min(best, d[r - 1, c - 1] + 1)
                if c + 1 < w:
                    best = min(best, d[r - 1, c + 1] + 1)
            if c > 0:
                best = min(best, d[r, c - 1] + 1)
            d[r, c] = best
    for r in range(h - 1, -1, -1):
        for c in range(w - 1, -1, -1):
            best = d[r, c]
            if r + 1 < h:
                best = min(best, d[r + 1, c] + 1)
                if c > 0:
                    best = min(best, d[r + 1, c - 1] + 1)
                if c + 1 < w:
                    best = min(best, d[r + 1, c + 1] + 1)
            if c + 1 < w:
                best = min(best, d[r, c + 1] + 1)
            d[r, c] = best
    return d


def distance_to(seeds, metric="euclidean") -> np.ndarray:
    """Distance from every pixel to the nearest ``True`` pixel of ``seeds``.

    Returns ``inf`` everywhere when there are no seeds.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.bool_)
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if not seeds.any():
        return np.full(seeds.shape, np.inf)
    if metric == "euclidean":
        return np.sqrt(_squared_edt(seeds))
    return _chessboard(seeds).astype(np.float64)
