"""Exact Euclidean distance-to-boundary fields and binned percentile profiles.

The transform uses the separable two-pass lower-envelope (parabola) algorithm,
exact on squared distances.  Distances are measured to the nearest background
pixel center, so boundary foreground pixels have distance 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ProfileError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency, but keep a fallback
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_INF = 1e18


@njit(cache=True)
def _edt_squared(fg):
    """Squared EDT of a uint8 foreground grid; background pixels are 0."""
    h, w = fg.shape
    g = np.empty((h, w), dtype=np.float64)

    # Pass 1: per-column distance (in rows) to the nearest background pixel.
    for j in range(w):
        d = _INF
        for i in range(h):
            if fg[i, j] == 0:
                d = 0.0
            elif d < _INF:
                d += 1.0
            g[i, j] = d
        d = _INF
        for i in range(h - 1, -1, -1):
            if fg[i, j] == 0:
                d = 0.0
            elif d < _INF:
                d += 1.0
            if d < g[i, j]:
                g[i, j] = d
    for i in range(h):
        for j in range(w):
            if g[i, j] < _INF:
                g[i, j] = g[i, j] * g[i, j]

    # Pass 2: per-row lower envelope of parabolas f[q] + (j - q)^2.
    out = np.empty((h, w), dtype=np.float64)
    v = np.empty(w, dtype=np.int64)
    z = np.empty(w + 1, dtype=np.float64)
    for i in range(h):
        f = g[i]
        q0 = 0
        while q0 < w and f[q0] >= _INF:
            q0 += 1
        if q0 == w:
            for j in range(w):
                out[i, j] = _INF
            continue
        k = 0
        v[0] = q0
        z[0] = -_INF
        z[1] = _INF
        for q in range(q0 + 1, w):
            if f[q] >= _INF:
                continue
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
            while s <= z[k]:
                k -= 1
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = _INF
        k = 0
        for j in range(w):
            while z[k + 1] < j:
                k += 1
            dq = j - v[k]
            out[i, j] = f[v[k]] + dq * dq
    return out


def distance_transform(mask: np.ndarray, squared: bool = False) -> np.ndarray:
    """Exact Euclidean distance to the nearest background pixel; 0 on background.

    With squared=True the integer-valued squared distances are returned
    without the square root (exact, no float rounding).  A mask with no
    background pixels yields +inf everywhere.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros(mask.shape, dtype=np.float64)
    sq = _edt_squared(mask.astype(np.uint8))
    out = sq.copy() if squared else np.sqrt(sq)
    out[sq >= _INF] = np.inf
    return out


@dataclass
class BinnedProfile:
    """Percentile-aggregated intensity vs distance, on uniform bins in [1, dmax]."""

    bin_edges: np.ndarray  # bins + 1 edges
    bin_values: np.ndarray  # NaN where a bin is empty
    counts: np.ndarray

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def used(self) -> np.ndarray:
        return self.counts > 0


def binned_percentile_profile(field: np.ndarray, img: np.ndarray, mask: np.ndarray,
                              bins: int = 95, percentile: float = 40.0,
                              exclude: np.ndarray | None = None) -> BinnedProfile:
    """Aggregate masked intensities into distance bins by percentile.

    Bin edges are uniform on [1, max(distance within mask)]; pixels flagged in
    exclude are omitted from aggregation (the edges are not affected, keeping
    bins stable across refinement iterations).
    """
    if bins < 2:
        raise ParameterError("bins must be >= 2")
    if not 0 < percentile < 100:
        raise ParameterError("percentile must be in (0, 100)")
    mask = np.asarray(mask, dtype=bool)
    sel = mask if exclude is None else (mask & ~np.asarray(exclude, dtype=bool))
    if not sel.any():
        raise ProfileError("no pixels left to aggregate after exclusion")
    dmax = float(field[mask].max())
    edges = np.linspace(1.0, max(dmax, 1.0 + 1e-9), bins + 1)
    d = field[sel]
    v = img[sel]
    idx = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    values = np.full(bins, np.nan)
    for b in np.nonzero(counts)[0]:
        values[b] = np.percentile(v[idx == b], percentile)  # linear interpolation
    return BinnedProfile(bin_edges=edges, bin_values=values, counts=counts)
