"""Independent brute-force reference computations used by the tests.

Nothing here imports the code paths it is used to check.
"""

from __future__ import annotations

import math
from itertools import groupby


def brute_nearest(qx, qy, sites):
    best, best_i = None, -1
    for i, (sx, sy) in enumerate(sites):
        dx, dy = qx - sx, qy - sy
        d = dx * dx + dy * dy
        if best is None or d < best:
            best, best_i = d, i
    return best_i


def groupby_counts(keys):
    ordered = sorted(keys)
    return {k: len(list(g)) for k, g in groupby(ordered)}


def brute_discernibility(published, k):
    """Each record is charged the size of its class; summing over records gives sum |E|^2."""
    total = 0
    for a in published:
        size = sum(1 for b in published if b[0] == a[0] and b[1] == a[1])
        if size >= k:
            total += size
    return float(total)


def brute_nue(published):
    """published: list of (aggregated_id, values, original_region)."""
    total = 0.0
    for a in published:
        same_orig = sum(1 for b in published if b[2] == a[2])
        same_agg = sum(1 for b in published if b[0] == a[0])
        total += -math.log2(same_orig / same_agg)
    return total


def brute_compactness(points, assigned_sites):
    total = 0.0
    for (px, py), (sx, sy) in zip(points, assigned_sites):
        total += math.sqrt((px - sx) ** 2 + (py - sy) ** 2)
    return total


def brute_nearest_many(queries, sites):
    """Vectorised linear scan; argmin keeps the first (lowest index) minimum."""
    import numpy as np

    q = np.asarray(queries, dtype=float)
    s = np.asarray(sites, dtype=float)
    dx = q[:, None, 0] - s[None, :, 0]
    dy = q[:, None, 1] - s[None, :, 1]
    return np.argmin(dx * dx + dy * dy, axis=1)


def brute_adc_objective(centers, points, tables):
    """alpha*|R| - |R_alpha| from scratch.

    points: region locations; tables: per-region {class key: count}.
    Empty clusters count in |R| but never at the lowest level.
    """
    groups = [dict() for _ in centers]
    for (x, y), table in zip(points, tables):
        c = brute_nearest(x, y, centers)
        for key, n in table.items():
            groups[c][key] = groups[c].get(key, 0) + n
    mins = [min(g.values()) for g in groups if g]
    alpha = min(mins)
    return alpha * len(centers) - sum(1 for m in mins if m == alpha)
