"""Pure numpy / Python implementations of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and bit-identical integer outputs; floating outputs agree to
rounding.
"""

from collections import deque

import numpy as np

_CHUNK = 1 << 18


def polyline_distance(points, vertices):
    points = np.asarray(points, dtype=float)
    vertices = np.asarray(vertices, dtype=float)
    if len(vertices) == 1:
        return np.linalg.norm(points - vertices[0], axis=1)
    best = np.full(len(points), np.inf)
    for a, b in zip(vertices[:-1], vertices[1:]):
        ab = b - a
        denom = float(ab @ ab)
        ap = points - a
        t = np.clip(ap @ ab / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(points))
        d = np.linalg.norm(ap - t[:, None] * ab, axis=1)
        np.minimum(best, d, out=best)
    return best


def fold_distances(indices, counts0, member_points, vertices):
    """Running averages after each emission and their distance to a polyline.

    ``counts0`` holds how often each member was emitted before ``indices``.
    Returns ``(distances, final_counts)``.
    """
    indices = np.asarray(indices, dtype=np.int64)
    counts = np.array(counts0, dtype=np.int64)
    pts = np.asarray(member_points, dtype=float)
    out = np.empty(indices.size)
    m = len(counts)
    for lo in range(0, indices.size, _CHUNK):
        chunk = indices[lo:lo + _CHUNK]
        onehot = np.zeros((chunk.size, m), dtype=np.int64)
        onehot[np.arange(chunk.size), chunk] = 1
        cum = np.cumsum(onehot, axis=0) + counts
        n = cum.sum(axis=1)
        avg = (cum @ pts) / n[:, None]
        out[lo:lo + chunk.size] = polyline_distance(avg, vertices)
        counts = cum[-1]
    return out, counts


def window_extrema(values, lo):
    """Min and max of ``values[j-1]`` over ``lo[n-1] <= j <= n`` for every n.

    ``lo`` must be nondecreasing with ``1 <= lo[n-1] <= n``.
    """
    values = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=np.int64)
    size = values.size
    lower = np.empty(size)
    upper = np.empty(size)
    qmin: deque = deque()
    qmax: deque = deque()
    vals = values.tolist()
    los = lo.tolist()
    for n in range(1, size + 1):
        x = vals[n - 1]
        while qmin and vals[qmin[-1] - 1] >= x:
            qmin.pop()
        qmin.append(n)
        while qmax and vals[qmax[-1] - 1] <= x:
            qmax.pop()
        qmax.append(n)
        left = los[n - 1]
        while qmin[0] < left:
            qmin.popleft()
        while qmax[0] < left:
            qmax.popleft()
        lower[n - 1] = vals[qmin[0] - 1]
        upper[n - 1] = vals[qmax[0] - 1]
    return lower, upper


def categorical_draw(uniforms, members, cumulative):
    """Inverse-CDF draw: outcome = number of cumulative weights <= u.

    ``cumulative`` is ``(len(M), k)``; rows end at (roughly) one.  A uniform
    at or beyond the last cumulative value is mapped to the last outcome with
    positive mass.
    """
    u = np.asarray(uniforms, dtype=float)
    members = np.asarray(members, dtype=np.int64)
    cum = np.asarray(cumulative, dtype=float)
    k = cum.shape[1]
    last = np.array([_last_positive(row) for row in cum], dtype=np.int64)
    out = np.empty(u.size, dtype=np.int64)
    for lo in range(0, u.size, _CHUNK):
        uu = u[lo:lo + _CHUNK]
        mm = members[lo:lo + _CHUNK]
        res = (cum[mm] <= uu[:, None]).sum(axis=1)
        over = res >= k
        res[over] = last[mm[over]]
        out[lo:lo + uu.size] = res
    return out


def _last_positive(row):
    prev = 0.0
    last = 0
    for j, c in enumerate(row):
        if c > prev:
            last = j
        prev = c
    return last
