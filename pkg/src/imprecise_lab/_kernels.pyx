# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_fallback.py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double _seg_dist(const double[:, ::1] pts, Py_ssize_t i,
                             const double[:, ::1] verts, Py_ssize_t s,
                             Py_ssize_t k) nogil:
    cdef double dot = 0.0, denom = 0.0, t, d, acc = 0.0
    cdef Py_ssize_t c
    for c in range(k):
        d = verts[s + 1, c] - verts[s, c]
        denom += d * d
        dot += (pts[i, c] - verts[s, c]) * d
    t = dot / denom if denom > 0 else 0.0
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    for c in range(k):
        d = pts[i, c] - verts[s, c] - t * (verts[s + 1, c] - verts[s, c])
        acc += d * d
    return sqrt(acc)


cdef inline double _poly_dist(const double[:, ::1] pts, Py_ssize_t i,
                              const double[:, ::1] verts, Py_ssize_t k) nogil:
    cdef Py_ssize_t s, c, w = verts.shape[0]
    cdef double best, d, acc
    if w == 1:
        acc = 0.0
        for c in range(k):
            d = pts[i, c] - verts[0, c]
            acc += d * d
        return sqrt(acc)
    best = 1e300
    for s in range(w - 1):
        d = _seg_dist(pts, i, verts, s, k)
        if d < best:
            best = d
    return best


def polyline_distance(points, vertices):
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] verts = np.ascontiguousarray(vertices, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0], k = pts.shape[1], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _poly_dist(pts, i, verts, k)
    return out


def fold_distances(indices, counts0, member_points, vertices):
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    counts = np.array(counts0, dtype=np.int64)
    cdef cnp.int64_t[::1] cnt = counts
    cdef const double[:, ::1] mp = np.ascontiguousarray(member_points, dtype=np.float64)
    cdef const double[:, ::1] verts = np.ascontiguousarray(vertices, dtype=np.float64)
    cdef Py_ssize_t n = idx.shape[0], m = mp.shape[0], k = mp.shape[1]
    cdef Py_ssize_t i, j, c
    cdef cnp.int64_t total = 0
    for j in range(m):
        total += cnt[j]
    avg_arr = np.empty((1, k), dtype=np.float64)
    cdef double[:, ::1] avg = avg_arr
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double acc
    with nogil:
        for i in range(n):
            cnt[idx[i]] += 1
            total += 1
            for c in range(k):
                acc = 0.0
                for j in range(m):
                    acc += cnt[j] * mp[j, c]
                avg[0, c] = acc / total
            o[i] = _poly_dist(avg, 0, verts, k)
    return out, counts


def window_extrema(values, lo):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const cnp.int64_t[::1] left = np.ascontiguousarray(lo, dtype=np.int64)
    cdef Py_ssize_t size = v.shape[0], n
    lower = np.empty(size, dtype=np.float64)
    upper = np.empty(size, dtype=np.float64)
    cdef double[::1] lw = lower
    cdef double[::1] up = upper
    qmin_arr = np.empty(size + 1, dtype=np.int64)
    qmax_arr = np.empty(size + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] qmin = qmin_arr
    cdef cnp.int64_t[::1] qmax = qmax_arr
    # ring-free deques: indices only ever move forward
    cdef Py_ssize_t hmin = 0, tmin = 0, hmax = 0, tmax = 0
    cdef double x
    cdef cnp.int64_t lft
    with nogil:
        for n in range(1, size + 1):
            x = v[n - 1]
            while tmin > hmin and v[qmin[tmin - 1] - 1] >= x:
                tmin -= 1
            qmin[tmin] = n
            tmin += 1
            while tmax > hmax and v[qmax[tmax - 1] - 1] <= x:
                tmax -= 1
            qmax[tmax] = n
            tmax += 1
            lft = left[n - 1]
            while qmin[hmin] < lft:
                hmin += 1
            while qmax[hmax] < lft:
                hmax += 1
            lw[n - 1] = v[qmin[hmin] - 1]
            up[n - 1] = v[qmax[hmax] - 1]
    return lower, upper


def categorical_draw(uniforms, members, cumulative):
    cdef const double[::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef const cnp.int64_t[::1] mem = np.ascontiguousarray(members, dtype=np.int64)
    cdef const double[:, ::1] cum = np.ascontiguousarray(cumulative, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], k = cum.shape[1], m = cum.shape[0], i, j
    last_arr = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] last = last_arr
    cdef double prev
    for i in range(m):
        prev = 0.0
        for j in range(k):
            if cum[i, j] > prev:
                last[i] = j
            prev = cum[i, j]
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef cnp.int64_t r, row
    cdef double x
    with nogil:
        for i in range(n):
            row = mem[i]
            x = u[i]
            r = 0
            for j in range(k):
                if cum[row, j] <= x:
                    r += 1
            if r >= k:
                r = last[row]
            o[i] = r
    return out
