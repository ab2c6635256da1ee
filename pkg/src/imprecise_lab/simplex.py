"""Geometry and algebra on the probability simplex.

Measures are points of the simplex (length-``k`` nonnegative vectors summing
to one), gambles are real vectors over the same ``k`` outcomes, and credal
sets are finite ordered collections of measures.  Target sets for the
sequence builder are polylines whose waypoints are convex weights over the
members of a credal set, so every point of the target is in the convex hull
by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SIMPLEX_TOL = 1e-9


class SimplexError(ValueError):
    """Raised for invalid measures, weights or dimension mismatches."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _validate_simplex(values, what: str, min_len: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size < min_len:
        raise SimplexError(f"{what} needs at least {min_len} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise SimplexError(f"{what} has non-finite entries: {arr}")
    if np.any(arr < 0):
        raise SimplexError(f"{what} has negative entries: {arr}")
    total = float(arr.sum())
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise SimplexError(f"{what} sums to {total!r}, not 1")
    # validated inputs are renormalised so internal sums are exact to ~1e-16
    return _frozen(arr / total)


class Measure:
    """A probability measure on ``k`` outcomes, i.e. a point of the simplex."""

    __slots__ = ("weights",)

    def __init__(self, weights):
        if isinstance(weights, Measure):
            weights = weights.weights
        object.__setattr__(self, "weights", _validate_simplex(weights, "measure", 2))

    def __setattr__(self, name, value):
        raise AttributeError("Measure is immutable")

    @property
    def k(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.k

    def __getitem__(self, j):
        return self.weights[j]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Measure):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash(tuple(self.weights.tolist()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{w:.6g}" for w in self.weights)
        return f"Measure({inner})"

    def prob(self, event: Iterable[int]) -> float:
        """Probability of an event given as an iterable of outcome indices."""
        idx = sorted(set(int(j) for j in event))
        return float(self.weights[idx].sum()) if idx else 0.0

    def expectation(self, gamble: "Gamble | Sequence[float]") -> float:
        values = gamble.values if isinstance(gamble, Gamble) else np.asarray(gamble, float)
        _check_dim(self.k, values.size)
        return float(self.weights @ values)

    def tolist(self) -> list[float]:
        return self.weights.tolist()


class Gamble:
    """A bounded real-valued function on the outcomes (a loss vector)."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=float).reshape(-1)
        if arr.size < 1 or not np.all(np.isfinite(arr)):
            raise SimplexError(f"gamble values must be finite and nonempty: {arr}")
        object.__setattr__(self, "values", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("Gamble is immutable")

    @classmethod
    def indicator(cls, k: int, event: Iterable[int]) -> "Gamble":
        vals = np.zeros(k)
        vals[sorted(set(int(j) for j in event))] = 1.0
        return cls(vals)

    @property
    def k(self) -> int:
        return int(self.values.size)

    def __neg__(self) -> "Gamble":
        return Gamble(-self.values)

    def __repr__(self) -> str:
        return f"Gamble({', '.join(f'{v:.6g}' for v in self.values)})"


def make_measure(weights) -> Measure:
    """Validate ``weights`` and return the corresponding :class:`Measure`.

    Entries must be nonnegative and sum to one within ``1e-9``; the stored
    vector is renormalised after validation.
    """
    return Measure(weights)


def _check_dim(k1: int, k2: int) -> None:
    if k1 != k2:
        raise SimplexError(f"dimension mismatch: {k1} != {k2}")


def _as_array(p) -> np.ndarray:
    if isinstance(p, Measure):
        return p.weights
    return np.asarray(p, dtype=float)


def distance(p, q) -> float:
    """Euclidean distance between two points of the same simplex."""
    a, b = _as_array(p), _as_array(q)
    _check_dim(a.size, b.size)
    return float(np.linalg.norm(a - b))


def concat_average(a_avg, u: int, b_avg, v: int) -> Measure:
    """Average of the concatenation of a length-``u`` and a length-``v`` block.

    Returns ``u/(u+v) * a_avg + v/(u+v) * b_avg``; with ``u == 0`` this is
    just ``b_avg``.
    """
    if u < 0 or v < 1:
        raise SimplexError(f"need u >= 0 and v >= 1, got u={u}, v={v}")
    b = _as_array(b_avg)
    if u == 0:
        return Measure(b)
    a = _as_array(a_avg)
    _check_dim(a.size, b.size)
    return Measure(_mix(a, u, b, v))


def _mix(a: np.ndarray, u: int, b: np.ndarray, v: int) -> np.ndarray:
    total = u + v
    return a * (u / total) + b * (v / total)


@dataclass(frozen=True)
class CredalSet:
    """Finite nonempty ordered collection of measures sharing the same ``k``."""

    members: tuple[Measure, ...]

    def __init__(self, members: Iterable):
        ms = tuple(m if isinstance(m, Measure) else Measure(m) for m in members)
        if not ms:
            raise SimplexError("credal set must be nonempty")
        k = ms[0].k
        for m in ms:
            _check_dim(k, m.k)
        object.__setattr__(self, "members", ms)
        object.__setattr__(self, "_points", _frozen(np.stack([m.weights for m in ms])))

    @property
    def k(self) -> int:
        return self.members[0].k

    @property
    def points(self) -> np.ndarray:
        """Read-only ``(len(M), k)`` array of member weights."""
        return self._points

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> Measure:
        return self.members[i]

    def __iter__(self):
        return iter(self.members)

    def __hash__(self) -> int:
        return hash(self.members)

    def induced(self, weights) -> Measure:
        """The measure ``sum_j weights[j] * members[j]``."""
        w = make_weights(weights, len(self))
        return Measure(w @ self._points)

    def tolist(self) -> list[list[float]]:
        return self._points.tolist()

    @classmethod
    def simplex_vertices(cls, k: int) -> "CredalSet":
        return cls(np.eye(k))


def make_weights(weights, size: int) -> np.ndarray:
    """Validate convex weights over ``size`` members."""
    w = _validate_simplex(weights, "convex weights", 1)
    if w.size != size:
        raise SimplexError(f"expected {size} convex weights, got {w.size}")
    return w


class TargetPath:
    """Polyline in the convex hull of a credal set.

    Waypoints are convex weights over the credal set members.  Consecutive
    waypoints inducing the same measure are merged.
    """

    def __init__(self, credal: CredalSet, waypoints: Sequence):
        if len(waypoints) == 0:
            raise SimplexError("target path needs at least one waypoint")
        ws = [make_weights(w, len(credal)) for w in waypoints]
        pts = [w @ credal.points for w in ws]
        keep_w, keep_p = [ws[0]], [pts[0]]
        for w, p in zip(ws[1:], pts[1:]):
            if np.linalg.norm(p - keep_p[-1]) > 1e-15:
                keep_w.append(w)
                keep_p.append(p)
        self.credal = credal
        self.weights = _frozen(np.stack(keep_w))
        self.points = _frozen(np.stack(keep_p))

    @classmethod
    def from_measures(cls, credal: CredalSet, waypoints: Sequence) -> "TargetPath":
        """Build a path when each waypoint is itself a member of ``credal``
        or a two-member mixture along an edge; general points need weights.
        """
        ws = []
        for p in waypoints:
            ws.append(_weights_for_point(credal, _as_array(p)))
        return cls(credal, ws)

    @property
    def k(self) -> int:
        return self.credal.k

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def __len__(self) -> int:
        return len(self.weights)

    def distance(self, points) -> np.ndarray:
        """Distance from each row of ``points`` to the polyline."""
        from . import kernels

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return kernels.polyline_distance(np.ascontiguousarray(pts), self.points)

    def sample(self, spacing: float) -> np.ndarray:
        """Points along the polyline at arc-length spacing at most ``spacing``."""
        if len(self.points) == 1:
            return self.points.copy()
        out = [self.points[:1]]
        for a, b, s in zip(self.points[:-1], self.points[1:], self.segment_lengths):
            pieces = max(1, math.ceil(s / spacing))
            t = np.arange(1, pieces + 1)[:, None] / pieces
            out.append(a + t * (b - a))
        return np.concatenate(out)

    def to_dict(self) -> dict:
        return {"credal_set": self.credal.tolist(), "waypoints": self.weights.tolist()}


def _weights_for_point(credal: CredalSet, p: np.ndarray) -> np.ndarray:
    # nonnegative least squares over the members; exact for points in co(M)
    from scipy.optimize import nnls

    a = np.vstack([credal.points.T, np.ones(len(credal))])
    rhs = np.concatenate([p, [1.0]])
    w, resid = nnls(a, rhs)
    if resid > 1e-9:
        raise SimplexError(f"point {p} is not in the convex hull of the credal set")
    return w / w.sum()


@dataclass(frozen=True)
class FiniteBlock:
    """A finite sequence of credal-set member indices and its average."""

    entries: np.ndarray
    average: Measure

    @property
    def length(self) -> int:
        return int(self.entries.size)

    def __len__(self) -> int:
        return self.length


def block_from_counts(credal: CredalSet, counts: np.ndarray) -> FiniteBlock:
    """Interleave members according to ``counts`` with low discrepancy.

    Member ``j`` occupies slots ``(r + 1/2) * v / counts[j]``; sorting the
    slots spreads repeated members evenly, so partial averages inside the
    block stay close to the block average.
    """
    counts = np.asarray(counts, dtype=np.int64)
    v = int(counts.sum())
    members = np.repeat(np.arange(counts.size), counts)
    ranks = np.concatenate([np.arange(c) for c in counts]) if v else np.zeros(0)
    keys = (ranks + 0.5) * v / counts[members]
    order = np.lexsort((members, keys))
    entries = members[order].astype(np.int64)
    entries.setflags(write=False)
    avg = (counts / v) @ credal.points
    return FiniteBlock(entries, Measure(avg))


def caratheodory_reduce(points: np.ndarray, weights: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Rewrite a convex combination using affinely independent support.

    Returns new nonnegative weights, summing to one, inducing the same point
    with at most ``k`` nonzero entries for points of the ``k``-simplex.
    """
    w = np.array(weights, dtype=float)
    w[w < tol] = 0.0
    while True:
        support = np.flatnonzero(w > 0)
        a = np.vstack([points[support].T, np.ones(support.size)])
        if support.size <= np.linalg.matrix_rank(a):
            break
        # affine dependence among support points: a @ z = 0, z != 0
        _, _, vt = np.linalg.svd(a)
        z = vt[-1]
        if not np.any(z > tol):
            z = -z
        pos = z > tol
        ratios = w[support][pos] / z[pos]
        step = ratios.min()
        w[support] = w[support] - step * z
        w[support[pos][np.argmin(ratios)]] = 0.0
        w[w < tol] = 0.0
    return w / w.sum()


def caratheodory_approximate(credal: CredalSet, q, v: int) -> FiniteBlock:
    """Length-``v`` block from ``credal`` whose average approximates ``q``.

    ``q`` is a vector of convex weights over the credal set members.  The
    weights are first reduced to an affinely independent support; each
    support member then gets ``floor(v * weight)`` slots and the remaining
    slots are filled with member 0.  The average of the block is within
    ``4 (k + 1) / v`` of the measure induced by ``q``.
    """
    if v < 1:
        raise SimplexError(f"block length must be positive, got {v}")
    w = make_weights(q, len(credal))
    lam = caratheodory_reduce(credal.points, w) if len(credal) > 1 else w
    counts = np.floor(v * lam).astype(np.int64)
    counts[0] += v - int(counts.sum())
    return block_from_counts(credal, counts)


def build_cover_chain(path: TargetPath, eps: float, zeta: float = 0.0) -> list[np.ndarray]:
    """Ordered centres on ``path`` forming an ``eps``-cover and ``eps``-chain.

    Centres are placed by arc length with spacing at most ``eps / 2`` and
    include every waypoint, so every path point is within ``eps / 4`` of a
    centre and consecutive centres are less than ``eps`` apart.  All centres
    lie on the path, hence within any ``zeta >= 0`` of it.  Returned items
    are convex weights over the credal set members.
    """
    if not eps > 0:
        raise SimplexError(f"eps must be positive, got {eps}")
    if zeta < 0:
        raise SimplexError(f"zeta must be nonnegative, got {zeta}")
    ws = path.weights
    centres = [ws[0]]
    spacing = eps / 2.0
    for w0, w1, s in zip(ws[:-1], ws[1:], path.segment_lengths):
        if s == 0.0:
            continue  # coincident waypoints
        pieces = max(1, math.ceil(s / spacing))
        for j in range(1, pieces + 1):
            t = j / pieces
            centres.append(_frozen((1 - t) * w0 + t * w1))
    return centres
