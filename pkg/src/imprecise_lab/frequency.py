"""Relative frequencies, gamble averages, windowed min/max estimates and tail clouds."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .csvio import write_csv
from .schedule import WindowFunction, parse_window
from .simplex import Gamble, Measure, TargetPath

MAX_EVENT_K = 12


class FreqTracker:
    """Outcome counts of a growing sequence."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.counts = np.zeros(k, dtype=np.int64)
        self.n = 0

    def update(self, outcome: int) -> "FreqTracker":
        if not 0 <= outcome < self.k:
            raise ValueError(f"outcome {outcome} outside [0, {self.k})")
        self.counts[outcome] += 1
        self.n += 1
        return self

    def extend(self, outcomes) -> "FreqTracker":
        outcomes = np.asarray(outcomes, dtype=np.int64)
        if outcomes.size and (outcomes.min() < 0 or outcomes.max() >= self.k):
            raise ValueError("outcome out of range")
        self.counts += np.bincount(outcomes, minlength=self.k)
        self.n += outcomes.size
        return self

    def freq(self) -> Measure:
        if self.n == 0:
            raise ValueError("no outcomes yet")
        return Measure(self.counts / self.n)


def gamble_average(tracker: FreqTracker, gamble) -> float:
    """``E_{r_n}[gamble]``, equal to the running mean of ``gamble(omega_i)``."""
    if tracker.n == 0:
        raise ValueError("no outcomes yet")
    vals = gamble.values if isinstance(gamble, Gamble) else np.asarray(gamble, dtype=float)
    if vals.size != tracker.k:
        raise ValueError("gamble has the wrong number of outcomes")
    return float(tracker.counts @ vals / tracker.n)


def running_frequencies(outcomes, k: int) -> np.ndarray:
    """``(n, k)`` array whose row ``j-1`` is ``r_j``."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    n = outcomes.size
    out = np.empty((n, k))
    steps = np.arange(1, n + 1, dtype=np.float64)
    for j in range(k):
        out[:, j] = np.cumsum(outcomes == j) / steps
    return out


def running_mean(values) -> np.ndarray:
    """Prefix averages ``a_j = (1/j) sum_{i<=j} values_i``."""
    values = np.asarray(values, dtype=float)
    return np.cumsum(values) / np.arange(1, values.size + 1)


def gamble_running_mean(outcomes, gamble) -> np.ndarray:
    vals = gamble.values if isinstance(gamble, Gamble) else np.asarray(gamble, dtype=float)
    return running_mean(vals[np.asarray(outcomes, dtype=np.int64)])


# -------------------------------------------------------------- WF estimator
class AverageHistory:
    """Streaming windowed min/max of prefix averages.

    After ``push`` of the ``n``-th average the deques hold candidate
    ``(j, a_j)`` pairs with ``j`` in ``[kappa(n), n]``; ``estimate`` returns
    their min and max.  Amortised O(1) per push.
    """

    def __init__(self, kappa="sqrt"):
        self.kappa: WindowFunction = parse_window(kappa)
        self.n = 0
        self.last = float("nan")
        self.total = 0.0
        self._qmin: deque = deque()
        self._qmax: deque = deque()
        self.global_min = float("inf")
        self.global_max = float("-inf")

    def push(self, average: float) -> None:
        self.n += 1
        n, x = self.n, float(average)
        self.last = x
        while self._qmin and self._qmin[-1][1] >= x:
            self._qmin.pop()
        self._qmin.append((n, x))
        while self._qmax and self._qmax[-1][1] <= x:
            self._qmax.pop()
        self._qmax.append((n, x))
        left = self.kappa(n)
        while self._qmin[0][0] < left:
            self._qmin.popleft()
        while self._qmax[0][0] < left:
            self._qmax.popleft()
        self.global_min = min(self.global_min, x)
        self.global_max = max(self.global_max, x)

    def push_value(self, value: float) -> None:
        """Feed the next raw value ``l(omega_n)``; the average is kept internally."""
        self.total += float(value)
        self.push(self.total / (self.n + 1))

    def estimate(self) -> tuple[float, float]:
        if self.n == 0:
            raise ValueError("empty history")
        return self._qmin[0][1], self._qmax[0][1]

    @property
    def window(self) -> tuple[int, int]:
        return self.kappa(self.n), self.n


def wf_estimate(history: AverageHistory, kappa=None, n: int | None = None) -> tuple[float, float]:
    """Current ``(lower, upper)`` windowed estimate of a streaming history."""
    if kappa is not None and parse_window(kappa) != history.kappa:
        raise ValueError("history was built with a different window")
    if n is not None and n != history.n:
        raise ValueError(f"history is at n={history.n}, not {n}")
    return history.estimate()


def wf_trace(averages, kappa="sqrt") -> tuple[np.ndarray, np.ndarray]:
    """Windowed ``(lower, upper)`` for every ``n`` of a prefix-average array."""
    averages = np.asarray(averages, dtype=float)
    lo = parse_window(kappa).array(averages.size)
    return kernels.window_extrema(averages, lo)


def wf_bruteforce(averages, kappa, n: int) -> tuple[float, float]:
    """Direct min/max over ``a_j``, ``kappa(n) <= j <= n`` (reference implementation)."""
    w = parse_window(kappa)
    seg = np.asarray(averages, dtype=float)[w(n) - 1:n]
    return float(seg.min()), float(seg.max())


# ------------------------------------------------------ apparent convergence
def _event_mask(event, k: int) -> np.ndarray:
    m = np.zeros(k, dtype=bool)
    for j in event:
        if not 0 <= j < k:
            raise ValueError(f"event element {j} outside [0, {k})")
        m[j] = True
    return m


def apparent_convergence(outcomes, event, k: int, start: int, eps: float, n: int | None = None) -> bool:
    """``|r_j(A) - r_n(A)| < eps`` for every ``j`` in ``[start, n]``."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    n = outcomes.size if n is None else n
    if not 1 <= start <= n:
        raise ValueError(f"need 1 <= start <= n, got start={start}, n={n}")
    hit = _event_mask(event, k)[outcomes[:n]]
    r = np.cumsum(hit) / np.arange(1, n + 1)
    return bool(np.all(np.abs(r[start - 1:] - r[-1]) < eps))


def all_events(k: int) -> np.ndarray:
    """Boolean ``(2**k - 2, k)`` matrix of the nonempty proper events."""
    if k > MAX_EVENT_K:
        raise ValueError(f"enumerating all events needs k <= {MAX_EVENT_K}; pass an event list")
    codes = np.arange(1, 2 ** k - 1, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k)) & 1).astype(bool)


def apparent_divergence(outcomes, k: int, start: int, eps: float, n: int | None = None,
                        events=None) -> bool:
    """True when some nontrivial event fails to apparently converge."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    n = outcomes.size if n is None else n
    if not 1 <= start <= n:
        raise ValueError(f"need 1 <= start <= n, got start={start}, n={n}")
    ev = all_events(k) if events is None else np.array([_event_mask(e, k) for e in events])
    if ev.size == 0:
        return False
    freqs = running_frequencies(outcomes[:n], k)
    dev = freqs[start - 1:] - freqs[-1]
    worst = np.zeros(len(ev))
    for lo in range(0, dev.shape[0], 1 << 14):
        block = np.abs(dev[lo:lo + (1 << 14)] @ ev.T.astype(float))
        np.maximum(worst, block.max(axis=0), out=worst)
    return bool(np.any(worst >= eps))


# ---------------------------------------------------------------- tail cloud
@dataclass
class CloudResult:
    points: np.ndarray  # subsampled tail averages
    indices: np.ndarray  # their 1-based lengths
    to_reference: float | None = None  # sup over the cloud of the distance to the reference
    from_reference: float | None = None  # sup over the reference of the distance to the cloud

    @property
    def hausdorff(self) -> float | None:
        if self.to_reference is None:
            return None
        return max(self.to_reference, self.from_reference)


def _reference_vertices(reference) -> np.ndarray:
    if isinstance(reference, TargetPath):
        return reference.points
    v = np.asarray(reference, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def _sample_polyline(v: np.ndarray, spacing: float) -> np.ndarray:
    pts = [v[:1]]
    for a, b in zip(v[:-1], v[1:]):
        m = max(1, int(np.ceil(np.linalg.norm(b - a) / spacing)))
        t = np.arange(1, m + 1)[:, None] / m
        pts.append(a + t * (b - a))
    return np.concatenate(pts)


def tail_cluster_cloud(averages, burn_in: int, n: int | None = None, reference=None,
                       max_points: int = 10_000, spacing: float = 1e-3) -> CloudResult:
    """Averages ``r_j`` for ``j in [burn_in, n]`` and their Hausdorff distance to a reference.

    ``averages`` is an ``(N, d)`` (or 1-d) array of prefix averages; row
    ``j-1`` is ``r_j``.  The cloud is thinned to ``max_points`` evenly spaced
    rows plus the per-coordinate extremes.  The cloud-to-reference distance
    is exact over the full tail (point-to-segment distances); the reverse
    direction samples the reference polyline at ``spacing``.
    """
    a = np.asarray(averages, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    n = a.shape[0] if n is None else n
    if not 1 <= burn_in <= n:
        raise ValueError(f"empty tail window [{burn_in}, {n}]")
    tail = a[burn_in - 1:n]
    keep = np.unique(np.concatenate([
        np.linspace(0, tail.shape[0] - 1, min(max_points, tail.shape[0])).astype(np.int64),
        tail.argmin(axis=0), tail.argmax(axis=0),
    ]))
    res = CloudResult(tail[keep], keep + burn_in)
    if reference is None:
        return res
    v = _reference_vertices(reference)
    if v.shape[1] != tail.shape[1]:
        raise ValueError("reference and cloud have different dimensions")
    res.to_reference = float(kernels.polyline_distance(tail, v).max())
    samp = _sample_polyline(v, spacing) if len(v) > 1 else v
    res.from_reference = float(cKDTree(res.points).query(samp)[0].max())
    return res


def hausdorff_to_polyline(points, reference, spacing: float = 1e-3) -> float:
    """Symmetric Hausdorff distance between a point set and a polyline."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    v = _reference_vertices(reference)
    fwd = float(kernels.polyline_distance(pts, v).max())
    samp = _sample_polyline(v, spacing) if len(v) > 1 else v
    back = float(cKDTree(pts).query(samp)[0].max())
    return max(fwd, back)


# -------------------------------------------------------------------- export
def export_timeseries(path, outcomes, k: int, gamble=None, kappa="sqrt", stride: int = 1000):
    """CSV of ``(n, r_n coordinates, wf_lower, wf_upper)`` every ``stride`` steps.

    The windowed estimate is for ``gamble`` (default: indicator of outcome 0).
    """
    outcomes = np.asarray(outcomes, dtype=np.int64)
    g = np.eye(k)[0] if gamble is None else (gamble.values if isinstance(gamble, Gamble) else np.asarray(gamble))
    freqs = running_frequencies(outcomes, k)
    lower, upper = wf_trace(gamble_running_mean(outcomes, g), kappa)
    rows = np.arange(stride - 1, outcomes.size, stride)
    if outcomes.size and (rows.size == 0 or rows[-1] != outcomes.size - 1):
        rows = np.append(rows, outcomes.size - 1)
    cols = ["n"] + [f"r{j}" for j in range(k)] + ["wf_lower", "wf_upper"]
    data = [rows + 1] + [freqs[rows, j] for j in range(k)] + [lower[rows], upper[rows]]
    return write_csv(path, cols, data, ["%d"] + ["%.17g"] * (k + 2))
