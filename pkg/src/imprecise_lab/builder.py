"""Lazy construction of measure sequences with a prescribed Cesàro cluster set.

The builder follows the constructive argument: at iteration ``i`` it walks
the running average along an ``eps_i``-chain covering the target polyline,
moving from centre to centre by repeatedly appending a length-``v_i`` block
that approximates the next centre, then grows the sequence to length
``l_{i+1}`` near the first centre of the next cover and shrinks into the
``delta_{i+1}``-ball around it.

Consecutive covers are traversed in alternating directions, so the last
centre of one cover and the first centre of the next are the same endpoint
of the polyline and the bridging chain between them is trivial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .schedule import ToleranceSchedule, WindowFunction, parse_window
from .simplex import (
    CredalSet,
    FiniteBlock,
    Measure,
    SimplexError,
    TargetPath,
    build_cover_chain,
    caratheodory_approximate,
)

SNAPSHOT_VERSION = 1
PHASES = ("pair", "grow", "shrink")


class BuilderError(ValueError):
    pass


@dataclass
class _Gap:
    """Open 'append b until inside the ball' step."""

    target: np.ndarray  # convex weights of the centre being approached
    v: int
    delta: float
    block: FiniteBlock
    radius: float
    last_out: int  # largest sequence length whose average was outside the ball

    @property
    def centre(self) -> np.ndarray:
        return self.block.average.weights


class _History:
    """Coarse cover of past running averages by balls over length ranges.

    Each record ``(start, end, centre, radius)`` guarantees that the running
    averages at lengths ``start..end`` lie in the closed ball.  Adjacent
    records are merged while they are short relative to ``start``, so the
    record count grows only logarithmically with the sequence length.
    """

    def __init__(self, k: int, rel: float = 1 / 512, min_span: int = 64):
        self.k = k
        self.rel = rel
        self.min_span = min_span
        self.start = np.zeros(64, dtype=np.int64)
        self.end = np.zeros(64, dtype=np.int64)
        self.centre = np.zeros((64, k))
        self.rad = np.zeros(64)
        self.size = 0

    def _grow(self) -> None:
        cap = 2 * self.start.size
        for name in ("start", "end", "rad"):
            arr = getattr(self, name)
            new = np.zeros(cap, dtype=arr.dtype)
            new[: arr.size] = arr
            setattr(self, name, new)
        new = np.zeros((cap, self.k))
        new[: self.centre.shape[0]] = self.centre
        self.centre = new

    def add(self, start: int, end: int, avgs: np.ndarray) -> None:
        lo, hi = avgs.min(axis=0), avgs.max(axis=0)
        c = (lo + hi) / 2
        r = float(np.linalg.norm(avgs - c, axis=1).max())
        j = self.size - 1
        if j >= 0 and end - self.start[j] <= max(self.min_span, int(self.start[j] * self.rel)):
            c, r = _enclose(self.centre[j], float(self.rad[j]), c, r)
            self.end[j], self.centre[j], self.rad[j] = end, c, r
            return
        if self.size == self.start.size:
            self._grow()
        j = self.size
        self.start[j], self.end[j], self.centre[j], self.rad[j] = start, end, c, r
        self.size += 1

    def last_outside(self, c: np.ndarray, radius: float) -> int:
        """Largest recorded length whose average may lie outside ``B(c, radius)``."""
        n = self.size
        if n == 0:
            return 0
        d = np.linalg.norm(self.centre[:n] - c, axis=1) + self.rad[:n]
        out = np.flatnonzero(d >= radius)
        return int(self.end[out[-1]]) if out.size else 0

    def to_dict(self) -> dict:
        n = self.size
        return {"start": self.start[:n].tolist(), "end": self.end[:n].tolist(),
                "centre": self.centre[:n].tolist(), "rad": self.rad[:n].tolist()}

    @classmethod
    def from_dict(cls, k: int, d: dict) -> "_History":
        h = cls(k)
        n = len(d["start"])
        while h.start.size < n:
            h._grow()
        h.start[:n] = d["start"]
        h.end[:n] = d["end"]
        if n:
            h.centre[:n] = np.asarray(d["centre"], dtype=float)
        h.rad[:n] = d["rad"]
        h.size = n
        return h


def _enclose(c1: np.ndarray, r1: float, c2: np.ndarray, r2: float):
    """Smallest ball containing two balls."""
    d = float(np.linalg.norm(c2 - c1))
    if d + r2 <= r1:
        return c1.copy(), r1
    if d + r1 <= r2:
        return c2.copy(), r2
    R = (d + r1 + r2) / 2
    c = c1 + (R - r1) / d * (c2 - c1)
    return c, R * (1 + 1e-12)


class SequenceBuilder:
    """Stateful emitter of credal-set member indices.

    Parameters
    ----------
    credal, path
        The credal set ``M`` and the target polyline ``N`` (waypoints as
        convex weights over ``M``).
    schedule
        Tolerance schedule; defaults to the geometric halving schedule.
    window
        When given (e.g. ``"sqrt"``), every approach step keeps appending
        blocks until the whole window ``[window(n), n]`` of running averages
        lies in the target ball.  This is the slowed-down variant on which
        windowed min/max estimators inherit the full cluster set.
    record
        Keep a list of ``(event, iteration, n, info)`` tuples in ``events``.
    """

    def __init__(
        self,
        credal: CredalSet,
        path: TargetPath,
        schedule: ToleranceSchedule | None = None,
        window: WindowFunction | str | None = None,
        record: bool = False,
    ):
        if path.credal is not credal and path.credal.tolist() != credal.tolist():
            raise BuilderError("target path is expressed over a different credal set")
        self.credal = credal
        self.path = path
        self.schedule = schedule or ToleranceSchedule.default(credal.k)
        if self.schedule.k != credal.k:
            raise BuilderError(f"schedule is for k={self.schedule.k}, credal set has k={credal.k}")
        self.schedule.validate()
        self.window = parse_window(window) if window is not None else None
        self.record = record
        self.events: list[tuple] = []
        self._points = credal.points
        self._trivial_target = len(path) == 1
        self._block_cache: dict = {}
        self._cover_cache: dict = {}

        self.iteration = 1
        self.counts = np.zeros(len(credal), dtype=np.int64)
        self.n = 0
        self.phase = "pair"
        self.pair_pos = 0
        self._pairs = self._make_pairs(1)
        self._gap: _Gap | None = None
        # slow variant: coarse record of where past running averages were
        self._hist = _History(credal.k) if self.window is not None and not self._trivial_target else None
        self._pending = np.zeros(0, dtype=np.int64)
        self._cursor = 0
        # the sequence starts with member 0
        self._push(np.zeros(1, dtype=np.int64), 0)

    # ----------------------------------------------------------------- geometry
    def cover(self, i: int) -> list[np.ndarray]:
        """Cover-chain centres of iteration ``i``, oriented for traversal."""
        if i not in self._cover_cache:
            centres = build_cover_chain(self.path, self.schedule.eps(i), self.schedule.zeta(i))
            if i % 2 == 0:
                centres = centres[::-1]
            if len(self._cover_cache) > 4:
                self._cover_cache.pop(min(self._cover_cache))
            self._cover_cache[i] = centres
        return self._cover_cache[i]

    def anchor(self, i: int) -> Measure:
        """First centre of cover ``i + 1``: where iteration ``i`` grows and shrinks."""
        return self.credal.induced(self.cover(i + 1)[0])

    def excursion_bound(self, i: int) -> float:
        s = self.schedule
        return s.eps(i) + 2 * s.delta(i) + s.zeta(i)

    def _make_pairs(self, i: int) -> list[tuple[np.ndarray, np.ndarray]]:
        centres = list(self.cover(i))
        first_next = self.cover(i + 1)[0]
        chain = centres + _bridge(self.credal, centres[-1], first_next, self.schedule.eps(i))
        pairs = []
        for c1, c2 in zip(chain[:-1], chain[1:]):
            p1, p2 = c1 @ self._points, c2 @ self._points
            if np.linalg.norm(p1 - p2) > 0:  # zero-length pairs hold by induction
                pairs.append((c1, c2))
        return pairs

    def _approx(self, weights: np.ndarray, v: int) -> FiniteBlock:
        key = (weights.tobytes(), v)
        blk = self._block_cache.get(key)
        if blk is None:
            if len(self._block_cache) > 256:
                self._block_cache.clear()
            blk = caratheodory_approximate(self.credal, weights, v)
            self._block_cache[key] = blk
        return blk

    # ---------------------------------------------------------------- planning
    @property
    def _planned_n(self) -> int:
        return self.n + (self._pending.size - self._cursor)

    def _planned_counts(self) -> np.ndarray:
        counts = self.counts.copy()
        if self._cursor < self._pending.size:
            counts += np.bincount(self._pending[self._cursor:], minlength=counts.size)
        return counts

    def _planned_average(self) -> np.ndarray:
        counts = self._planned_counts()
        return (counts / counts.sum()) @ self._points

    def _open_gap(self, target: np.ndarray, i_block: int, i_delta: int) -> _Gap:
        v = self.schedule.block_length(i_block)
        delta = self.schedule.delta(i_delta)
        blk = self._approx(target, v)
        err = float(np.linalg.norm(target @ self._points - blk.average.weights))
        radius = (delta - err) / 2.0
        last_out = 0
        if self._hist is not None:
            last_out = self._hist.last_outside(blk.average.weights, radius)
        return _Gap(target, v, delta, blk, radius, last_out)

    def _gap_closed(self, gap: _Gap) -> bool:
        r = self._planned_average()
        if not float(np.linalg.norm(r - gap.centre)) < gap.radius:
            return False
        if self._hist is None:
            return True
        return self.window(self._planned_n) > gap.last_out

    def _push(self, entries: np.ndarray, phase_code: int) -> None:
        if self._hist is not None:
            n0 = self._planned_n
            counts = self._planned_counts()
            onehot = np.zeros((entries.size, counts.size), dtype=np.int64)
            onehot[np.arange(entries.size), entries] = 1
            cum = np.cumsum(onehot, axis=0) + counts
            avgs = (cum @ self._points) / (n0 + np.arange(1, entries.size + 1))[:, None]
            self._hist.add(n0 + 1, n0 + entries.size, avgs)
            if self._gap is not None:
                g = self._gap
                out = np.flatnonzero(np.linalg.norm(avgs - g.centre, axis=1) >= g.radius)
                if out.size:
                    g.last_out = n0 + int(out[-1]) + 1
        self._pending = entries
        self._cursor = 0
        self._pending_tag = (self.iteration, phase_code)

    def _plan(self) -> None:
        """Queue the next block; advances phases and iterations as needed."""
        s = self.schedule
        while True:
            i = self.iteration
            if self.phase == "pair":
                if self.pair_pos >= len(self._pairs):
                    self.phase = "grow"
                    continue
                c1, c2 = self._pairs[self.pair_pos]
                if self._gap is None:
                    self._gap = self._open_gap(c2, i, i)
                if self._gap_closed(self._gap):
                    if self.record:
                        r = self._planned_average()
                        d = float(np.linalg.norm(r - c2 @ self._points))
                        self.events.append(("pair_end", i, self._planned_n, d))
                    self._gap = None
                    self.pair_pos += 1
                    continue
                self._push(self._gap.block.entries, 0)
                return
            if self.phase == "grow":
                if self._planned_n >= s.min_length(i + 1):
                    self.phase = "shrink"
                    continue
                target = self.cover(i + 1)[0]
                self._push(self._approx(target, s.block_length(i)).entries, 1)
                return
            # shrink into the delta_{i+1} ball around the next anchor
            target = self.cover(i + 1)[0]
            if self._gap is None:
                self._gap = self._open_gap(target, i + 1, i + 1)
            if self._gap_closed(self._gap):
                if self.record:
                    r = self._planned_average()
                    d = float(np.linalg.norm(r - target @ self._points))
                    self.events.append(("iteration_end", i, self._planned_n, d))
                self._gap = None
                self.iteration = i + 1
                self._pairs = self._make_pairs(i + 1)
                self.pair_pos = 0
                self.phase = "pair"
                continue
            self._push(self._gap.block.entries, 2)
            return

    # ---------------------------------------------------------------- emission
    def take(self, count: int, meta: bool = False):
        """Emit the next ``count`` member indices as an int64 array.

        With ``meta=True`` also return per-emission iteration numbers and
        phase codes (0 pair, 1 grow, 2 shrink).
        """
        out = np.empty(count, dtype=np.int64)
        iters = np.empty(count, dtype=np.int64) if meta else None
        phases = np.empty(count, dtype=np.int8) if meta else None
        filled = 0
        while filled < count:
            if self._cursor >= self._pending.size:
                self._plan()
            avail = min(count - filled, self._pending.size - self._cursor)
            chunk = self._pending[self._cursor:self._cursor + avail]
            out[filled:filled + avail] = chunk
            if meta:
                iters[filled:filled + avail] = self._pending_tag[0]
                phases[filled:filled + avail] = self._pending_tag[1]
            self.counts += np.bincount(chunk, minlength=self.counts.size)
            self.n += avail
            self._cursor += avail
            filled += avail
        if meta:
            return out, iters, phases
        return out

    def next_index(self) -> int:
        return int(self.take(1)[0])

    def next_measure(self) -> Measure:
        """Emit the next measure of the sequence (a member of the credal set)."""
        return self.credal[self.next_index()]

    @property
    def running_average(self) -> Measure:
        if self.n == 0:
            raise BuilderError("nothing emitted yet")
        return Measure((self.counts / self.n) @ self._points)

    # ---------------------------------------------------------------- snapshot
    def to_snapshot(self) -> dict:
        gap = None
        if self._gap is not None:
            g = self._gap
            gap = {"target": g.target.tolist(), "v": g.v, "delta": g.delta, "last_out": g.last_out}
        return {
            "version": SNAPSHOT_VERSION,
            "M": self.credal.tolist(),
            "N": self.path.weights.tolist(),
            "schedule": self.schedule.to_dict(),
            "window": self.window.spec if self.window is not None else None,
            "iteration": self.iteration,
            "n": self.n,
            "counts": self.counts.tolist(),
            "running_average": self.running_average.tolist() if self.n else None,
            "phase": self.phase,
            "pair_pos": self.pair_pos,
            "cursor": self._cursor,
            "pending": self._pending.tolist(),
            "pending_tag": list(self._pending_tag),
            "gap": gap,
            "history": self._hist.to_dict() if self._hist is not None else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_snapshot())

    @classmethod
    def from_snapshot(cls, snap: dict) -> "SequenceBuilder":
        if snap.get("version") != SNAPSHOT_VERSION:
            raise BuilderError(f"unsupported snapshot version {snap.get('version')!r}")
        credal = CredalSet(snap["M"])
        path = TargetPath(credal, snap["N"])
        b = cls(credal, path, ToleranceSchedule.from_dict(snap["schedule"]), snap["window"])
        b.iteration = int(snap["iteration"])
        b.n = int(snap["n"])
        b.counts = np.array(snap["counts"], dtype=np.int64)
        if b.counts.sum() != b.n:
            raise BuilderError("snapshot counts do not sum to n")
        b.phase = snap["phase"]
        if b.phase not in PHASES:
            raise BuilderError(f"unknown phase {b.phase!r}")
        b._pairs = b._make_pairs(b.iteration)
        b.pair_pos = int(snap["pair_pos"])
        b._pending = np.array(snap["pending"], dtype=np.int64)
        b._cursor = int(snap["cursor"])
        b._pending_tag = tuple(snap["pending_tag"])
        if b._hist is not None and snap.get("history") is not None:
            b._hist = _History.from_dict(credal.k, snap["history"])
        g = snap["gap"]
        if g is not None:
            target = np.array(g["target"], dtype=float)
            blk = b._approx(target, int(g["v"]))
            err = float(np.linalg.norm(target @ b._points - blk.average.weights))
            b._gap = _Gap(target, int(g["v"]), float(g["delta"]), blk,
                          (float(g["delta"]) - err) / 2.0, int(g["last_out"]))
        return b

    @classmethod
    def loads(cls, text: str) -> "SequenceBuilder":
        return cls.from_snapshot(json.loads(text))


def _bridge(credal: CredalSet, a: np.ndarray, b: np.ndarray, eps: float) -> list[np.ndarray]:
    """Straight chain from ``a`` to ``b`` (exclusive of ``a``) with spacing < eps."""
    d = float(np.linalg.norm((a - b) @ credal.points))
    pieces = max(1, math.ceil(d / (eps / 2.0)))
    return [(1 - j / pieces) * a + (j / pieces) * b for j in range(1, pieces + 1)]


def new_builder(credal: CredalSet, path: TargetPath,
                schedule: ToleranceSchedule | None = None, **kw) -> SequenceBuilder:
    """Builder whose Cesàro averages have the polyline ``path`` as cluster set."""
    try:
        return SequenceBuilder(credal, path, schedule, **kw)
    except SimplexError as exc:
        raise BuilderError(str(exc)) from exc


def build_slow_variant(credal: CredalSet, path: TargetPath,
                       schedule: ToleranceSchedule | None = None,
                       window="sqrt", **kw) -> SequenceBuilder:
    """Builder slowed down so windowed min/max estimates keep oscillating."""
    return SequenceBuilder(credal, path, schedule, window=window, **kw)
