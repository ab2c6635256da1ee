"""Measure streams: random-access sequences ``m_1, m_2, ...`` over a credal set.

Streams hand out member *indices* into their credal set.  Positions in the
array API are 0-based (position ``p`` holds ``m_{p+1}``); the scalar
``index`` API is 1-based to match the usual ``m_i`` notation.

Coin conventions: outcome 0 is heads; the coin with heads probability 1/3
is member 0 and the coin with heads probability 2/3 is member 1.
"""

from __future__ import annotations

import numpy as np

from .simplex import CredalSet, Measure, make_measure

COIN_LOW = (1 / 3, 2 / 3)
COIN_HIGH = (2 / 3, 1 / 3)


class MeasureStream:
    """Base class; subclasses implement ``indices(start, stop)``."""

    credal: CredalSet
    name = "stream"

    def indices(self, start: int, stop: int) -> np.ndarray:
        raise NotImplementedError

    def member(self, index: int) -> int:
        """Member index of ``m_index`` (1-based)."""
        if index < 1:
            raise IndexError("stream indices start at 1")
        return int(self.indices(index - 1, index)[0])

    def measure(self, index: int) -> Measure:
        return self.credal[self.member(index)]

    def weights(self, start: int, stop: int) -> np.ndarray:
        """Rows of outcome probabilities for positions ``start..stop-1``."""
        return self.credal.points[self.indices(start, stop)]

    def describe(self) -> dict:
        return {"name": self.name, "M": self.credal.tolist()}


def _check_range(start: int, stop: int) -> None:
    if start < 0 or stop < start:
        raise IndexError(f"bad position range [{start}, {stop})")


class ConstantStream(MeasureStream):
    name = "constant"

    def __init__(self, measure):
        self.credal = CredalSet([make_measure(measure)])

    def indices(self, start, stop):
        _check_range(start, stop)
        return np.zeros(stop - start, dtype=np.int64)


class PeriodicStream(MeasureStream):
    """``m_i = members[(i - 1) % len(members)]``."""

    name = "periodic"

    def __init__(self, members):
        self.credal = CredalSet(members)

    def indices(self, start, stop):
        _check_range(start, stop)
        return np.arange(start, stop, dtype=np.int64) % len(self.credal)


def alternating_coins() -> PeriodicStream:
    """Odd indices use the 1/3-heads coin, even indices the 2/3-heads coin."""
    s = PeriodicStream([COIN_LOW, COIN_HIGH])
    s.name = "alternating-coins"
    return s


def second_msb(i: np.ndarray) -> np.ndarray:
    """Second most significant bit of each positive integer (0 when absent)."""
    i = np.asarray(i, dtype=np.int64)
    if np.any(i < 1):
        raise ValueError("indices must be positive")
    # frexp gives the exact bit length for integers below 2**53
    nbits = np.frexp(i.astype(np.float64))[1].astype(np.int64)
    shift = np.maximum(nbits - 2, 0)
    return np.where(nbits >= 2, (i >> shift) & 1, 0)


class WeirdCoinStream(MeasureStream):
    """1/3-heads coin when the second most significant bit of ``i`` is 0, else 2/3.

    ``i = 1`` has no second bit and uses the 1/3 coin.
    """

    name = "weird-coin"

    def __init__(self):
        self.credal = CredalSet([COIN_LOW, COIN_HIGH])

    def indices(self, start, stop):
        _check_range(start, stop)
        if stop == start:
            return np.zeros(0, dtype=np.int64)
        return second_msb(np.arange(start + 1, stop + 1, dtype=np.int64))


class FunctionStream(MeasureStream):
    """Stream defined by a vectorised map from 1-based indices to member indices."""

    name = "function"

    def __init__(self, credal: CredalSet, fn, name: str = "function"):
        self.credal = credal
        self.fn = fn
        self.name = name

    def indices(self, start, stop):
        _check_range(start, stop)
        out = np.asarray(self.fn(np.arange(start + 1, stop + 1, dtype=np.int64)), dtype=np.int64)
        if out.size and (out.min() < 0 or out.max() >= len(self.credal)):
            raise ValueError("function stream produced an invalid member index")
        return out


class ArrayStream(MeasureStream):
    """Finite stream backed by an explicit array of member indices."""

    name = "array"

    def __init__(self, credal: CredalSet, members):
        self.credal = credal
        self.members = np.asarray(members, dtype=np.int64)
        if self.members.size and (self.members.min() < 0 or self.members.max() >= len(credal)):
            raise ValueError("member index out of range")

    def __len__(self):
        return self.members.size

    def indices(self, start, stop):
        _check_range(start, stop)
        if stop > self.members.size:
            raise IndexError(f"finite stream has {self.members.size} entries, asked for {stop}")
        return self.members[start:stop].copy()


class BuilderStream(MeasureStream):
    """Random access over a :class:`SequenceBuilder`, caching emitted indices."""

    name = "builder"

    def __init__(self, builder):
        self.builder = builder
        self.credal = builder.credal
        dtype = np.int8 if len(self.credal) < 128 else np.int32
        self._cache = np.zeros(0, dtype=dtype)

    def _extend(self, stop: int) -> None:
        have = self._cache.size
        if stop <= have:
            return
        cap = max(stop, 2 * have, 1024)
        new = np.zeros(cap, dtype=self._cache.dtype)
        new[:have] = self._cache
        new[have:cap] = self.builder.take(cap - have)
        self._cache = new

    def indices(self, start, stop):
        _check_range(start, stop)
        self._extend(stop)
        return self._cache[start:stop].astype(np.int64)

    def describe(self):
        d = super().describe()
        d["N"] = self.builder.path.weights.tolist()
        d["schedule"] = self.builder.schedule.to_dict()
        d["window"] = self.builder.window.spec if self.builder.window is not None else None
        return d


class InterleavedStream(MeasureStream):
    """Base stream with the indices selected by a sparse rule overwritten.

    Selected indices cycle through the members of ``M`` in order, so every
    member is a cluster point of the measure sequence while the Cesàro
    averages are unaffected in the limit (the rule has density 0).
    """

    name = "interleaved"

    def __init__(self, base: MeasureStream, credal: CredalSet, rule):
        self.base = base
        self.rule = rule
        pts = [p.tolist() for p in base.credal]
        extra = [m.tolist() for m in credal if m.tolist() not in pts]
        self.credal = CredalSet(pts + extra) if extra else base.credal
        # member j of ``credal`` as an index into the merged set
        merged = self.credal.tolist()
        self._net = np.array([merged.index(m.tolist()) for m in credal], dtype=np.int64)

    def indices(self, start, stop):
        _check_range(start, stop)
        out = self.base.indices(start, stop)
        mask = self.rule.mask(start, stop)
        if mask.any():
            before = self.rule.count_upto(start)
            rank = before + np.cumsum(mask)[mask] - 1
            out[mask] = self._net[rank % self._net.size]
        return out

    def describe(self):
        d = super().describe()
        d["base"] = self.base.describe()
        d["rule"] = self.rule.spec
        return d
