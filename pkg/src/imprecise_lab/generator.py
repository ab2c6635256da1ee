"""Seeded sampling of outcome sequences from a measure stream.

Outcome ``i`` is drawn by inverse CDF from ``m_i`` using the ``i``-th value
of a counter-based stream (Philox keyed by the seed and a trial number), so
any index range can be generated independently and prefixes are stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .csvio import write_csv
from .streams import MeasureStream, WeirdCoinStream

_CHUNK = 1 << 20
_U53 = 2.0 ** -53


def _key(seed: int, trial: int) -> int:
    if not 0 <= seed < 2 ** 64 or not 0 <= trial < 2 ** 64:
        raise ValueError("seed and trial must be unsigned 64-bit integers")
    return int(seed) | (int(trial) << 64)


def raw_stream(seed: int, start: int, stop: int, trial: int = 0) -> np.ndarray:
    """Raw 64-bit values at counter positions ``start..stop-1``."""
    if stop <= start:
        return np.zeros(0, dtype=np.uint64)
    b0 = start // 4
    nblocks = (stop - 1) // 4 - b0 + 1
    bg = np.random.Philox(key=_key(seed, trial), counter=b0)
    raw = bg.random_raw(4 * nblocks)
    off = start - 4 * b0
    return raw[off:off + stop - start]


def uniforms(seed: int, start: int, stop: int, trial: int = 0) -> np.ndarray:
    """Uniform doubles in [0, 1) with 53 random bits each."""
    return (raw_stream(seed, start, stop, trial) >> np.uint64(11)).astype(np.float64) * _U53


@dataclass
class OutcomeSequence:
    """Outcomes ``omega_{start+1}, ...`` with the seed and stream that produced them."""

    outcomes: np.ndarray
    k: int
    seed: int
    stream: dict = field(default_factory=dict)
    start: int = 0
    trial: int = 0

    def __len__(self) -> int:
        return self.outcomes.size

    def __post_init__(self):
        if self.outcomes.size and (self.outcomes.min() < 0 or self.outcomes.max() >= self.k):
            raise ValueError("outcome out of range")

    def to_csv(self, path):
        idx = np.arange(self.start + 1, self.start + self.outcomes.size + 1)
        return write_csv(path, ["index", "outcome"], [idx, self.outcomes], ["%d", "%d"])


def draw(stream: MeasureStream, seed: int, start: int, stop: int, trial: int = 0) -> np.ndarray:
    """Outcomes for positions ``start..stop-1`` (0-based) as int64."""
    cum = np.cumsum(stream.credal.points, axis=1)
    out = np.empty(stop - start, dtype=np.int64)
    for lo in range(start, stop, _CHUNK):
        hi = min(stop, lo + _CHUNK)
        u = uniforms(seed, lo, hi, trial)
        out[lo - start:hi - start] = kernels.categorical_draw(u, stream.indices(lo, hi), cum)
    return out


def sample(stream: MeasureStream, seed: int, n: int, start: int = 0, trial: int = 0) -> OutcomeSequence:
    """Draw ``n`` outcomes from ``stream`` beginning at position ``start``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = draw(stream, seed, start, start + n, trial)
    return OutcomeSequence(out, stream.credal.k, int(seed), stream.describe(), start, trial)


def weird_coin_stream(k: int = 2) -> WeirdCoinStream:
    if k != 2:
        raise ValueError("the weird coin is a two-outcome stream")
    return WeirdCoinStream()


def write_measure_csv(stream: MeasureStream, path, n: int, start: int = 0):
    """Companion dump: (index, member, outcome weights...) for positions start..start+n-1."""
    idx = stream.indices(start, start + n)
    pts = stream.credal.points[idx]
    cols = ["index", "member"] + [f"w{j}" for j in range(pts.shape[1])]
    data = [np.arange(start + 1, start + n + 1), idx] + [pts[:, j] for j in range(pts.shape[1])]
    return write_csv(path, cols, data, ["%d", "%d"] + ["%.17g"] * pts.shape[1])
