"""Index-based selection rules and subsequence frequency analytics.

Rules are deterministic predicates on the 1-based index ``i``.  The array
API works on 0-based positions: ``mask(start, stop)`` covers indices
``start+1 .. stop``.

Mini-format accepted by :func:`parse_rule`::

    all                  every index
    mod:a,b              i % a == b
    bit:pos,val          bit of i equals val; pos >= 0 counts from the least
                         significant bit, pos < 0 from the most significant
                         (-1 is the leading one, -2 the next); missing bits read 0
    pow:e                perfect e-th powers 1, 2**e, 3**e, ...
    explicit:FILE        indices listed in FILE (whitespace or comma separated)
    explicit:i1,i2,...   inline index list
    near:p0/p1/..,eps0,decay
                         greedy proximity rule over a stream (needs ``stream=``)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simplex import Measure, make_measure
from .streams import MeasureStream

_CHUNK = 1 << 20
_EPS_FLOOR = np.finfo(float).tiny


class RuleError(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    """No qualifying index was found within the scan budget."""


class SelectionRule:
    spec = "all"
    #: asymptotic density when known (None when not checkable)
    density: float | None = 1.0

    def _mask_idx(self, idx: np.ndarray) -> np.ndarray:
        return np.ones(idx.size, dtype=bool)

    def mask(self, start: int, stop: int) -> np.ndarray:
        if start < 0 or stop < start:
            raise IndexError(f"bad position range [{start}, {stop})")
        return self._mask_idx(np.arange(start + 1, stop + 1, dtype=np.int64))

    def __call__(self, i: int) -> bool:
        return bool(self.mask(i - 1, i)[0])

    def count_upto(self, n: int) -> int:
        """Number of selected indices among ``1..n``."""
        total = 0
        for lo in range(0, n, _CHUNK):
            total += int(self.mask(lo, min(n, lo + _CHUNK)).sum())
        return total

    def selected(self, n: int) -> np.ndarray:
        """Selected 1-based indices up to ``n``."""
        return np.flatnonzero(self.mask(0, n)) + 1

    def __repr__(self):
        return f"SelectionRule({self.spec!r})"


class AllRule(SelectionRule):
    def count_upto(self, n):
        return n


@dataclass(repr=False)
class ModRule(SelectionRule):
    a: int
    b: int

    def __post_init__(self):
        if self.a < 1 or not 0 <= self.b < self.a:
            raise RuleError(f"mod rule needs a >= 1 and 0 <= b < a, got a={self.a}, b={self.b}")
        self.spec = f"mod:{self.a},{self.b}"
        self.density = 1.0 / self.a

    def _mask_idx(self, idx):
        return idx % self.a == self.b

    def count_upto(self, n):
        # i = b, b + a, ... with i >= 1
        first = self.b if self.b >= 1 else self.a
        return 0 if n < first else (n - first) // self.a + 1


@dataclass(repr=False)
class BitRule(SelectionRule):
    pos: int
    val: int

    def __post_init__(self):
        if self.val not in (0, 1):
            raise RuleError(f"bit value must be 0 or 1, got {self.val}")
        self.spec = f"bit:{self.pos},{self.val}"
        # no limiting density for leading-bit rules; low bits have density 1/2
        self.density = 0.5 if self.pos >= 0 else None

    def _mask_idx(self, idx):
        if self.pos >= 0:
            bit = (idx >> self.pos) & 1
        else:
            nbits = np.frexp(idx.astype(np.float64))[1].astype(np.int64)
            shift = nbits + self.pos
            bit = np.where(shift >= 0, (idx >> np.maximum(shift, 0)) & 1, 0)
        return bit == self.val


@dataclass(repr=False)
class PowRule(SelectionRule):
    e: int = 2

    def __post_init__(self):
        if self.e < 2:
            raise RuleError(f"power rule exponent must be >= 2, got {self.e}")
        self.spec = f"pow:{self.e}"
        self.density = 0.0

    def _root(self, n: int) -> int:
        if n < 1:
            return 0
        r = int(round(n ** (1.0 / self.e)))
        while r ** self.e > n:
            r -= 1
        while (r + 1) ** self.e <= n:
            r += 1
        return r

    def _mask_idx(self, idx):
        out = np.zeros(idx.size, dtype=bool)
        if idx.size == 0:
            return out
        lo, hi = int(idx[0]), int(idx[-1])
        roots = np.arange(self._root(lo - 1) + 1, self._root(hi) + 1, dtype=np.int64)
        out[roots ** self.e - lo] = True
        return out

    def count_upto(self, n):
        return self._root(n)


class ExplicitRule(SelectionRule):
    def __init__(self, indices, spec: str | None = None):
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        if idx.size and idx[0] < 1:
            raise RuleError("explicit indices must be >= 1")
        self.indices = idx
        self.spec = spec or "explicit:" + ",".join(map(str, idx.tolist()))
        self.density = 0.0

    def _mask_idx(self, idx):
        return np.isin(idx, self.indices)

    def count_upto(self, n):
        return int(np.searchsorted(self.indices, n, side="right"))


class NearRule(SelectionRule):
    """Greedy proximity rule over a stream.

    Scanning ``i = 1, 2, ...`` it selects ``i`` when ``d(m_i, target)`` is
    below the current tolerance, and after each selection multiplies the
    tolerance by ``decay``.  Scanning more than ``budget`` consecutive
    indices without a selection raises :class:`BudgetExhausted`.
    """

    density = None

    def __init__(self, stream: MeasureStream, target, eps0: float, decay: float,
                 budget: int = 10 ** 8):
        if eps0 <= 0 or not 0 < decay <= 1:
            raise RuleError("near rule needs eps0 > 0 and 0 < decay <= 1")
        self.stream = stream
        self.target = make_measure(target)
        if self.target.k != stream.credal.k:
            raise RuleError("target dimension does not match the stream")
        self.eps0, self.decay, self.budget = float(eps0), float(decay), int(budget)
        w = "/".join(repr(float(x)) for x in self.target.weights)
        self.spec = f"near:{w},{self.eps0!r},{self.decay!r}"
        self._member_dist = np.linalg.norm(stream.credal.points - self.target.weights, axis=1)
        self._sel = np.zeros(0, dtype=bool)
        self._hits = 0
        self._eps = self.eps0
        self._since = 0

    def _scan(self, stop: int) -> None:
        have = self._sel.size
        if stop <= have:
            return
        new = np.zeros(stop - have, dtype=bool)
        for lo in range(have, stop, _CHUNK):
            hi = min(stop, lo + _CHUNK)
            d = self._member_dist[self.stream.indices(lo, hi)]
            cand = np.flatnonzero(d < self._eps)
            eps, since = self._eps, self._since
            prev = -1
            for c in cand.tolist():
                if d[c] < eps:
                    since += c - prev - 1
                    if since > self.budget:
                        break
                    new[lo - have + c] = True
                    # floor keeps exact matches (distance 0) selectable forever
                    eps = max(eps * self.decay, _EPS_FLOOR)
                    prev = c
                    since = 0
                    self._hits += 1
            since += hi - lo - prev - 1
            self._eps, self._since = eps, since
            if since > self.budget:
                raise BudgetExhausted(
                    f"no index closer than {eps:.3g} to the target within {self.budget} indices"
                )
        self._sel = np.concatenate([self._sel, new])

    def mask(self, start, stop):
        if start < 0 or stop < start:
            raise IndexError(f"bad position range [{start}, {stop})")
        self._scan(stop)
        return self._sel[start:stop].copy()


def parse_rule(spec: str, stream: MeasureStream | None = None) -> SelectionRule:
    spec = spec.strip()
    kind, _, arg = spec.partition(":")
    try:
        if kind == "all":
            return AllRule()
        if kind == "mod":
            a, b = (int(x) for x in arg.split(","))
            return ModRule(a, b)
        if kind == "bit":
            p, v = (int(x) for x in arg.split(","))
            return BitRule(p, v)
        if kind == "pow":
            return PowRule(int(arg) if arg else 2)
        if kind == "explicit":
            path = Path(arg)
            if path.is_file():
                text = path.read_text().replace(",", " ").split()
                return ExplicitRule([int(x) for x in text], spec)
            return ExplicitRule([int(x) for x in arg.split(",") if x.strip()], spec)
        if kind == "near":
            if stream is None:
                raise RuleError("near rules need a stream")
            m, eps0, decay = arg.split(",")
            return NearRule(stream, [float(x) for x in m.split("/")], float(eps0), float(decay))
    except RuleError:
        raise
    except (ValueError, TypeError) as exc:
        raise RuleError(f"cannot parse rule {spec!r}: {exc}") from exc
    raise RuleError(f"unknown rule kind {kind!r} in {spec!r}")


# ----------------------------------------------------------------- trackers
class SubseqTracker:
    """Outcome counts along the indices picked by one rule."""

    def __init__(self, k: int, rule: SelectionRule):
        self.k = k
        self.rule = rule
        self.counts = np.zeros(k, dtype=np.int64)
        self.total = 0

    @property
    def selected(self) -> int:
        return int(self.counts.sum())

    def update(self, outcome: int) -> None:
        self.extend(np.array([outcome]))

    def extend(self, outcomes) -> None:
        outcomes = np.asarray(outcomes, dtype=np.int64)
        if outcomes.size and (outcomes.min() < 0 or outcomes.max() >= self.k):
            raise ValueError("outcome out of range")
        m = self.rule.mask(self.total, self.total + outcomes.size)
        self.counts += np.bincount(outcomes[m], minlength=self.k)
        self.total += outcomes.size


def selected_freq(tracker: SubseqTracker) -> Measure:
    """Relative frequencies over the selected indices."""
    if tracker.selected == 0:
        raise ValueError("no index selected yet")
    return Measure(tracker.counts / tracker.selected)


def theoretical_mean(stream: MeasureStream, rule: SelectionRule, n: int) -> Measure:
    """Average of ``m_i`` over selected ``i <= n``."""
    counts = np.zeros(len(stream.credal), dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        hi = min(n, lo + _CHUNK)
        m = rule.mask(lo, hi)
        counts += np.bincount(stream.indices(lo, hi)[m], minlength=counts.size)
    total = counts.sum()
    if total == 0:
        raise ValueError("rule selects no index up to n")
    return Measure((counts / total) @ stream.credal.points)


def d_metric(p, q) -> float:
    """Largest absolute coordinate difference."""
    return float(np.max(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


def fierens_fine_bound(k: int, num_rules: int, eps: float, m: int, n: int) -> float:
    """``2 k |S| exp(-eps^2 m^2 / (2 n))``."""
    if m <= 0 or m > n:
        raise ValueError(f"need 0 < m <= n, got m={m}, n={n}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return 2.0 * k * num_rules * math.exp(-(eps ** 2) * m ** 2 / (2.0 * n))


@dataclass
class ConcentrationResult:
    k: int
    num_rules: int
    eps: float
    m: int
    n: int
    trials: int
    violations: int
    bound: float

    @property
    def frequency(self) -> float:
        return self.violations / self.trials

    @property
    def stderr(self) -> float:
        b = min(self.bound, 1.0)
        return math.sqrt(b * (1 - b) / self.trials)

    @property
    def passed(self) -> bool:
        return self.frequency <= self.bound + 3 * self.stderr

    def to_dict(self) -> dict:
        return {"k": self.k, "rules": self.num_rules, "eps": self.eps, "m": self.m, "n": self.n,
                "trials": self.trials, "violations": self.violations, "frequency": self.frequency,
                "bound": self.bound, "stderr": self.stderr, "passed": self.passed}


def max_deviation(outcomes: np.ndarray, stream: MeasureStream, rules, m: int) -> np.ndarray:
    """Per-trial ``max_S D(mu_S, r_S)`` over rules selecting at least ``m`` indices.

    ``outcomes`` is ``(trials, n)``.  Trials where no rule qualifies get -inf.
    """
    outcomes = np.atleast_2d(outcomes)
    trials, n = outcomes.shape
    k = stream.credal.k
    best = np.full(trials, -np.inf)
    for rule in rules:
        sel = rule.mask(0, n)
        cnt = int(sel.sum())
        if cnt < m or cnt == 0:
            continue
        mu = theoretical_mean(stream, rule, n).weights
        sub = outcomes[:, sel]
        freq = np.stack([(sub == j).sum(axis=1) for j in range(k)], axis=1) / cnt
        np.maximum(best, np.abs(freq - mu).max(axis=1), out=best)
    return best


def concentration_check(stream: MeasureStream, rules, eps: float, m: int, n: int,
                        trials: int = 1000, seed: int = 0, outcomes=None) -> ConcentrationResult:
    """Monte-Carlo frequency of ``max_S D(mu_S, r_S) >= eps`` against the bound.

    Trial ``t`` uses the counter stream keyed by ``(seed, t)``.  Pass a
    precomputed ``(trials, n)`` outcome matrix to reuse draws across cells.
    """
    from .generator import draw

    if outcomes is None:
        outcomes = np.stack([draw(stream, seed, 0, n, trial=t) for t in range(trials)])
    dev = max_deviation(outcomes, stream, rules, m)
    bound = fierens_fine_bound(stream.credal.k, len(rules), eps, m, n)
    return ConcentrationResult(stream.credal.k, len(rules), eps, m, n, outcomes.shape[0],
                               int((dev >= eps).sum()), bound)


def estimate_m_hat(trackers, m: int) -> list[Measure]:
    """Selected frequencies of every rule with at least ``m`` selections."""
    return [selected_freq(t) for t in trackers if t.selected >= m and t.selected > 0]


def revealing_rule(stream: MeasureStream, target, eps0: float = 0.5, decay: float = 0.5,
                   horizon: int = 10 ** 5, budget: int = 10 ** 8) -> NearRule:
    """Greedy rule whose selected measures approach ``target``.

    Scans the first ``horizon`` indices eagerly so a target that is not a
    cluster point of the stream is reported (``BudgetExhausted``) as soon
    as ``budget`` consecutive indices fail to qualify.

    Only cluster points of the stream's measures can be revealed this way.
    A member of the target set that the stream never approaches is out of
    reach for every rule, and no attempt is made to recover it.
    """
    rule = NearRule(stream, target, eps0, decay, budget)
    rule.mask(0, horizon)
    stop = horizon
    while rule._hits == 0:  # raises once the budget is spent
        stop += _CHUNK
        rule.mask(0, stop)
    return rule


# ------------------------------------------------------------ interleaving
def interleave_cover(base, credal, sparse_rule: SelectionRule):
    """Stream equal to ``base`` except at ``sparse_rule``'s indices, which cycle through ``credal``."""
    from .streams import BuilderStream, InterleavedStream

    if sparse_rule.density is None or sparse_rule.density > 0:
        raise RuleError(f"rule {sparse_rule.spec!r} does not have density zero")
    if not isinstance(base, MeasureStream):
        base = BuilderStream(base)
    return InterleavedStream(base, credal, sparse_rule)
