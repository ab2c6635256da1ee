"""Lower and upper envelopes of finite credal sets and their axiom checks.

Events are subsets of ``{0, .., k-1}`` given as iterables of outcomes.  The
table functions index events by bitmask (bit ``j`` set when outcome ``j`` is
in the event), which lets the axiom checks run exhaustively and vectorised.

Lower probabilities do not determine a credal set, so every function takes
``M`` itself.  Each docstring says which object it depends on: *set* means
the value is computed from the members of ``M`` (and agrees for ``M`` and
its convex hull); *envelope* means it only reads the lower/upper
probability tables, so any two sets with the same envelopes agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .simplex import CredalSet, Gamble

MAX_TABLE_K = 16
TOL = 1e-12


def _points(M) -> np.ndarray:
    if isinstance(M, CredalSet):
        return M.points
    return CredalSet(M).points


def _event_vector(event, k: int) -> np.ndarray:
    v = np.zeros(k)
    for j in event:
        if not 0 <= int(j) < k:
            raise ValueError(f"event element {j} outside [0, {k})")
        v[int(j)] = 1.0
    return v


def _prob_range(M, event) -> tuple[float, float]:
    pts = _points(M)
    k = pts.shape[1]
    v = _event_vector(event, k)
    size = int(v.sum())
    if size == 0:
        return 0.0, 0.0
    if size == k:
        return 1.0, 1.0
    vals = pts @ v
    return float(vals.min()), float(vals.max())


def lower_prob(M, event) -> float:
    """``min over M of mu(A)``; exactly 0 on the empty event and 1 on the whole space.

    Set: computed from the members of ``M``.
    """
    return _prob_range(M, event)[0]


def upper_prob(M, event) -> float:
    return _prob_range(M, event)[1]


def _gamble(X, k: int) -> np.ndarray:
    vals = X.values if isinstance(X, Gamble) else np.asarray(X, dtype=float)
    if vals.shape != (k,):
        raise ValueError(f"gamble must have {k} values")
    return vals


def lower_prevision(M, X) -> float:
    """``min over M of E_mu[X]``.  Set: not recoverable from the probability envelope."""
    pts = _points(M)
    return float((pts @ _gamble(X, pts.shape[1])).min())


def upper_prevision(M, X) -> float:
    pts = _points(M)
    return float((pts @ _gamble(X, pts.shape[1])).max())


def event_bits(k: int) -> np.ndarray:
    """``(2**k, k)`` 0/1 matrix; row ``c`` is the event with bitmask ``c``."""
    if k > MAX_TABLE_K:
        raise ValueError(f"event tables need k <= {MAX_TABLE_K}")
    codes = np.arange(2 ** k, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k)) & 1).astype(float)


def envelope_tables(M) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper probability of every event, indexed by bitmask."""
    pts = _points(M)
    k = pts.shape[1]
    vals = event_bits(k) @ pts.T
    lower, upper = vals.min(axis=1), vals.max(axis=1)
    full = 2 ** k - 1
    lower[0] = upper[0] = 0.0
    lower[full] = upper[full] = 1.0
    return lower, upper


class EnvelopePair:
    """Lower/upper probabilities of a credal set with a per-event cache."""

    def __init__(self, M):
        self.credal = M if isinstance(M, CredalSet) else CredalSet(M)
        self.k = self.credal.k
        self._cache: dict = {}

    def _get(self, event) -> tuple[float, float]:
        key = frozenset(int(j) for j in event)
        if key not in self._cache:
            self._cache[key] = _prob_range(self.credal, key)
        return self._cache[key]

    def lower(self, event) -> float:
        return self._get(event)[0]

    def upper(self, event) -> float:
        return self._get(event)[1]

    def lower_prevision(self, X) -> float:
        return lower_prevision(self.credal, X)

    def upper_prevision(self, X) -> float:
        return upper_prevision(self.credal, X)


# -------------------------------------------------------------------- reports
@dataclass
class AxiomReport:
    """Counts of checked and violated instances per axiom, with witnesses."""

    name: str
    k: int
    checked: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    max_witnesses: int = 20

    def record(self, axiom: str, checked: int, bad_rows: list | None = None, count: int = 0) -> None:
        self.checked[axiom] = self.checked.get(axiom, 0) + int(checked)
        self.violations[axiom] = self.violations.get(axiom, 0) + int(count)
        for row in bad_rows or []:
            if len(self.witnesses) >= self.max_witnesses:
                break
            self.witnesses.append({"axiom": axiom, **row})

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    @property
    def ok(self) -> bool:
        return self.total_violations == 0

    def merge(self, other: "AxiomReport") -> "AxiomReport":
        for a, c in other.checked.items():
            rows = [{x: y for x, y in w.items() if x != "axiom"} for w in other.witnesses if w["axiom"] == a]
            self.record(a, c, rows, other.violations.get(a, 0))
        return self

    def to_dict(self) -> dict:
        return {"name": self.name, "k": self.k, "ok": self.ok, "checked": self.checked,
                "violations": self.violations, "witnesses": self.witnesses}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=float)


def _sets(code: int, k: int) -> list[int]:
    return [j for j in range(k) if code >> j & 1]


def _witness_rows(mask: np.ndarray, k: int, names, arrays, lhs, rhs) -> list[dict]:
    rows = []
    for idx in np.argwhere(mask)[:20]:
        row = {n: _sets(int(a[tuple(idx)]), k) for n, a in zip(names, arrays)}
        row["lhs"], row["rhs"] = float(lhs[tuple(idx)]), float(rhs[tuple(idx)])
        rows.append(row)
    return rows


def check_p_axioms(M=None, *, lower=None, upper=None, k: int | None = None, tol: float = TOL,
                   sample: int | None = None, seed: int = 0) -> AxiomReport:
    """Check P1-P4 and conjugacy on all events (or ``sample`` random pairs).

    Either pass a credal set ``M`` or explicit bitmask-indexed ``lower`` and
    ``upper`` tables (for set functions that are not envelopes).  A missing
    table skips the checks that need it.
    """
    if M is not None:
        lower, upper = envelope_tables(M)
    if lower is None and upper is None:
        raise ValueError("need a credal set or at least one table")
    size = len(lower if lower is not None else upper)
    k = int(round(np.log2(size))) if k is None else k
    if 2 ** k != size:
        raise ValueError("tables must have 2**k entries")
    rep = AxiomReport("P1-P4", k)
    full = size - 1
    lo = None if lower is None else np.asarray(lower, dtype=float)
    up = None if upper is None else np.asarray(upper, dtype=float)

    # P1
    p1 = []
    for name, tab in (("lower", lo), ("upper", up)):
        if tab is None:
            continue
        for code, want in ((0, 0.0), (full, 1.0)):
            if abs(tab[code] - want) > tol:
                p1.append({"A": _sets(code, k), "table": name, "lhs": float(tab[code]), "rhs": want})
    rep.record("P1", 4 if lo is not None and up is not None else 2, p1, len(p1))

    if sample is None:
        A, B = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    else:
        rng = np.random.default_rng(seed)
        A, B = rng.integers(0, size, sample), rng.integers(0, size, sample)
    # P2 on pairs A subset of B
    sub = (A & B) == A
    for name, tab in (("lower", lo), ("upper", up)):
        if tab is None:
            continue
        bad = sub & (tab[A] > tab[B] + tol)
        rep.record("P2", int(sub.sum()),
                   _witness_rows(bad, k, ("A", "B"), (A, B), tab[A], tab[B]), int(bad.sum()))
    # P3 upper subadditivity
    if up is not None:
        lhs, rhs = up[A | B], up[A] + up[B]
        bad = lhs > rhs + tol
        rep.record("P3", A.size, _witness_rows(bad, k, ("A", "B"), (A, B), lhs, rhs), int(bad.sum()))
    # P4 lower superadditivity on disjoint pairs
    if lo is not None:
        disj = (A & B) == 0
        lhs, rhs = lo[A | B], lo[A] + lo[B]
        bad = disj & (lhs < rhs - tol)
        rep.record("P4", int(disj.sum()), _witness_rows(bad, k, ("A", "B"), (A, B), lhs, rhs), int(bad.sum()))
    # conjugacy
    if lo is not None and up is not None:
        codes = np.arange(size)
        gap = np.abs(lo[codes] + up[full ^ codes] - 1.0)
        bad = gap > tol
        rep.record("conjugacy", size,
                   [{"A": _sets(int(c), k), "lhs": float(lo[c] + up[full ^ c]), "rhs": 1.0}
                    for c in codes[bad][:20]], int(bad.sum()))
    return rep


# ----------------------------------------------------------------- rectangles
def rectangle_lower_prob(M, rect) -> float:
    """Lower probability of ``A_1 x .. x A_n x Omega x ..``: product of factor lower probabilities.

    Envelope: only the factor lower probabilities enter.
    """
    out = 1.0
    for A in rect:
        out *= lower_prob(M, A)
    return out


def rectangle_lower_prob_bruteforce(M, rect) -> float:
    """Minimum of ``prod_i m_i(A_i)`` over all ``(m_1, .., m_n)`` in ``M**n``.  Set."""
    pts = _points(M)
    k = pts.shape[1]
    if len(rect) == 0:
        return 1.0
    per = [pts @ _event_vector(A, k) for A in rect]  # (|M|,) each
    grid = per[0]
    for p in per[1:]:
        grid = np.multiply.outer(grid, p)
    return float(grid.min())


def shift_rectangle_invariance(M, rect, shift: int) -> bool:
    """Prepending ``shift`` whole-space factors leaves the lower probability unchanged."""
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    k = _points(M).shape[1]
    shifted = [range(k)] * shift + list(rect)
    return rectangle_lower_prob(M, shifted) == rectangle_lower_prob(M, rect)


# ----------------------------------------------------------------- typicality
def typicality_distance(M, A, B) -> float:
    """``upper(A symmetric-difference B)``.  Envelope."""
    return upper_prob(M, set(A) ^ set(B))


def absolute_typicality(M, A) -> float:
    return 1.0 - lower_prob(M, A)


def check_t_axioms(M=None, *, upper=None, k: int | None = None, tol: float = TOL,
                   sample: int | None = None, seed: int = 0) -> AxiomReport:
    """Check T1-T5 for ``d(A, B) = upper(A ^ B)`` over all set pairs/quadruples.

    Exhaustive checking of T5 touches ``16**k`` quadruples; use ``sample``
    for k above 6.
    """
    if M is not None:
        _, upper = envelope_tables(M)
    up = np.asarray(upper, dtype=float)
    size = up.size
    k = int(round(np.log2(size))) if k is None else k
    full = size - 1
    codes = np.arange(size)
    D = up[codes[:, None] ^ codes[None, :]]  # D[A, B]
    rep = AxiomReport("T1-T5", k)

    # T1: A subset of A' => d(A, 0) <= d(A', 0)
    A, B = np.meshgrid(codes, codes, indexing="ij")
    sub = (A & B) == A
    bad = sub & (D[A, 0] > D[B, 0] + tol)
    rep.record("T1", int(sub.sum()), _witness_rows(bad, k, ("A", "A2"), (A, B), D[A, 0], D[B, 0]), int(bad.sum()))
    # T2
    bad2 = abs(D[full, 0] - 1.0) > tol
    rep.record("T2", 1, [{"lhs": float(D[full, 0]), "rhs": 1.0}] if bad2 else [], int(bad2))
    # T3
    gap = np.abs(D[codes, full] - D[full ^ codes, 0])
    bad3 = gap > tol
    rep.record("T3", size, [{"A": _sets(int(c), k), "lhs": float(D[c, full]), "rhs": float(D[full ^ c, 0])}
                            for c in codes[bad3][:20]], int(bad3.sum()))

    rng = np.random.default_rng(seed)
    # T4: d(A1 & A2, B) <= d(A1, B) + d(A2, B)
    if sample is None:
        A1, A2, Bt = np.meshgrid(codes, codes, codes, indexing="ij")
    else:
        A1, A2, Bt = (rng.integers(0, size, sample) for _ in range(3))
    lhs, rhs = D[A1 & A2, Bt], D[A1, Bt] + D[A2, Bt]
    bad = lhs > rhs + tol
    rep.record("T4", lhs.size, _witness_rows(bad, k, ("A1", "A2", "B"), (A1, A2, Bt), lhs, rhs), int(bad.sum()))

    # T5: d(A1 & A2, B1 & B2) <= d(A1, B1) + d(A2, B2)
    if sample is None:
        A2g, B1g, B2g = np.meshgrid(codes, codes, codes, indexing="ij")
        checked = bad_total = 0
        rows: list = []
        for a1 in range(size):
            lhs = D[a1 & A2g, B1g & B2g]
            rhs = D[a1, B1g] + D[A2g, B2g]
            bad = lhs > rhs + tol
            nb = int(bad.sum())
            if nb and len(rows) < 20:
                a1g = np.full_like(A2g, a1)
                rows += _witness_rows(bad, k, ("A1", "A2", "B1", "B2"), (a1g, A2g, B1g, B2g), lhs, rhs)
            checked += lhs.size
            bad_total += nb
        rep.record("T5", checked, rows, bad_total)
    else:
        A1, A2, B1, B2 = (rng.integers(0, size, sample) for _ in range(4))
        lhs, rhs = D[A1 & A2, B1 & B2], D[A1, B1] + D[A2, B2]
        bad = lhs > rhs + tol
        rep.record("T5", lhs.size, _witness_rows(bad, k, ("A1", "A2", "B1", "B2"), (A1, A2, B1, B2), lhs, rhs),
                   int(bad.sum()))
    return rep
