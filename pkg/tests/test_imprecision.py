import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imprecise_lab.imprecision import (
    EnvelopePair,
    absolute_typicality,
    check_p_axioms,
    check_t_axioms,
    envelope_tables,
    lower_prevision,
    lower_prob,
    rectangle_lower_prob,
    rectangle_lower_prob_bruteforce,
    shift_rectangle_invariance,
    typicality_distance,
    upper_prevision,
    upper_prob,
)
from imprecise_lab.simplex import CredalSet, Gamble

COINS = [[1 / 3, 2 / 3], [2 / 3, 1 / 3]]
H, T = 0, 1


def random_credal(seed, k=None, size=None):
    rng = np.random.default_rng(seed)
    k = k or int(rng.integers(2, 7))
    size = size or int(rng.integers(1, 6))
    return rng.dirichlet(np.ones(k) * rng.choice([0.2, 1.0, 5.0]), size=size)


def test_envelope_examples():
    assert lower_prob(COINS, [H]) == pytest.approx(1 / 3)
    assert upper_prob(COINS, [H]) == pytest.approx(2 / 3)
    assert lower_prob(COINS, [H, T]) == upper_prob(COINS, [H, T]) == 1.0
    assert lower_prob(COINS, []) == upper_prob(COINS, []) == 0.0
    with pytest.raises(ValueError):
        lower_prob(COINS, [2])


def test_prevision_examples():
    assert lower_prevision(COINS, [1, 0]) == pytest.approx(1 / 3)
    assert upper_prevision(COINS, [1, 0]) == pytest.approx(2 / 3)
    assert lower_prevision(COINS, [2.5, 2.5]) == pytest.approx(2.5)
    assert upper_prevision(COINS, Gamble([2.5, 2.5])) == pytest.approx(2.5)
    M = random_credal(3, k=4)
    assert lower_prevision(M, [0, 1, 1, 0]) == pytest.approx(lower_prob(M, [1, 2]), abs=1e-15)


@given(st.integers(0, 2 ** 32 - 1))
def test_prevision_conjugacy_and_coherence(seed):
    rng = np.random.default_rng(seed)
    M = random_credal(seed)
    k = M.shape[1]
    X, Y = rng.normal(size=(2, k)) * 5
    lam = rng.uniform(0, 10)
    assert abs(upper_prevision(M, X) + lower_prevision(M, -X)) < 1e-12
    assert lower_prevision(M, X + Y) >= lower_prevision(M, X) + lower_prevision(M, Y) - 1e-12
    assert abs(lower_prevision(M, lam * X) - lam * lower_prevision(M, X)) < 1e-9


def test_envelope_pair_caches():
    e = EnvelopePair(COINS)
    assert e.lower([H]) <= e.upper([H])
    assert e.lower([H]) == pytest.approx(1 - e.upper([T]))
    assert len(e._cache) == 2


def test_p_axioms_envelopes_and_singleton():
    for seed in range(20):
        assert check_p_axioms(random_credal(seed)).ok
    lo, up = envelope_tables([[0.1, 0.2, 0.7]])
    assert np.allclose(lo, up)
    assert check_p_axioms([[0.1, 0.2, 0.7]]).ok


def test_p3_violation_reported_with_witness():
    # upper values on {}, {a}, {b}, {a,b}, ...; {a,b} exceeds {a} + {b}
    up = np.array([0, 0.1, 0.1, 0.3, 0.5, 0.6, 0.6, 1.0])
    rep = check_p_axioms(upper=up)
    assert not rep.ok
    assert rep.violations["P3"] > 0
    w = next(x for x in rep.witnesses if x["axiom"] == "P3")
    assert sorted([w["A"], w["B"]]) == [[0], [1]]
    assert w["lhs"] == pytest.approx(0.3) and w["rhs"] == pytest.approx(0.2)
    assert json.loads(rep.to_json())["ok"] is False


def test_p_axioms_sampled_mode():
    rep = check_p_axioms(random_credal(1, k=10), sample=5000)
    assert rep.ok and rep.checked["P3"] == 5000


def test_report_merge():
    a = check_p_axioms(COINS)
    b = check_p_axioms(upper=np.array([0, 0.1, 0.1, 0.3, 0.5, 0.6, 0.6, 1.0]))
    total = a.checked["P3"] + b.checked["P3"]
    a.merge(b)
    assert a.checked["P3"] == total and not a.ok


def test_rectangle_examples():
    assert rectangle_lower_prob(COINS, []) == 1.0
    assert rectangle_lower_prob(COINS, [[H], [T]]) == pytest.approx(1 / 9)
    assert rectangle_lower_prob_bruteforce(COINS, [[H], [T]]) == pytest.approx(1 / 9)
    assert rectangle_lower_prob(COINS, [[H], [H, T]]) == rectangle_lower_prob(COINS, [[H]])


def test_rectangle_matches_exhaustive_small():
    rng = np.random.default_rng(0)
    for trial in range(150):
        M = random_credal(trial, size=int(rng.integers(1, 6)))
        k = M.shape[1]
        n = int(rng.integers(0, 6))
        rect = [np.flatnonzero(rng.random(k) < 0.5).tolist() for _ in range(n)]
        got = rectangle_lower_prob(M, rect)
        want = rectangle_lower_prob_bruteforce(M, rect)
        assert abs(got - want) < 1e-12
        # explicit loop over M**n as an independent oracle
        if n <= 3:
            vals = [np.prod([M[j][rect[i]].sum() for i, j in enumerate(js)]) for js in
                    itertools.product(range(len(M)), repeat=n)]
            assert abs(got - min(vals)) < 1e-12


def test_shift_invariance_examples():
    assert shift_rectangle_invariance(COINS, [[H]], 0)
    assert shift_rectangle_invariance(COINS, [[H]], 3)
    assert rectangle_lower_prob(COINS, [[0, 1]] * 3 + [[H]]) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        shift_rectangle_invariance(COINS, [[H]], -1)


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 5), st.integers(0, 4))
def test_shift_invariance_against_bruteforce(seed, shift, n):
    rng = np.random.default_rng(seed)
    M = random_credal(seed, size=int(rng.integers(1, 4)))
    k = M.shape[1]
    rect = [np.flatnonzero(rng.random(k) < 0.6).tolist() for _ in range(n)]
    assert shift_rectangle_invariance(M, rect, shift)
    if n + shift <= 6 and len(M) ** (n + shift) <= 5000:
        shifted = [list(range(k))] * shift + rect
        assert abs(rectangle_lower_prob_bruteforce(M, shifted) - rectangle_lower_prob(M, rect)) < 1e-12


def test_typicality_examples():
    M = CredalSet(COINS)
    assert typicality_distance(M, [H], [H]) == 0
    assert typicality_distance(M, [H, T], []) == 1
    assert typicality_distance(M, [H], []) == pytest.approx(2 / 3)
    assert absolute_typicality(M, [H]) == pytest.approx(2 / 3)


def test_t_axioms_hold_for_envelopes():
    for seed in range(10):
        assert check_t_axioms(random_credal(seed, k=int(2 + seed % 4))).ok


def test_t_axioms_sampled_at_k8():
    for seed in range(3):
        assert check_t_axioms(random_credal(seed, k=8), sample=200_000).ok


def test_t_axioms_detect_bad_table():
    up = np.array([0, 0.6, 0.6, 0.7])  # d(Omega, 0) = 0.7 breaks T2
    rep = check_t_axioms(upper=up)
    assert rep.violations["T2"] == 1
