"""End-to-end acceptance checks, one test per criterion.

Every test prints a single ``criterion N PASS|FAIL`` line; the lines are
repeated in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest

from imprecise_lab.frequency import (FreqTracker, gamble_average, gamble_running_mean, wf_bruteforce,
                                     wf_trace)
from imprecise_lab.imprecision import (check_p_axioms, check_t_axioms, rectangle_lower_prob,
                                       rectangle_lower_prob_bruteforce, shift_rectangle_invariance)
from imprecise_lab.scenarios import run_scenario
from imprecise_lab.simplex import CredalSet, caratheodory_approximate, concat_average, distance

pytestmark = pytest.mark.acceptance


def timed(cfg):
    t = time.perf_counter()
    s = run_scenario(cfg)
    return s, time.perf_counter() - t


def test_alternating_coins(criterion, tmp_path):
    s, secs = timed({"scenario": "alternating-coins", "out_dir": str(tmp_path)})
    rows = s["results"]["per_seed"]
    assert len(rows) == 20 and s["config"]["horizon"] == 10 ** 5
    agg = max(abs(r["r_heads"] - 0.5) for r in rows)
    odd = max(abs(r["odd_heads"] - 1 / 3) for r in rows)
    even = max(abs(r["even_heads"] - 2 / 3) for r in rows)
    ok = agg < 0.01 and odd < 0.02 and even < 0.02 and secs < 5
    criterion(1, "alternating coins", ok,
              f"max|r-1/2|={agg:.4f} odd={odd:.4f} even={even:.4f} {secs:.1f}s")


def test_weird_coin(criterion, tmp_path):
    s, secs = timed({"scenario": "weird-coin", "out_dir": str(tmp_path)})
    rows = s["results"]["per_seed"]
    assert len(rows) == 5 and s["config"]["horizon"] == 2 ** 22 and s["config"]["burn_in"] == 2 ** 18
    lo = max(abs(r["tail_min"] - 4 / 9) for r in rows)
    hi = max(abs(r["tail_max"] - 0.5) for r in rows)
    ok = lo < 0.02 and hi < 0.02 and secs < 60
    criterion(2, "weird coin tail range", ok, f"max|min-4/9|={lo:.4f} max|max-1/2|={hi:.4f} {secs:.1f}s")


def test_builder_paths(criterion, tmp_path):
    s, secs = timed({"scenario": "builder-paths", "out_dir": str(tmp_path)})
    assert s["config"]["horizon"] == 10 ** 7
    paths = s["results"]["paths"]
    assert set(paths) == {"singleton", "segment", "v-shape"}
    haus = {k: v["hausdorff"] for k, v in paths.items()}
    viol = sum(v["excursion_violations"] for v in paths.values())
    ok = max(haus.values()) < 0.05 and viol == 0 and secs < 120
    criterion(3, "builder tail clouds and excursion bound", ok,
              " ".join(f"{k}={v:.4f}" for k, v in haus.items()) + f" violations={viol} {secs:.1f}s")


def test_slow_estimator_reaches_both_ends(criterion, tmp_path):
    s, secs = timed({"scenario": "slow-divergence", "out_dir": str(tmp_path)})
    r = s["results"]
    assert r["window"] == [10 ** 6, 10 ** 7]
    a, b = r["interval"]
    L = b - a
    lo, up = r["lower_in_window"], r["upper_in_window"]
    # each trace must come within 0.05 L of both endpoints inside the window
    reach = {name: (t["to_low_end"] <= 0.05 * L, t["to_high_end"] <= 0.05 * L)
             for name, t in (("lower", lo), ("upper", up))}
    ok = any(all(v) for v in reach.values())
    criterion(4, "windowed estimator does not collapse", ok,
              f"0.05L={0.05 * L:.5f} lower->a={lo['to_low_end']:.5f} lower->b={lo['to_high_end']:.5f} "
              f"upper->a={up['to_low_end']:.5f} upper->b={up['to_high_end']:.5f} "
              f"spans={r['span_lower']:.2f}L,{r['span_upper']:.2f}L {secs:.1f}s")


def test_concentration_grid(criterion, tmp_path):
    s, secs = timed({"scenario": "concentration", "out_dir": str(tmp_path)})
    cells = s["results"]["cells"]
    # 2 values of k, 2 streams, 2 n, 3 rule counts, 2 eps
    assert len(cells) == 48 and all(c["trials"] == 1000 and c["m"] == c["n"] // 2 for c in cells)
    bad = [c for c in cells if c["frequency"] > c["bound"] + 3 * c["stderr"]]
    worst = max(c["frequency"] - c["bound"] for c in cells)
    criterion(5, "concentration bound", not bad and secs < 600,
              f"{len(cells)} cells, {len(bad)} above bound, worst freq-bound={worst:.3f} {secs:.1f}s")


def test_exact_identities(criterion):
    rng = np.random.default_rng(2024)
    fails = {}

    n_bad = 0
    for _ in range(10_000):
        k = int(rng.integers(2, 9))
        o = rng.integers(0, k, int(rng.integers(1, 200)))
        g = rng.normal(size=k) * 10
        n_bad += abs(gamble_average(FreqTracker(k).extend(o), g) - g[o].mean()) >= 1e-12
    fails["gamble"] = n_bad

    n_bad = 0
    for _ in range(2000):
        k = int(rng.integers(2, 7))
        pts = rng.dirichlet(np.ones(k), size=4)
        u, v = (int(x) for x in rng.integers(1, 3000, 2))
        a, b = pts[rng.integers(0, 4, u)], pts[rng.integers(0, 4, v)]
        got = concat_average(a.mean(axis=0), u, b.mean(axis=0), v).weights
        n_bad += np.abs(got - np.concatenate([a, b]).mean(axis=0)).max() >= 1e-12
    fails["concat"] = n_bad

    n_bad = 0
    for length in (10, 1000, 100_000):
        for kappa in ("sqrt", "pow:0.8", "frac:0.5"):
            avg = gamble_running_mean(rng.integers(0, 3, length), rng.normal(size=3))
            lo, hi = wf_trace(avg, kappa)
            ns = range(1, length + 1) if length <= 1000 else rng.integers(1, length + 1, 400)
            n_bad += sum((lo[n - 1], hi[n - 1]) != wf_bruteforce(avg, kappa, int(n)) for n in ns)
    fails["wf"] = n_bad

    n_bad = 0
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        M = CredalSet(rng.dirichlet(np.ones(k), size=int(rng.integers(1, 9))))
        q = rng.dirichlet(np.ones(len(M.points)))
        v = int(rng.integers(1, 10_000))
        n_bad += distance(M.induced(q), caratheodory_approximate(M, q, v).average) > 4 * (k + 1) / v
    fails["caratheodory"] = n_bad

    n_bad = 0
    for size, n in itertools.product(range(1, 6), range(0, 6)):
        for _ in range(4):
            k = int(rng.integers(2, 5))
            M = rng.dirichlet(np.ones(k), size=size)
            rect = [np.flatnonzero(rng.random(k) < 0.6).tolist() for _ in range(n)]
            n_bad += abs(rectangle_lower_prob(M, rect) - rectangle_lower_prob_bruteforce(M, rect)) >= 1e-12
            n_bad += not all(shift_rectangle_invariance(M, rect, sh) for sh in range(4))
    fails["rectangle+shift"] = n_bad

    criterion(6, "exact identities", sum(fails.values()) == 0,
              " ".join(f"{k}={v}" for k, v in fails.items()))


def test_axiom_suites(criterion):
    rng = np.random.default_rng(77)
    p_bad = t_bad = p_checked = t_checked = 0
    for i in range(200):
        k = 2 + i % 7  # cycles through k = 2..8
        M = rng.dirichlet(np.ones(k) * rng.choice([0.3, 1.0, 3.0]), size=int(rng.integers(1, 6)))
        rep = check_p_axioms(M)
        p_bad += rep.total_violations
        p_checked += sum(rep.checked.values())
    for i in range(100):
        k = 2 + i % 5  # k = 2..6
        M = rng.dirichlet(np.ones(k) * rng.choice([0.3, 1.0, 3.0]), size=int(rng.integers(1, 6)))
        rep = check_t_axioms(M)
        t_bad += rep.total_violations
        t_checked += sum(rep.checked.values())
    criterion(7, "axiom suites", p_bad == 0 and t_bad == 0,
              f"P: {p_checked} checks {p_bad} violations, T: {t_checked} checks {t_bad} violations")


RERUN_CONFIGS = [
    {"scenario": "alternating-coins", "seeds": [1, 2], "horizon": 20_000},
    {"scenario": "weird-coin", "seeds": [3], "horizon": 2 ** 16, "burn_in": 2 ** 12},
    {"scenario": "builder-paths", "horizon": 200_000, "burn_in": 20_000},
    {"scenario": "slow-divergence", "horizon": 200_000},
    {"scenario": "concentration", "params": {"trials": 50, "ns": [1000]}},
    {"scenario": "hidden-heterogeneity", "horizon": 20_000},
    {"scenario": "coherence-axioms", "params": {"p_sets": 10, "t_sets": 5}},
    {"scenario": "cover-interleave", "horizon": 50_000},
]


def test_reruns_are_byte_identical(criterion, tmp_path):
    differing, compared = [], 0
    for cfg in RERUN_CONFIGS:
        dirs = [tmp_path / f"{cfg['scenario']}_{i}" for i in range(2)]
        for d in dirs:
            run_scenario({**cfg, "out_dir": str(d)})
        files = sorted(p.name for p in dirs[0].glob("*.csv"))
        assert files, cfg
        assert files == sorted(p.name for p in dirs[1].glob("*.csv"))
        for f in files:
            compared += 1
            if (dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes():
                differing.append(f)
    criterion(8, "byte-identical reruns", not differing,
              f"{compared} CSVs over {len(RERUN_CONFIGS)} scenarios, differing: {differing or 'none'}")
