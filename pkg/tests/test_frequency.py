import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imprecise_lab.frequency import (
    AverageHistory,
    FreqTracker,
    all_events,
    apparent_convergence,
    apparent_divergence,
    export_timeseries,
    gamble_average,
    gamble_running_mean,
    hausdorff_to_polyline,
    running_frequencies,
    tail_cluster_cloud,
    wf_bruteforce,
    wf_estimate,
    wf_trace,
)
from imprecise_lab.csvio import read_csv
from imprecise_lab.generator import sample
from imprecise_lab.simplex import CredalSet, TargetPath
from imprecise_lab.streams import alternating_coins


def test_tracker_examples():
    t = FreqTracker(2).update(0)
    assert t.freq().tolist() == [1.0, 0.0]
    t = FreqTracker(2)
    t.counts[:] = [1, 1]
    t.n = 2
    assert t.update(1).freq().weights == pytest.approx([1 / 3, 2 / 3])
    big = FreqTracker(3).extend(np.random.default_rng(0).integers(0, 3, 10 ** 6))
    assert big.n == 10 ** 6 and big.counts.sum() == big.n
    with pytest.raises(ValueError):
        FreqTracker(2).update(2)
    with pytest.raises(ValueError):
        FreqTracker(2).freq()


def test_gamble_average_examples():
    t = FreqTracker(2).extend([0, 1, 0])
    assert gamble_average(t, [2, -1]) == pytest.approx(1.0, abs=1e-15)
    assert gamble_running_mean([0, 1, 0], [2, -1])[-1] == pytest.approx(1.0, abs=1e-15)
    assert gamble_average(t, [1, 0]) == pytest.approx(2 / 3)
    assert gamble_average(t, [4.5, 4.5]) == pytest.approx(4.5)
    with pytest.raises(ValueError):
        gamble_average(FreqTracker(2), [1, 0])


@given(st.integers(2, 8), st.integers(1, 2000), st.integers(0, 2 ** 32 - 1))
def test_gamble_average_identity(k, n, seed):
    rng = np.random.default_rng(seed)
    o = rng.integers(0, k, n)
    g = rng.normal(size=k) * 10
    t = FreqTracker(k).extend(o)
    assert abs(gamble_average(t, g) - g[o].mean()) < 1e-12


def test_wf_examples():
    a = gamble_running_mean([1, 0, 1, 0], [0, 1])
    assert a.tolist() == pytest.approx([1, 0.5, 2 / 3, 0.5])
    h = AverageHistory("sqrt")
    for x in a:
        h.push(x)
    assert h.window == (2, 4)
    assert wf_estimate(h) == pytest.approx((0.5, 2 / 3))
    ident = AverageHistory("identity")
    for x in a:
        ident.push(x)
    assert wf_estimate(ident) == (a[-1], a[-1])
    const = AverageHistory()
    for _ in range(50):
        const.push_value(0.3)
    assert wf_estimate(const) == pytest.approx((0.3, 0.3))


def test_wf_estimate_argument_checks():
    h = AverageHistory("sqrt")
    h.push(0.5)
    with pytest.raises(ValueError):
        wf_estimate(h, kappa="identity")
    with pytest.raises(ValueError):
        wf_estimate(h, n=3)
    with pytest.raises(ValueError):
        AverageHistory().estimate()


@given(st.lists(st.integers(0, 1), min_size=1, max_size=400), st.sampled_from(["sqrt", "pow:0.7", "frac:0.5", "log"]))
def test_wf_incremental_equals_bruteforce(bits, kappa):
    a = gamble_running_mean(bits, [0.0, 1.0])
    h = AverageHistory(kappa)
    lo, hi = wf_trace(a, kappa)
    for n, x in enumerate(a, start=1):
        h.push(x)
        want = wf_bruteforce(a, kappa, n)
        assert h.estimate() == want
        assert (lo[n - 1], hi[n - 1]) == want
        assert 0 <= want[0] <= a[n - 1] <= want[1] <= 1


def test_wf_trace_long_sequence_bruteforce():
    rng = np.random.default_rng(7)
    a = gamble_running_mean(rng.integers(0, 3, 100_000), [0.5, -1.0, 2.0])
    lo, hi = wf_trace(a, "sqrt")
    for n in list(range(1, 200)) + rng.integers(1, 100_001, 300).tolist():
        assert (lo[n - 1], hi[n - 1]) == wf_bruteforce(a, "sqrt", n)


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=200))
def test_wf_window_widening_monotone(values):
    a = np.cumsum(values) / np.arange(1, len(values) + 1)
    n = len(values)
    wide = wf_bruteforce(a, "frac:0.1", n)
    narrow = wf_bruteforce(a, "frac:0.9", n)
    assert wide[0] <= narrow[0] and wide[1] >= narrow[1]


def test_apparent_convergence_examples():
    o = [1, 0, 1, 0]
    assert apparent_convergence(o, [1], 2, 2, 0.1) is False
    assert apparent_convergence(o, [1], 2, 2, 1.5) is True
    assert apparent_convergence([1] * 20, [1], 2, 1, 1e-9) is True
    assert apparent_divergence([1] * 20, 2, 1, 1e-9) is False
    assert apparent_divergence(o, 2, 2, 0.1) is True
    with pytest.raises(ValueError):
        apparent_convergence(o, [1], 2, 5, 0.1)


def test_all_events_enumeration():
    ev = all_events(3)
    assert ev.shape == (6, 3)
    assert not np.any(ev.all(axis=1)) and np.all(ev.any(axis=1))
    assert all_events(12).shape[0] == 4094
    with pytest.raises(ValueError):
        all_events(13)


@given(st.lists(st.integers(0, 2), min_size=2, max_size=300), st.floats(0.01, 0.5))
def test_apparent_divergence_is_negation_over_events(o, eps):
    start = 1 + len(o) // 3
    conv = [apparent_convergence(o, np.flatnonzero(e).tolist(), 3, start, eps) for e in all_events(3)]
    assert apparent_divergence(o, 3, start, eps) == (not all(conv))


def test_tail_cloud_examples():
    # converging sequence collapses to its limit
    a = 0.5 + 1 / np.arange(1, 10 ** 5 + 1)
    res = tail_cluster_cloud(a, 10 ** 4, reference=[0.5])
    assert res.hausdorff < 1e-3
    o = sample(alternating_coins(), 1, 10 ** 5).outcomes
    heads = running_frequencies(o, 2)[:, 0]
    assert tail_cluster_cloud(heads, 10 ** 4, reference=[0.5]).hausdorff < 0.01
    assert len(tail_cluster_cloud(heads, 1).points) <= 10_004
    with pytest.raises(ValueError):
        tail_cluster_cloud(heads, 10 ** 6)


def test_hausdorff_against_known_geometry():
    M = CredalSet.simplex_vertices(2)
    path = TargetPath(M, [[0.4, 0.6], [0.6, 0.4]])
    pts = np.array([[0.5, 0.5]])
    # the farther endpoint is at distance 0.1 * sqrt(2)
    assert hausdorff_to_polyline(pts, path) == pytest.approx(0.1 * np.sqrt(2), abs=1e-3)
    line = path.sample(1e-4)
    assert hausdorff_to_polyline(line, path) < 1e-3


def test_export_timeseries(tmp_path):
    o = sample(alternating_coins(), 3, 10_500).outcomes
    cols, data = read_csv(export_timeseries(tmp_path / "t.csv", o, 2, stride=1000))
    assert cols == ["n", "r0", "r1", "wf_lower", "wf_upper"]
    assert data[:, 0].astype(int).tolist() == list(range(1000, 10_001, 1000)) + [10_500]
    assert np.allclose(data[:, 1] + data[:, 2], 1)
    assert np.all(data[:, 3] <= data[:, 1]) and np.all(data[:, 1] <= data[:, 4])
