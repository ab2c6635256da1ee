import json

import numpy as np
import pytest

from imprecise_lab.cli import main
from imprecise_lab.csvio import header_line, read_csv, write_csv
from imprecise_lab.scenarios import ConfigError, list_scenarios, run_scenario, validate


def test_catalog():
    cat = list_scenarios()
    assert len(cat) >= 5
    names = {c["name"] for c in cat}
    assert {"alternating-coins", "weird-coin", "builder-paths", "slow-divergence", "concentration",
            "hidden-heterogeneity", "coherence-axioms"} <= names
    assert all(c["anchor"] for c in cat)


def test_validation_errors():
    with pytest.raises(ConfigError) as e:
        validate({"scenario": "alternating-coins", "seeds": []})
    assert e.value.field == "seeds"
    with pytest.raises(ConfigError) as e:
        validate({"scenario": "wierd-coin"})
    assert "weird-coin" in str(e.value)
    cases = [({"seeds": [-1]}, "seeds[0]"), ({"horizon": 0}, "horizon"), ({"kappa": "cube"}, "kappa"),
             ({"rules": ["mod:0,1"]}, "rules[0]"), ({"credal": [[0.5, 0.6]]}, "credal"),
             ({"horizen": 5}, "horizen"), ({"burn_in": 10 ** 9}, "burn_in"),
             ({"credal": [[1, 0], [0, 1]], "path": [[0.5, 0.6]]}, "path"),
             ({"schedule": {"kind": "geometric", "eps_rate": 2}}, "schedule")]
    for extra, field in cases:
        with pytest.raises(ConfigError) as e:
            validate({"scenario": "alternating-coins", **extra})
        assert e.value.field == field, extra


def test_defaults_and_overrides():
    cfg = validate({"scenario": "weird-coin", "seeds": [7], "params": {"tol": 0.03}})
    assert cfg.horizon == 2 ** 22 and cfg.seeds == [7] and cfg.params["tol"] == 0.03
    assert validate({"scenario": "alternating-coins"}).seeds == list(range(1, 21))


def test_run_writes_bundle_and_is_byte_identical(tmp_path):
    cfg = {"scenario": "alternating-coins", "seeds": [1, 2], "horizon": 20_000, "stride": 500}
    s1 = run_scenario({**cfg, "out_dir": str(tmp_path / "a")})
    s2 = run_scenario({**cfg, "out_dir": str(tmp_path / "b")})
    assert s1["passed"] and "timestamp" in s1["meta"]
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert files == ["alternating_seed1.csv", "alternating_seed2.csv", "alternating_summary.csv"]
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    strip = lambda s: {k: v for k, v in s.items() if k not in ("meta", "config")}
    assert strip(s1) == strip(s2)
    saved = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert saved["passed"] is True and saved["results"]["per_seed"][0]["seed"] == 1


def test_parallel_workers_match_serial(tmp_path):
    cfg = {"scenario": "weird-coin", "seeds": [1, 2], "horizon": 2 ** 16, "burn_in": 2 ** 12, "stride": 4096}
    a = run_scenario({**cfg, "out_dir": str(tmp_path / "s")})
    b = run_scenario({**cfg, "out_dir": str(tmp_path / "p"), "workers": 2})
    assert a["results"] == b["results"]
    for f in (tmp_path / "s").glob("*.csv"):
        assert f.read_bytes() == (tmp_path / "p" / f.name).read_bytes()


def test_small_presets_pass(tmp_path):
    for cfg in ({"scenario": "hidden-heterogeneity"},
                {"scenario": "coherence-axioms", "params": {"p_sets": 10, "t_sets": 3}},
                {"scenario": "cover-interleave", "horizon": 100_000},
                {"scenario": "concentration", "params": {"trials": 100, "ns": [1000], "sizes": [1, 8]}}):
        s = run_scenario({**cfg, "out_dir": str(tmp_path / cfg["scenario"])})
        assert s["passed"], cfg
        assert list((tmp_path / cfg["scenario"]).glob("*.csv"))


def test_summary_contains_acceptance_statistics(tmp_path):
    s = run_scenario({"scenario": "builder-paths", "horizon": 50_000, "burn_in": 5000,
                      "params": {"paths": ["segment"]}, "out_dir": str(tmp_path)})
    r = s["results"]["paths"]["segment"]
    assert {"hausdorff", "to_path", "from_path", "excursion_violations", "pass"} <= set(r)
    assert r["excursion_violations"] == 0
    cols, data = read_csv(tmp_path / "builder_segment_cloud.csv")
    assert cols == ["n", "r0", "r1", "r2"] and np.allclose(data[:, 1:].sum(axis=1), 1)


def test_csv_header_and_roundtrip(tmp_path):
    p = write_csv(tmp_path / "x" / "y.csv", ["i", "v"], [[1, 2], [0.1, 1 / 3]], ["%d", "%.17g"])
    lines = p.read_text().splitlines()
    assert lines[0] == header_line() and lines[0].startswith("# imprecise-lab v")
    assert "schema=1" in lines[0]
    cols, data = read_csv(p)
    assert data[1, 1] == 1 / 3
    with pytest.raises(ValueError):
        write_csv(tmp_path / "z.csv", ["a", "b"], [[1], [1, 2]], ["%d", "%d"])


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["list"]) == 0
    assert main(["scenario", "alternating-coins", "--seeds", "", "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["field"] == "seeds"
    assert main(["scenario", "alternating-coin"]) == 2
    assert main(["scenario", "alternating-coins", "--seeds", "1,2", "--horizon", "20000",
                 "--out", str(tmp_path / "ok"), "--quiet"]) == 0
    # an unattainable tolerance makes the preset fail
    assert main(["scenario", "alternating-coins", "--seeds", "1", "--horizon", "2000",
                 "--set", "tol_aggregate=1e-9", "--out", str(tmp_path / "bad"), "--quiet"]) == 1
    assert main(["coherence", "--credal", "[[0.2,0.8],[0.6,0.4]]", "--suite", "p"]) == 0
    assert main(["coherence", "--credal", "[[0.2,0.9]]"]) == 2


def test_cli_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "weird-coin", "horizon": 1000, "seeds": [4]}))
    assert main(["validate", "--config", str(cfg), "--horizon", "2048", "--burn-in", "16"]) == 0
    out = json.loads(capsys.readouterr().out)["config"]
    assert out["horizon"] == 2048 and out["seeds"] == [4] and out["burn_in"] == 16
    assert out["params"]["tol"] == 0.02


def test_cli_build_resume_matches_uninterrupted(tmp_path):
    path = "[[0.4,0.3,0.3],[0.3,0.3,0.4]]"
    assert main(["build-seq", "--path", path, "-n", "2345", "--out", str(tmp_path / "all.csv")]) == 0
    assert main(["build-seq", "--path", path, "-n", "1000", "--out", str(tmp_path / "a.csv"),
                 "--snapshot", str(tmp_path / "s.json")]) == 0
    assert main(["build-seq", "--path", path, "-n", "1345", "--out", str(tmp_path / "b.csv"),
                 "--resume", str(tmp_path / "s.json")]) == 0
    rows = lambda f: (tmp_path / f).read_text().splitlines()[2:]
    assert rows("a.csv") + rows("b.csv") == rows("all.csv")
    assert rows("b.csv")[0].startswith("1001,")


def test_cli_pipeline(tmp_path, capsys):
    m = tmp_path / "m.csv"
    assert main(["build-seq", "--path", "[[0.4,0.3,0.3],[0.3,0.3,0.4]]", "-n", "3000", "--out", str(m),
                 "--snapshot", str(tmp_path / "s.json")]) == 0
    assert main(["build-seq", "--path", "[[0.4,0.3,0.3],[0.3,0.3,0.4]]", "-n", "1000",
                 "--out", str(tmp_path / "m2.csv"), "--resume", str(tmp_path / "s.json")]) == 0
    _, d2 = read_csv(tmp_path / "m2.csv")
    assert d2[0, 0] == 3001
    o = tmp_path / "o.csv"
    assert main(["simulate", "--stream", f"measures:{m}", "--seed", "2", "-n", "3000", "--out", str(o)]) == 0
    assert main(["simulate", "--stream", "alternating", "--seed", "2", "-n", "20000",
                 "--out", str(tmp_path / "a.csv")]) == 0
    capsys.readouterr()
    assert main(["analyze", str(tmp_path / "a.csv"), "--out", str(tmp_path / "an"), "--stride", "100"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert abs(summary["final_frequencies"][0] - 0.5) < 0.02
    assert summary["wf_lower"] <= summary["final_gamble_average"] <= summary["wf_upper"]
    assert main(["select", str(tmp_path / "a.csv"), "--stream", "alternating", "--rule", "mod:2,1",
                 "--rule", "mod:2,0", "--out", str(tmp_path / "sel.csv")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert abs(res["rules"][0]["frequency"][0] - 1 / 3) < 0.02
    assert res["rules"][0]["theoretical"][0] == pytest.approx(1 / 3)
    assert main(["simulate", "--stream", "nonsense", "-n", "5", "--out", str(tmp_path / "x.csv")]) == 2
