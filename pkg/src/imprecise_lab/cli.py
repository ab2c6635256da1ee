"""``imprecise-lab`` command line.

Exit codes: 0 when every pass flag is true, 1 when any check fails,
2 on a configuration or input error.

Scenario settings are resolved in increasing precedence: preset defaults,
then the ``--config`` JSON document, then explicit command-line flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .builder import build_slow_variant, new_builder
from .csvio import read_csv, write_csv
from .frequency import apparent_divergence, export_timeseries, gamble_running_mean, wf_trace
from .generator import sample
from .imprecision import check_p_axioms, check_t_axioms
from .scenarios import ConfigError, list_scenarios, make_schedule, run_scenario, validate
from .schedule import ScheduleError, parse_window
from .selection import BudgetExhausted, RuleError, SubseqTracker, parse_rule, theoretical_mean
from .simplex import CredalSet, SimplexError, TargetPath
from .streams import (
    ArrayStream,
    ConstantStream,
    PeriodicStream,
    WeirdCoinStream,
    alternating_coins,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class InputError(ValueError):
    pass


def _load_json(text: str):
    """Inline JSON or ``@file``/path to a JSON file."""
    p = Path(text[1:] if text.startswith("@") else text)
    if text.startswith("@") or (p.suffix == ".json" and p.exists()):
        return json.loads(p.read_text())
    return json.loads(text)


def _credal(text: str) -> CredalSet:
    if text.startswith("vertices:"):
        return CredalSet.simplex_vertices(int(text.split(":", 1)[1]))
    return CredalSet(_load_json(text))


def parse_stream(spec: str):
    """``alternating``, ``weird``, ``iid:p0,p1,...``, ``periodic:JSON`` or ``measures:FILE.csv``."""
    kind, _, arg = spec.partition(":")
    if kind == "alternating":
        return alternating_coins()
    if kind == "weird":
        return WeirdCoinStream()
    if kind == "iid":
        return ConstantStream([float(x) for x in arg.split(",")])
    if kind == "periodic":
        return PeriodicStream(_load_json(arg))
    if kind == "measures":
        cols, data = read_csv(arg)
        w = [j for j, c in enumerate(cols) if c.startswith("w")]
        if "member" not in cols or not w:
            raise InputError(f"{arg}: expected columns index, member, w0, ...")
        pts, members = np.unique(data[:, w], axis=0, return_inverse=True)
        return ArrayStream(CredalSet(pts), members.ravel())
    raise InputError(f"unknown stream {spec!r}")


def _outcomes(path: str) -> np.ndarray:
    cols, data = read_csv(path)
    if "outcome" not in cols:
        raise InputError(f"{path}: no outcome column")
    return data[:, cols.index("outcome")].astype(np.int64)


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, default=lambda x: x.tolist() if hasattr(x, "tolist") else str(x))
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    print(text)


# ---------------------------------------------------------------- commands
def cmd_build_seq(a) -> int:
    credal = _credal(a.credal)
    path = TargetPath(credal, _load_json(a.path))
    sched = {"kind": a.kind, "eps_rate": a.eps_rate, "delta_rate": a.delta_rate}
    schedule = make_schedule(credal.k, _load_json(a.schedule) if a.schedule else sched)
    if a.resume:
        from .builder import SequenceBuilder

        b = SequenceBuilder.loads(Path(a.resume).read_text())
    elif a.slow:
        b = build_slow_variant(credal, path, schedule, window=a.kappa)
    else:
        b = new_builder(credal, path, schedule)
    # take exactly n so a snapshot resumes at the next unwritten index
    _write_builder(b, a.out, a.n)
    if a.snapshot:
        Path(a.snapshot).write_text(b.dumps())
    print(json.dumps({"n": b.n, "iteration": b.iteration, "running_average": b.running_average.tolist()}))
    return EXIT_PASS


def _write_builder(b, out, n):
    start = b.n
    idx = b.take(n)
    pts = b.credal.points[idx]
    cols = ["index", "member"] + [f"w{j}" for j in range(pts.shape[1])]
    data = [np.arange(start + 1, start + n + 1), idx] + [pts[:, j] for j in range(pts.shape[1])]
    write_csv(out, cols, data, ["%d", "%d"] + ["%.17g"] * pts.shape[1])


def cmd_simulate(a) -> int:
    stream = parse_stream(a.stream)
    seq = sample(stream, a.seed, a.n, start=a.start, trial=a.trial)
    seq.to_csv(a.out)
    print(json.dumps({"n": len(seq), "k": seq.k, "seed": seq.seed,
                      "frequencies": (np.bincount(seq.outcomes, minlength=seq.k) / max(len(seq), 1)).tolist()}))
    return EXIT_PASS


def cmd_analyze(a) -> int:
    o = _outcomes(a.outcomes)
    k = a.k or int(o.max()) + 1
    g = np.array([float(x) for x in a.gamble.split(",")]) if a.gamble else np.eye(k)[0]
    if g.size != k:
        raise InputError(f"gamble has {g.size} values, expected {k}")
    export_timeseries(Path(a.out_dir) / "timeseries.csv", o, k, gamble=g, kappa=a.kappa, stride=a.stride)
    lower, upper = wf_trace(gamble_running_mean(o, g), a.kappa)
    summary = {"n": int(o.size), "k": k, "final_frequencies": (np.bincount(o, minlength=k) / o.size).tolist(),
               "final_gamble_average": float(gamble_running_mean(o, g)[-1]),
               "wf_lower": float(lower[-1]), "wf_upper": float(upper[-1]), "kappa": parse_window(a.kappa).spec}
    if a.divergence_eps is not None:
        summary["apparent_divergence"] = apparent_divergence(o, k, a.divergence_start, a.divergence_eps)
    _dump(summary, str(Path(a.out_dir) / "analysis.json"))
    return EXIT_PASS


def cmd_select(a) -> int:
    o = _outcomes(a.outcomes)
    stream = parse_stream(a.stream) if a.stream else None
    k = stream.credal.k if stream else (a.k or int(o.max()) + 1)
    rows = []
    for spec in a.rule:
        rule = parse_rule(spec, stream)
        t = SubseqTracker(k, rule)
        t.extend(o)
        row = {"rule": rule.spec, "selected": t.selected,
               "frequency": (t.counts / t.selected).tolist() if t.selected else None}
        if stream is not None and t.selected:
            row["theoretical"] = theoretical_mean(stream, rule, o.size).weights.tolist()
            row["D"] = float(np.abs(np.array(row["frequency"]) - row["theoretical"]).max())
        row["in_m_hat"] = t.selected >= a.m
        rows.append(row)
    if a.out:
        sel = [(i, r) for i, r in enumerate(rows) if r["frequency"] is not None]
        write_csv(a.out, ["rule_rank", "selected"] + [f"f{j}" for j in range(k)],
                  [[i for i, _ in sel], [r["selected"] for _, r in sel]]
                  + [[r["frequency"][j] for _, r in sel] for j in range(k)],
                  ["%d", "%d"] + ["%.17g"] * k)
    _dump({"n": int(o.size), "m": a.m, "rules": rows}, None)
    return EXIT_PASS


def cmd_coherence(a) -> int:
    M = _credal(a.credal).points
    reports = []
    if a.suite in ("p", "both"):
        reports.append(check_p_axioms(M))
    if a.suite in ("t", "both"):
        reports.append(check_t_axioms(M))
    _dump({"ok": all(r.ok for r in reports), "reports": [r.to_dict() for r in reports]}, a.out)
    return EXIT_PASS if all(r.ok for r in reports) else EXIT_FAIL


def _set_value(text: str):
    key, _, val = text.partition("=")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def scenario_config(a) -> dict:
    """Merge ``--config`` with explicit flags (flags win)."""
    raw = _load_json(a.config) if a.config else {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if a.name:
        raw["scenario"] = a.name
    for flag in ("seeds", "horizon", "burn_in", "kappa", "stride", "workers", "out_dir"):
        val = getattr(a, flag, None)
        if val is not None:
            raw[flag] = val
    if getattr(a, "rule", None):
        raw["rules"] = a.rule
    params = dict(raw.get("params", {}))
    for item in getattr(a, "set", None) or []:
        k, v = _set_value(item)
        params[k] = v
    if params:
        raw["params"] = params
    return raw


def cmd_scenario(a) -> int:
    summary = run_scenario(scenario_config(a))
    if not a.quiet:
        print(json.dumps({"scenario": summary["scenario"], "passed": summary["passed"],
                          "out_dir": summary["config"]["out_dir"]}))
    return EXIT_PASS if summary["passed"] else EXIT_FAIL


def cmd_list(a) -> int:
    for s in list_scenarios():
        print(f"{s['name']:<22} {s['description']}\n{'':<22} reproduces: {s['anchor']}")
    return EXIT_PASS


def cmd_validate(a) -> int:
    cfg = validate(scenario_config(a))
    print(json.dumps({"valid": True, "config": cfg.to_dict()}, indent=2))
    return EXIT_PASS


# ------------------------------------------------------------------ parser
def _scenario_flags(p):
    p.add_argument("--config", help="JSON config document (inline, path, or @path)")
    p.add_argument("--seeds", type=lambda s: [int(x) for x in s.split(",") if x.strip()],
                   help="comma-separated seeds")
    p.add_argument("--horizon", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--kappa")
    p.add_argument("--stride", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--rule", action="append", help="selection rule (repeatable)")
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a preset parameter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="imprecise-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"imprecise-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-seq", help="emit a builder measure stream to CSV")
    p.add_argument("--credal", default="vertices:3", help="JSON list of measures or vertices:K")
    p.add_argument("--path", required=True, help="JSON list of waypoint weights over the credal set")
    p.add_argument("--kind", default="geometric", choices=["geometric", "power"])
    p.add_argument("--eps-rate", type=float, default=0.999)
    p.add_argument("--delta-rate", type=float, default=0.8)
    p.add_argument("--schedule", help="schedule JSON (overrides --kind/--eps-rate/--delta-rate)")
    p.add_argument("--slow", action="store_true", help="use the slowed variant")
    p.add_argument("--kappa", default="sqrt")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snapshot", help="write the builder state here afterwards")
    p.add_argument("--resume", help="continue from a snapshot file")
    p.set_defaults(fn=cmd_build_seq)

    p = sub.add_parser("simulate", help="draw outcomes from a measure stream")
    p.add_argument("--stream", required=True, help="alternating | weird | iid:p,... | periodic:JSON | measures:FILE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="frequency and windowed min/max CSVs from outcomes")
    p.add_argument("outcomes")
    p.add_argument("--k", type=int)
    p.add_argument("--gamble", help="comma-separated gamble values (default: indicator of outcome 0)")
    p.add_argument("--kappa", default="sqrt")
    p.add_argument("--stride", type=int, default=1000)
    p.add_argument("--divergence-eps", type=float)
    p.add_argument("--divergence-start", type=int, default=1)
    p.add_argument("--out", dest="out_dir", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("select", help="relative frequencies along selection rules")
    p.add_argument("outcomes")
    p.add_argument("--rule", action="append", required=True)
    p.add_argument("--stream", help="measure stream, enables theoretical means and near: rules")
    p.add_argument("--k", type=int)
    p.add_argument("-m", type=int, default=1000, help="minimum selections for the M-hat estimate")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("coherence", help="envelope and typicality axiom reports for a credal set")
    p.add_argument("--credal", required=True)
    p.add_argument("--suite", choices=["p", "t", "both"], default="both")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_coherence)

    p = sub.add_parser("scenario", help="run a preset scenario")
    p.add_argument("name", nargs="?")
    _scenario_flags(p)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_scenario)

    p = sub.add_parser("list", help="list scenario presets")
    p.set_defaults(fn=cmd_list)

    p = sub.add_parser("validate", help="check a scenario config without running it")
    p.add_argument("name", nargs="?")
    _scenario_flags(p)
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "field": exc.field, "message": exc.message}), file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, SimplexError, ScheduleError, RuleError, BudgetExhausted,
            json.JSONDecodeError, FileNotFoundError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
