"""Batch scenario runner.

    nmqip run CONFIG [--override key=value ...]
    nmqip validate CONFIG [--override key=value ...]

Relative output paths resolve against the config file's directory.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .dynamics import canonical_rates, logical_map_family, propagate
from .exceptions import LeakageError, NumericalError
from .linalg import X, partial_trace
from .measures import BlpSearchConfig, blp_measure, closed_form_R, decay_rate_measure, rate_grid, rhp_measure
from .models import build_model
from .qem import cost_after_qec, sweep_orthogonal_pairs, unbiased_bound

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
TELEPORT_GUARD = 0.05  # default first time, in units of 1/gamma

CSV_COLUMNS = {
    "three_qubit": ["t", "f_numeric", "f_analytic", "rate_numeric", "rate_analytic"],
    "teleportation": ["t", "fidelity_to_psi", "rate_numeric", "rate_analytic"],
    "squeezed_cat": ["t", "x_expectation_numeric", "x_expectation_analytic", "rate_numeric", "rate_analytic"],
}
PARAM_DEFAULTS = {
    "three_qubit": {"p": 0.1, "gamma": 1.0},
    "teleportation": {"gamma": 1.0, "psi": [[1, 0], [0, 0]]},
    "squeezed_cat": {"alpha": 2.0, "r": 1.3, "Lambda": 1.0, "gamma": 1.0, "n_trunc": 40},
}
CONVENTIONS = {
    "vectorization": "column-stacking, vec(A X B) = (B^T kron A) vec(X)",
    "choi": "normalized (trace one), channel on the first factor",
    "rates": "jump operators are unitary Paulis (Pauli-normalized)",
}

_number = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["scenario", "times"],
    "additionalProperties": False,
    "properties": {
        "scenario": {"enum": sorted(CSV_COLUMNS)},
        "params": {"type": "object"},
        "times": {
            "type": "object",
            "required": ["stop"],
            "additionalProperties": False,
            "properties": {"start": {**_number, "minimum": 0}, "stop": _number,
                           "steps": {"type": "integer", "minimum": 2}},
        },
        "measures": {"type": "array", "items": {"enum": ["rhp", "blp", "decay_rate"]}, "uniqueItems": True},
        "measure_grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"points": {"type": "integer", "minimum": 2}, "spacing": {"enum": ["linear", "log"]},
                           "blp_directions": {"type": "integer", "minimum": 6}},
        },
        "qem": {
            "type": "object",
            "required": ["epsilon", "delta"],
            "additionalProperties": False,
            "properties": {"epsilon": {**_number, "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                           "delta": {**_number, "exclusiveMinimum": 0}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"trajectory_csv": {"type": "string"}, "summary_json": {"type": "string"}},
        },
    },
}

_measure = {
    "type": "object",
    "required": ["kind", "value", "window", "diagnostics"],
    "properties": {"kind": {"enum": ["RHP", "BLP", "DECAY_RATE"]}, "value": {**_number, "minimum": 0},
                   "window": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                   "diagnostics": {"type": "object"}},
}
SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "config", "measures", "analytic_comparison", "conventions"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "config": {"type": "object"},
        "measures": {"type": "array", "items": _measure},
        "analytic_comparison": {"type": "object", "additionalProperties": _number},
        "closed_form": {"type": "object"},
        "qem": {"type": ["object", "null"]},
        "conventions": {"type": "object", "required": sorted(CONVENTIONS)},
    },
}


class ConfigError(Exception):
    """Validation failure carrying ``path:line: message`` lines."""

    def __init__(self, messages: list[str]):
        super().__init__("\n".join(messages))
        self.messages = messages


# ---------------------------------------------------------------------------
# config handling


def _line_of(text: str, path: tuple) -> int:
    """Line of the deepest key along ``path`` that occurs in ``text`` (1 if none)."""
    pos, line = 0, 1
    for key in path:
        if not isinstance(key, str):
            continue
        hit = text.find(json.dumps(key), pos)
        if hit < 0:
            break
        pos = hit
        line = text.count("\n", 0, hit) + 1
    return line


def _parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise ConfigError([f"<override>: expected key=value, got {item!r}"])
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(cfg: dict, overrides: list[str]) -> tuple[dict, set]:
    cfg = copy.deepcopy(cfg)
    touched = set()
    for item in overrides:
        keys, value = _parse_override(item)
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError([f"<override>: {'.'.join(keys)} does not name an object field"])
        node[keys[-1]] = value
        touched.add(tuple(keys))
    return cfg, touched


def load_config(path: str | Path, overrides: list[str] = ()) -> tuple[dict, dict]:
    """Parse, override, validate and fill defaults; returns (effective config, model)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config ({exc.strerror})"]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}: invalid JSON: {exc.msg}"]) from exc
    cfg, touched = apply_overrides(raw, list(overrides))

    def where(p: tuple) -> str:
        if any(p[:n] in touched for n in range(1, len(p) + 1)):
            return f"{path}:<override>"
        return f"{path}:{_line_of(text, p)}"

    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        msgs = []
        for e in errors:
            p = tuple(e.path)
            if e.validator == "required":
                missing = e.message.split("'")[1]
                field = ".".join(map(str, p + (missing,)))
                msgs.append(f"{where(p)}: missing required field '{field}'")
            else:
                msgs.append(f"{where(p)}: {'.'.join(map(str, p)) or '<root>'}: {e.message}")
        raise ConfigError(msgs)

    scenario = cfg["scenario"]
    params = {**PARAM_DEFAULTS[scenario], **cfg.get("params", {})}
    gamma = params.get("gamma", 1.0)
    times = dict(cfg["times"])
    msgs = []
    if scenario == "teleportation":
        if "start" in times and times["start"] <= 0:
            msgs.append(f"{where(('times', 'start'))}: times.start must be > 0 for teleportation "
                        "(t=0 singularity guard: the canonical rates diverge at t = 0)")
        times.setdefault("start", TELEPORT_GUARD / gamma)
    times.setdefault("start", 0.0)
    times.setdefault("steps", 201)
    if times["stop"] <= times["start"]:
        msgs.append(f"{where(('times', 'stop'))}: times.stop must exceed times.start")
    try:
        model = build_model(scenario, **params)
    except (ValueError, TypeError) as exc:
        bad = next((k for k in params if k in str(exc)), None)
        anchor = ("params", bad) if bad else ("params",)
        msgs.append(f"{where(anchor)}: {exc}")
        model = None
    if msgs:
        raise ConfigError(msgs)

    grid = {"points": 400, "spacing": "log" if scenario == "teleportation" else "linear", "blp_directions": 64,
            **cfg.get("measure_grid", {})}
    stem = path.stem
    output = {"trajectory_csv": f"{stem}.csv", "summary_json": f"{stem}.summary.json", **cfg.get("output", {})}
    eff = {
        "scenario": scenario,
        "params": params,
        "times": times,
        "measures": cfg.get("measures", ["rhp", "blp", "decay_rate"]),
        "measure_grid": grid,
        "qem": cfg.get("qem"),
        "output": output,
    }
    if scenario == "squeezed_cat":
        eff["truncation"] = params["n_trunc"]
    return eff, model


# ---------------------------------------------------------------------------
# running


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _trajectory(cfg: dict, model) -> tuple[list[list[float]], dict]:
    scenario = cfg["scenario"]
    t = cfg["times"]
    ts = np.linspace(t["start"], t["stop"], t["steps"])
    prop_times = ts if ts[0] == 0 else np.concatenate([[0.0], ts])
    traj = propagate(model.generator, model.initial_state(), prop_times, model.composite_dims)
    states = traj.states[len(prop_times) - len(ts):]
    logical = np.array([partial_trace(s, model.composite_dims, keep=[model.logical_index]) for s in states])
    fam = logical_map_family(model, ts)
    rate_num = canonical_rates(fam, ts)[:, 0]
    rate_an = np.array([model.analytic_rate(x) for x in ts])
    oracle = np.array([model.analytic_logical_state(x) for x in ts])
    cmp = {"logical_state_max_abs_error": float(np.abs(logical - oracle).max()),
           "rate_max_abs_error": float(np.abs(rate_num - rate_an).max())}
    if scenario == "three_qubit":
        f_num = logical[:, 1, 1].real
        f_an = np.array([model.analytic(x).f for x in ts])
        cols = [ts, f_num, f_an, rate_num, rate_an]
        cmp["f_max_abs_error"] = float(np.abs(f_num - f_an).max())
    elif scenario == "teleportation":
        psi = np.asarray(model.psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        fid = np.einsum("i,nij,j->n", psi.conj(), logical, psi).real
        cols = [ts, fid, rate_num, rate_an]
        fid_an = np.einsum("i,nij,j->n", psi.conj(), oracle, psi).real
        cmp["fidelity_max_abs_error"] = float(np.abs(fid - fid_an).max())
    else:
        x_num = np.einsum("nij,ji->n", logical, X).real
        x_an = np.array([model.analytic(x).x_expectation for x in ts])
        cols = [ts, x_num, x_an, rate_num, rate_an]
        cmp["x_expectation_max_abs_error"] = float(np.abs(x_num - x_an).max())
    return [list(r) for r in zip(*cols)], cmp


def _closed_form(cfg: dict, model, t1: float, t3: float) -> dict:
    s = cfg["scenario"]
    if s == "three_qubit":
        f1, f3 = model.analytic(t1).f, model.analytic(t3).f
        return {"kind": "THREE_QUBIT", "R": closed_form_R("THREE_QUBIT", p=f1, q=f3)}
    if s == "teleportation":
        return {"kind": "TELEPORT", "R": closed_form_R("TELEPORT", gamma=model.gamma, dt=t1, T=t3)}
    lam = abs(complex(model.lam))
    r = lam**2 * (math.exp(-model.gamma * t1) - math.exp(-model.gamma * t3))
    return {"kind": "SQUEEZED_CAT", "R": r}


def execute(cfg: dict, model, base_dir: Path) -> dict:
    rows, cmp = _trajectory(cfg, model)
    t1, t3 = cfg["times"]["start"], cfg["times"]["stop"]
    grid = cfg["measure_grid"]
    mts = rate_grid(t1, t3, grid["points"], grid["spacing"])
    fam = logical_map_family(model, mts)
    measures = []
    results = {}
    for name in sorted(cfg["measures"]):
        if name == "rhp":
            res = rhp_measure(fam, t1, t3)
        elif name == "blp":
            res = blp_measure(fam, t1, t3, BlpSearchConfig(n_grid=grid["blp_directions"]))
        else:
            res = decay_rate_measure(mts, canonical_rates(fam, mts))
        results[name] = res
        measures.append(res.to_dict())
    closed = _closed_form(cfg, model, t1, t3)
    if "decay_rate" in results:
        cmp["decay_rate_vs_closed_form"] = abs(results["decay_rate"].value - closed["R"])

    qem = None
    if cfg.get("qem"):
        eps, delta = cfg["qem"]["epsilon"], cfg["qem"]["delta"]
        first = sweep_orthogonal_pairs(fam.map_at(t1), eps, delta)
        last = sweep_orthogonal_pairs(fam.map_at(t3), eps, delta)
        qem = {"initial": first.to_dict(), "final": last.to_dict()}
        if cfg["scenario"] == "three_qubit":
            p = model.analytic(t1).f
            qem["unbiased_initial"] = unbiased_bound(p, eps, delta).samples
            qem["after_qec_closed_form"] = cost_after_qec(qem["unbiased_initial"], closed["R"])

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "measures": measures,
        "analytic_comparison": cmp,
        "closed_form": closed,
        "qem": qem,
        "conventions": CONVENTIONS,
    }
    jsonschema.validate(summary, SUMMARY_SCHEMA)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS[cfg["scenario"]])
    w.writerows([_fmt(x) for x in r] for r in rows)
    out = cfg["output"]
    csv_path = base_dir / out["trajectory_csv"]
    json_path = base_dir / out["summary_json"]
    csv_path.write_text(buf.getvalue())
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmqip", description="Reduced logical dynamics and non-Markovianity measures.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run a scenario and write CSV + summary JSON"),
                       ("validate", "check a config without running it")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config path with a JSON value, e.g. params.p=0.2")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg, model = load_config(args.config, args.override)
    except ConfigError as exc:
        for m in exc.messages:
            print(f"error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, LeakageError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "validate":
        print("OK")
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    try:
        execute(cfg, model, Path(args.config).resolve().parent)
    except (NumericalError, LeakageError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
