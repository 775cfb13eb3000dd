"""Batch front-end.

Commands::

    renewperc exact    --config cfg.json [--horizon N] [--out PATH]
    renewperc bounds   --config cfg.json [--horizon N] [--out PATH]
    renewperc simulate --config cfg.json [--reps R] [--seed S] [--out PATH]
    renewperc dual     --config cfg.json [--reps R] [--seed S] [--out PATH]
    renewperc coupling --config cfg.json [--reps R] [--seed S] [--out PATH]
    renewperc verify   [--configs K] [--reps R] [--seed S] [--exact-tol T]
    renewperc sweep    --config cfg.json [--out PATH] [--workers W]

The configuration is one JSON document (q-spec fragment, radius fragment,
horizons, seed, command options); command-line flags override it.  Unknown
keys are rejected.  CSV output is RFC-4180 style (UTF-8, CRLF, mandatory
header row) and carries a schema-id column; randomized commands embed the
seed in every row.  Runs are deterministic: the same config file yields a
byte-identical CSV, so wall-clock runtime is reported only in the JSON
summary, never in CSV rows.

Exit codes: 0 ok, 1 usage, 2 validation, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .engine import (
    bounds_report,
    classify,
    dual_law,
    forward_connectivity,
    gf_partial,
    percolation_probability,
)
from .errors import RenewpercError, ValidationError
from .oracle import enumerate_connectivity, enumerate_dual, random_tiny_configs
from .radius import radius_from_config
from .renewal import q_sequence_from_config
from .simulate import simulate_connectivity, simulate_coupling, simulate_dual

_SCHEMAS = {
    "exact": "renewperc.exact.v1",
    "bounds": "renewperc.bounds.v1",
    "simulate": "renewperc.sim.v1",
    "dual": "renewperc.sim.v1",
    "coupling": "renewperc.coupling.v1",
    "verify": "renewperc.verify.v1",
    "sweep": "renewperc.sweep.v1",
    "summary": "renewperc.summary.v1",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return "" if value is None else str(value)


def _write_rows(path: str, fieldnames, rows, fmt: str) -> None:
    out = Path(path)
    if fmt == "csv":
        with out.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})
    elif fmt == "jsonl":
        with out.open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps({k: row.get(k) for k in fieldnames}, sort_keys=True))
                fh.write("\n")
    else:
        raise ValidationError(f"unknown format {fmt!r}; expected csv or jsonl")


def _emit_summary(summary: dict, out_path: str) -> None:
    summary = {"schema": _SCHEMAS["summary"], "version": __version__, **summary}
    text = json.dumps(summary, sort_keys=True, default=str)
    out = Path(out_path)
    sidecar = out.with_name(out.stem + ".summary.json")
    sidecar.write_text(text + "\n", encoding="utf-8")
    print(text)


_DEFAULTS = {
    "exact": {"horizon": 1000, "tail": "auto", "out": "exact.csv", "format": "csv"},
    "bounds": {"horizon": 1000, "out": "bounds.csv", "format": "csv"},
    "simulate": {"reps": 100_000, "seed": 0, "out": "simulate.csv", "format": "csv"},
    "dual": {"reps": 100_000, "seed": 0, "out": "dual.csv", "format": "csv"},
    "coupling": {
        "reps": 100_000, "seed": 0, "coupling_horizon": 64,
        "out": "coupling.csv", "format": "csv",
    },
    "verify": {
        "configs": 50, "n_max": 8, "support_max": 4, "reps": 20_000,
        "seed": 0, "exact_tol": 1e-12, "out": None, "format": "csv",
    },
    "sweep": {
        "horizon": 2000, "tail": "auto", "classify_horizon": 10_000,
        "workers": 1, "out": "sweep.csv", "format": "csv",
    },
}

_REQUIRED = {
    "exact": ("q", "radius"),
    "bounds": ("q", "radius"),
    "simulate": ("q", "radius", "n"),
    "dual": ("q", "radius", "n"),
    "coupling": ("q", "delays"),
    "verify": (),
    "sweep": ("q", "radius", "grid"),
}

_ALLOWED = {
    "exact": {"q", "radius", "horizon", "tail", "out", "format"},
    "bounds": {"q", "radius", "horizon", "out", "format"},
    "simulate": {"q", "radius", "n", "reps", "seed", "out", "format"},
    "dual": {"q", "radius", "n", "reps", "seed", "out", "format"},
    "coupling": {"q", "delays", "coupling_horizon", "reps", "seed", "out", "format"},
    "verify": {"configs", "n_max", "support_max", "reps", "seed", "exact_tol", "out", "format"},
    "sweep": {
        "q", "radius", "horizon", "tail", "grid", "classify_horizon",
        "workers", "seed", "out", "format",
    },
}


def _resolve_config(command: str, args) -> dict:
    config = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        try:
            config = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise ValidationError("config document must be a JSON object")
    unknown = set(config) - _ALLOWED[command]
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {sorted(unknown)}")
    merged = {**_DEFAULTS[command], **config}
    for flag in ("seed", "horizon", "reps", "out", "format"):
        value = getattr(args, flag, None)
        if value is not None:
            merged[flag] = value
    for flag in ("tail", "exact_tol", "configs", "workers"):
        value = getattr(args, flag, None)
        if value is not None:
            merged[flag] = value
    missing = [k for k in _REQUIRED[command] if k not in merged]
    if missing:
        raise _UsageError(f"{command} requires config keys {missing}")
    return merged


def _series_rows(gf, dual) -> list:
    rows = []
    for n in range(gf.horizon + 1):
        rows.append(
            {
                "schema": _SCHEMAS["exact"],
                "n": n,
                "S_n": float(gf.S[n]),
                "f_n": float(dual.f[n]),
                "v_n": float(dual.v[n]),
            }
        )
    return rows


def cmd_exact(args) -> int:
    cfg = _resolve_config("exact", args)
    started = time.perf_counter()
    spec = q_sequence_from_config(cfg["q"])
    model = radius_from_config(cfg["radius"])
    horizon = int(cfg["horizon"])
    gf = gf_partial(spec, model, horizon)
    dual = dual_law(gf, spec, model)
    bracket = percolation_probability(gf, spec, model, tail=cfg["tail"])
    bounds = bounds_report(spec, model, horizon)
    verdict = classify(spec, model, max(4, horizon))
    _write_rows(cfg["out"], ["schema", "n", "S_n", "f_n", "v_n"], _series_rows(gf, dual), cfg["format"])
    _emit_summary(
        {
            "command": "exact",
            "config": cfg,
            "horizon": horizon,
            "bracket": asdict(bracket),
            "bounds": asdict(bounds),
            "classify": {
                "verdict": verdict.verdict,
                "mean": verdict.mean,
                "mean_converged": verdict.mean_converged,
                "notes": list(verdict.notes),
            },
            "dual_mean_partial": dual.mean_partial,
            "runtime_s": time.perf_counter() - started,
        },
        cfg["out"],
    )
    return 0


def cmd_bounds(args) -> int:
    cfg = _resolve_config("bounds", args)
    started = time.perf_counter()
    spec = q_sequence_from_config(cfg["q"])
    model = radius_from_config(cfg["radius"])
    horizon = int(cfg["horizon"])
    gf = gf_partial(spec, model, horizon)
    bracket = percolation_probability(gf, spec, model)
    bounds = bounds_report(spec, model, horizon)
    row = {
        "schema": _SCHEMAS["bounds"],
        "horizon": horizon,
        "bracket_lo": bracket.lo,
        "bracket_hi": bracket.hi,
        "jensen_upper": bounds.jensen_upper,
        "fkg_upper": bounds.fkg_upper,
        "concentration_lower": bounds.concentration_lower,
        "iid_closed": bounds.iid_closed,
    }
    _write_rows(cfg["out"], list(row.keys()), [row], cfg["format"])
    _emit_summary(
        {
            "command": "bounds",
            "config": cfg,
            "bracket": asdict(bracket),
            "bounds": asdict(bounds),
            "runtime_s": time.perf_counter() - started,
        },
        cfg["out"],
    )
    return 0


def _sim_rows(command: str, reports) -> list:
    return [
        {
            "schema": _SCHEMAS[command],
            "version": __version__,
            "seed": rep.seed,
            "target": rep.target,
            "n": rep.n,
            "reps": rep.reps,
            "estimate": rep.estimate,
            "stderr": rep.stderr,
            "wilson_low": rep.wilson_low,
            "wilson_high": rep.wilson_high,
        }
        for rep in reports
    ]


def _cmd_sim(command: str, args, runner) -> int:
    cfg = _resolve_config(command, args)
    started = time.perf_counter()
    spec = q_sequence_from_config(cfg["q"])
    model = radius_from_config(cfg["radius"])
    sites = cfg["n"] if isinstance(cfg["n"], list) else [cfg["n"]]
    reports = [
        runner(spec, model, int(n), int(cfg["reps"]), int(cfg["seed"])) for n in sites
    ]
    fields = ["schema", "version", "seed", "target", "n", "reps", "estimate", "stderr",
              "wilson_low", "wilson_high"]
    _write_rows(cfg["out"], fields, _sim_rows(command, reports), cfg["format"])
    _emit_summary(
        {
            "command": command,
            "config": cfg,
            "seed": int(cfg["seed"]),
            "layout": reports[0].layout,
            "estimates": {str(r.n): r.estimate for r in reports},
            "runtime_s": time.perf_counter() - started,
        },
        cfg["out"],
    )
    return 0


def cmd_simulate(args) -> int:
    return _cmd_sim("simulate", args, simulate_connectivity)


def cmd_dual(args) -> int:
    return _cmd_sim("dual", args, simulate_dual)


def cmd_coupling(args) -> int:
    cfg = _resolve_config("coupling", args)
    started = time.perf_counter()
    spec = q_sequence_from_config(cfg["q"])
    delays = cfg["delays"]
    if not isinstance(delays, list) or not delays:
        raise ValidationError("coupling needs a nonempty 'delays' list")
    report = simulate_coupling(
        spec, delays, int(cfg["coupling_horizon"]), int(cfg["reps"]), int(cfg["seed"])
    )
    rows = [
        {
            "schema": _SCHEMAS["coupling"],
            "version": __version__,
            "seed": report.seed,
            "target": report.target,
            "delays": "|".join(str(d) for d in report.delays),
            "j": j,
            "survival": float(report.survival[i]),
            "stderr": float(report.stderr[i]),
            "wilson_low": float(report.wilson_low[i]),
            "wilson_high": float(report.wilson_high[i]),
        }
        for i, j in enumerate(report.j_grid)
    ]
    fields = ["schema", "version", "seed", "target", "delays", "j", "survival", "stderr",
              "wilson_low", "wilson_high"]
    _write_rows(cfg["out"], fields, rows, cfg["format"])
    _emit_summary(
        {
            "command": "coupling",
            "config": cfg,
            "seed": report.seed,
            "layout": report.layout,
            "coalescence_sum_sq": report.coalescence_sum_sq,
            "runtime_s": time.perf_counter() - started,
        },
        cfg["out"],
    )
    return 0


def cmd_verify(args) -> int:
    cfg = _resolve_config("verify", args)
    started = time.perf_counter()
    reps = int(cfg["reps"])
    exact_tol = float(cfg["exact_tol"])
    seed = int(cfg["seed"])
    configs = random_tiny_configs(
        int(cfg["configs"]), seed, n_max=int(cfg["n_max"]), support_max=int(cfg["support_max"])
    )
    rows = []
    failures = 0
    for idx, tiny in enumerate(configs):
        e_conn = enumerate_connectivity(tiny)
        e_dual = enumerate_dual(tiny)
        fwd = forward_connectivity(tiny.spec, tiny.model, tiny.n)
        gf = gf_partial(tiny.spec, tiny.model, tiny.n)
        v = float(dual_law(gf, tiny.spec, tiny.model).v[tiny.n])
        mc_c = simulate_connectivity(tiny.spec, tiny.model, tiny.n, reps, seed + idx)
        mc_d = simulate_dual(tiny.spec, tiny.model, tiny.n, reps, seed + idx)
        exact_diff = max(abs(e_conn - e_dual), abs(e_conn - fwd), abs(e_conn - v))
        se_c = max(mc_c.stderr, math.sqrt(e_conn * (1 - e_conn) / reps), 1.0 / reps)
        se_d = max(mc_d.stderr, math.sqrt(e_dual * (1 - e_dual) / reps), 1.0 / reps)
        mc_c_diff = abs(mc_c.estimate - e_conn)
        mc_d_diff = abs(mc_d.estimate - e_dual)
        ok = exact_diff <= exact_tol and mc_c_diff <= 4 * se_c and mc_d_diff <= 4 * se_d
        failures += 0 if ok else 1
        status = "pass" if ok else "FAIL"
        print(
            f"config {idx:3d} n={tiny.n} exact={e_conn:.12f} "
            f"exact_diff={exact_diff:.3e} mc_conn={mc_c_diff / se_c:.2f}se "
            f"mc_dual={mc_d_diff / se_d:.2f}se {status}"
        )
        rows.append(
            {
                "schema": _SCHEMAS["verify"],
                "version": __version__,
                "seed": seed,
                "config_index": idx,
                "n": tiny.n,
                "oracle_connectivity": e_conn,
                "oracle_dual": e_dual,
                "forward_dp": fwd,
                "dual_v": v,
                "mc_connectivity": mc_c.estimate,
                "mc_dual": mc_d.estimate,
                "exact_max_diff": exact_diff,
                "status": status,
            }
        )
    if cfg["out"]:
        fields = ["schema", "version", "seed", "config_index", "n", "oracle_connectivity",
                  "oracle_dual", "forward_dp", "dual_v", "mc_connectivity", "mc_dual",
                  "exact_max_diff", "status"]
        _write_rows(cfg["out"], fields, rows, cfg["format"])
    runtime = time.perf_counter() - started
    print(
        f"verify: {len(configs) - failures}/{len(configs)} configs passed "
        f"(exact tol {exact_tol:g}, mc tol 4 SE, reps {reps}, {runtime:.1f}s)"
    )
    return 0 if failures == 0 else 3


def _apply_override(cfg: dict, dotted: str, value):
    root, _, key = dotted.partition(".")
    if root not in ("q", "radius") or not key:
        raise ValidationError(f"grid keys must look like 'q.<param>' or 'radius.<param>', got {dotted!r}")
    fragment = dict(cfg[root])
    fragment[key] = value
    out = dict(cfg)
    out[root] = fragment
    return out


def _sweep_point(payload) -> dict:
    base, overrides, horizon, tail, classify_horizon = payload
    row = dict(overrides)
    try:
        cfg = base
        for dotted, value in overrides.items():
            cfg = _apply_override(cfg, dotted, value)
        spec = q_sequence_from_config(cfg["q"])
        model = radius_from_config(cfg["radius"])
        gf = gf_partial(spec, model, horizon)
        bracket = percolation_probability(gf, spec, model, tail=tail)
        bounds = bounds_report(spec, model, horizon)
        verdict = classify(spec, model, classify_horizon)
        row.update(
            {
                "bracket_lo": bracket.lo,
                "bracket_hi": bracket.hi,
                "tail_method": bracket.tail_method,
                "certified": bracket.certified,
                "jensen_upper": bounds.jensen_upper,
                "fkg_upper": bounds.fkg_upper,
                "concentration_lower": bounds.concentration_lower,
                "verdict": verdict.verdict,
                "error": "",
            }
        )
    except RenewpercError as exc:
        row.update(
            {
                "bracket_lo": None, "bracket_hi": None, "tail_method": None,
                "certified": None, "jensen_upper": None, "fkg_upper": None,
                "concentration_lower": None, "verdict": None,
                "error": f"{type(exc).__name__}: {exc}",
            }
        )
    return row


def cmd_sweep(args) -> int:
    cfg = _resolve_config("sweep", args)
    started = time.perf_counter()
    grid = cfg["grid"]
    if not isinstance(grid, dict) or not grid:
        raise _UsageError("sweep needs a nonempty 'grid' mapping")
    keys = sorted(grid)
    for key in keys:
        values = grid[key]
        if not isinstance(values, list) or not values:
            raise _UsageError(f"sweep grid entry {key!r} must be a nonempty list")
    horizon = int(cfg["horizon"])
    classify_horizon = int(cfg["classify_horizon"])
    points = [
        dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))
    ]
    payloads = [
        ({"q": cfg["q"], "radius": cfg["radius"]}, point, horizon, cfg["tail"], classify_horizon)
        for point in points
    ]
    workers = int(cfg["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]
    fields = ["schema"] + keys + [
        "bracket_lo", "bracket_hi", "tail_method", "certified",
        "jensen_upper", "fkg_upper", "concentration_lower", "verdict", "error",
    ]
    for row in rows:
        row["schema"] = _SCHEMAS["sweep"]
    _write_rows(cfg["out"], fields, rows, cfg["format"])
    _emit_summary(
        {
            "command": "sweep",
            "config": cfg,
            "points": len(rows),
            "runtime_s": time.perf_counter() - started,
        },
        cfg["out"],
    )
    return 0


_COMMANDS = {
    "exact": cmd_exact,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "dual": cmd_dual,
    "coupling": cmd_coupling,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="renewperc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, default=None, choices=("csv", "jsonl"))
        if name in ("exact", "sweep"):
            p.add_argument("--tail", type=str, default=None)
        if name == "verify":
            p.add_argument("--configs", type=int, default=None)
            p.add_argument("--exact-tol", dest="exact_tol", type=float, default=None)
        if name == "sweep":
            p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except RenewpercError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
