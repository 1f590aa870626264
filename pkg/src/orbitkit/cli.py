"""Command-line surface: JSON system configs in, JSON reports and CSV
tables out.

Exit codes: 0 for pass/success verdicts, 1 for fail/not-equivalent
verdicts, 2 for errors (bad config, bad flags, evaluation failures).
Every sampled verdict is reproducible from (config, parameters, seed);
reports are byte-identical across runs except for the timing_s field.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys as _sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .expr import ExprError, ParseError, PhaseVariables, parse
from .fibers import (
    bifurcation_scan,
    connected_components,
    orbit_vs_fiber_check,
    sample_fiber,
)
from .flow import completeness_probe, integrate_flow, orbit_explore
from .grids import Box, CellGrid, LatticeSpec
from .hamiltonian import (
    DEFAULT_FULL_RANK_THRESHOLD,
    IntegrableSystem,
    check_involution,
    rank_scan,
)
from .quotient import (
    build_orbit_space,
    check_factorization,
    image_closedness_probe,
    mu_bijectivity_test,
    symplectic_equivalence_check,
    systems_equivalent,
)

_ALLOWED_DEFAULTS = {
    "resolution", "atol", "seed", "tol", "count", "budget", "h",
    "quantum", "samples", "lattice",
}


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    path: str
    digest: str
    name: str
    n: int
    integral_sources: tuple[str, ...]
    system: IntegrableSystem
    defaults: dict


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def load_config(path) -> SystemConfig:
    """Load and validate a system config; expressions parse eagerly."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw_bytes = path.read_bytes()
    digest = hashlib.sha256(raw_bytes).hexdigest()
    try:
        raw = json.loads(raw_bytes)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: not valid JSON ({err})") from None
    _require(isinstance(raw, dict), f"{path}: top level must be a JSON object")

    known = {"name", "dof", "integrals", "box", "defaults"}
    for key in raw:
        _require(key in known, f"unknown config key {key!r}")

    name = raw.get("name", path.stem)
    _require(isinstance(name, str) and name, "name: expected a nonempty string")
    dof = raw.get("dof")
    _require(isinstance(dof, int) and dof >= 1, "dof: expected an integer >= 1")

    integrals = raw.get("integrals")
    _require(isinstance(integrals, list), "integrals: expected a list of expression strings")
    _require(
        len(integrals) == dof,
        f"integrals: expected {dof} entries, got {len(integrals) if integrals else 0}",
    )
    variables = PhaseVariables(dof)
    parsed = []
    for k, src in enumerate(integrals):
        _require(isinstance(src, str), f"integrals[{k}]: expected a string")
        try:
            parsed.append(parse(src, variables))
        except ParseError as err:
            raise ConfigError(f"integrals[{k}]: {err}") from None

    box_raw = raw.get("box")
    _require(isinstance(box_raw, dict), "box: expected an object with 'min' and 'max'")
    for side in ("min", "max"):
        arr = box_raw.get(side)
        _require(isinstance(arr, list), f"box.{side}: expected a list of {2 * dof} numbers")
        _require(
            len(arr) == 2 * dof,
            f"box.{side}: expected {2 * dof} entries (q_1..q_n, p_1..p_n), got {len(arr)}",
        )
        for k, v in enumerate(arr):
            _require(isinstance(v, (int, float)), f"box.{side}[{k}]: expected a number")
    for k, (a, b) in enumerate(zip(box_raw["min"], box_raw["max"])):
        _require(a < b, f"box: axis {k} needs min < max, got [{a}, {b}]")
    box = Box(tuple(box_raw["min"]), tuple(box_raw["max"]))

    defaults = raw.get("defaults", {})
    _require(isinstance(defaults, dict), "defaults: expected an object")
    for key in defaults:
        _require(key in _ALLOWED_DEFAULTS, f"defaults.{key}: unknown default")

    system = IntegrableSystem(name, dof, tuple(parsed), box)
    return SystemConfig(str(path), digest, name, dof, tuple(integrals), system, defaults)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_report(report: dict, out: str | None) -> None:
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _param(args, cfg: SystemConfig, key: str, fallback):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in cfg.defaults:
        return cfg.defaults[key]
    return fallback


def _grid(args, cfg: SystemConfig, fallback_res: int = 200) -> CellGrid:
    res = int(_param(args, cfg, "resolution", fallback_res))
    return CellGrid.regular(cfg.system.box, res)


def _parse_point(text: str, expected: int) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}") from None
    _require(len(values) == expected, f"point needs {expected} coordinates, got {len(values)}")
    return values


def _base_report(command: str, cfgs: list[SystemConfig], parameters: dict) -> dict:
    return {
        "command": command,
        "configs": [
            {"path": c.path, "sha256": c.digest, "name": c.name} for c in cfgs
        ],
        "parameters": parameters,
        "warnings": [],
    }


def _involution_summary(report) -> dict:
    return {
        "passed": report.passed,
        "pairs": {
            f"({i},{j})": v.kind for (i, j), v in sorted(report.verdicts.items())
        },
        "numeric_only_pairs": [list(p) for p in report.numeric_only_pairs],
    }


def _rank_summary(report) -> dict:
    return {
        "histogram": list(report.histogram),
        "full_rank_fraction": report.full_rank_fraction,
        "low_rank_witnesses": [list(w) for w in report.low_rank_witnesses],
        "skipped": report.skipped,
    }


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    count = int(_param(args, cfg, "count", 200))
    tol = float(_param(args, cfg, "tol", 1e-10))
    samples = int(_param(args, cfg, "samples", 10000))
    seed = int(_param(args, cfg, "seed", 0))
    threshold = float(args.min_full_rank)

    involution = check_involution(cfg.system, count, tol, seed)
    rank = rank_scan(cfg.system, samples, args.rank_tol, seed)
    passed = involution.passed and rank.passes(threshold)

    report = _base_report(
        "check", [cfg],
        {"count": count, "tol": tol, "samples": samples, "seed": seed,
         "rank_tol": args.rank_tol, "min_full_rank": threshold},
    )
    report["verdicts"] = {
        "involution": _involution_summary(involution),
        "rank": _rank_summary(rank),
        "passed": passed,
    }
    if involution.numeric_only_pairs:
        report["warnings"].append(
            "involution verdicts for pairs "
            f"{list(map(list, involution.numeric_only_pairs))} are numeric only"
        )
    if rank.skipped:
        report["warnings"].append(f"{rank.skipped} rank samples hit domain errors")
    return _finish(report, args, 0 if passed else 1)


def cmd_rank(args) -> int:
    cfg = load_config(args.config)
    samples = int(_param(args, cfg, "samples", 10000))
    seed = int(_param(args, cfg, "seed", 0))
    report_data = rank_scan(cfg.system, samples, args.rank_tol, seed)
    passed = report_data.passes(float(args.min_full_rank))
    report = _base_report(
        "rank", [cfg],
        {"samples": samples, "seed": seed, "rank_tol": args.rank_tol,
         "min_full_rank": float(args.min_full_rank)},
    )
    report["verdicts"] = {"rank": _rank_summary(report_data), "passed": passed}
    return _finish(report, args, 0 if passed else 1)


def cmd_orbit(args) -> int:
    cfg = load_config(args.config)
    x0 = _parse_point(args.seed_point, 2 * cfg.n)
    budget = int(_param(args, cfg, "budget", 1000))
    atol = float(_param(args, cfg, "atol", 1e-3))
    h = float(_param(args, cfg, "h", 1e-3))
    quantum = float(_param(args, cfg, "quantum", 0.1))
    grid = _grid(args, cfg)

    orbit = orbit_explore(
        cfg.system, x0, budget, h, quantum=quantum, grid=grid, atol=atol
    )
    rows = [
        [cell] + [f"{v!r}" for v in point]
        for cell, point in sorted(orbit.cells.items())
    ]
    report = _base_report(
        "orbit", [cfg],
        {"seed_point": x0, "budget": budget, "atol": atol, "h": h,
         "quantum": quantum, "resolution": list(grid.res)},
    )
    report["verdicts"] = {
        "cells": len(orbit.cells),
        "budget_used": orbit.budget_used,
        "closed": orbit.closed,
        "f_drift": orbit.f_drift,
        "escaped_branches": orbit.escaped_branches,
    }
    if orbit.escaped_branches:
        report["warnings"].append(
            f"{orbit.escaped_branches} exploration branches left the box and were pruned"
        )
    header = ["cell"] + [cfg.system.variables.name_of(i) for i in range(2 * cfg.n)]
    _emit_table(args, report, header, rows)
    return _finish(report, args, 0)


def cmd_fiber(args) -> int:
    cfg = load_config(args.config)
    c = _parse_point(args.value, cfg.n)
    atol = float(_param(args, cfg, "atol", 1e-3))
    grid = _grid(args, cfg)
    fs = sample_fiber(cfg.system, c, grid, atol)
    labeling = connected_components(fs, args.connectivity)
    report = _base_report(
        "fiber", [cfg],
        {"value": c, "atol": atol, "resolution": list(grid.res),
         "connectivity": args.connectivity},
    )
    report["verdicts"] = {
        "marked_cells": fs.size,
        "components": labeling.count,
        "component_sizes": [
            int(np.sum(labeling.labels == k)) for k in range(labeling.count)
        ],
    }
    if fs.warnings:
        report["warnings"].append(f"{fs.warnings} cells skipped for domain errors")
    centers = fs.centers()
    rows = [
        [f"{centers[d, k]!r}" for d in range(grid.dim)] + [int(labeling.labels[k])]
        for k in range(fs.size)
    ]
    header = [cfg.system.variables.name_of(i) for i in range(2 * cfg.n)] + ["label"]
    _emit_table(args, report, header, rows)
    return _finish(report, args, 0)


def cmd_scan(args) -> int:
    cfg = load_config(args.config)
    lattice = LatticeSpec.parse(_param(args, cfg, "lattice", None) or _missing("--lattice"))
    atol = float(_param(args, cfg, "atol", 1e-3))
    grid = _grid(args, cfg)
    table = bifurcation_scan(cfg.system, lattice, grid, atol, args.connectivity)
    report = _base_report(
        "scan", [cfg],
        {"lattice": [list(a) for a in lattice.axes], "atol": atol,
         "resolution": list(grid.res), "connectivity": args.connectivity},
    )
    report["verdicts"] = {
        "counts": [
            {"c": list(row.c), "count": row.count, "critical": row.critical}
            for row in table.rows
        ]
    }
    for c in table.critical_values:
        report["warnings"].append(
            f"lattice value {list(c)} meets a rank-deficient point; its "
            "component count is resolution-dependent"
        )
    rows = [
        [f"{v!r}" for v in row.c] + [row.count, int(row.critical)] for row in table.rows
    ]
    header = [f"c{j + 1}" for j in range(cfg.n)] + ["count", "critical"]
    _emit_table(args, report, header, rows)
    return _finish(report, args, 0)


def cmd_atlas(args) -> int:
    cfg = load_config(args.config)
    lattice = LatticeSpec.parse(_param(args, cfg, "lattice", None) or _missing("--lattice"))
    grid = _grid(args, cfg)
    os_ = build_orbit_space(cfg.system, lattice, grid, args.connectivity)
    fact = check_factorization(os_)
    report = _base_report(
        "atlas", [cfg],
        {"lattice": [list(a) for a in lattice.axes], "resolution": list(grid.res),
         "connectivity": args.connectivity},
    )
    report["verdicts"] = {
        "elements": [
            {"id": e.id, "bin": list(e.bin_index), "mu": list(e.mu), "cells": e.size}
            for e in os_.elements
        ],
        "edges": [list(e) for e in os_.edges],
        "factorization": {"passed": fact.passed, "checked": fact.checked,
                          "bad_cells": list(fact.bad_cells)},
    }
    if args.dot:
        _write_dot(args.dot, os_)
    rows = [[a, b] for a, b in os_.edges]
    _emit_table(args, report, ["element_a", "element_b"], rows)
    return _finish(report, args, 0 if fact.passed else 1)


def cmd_mu(args) -> int:
    cfg = load_config(args.config)
    lattice = LatticeSpec.parse(_param(args, cfg, "lattice", None) or _missing("--lattice"))
    grid = _grid(args, cfg)
    os_ = build_orbit_space(cfg.system, lattice, grid, args.connectivity)
    verdict = mu_bijectivity_test(os_)
    report = _base_report(
        "mu", [cfg],
        {"lattice": [list(a) for a in lattice.axes], "resolution": list(grid.res),
         "connectivity": args.connectivity},
    )
    report["verdicts"] = {
        "bijective_at_resolution": verdict.bijective_at_resolution,
        "witnesses": [
            {"value": list(value), "elements": count} for value, count in verdict.witnesses
        ],
    }
    return _finish(report, args, 0 if verdict.bijective_at_resolution else 1)


def cmd_equiv(args) -> int:
    cfg_f = load_config(args.config)
    cfg_g = load_config(args.other_config)
    count = int(_param(args, cfg_f, "count", 200))
    tol = float(_param(args, cfg_f, "tol", 1e-8))
    seed = int(_param(args, cfg_f, "seed", 0))
    grid = None
    if args.resolution is not None:
        grid = CellGrid.regular(cfg_f.system.box, int(args.resolution))
    verdict = systems_equivalent(
        cfg_f.system, cfg_g.system, count, tol, grid, rng=seed
    )
    report = _base_report(
        "equiv", [cfg_f, cfg_g], {"count": count, "tol": tol, "seed": seed}
    )
    report["verdicts"] = {
        "verdict": verdict.verdict,
        "qualifier": verdict.qualifier,
        "full_rank_fraction": verdict.full_rank_fraction,
        "bracket_witnesses": [
            {"candidate": w.candidate, "integral": w.integral_index,
             "point": list(w.point), "magnitude": w.magnitude}
            for w in verdict.bracket_witnesses
        ],
        "span_witnesses": [list(w) for w in verdict.span_witnesses],
        "partition_witnesses": [
            {"direction": d, "cell_a": list(a), "cell_b": list(b)}
            for d, a, b in verdict.partition_witnesses
        ],
    }
    if verdict.verdict == "equivalent":
        report["warnings"].append(
            "equivalence is evidence at this sampling and resolution, not a proof"
        )
    return _finish(report, args, 0 if verdict.verdict == "equivalent" else 1)


def cmd_sympeq(args) -> int:
    cfg_f = load_config(args.config)
    cfg_g = load_config(args.other_config)
    count = int(_param(args, cfg_f, "count", 200))
    tol = float(_param(args, cfg_f, "tol", 1e-9))
    seed = int(_param(args, cfg_f, "seed", 0))
    sources = [part.strip() for part in args.map.split(";")]
    variables = cfg_f.system.variables
    try:
        phi = [parse(src, variables) for src in sources]
    except ParseError as err:
        raise ConfigError(f"--map: {err}") from None
    result = symplectic_equivalence_check(
        cfg_f.system, cfg_g.system, phi, count, tol, seed
    )
    report = _base_report(
        "sympeq", [cfg_f, cfg_g],
        {"map": sources, "count": count, "tol": tol, "seed": seed},
    )
    report["verdicts"] = {
        "passed": result.passed,
        "max_symplectic_defect": result.max_symplectic_defect,
        "max_pullback_defect": result.max_pullback_defect,
        "outside_target_box": result.outside_target_box,
        "domain_errors": result.domain_errors,
    }
    if result.outside_target_box:
        report["warnings"].append(
            f"map leaves the target box at {result.outside_target_box} sample points"
        )
    return _finish(report, args, 0 if result.passed else 1)


def cmd_closedness(args) -> int:
    cfg = load_config(args.config)
    grid = _grid(args, cfg)
    probe = image_closedness_probe(cfg.system, grid, args.margin)
    report = _base_report(
        "closedness", [cfg], {"resolution": list(grid.res), "margin": args.margin}
    )
    report["verdicts"] = {
        "verdict": probe.verdict,
        "sides": [
            {"axis": s.axis, "side": s.side, "value": s.value,
             "classification": s.classification, "extrapolated": s.extrapolated}
            for s in probe.sides
        ],
    }
    report["warnings"].append(probe.disclaimer)
    return _finish(report, args, 0 if probe.verdict != "suspect" else 1)


def cmd_probe_complete(args) -> int:
    cfg = load_config(args.config)
    trials = int(args.trials)
    horizon = float(args.horizon)
    h = float(_param(args, cfg, "h", 1e-3))
    seed = int(_param(args, cfg, "seed", 0))
    probe = completeness_probe(cfg.system, trials, horizon, h, seed)
    report = _base_report(
        "probe-complete", [cfg],
        {"trials": trials, "horizon": horizon, "h": h, "seed": seed},
    )
    report["verdicts"] = {
        "no_blow_up_observed": probe.no_blow_up_observed,
        "events": [
            {"field": e.field_index, "direction": e.direction, "seed": list(e.seed),
             "t_escape": e.t_escape, "growth": e.growth}
            for e in probe.events
        ],
    }
    report["warnings"].append(probe.disclaimer)
    return _finish(report, args, 0 if probe.no_blow_up_observed else 1)


def cmd_traj(args) -> int:
    cfg = load_config(args.config)
    x0 = _parse_point(args.seed_point, 2 * cfg.n)
    h = float(_param(args, cfg, "h", 1e-3))
    traj = integrate_flow(cfg.system, args.field, x0, args.t_final, h)
    report = _base_report(
        "traj", [cfg],
        {"seed_point": x0, "field": args.field, "t_final": args.t_final, "h": h},
    )
    report["verdicts"] = {
        "samples": len(traj.times),
        "escaped": traj.escaped,
        "escape_time": traj.escape_time,
        "endpoint": [float(v) for v in traj.endpoint],
    }
    rows = [
        [f"{traj.times[k]!r}"] + [f"{v!r}" for v in traj.points[k]]
        for k in range(len(traj.times))
    ]
    header = ["t"] + [cfg.system.variables.name_of(i) for i in range(2 * cfg.n)]
    _emit_table(args, report, header, rows)
    return _finish(report, args, 0)


def _missing(flag: str):
    raise ConfigError(f"{flag} is required (no config default found)")


def _emit_table(args, report: dict, header: list[str], rows) -> None:
    if getattr(args, "format", "csv") == "json":
        report["table"] = {"header": header, "rows": [list(r) for r in rows]}
    elif getattr(args, "csv", None):
        _write_csv(args.csv, header, rows)


def _write_dot(path: str, os_) -> None:
    lines = ["graph basespace {"]
    for e in os_.elements:
        mu_text = ",".join(f"{v:g}" for v in e.mu)
        lines.append(f'  L{e.id} [label="mu=({mu_text}) cells={e.size}"];')
    for a, b in os_.edges:
        lines.append(f"  L{a} -- L{b};")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def _finish(report: dict, args, code: int) -> int:
    report["exit_code"] = code
    report["timing_s"] = round(time.perf_counter() - args._t0, 6)
    _write_report(report, args.out)
    return code


def _add_common(sub, *, tables: bool = False) -> None:
    sub.add_argument("--seed", type=int, default=None, help="RNG seed (default from config, else 0)")
    sub.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    if tables:
        sub.add_argument("--csv", default=None, help="write the tabular artifact to this CSV file")
        sub.add_argument("--format", choices=("json", "csv"), default="csv",
                         help="json embeds the table in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitkit",
        description="Analyze integrable Hamiltonian systems: involution and "
        "rank checks, flows, fiber components, orbit spaces and equivalences.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check", help="involution + rank gate")
    p.add_argument("config")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--rank-tol", type=float, default=1e-9)
    p.add_argument("--min-full-rank", type=float, default=DEFAULT_FULL_RANK_THRESHOLD)
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = subs.add_parser("rank", help="rank histogram over box samples")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--rank-tol", type=float, default=1e-9)
    p.add_argument("--min-full-rank", type=float, default=DEFAULT_FULL_RANK_THRESHOLD)
    _add_common(p)
    p.set_defaults(fn=cmd_rank)

    p = subs.add_parser("orbit", help="explore the orbit through a seed point")
    p.add_argument("config")
    p.add_argument("--seed-point", required=True, help="comma-separated phase point")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--quantum", type=float, default=None)
    _add_common(p, tables=True)
    p.set_defaults(fn=cmd_orbit)

    p = subs.add_parser("fiber", help="sample and label one fiber")
    p.add_argument("config")
    p.add_argument("--value", required=True, help="comma-separated image point")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--connectivity", choices=("face", "corner"), default="face")
    _add_common(p, tables=True)
    p.set_defaults(fn=cmd_fiber)

    p = subs.add_parser("scan", help="component counts over an image lattice")
    p.add_argument("config")
    p.add_argument("--lattice", default=None, help="lo:hi:count per axis, comma-separated")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--connectivity", choices=("face", "corner"), default="face")
    _add_common(p, tables=True)
    p.set_defaults(fn=cmd_scan)

    p = subs.add_parser("atlas", help="build the orbit space and its base-space graph")
    p.add_argument("config")
    p.add_argument("--lattice", default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--connectivity", choices=("face", "corner"), default="face")
    p.add_argument("--dot", default=None, help="write a DOT graph file")
    _add_common(p, tables=True)
    p.set_defaults(fn=cmd_atlas)

    p = subs.add_parser("mu", help="test injectivity of the induced map")
    p.add_argument("config")
    p.add_argument("--lattice", default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--connectivity", choices=("face", "corner"), default="face")
    _add_common(p)
    p.set_defaults(fn=cmd_mu)

    p = subs.add_parser("equiv", help="two-stage equivalence test of two systems")
    p.add_argument("config")
    p.add_argument("other_config")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--resolution", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_equiv)

    p = subs.add_parser("sympeq", help="sampled symplectic-equivalence check")
    p.add_argument("config")
    p.add_argument("other_config")
    p.add_argument("--map", required=True,
                   help="semicolon-separated components of the candidate map")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_sympeq)

    p = subs.add_parser("closedness", help="box-limited image closedness probe")
    p.add_argument("config")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--margin", type=float, default=1e-9)
    _add_common(p)
    p.set_defaults(fn=cmd_closedness)

    p = subs.add_parser("probe-complete", help="escape-time completeness heuristic")
    p.add_argument("config")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--h", type=float, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_probe_complete)

    p = subs.add_parser("traj", help="integrate one Hamiltonian flow")
    p.add_argument("config")
    p.add_argument("--seed-point", required=True)
    p.add_argument("--field", type=int, default=0)
    p.add_argument("--t-final", type=float, default=10.0)
    p.add_argument("--h", type=float, default=None)
    _add_common(p, tables=True)
    p.set_defaults(fn=cmd_traj)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.perf_counter()
    try:
        return args.fn(args)
    except (ConfigError, ExprError, ValueError, OSError) as err:
        print(f"error: {err}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
