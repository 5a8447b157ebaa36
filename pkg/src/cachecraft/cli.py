"""Command-line interface.

Subcommands: solve, curve, eval, simulate, pmf, report.  Structured results
go to JSON, curves and tables to CSV.  All runs are deterministic given the
config, flags and seed; floats are rounded to 6 decimals unless --raw asks
for full precision.  Errors print a machine-readable JSON object and exit
nonzero.  The env var CACHECRAFT_ENUM_CAP overrides the enumeration guard.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import delivery_sim, evaluator, formulations, lp_core, report
from .evaluator import FORMULATION_METHODS, SCHEME_METHODS
from .model import load_config, load_placement, validate_placement
from .probability import enumerate_demands, order_stat_pmf


class CliError(RuntimeError):
    pass


def _round(value, raw: bool):
    if isinstance(value, float):
        return value if raw else round(value, 6)
    return value


def _write_json(data, out_path, raw: bool):
    text = json.dumps(data, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _parse_grid(spec: str) -> list:
    """Grid spec: comma list `0,1,2` or range `start:stop:step` (stop inclusive)."""
    spec = spec.strip()
    if not spec:
        raise CliError("empty grid")
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise CliError(f"bad grid spec {spec!r}, expected start:stop:step")
        start, stop, step = (float(x) for x in parts)
        if step <= 0:
            raise CliError("grid step must be positive")
        grid = []
        value = start
        while value <= stop + 1e-12:
            grid.append(round(value, 12))
            value += step
        return grid
    return [float(x) for x in spec.split(",") if x.strip()]


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    built = formulations.build(args.method, cfg)
    if args.solver == "bundled":
        solver = lp_core.solve
    elif args.solver == "scipy":
        solver = lp_core.solve_with_scipy
    else:
        solver = None  # scipy for the exponential general LP, bundled otherwise
    solution = formulations.solve_built(built, solver=solver)
    if not solution.ok:
        raise CliError(f"LP did not solve to optimality: status {solution.status}")
    placement = built.placement_from(solution)
    variables = {}
    for idx, label in enumerate(built.var_map.labels()):
        value = float(solution.x[idx])
        if abs(value) > 1e-12:
            variables[built.var_map.label_str(label)] = _round(value, args.raw)
    payload = {
        "method": args.method,
        "status": solution.status,
        "objective": _round(solution.objective_value, args.raw),
        "variables": variables,
        "placement": placement.to_json_dict() if args.raw else _rounded_placement(placement),
        "diagnostics": {
            "iterations": solution.iterations,
            **{k: _round(v, True) for k, v in solution.diagnostics.items()},
        },
    }
    _write_json(payload, args.out, args.raw)
    return 0


def _rounded_placement(placement) -> dict:
    data = placement.to_json_dict()
    data["sizes"] = {
        l: {key: round(v, 6) for key, v in row.items()} for l, row in data["sizes"].items()
    }
    data["mu"] = [[round(v, 6) for v in row] for row in data["mu"]]
    return data


def cmd_curve(args) -> int:
    cfg = load_config(args.config)
    grid = _parse_grid(args.grid)
    if not grid:
        raise CliError("empty grid")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    known = set(FORMULATION_METHODS) | set(SCHEME_METHODS)
    for method in methods:
        if method not in known:
            raise CliError(f"unknown method {method!r}; choose from {sorted(known)}")
    if args.percent and "general" not in methods:
        raise CliError("--percent needs 'general' among the methods")
    points = evaluator.sweep_curve(cfg, grid, methods)
    general = {p.memory: p.expected_rate for p in points if p.method == "general"}

    def fmt(x):
        return repr(x) if args.raw else f"{x:.6f}"

    rows = []
    header = ["M", "method", "expected_rate"]
    if args.percent:
        header.append("pct_increase_vs_general")
    for pt in points:
        row = [fmt(pt.memory), pt.method, fmt(pt.expected_rate)]
        if args.percent:
            base = general[pt.memory]
            row.append("" if base == 0 else fmt(100.0 * (pt.expected_rate - base) / base))
        rows.append(row)

    if args.out:
        with open(args.out, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    placement = load_placement(args.placement)
    feasibility = validate_placement(cfg, placement, tol=args.tol)
    result = evaluator.expected_rate(cfg, placement, include_per_demand=args.per_demand)
    payload = {
        "expected_rate": _round(result.expected_rate, args.raw),
        "feasible": feasibility.ok,
        "violations": [
            {"kind": v.kind, "at": v.subject, "amount": _round(v.amount, args.raw)}
            for v in feasibility.violations
        ],
    }
    if args.per_demand:
        payload["per_demand"] = {
            ",".join(map(str, d)): _round(r, args.raw) for d, r in sorted(result.per_demand.items())
        }
    _write_json(payload, args.out, args.raw)
    return 0 if feasibility.ok else 1


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    placement = load_placement(args.placement)
    catalog = delivery_sim.materialize(cfg, placement, args.unit_bits, args.seed)
    if args.demands == "all":
        demands = [tuple(map(int, row)) for row in enumerate_demands(cfg.num_files, cfg.num_users)]
    else:
        rng = np.random.default_rng(args.seed)
        p = np.array(cfg.popularities)
        demands = [
            tuple(int(x) for x in rng.choice(cfg.num_files, size=cfg.num_users, p=p) + 1)
            for _ in range(int(args.demands))
        ]
    decoded_users = 0
    total_users = 0
    total_bits = 0
    worst_slack = 0.0
    failures = []
    for demand in demands:
        log = delivery_sim.deliver(catalog, demand)
        decode = delivery_sim.decode_all(catalog, log, demand)
        decoded_users += decode.num_ok
        total_users += cfg.num_users
        total_bits += log.total_bits
        exact = evaluator.rate_for_demand(placement, demand) * args.unit_bits
        worst_slack = max(worst_slack, abs(log.total_bits - exact))
        if not decode.all_ok:
            failures.append({"demand": list(demand), "report": str(decode)})
    payload = {
        "demands_simulated": len(demands),
        "decoded_users": decoded_users,
        "total_users": total_users,
        "decode_rate": _round(decoded_users / total_users, args.raw),
        "transmitted_bits": total_bits,
        "worst_bit_slack": _round(worst_slack, args.raw),
        "unit_bits": args.unit_bits,
        "seed": args.seed,
        "failures": failures,
    }
    if args.dump_log:
        last_log = delivery_sim.deliver(catalog, demands[-1])
        with open(args.dump_log, "w") as handle:
            handle.write(last_log.to_json(include_payloads=args.payloads) + "\n")
    _write_json(payload, args.out, args.raw)
    return 0 if decoded_users == total_users else 1


def cmd_pmf(args) -> int:
    cfg = load_config(args.config)
    table = order_stat_pmf(cfg.popularities, cfg.num_users)

    def fmt(x):
        return repr(x) if args.raw else f"{x:.6f}"

    def emit(handle):
        writer = csv.writer(handle)
        writer.writerow(["m"] + [f"i={i}" for i in range(1, cfg.num_files + 1)])
        for m in range(cfg.num_users):
            writer.writerow([m] + [fmt(table.probs[m, i]) for i in range(cfg.num_files)])

    if args.out:
        with open(args.out, "w", newline="") as handle:
            emit(handle)
    else:
        emit(sys.stdout)
    return 0


def cmd_report(args) -> int:
    grid = _parse_grid(args.grid) if args.grid else report.DEFAULT_GRID
    names = list(report.STUDIES) if args.study == "all" else [args.study]
    outputs = {}
    for name in names:
        outputs[name] = report.run_study(name, args.out_dir, grid=grid)
    _write_json(outputs, None, raw=False)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachecraft",
        description="Coded-caching placement optimization, evaluation and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="build and solve one formulation")
    p_solve.add_argument("config", help="JSON system config")
    p_solve.add_argument("--method", required=True, choices=FORMULATION_METHODS)
    p_solve.add_argument("--solver", choices=("auto", "bundled", "scipy"), default="auto")
    p_solve.add_argument("--out", help="write JSON here instead of stdout")
    p_solve.add_argument("--raw", action="store_true", help="full float precision")
    p_solve.set_defaults(func=cmd_solve)

    p_curve = sub.add_parser("curve", help="rate-memory sweep to CSV")
    p_curve.add_argument("config", help="JSON config; its cache sizes scale with the grid")
    p_curve.add_argument("--grid", required=True, help="comma list or start:stop:step")
    p_curve.add_argument("--methods", required=True, help="comma-separated method list")
    p_curve.add_argument("--percent", action="store_true", help="add percent-vs-general column")
    p_curve.add_argument("--out", help="CSV path (default stdout)")
    p_curve.add_argument("--raw", action="store_true")
    p_curve.set_defaults(func=cmd_curve)

    p_eval = sub.add_parser("eval", help="feasibility-check and rate a placement")
    p_eval.add_argument("config")
    p_eval.add_argument("placement", help="placement JSON")
    p_eval.add_argument("--tol", type=float, default=1e-6)
    p_eval.add_argument("--per-demand", action="store_true")
    p_eval.add_argument("--out")
    p_eval.add_argument("--raw", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_sim = sub.add_parser("simulate", help="bit-level delivery and decoding")
    p_sim.add_argument("config")
    p_sim.add_argument("placement")
    p_sim.add_argument("--unit-bits", type=int, default=delivery_sim.DEFAULT_UNIT_BITS)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--demands", default="all", help="'all' or a sample count")
    p_sim.add_argument("--dump-log", help="write the last transmission log as JSON")
    p_sim.add_argument("--payloads", action="store_true", help="include payload bits in the log")
    p_sim.add_argument("--out")
    p_sim.add_argument("--raw", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_pmf = sub.add_parser("pmf", help="order-statistic PMF table as CSV")
    p_pmf.add_argument("config")
    p_pmf.add_argument("--out")
    p_pmf.add_argument("--raw", action="store_true")
    p_pmf.set_defaults(func=cmd_pmf)

    p_report = sub.add_parser("report", help="run a bundled study: CSV + PNG figure")
    p_report.add_argument("--study", default="all", choices=("all", *report.STUDIES))
    p_report.add_argument("--out-dir", default="reports")
    p_report.add_argument("--grid", help="override the default 0..6 integer grid")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surfaced as machine-readable JSON, nonzero exit
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
