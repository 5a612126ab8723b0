"""Command-line interface: ``hydrocascade <command> ...``.

Exit codes: 0 success, 1 infeasible model, 2 input or usage error.  All
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .approx import FitSpec, fit_pwl_1d_optimal, max_error
from .domain import validate_topology
from .errors import CascadeError, FitError
from .formulation import build_model
from .io import Case, parse_cascade_file, read_schedule_csv, write_rows, write_schedule_csv
from .simulate import fidelity_gap, mass_balance_residual, simulate
from .solve import SolveOptions, diagnose_infeasibility, extract_schedule, solve
from .synthetic import generate_synthetic_cascade
from .tiers import TIER_PRESETS, FidelityConfig, tier_config, tier_physics

TIME_LIMIT_ENV = "HYDROCASCADE_TIME_LIMIT"
EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2


def _default_time_limit() -> float:
    raw = os.environ.get(TIME_LIMIT_ENV)
    if raw is None:
        return 60.0
    try:
        value = float(raw)
    except ValueError:
        raise CascadeError(f"{TIME_LIMIT_ENV} must be a number of seconds, got {raw!r}") from None
    if value <= 0:
        raise CascadeError(f"{TIME_LIMIT_ENV} must be positive")
    return value


def _options(args) -> SolveOptions:
    limit = args.time_limit if args.time_limit is not None else _default_time_limit()
    return SolveOptions(time_limit=limit, mip_gap=args.mip_gap)


def _config(case: Case, tier: str | None) -> FidelityConfig:
    return case.tier(tier) if tier else case.config


def _fit_bound_mwh(case: Case, config: FidelityConfig) -> float:
    """Declared worst-case energy error of a tier's fits over the horizon."""
    phys = tier_physics(case.system, config)
    hours = case.system.dt / 3600.0
    return sum(u.error_bound for u in phys.units.values()) * hours * case.system.T


def _solve_case(case: Case, config: FidelityConfig, options: SolveOptions):
    model = build_model(case.system, case.inflows, config)
    sol = solve(model, options)
    return model, sol


def cmd_validate(args) -> int:
    case = parse_cascade_file(args.file)
    report = validate_topology(case.system)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not report.ok:
        for e in report.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    s = case.system
    print(f"ok: {len(s.reservoirs)} reservoirs, {len(s.units)} units, {len(s.arcs)} arcs, {s.T} periods")
    return EXIT_OK


def cmd_solve(args) -> int:
    case = parse_cascade_file(args.file)
    config = _config(case, args.tier)
    options = _options(args)
    model, sol = _solve_case(case, config, options)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.write_lp:
        (out / "model.lp").write_text(model.to_lp(), encoding="utf-8")
    lines = [
        f"tier: {args.tier or 'case'}",
        f"status: {sol.status}",
        f"objective: {sol.objective!r}",
        f"bound: {sol.bound!r}",
        f"wall_time_s: {sol.wall_time!r}",
        f"variables: {model.n_vars}",
        f"binaries: {model.n_binaries}",
        f"constraints: {len(model.constraints)}",
    ]
    if not sol.has_values:
        if sol.status == "infeasible":
            status, binding = diagnose_infeasibility(model, options)
            lines.append(f"elastic_status: {status}")
            for b in binding:
                lines.append(f"binding: {b.variable} {b.side} {b.amount!r}")
            (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            print("model is infeasible", file=sys.stderr)
            for b in binding:
                print(f"  elevation bound {b.side} of {b.variable} violated by {b.amount:.6g}", file=sys.stderr)
            return EXIT_INFEASIBLE
        (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"solve failed: {sol.status} ({sol.message})", file=sys.stderr)
        return EXIT_INFEASIBLE if sol.status == "unbounded" else EXIT_INPUT
    sched = extract_schedule(sol, model, case.system)
    write_schedule_csv(out / "schedule.csv", sched)
    lines.append(f"energy_mwh: {sched.energy_mwh!r}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{sol.status}: objective {sol.objective:.6f}; wrote {out / 'schedule.csv'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    case = parse_cascade_file(args.file)
    s = case.system
    sched = read_schedule_csv(args.schedule, s.T, s.dt)
    rep = simulate(s, sched, case.inflows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for q, table in (("V", rep.storage), ("E", rep.elevation), ("I", rep.inflow), ("Q", rep.release),
                     ("S", rep.spill), ("QP", rep.turbined), ("h", rep.head), ("P", rep.power)):
        for ent, vals in table.items():
            rows += [(q, ent, t, float(v)) for t, v in enumerate(vals, start=1)]
    write_rows(out / "report.csv", ("quantity", "entity_id", "period", "value"), rows)
    write_rows(out / "violations.csv", ("kind", "entity_id", "period", "magnitude"),
               [(v.kind, v.entity, v.period, v.magnitude) for v in rep.violations])
    gap = fidelity_gap(sched, rep)
    lines = [
        f"energy_predicted_mwh: {rep.energy_predicted!r}",
        f"energy_realized_mwh: {rep.energy_realized!r}",
        f"energy_gap_percent: {gap.energy_gap_percent!r}",
        f"max_head_error_m: {gap.max_head_error!r}",
        f"violations: {len(rep.violations)}",
        f"mass_balance_residual: {mass_balance_residual(s, rep, case.inflows)!r}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"realized {rep.energy_realized:.6f} MWh, gap {gap.energy_gap_percent:.4f}%, {len(rep.violations)} violations")
    return EXIT_OK


GAP_HEADER = (
    "tier", "status", "objective", "energy_predicted_mwh", "energy_realized_mwh",
    "energy_gap_percent", "fit_bound_percent", "max_head_error_m", "violations", "wall_time_s",
)


def compare_tiers(case: Case, tiers, options: SolveOptions) -> list[dict]:
    """Solve and simulate each tier; one row of gap metrics per tier."""
    rows = []
    for name in tiers:
        config = case.tier(name)
        model, sol = _solve_case(case, config, options)
        row = {k: "" for k in GAP_HEADER}
        row.update(tier=name, status=sol.status, wall_time_s=sol.wall_time)
        if sol.has_values:
            sched = extract_schedule(sol, model, case.system)
            rep = simulate(case.system, sched, case.inflows)
            gap = fidelity_gap(sched, rep)
            bound = _fit_bound_mwh(case, config)
            row.update(
                objective=sol.objective,
                energy_predicted_mwh=gap.energy_predicted,
                energy_realized_mwh=gap.energy_realized,
                energy_gap_percent=gap.energy_gap_percent,
                fit_bound_percent=100.0 * bound / gap.energy_realized if gap.energy_realized > 0 else math.inf,
                max_head_error_m=gap.max_head_error,
                violations=gap.violation_count,
            )
        rows.append(row)
    return rows


def cmd_compare(args) -> int:
    case = parse_cascade_file(args.file)
    tiers = [t.strip() for t in args.tiers.split(",") if t.strip()]
    if not tiers:
        raise CascadeError("--tiers needs at least one tier name")
    rows = compare_tiers(case, tiers, _options(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "gaps.csv", GAP_HEADER, [[r[k] for k in GAP_HEADER] for r in rows])
    print(f"{'tier':<14}{'status':<16}{'predicted':>12}{'realized':>12}{'gap %':>10}{'bound %':>10}")
    for r in rows:
        if r["status"] in ("optimal", "feasible_limit"):
            print(f"{r['tier']:<14}{r['status']:<16}{r['energy_predicted_mwh']:>12.4f}{r['energy_realized_mwh']:>12.4f}"
                  f"{r['energy_gap_percent']:>10.4f}{r['fit_bound_percent']:>10.4f}")
        else:
            print(f"{r['tier']:<14}{r['status']:<16}")
    if all(r["status"] == "infeasible" for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_fitpwl(args) -> int:
    path = Path(args.samples)
    if not path.is_file():
        raise FileNotFoundError(f"samples file {str(path)!r} not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["x", "y"]:
            raise CascadeError(f"{path}: header must be 'x,y'")
        try:
            pts = [(float(r[0]), float(r[1])) for r in reader if r]
        except (ValueError, IndexError) as exc:
            raise CascadeError(f"{path}: malformed sample ({exc})") from None
    if not pts:
        raise CascadeError(f"{path}: no samples")
    x, y = np.array(pts).T
    curve = fit_pwl_1d_optimal(x, y, FitSpec(args.epsilon, args.max_pieces))
    err, _ = max_error(curve, (x, y))
    write_rows(args.out, ("x", "y"), zip(map(float, curve.x), map(float, curve.y)))
    print(f"{curve.n_pieces} pieces, max error {err:.6g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    tiers = [t.strip() for t in args.tiers.split(",") if t.strip()]
    options = _options(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for size in sizes:
        system, inflows = generate_synthetic_cascade(size, args.units, args.seed, n_periods=args.periods)
        for tier in tiers:
            config = tier_config(tier, power_grid=(3, 3))
            model = build_model(system, inflows, config)
            sol = solve(model, options)
            rows.append((size, tier, sol.status, sol.objective, sol.bound, sol.wall_time, model.n_vars, model.n_binaries))
            print(f"size {size} {tier:<12} {sol.status:<15} objective {sol.objective:.4f} in {sol.wall_time:.2f}s")
    write_rows(out / "bench.csv", ("size", "tier", "status", "objective", "bound", "wall_time_s", "variables", "binaries"), rows)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hydrocascade", description="Short-term cascade hydropower scheduling.")
    sub = p.add_subparsers(dest="command", metavar="command")

    def solver_flags(sp):
        sp.add_argument("--time-limit", type=float, default=None, help=f"seconds (default ${TIME_LIMIT_ENV} or 60)")
        sp.add_argument("--mip-gap", type=float, default=1e-6)

    sp = sub.add_parser("validate", help="check a case file")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="optimize a case and write schedule.csv and summary.txt")
    sp.add_argument("file")
    sp.add_argument("--out", required=True)
    sp.add_argument("--tier", default=None, help=f"named tier ({', '.join(TIER_PRESETS)} or case-defined)")
    sp.add_argument("--write-lp", action="store_true", help="also write model.lp")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", help="replay a schedule through the exact physics")
    sp.add_argument("file")
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="solve and simulate several tiers, write gaps.csv")
    sp.add_argument("file")
    sp.add_argument("--tiers", required=True)
    sp.add_argument("--out", required=True)
    solver_flags(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("fitpwl", help="fit a minimal PWL curve to x,y samples")
    sp.add_argument("--samples", required=True)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--max-pieces", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_fitpwl)

    sp = sub.add_parser("bench", help="solve synthetic cascades of several sizes")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sizes", default="1,2,3")
    sp.add_argument("--units", type=int, default=1)
    sp.add_argument("--periods", type=int, default=6)
    sp.add_argument("--tiers", default="lp_fixed,milp_pwl,milp_poz")
    sp.add_argument("--out", required=True)
    solver_flags(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def run_cli(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (CascadeError, ValueError, FileNotFoundError, yaml.YAMLError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())
