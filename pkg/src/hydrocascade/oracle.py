"""Exhaustive-enumeration optimum for desk-sized instances.

The oracle walks every discretized release and commitment sequence, period
by period, and evaluates each with the tier physics (the same fitted
curves the MILP uses, evaluated as plain functions rather than as model
rows).  It exists to certify the solver pipeline on small cases.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .domain import CascadeSystem, halfplanes, topological_order
from .errors import ConfigurationError, OracleLimitError
from .solve import Schedule
from .tiers import FidelityConfig, TierPhysics, tier_physics

MAX_RESERVOIRS = 2
MAX_PERIODS = 4
MAX_LEVELS = 8
MAX_LEAVES = 2_000_000
FLOW_TOL = 1e-6  # m3/s equivalent slack on storage bounds
TOL = 1e-6


@dataclass
class OracleResult:
    status: str  # optimal | infeasible
    objective: float
    schedule: Schedule | None
    evaluated: int
    sense: str


@dataclass(frozen=True)
class _Option:
    on: int
    q: float


def _unit_options(system, config, uid, levels) -> list[_Option]:
    huc = config.zones_mode != "convex"
    desc = sorted({float(v) for v in levels}, reverse=True)
    if not huc:
        return [_Option(1, q) for q in desc]
    opts = [_Option(1, q) for q in desc]
    if 0.0 in desc:
        opts.append(_Option(0, 0.0))
    return opts


def brute_force_oracle(
    system: CascadeSystem,
    inflows: Mapping[str, Sequence[float]],
    config: FidelityConfig,
    discretization: Mapping[str, Sequence[float]] | None = None,
    physics: TierPhysics | None = None,
) -> OracleResult:
    """Best objective over all grid schedules, with ties kept in enumeration order.

    ``discretization`` maps unit ids to their turbined-discharge levels and
    defaults to ``config.discharge_levels``.  Levels are tried from high to
    low and periods are decided in order, so among equal optima the one
    releasing earliest wins.  Without ``config.spill_levels`` the only
    spill is the forced overflow above ``v_max``.
    """
    grid = dict(discretization or config.discharge_levels or {})
    T = system.T
    if len(system.reservoirs) > MAX_RESERVOIRS or T > MAX_PERIODS:
        raise OracleLimitError(
            f"instance has {len(system.reservoirs)} reservoirs and {T} periods; "
            f"the oracle handles at most {MAX_RESERVOIRS} and {MAX_PERIODS}"
        )
    for u in system.units:
        if u.id not in grid or not grid[u.id]:
            raise OracleLimitError(f"no discharge grid for unit {u.id!r}")
        if len(grid[u.id]) > MAX_LEVELS:
            raise OracleLimitError(f"unit {u.id!r} has {len(grid[u.id])} levels; at most {MAX_LEVELS} allowed")
    if config.power_mode == "mccormick":
        raise ConfigurationError("the McCormick tier is a relaxation with no point-valued power; use another tier")
    phys = physics or tier_physics(system, config)
    order = topological_order(system)
    unit_opts = {u.id: _unit_options(system, config, u.id, grid[u.id]) for u in system.units}
    spill_opts = sorted({float(s) for s in config.spill_levels}, reverse=True) if config.spill_levels else [None]
    per_period = [unit_opts[u.id] for u in system.units] + [spill_opts] * len(system.reservoirs)
    per_period_count = math.prod(len(o) for o in per_period)
    leaves = per_period_count**T
    if leaves > MAX_LEAVES:
        raise OracleLimitError(f"enumeration needs {leaves} leaves, above the limit of {MAX_LEAVES}")
    choices = list(itertools.product(*per_period))

    ev = _Evaluator(system, inflows, config, phys, order)
    sense = "min" if config.objective.kind == "peak_shave" else "max"
    best = {"value": None, "path": None}
    count = 0

    def better(v):
        if best["value"] is None:
            return True
        return v > best["value"] + 1e-12 if sense == "max" else v < best["value"] - 1e-12

    def walk(t, state, path):
        nonlocal count
        if t > T:
            count += 1
            value = ev.objective(path)
            if better(value):
                best["value"], best["path"] = value, list(path)
            return
        for choice in choices:
            step = ev.step(t, state, choice)
            if step is None:
                continue
            path.append(step)
            walk(t + 1, step, path)
            path.pop()

    walk(1, None, [])
    if best["path"] is None:
        return OracleResult("infeasible", math.nan, None, count, sense)
    return OracleResult("optimal", best["value"], ev.schedule(best["path"], best["value"]), count, sense)


class _Evaluator:
    def __init__(self, system, inflows, config, phys, order):
        self.system = system
        self.inflows = {k: np.asarray(v, dtype=float) for k, v in inflows.items()}
        self.config = config
        self.phys = phys
        self.order = order
        self.units = list(system.units)
        self.res = list(system.reservoirs)
        self.huc = config.zones_mode != "convex"

    def step(self, t, prev, choice):
        """Evaluate period ``t``; returns the period record or None if infeasible."""
        sys, dt = self.system, self.system.dt
        nu = len(self.units)
        opts = dict(zip((u.id for u in self.units), choice[:nu]))
        spills = dict(zip((r.id for r in self.res), choice[nu:]))
        hist = prev["releases"] if prev else {r.id: [] for r in self.res}
        rec = {"t": t, "opts": opts, "V": {}, "S": {}, "Q": {}, "E": {}, "h": {}, "P": {}, "releases": {}}
        for rid in self.order:
            r = sys.reservoir(rid)
            rp = self.phys.reservoirs[rid]
            v_prev = prev["V"][rid] if prev else r.v_initial
            inflow = self.inflows[rid][t - 1]
            for arc in sys.incoming(rid):
                terms, c = arc.routing.terms(t)
                inflow += c
                series = rec["releases"][arc.from_reservoir]
                for src, w in terms:
                    inflow += w * series[src - 1]
            qp = sum(opts[u.id].q for u in sys.units_of(rid))
            loss = r.loss.loss(t, v_prev)
            tol_v = FLOW_TOL * dt
            s = spills[rid]
            if s is None:
                v_free = v_prev + (inflow - qp - loss) * dt
                s = max(0.0, (v_free - r.v_max) / dt)
                if s > r.spill_max + TOL:
                    return None
            elif s > r.spill_max + TOL:
                return None
            q = qp + s
            if q > rp.release_ub + TOL:
                return None
            v = v_prev + (inflow - q - loss) * dt
            lb = max(r.v_min, r.terminal_min) if t == sys.T else r.v_min
            if v < lb - tol_v or v > r.v_max + tol_v:
                return None
            e = float(rp.elevation(0.5 * (v_prev + v)))
            if e < r.e_min - TOL or e > r.e_max + TOL:
                return None
            rec["V"][rid], rec["S"][rid], rec["Q"][rid], rec["E"][rid] = v, s, q, e
            rec["releases"][rid] = list(hist[rid]) + [q]
        for rid in self.order:
            rp = self.phys.reservoirs[rid]
            units = sys.units_of(rid)
            if not units:
                continue
            e_down = rec["E"][rp.downstream] if rp.downstream is not None else 0.0
            tail = float(rp.tailrace(rec["Q"][rid])) + rp.backwater * e_down
            for u in units:
                up = self.phys.units[u.id]
                opt = opts[u.id]
                h = rec["E"][rid] - tail - float(up.head_loss(opt.q))
                if h < up.h_box[0] - TOL or h > up.h_box[1] + TOL:
                    return None
                p = self._power(u, up, opt, h)
                if p is None:
                    return None
                rec["h"][u.id], rec["P"][u.id] = h, p
        return rec

    def _power(self, u, up, opt, h):
        kind = up.power_kind
        if self.huc and not opt.on:
            p = 0.0
        elif kind == "linear":
            p = up.coef * opt.q
        elif kind == "pwl_1d":
            lo, hi = up.curve.domain
            if opt.q < lo - TOL or opt.q > hi + TOL:
                return None
            p = float(up.curve(opt.q))
        else:
            p = float(up.surface(opt.q, h))
        if p < up.p_floor - TOL or p > up.p_max + TOL:
            return None
        zones = u.zones
        mode = self.config.zones_mode
        if mode == "convex":
            cap = max(hi for _, hi in zones.intervals) if zones.intervals else up.p_max
            return p if p <= cap + TOL else None
        if not opt.on:
            return p
        if opt.q < u.q_min - TOL:
            return None
        if mode == "huc_poz_1d" and zones.intervals:
            ok = any(lo - TOL <= p <= min(hi, up.p_max) + TOL for lo, hi in zones.intervals)
        elif mode == "huc_poz_2d" and zones.polygons:
            p_top = max(max(v for v, _ in poly) for poly in zones.polygons)
            ok = p <= min(up.p_max, p_top) + TOL and p >= up.p_floor - TOL and any(
                all(a * p + b * h <= c + TOL for a, b, c in halfplanes(poly)) for poly in zones.polygons
            )
        else:
            lo = min(lo for lo, _ in zones.intervals) if zones.intervals else up.p_floor
            hi = min(up.p_max, max(hi for _, hi in zones.intervals)) if zones.intervals else up.p_max
            ok = lo - TOL <= p <= hi + TOL
        return p if ok else None

    def objective(self, path) -> float:
        spec = self.config.objective
        hours = self.system.dt / 3600.0
        if spec.kind == "peak_shave":
            return max(spec.load[rec["t"] - 1] - sum(rec["P"].values()) for rec in path)
        total = 0.0
        for rec in path:
            for uid, p in rec["P"].items():
                price = spec.prices[uid][rec["t"] - 1] if spec.kind == "revenue_max" else 1.0
                total += price * p * hours
        if spec.kind == "revenue_max" and spec.startup_cost_enabled and self.huc:
            for u in self.units:
                prev_on = int(u.initial_on)
                for rec in path:
                    on = rec["opts"][u.id].on
                    if on > prev_on:
                        total -= u.zones.startup_cost
                    prev_on = on
        return total

    def schedule(self, path, value) -> Schedule:
        T, dt = self.system.T, self.system.dt
        sched = Schedule(T, dt, objective=value)
        for u in self.units:
            sched.turbined[u.id] = [rec["opts"][u.id].q if rec["opts"][u.id].on or not self.huc else 0.0 for rec in path]
            sched.power[u.id] = [rec["P"][u.id] for rec in path]
            sched.commitment[u.id] = [float(rec["opts"][u.id].on) for rec in path]
            sched.head[u.id] = [rec["h"][u.id] for rec in path]
        for r in self.res:
            sched.spill[r.id] = [rec["S"][r.id] for rec in path]
            sched.storage[r.id] = [rec["V"][r.id] for rec in path]
            sched.elevation[r.id] = [rec["E"][r.id] for rec in path]
        sched.__post_init__()
        return sched
