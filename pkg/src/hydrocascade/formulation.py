"""Assemble the cascade scheduling problem as an :class:`AbstractModel`.

Per reservoir and period the model carries storage ``V``, total release
``Q``, spill ``S``, total inflow ``I``, average storage ``VB``, forebay
elevation ``E`` and (for reservoirs with units) tailwater ``TR``.  Per unit
and period it carries turbined discharge ``QP``, power ``P``, net head ``h``
and, under commitment, status ``u``.  The tier physics decide how ``E``,
``TR``, head loss and ``P`` are tied to the flows.

Storage variables are held in flow-period units (m3 divided by the period
length) so that every row has coefficients of comparable magnitude;
``model.meta["volume_scale"]`` converts them back to m3.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Mapping, Sequence

import numpy as np

from .approx import PwlCurve1D, PwlSurface2D, mccormick_envelope
from .domain import CascadeSystem, GeneratingUnit, OperatingZoneSet, halfplanes, validate_topology
from .errors import BuildError
from .model import AbstractModel, Expr
from .tiers import FidelityConfig, ObjectiveSpec, TierFunction, TierPhysics, UnitPhysics, tier_physics

BIG_M_PAD = 1e-6


def _name(q: str, entity: str, t: int | None = None) -> str:
    return f"{q}_{entity}" if t is None else f"{q}_{entity}_{t}"


# ---------------------------------------------------------------------------
# piecewise-linear encodings
# ---------------------------------------------------------------------------


def encode_pwl_constraint(
    model: AbstractModel,
    x_var: int,
    y_var: int,
    curve: PwlCurve1D,
    name: str | None = None,
    scale_var: int | None = None,
) -> list[int]:
    """Tie ``y = curve(x)`` with convex-combination weights and piece binaries.

    With ``scale_var`` (a 0/1 status) the weights and piece binaries sum to
    that variable instead of 1, so ``x = y = 0`` whenever it is off.
    """
    name = name or f"pwl_{model.name_of(y_var)}"
    xv = model.variables[x_var]
    lo, hi = curve.domain
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    if xv.ub > hi + tol or (scale_var is None and xv.lb < lo - tol):
        raise BuildError(
            f"{name}: curve domain [{lo}, {hi}] does not cover {xv.name} bounds [{xv.lb}, {xv.ub}]"
        )
    n = len(curve.x)
    lam = [model.add_var(f"{name}_l{k}", 0.0, 1.0) for k in range(n)]
    z = [model.add_var(f"{name}_z{j}", kind="binary") for j in range(n - 1)]
    total = 1.0 if scale_var is None else Expr.of(scale_var)
    rows = [
        model.add_constraint(Expr({v: 1.0 for v in lam}) - total, "==", 0.0, f"{name}_sum"),
        model.add_constraint(Expr({v: 1.0 for v in z}) - total, "==", 0.0, f"{name}_pick"),
        model.add_constraint(Expr({v: float(xk) for v, xk in zip(lam, curve.x)}).add(x_var, -1.0), "==", 0.0, f"{name}_x"),
        model.add_constraint(Expr({v: float(yk) for v, yk in zip(lam, curve.y)}).add(y_var, -1.0), "==", 0.0, f"{name}_y"),
    ]
    for k in range(n):
        adj = Expr.of(lam[k])
        if k > 0:
            adj.add(z[k - 1], -1.0)
        if k < n - 1:
            adj.add(z[k], -1.0)
        rows.append(model.add_constraint(adj, "<=", 0.0, f"{name}_adj{k}"))
    return rows


def encode_pwl_2d_constraint(
    model: AbstractModel,
    x_var: int,
    y_var: int,
    w_var: int,
    surface: PwlSurface2D,
    name: str | None = None,
) -> list[int]:
    """Tie ``w = surface(x, y)`` with vertex weights and one binary per triangle."""
    name = name or f"pwl2_{model.name_of(w_var)}"
    (xlo, xhi), (ylo, yhi) = surface.domain
    for v, lo, hi in ((x_var, xlo, xhi), (y_var, ylo, yhi)):
        var = model.variables[v]
        tol = 1e-9 * max(1.0, abs(lo), abs(hi))
        if var.lb < lo - tol or var.ub > hi + tol:
            raise BuildError(
                f"{name}: surface axis [{lo}, {hi}] does not cover {var.name} bounds [{var.lb}, {var.ub}]"
            )
    nx, ny = len(surface.x_grid), len(surface.y_grid)
    lam = {(i, j): model.add_var(f"{name}_l{i}_{j}", 0.0, 1.0) for i in range(nx) for j in range(ny)}
    tris = surface.triangles()
    z = [model.add_var(f"{name}_z{k}", kind="binary") for k in range(len(tris))]
    rows = [
        model.add_constraint(Expr({v: 1.0 for v in lam.values()}), "==", 1.0, f"{name}_sum"),
        model.add_constraint(Expr({v: 1.0 for v in z}), "==", 1.0, f"{name}_pick"),
    ]
    xs = Expr({v: float(surface.x_grid[i]) for (i, j), v in lam.items()}).add(x_var, -1.0)
    ys = Expr({v: float(surface.y_grid[j]) for (i, j), v in lam.items()}).add(y_var, -1.0)
    ws = Expr({v: float(surface.values[i][j]) for (i, j), v in lam.items()}).add(w_var, -1.0)
    rows += [
        model.add_constraint(xs, "==", 0.0, f"{name}_x"),
        model.add_constraint(ys, "==", 0.0, f"{name}_y"),
        model.add_constraint(ws, "==", 0.0, f"{name}_w"),
    ]
    touching: dict[tuple[int, int], list[int]] = {key: [] for key in lam}
    for k, tri in enumerate(tris):
        for vert in tri:
            touching[vert].append(z[k])
    for key, v in lam.items():
        expr = Expr.of(v)
        for zk in touching[key]:
            expr.add(zk, -1.0)
        rows.append(model.add_constraint(expr, "<=", 0.0, f"{name}_adj{key[0]}_{key[1]}"))
    return rows


def _rescale_x(f: TierFunction, scale: float) -> TierFunction:
    """The same function with its argument expressed in units of ``scale``."""
    if f.kind == "linear":
        return replace(f, slope=f.slope * scale)
    if f.kind == "pwl":
        return replace(f, curve=PwlCurve1D(np.asarray(f.curve.x) / scale, f.curve.y))
    return f


def encode_tier_function(model: AbstractModel, x_var: int, f: TierFunction, name: str) -> Expr:
    """Expression for ``f(x)``; PWL functions get an auxiliary variable."""
    if f.kind == "zero":
        return Expr()
    if f.kind in ("constant", "linear"):
        return Expr.const(f.value).add(x_var, f.slope)
    lo, hi = float(np.min(f.curve.y)), float(np.max(f.curve.y))
    y = model.add_var(name, lo, hi)
    encode_pwl_constraint(model, x_var, y, f.curve, name=f"pwl_{name}")
    return Expr.of(y)


# ---------------------------------------------------------------------------
# operating zones
# ---------------------------------------------------------------------------


def encode_zones(
    model: AbstractModel,
    p_var: int,
    h_var: int,
    zones: OperatingZoneSet,
    period: int,
    *,
    unit: GeneratingUnit,
    physics: UnitPhysics,
    mode: str,
    qp_var: int,
) -> tuple[list[int], list[int]]:
    """Zone rows for one unit and period; returns (constraint ids, binary ids).

    Creates the status variable ``u`` (keyed ``("u", unit, t)``) in every
    commitment mode.  Big-M constants come from the variable bounds.
    One-dimensional zones bound power; bounding turbined discharge instead
    would only change which variable the interval rows act on.
    """
    t = period
    uid = unit.id
    rows: list[int] = []
    p_hi = physics.p_max
    if mode == "convex":
        cap = max(hi for _, hi in zones.intervals) if zones.intervals else p_hi
        rows.append(model.add_constraint(Expr.of(p_var), "<=", min(cap, p_hi), f"pcap_{uid}_{t}"))
        return rows, []

    if mode == "huc_poz_1d" and not zones.intervals:
        if not zones.commitment:
            raise BuildError(f"unit {uid!r}: huc_poz_1d needs power intervals or commitment")
        mode = "huc_only"
    if mode == "huc_poz_2d" and not zones.polygons:
        if not zones.commitment:
            raise BuildError(f"unit {uid!r}: huc_poz_2d needs 2D operating zones")
        mode = "huc_only"

    if mode == "huc_only":
        u = model.add_var(_name("u", uid, t), kind="binary", key=("u", uid, t))
        lo = min(lo for lo, _ in zones.intervals) if zones.intervals else physics.p_floor
        hi = min(p_hi, max(hi for _, hi in zones.intervals)) if zones.intervals else p_hi
        rows.append(model.add_constraint(Expr.of(p_var).add(u, -hi), "<=", 0.0, f"pon_hi_{uid}_{t}"))
        rows.append(model.add_constraint(Expr.of(p_var).add(u, -lo), ">=", 0.0, f"pon_lo_{uid}_{t}"))
        bins = [u]
    elif mode == "huc_poz_1d":
        u = model.add_var(_name("u", uid, t), 0.0, 1.0, key=("u", uid, t))
        z = [model.add_var(f"zone_{uid}_{t}_{k}", kind="binary") for k in range(len(zones.intervals))]
        rows.append(model.add_constraint(Expr({v: 1.0 for v in z}).add(u, -1.0), "==", 0.0, f"zsum_{uid}_{t}"))
        hi_e = Expr.of(p_var)
        lo_e = Expr.of(p_var)
        for zk, (lo, hi) in zip(z, zones.intervals):
            hi_e.add(zk, -min(hi, p_hi))
            lo_e.add(zk, -lo)
        rows.append(model.add_constraint(hi_e, "<=", 0.0, f"zhi_{uid}_{t}"))
        rows.append(model.add_constraint(lo_e, ">=", 0.0, f"zlo_{uid}_{t}"))
        bins = z
    else:
        u = model.add_var(_name("u", uid, t), 0.0, 1.0, key=("u", uid, t))
        z = [model.add_var(f"zone_{uid}_{t}_{k}", kind="binary") for k in range(len(zones.polygons))]
        rows.append(model.add_constraint(Expr({v: 1.0 for v in z}).add(u, -1.0), "==", 0.0, f"zsum_{uid}_{t}"))
        pv, hv = model.variables[p_var], model.variables[h_var]
        p_top = max(max(p for p, _ in poly) for poly in zones.polygons)
        rows.append(model.add_constraint(Expr.of(p_var).add(u, -min(p_hi, p_top)), "<=", 0.0, f"pon_hi_{uid}_{t}"))
        rows.append(model.add_constraint(Expr.of(p_var).add(u, -physics.p_floor), ">=", 0.0, f"pon_lo_{uid}_{t}"))
        if not (math.isfinite(hv.lb) and math.isfinite(hv.ub)):
            raise BuildError(f"unit {uid!r}: 2D zones need a finite head box")
        for k, (zk, poly) in enumerate(zip(z, zones.polygons)):
            for m, (a, b, c) in enumerate(halfplanes(poly)):
                worst = max(a * pv.lb, a * pv.ub) + max(b * hv.lb, b * hv.ub)
                big_m = max(worst - c, 0.0) + BIG_M_PAD
                expr = Expr({p_var: a}).add(h_var, b).add(zk, big_m)
                rows.append(model.add_constraint(expr, "<=", c + big_m, f"zpoly_{uid}_{t}_{k}_{m}"))
        bins = z
    rows.append(model.add_constraint(Expr.of(qp_var).add(u, -unit.q_max), "<=", 0.0, f"qon_hi_{uid}_{t}"))
    rows.append(model.add_constraint(Expr.of(qp_var).add(u, -unit.q_min), ">=", 0.0, f"qon_lo_{uid}_{t}"))
    return rows, bins


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------


def build_objective(model: AbstractModel, spec: ObjectiveSpec, system: CascadeSystem) -> Expr:
    spec.check(system)
    hours = system.dt / 3600.0
    if spec.kind == "energy_max":
        obj = Expr()
        for u in system.units:
            for t in system.time_grid.periods:
                obj.add(model.var("P", u.id, t), hours)
        model.set_objective(obj, "max")
        return obj
    if spec.kind == "revenue_max":
        obj = Expr()
        for u in system.units:
            for t in system.time_grid.periods:
                obj.add(model.var("P", u.id, t), spec.prices[u.id][t - 1] * hours)
                if spec.startup_cost_enabled and ("s", u.id, t) in model.index:
                    obj.add(model.var("s", u.id, t), -u.zones.startup_cost)
        model.set_objective(obj, "max")
        return obj
    m = model.add_var("M_peak", -math.inf, math.inf, key=("M", "system", None))
    for t in system.time_grid.periods:
        row = Expr.of(m)
        for u in system.units:
            row.add(model.var("P", u.id, t), 1.0)
        model.add_constraint(row, ">=", spec.load[t - 1], f"peak_{t}")
    obj = Expr.of(m)
    model.set_objective(obj, "min")
    return obj


# ---------------------------------------------------------------------------
# full model
# ---------------------------------------------------------------------------


def _check_inputs(system: CascadeSystem, inflows: Mapping[str, Sequence[float]]):
    report = validate_topology(system)
    if not report.ok:
        raise BuildError("system does not validate: " + "; ".join(report.errors))
    for r in system.reservoirs:
        if r.id not in inflows:
            raise BuildError(f"no inflow series for reservoir {r.id!r}")
        if len(inflows[r.id]) != system.T:
            raise BuildError(f"inflow series of {r.id!r} has length {len(inflows[r.id])}, expected {system.T}")


def _grid_select(model: AbstractModel, var: int, levels: Sequence[float], name: str):
    ys = [model.add_var(f"{name}_g{k}", kind="binary") for k in range(len(levels))]
    model.add_constraint(Expr({y: 1.0 for y in ys}), "==", 1.0, f"{name}_gsum")
    model.add_constraint(Expr({y: float(lv) for y, lv in zip(ys, levels)}).add(var, -1.0), "==", 0.0, f"{name}_gval")


def build_model(
    system: CascadeSystem,
    inflows: Mapping[str, Sequence[float]],
    config: FidelityConfig,
    physics: TierPhysics | None = None,
) -> AbstractModel:
    """Build the scheduling model of ``system`` at the tier ``config`` describes."""
    _check_inputs(system, inflows)
    phys = physics or tier_physics(system, config)
    config.objective.check(system)
    m = AbstractModel()
    T, dt = system.T, system.dt
    m.meta.update(system=system, config=config, physics=phys, volume_scale=dt)
    periods = system.time_grid.periods

    for r in system.reservoirs:
        rp = phys.reservoirs[r.id]
        for t in periods:
            lb = max(r.v_min, r.terminal_min) if t == T else r.v_min
            m.add_var(_name("V", r.id, t), lb / dt, r.v_max / dt, key=("V", r.id, t))
            s_ub = r.spill_max
            m.add_var(_name("S", r.id, t), 0.0, s_ub, key=("S", r.id, t))
            m.add_var(_name("Q", r.id, t), 0.0, rp.release_ub, key=("Q", r.id, t))
            m.add_var(_name("I", r.id, t), -math.inf, math.inf, key=("I", r.id, t))
            m.add_var(_name("VB", r.id, t), r.v_min / dt, r.v_max / dt, key=("VB", r.id, t))
            e = m.add_var(_name("E", r.id, t), r.e_min, r.e_max, key=("E", r.id, t))
            m.elastic.append(e)
            if config.spill_levels:
                _grid_select(m, m.var("S", r.id, t), config.spill_levels, _name("S", r.id, t))

    for u in system.units:
        up = phys.units[u.id]
        levels = config.levels_for(u.id)
        for t in periods:
            qp = m.add_var(_name("QP", u.id, t), 0.0, u.q_max, key=("QP", u.id, t))
            m.add_var(_name("P", u.id, t), up.p_floor, up.p_max, key=("P", u.id, t))
            h = m.add_var(_name("h", u.id, t), up.h_box[0], up.h_box[1], key=("h", u.id, t))
            m.derived.append(h)
            if levels:
                bad = [lv for lv in levels if lv < 0 or lv > u.q_max]
                if bad:
                    raise BuildError(f"unit {u.id!r}: discharge levels {bad} outside [0, {u.q_max}]")
                _grid_select(m, qp, levels, _name("QP", u.id, t))

    for r in system.reservoirs:
        rp = phys.reservoirs[r.id]
        units = system.units_of(r.id)
        for t in periods:
            V, S, Q, I = (m.var(k, r.id, t) for k in ("V", "S", "Q", "I"))
            VB, E = m.var("VB", r.id, t), m.var("E", r.id, t)
            v_prev = r.v_initial / dt if t == 1 else None

            # release composition
            row = Expr.of(Q).add(S, -1.0)
            for u in units:
                row.add(m.var("QP", u.id, t), -1.0)
            m.add_constraint(row, "==", 0.0, f"release_{r.id}_{t}")

            # inflow coupling with routing
            row = Expr.of(I)
            const = float(inflows[r.id][t - 1])
            for arc in system.incoming(r.id):
                terms, c = arc.routing.terms(t)
                const += c
                for src, w in terms:
                    row.add(m.var("Q", arc.from_reservoir, src), -w)
            m.add_constraint(row, "==", const, f"inflow_{r.id}_{t}")

            # mass balance; loss uses storage at period start
            k = r.loss.storage_coefficient() * dt
            row = Expr.of(V).add(I, -1.0).add(Q, 1.0)
            rhs = -r.loss.constant_part(t)
            if v_prev is None:
                row.add(m.var("V", r.id, t - 1), k - 1.0)
            else:
                rhs += v_prev * (1.0 - k)
            m.add_constraint(row, "==", rhs, f"balance_{r.id}_{t}")

            # average storage and elevation
            row = Expr.of(VB).add(V, -0.5)
            if v_prev is None:
                row.add(m.var("V", r.id, t - 1), -0.5)
                m.add_constraint(row, "==", 0.0, f"vbar_{r.id}_{t}")
            else:
                m.add_constraint(row, "==", 0.5 * v_prev, f"vbar_{r.id}_{t}")
            elev = encode_tier_function(m, VB, _rescale_x(rp.elevation, dt), _name("EF", r.id, t))
            m.add_constraint(Expr.of(E) - elev, "==", 0.0, f"elev_{r.id}_{t}")

            if not units:
                continue
            tail = encode_tier_function(m, Q, rp.tailrace, _name("TRF", r.id, t))
            if rp.backwater and rp.downstream is not None:
                tail = tail + Expr({m.var("E", rp.downstream, t): rp.backwater})
            tr = m.add_var(_name("TR", r.id, t), -math.inf, math.inf, key=("TR", r.id, t))
            m.add_constraint(Expr.of(tr) - tail, "==", 0.0, f"tail_{r.id}_{t}")

            for u in units:
                _unit_rows(m, system, config, phys.units[u.id], u, t, E, tr)

    if config.objective.startup_cost_enabled and config.zones_mode != "convex":
        for u in system.units:
            for t in periods:
                if ("u", u.id, t) not in m.index:
                    continue
                s = m.add_var(_name("s", u.id, t), 0.0, 1.0, key=("s", u.id, t))
                row = Expr.of(s).add(m.var("u", u.id, t), -1.0)
                rhs = -float(u.initial_on) if t == 1 else 0.0
                if t > 1:
                    row.add(m.var("u", u.id, t - 1), 1.0)
                m.add_constraint(row, ">=", rhs, f"startup_{u.id}_{t}")

    build_objective(m, config.objective, system)
    problems = m.audit()
    if problems:
        raise BuildError("; ".join(problems))
    return m


def _unit_rows(m: AbstractModel, system, config: FidelityConfig, up: UnitPhysics, u: GeneratingUnit, t: int, E: int, tr: int):
    qp, p, h = m.var("QP", u.id, t), m.var("P", u.id, t), m.var("h", u.id, t)
    hl = encode_tier_function(m, qp, up.head_loss, _name("HL", u.id, t))
    m.add_constraint(Expr.of(h).add(E, -1.0).add(tr, 1.0) + hl, "==", 0.0, f"head_{u.id}_{t}")

    _, bins = encode_zones(m, p, h, u.zones, t, unit=u, physics=up, mode=config.zones_mode, qp_var=qp)
    status = m.index.get(("u", u.id, t))

    kind = up.power_kind
    if kind == "linear":
        m.add_constraint(Expr.of(p).add(qp, -up.coef), "==", 0.0, f"power_{u.id}_{t}")
    elif kind == "pwl_1d":
        encode_pwl_constraint(m, qp, p, up.curve, name=f"pwl_P_{u.id}_{t}", scale_var=status)
    elif kind == "pwl_2d":
        encode_pwl_2d_constraint(m, qp, h, p, up.surface, name=f"pwl2_P_{u.id}_{t}")
    else:
        (qlo, qhi), (hlo, hhi) = up.q_box, up.h_box
        w = m.add_var(_name("W", u.id, t), qlo * hlo, qhi * hhi)
        for k, ineq in enumerate(mccormick_envelope((qlo, qhi), (hlo, hhi))):
            expr = Expr({qp: ineq.q_coef}).add(h, ineq.h_coef).add(w, ineq.w_coef)
            m.add_constraint(expr, "<=", ineq.rhs, f"mccormick_{u.id}_{t}_{k}")
        k = system.constants.power_mw(up.eta, 1.0, 1.0)
        m.add_constraint(Expr.of(p).add(w, -k), "==", 0.0, f"power_{u.id}_{t}")
