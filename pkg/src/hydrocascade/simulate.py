"""Replay a schedule through the exact (nonlinear) cascade physics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .domain import CascadeSystem, topological_order
from .errors import InputError
from .routing import in_transit_volume, pre_horizon_volume, route_contribution
from .solve import Schedule

TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    kind: str  # storage | elevation | zone | head | discharge | spill
    entity: str
    period: int
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "magnitude", float(self.magnitude))


@dataclass
class SimulationReport:
    """Realized trajectories (SI units) and recorded violations.

    ``release`` and ``spill`` are the realized values, which differ from the
    schedule only where storage limits forced a change.  ``clamp_volume`` is
    the water (m3) added by clamping storage up to ``v_min`` when even zero
    release could not keep it there.
    """

    n_periods: int
    dt: float
    storage: dict[str, np.ndarray] = field(default_factory=dict)
    elevation: dict[str, np.ndarray] = field(default_factory=dict)
    inflow: dict[str, np.ndarray] = field(default_factory=dict)
    release: dict[str, np.ndarray] = field(default_factory=dict)
    spill: dict[str, np.ndarray] = field(default_factory=dict)
    loss: dict[str, np.ndarray] = field(default_factory=dict)
    turbined: dict[str, np.ndarray] = field(default_factory=dict)
    head: dict[str, np.ndarray] = field(default_factory=dict)
    power: dict[str, np.ndarray] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    energy_realized: float = 0.0
    energy_predicted: float = 0.0
    in_transit_volume: float = 0.0
    pre_horizon_volume: float = 0.0
    clamp_volume: float = 0.0

    @property
    def gap_percent(self) -> float:
        return _gap(self.energy_predicted, self.energy_realized)


def _gap(pred: float, real: float) -> float:
    if real > 0:
        return 100.0 * (pred - real) / real
    if pred == 0:
        return 0.0  # empty schedule: 0/0 counts as no gap
    return math.inf


def _check(system: CascadeSystem, schedule: Schedule, inflows):
    T = system.T
    if schedule.n_periods != T:
        raise InputError(f"schedule covers {schedule.n_periods} periods, system has {T}")
    for u in system.units:
        if u.id not in schedule.turbined:
            raise InputError(f"schedule has no discharge for unit {u.id!r}")
    for r in system.reservoirs:
        if r.id not in inflows:
            raise InputError(f"no inflow series for reservoir {r.id!r}")
        if len(inflows[r.id]) != T:
            raise InputError(f"inflow series of {r.id!r} has length {len(inflows[r.id])}, expected {T}")
    known = {u.id for u in system.units}
    extra = set(schedule.turbined) - known
    if extra:
        raise InputError(f"schedule refers to unknown units {sorted(extra)}")
    extra = set(schedule.spill) - {r.id for r in system.reservoirs}
    if extra:
        raise InputError(f"schedule refers to unknown reservoirs {sorted(extra)}")


def simulate(system: CascadeSystem, schedule: Schedule, inflows: Mapping[str, Sequence[float]]) -> SimulationReport:
    """Forward simulation in topological order with exact curves.

    Releases that would draw storage below ``v_min`` are cut (spill first,
    then turbines pro rata); storage above ``v_max`` overflows as extra
    spill.  Either event is recorded as a storage violation.
    """
    _check(system, schedule, inflows)
    T, dt = system.T, system.dt
    cons = system.constants
    rep = SimulationReport(T, dt, energy_predicted=schedule.energy_mwh)

    for rid in topological_order(system):
        r = system.reservoir(rid)
        units = system.units_of(rid)
        qp = {u.id: np.array(schedule.turbined[u.id], dtype=float) for u in units}
        spill = np.array(schedule.spill.get(rid, np.zeros(T)), dtype=float)
        V, I, Q, L = np.zeros(T), np.zeros(T), np.zeros(T), np.zeros(T)
        v_prev = r.v_initial
        for t in range(1, T + 1):
            k = t - 1
            inflow = float(inflows[rid][k])
            for arc in system.incoming(rid):
                inflow += route_contribution(arc.routing, rep.release[arc.from_reservoir], t)
            loss = r.loss.loss(t, v_prev)
            turb = sum(qp[u.id][k] for u in units)
            v = v_prev + (inflow - turb - spill[k] - loss) * dt
            if v < r.v_min - TOL * dt:
                shortfall = r.v_min - v
                deficit = shortfall / dt
                cut = min(deficit, spill[k])
                spill[k] -= cut
                deficit -= cut
                if deficit > 0 and turb > 0:
                    scale = max(0.0, 1.0 - deficit / turb)
                    for u in units:
                        qp[u.id][k] *= scale
                turb = sum(qp[u.id][k] for u in units)
                v = v_prev + (inflow - turb - spill[k] - loss) * dt
                if v < r.v_min:
                    rep.clamp_volume += r.v_min - v
                    v = r.v_min
                rep.violations.append(Violation("storage", rid, t, shortfall))
            elif v > r.v_max + TOL * dt:
                over = v - r.v_max
                spill[k] += over / dt
                v = r.v_max
                rep.violations.append(Violation("storage", rid, t, over))
                if spill[k] > r.spill_max + TOL:
                    rep.violations.append(Violation("spill", rid, t, spill[k] - r.spill_max))
            V[k], I[k], Q[k], L[k] = v, inflow, turb + spill[k], loss
            v_prev = v
        rep.storage[rid], rep.inflow[rid], rep.release[rid] = V, I, Q
        rep.spill[rid], rep.loss[rid] = spill, L
        prev = np.concatenate(([r.v_initial], V[:-1]))
        E = np.asarray(r.elevation(0.5 * (prev + V)), dtype=float).reshape(T)
        rep.elevation[rid] = E
        for k in range(T):
            dev = max(r.e_min - E[k], E[k] - r.e_max, 0.0)
            if dev > TOL:
                rep.violations.append(Violation("elevation", rid, k + 1, dev))
        terminal = max(r.v_min, r.terminal_min)
        if V[-1] < terminal - TOL * dt:
            rep.violations.append(Violation("storage", rid, T, terminal - V[-1]))
        for u in units:
            rep.turbined[u.id] = qp[u.id]

    for rid in topological_order(system):
        r = system.reservoir(rid)
        down = system.downstream(rid)
        for u in system.units_of(rid):
            q = rep.turbined[u.id]
            e_down = rep.elevation[down] if down is not None else np.zeros(T)
            tail = np.array([r.tailwater(rep.release[rid][k], e_down[k]) for k in range(T)], dtype=float)
            h = rep.elevation[rid] - tail - np.asarray(u.loss_head(q), dtype=float).reshape(T)
            p = np.zeros(T)
            on = np.asarray(schedule.commitment.get(u.id, np.ones(T)), dtype=float)
            for k in range(T):
                if h[k] <= 0:
                    if q[k] > TOL:
                        rep.violations.append(Violation("head", u.id, k + 1, -h[k]))
                    continue
                p[k] = float(u.power(q[k], h[k], cons))
                d = u.zones.distance(p[k], h[k])
                if d > TOL:
                    rep.violations.append(Violation("zone", u.id, k + 1, d))
                low = u.q_min if on[k] >= 0.5 else 0.0
                if q[k] > TOL and (q[k] < low - TOL or q[k] > u.q_max + TOL):
                    rep.violations.append(Violation("discharge", u.id, k + 1, max(low - q[k], q[k] - u.q_max)))
            rep.head[u.id], rep.power[u.id] = h, p

    rep.energy_realized = float(sum(np.sum(p) for p in rep.power.values()) * dt / 3600.0)
    for arc in system.arcs:
        rep.in_transit_volume += in_transit_volume(arc.routing, rep.release[arc.from_reservoir], dt)
        rep.pre_horizon_volume += pre_horizon_volume(arc.routing, T, dt)
    return rep


def mass_balance_residual(system: CascadeSystem, report: SimulationReport, inflows: Mapping[str, Sequence[float]]) -> float:
    """Relative closure error of the system-wide water balance.

    Storage change must equal local inflow minus losses minus terminal
    outflow, corrected for water still travelling at the end of the horizon
    and water that was travelling at its start.
    """
    dt = report.dt
    d_storage = sum(report.storage[r.id][-1] - r.v_initial for r in system.reservoirs)
    local = sum(float(np.sum(inflows[r.id])) for r in system.reservoirs) * dt
    losses = sum(float(np.sum(report.loss[r.id])) for r in system.reservoirs) * dt
    terminal = sum(float(np.sum(report.release[r.id])) for r in system.reservoirs if system.downstream(r.id) is None) * dt
    rhs = local - losses - terminal - report.in_transit_volume + report.pre_horizon_volume + report.clamp_volume
    scale = max(1.0, abs(d_storage), abs(local), abs(losses), abs(terminal), sum(r.v_initial for r in system.reservoirs))
    return float(abs(d_storage - rhs) / scale)


@dataclass(frozen=True)
class FidelityGap:
    energy_gap_percent: float
    max_head_error: float
    violation_count: int
    energy_predicted: float
    energy_realized: float


def fidelity_gap(predicted: Schedule, report: SimulationReport) -> FidelityGap:
    """Energy over-prediction, worst head error and violation count."""
    head_err = 0.0
    for uid, h in predicted.head.items():
        if uid in report.head and len(h):
            head_err = max(head_err, float(np.max(np.abs(np.asarray(h) - report.head[uid]))))
    return FidelityGap(
        energy_gap_percent=_gap(predicted.energy_mwh, report.energy_realized),
        max_head_error=head_err,
        violation_count=len(report.violations),
        energy_predicted=predicted.energy_mwh,
        energy_realized=report.energy_realized,
    )
