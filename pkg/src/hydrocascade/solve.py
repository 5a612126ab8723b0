"""Solve models with HiGHS (through SciPy) and turn solutions into schedules."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .domain import CascadeSystem
from .errors import ExtractionError
from .model import AbstractModel, Expr

STATUSES = ("optimal", "feasible_limit", "infeasible", "unbounded", "error")


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float = 60.0
    mip_gap: float = 1e-6
    threads: int | None = None  # hint only; the SciPy backend runs single-threaded

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if not 0 <= self.mip_gap < 1:
            raise ValueError("mip_gap must lie in [0, 1)")


@dataclass(frozen=True)
class Solution:
    status: str
    objective: float = math.nan
    x: np.ndarray | None = None
    bound: float = math.nan
    wall_time: float = 0.0
    message: str = ""

    @property
    def has_values(self) -> bool:
        return self.status in ("optimal", "feasible_limit") and self.x is not None


def solve(model: AbstractModel, options: SolveOptions = SolveOptions()) -> Solution:
    """Run the model through the MILP backend.

    Maximization is handled by negating the objective; the reported
    objective and bound are in the model's own sense.
    """
    c, a, lo, hi, lb, ub, integrality = model.matrices()
    sign = -1.0 if model.sense == "max" else 1.0
    cons = [LinearConstraint(a, lo, hi)] if a.shape[0] else []
    start = time.perf_counter()
    try:
        res = milp(
            sign * c,
            constraints=cons,
            integrality=integrality,
            bounds=Bounds(lb, ub),
            options={"time_limit": options.time_limit, "mip_rel_gap": options.mip_gap, "disp": False},
        )
    except Exception as exc:  # backend failure surfaces as a status, not an exception
        return Solution("error", wall_time=time.perf_counter() - start, message=f"{type(exc).__name__}: {exc}")
    wall = time.perf_counter() - start
    if res.status == 0:
        status = "optimal"
    elif res.status == 1:
        status = "feasible_limit" if res.x is not None else "error"
    elif res.status == 2:
        status = "infeasible"
    elif res.status == 3:
        status = "unbounded"
    else:
        status = "error"
    if res.x is None:
        return Solution(status, wall_time=wall, message=str(res.message))
    x = np.asarray(res.x, dtype=float)
    for i in np.flatnonzero(integrality):
        x[i] = float(round(x[i]))
    obj = float(model.objective_value(x))
    bound = getattr(res, "mip_dual_bound", None)
    if bound is None or not np.isfinite(bound) or status == "optimal" and not integrality.any():
        bound = obj
    else:
        bound = sign * float(bound) + model.objective_constant
    return Solution(status, obj, x, float(bound), wall, str(res.message))


def solve_relaxation(model: AbstractModel, options: SolveOptions = SolveOptions()) -> Solution:
    """Solve the continuous relaxation (every binary relaxed to [0, 1])."""
    return solve(model.relaxed(), options)


@dataclass(frozen=True)
class BoundViolation:
    variable: str
    side: str  # "lower" | "upper"
    amount: float


def diagnose_infeasibility(model: AbstractModel, options: SolveOptions = SolveOptions()) -> tuple[str, list[BoundViolation]]:
    """Re-solve with elastic elevation bounds and report which ones bind.

    Returns the status of the elastic problem and the bounds that had to be
    violated, largest first.  Head bounds computed from the elevation limits
    are freed as well, since they would otherwise keep the original limits in
    force.  The elastic copy is never used for scheduling.
    """
    elastic = model.clone()
    for v in model.derived:
        var = elastic.variables[v]
        elastic.variables[v] = type(var)(var.name, var.kind, -math.inf, math.inf)
    slacks = []
    for v in model.elastic:
        var = elastic.variables[v]
        lo, hi = var.lb, var.ub
        elastic.variables[v] = type(var)(var.name, var.kind, -math.inf, math.inf)
        if math.isfinite(lo):
            s = elastic.add_var(f"slack_lo_{var.name}")
            elastic.add_constraint(Expr.of(v).add(s, 1.0), ">=", lo)
            slacks.append((s, var.name, "lower"))
        if math.isfinite(hi):
            s = elastic.add_var(f"slack_hi_{var.name}")
            elastic.add_constraint(Expr.of(v).add(s, -1.0), "<=", hi)
            slacks.append((s, var.name, "upper"))
    elastic.set_objective(Expr({s: 1.0 for s, _, _ in slacks}), "min")
    sol = solve(elastic, options)
    if not sol.has_values:
        return sol.status, []
    found = [BoundViolation(name, side, float(sol.x[s])) for s, name, side in slacks if sol.x[s] > 1e-7]
    found.sort(key=lambda b: -b.amount)
    return sol.status, found


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


@dataclass
class Schedule:
    """Decision trajectories, 1 entry per period.

    ``elevation`` and ``head`` hold the values the optimization model
    predicted, so they can be compared against the simulator's realized
    counterparts.
    """

    n_periods: int
    dt: float
    turbined: dict[str, np.ndarray] = field(default_factory=dict)
    power: dict[str, np.ndarray] = field(default_factory=dict)
    commitment: dict[str, np.ndarray] = field(default_factory=dict)
    head: dict[str, np.ndarray] = field(default_factory=dict)
    spill: dict[str, np.ndarray] = field(default_factory=dict)
    storage: dict[str, np.ndarray] = field(default_factory=dict)
    elevation: dict[str, np.ndarray] = field(default_factory=dict)
    objective: float = math.nan

    def __post_init__(self):
        for name in ("turbined", "power", "commitment", "head", "spill", "storage", "elevation"):
            table = getattr(self, name)
            for key, series in list(table.items()):
                arr = np.asarray(series, dtype=float)
                if arr.shape != (self.n_periods,):
                    raise ExtractionError(f"{name} series of {key!r} has shape {arr.shape}, expected ({self.n_periods},)")
                table[key] = arr

    @property
    def energy_mwh(self) -> float:
        return float(sum(np.sum(p) for p in self.power.values()) * self.dt / 3600.0)

    def release(self, system: CascadeSystem, rid: str) -> np.ndarray:
        q = np.array(self.spill.get(rid, np.zeros(self.n_periods)), dtype=float)
        for u in system.units_of(rid):
            q = q + self.turbined[u.id]
        return q


def extract_schedule(solution: Solution, model: AbstractModel, system: CascadeSystem) -> Schedule:
    """Read the schedule out of a solved model.

    Statuses come from the commitment binaries (1 throughout in convex
    tiers).  When a unit is off, its discharge and power are reported as 0.
    """
    if not solution.has_values:
        raise ExtractionError(f"no schedule in a solution with status {solution.status!r}")
    x = solution.x
    T = system.T

    def series(q, e):
        try:
            return np.array([x[model.var(q, e, t)] for t in range(1, T + 1)], dtype=float)
        except KeyError:
            raise ExtractionError(f"model has no variable for {q} of {e!r}") from None

    sched = Schedule(T, system.dt, objective=solution.objective)
    for u in system.units:
        qp, p, h = series("QP", u.id), series("P", u.id), series("h", u.id)
        if ("u", u.id, 1) in model.index:
            st = np.round(series("u", u.id))
        else:
            st = np.ones(T)
        qp = np.where(st < 0.5, 0.0, np.maximum(qp, 0.0))
        p = np.where(st < 0.5, 0.0, p)
        sched.turbined[u.id], sched.power[u.id] = qp, p
        sched.commitment[u.id], sched.head[u.id] = st, h
    for r in system.reservoirs:
        sched.spill[r.id] = np.maximum(series("S", r.id), 0.0)
        sched.storage[r.id] = series("V", r.id) * model.meta.get("volume_scale", 1.0)
        sched.elevation[r.id] = series("E", r.id)
    return sched
