"""Fidelity configuration and the tier-level physics it implies.

A :class:`FidelityConfig` picks one representation per physical relation
(elevation, power, head loss, tailrace, operating zones).  From it,
:func:`tier_physics` derives the concrete approximations (constants, fitted
lines, PWL curves and surfaces, variable boxes) that both the MILP builder
and the brute-force oracle evaluate, so the two always see the same model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Union

import numpy as np

from .approx import (
    FitSpec,
    PwlCurve1D,
    PwlSurface2D,
    fit_pwl_1d_optimal,
    fit_pwl_1d_uniform,
    triangulate_grid_2d,
)
from .domain import CascadeSystem, Curve1D, GeneratingUnit, Reservoir
from .errors import BuildError

ELEVATION_MODES = ("fixed_head", "linear", "pwl")
POWER_MODES = ("linear", "pwl_1d", "pwl_2d", "mccormick")
HEAD_MODES = ("omit", "constant", "linear", "pwl")
TAILRACE_MODES = ("omit", "constant", "linear", "pwl", "bivariate_linear")
ZONE_MODES = ("convex", "huc_only", "huc_poz_1d", "huc_poz_2d")
OBJECTIVES = ("energy_max", "revenue_max", "peak_shave")

# int -> uniform pieces, FitSpec -> minimal pieces, mapping -> explicit curve per entity id
PwlOption = Union[int, FitSpec, Mapping[str, PwlCurve1D]]


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = "energy_max"
    prices: Mapping[str, tuple[float, ...]] | None = None
    load: tuple[float, ...] | None = None
    startup_cost_enabled: bool = False

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise BuildError(f"unknown objective {self.kind!r}")
        if self.prices is not None:
            object.__setattr__(self, "prices", {k: tuple(float(v) for v in s) for k, s in self.prices.items()})
        if self.load is not None:
            object.__setattr__(self, "load", tuple(float(v) for v in self.load))

    def check(self, system: CascadeSystem):
        T = system.T
        if self.kind == "revenue_max":
            if not self.prices:
                raise BuildError("revenue objective needs a price series per unit")
            for u in system.units:
                if u.id not in self.prices or len(self.prices[u.id]) != T:
                    raise BuildError(f"missing or short price series for unit {u.id!r}")
        if self.kind == "peak_shave" and (self.load is None or len(self.load) != T):
            raise BuildError(f"peak shaving needs a load series of length {T}")


@dataclass(frozen=True)
class FidelityConfig:
    elevation_mode: str = "fixed_head"
    power_mode: str = "linear"
    head_mode: str = "omit"
    tailrace_mode: str = "constant"
    zones_mode: str = "convex"
    objective: ObjectiveSpec = ObjectiveSpec()
    elevation_pwl: PwlOption = 6
    power_pwl: PwlOption = 4
    head_pwl: PwlOption = 4
    tailrace_pwl: PwlOption = 4
    power_grid: tuple[int, int] = (5, 5)
    fit_samples: int = 101
    # optional discrete grids: per-unit turbined discharge levels and a spill grid
    discharge_levels: Mapping[str, tuple[float, ...]] | None = None
    spill_levels: tuple[float, ...] | None = None

    def __post_init__(self):
        for name, value, allowed in (
            ("elevation_mode", self.elevation_mode, ELEVATION_MODES),
            ("power_mode", self.power_mode, POWER_MODES),
            ("head_mode", self.head_mode, HEAD_MODES),
            ("tailrace_mode", self.tailrace_mode, TAILRACE_MODES),
            ("zones_mode", self.zones_mode, ZONE_MODES),
        ):
            if value not in allowed:
                raise BuildError(f"{name} must be one of {allowed}, got {value!r}")
        if len(self.power_grid) != 2 or min(self.power_grid) < 2:
            raise BuildError("power_grid needs at least 2 points per axis")
        if self.fit_samples < 2:
            raise BuildError("fit_samples must be at least 2")

    @property
    def is_mip(self) -> bool:
        return (
            self.zones_mode != "convex"
            or self.elevation_mode == "pwl"
            or self.power_mode in ("pwl_1d", "pwl_2d")
            or self.head_mode == "pwl"
            or self.tailrace_mode == "pwl"
            or bool(self.discharge_levels)
            or bool(self.spill_levels)
        )

    def levels_for(self, unit_id: str) -> tuple[float, ...] | None:
        if not self.discharge_levels:
            return None
        return tuple(self.discharge_levels.get(unit_id, ())) or None


TIER_PRESETS: dict[str, dict] = {
    "lp_fixed": dict(elevation_mode="fixed_head", power_mode="linear", head_mode="constant",
                     tailrace_mode="constant", zones_mode="convex"),
    "lp_mccormick": dict(elevation_mode="linear", power_mode="mccormick", head_mode="linear",
                         tailrace_mode="linear", zones_mode="convex"),
    "milp_pwl1d": dict(elevation_mode="pwl", power_mode="pwl_1d", head_mode="constant",
                       tailrace_mode="constant", zones_mode="convex"),
    "milp_pwl": dict(elevation_mode="pwl", power_mode="pwl_2d", head_mode="pwl",
                     tailrace_mode="pwl", zones_mode="convex"),
    "milp_huc": dict(elevation_mode="pwl", power_mode="pwl_2d", head_mode="pwl",
                     tailrace_mode="pwl", zones_mode="huc_only"),
    "milp_poz": dict(elevation_mode="pwl", power_mode="pwl_2d", head_mode="pwl",
                     tailrace_mode="pwl", zones_mode="huc_poz_1d"),
    "milp_poz2d": dict(elevation_mode="pwl", power_mode="pwl_2d", head_mode="pwl",
                       tailrace_mode="pwl", zones_mode="huc_poz_2d"),
}


def tier_config(name: str, objective: ObjectiveSpec = ObjectiveSpec(), **overrides) -> FidelityConfig:
    try:
        base = TIER_PRESETS[name]
    except KeyError:
        raise BuildError(f"unknown tier {name!r}; known tiers: {', '.join(TIER_PRESETS)}") from None
    return FidelityConfig(objective=objective, **{**base, **overrides})


# ---------------------------------------------------------------------------
# tier functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TierFunction:
    """Univariate relation as represented in one tier.

    ``error`` is the worst deviation from the exact relation over the
    sampled range, recorded for error-budget reporting.
    """

    kind: str  # zero | constant | linear | pwl
    value: float = 0.0
    slope: float = 0.0
    curve: PwlCurve1D | None = None
    error: float = 0.0

    def __call__(self, x):
        if self.kind == "pwl":
            return self.curve(x)
        out = self.value + self.slope * np.asarray(x, dtype=float)
        return float(out) if np.ndim(out) == 0 else out

    def range_over(self, lo: float, hi: float) -> tuple[float, float]:
        if self.kind == "pwl":
            xs = [lo, hi] + [x for x in self.curve.x if lo <= x <= hi]
            ys = self.curve(np.array(xs))
            return float(np.min(ys)), float(np.max(ys))
        a, b = self(lo), self(hi)
        return min(a, b), max(a, b)


ZERO = TierFunction("zero")


def _sample(curve: Curve1D, lo: float, hi: float, n: int):
    xs = np.linspace(lo, hi, n)
    if curve.kind in ("table", "pwl"):
        xs = np.union1d(xs, [v for v in curve.x if lo <= v <= hi])
    return xs, np.asarray(curve(xs), dtype=float)


def _fit(curve: Curve1D, lo: float, hi: float, mode: str, option, entity: str, n: int, what: str) -> TierFunction:
    if hi <= lo:
        v = float(curve(lo))
        return TierFunction("constant", value=v)
    xs, ys = _sample(curve, lo, hi, n)
    if mode == "linear":
        line = fit_pwl_1d_uniform(xs, ys, 1)
        slope = (line.y[1] - line.y[0]) / (line.x[1] - line.x[0])
        f = TierFunction("linear", value=line.y[0] - slope * line.x[0], slope=slope)
    elif mode == "pwl":
        if isinstance(option, FitSpec):
            pwl = fit_pwl_1d_optimal(xs, ys, option)
        elif isinstance(option, Mapping):
            if entity not in option:
                raise BuildError(f"no explicit {what} PWL curve for {entity!r}")
            pwl = option[entity]
            if pwl.domain[0] > lo or pwl.domain[1] < hi:
                raise BuildError(
                    f"{what} PWL curve for {entity!r} spans {pwl.domain}, short of [{lo}, {hi}]"
                )
        else:
            pwl = fit_pwl_1d_uniform(xs, ys, int(option))
        f = TierFunction("pwl", curve=pwl)
    else:
        raise BuildError(f"unsupported {what} representation {mode!r}")
    dense = np.linspace(lo, hi, 401)
    err = float(np.max(np.abs(f(dense) - curve(dense))))
    err = max(err, float(np.max(np.abs(f(xs) - ys))))
    return replace(f, error=err)


@dataclass
class ReservoirPhysics:
    id: str
    elevation: TierFunction
    elevation_range: tuple[float, float]
    tailrace: TierFunction
    backwater: float
    downstream: str | None
    release_ub: float
    e_initial: float


@dataclass
class UnitPhysics:
    id: str
    reservoir_id: str
    head_loss: TierFunction
    power_kind: str
    q_box: tuple[float, float]
    h_box: tuple[float, float]
    p_max: float
    p_floor: float
    h_ref: float
    coef: float = 0.0  # MW per m3/s (linear tier)
    eta: float = 0.0  # efficiency used by the McCormick tier
    curve: PwlCurve1D | None = None
    surface: PwlSurface2D | None = None
    power_error: float = 0.0
    error_bound: float = 0.0  # MW, power error plus head error times dP/dh

    def power(self, q, h, constants):
        if self.power_kind == "linear":
            return self.coef * np.asarray(q, dtype=float)
        if self.power_kind == "pwl_1d":
            return self.curve(q)
        if self.power_kind == "pwl_2d":
            return self.surface(q, h)
        raise BuildError("the McCormick tier has no point-valued power function")


@dataclass
class TierPhysics:
    config: FidelityConfig
    reservoirs: dict[str, ReservoirPhysics] = field(default_factory=dict)
    units: dict[str, UnitPhysics] = field(default_factory=dict)

    def elevation(self, rid: str, vbar):
        return self.reservoirs[rid].elevation(vbar)

    def tailwater(self, rid: str, q_total, e_down=0.0):
        rp = self.reservoirs[rid]
        return rp.tailrace(q_total) + rp.backwater * e_down

    def head(self, uid: str, e, tail, q):
        return e - tail - self.units[uid].head_loss(q)


def _release_ub(system: CascadeSystem, r: Reservoir, curve_domain_hi: float = math.inf) -> float:
    turb = sum(u.q_max for u in system.units_of(r.id))
    if math.isfinite(r.spill_max):
        return turb + r.spill_max
    return turb


def tier_physics(system: CascadeSystem, config: FidelityConfig) -> TierPhysics:
    """Derive every approximation the chosen tier needs."""
    phys = TierPhysics(config)
    n = config.fit_samples
    huc = config.zones_mode != "convex"

    if config.power_mode == "linear":
        if config.elevation_mode != "fixed_head":
            raise BuildError(
                "power_mode 'linear' assumes a fixed head and needs elevation_mode 'fixed_head', "
                f"got {config.elevation_mode!r}"
            )
        if config.head_mode not in ("omit", "constant") or config.tailrace_mode not in ("omit", "constant"):
            raise BuildError("power_mode 'linear' needs omitted or constant head loss and tailrace")

    for r in system.reservoirs:
        e0 = float(r.elevation(r.v_initial))
        if config.elevation_mode == "fixed_head":
            dense = np.linspace(r.v_min, r.v_max, 401)
            err = float(np.max(np.abs(r.elevation(dense) - e0)))
            elev = TierFunction("constant", value=e0, error=err)
        else:
            elev = _fit(r.storage_to_elevation, r.v_min, r.v_max, config.elevation_mode,
                        config.elevation_pwl, r.id, n, "elevation")
        lo, hi = elev.range_over(r.v_min, r.v_max)
        units = system.units_of(r.id)
        q_turb = sum(u.q_max for u in units)
        release_ub = q_turb + r.spill_max
        mode = config.tailrace_mode
        backwater = 0.0
        if r.tailrace is None or mode == "omit" or not units:
            tail = ZERO
        elif mode == "constant":
            q_ref = 0.5 * q_turb
            dense = np.linspace(0.0, q_turb, 401)
            v = float(r.tailrace(q_ref))
            tail = TierFunction("constant", value=v, error=float(np.max(np.abs(r.tailrace(dense) - v))))
        else:
            if mode == "pwl":
                hi_q = release_ub
                if not math.isfinite(hi_q):
                    hi_q = r.tailrace.domain[1] if math.isfinite(r.tailrace.domain[1]) else q_turb
                release_ub = min(release_ub, hi_q)
            else:
                hi_q = q_turb
            tail = _fit(r.tailrace, 0.0, hi_q, "pwl" if mode == "pwl" else "linear",
                        config.tailrace_pwl, r.id, n, "tailrace")
            if mode == "bivariate_linear":
                backwater = r.tailrace_backwater
        phys.reservoirs[r.id] = ReservoirPhysics(
            id=r.id,
            elevation=elev,
            elevation_range=(max(lo, r.e_min), min(hi, r.e_max)),
            tailrace=tail,
            backwater=backwater,
            downstream=system.downstream(r.id),
            release_ub=release_ub,
            e_initial=e0,
        )

    for r in system.reservoirs:
        rp = phys.reservoirs[r.id]
        if rp.elevation_range[0] > rp.elevation_range[1] + 1e-9:
            raise BuildError(f"reservoir {r.id!r}: elevation bounds [{r.e_min}, {r.e_max}] are unreachable")
        q_turb = sum(u.q_max for u in system.units_of(r.id))
        t_lo, t_hi = rp.tailrace.range_over(0.0, q_turb)
        t_ref = float(rp.tailrace(0.5 * q_turb))
        if rp.backwater and rp.downstream is not None:
            dp = phys.reservoirs[rp.downstream]
            d_lo, d_hi = sorted((rp.backwater * dp.elevation_range[0], rp.backwater * dp.elevation_range[1]))
            t_lo, t_hi = t_lo + d_lo, t_hi + d_hi
            t_ref += rp.backwater * dp.e_initial
        for u in system.units_of(r.id):
            phys.units[u.id] = _unit_physics(system, config, u, r, rp, (t_lo, t_hi), t_ref, huc)
    return phys


def _unit_physics(system, config, u: GeneratingUnit, r: Reservoir, rp: ReservoirPhysics,
                  tail_range, tail_ref, huc) -> UnitPhysics:
    cons = system.constants
    n = config.fit_samples
    hm = config.head_mode
    if u.head_loss is None or hm == "omit":
        hl = ZERO
    elif hm == "constant":
        v = float(u.head_loss(0.5 * u.q_max))
        dense = np.linspace(0.0, u.q_max, 401)
        hl = TierFunction("constant", value=v, error=float(np.max(np.abs(u.head_loss(dense) - v))))
    else:
        hl = _fit(u.head_loss, 0.0, u.q_max, hm, config.head_pwl, u.id, n, "head loss")
    hl_lo, hl_hi = hl.range_over(0.0, u.q_max)
    e_lo, e_hi = rp.elevation_range
    h_lo = max(0.0, e_lo - tail_range[1] - hl_hi)
    h_hi = e_hi - tail_range[0] - hl_lo
    if not math.isfinite(h_hi) or h_hi <= 0:
        raise BuildError(f"unit {u.id!r}: net head cannot be positive (upper bound {h_hi})")
    if h_hi - h_lo < 1e-6:
        h_lo, h_hi = max(0.0, h_lo - 1.0), h_hi + 1.0
    h_ref = rp.e_initial - tail_ref - float(hl(0.5 * u.q_max))
    if h_ref <= 0:
        raise BuildError(f"unit {u.id!r}: reference head {h_ref} is not positive")

    surf = u.power_surface
    q_lo = u.q_min if (huc and config.power_mode == "pwl_1d") else 0.0
    q_box = (0.0, u.q_max)
    true_p = lambda q, h: surf.power(q, h, cons)
    up = UnitPhysics(
        id=u.id, reservoir_id=r.id, head_loss=hl, power_kind=config.power_mode,
        q_box=q_box, h_box=(h_lo, h_hi), p_max=0.0, p_floor=0.0, h_ref=h_ref,
    )
    qg = np.linspace(0.0, u.q_max, 41)
    hg = np.linspace(h_lo, h_hi, 41)
    Qg, Hg = np.meshgrid(qg, hg, indexing="ij")
    exact = np.asarray(true_p(Qg, Hg))

    mode = config.power_mode
    if mode in ("linear", "mccormick"):
        if surf.kind == "fixed_efficiency":
            eta = surf.efficiency
        else:
            eta = surf.efficiency_at(u.q_max, h_ref, cons) if u.q_max > 0 else 0.0
        up.eta = eta
        up.coef = cons.power_mw(eta, 1.0, h_ref)
        if mode == "linear":
            up.p_max = up.coef * u.q_max
            approx = up.coef * Qg
            up.power_error = float(np.max(np.abs(approx - exact)))
        else:
            up.p_max = cons.power_mw(eta, u.q_max, h_hi)
            model_gap = cons.power_mw(eta, 1.0, 1.0) * u.q_max * (h_hi - h_lo) / 4.0
            eff_gap = float(np.max(np.abs(cons.power_mw(eta, Qg, Hg) - exact)))
            up.power_error = model_gap + eff_gap
    elif mode == "pwl_1d":
        if u.q_max <= q_lo:
            raise BuildError(f"unit {u.id!r}: empty discharge range for the power curve")
        xs = np.linspace(q_lo, u.q_max, n)
        ys = np.asarray(true_p(xs, h_ref))
        opt = config.power_pwl
        if isinstance(opt, FitSpec):
            curve = fit_pwl_1d_optimal(xs, ys, opt)
        elif isinstance(opt, Mapping):
            if u.id not in opt:
                raise BuildError(f"no explicit power PWL curve for unit {u.id!r}")
            curve = opt[u.id]
            if curve.domain[0] > q_lo or curve.domain[1] < u.q_max:
                raise BuildError(f"power PWL curve for {u.id!r} does not cover [{q_lo}, {u.q_max}]")
        else:
            curve = fit_pwl_1d_uniform(xs, ys, int(opt))
        up.curve = curve
        up.p_max = max(float(np.max(curve.y)), 0.0)
        up.p_floor = min(0.0, float(np.min(curve.y)))
        mask = Qg >= q_lo
        up.power_error = float(np.max(np.abs(curve(Qg[mask]) - exact[mask])))
    else:
        nq, nh = config.power_grid
        if u.q_max <= 0:
            raise BuildError(f"unit {u.id!r}: a 2D power surface needs q_max > 0")
        surface = triangulate_grid_2d(np.linspace(0.0, u.q_max, nq), np.linspace(h_lo, h_hi, nh), true_p)
        up.surface = surface
        up.p_max = max(float(np.max(surface.values)), 0.0)
        up.p_floor = min(0.0, float(np.min(surface.values)))
        up.power_error = float(np.max(np.abs(surface(Qg, Hg) - exact)))

    if surf.kind == "fixed_efficiency":
        dpdh = cons.power_mw(surf.efficiency, u.q_max, 1.0)
    else:
        dpdh = float(np.max(np.abs(np.diff(exact, axis=1)) / np.diff(hg)[None, :])) if h_hi > h_lo else 0.0
    head_err = rp.elevation.error + rp.tailrace.error + hl.error
    up.error_bound = up.power_error + dpdh * head_err
    if u.zones.intervals:
        up.p_max = min(up.p_max, max(hi for _, hi in u.zones.intervals)) if config.zones_mode != "convex" else up.p_max
    return up
