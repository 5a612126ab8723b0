"""Seeded synthetic cascades for benchmarks and property tests."""

from __future__ import annotations

import numpy as np

from .domain import (
    CascadeSystem,
    Curve1D,
    GeneratingUnit,
    HydraulicArc,
    OperatingZoneSet,
    PhysicalConstants,
    PowerSurface,
    Reservoir,
    TimeGrid,
)
from .errors import DomainError
from .routing import RoutingSpec

ZONE_STYLES = ("intervals", "polygons", "none")


def _hill_chart(rng, q_max, h_lo, h_hi):
    """Efficiency table peaking near 70% discharge and the upper head."""
    eta_max = rng.uniform(0.9, 0.94)
    q_best = 0.7 * q_max
    h_best = h_lo + 0.8 * (h_hi - h_lo)
    q = np.linspace(0.0, q_max, 5)
    h = np.linspace(h_lo, h_hi, 4)
    eta = eta_max - 0.15 * (q[:, None] / q_best - 1.0) ** 2 - 0.1 * ((h[None, :] - h_best) / h_best) ** 2
    return PowerSurface("efficiency_table", discharge=tuple(q), head=tuple(h), values=tuple(map(tuple, np.clip(eta, 0.5, 0.95))))


def generate_synthetic_cascade(
    n_reservoirs: int,
    n_units_per_reservoir: int,
    seed: int,
    n_periods: int = 6,
    dt: float = 3600.0,
    zones: str = "intervals",
    hold_storage: bool = False,
) -> tuple[CascadeSystem, dict[str, tuple[float, ...]]]:
    """A chain ``R1 -> R2 -> ...`` with randomized but plausible data.

    Storage-elevation tables are concave, power surfaces increase with
    discharge, and initial storage leaves room both ways.  Units get
    prohibited zones as power intervals or (P, h) polygons according to
    ``zones``.  With ``hold_storage`` every reservoir must end the horizon
    at its initial storage, which pushes units into part load.  The same
    arguments always give the same system.
    """
    if n_reservoirs < 1:
        raise DomainError("need at least one reservoir")
    if n_units_per_reservoir < 0:
        raise DomainError("unit count cannot be negative")
    if zones not in ZONE_STYLES:
        raise DomainError(f"zones must be one of {ZONE_STYLES}")
    rng = np.random.default_rng(seed)
    consts = PhysicalConstants()
    reservoirs, units, arcs = [], [], []
    inflows: dict[str, tuple[float, ...]] = {}
    top = 400.0
    for i in range(n_reservoirs):
        rid = f"R{i + 1}"
        q_max = float(np.round(rng.uniform(40.0, 120.0), 1))
        q_total = q_max * n_units_per_reservoir
        v_max = float(np.round(max(q_total, 30.0) * dt * n_periods * rng.uniform(1.5, 3.0), -3))
        v_min = 0.1 * v_max
        v0 = float(np.round(rng.uniform(0.4, 0.8) * v_max, -3))
        depth = rng.uniform(20.0, 40.0)
        gamma = rng.uniform(0.4, 0.7)
        base = top - 10.0
        vs = np.linspace(0.0, v_max, 9)
        es = base + depth * (vs / v_max) ** gamma
        tail0 = base - rng.uniform(40.0, 70.0)
        top = tail0
        reservoirs.append(
            Reservoir(
                id=rid, v_min=v_min, v_max=v_max, v_initial=v0,
                e_min=float(base), e_max=float(base + depth),
                storage_to_elevation=Curve1D.table(vs, np.round(es, 6)),
                tailrace=Curve1D.affine(float(tail0), float(rng.uniform(0.002, 0.01)), (0.0, np.inf)),
                v_terminal=v0 if hold_storage else None,
            )
        )
        h_lo = float(base - tail0 - 0.01 * q_total - 2.0)
        h_hi = float(base + depth - tail0 + 1.0)
        for k in range(n_units_per_reservoir):
            uid = f"{rid}U{k + 1}"
            surface = _hill_chart(rng, q_max, max(h_lo, 1.0), h_hi)
            p_top = float(surface.power(q_max, h_hi, consts))
            p_low = float(surface.power(q_max, max(h_lo, 1.0), consts))
            if zones == "intervals":
                zs = OperatingZoneSet(
                    "intervals_1d",
                    intervals=((round(0.15 * p_low, 3), round(0.4 * p_low, 3)), (round(0.6 * p_low, 3), round(1.05 * p_top, 3))),
                    commitment=True,
                    startup_cost=float(np.round(rng.uniform(50, 200))),
                )
            elif zones == "polygons":
                hm = 0.5 * (h_lo + h_hi)
                zs = OperatingZoneSet(
                    "zones_2d",
                    polygons=(
                        ((0.1 * p_low, h_lo), (0.4 * p_low, h_lo), (0.45 * p_top, h_hi), (0.1 * p_top, h_hi)),
                        ((0.6 * p_low, h_lo), (1.05 * p_top, h_lo), (1.05 * p_top, h_hi), (0.55 * p_top, hm)),
                    ),
                    commitment=True,
                )
            else:
                zs = OperatingZoneSet()
            units.append(
                GeneratingUnit(
                    id=uid, reservoir_id=rid, q_min=round(0.2 * q_max, 3), q_max=q_max,
                    power_surface=surface,
                    head_loss=Curve1D.polynomial((0.0, 0.0, 1.0 / q_max**2), (0.0, np.inf)),
                    zones=zs,
                )
            )
        scale = q_total if q_total > 0 else 30.0
        level = rng.uniform(0.3, 0.6) if i == 0 else rng.uniform(0.05, 0.2)
        inflows[rid] = tuple(float(np.round(level * scale * rng.uniform(0.7, 1.3), 3)) for _ in range(n_periods))
        if i > 0:
            mode = ("instantaneous", "fixed_lag", "convolution")[int(rng.integers(0, 3))]
            spec = {
                "instantaneous": RoutingSpec(),
                "fixed_lag": RoutingSpec("fixed_lag", tau=1, pre_horizon_release=float(np.round(0.5 * scale, 3))),
                "convolution": RoutingSpec("convolution", kernel=(0.3, 0.5, 0.2), pre_horizon_release=float(np.round(0.5 * scale, 3))),
            }[mode]
            arcs.append(HydraulicArc(f"R{i}", rid, spec))
    system = CascadeSystem(tuple(reservoirs), tuple(units), tuple(arcs), TimeGrid(n_periods, dt), consts)
    return system, inflows
