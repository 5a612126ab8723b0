"""Physical description of a cascading hydropower system.

Units are SI throughout: volumes in m3, discharges in m3/s, durations in s,
elevations and heads in m, power in MW.  All types are frozen dataclasses
holding tuples, so they are hashable, comparable field by field and safe to
share between workers.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CurveError, DomainError, TopologyError
from .routing import RoutingSpec

INF = math.inf

CURVE_KINDS = ("constant", "affine", "polynomial", "table", "pwl")
SURFACE_KINDS = ("fixed_efficiency", "power_table", "efficiency_table")
LOSS_KINDS = ("none", "constant", "linear")
ZONE_MODES = ("convex", "intervals_1d", "zones_2d")


class CurveDomainWarning(UserWarning):
    """Evaluation point fell outside a curve or surface domain and was clamped."""


def _floats(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


# ---------------------------------------------------------------------------
# constants and time
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalConstants:
    rho: float = 1000.0
    g: float = 9.81

    def __post_init__(self):
        if not (self.rho > 0 and self.g > 0):
            raise DomainError(f"rho and g must be positive, got rho={self.rho}, g={self.g}")

    def power_mw(self, efficiency, discharge, head):
        """rho * g * eta * Q * h expressed in MW."""
        return self.rho * self.g * efficiency * discharge * head / 1e6


@dataclass(frozen=True)
class TimeGrid:
    n_periods: int
    dt: float = 3600.0

    def __post_init__(self):
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise DomainError(f"n_periods must be a positive integer, got {self.n_periods}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "n_periods", int(self.n_periods))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def periods(self) -> range:
        return range(1, self.n_periods + 1)


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Curve1D:
    """A univariate physical relationship.

    ``coefficients`` holds the constant value, the ``(intercept, slope)`` pair
    or ascending polynomial coefficients; ``x``/``y`` hold tabulated samples or
    piecewise-linear breakpoints.  Tables and PWL curves are both evaluated by
    linear interpolation; the distinction records where the data came from.
    """

    kind: str
    coefficients: tuple[float, ...] = ()
    x: tuple[float, ...] = ()
    y: tuple[float, ...] = ()
    domain: tuple[float, float] = (-INF, INF)

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise CurveError(f"unknown curve kind {self.kind!r}")
        object.__setattr__(self, "coefficients", _floats(self.coefficients))
        object.__setattr__(self, "x", _floats(self.x))
        object.__setattr__(self, "y", _floats(self.y))
        if self.kind in ("table", "pwl"):
            if len(self.x) == 0:
                raise CurveError("empty tabulation")
            if len(self.x) != len(self.y):
                raise CurveError(f"table has {len(self.x)} abscissae but {len(self.y)} ordinates")
            if self.kind == "pwl" and len(self.x) < 2:
                raise CurveError("a piecewise-linear curve needs at least 2 breakpoints")
            if any(b <= a for a, b in zip(self.x, self.x[1:])):
                raise CurveError("tabulated abscissae must be strictly increasing")
            if not all(map(math.isfinite, self.x + self.y)):
                raise CurveError("tabulated values must be finite")
            dom = (self.x[0], self.x[-1])
        else:
            need = {"constant": 1, "affine": 2}.get(self.kind)
            if need is not None and len(self.coefficients) != need:
                raise CurveError(f"{self.kind} curve needs {need} coefficient(s)")
            if self.kind == "polynomial" and not 1 <= len(self.coefficients) <= 7:
                raise CurveError("polynomial degree must be between 0 and 6")
            dom = _floats(self.domain)
        if len(dom) != 2 or dom[0] > dom[1]:
            raise CurveError(f"invalid curve domain {self.domain}")
        object.__setattr__(self, "domain", dom)

    @classmethod
    def constant(cls, value, domain=(-INF, INF)):
        return cls("constant", coefficients=(value,), domain=domain)

    @classmethod
    def affine(cls, intercept, slope, domain=(-INF, INF)):
        return cls("affine", coefficients=(intercept, slope), domain=domain)

    @classmethod
    def polynomial(cls, coefficients, domain=(-INF, INF)):
        return cls("polynomial", coefficients=tuple(coefficients), domain=domain)

    @classmethod
    def table(cls, x, y):
        return cls("table", x=tuple(x), y=tuple(y))

    @classmethod
    def pwl(cls, x, y):
        return cls("pwl", x=tuple(x), y=tuple(y))

    def _raw(self, x):
        if self.kind == "constant":
            return np.full_like(x, self.coefficients[0])
        if self.kind == "affine":
            a, b = self.coefficients
            return a + b * x
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.coefficients)
        return np.interp(x, self.x, self.y)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(arr < lo) or np.any(arr > hi):
            warnings.warn(
                f"{self.kind} curve evaluated outside its domain [{lo}, {hi}]; clamping",
                CurveDomainWarning,
                stacklevel=2,
            )
            arr = np.clip(arr, lo, hi)
        out = self._raw(arr)
        return float(out) if out.ndim == 0 else out

    def is_nondecreasing(self, lo: float, hi: float, n: int = 201) -> bool:
        xs = np.linspace(lo, hi, n)
        if self.kind in ("table", "pwl"):
            xs = np.union1d(xs, [v for v in self.x if lo <= v <= hi])
        xs = np.clip(xs, *self.domain)
        ys = self._raw(xs)
        return bool(np.all(np.diff(ys) >= -1e-9 * max(1.0, float(np.max(np.abs(ys))))))

    def covers(self, lo: float, hi: float) -> bool:
        return self.domain[0] <= lo and hi <= self.domain[1]


def evaluate_curve(curve: Curve1D, x):
    """Evaluate ``curve`` at ``x``, clamping (with a warning) outside its domain."""
    return curve(x)


# ---------------------------------------------------------------------------
# power surface
# ---------------------------------------------------------------------------


def bilinear(xg, yg, values, x, y):
    """Bilinear interpolation on a rectilinear grid with clamping."""
    xg = np.asarray(xg)
    yg = np.asarray(yg)
    v = np.asarray(values)
    x = np.clip(x, xg[0], xg[-1])
    y = np.clip(y, yg[0], yg[-1])
    i = np.clip(np.searchsorted(xg, x, side="right") - 1, 0, len(xg) - 2)
    j = np.clip(np.searchsorted(yg, y, side="right") - 1, 0, len(yg) - 2)
    u = (x - xg[i]) / (xg[i + 1] - xg[i])
    w = (y - yg[j]) / (yg[j + 1] - yg[j])
    return (
        v[i, j] * (1 - u) * (1 - w)
        + v[i + 1, j] * u * (1 - w)
        + v[i, j + 1] * (1 - u) * w
        + v[i + 1, j + 1] * u * w
    )


@dataclass(frozen=True)
class PowerSurface:
    """Power output as a function of turbined discharge and net head.

    ``values[i][j]`` is indexed by ``discharge[i]`` and ``head[j]``; it holds
    MW for ``power_table`` and efficiency (p.u.) for ``efficiency_table``.
    """

    kind: str = "fixed_efficiency"
    efficiency: float = 0.9
    discharge: tuple[float, ...] = ()
    head: tuple[float, ...] = ()
    values: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise DomainError(f"unknown power surface kind {self.kind!r}")
        object.__setattr__(self, "discharge", _floats(self.discharge))
        object.__setattr__(self, "head", _floats(self.head))
        object.__setattr__(self, "values", tuple(_floats(row) for row in self.values))
        if self.kind == "fixed_efficiency":
            if not 0 < self.efficiency <= 1:
                raise DomainError(f"efficiency must lie in (0, 1], got {self.efficiency}")
            return
        q, h = self.discharge, self.head
        if len(q) < 2 or len(h) < 2:
            raise DomainError("power surface grids need at least 2 points per axis")
        if any(b <= a for a, b in zip(q, q[1:])) or any(b <= a for a, b in zip(h, h[1:])):
            raise DomainError("power surface grid abscissae must be strictly increasing")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(q), len(h)):
            raise DomainError(f"power surface values have shape {v.shape}, expected {(len(q), len(h))}")
        if self.kind == "power_table" and np.any(v < 0):
            raise DomainError("tabulated power values must be non-negative")
        if self.kind == "efficiency_table" and (np.any(v <= 0) or np.any(v > 1)):
            raise DomainError("tabulated efficiencies must lie in (0, 1]")

    @property
    def domain(self):
        if self.kind == "fixed_efficiency":
            return (0.0, INF), (-INF, INF)
        return (self.discharge[0], self.discharge[-1]), (self.head[0], self.head[-1])

    def power(self, q, h, constants: PhysicalConstants = PhysicalConstants()):
        """Power (MW) at discharge ``q`` and net head ``h``; zero for h <= 0."""
        q = np.asarray(q, dtype=float)
        h = np.asarray(h, dtype=float)
        if self.kind == "fixed_efficiency":
            out = constants.power_mw(self.efficiency, q, np.maximum(h, 0.0))
        else:
            (qlo, qhi), (hlo, hhi) = self.domain
            pos = h > 0
            if np.any((q < qlo) | (q > qhi)) or np.any(pos & ((h < hlo) | (h > hhi))):
                warnings.warn(
                    "power surface evaluated outside its grid; clamping",
                    CurveDomainWarning,
                    stacklevel=2,
                )
            v = bilinear(self.discharge, self.head, self.values, q, h)
            if self.kind == "efficiency_table":
                v = constants.power_mw(v, q, h)
            out = np.where(pos, v, 0.0)
        return float(out) if out.ndim == 0 else out

    def efficiency_at(self, q, h, constants: PhysicalConstants = PhysicalConstants()) -> float:
        """Equivalent efficiency rho*g*Q*h / P at one operating point."""
        if self.kind == "fixed_efficiency":
            return self.efficiency
        if q <= 0 or h <= 0:
            raise DomainError("equivalent efficiency needs positive discharge and head")
        return float(self.power(q, h, constants) / constants.power_mw(1.0, q, h))


# ---------------------------------------------------------------------------
# operating zones
# ---------------------------------------------------------------------------


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def halfplanes(polygon) -> list[tuple[float, float, float]]:
    """Supporting half-planes ``a*P + b*h <= c`` of a convex polygon."""
    pts = list(polygon)
    area = sum(_cross((0.0, 0.0), pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))
    if area < 0:
        pts.reverse()
    rows = []
    for i in range(len(pts)):
        (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % len(pts)]
        # interior on the left of a counter-clockwise edge
        a, b = (y1 - y0), -(x1 - x0)
        rows.append((a, b, a * x0 + b * y0))
    return rows


def _segment_distance(p, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    s = 0.0 if den == 0 else min(1.0, max(0.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / den))
    return math.hypot(p[0] - ax - s * dx, p[1] - ay - s * dy)


@dataclass(frozen=True)
class OperatingZoneSet:
    """Feasible operating region of a unit.

    ``intervals`` are disjoint feasible power ranges [P_lo, P_hi] (MW) for
    ``intervals_1d``; ``polygons`` are convex feasible regions in the (P, h)
    plane for ``zones_2d``.  Standstill (P = 0) is always allowed once the
    unit carries commitment binaries.
    """

    mode: str = "convex"
    intervals: tuple[tuple[float, float], ...] = ()
    polygons: tuple[tuple[tuple[float, float], ...], ...] = ()
    commitment: bool = False
    startup_cost: float = 0.0

    def __post_init__(self):
        if self.mode not in ZONE_MODES:
            raise DomainError(f"unknown zone mode {self.mode!r}")
        ints = tuple((float(a), float(b)) for a, b in self.intervals)
        polys = tuple(tuple((float(p), float(h)) for p, h in poly) for poly in self.polygons)
        object.__setattr__(self, "intervals", ints)
        object.__setattr__(self, "polygons", polys)
        for lo, hi in ints:
            if lo > hi or lo < 0:
                raise DomainError(f"invalid power interval [{lo}, {hi}]")
        for (_, hi), (lo, _) in zip(ints, ints[1:]):
            if lo <= hi:
                raise DomainError("power intervals must be sorted and disjoint")
        for poly in polys:
            if len(poly) < 3:
                raise DomainError("a 2D operating zone needs at least 3 vertices")
            if any(p < 0 for p, _ in poly):
                raise DomainError("2D operating zones cannot contain negative power")
            signs = {
                np.sign(round(_cross(poly[i], poly[(i + 1) % len(poly)], poly[(i + 2) % len(poly)]), 12))
                for i in range(len(poly))
            }
            signs.discard(0.0)
            if len(signs) > 1:
                raise DomainError(f"2D operating zone {poly} is not convex")
        if self.mode == "intervals_1d" and not ints:
            raise DomainError("intervals_1d zones need at least one interval")
        if self.mode == "zones_2d" and not polys:
            raise DomainError("zones_2d needs at least one polygon")
        if self.startup_cost < 0:
            raise DomainError("startup cost must be non-negative")

    def contains(self, p: float, h: float = 0.0, tol: float = 1e-6) -> bool:
        """Whether (P, h) is an allowed operating point (standstill included)."""
        if abs(p) <= tol:
            return True
        if self.mode == "intervals_1d":
            return any(lo - tol <= p <= hi + tol for lo, hi in self.intervals)
        if self.mode == "zones_2d":
            return any(
                all(a * p + b * h <= c + tol * max(1.0, math.hypot(a, b)) for a, b, c in halfplanes(poly))
                for poly in self.polygons
            )
        return p >= -tol

    def distance(self, p: float, h: float = 0.0) -> float:
        """Distance from (P, h) to the nearest allowed operating point."""
        if self.contains(p, h, tol=0.0):
            return 0.0
        cands = [abs(p)]
        if self.mode == "intervals_1d":
            cands += [max(lo - p, p - hi, 0.0) for lo, hi in self.intervals]
        elif self.mode == "zones_2d":
            for poly in self.polygons:
                cands.append(min(_segment_distance((p, h), poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))))
        else:
            cands.append(max(-p, 0.0))
        return min(cands)


# ---------------------------------------------------------------------------
# system components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LossModel:
    """Evaporation/seepage loss L_{r,t} in m3/s.

    ``constant`` reads ``values`` per period (a single value is broadcast);
    ``linear`` evaluates ``intercept + slope * V`` on the storage at the
    start of the period.
    """

    kind: str = "none"
    values: tuple[float, ...] = ()
    intercept: float = 0.0
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise DomainError(f"unknown loss model {self.kind!r}")
        object.__setattr__(self, "values", _floats(self.values))
        if self.kind == "constant" and not self.values:
            raise DomainError("constant loss model needs at least one value")

    def constant_part(self, t: int) -> float:
        if self.kind == "constant":
            return self.values[t - 1] if len(self.values) > 1 else self.values[0]
        if self.kind == "linear":
            return self.intercept
        return 0.0

    def storage_coefficient(self) -> float:
        return self.slope if self.kind == "linear" else 0.0

    def loss(self, t: int, v_start: float) -> float:
        return self.constant_part(t) + self.storage_coefficient() * v_start


@dataclass(frozen=True)
class Reservoir:
    """A storage node.

    ``tailrace`` maps total reservoir discharge to tailwater level; with a
    non-zero ``tailrace_backwater`` the level also rises by that coefficient
    times the downstream forebay elevation.  ``v_terminal`` is a lower bound
    on end-of-horizon storage (defaults to ``v_min``).
    """

    id: str
    v_min: float
    v_max: float
    v_initial: float
    e_min: float
    e_max: float
    storage_to_elevation: Curve1D
    tailrace: Curve1D | None = None
    tailrace_backwater: float = 0.0
    loss: LossModel = LossModel()
    v_terminal: float | None = None
    spill_max: float = INF

    def __post_init__(self):
        if not self.v_min <= self.v_initial <= self.v_max:
            raise DomainError(
                f"reservoir {self.id}: need v_min <= v_initial <= v_max, got "
                f"{self.v_min} <= {self.v_initial} <= {self.v_max}"
            )
        if self.e_min > self.e_max:
            raise DomainError(f"reservoir {self.id}: e_min > e_max")
        if self.v_terminal is not None and self.v_terminal > self.v_max:
            raise DomainError(f"reservoir {self.id}: v_terminal exceeds v_max")
        if self.spill_max < 0:
            raise DomainError(f"reservoir {self.id}: spill_max must be non-negative")
        if not self.storage_to_elevation.is_nondecreasing(self.v_min, self.v_max):
            raise DomainError(
                f"reservoir {self.id}: storage-to-elevation curve is not nondecreasing on [v_min, v_max]"
            )

    @property
    def terminal_min(self) -> float:
        return self.v_min if self.v_terminal is None else max(self.v_min, self.v_terminal)

    def elevation(self, v):
        return self.storage_to_elevation(v)

    def tailwater(self, q_total, e_downstream=0.0):
        base = 0.0 if self.tailrace is None else self.tailrace(q_total)
        return base + self.tailrace_backwater * e_downstream


@dataclass(frozen=True)
class GeneratingUnit:
    id: str
    reservoir_id: str
    q_min: float
    q_max: float
    power_surface: PowerSurface = PowerSurface()
    head_loss: Curve1D | None = None
    zones: OperatingZoneSet = OperatingZoneSet()
    initial_on: bool = False

    def __post_init__(self):
        if not 0 <= self.q_min <= self.q_max:
            raise DomainError(f"unit {self.id}: need 0 <= q_min <= q_max")

    def loss_head(self, q):
        return 0.0 * np.asarray(q, dtype=float) if self.head_loss is None else self.head_loss(q)

    def power(self, q, h, constants=PhysicalConstants()):
        return self.power_surface.power(q, h, constants)


@dataclass(frozen=True)
class HydraulicArc:
    from_reservoir: str
    to_reservoir: str
    routing: RoutingSpec = RoutingSpec()


@dataclass(frozen=True)
class CascadeSystem:
    reservoirs: tuple[Reservoir, ...]
    units: tuple[GeneratingUnit, ...]
    arcs: tuple[HydraulicArc, ...]
    time_grid: TimeGrid
    constants: PhysicalConstants = PhysicalConstants()

    def __post_init__(self):
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "arcs", tuple(self.arcs))

    @cached_property
    def _res_index(self):
        return {r.id: r for r in self.reservoirs}

    @cached_property
    def _unit_index(self):
        return {u.id: u for u in self.units}

    @property
    def T(self) -> int:
        return self.time_grid.n_periods

    @property
    def dt(self) -> float:
        return self.time_grid.dt

    def reservoir(self, rid: str) -> Reservoir:
        return self._res_index[rid]

    def unit(self, uid: str) -> GeneratingUnit:
        return self._unit_index[uid]

    def units_of(self, rid: str) -> list[GeneratingUnit]:
        return [u for u in self.units if u.reservoir_id == rid]

    def incoming(self, rid: str) -> list[HydraulicArc]:
        return [a for a in self.arcs if a.to_reservoir == rid]

    def downstream(self, rid: str) -> str | None:
        for a in self.arcs:
            if a.from_reservoir == rid:
                return a.to_reservoir
        return None

    def outflow_range(self, rid: str) -> tuple[float, float]:
        """Bounds of the total release Q_r implied by unit and spill limits."""
        return 0.0, sum(u.q_max for u in self.units_of(rid)) + self.reservoir(rid).spill_max


# ---------------------------------------------------------------------------
# validation and ordering
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self):
        lines = [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) if lines else "ok"


def _find_cycle(nodes: Iterable[str], edges: dict[str, list[str]]) -> list[str]:
    color = {n: 0 for n in nodes}
    stack: list[str] = []

    def visit(n):
        color[n] = 1
        stack.append(n)
        for m in sorted(edges.get(n, ())):
            if color.get(m) == 1:
                return stack[stack.index(m):] + [m]
            if color.get(m) == 0:
                found = visit(m)
                if found:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for n in sorted(color):
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return []


def _order(ids: Sequence[str], arcs: Sequence[tuple[str, str]]) -> list[str]:
    succ: dict[str, list[str]] = {i: [] for i in ids}
    indeg = {i: 0 for i in ids}
    for a, b in arcs:
        if a in succ and b in indeg:
            succ[a].append(b)
            indeg[b] += 1
    heap = [i for i in ids if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        n = heapq.heappop(heap)
        out.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, m)
    if len(out) < len(ids):
        cycle = _find_cycle(ids, succ)
        raise TopologyError("cycle detected: " + " -> ".join(cycle), cycle)
    return out


def topological_order(system: CascadeSystem) -> list[str]:
    """Reservoir ids, upstream before downstream, ties broken by ascending id."""
    return _order([r.id for r in system.reservoirs], [(a.from_reservoir, a.to_reservoir) for a in system.arcs])


def validate_topology(system: CascadeSystem) -> ValidationReport:
    """Collect every structural problem of ``system`` without raising."""
    rep = ValidationReport()
    ids = [r.id for r in system.reservoirs]
    seen = set()
    for rid in ids:
        if rid in seen:
            rep.errors.append(f"duplicate reservoir id {rid!r}")
        seen.add(rid)
    uids = set()
    for u in system.units:
        if u.id in uids:
            rep.errors.append(f"duplicate unit id {u.id!r}")
        uids.add(u.id)
        if u.reservoir_id not in seen:
            rep.errors.append(f"unresolved reservoir reference {u.reservoir_id!r} in unit {u.id!r}")
    outgoing: dict[str, int] = {}
    for a in system.arcs:
        for end in (a.from_reservoir, a.to_reservoir):
            if end not in seen:
                rep.errors.append(f"unresolved reservoir reference {end!r} in arc {a.from_reservoir}->{a.to_reservoir}")
        if a.from_reservoir == a.to_reservoir:
            rep.errors.append(f"cycle detected: self-loop on {a.from_reservoir!r}")
        outgoing[a.from_reservoir] = outgoing.get(a.from_reservoir, 0) + 1
    for rid, n in sorted(outgoing.items()):
        if n > 1:
            rep.errors.append(f"reservoir {rid!r} has {n} downstream arcs; at most one is allowed")
    try:
        _order(sorted(seen), [(a.from_reservoir, a.to_reservoir) for a in system.arcs if a.from_reservoir != a.to_reservoir])
    except TopologyError as exc:
        rep.errors.append(str(exc))

    for r in system.reservoirs:
        if not r.storage_to_elevation.covers(r.v_min, r.v_max):
            rep.errors.append(
                f"reservoir {r.id!r}: storage-to-elevation domain {r.storage_to_elevation.domain} "
                f"does not cover [{r.v_min}, {r.v_max}]"
            )
        e_lo, e_hi = r.elevation(r.v_min), r.elevation(r.v_max)
        if e_hi < r.e_min or e_lo > r.e_max:
            rep.warnings.append(f"reservoir {r.id!r}: elevation range [{e_lo}, {e_hi}] misses the bounds")
        if r.tailrace is not None and r.id in seen:
            q_hi = sum(u.q_max for u in system.units_of(r.id))
            if not r.tailrace.covers(0.0, q_hi):
                rep.errors.append(
                    f"reservoir {r.id!r}: tailrace domain {r.tailrace.domain} does not cover [0, {q_hi}]"
                )
    for u in system.units:
        if u.head_loss is not None and not u.head_loss.covers(0.0, u.q_max):
            rep.errors.append(f"unit {u.id!r}: head-loss domain {u.head_loss.domain} does not cover [0, {u.q_max}]")
        (qlo, qhi), _ = u.power_surface.domain
        if qlo > 0.0 or qhi < u.q_max:
            rep.errors.append(f"unit {u.id!r}: power surface discharge axis [{qlo}, {qhi}] does not cover [0, {u.q_max}]")
    return rep
