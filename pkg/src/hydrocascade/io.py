"""Case files, time-series CSVs and result files.

Case files are YAML (JSON is accepted, being a YAML subset).  Curves and
series may be written inline or as a ``csv:`` reference resolved relative
to the case file.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import jsonschema
import numpy as np
import yaml

from .approx import FitSpec
from .domain import (
    CascadeSystem,
    Curve1D,
    GeneratingUnit,
    HydraulicArc,
    LossModel,
    OperatingZoneSet,
    PhysicalConstants,
    PowerSurface,
    Reservoir,
    TimeGrid,
)
from .errors import InputError
from .routing import RoutingSpec
from .solve import Schedule
from .tiers import TIER_PRESETS, FidelityConfig, ObjectiveSpec

_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM}
_CSV_REF = {"type": "object", "properties": {"csv": {"type": "string"}}, "required": ["csv"], "additionalProperties": False}

_CURVE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["constant", "affine", "polynomial", "table", "pwl"]},
        "value": _NUM,
        "intercept": _NUM,
        "slope": _NUM,
        "coefficients": _NUMS,
        "x": _NUMS,
        "y": _NUMS,
        "csv": {"type": "string"},
        "domain": {"type": "array", "items": {"type": ["number", "null"]}, "minItems": 2, "maxItems": 2},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_SERIES_MAP = {
    "oneOf": [
        _CSV_REF,
        {"type": "object", "not": {"required": ["csv"]}, "additionalProperties": _NUMS},
    ]
}

_PWL_OPTION = {
    "oneOf": [
        {"type": "integer", "minimum": 1},
        {
            "type": "object",
            "properties": {"epsilon": _NUM, "max_pieces": {"type": ["integer", "null"], "minimum": 1}},
            "required": ["epsilon"],
            "additionalProperties": False,
        },
    ]
}

_FIDELITY_PROPS = {
    "tier": {"type": "string"},
    "elevation_mode": {"type": "string"},
    "power_mode": {"type": "string"},
    "head_mode": {"type": "string"},
    "tailrace_mode": {"type": "string"},
    "zones_mode": {"type": "string"},
    "elevation_pwl": _PWL_OPTION,
    "power_pwl": _PWL_OPTION,
    "head_pwl": _PWL_OPTION,
    "tailrace_pwl": _PWL_OPTION,
    "power_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2},
    "fit_samples": {"type": "integer", "minimum": 2},
    "discharge_levels": {"type": "object", "additionalProperties": _NUMS},
    "spill_levels": _NUMS,
}

CASE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "constants": {
            "type": "object",
            "properties": {"rho": _NUM, "g": _NUM},
            "additionalProperties": False,
        },
        "time": {
            "type": "object",
            "properties": {"n_periods": {"type": "integer", "minimum": 1}, "dt": _NUM},
            "required": ["n_periods"],
            "additionalProperties": False,
        },
        "reservoirs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "v_min": _NUM,
                    "v_max": _NUM,
                    "v_initial": _NUM,
                    "e_min": _NUM,
                    "e_max": _NUM,
                    "storage_elevation": _CURVE,
                    "tailrace": _CURVE,
                    "tailrace_backwater": _NUM,
                    "loss": {
                        "type": "object",
                        "properties": {
                            "kind": {"enum": ["none", "constant", "linear"]},
                            "values": _NUMS,
                            "intercept": _NUM,
                            "slope": _NUM,
                        },
                        "required": ["kind"],
                        "additionalProperties": False,
                    },
                    "v_terminal": {"type": ["number", "null"]},
                    "spill_max": {"type": ["number", "null"]},
                },
                "required": ["id", "v_min", "v_max", "v_initial", "e_min", "e_max", "storage_elevation"],
                "additionalProperties": False,
            },
        },
        "units": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "reservoir": {"type": "string"},
                    "q_min": _NUM,
                    "q_max": _NUM,
                    "power": {
                        "type": "object",
                        "properties": {
                            "kind": {"enum": ["fixed_efficiency", "power_table", "efficiency_table"]},
                            "efficiency": _NUM,
                            "discharge": _NUMS,
                            "head": _NUMS,
                            "values": {"type": "array", "items": _NUMS},
                        },
                        "required": ["kind"],
                        "additionalProperties": False,
                    },
                    "head_loss": _CURVE,
                    "zones": {
                        "type": "object",
                        "properties": {
                            "mode": {"enum": ["convex", "intervals_1d", "zones_2d"]},
                            "intervals": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
                            "polygons": {
                                "type": "array",
                                "items": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
                            },
                            "commitment": {"type": "boolean"},
                            "startup_cost": _NUM,
                        },
                        "additionalProperties": False,
                    },
                    "initial_on": {"type": "boolean"},
                },
                "required": ["id", "reservoir", "q_max"],
                "additionalProperties": False,
            },
        },
        "arcs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "routing": {
                        "type": "object",
                        "properties": {
                            "mode": {"type": "string"},
                            "tau": {"type": "integer", "minimum": 0},
                            "kernel": _NUMS,
                            "pre_horizon_release": _NUM,
                        },
                        "additionalProperties": False,
                    },
                },
                "required": ["from", "to"],
                "additionalProperties": False,
            },
        },
        "inflows": _SERIES_MAP,
        "prices": _SERIES_MAP,
        "load": {"oneOf": [_NUMS, _CSV_REF]},
        "objective": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["energy_max", "revenue_max", "peak_shave"]},
                "startup_cost_enabled": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "fidelity": {"type": "object", "properties": _FIDELITY_PROPS, "additionalProperties": False},
        "tiers": {
            "type": "object",
            "additionalProperties": {"type": "object", "properties": _FIDELITY_PROPS, "additionalProperties": False},
        },
    },
    "required": ["time", "reservoirs", "inflows"],
    "additionalProperties": False,
}


@dataclass
class Case:
    """Everything a case file describes."""

    system: CascadeSystem
    inflows: dict[str, tuple[float, ...]]
    config: FidelityConfig
    tiers: dict[str, dict] = field(default_factory=dict)
    name: str = ""

    def tier(self, name: str) -> FidelityConfig:
        """Fidelity config of a named tier (case-defined tiers take precedence)."""
        base = {**self.tiers[name]} if name in self.tiers else None
        if base is None:
            if name not in TIER_PRESETS:
                raise InputError(f"unknown tier {name!r}; known: {', '.join([*self.tiers, *TIER_PRESETS])}")
            base = dict(TIER_PRESETS[name])
        return _fidelity(base, self.config.objective, self.config)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _path_text(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_document(doc) -> None:
    validator = jsonschema.Draft202012Validator(CASE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_path_text(e)}: {e.message}" for e in errors[:10]]
        raise InputError("case file does not match the schema:\n  " + "\n  ".join(lines))


def _resolve(base: Path, ref: str) -> Path:
    path = (base / ref) if not Path(ref).is_absolute() else Path(ref)
    if not path.is_file():
        raise FileNotFoundError(f"referenced CSV {ref!r} not found (looked at {path})")
    return path


def _read_xy(path: Path) -> tuple[list[float], list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty curve CSV")
    head = [c.strip() for c in rows[0]]
    if head[:2] != ["x", "y"]:
        raise InputError(f"{path}: curve CSV header must be 'x,y', got {','.join(head)}")
    try:
        xs = [float(r[0]) for r in rows[1:] if r]
        ys = [float(r[1]) for r in rows[1:] if r]
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed curve row ({exc})") from None
    return xs, ys


def _curve(d: Mapping, base: Path) -> Curve1D:
    kind = d["kind"]
    dom = d.get("domain")
    domain = (-math.inf, math.inf)
    if dom is not None:
        domain = (-math.inf if dom[0] is None else dom[0], math.inf if dom[1] is None else dom[1])
    if kind == "constant":
        return Curve1D.constant(d["value"], domain)
    if kind == "affine":
        return Curve1D.affine(d["intercept"], d["slope"], domain)
    if kind == "polynomial":
        return Curve1D.polynomial(d["coefficients"], domain)
    if "csv" in d:
        xs, ys = _read_xy(_resolve(base, d["csv"]))
    else:
        if "x" not in d or "y" not in d:
            raise InputError(f"{kind} curve needs x and y (or a csv reference)")
        xs, ys = d["x"], d["y"]
    return Curve1D(kind, x=tuple(xs), y=tuple(ys))


def _series_map(d, base: Path, what: str) -> dict[str, tuple[float, ...]]:
    if "csv" in d:
        return read_timeseries_csv(_resolve(base, d["csv"]))
    return {k: tuple(float(v) for v in vals) for k, vals in d.items()}


def _pwl_option(v):
    if isinstance(v, dict):
        return FitSpec(v["epsilon"], v.get("max_pieces"))
    return v


def _fidelity(d: Mapping, objective: ObjectiveSpec, defaults: FidelityConfig | None = None) -> FidelityConfig:
    d = dict(d)
    tier = d.pop("tier", None)
    if tier and tier not in TIER_PRESETS:
        raise InputError(f"unknown tier {tier!r}")
    base = dict(TIER_PRESETS[tier]) if tier else {}
    if defaults is not None:
        for key in ("elevation_pwl", "power_pwl", "head_pwl", "tailrace_pwl", "power_grid", "fit_samples", "discharge_levels", "spill_levels"):
            base.setdefault(key, getattr(defaults, key))
    for key in ("elevation_pwl", "power_pwl", "head_pwl", "tailrace_pwl"):
        if key in d:
            d[key] = _pwl_option(d[key])
    if "power_grid" in d:
        d["power_grid"] = tuple(d["power_grid"])
    if "discharge_levels" in d:
        d["discharge_levels"] = {k: tuple(float(x) for x in v) for k, v in d["discharge_levels"].items()}
    if "spill_levels" in d:
        d["spill_levels"] = tuple(float(x) for x in d["spill_levels"])
    return FidelityConfig(objective=objective, **{**base, **d})


def _inf(v):
    return math.inf if v is None else float(v)


def case_from_dict(doc: Mapping, base: Path = Path(".")) -> Case:
    """Build a :class:`Case` from an already-loaded document."""
    validate_document(doc)
    c = doc.get("constants", {})
    constants = PhysicalConstants(c.get("rho", 1000.0), c.get("g", 9.81))
    grid = TimeGrid(doc["time"]["n_periods"], doc["time"].get("dt", 3600.0))
    reservoirs = []
    for r in doc["reservoirs"]:
        loss = r.get("loss", {"kind": "none"})
        reservoirs.append(
            Reservoir(
                id=r["id"],
                v_min=r["v_min"],
                v_max=r["v_max"],
                v_initial=r["v_initial"],
                e_min=r["e_min"],
                e_max=r["e_max"],
                storage_to_elevation=_curve(r["storage_elevation"], base),
                tailrace=_curve(r["tailrace"], base) if "tailrace" in r else None,
                tailrace_backwater=r.get("tailrace_backwater", 0.0),
                loss=LossModel(loss["kind"], tuple(loss.get("values", ())), loss.get("intercept", 0.0), loss.get("slope", 0.0)),
                v_terminal=r.get("v_terminal"),
                spill_max=_inf(r.get("spill_max")),
            )
        )
    units = []
    for u in doc.get("units", []):
        pw = u.get("power", {"kind": "fixed_efficiency"})
        surface = PowerSurface(
            kind=pw["kind"],
            efficiency=pw.get("efficiency", 0.9),
            discharge=tuple(pw.get("discharge", ())),
            head=tuple(pw.get("head", ())),
            values=tuple(tuple(row) for row in pw.get("values", ())),
        )
        z = u.get("zones", {})
        zones = OperatingZoneSet(
            mode=z.get("mode", "convex"),
            intervals=tuple(tuple(iv) for iv in z.get("intervals", ())),
            polygons=tuple(tuple(tuple(pt) for pt in poly) for poly in z.get("polygons", ())),
            commitment=z.get("commitment", False),
            startup_cost=z.get("startup_cost", 0.0),
        )
        units.append(
            GeneratingUnit(
                id=u["id"],
                reservoir_id=u["reservoir"],
                q_min=u.get("q_min", 0.0),
                q_max=u["q_max"],
                power_surface=surface,
                head_loss=_curve(u["head_loss"], base) if "head_loss" in u else None,
                zones=zones,
                initial_on=u.get("initial_on", False),
            )
        )
    arcs = []
    for a in doc.get("arcs", []):
        ro = a.get("routing", {})
        arcs.append(
            HydraulicArc(
                a["from"],
                a["to"],
                RoutingSpec(ro.get("mode", "instantaneous"), ro.get("tau", 0), tuple(ro.get("kernel", ())), ro.get("pre_horizon_release", 0.0)),
            )
        )
    system = CascadeSystem(tuple(reservoirs), tuple(units), tuple(arcs), grid, constants)
    inflows = _series_map(doc["inflows"], base, "inflows")
    prices = _series_map(doc["prices"], base, "prices") if "prices" in doc else None
    load = None
    if "load" in doc:
        ld = doc["load"]
        if isinstance(ld, dict):
            series = read_timeseries_csv(_resolve(base, ld["csv"]))
            if len(series) != 1:
                raise InputError("load CSV must hold exactly one entity")
            load = next(iter(series.values()))
        else:
            load = tuple(float(v) for v in ld)
    obj = doc.get("objective", {})
    objective = ObjectiveSpec(obj.get("kind", "energy_max"), prices, load, obj.get("startup_cost_enabled", False))
    config = _fidelity(doc.get("fidelity", {}), objective)
    tiers = {k: dict(v) for k, v in doc.get("tiers", {}).items()}
    return Case(system, inflows, config, tiers, doc.get("name", ""))


def load_document(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"case file {str(path)!r} not found")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise InputError(f"{path}: not valid YAML/JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a mapping")
    return doc


def parse_cascade_file(path) -> Case:
    """Read, schema-check and build a case, loading referenced CSVs."""
    path = Path(path)
    return case_from_dict(load_document(path), path.parent)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _num(v: float):
    return None if math.isinf(v) else float(v)


def _curve_dict(c: Curve1D) -> dict:
    out: dict = {"kind": c.kind}
    if c.kind == "constant":
        out["value"] = c.coefficients[0]
    elif c.kind == "affine":
        out["intercept"], out["slope"] = c.coefficients
    elif c.kind == "polynomial":
        out["coefficients"] = list(c.coefficients)
    else:
        out["x"], out["y"] = list(c.x), list(c.y)
        return out
    if c.domain != (-math.inf, math.inf):
        out["domain"] = [_num(c.domain[0]), _num(c.domain[1])]
    return out


def _pwl_dict(v):
    if isinstance(v, FitSpec):
        return {"epsilon": v.epsilon, "max_pieces": v.max_pieces}
    if isinstance(v, Mapping):
        raise InputError("explicit PWL curves cannot be written to a case file")
    return int(v)


def case_to_dict(case: Case) -> dict:
    """Inverse of :func:`case_from_dict` (CSV references become inline data)."""
    s = case.system
    doc: dict = {}
    if case.name:
        doc["name"] = case.name
    doc["constants"] = {"rho": s.constants.rho, "g": s.constants.g}
    doc["time"] = {"n_periods": s.T, "dt": s.dt}
    doc["reservoirs"] = []
    for r in s.reservoirs:
        d = {
            "id": r.id, "v_min": r.v_min, "v_max": r.v_max, "v_initial": r.v_initial,
            "e_min": r.e_min, "e_max": r.e_max, "storage_elevation": _curve_dict(r.storage_to_elevation),
        }
        if r.tailrace is not None:
            d["tailrace"] = _curve_dict(r.tailrace)
        if r.tailrace_backwater:
            d["tailrace_backwater"] = r.tailrace_backwater
        if r.loss.kind != "none":
            d["loss"] = {"kind": r.loss.kind, "values": list(r.loss.values), "intercept": r.loss.intercept, "slope": r.loss.slope}
        if r.v_terminal is not None:
            d["v_terminal"] = r.v_terminal
        if math.isfinite(r.spill_max):
            d["spill_max"] = r.spill_max
        doc["reservoirs"].append(d)
    doc["units"] = []
    for u in s.units:
        ps = u.power_surface
        pw = {"kind": ps.kind}
        if ps.kind == "fixed_efficiency":
            pw["efficiency"] = ps.efficiency
        else:
            pw.update(discharge=list(ps.discharge), head=list(ps.head), values=[list(row) for row in ps.values])
        d = {"id": u.id, "reservoir": u.reservoir_id, "q_min": u.q_min, "q_max": u.q_max, "power": pw}
        if u.head_loss is not None:
            d["head_loss"] = _curve_dict(u.head_loss)
        z = u.zones
        d["zones"] = {
            "mode": z.mode,
            "intervals": [list(iv) for iv in z.intervals],
            "polygons": [[list(pt) for pt in poly] for poly in z.polygons],
            "commitment": z.commitment,
            "startup_cost": z.startup_cost,
        }
        d["initial_on"] = u.initial_on
        doc["units"].append(d)
    doc["arcs"] = [
        {
            "from": a.from_reservoir,
            "to": a.to_reservoir,
            "routing": {
                "mode": a.routing.mode, "tau": a.routing.tau, "kernel": list(a.routing.kernel),
                "pre_horizon_release": a.routing.pre_horizon_release,
            },
        }
        for a in s.arcs
    ]
    doc["inflows"] = {k: [float(x) for x in v] for k, v in case.inflows.items()}
    obj = case.config.objective
    if obj.prices is not None:
        doc["prices"] = {k: list(v) for k, v in obj.prices.items()}
    if obj.load is not None:
        doc["load"] = list(obj.load)
    doc["objective"] = {"kind": obj.kind, "startup_cost_enabled": obj.startup_cost_enabled}
    cfg = case.config
    fid = {
        "elevation_mode": cfg.elevation_mode, "power_mode": cfg.power_mode, "head_mode": cfg.head_mode,
        "tailrace_mode": cfg.tailrace_mode, "zones_mode": cfg.zones_mode,
        "elevation_pwl": _pwl_dict(cfg.elevation_pwl), "power_pwl": _pwl_dict(cfg.power_pwl),
        "head_pwl": _pwl_dict(cfg.head_pwl), "tailrace_pwl": _pwl_dict(cfg.tailrace_pwl),
        "power_grid": list(cfg.power_grid), "fit_samples": cfg.fit_samples,
    }
    if cfg.discharge_levels:
        fid["discharge_levels"] = {k: list(v) for k, v in cfg.discharge_levels.items()}
    if cfg.spill_levels:
        fid["spill_levels"] = list(cfg.spill_levels)
    doc["fidelity"] = fid
    if case.tiers:
        doc["tiers"] = copy.deepcopy(case.tiers)
    return doc


def write_case_file(case: Case, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(case_to_dict(case), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# CSV files
# ---------------------------------------------------------------------------


def read_timeseries_csv(path) -> dict[str, tuple[float, ...]]:
    """Read ``entity_id,period,value`` rows; coverage must be complete."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"time-series file {str(path)!r} not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["entity_id", "period", "value"]:
            raise InputError(f"{path}: header must be 'entity_id,period,value'")
        data: dict[str, dict[int, float]] = {}
        for n, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise InputError(f"{path}:{n}: expected 3 fields, got {len(row)}")
            try:
                ent, period, value = row[0].strip(), int(row[1]), float(row[2])
            except ValueError as exc:
                raise InputError(f"{path}:{n}: {exc}") from None
            if period < 1:
                raise InputError(f"{path}:{n}: periods are 1-based, got {period}")
            slot = data.setdefault(ent, {})
            if period in slot:
                raise InputError(f"{path}:{n}: duplicate entry for ({ent}, {period})")
            slot[period] = value
    if not data:
        raise InputError(f"{path}: no data rows")
    T = max(max(s) for s in data.values())
    for ent, slot in data.items():
        missing = sorted(set(range(1, T + 1)) - set(slot))
        if missing:
            raise InputError(f"{path}: entity {ent!r} is missing periods {missing}")
    return {ent: tuple(slot[t] for t in range(1, T + 1)) for ent, slot in data.items()}


def write_timeseries_csv(path, series: Mapping[str, Sequence[float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["entity_id", "period", "value"])
        for ent, vals in series.items():
            for t, v in enumerate(vals, start=1):
                w.writerow([ent, t, repr(float(v))])


SCHEDULE_FIELDS = (
    ("QP", "turbined"),
    ("P", "power"),
    ("u", "commitment"),
    ("h", "head"),
    ("S", "spill"),
    ("V", "storage"),
    ("E", "elevation"),
)


def write_schedule_csv(path, schedule: Schedule) -> None:
    """Write ``quantity,entity_id,period,value`` rows at round-trip precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "entity_id", "period", "value"])
        for q, attr in SCHEDULE_FIELDS:
            for ent, vals in getattr(schedule, attr).items():
                for t, v in enumerate(vals, start=1):
                    w.writerow([q, ent, t, repr(float(v))])


def read_schedule_csv(path, n_periods: int, dt: float) -> Schedule:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"schedule file {str(path)!r} not found")
    attr = dict(SCHEDULE_FIELDS)
    tables: dict[str, dict[str, np.ndarray]] = {a: {} for a in attr.values()}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["quantity", "entity_id", "period", "value"]:
            raise InputError(f"{path}: header must be 'quantity,entity_id,period,value'")
        for n, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                q, ent, t, v = row[0], row[1], int(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise InputError(f"{path}:{n}: malformed row ({exc})") from None
            if q not in attr:
                raise InputError(f"{path}:{n}: unknown quantity {q!r}")
            if not 1 <= t <= n_periods:
                raise InputError(f"{path}:{n}: period {t} outside 1..{n_periods}")
            tables[attr[q]].setdefault(ent, np.full(n_periods, np.nan))[t - 1] = v
    for name, table in tables.items():
        for ent, arr in table.items():
            if np.isnan(arr).any():
                raise InputError(f"{path}: {name} of {ent!r} does not cover every period")
    return Schedule(n_periods, dt, **tables)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
