"""Solver-agnostic linear / mixed-integer model container.

Variables are continuous or binary with simple bounds, constraints are
sparse linear rows and the objective is linear.  Variable names follow
``<quantity>_<entity>_<t>`` and decision variables are additionally keyed by
``(quantity, entity, t)`` in :attr:`AbstractModel.index`.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .errors import BuildError

SENSES = ("<=", ">=", "==")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = "continuous"
    lb: float = 0.0
    ub: float = math.inf


class Expr:
    """Sparse linear expression ``sum(coef * var) + constant``."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[int, float] | None = None, constant: float = 0.0):
        self.terms: dict[int, float] = dict(terms or {})
        self.constant = float(constant)

    @classmethod
    def of(cls, value) -> "Expr":
        if isinstance(value, Expr):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return cls({int(value): 1.0})
        raise TypeError(f"cannot make an expression from {value!r}")

    @classmethod
    def const(cls, value: float) -> "Expr":
        return cls(constant=value)

    def copy(self) -> "Expr":
        return Expr(self.terms, self.constant)

    def add(self, var: int, coef: float) -> "Expr":
        if coef != 0.0:
            self.terms[var] = self.terms.get(var, 0.0) + coef
        return self

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, Expr):
            for v, c in other.terms.items():
                out.add(v, c)
            out.constant += other.constant
        else:
            out.constant += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, Expr) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        k = float(k)
        return Expr({v: c * k for v, c in self.terms.items()}, self.constant * k)

    __rmul__ = __mul__

    def value(self, x) -> float:
        return self.constant + sum(c * x[v] for v, c in self.terms.items())

    def __repr__(self):
        return f"Expr({self.terms}, {self.constant})"


@dataclass
class Constraint:
    name: str
    terms: dict[int, float]
    sense: str
    rhs: float


@dataclass
class AbstractModel:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    sense: str = "max"
    index: dict[tuple, int] = field(default_factory=dict)
    # variables whose bounds may be made elastic when diagnosing infeasibility
    elastic: list[int] = field(default_factory=list)
    # variables whose bounds are implied by the elastic ones; freed during diagnosis
    derived: list[int] = field(default_factory=list)
    # builder context (system, tier physics, config); shared, never copied
    meta: dict = field(default_factory=dict, repr=False, compare=False)
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    # -- construction -------------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, kind: str = "continuous", key=None) -> int:
        if name in self._names:
            raise BuildError(f"duplicate variable name {name!r}")
        if kind == "binary":
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise BuildError(f"variable {name} has empty bounds [{lb}, {ub}]")
        idx = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._names[name] = idx
        if key is not None:
            self.index[key] = idx
        return idx

    def add_constraint(self, expr, sense: str, rhs: float = 0.0, name: str | None = None) -> int:
        """Add ``expr sense rhs``; the expression constant moves to the right."""
        if sense not in SENSES:
            raise BuildError(f"unknown sense {sense!r}")
        expr = Expr.of(expr)
        terms = {v: c for v, c in expr.terms.items() if c != 0.0}
        for v in terms:
            if not 0 <= v < len(self.variables):
                raise BuildError(f"constraint references undeclared variable {v}")
        idx = len(self.constraints)
        self.constraints.append(Constraint(name or f"c{idx}", terms, sense, float(rhs) - expr.constant))
        return idx

    def set_objective(self, expr, sense: str = "max"):
        if sense not in ("max", "min"):
            raise BuildError(f"unknown objective sense {sense!r}")
        expr = Expr.of(expr)
        self.objective = {v: c for v, c in expr.terms.items() if c != 0.0}
        self.objective_constant = expr.constant
        self.sense = sense

    def var(self, quantity: str, entity: str, t: int | None = None) -> int:
        return self.index[(quantity, entity, t)]

    def name_of(self, idx: int) -> str:
        return self.variables[idx].name

    # -- inspection ---------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == "binary"]

    @property
    def n_binaries(self) -> int:
        return len(self.binaries)

    def audit(self) -> list[str]:
        """Structural problems: rows or objective terms on undeclared variables."""
        problems = []
        n = self.n_vars
        for c in self.constraints:
            bad = [v for v in c.terms if not 0 <= v < n]
            if bad:
                problems.append(f"constraint {c.name} references undeclared variables {bad}")
        bad = [v for v in self.objective if not 0 <= v < n]
        if bad:
            problems.append(f"objective references undeclared variables {bad}")
        for key, v in self.index.items():
            if not 0 <= v < n:
                problems.append(f"index entry {key} points at undeclared variable {v}")
        if len(set(self.index.values())) != len(self.index):
            problems.append("index map is not injective")
        return problems

    def objective_value(self, x) -> float:
        return self.objective_constant + sum(c * x[v] for v, c in self.objective.items())

    def clone(self) -> "AbstractModel":
        """Deep copy that shares the (read-only) builder context."""
        meta, self.meta = self.meta, {}
        try:
            out = copy.deepcopy(self)
        finally:
            self.meta = meta
        out.meta = meta
        return out

    def relaxed(self) -> "AbstractModel":
        """Copy with every binary turned into a continuous variable in [0, 1]."""
        out = self.clone()
        out.variables = [
            Variable(v.name, "continuous", v.lb, v.ub) if v.kind == "binary" else v for v in out.variables
        ]
        return out

    def matrices(self):
        """Objective vector, sparse row matrix and row bounds for array-based solvers."""
        n = self.n_vars
        c = np.zeros(n)
        for v, coef in self.objective.items():
            c[v] = coef
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for i, con in enumerate(self.constraints):
            for v, coef in con.terms.items():
                rows.append(i)
                cols.append(v)
                vals.append(coef)
            lo[i] = con.rhs if con.sense in (">=", "==") else -np.inf
            hi[i] = con.rhs if con.sense in ("<=", "==") else np.inf
        a = sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), n))
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        integrality = np.array([1 if v.kind == "binary" else 0 for v in self.variables])
        return c, a, lo, hi, lb, ub, integrality

    # -- export -------------------------------------------------------------

    def to_lp(self) -> str:
        """The model in CPLEX LP text format."""

        def fmt_terms(terms: Iterable[tuple[int, float]]) -> str:
            parts = []
            for v, coef in terms:
                sign = "-" if coef < 0 else "+"
                parts.append(f"{sign} {abs(coef)!r} {self.variables[v].name}")
            text = " ".join(parts) if parts else "0"
            return text[2:] if text.startswith("+ ") else text

        lines = ["\\ hydrocascade model", "Maximize" if self.sense == "max" else "Minimize"]
        obj = fmt_terms(sorted(self.objective.items()))
        if self.objective_constant:
            obj += f" + {self.objective_constant!r} obj_constant" if obj != "0" else ""
        lines.append(f" obj: {obj}")
        lines.append("Subject To")
        op = {"<=": "<=", ">=": ">=", "==": "="}
        for con in self.constraints:
            lines.append(f" {con.name}: {fmt_terms(sorted(con.terms.items()))} {op[con.sense]} {con.rhs!r}")
        lines.append("Bounds")
        if self.objective_constant:
            lines.append(" obj_constant = 1")
        for v in self.variables:
            if v.kind == "binary":
                continue
            lo = "-inf" if v.lb == -math.inf else repr(v.lb)
            hi = "+inf" if v.ub == math.inf else repr(v.ub)
            if v.lb == -math.inf and v.ub == math.inf:
                lines.append(f" {v.name} free")
            else:
                lines.append(f" {lo} <= {v.name} <= {hi}")
        bins = [v.name for v in self.variables if v.kind == "binary"]
        if bins:
            lines.append("Binaries")
            lines.extend(f" {name}" for name in bins)
        lines.append("End")
        return "\n".join(lines) + "\n"
