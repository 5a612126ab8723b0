"""Piecewise-linear approximations and bilinear relaxations.

Provides uniform-breakpoint and piece-count-minimal 1D fits, triangulated
2D grids, a worst-case error certificate, and the four-inequality envelope
of a bilinear product over a box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import FitError, InfeasibleFitError, SamplingError

# slack added to the tolerance when comparing floating-point residuals
FIT_RTOL = 1e-9


@dataclass(frozen=True)
class PwlCurve1D:
    """Continuous piecewise-linear curve given by its breakpoints."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) < 2 or len(self.x) != len(self.y):
            raise FitError("a PWL curve needs at least 2 breakpoints with matching ordinates")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise FitError("PWL breakpoints must be strictly increasing")

    @property
    def n_pieces(self) -> int:
        return len(self.x) - 1

    @property
    def domain(self) -> tuple[float, float]:
        return self.x[0], self.x[-1]

    def __call__(self, x):
        out = np.interp(x, self.x, self.y)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PwlSurface2D:
    """Triangulated bivariate PWL function on a rectilinear grid.

    Every cell is split along its lower-left to upper-right diagonal into a
    lower triangle (below the diagonal) and an upper triangle.
    ``values[i][j]`` is the sample at ``(x_grid[i], y_grid[j])``.
    """

    x_grid: tuple[float, ...]
    y_grid: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "x_grid", tuple(float(v) for v in self.x_grid))
        object.__setattr__(self, "y_grid", tuple(float(v) for v in self.y_grid))
        object.__setattr__(self, "values", tuple(tuple(float(v) for v in row) for row in self.values))
        v = np.asarray(self.values)
        if v.shape != (len(self.x_grid), len(self.y_grid)):
            raise SamplingError(f"surface values have shape {v.shape}, expected {(len(self.x_grid), len(self.y_grid))}")

    @property
    def domain(self):
        return (self.x_grid[0], self.x_grid[-1]), (self.y_grid[0], self.y_grid[-1])

    def triangles(self) -> list[tuple[tuple[int, int], tuple[int, int], tuple[int, int]]]:
        """Vertex index triples of every triangle, cell by cell (lower first)."""
        tris = []
        for i in range(len(self.x_grid) - 1):
            for j in range(len(self.y_grid) - 1):
                tris.append(((i, j), (i + 1, j), (i + 1, j + 1)))
                tris.append(((i, j), (i, j + 1), (i + 1, j + 1)))
        return tris

    def _locate(self, x, y):
        xg = np.asarray(self.x_grid)
        yg = np.asarray(self.y_grid)
        i = np.clip(np.searchsorted(xg, x, side="right") - 1, 0, len(xg) - 2)
        j = np.clip(np.searchsorted(yg, y, side="right") - 1, 0, len(yg) - 2)
        u = (x - xg[i]) / (xg[i + 1] - xg[i])
        w = (y - yg[j]) / (yg[j + 1] - yg[j])
        return i, j, u, w

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(self.values)
        i, j, u, w = self._locate(x, y)
        f00, f10, f01, f11 = v[i, j], v[i + 1, j], v[i, j + 1], v[i + 1, j + 1]
        lower = f00 + u * (f10 - f00) + w * (f11 - f10)
        upper = f00 + w * (f01 - f00) + u * (f11 - f01)
        out = np.where(u >= w, lower, upper)
        return float(out) if out.ndim == 0 else out

    def evaluate_triangle(self, tri, x, y):
        """Affine interpolation of the plane through one triangle's vertices."""
        pts = np.array([[self.x_grid[a], self.y_grid[b], 1.0] for a, b in tri])
        vals = np.array([self.values[a][b] for a, b in tri])
        coef = np.linalg.solve(pts, vals)
        return coef[0] * np.asarray(x) + coef[1] * np.asarray(y) + coef[2]


@dataclass(frozen=True)
class FitSpec:
    epsilon: float
    max_pieces: int | None = None

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise FitError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.max_pieces is not None and self.max_pieces < 1:
            raise FitError("max_pieces must be at least 1")


def _as_samples(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise FitError("sample abscissae and ordinates differ in length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("samples must be finite")
    return x, y


def hat_basis(x, breakpoints) -> np.ndarray:
    """Design matrix of the continuous PWL basis ("hat" functions)."""
    x = np.asarray(x, dtype=float)
    bp = np.asarray(breakpoints, dtype=float)
    basis = np.zeros((len(x), len(bp)))
    for k in range(len(bp)):
        e = np.zeros(len(bp))
        e[k] = 1.0
        basis[:, k] = np.interp(x, bp, e)
    return basis


def _minimax_ordinates(x, y, bp):
    basis = hat_basis(x, bp)
    m, n = basis.shape
    # variables: ordinates (free) then the error bound e >= 0
    c = np.zeros(n + 1)
    c[-1] = 1.0
    ones = np.ones((m, 1))
    a_ub = np.vstack([np.hstack([basis, -ones]), np.hstack([-basis, -ones])])
    b_ub = np.concatenate([y, -y])
    bounds = [(None, None)] * n + [(0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise FitError(f"minimax fit failed: {res.message}")
    return res.x[:n]


def fit_pwl_1d_uniform(x, y, n_pieces: int, norm: str = "max") -> PwlCurve1D:
    """Fit a continuous PWL curve with equally spaced breakpoints.

    Breakpoint ordinates minimize the worst absolute residual (``norm="max"``,
    a small LP) or the sum of squared residuals (``norm="l2"``).
    """
    x, y = _as_samples(x, y)
    if n_pieces < 1:
        raise FitError("n_pieces must be at least 1")
    if len(np.unique(x)) < n_pieces + 1:
        raise FitError(f"degenerate fit: {len(np.unique(x))} distinct samples for {n_pieces + 1} breakpoints")
    bp = np.linspace(x.min(), x.max(), n_pieces + 1)
    if norm == "l2":
        coef = np.linalg.lstsq(hat_basis(x, bp), y, rcond=None)[0]
    elif norm == "max":
        coef = _minimax_ordinates(x, y, bp)
    else:
        raise FitError(f"unknown norm {norm!r}")
    return PwlCurve1D(tuple(bp), tuple(coef))


# -- piece-count-minimal fit -------------------------------------------------


def _project(u, lo, hi, j, k, a, b):
    """Ordinates at u[k] reachable by a line starting at u[j] with ordinate in [a, b].

    The line must stay inside the band [lo_i, hi_i] at every interior sample.
    Returns an interval ``(c_lo, c_hi)`` or ``None`` when empty.
    """
    ck_lo, ck_hi = lo[k], hi[k]
    if k > j + 1:
        th = (u[j + 1:k] - u[j]) / (u[k] - u[j])
        s = np.concatenate([-th / (1 - th), [0.0]])
        p = np.concatenate([lo[j + 1:k] / (1 - th), [a]])
        q = np.concatenate([hi[j + 1:k] / (1 - th), [b]])
        # every lower line must stay below every upper line: (p_m - q_n) + (s_m - s_n) c <= 0
        d = s[:, None] - s[None, :]
        e = p[:, None] - q[None, :]
        flat = d == 0
        if np.any(e[flat] > 0):
            return None
        pos = d > 0
        neg = d < 0
        if np.any(pos):
            ck_hi = min(ck_hi, float(np.min(-e[pos] / d[pos])))
        if np.any(neg):
            ck_lo = max(ck_lo, float(np.max(-e[neg] / d[neg])))
    elif a > b:
        return None
    if ck_lo > ck_hi:
        return None
    return ck_lo, ck_hi


def _start_range(u, lo, hi, j, k, a, b, ck):
    """Ordinates at u[j] in [a, b] compatible with ordinate ``ck`` at u[k]."""
    cj_lo, cj_hi = a, b
    if k > j + 1:
        th = (u[j + 1:k] - u[j]) / (u[k] - u[j])
        cj_lo = max(cj_lo, float(np.max((lo[j + 1:k] - th * ck) / (1 - th))))
        cj_hi = min(cj_hi, float(np.min((hi[j + 1:k] - th * ck) / (1 - th))))
    return cj_lo, cj_hi


def _merge(intervals):
    out = []
    for lo_, hi_ in sorted(intervals):
        if out and lo_ <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi_))
        else:
            out.append((lo_, hi_))
    return out


def fit_pwl_1d_optimal(x, y, spec: FitSpec) -> PwlCurve1D:
    """Continuous PWL fit with the fewest pieces meeting ``spec.epsilon``.

    Breakpoints are restricted to sample abscissae.  For every candidate
    breakpoint and piece count the set of achievable ordinates is tracked as
    a union of intervals, which makes the search exact: the returned piece
    count is minimal over all continuous fits in that class.  When several
    minimal fits exist, backtracking keeps the latest feasible predecessor
    breakpoint.  Ordinates are then re-optimized for the worst residual on
    the chosen breakpoints.
    """
    x, y = _as_samples(x, y)
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    u, inv = np.unique(x, return_inverse=True)
    if len(u) < 2:
        raise FitError("degenerate fit: need samples at 2 or more distinct abscissae")
    scale = max(1.0, float(np.max(np.abs(y))))
    eps = spec.epsilon + FIT_RTOL * scale
    ymax = np.full(len(u), -np.inf)
    ymin = np.full(len(u), np.inf)
    np.maximum.at(ymax, inv, y)
    np.minimum.at(ymin, inv, y)
    lo, hi = ymax - eps, ymin + eps
    if np.any(lo > hi):
        raise InfeasibleFitError(
            f"samples sharing an abscissa spread more than 2*epsilon; no fit meets epsilon={spec.epsilon}"
        )
    n = len(u)
    # layers[m][k] -> (merged intervals, raw entries (interval, j, merged index at j))
    layers = [{0: ([(lo[0], hi[0])], [])}]
    while n - 1 not in layers[-1]:
        prev = layers[-1]
        raw: dict[int, list] = {}
        for j in sorted(prev):
            merged_j = prev[j][0]
            for k in range(j + 1, n):
                hit = False
                for idx, (a, b) in enumerate(merged_j):
                    iv = _project(u, lo, hi, j, k, a, b)
                    if iv is not None:
                        raw.setdefault(k, []).append((iv, j, idx))
                        hit = True
                if not hit:
                    # a longer segment cannot succeed where a shorter one fails
                    break
        layers.append({k: (_merge([e[0] for e in entries]), entries) for k, entries in raw.items()})
    m_star = len(layers) - 1
    if spec.max_pieces is not None and m_star > spec.max_pieces:
        raise InfeasibleFitError(
            f"epsilon={spec.epsilon} needs {m_star} pieces, above the cap of {spec.max_pieces}",
            minimal_pieces=m_star,
        )

    k = n - 1
    merged = layers[m_star][k][0]
    c = 0.5 * (merged[0][0] + merged[0][1])
    xs, cs = [u[k]], [c]
    for m in range(m_star, 0, -1):
        entries = layers[m][k][1]
        tol = 1e-12 * scale
        best = None
        for iv, j, idx in entries:
            if iv[0] - tol <= c <= iv[1] + tol and (best is None or j > best[1]):
                best = (iv, j, idx)
        if best is None:  # pragma: no cover - guarded by construction
            best = min(entries, key=lambda e: min(abs(c - e[0][0]), abs(c - e[0][1])))
        _, j, idx = best
        a, b = layers[m - 1][j][0][idx]
        cj_lo, cj_hi = _start_range(u, lo, hi, j, k, a, b, c)
        c = 0.5 * (cj_lo + cj_hi)
        k = j
        xs.append(u[k])
        cs.append(c)
    bp = np.array(xs[::-1])
    stitched = np.array(cs[::-1])
    try:
        refined = _minimax_ordinates(x, y, bp)
    except FitError:
        refined = stitched
    err = lambda c_: float(np.max(np.abs(np.interp(x, bp, c_) - y)))
    best = refined if err(refined) <= err(stitched) else stitched
    return PwlCurve1D(tuple(bp), tuple(best))


# -- surfaces, errors, envelopes -----------------------------------------------


def triangulate_grid_2d(x_grid, y_grid, f: Callable[[float, float], float]) -> PwlSurface2D:
    """Sample ``f`` on the grid and triangulate every cell along its main diagonal."""
    xg = [float(v) for v in x_grid]
    yg = [float(v) for v in y_grid]
    for name, g in (("x", xg), ("y", yg)):
        if len(g) < 2:
            raise SamplingError(f"degenerate {name} axis: need at least 2 grid points, got {len(g)}")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise SamplingError(f"{name} grid must be strictly increasing")
    values = []
    for xi in xg:
        row = []
        for yj in yg:
            try:
                v = float(f(xi, yj))
            except Exception as exc:
                raise SamplingError(f"sample provider failed at ({xi}, {yj}): {exc}") from exc
            if not math.isfinite(v):
                raise SamplingError(f"sample provider returned {v} at ({xi}, {yj})")
            row.append(v)
        values.append(tuple(row))
    return PwlSurface2D(tuple(xg), tuple(yg), tuple(values))


def max_error(approx, samples) -> tuple[float, int]:
    """Worst absolute deviation of ``approx`` over ``samples`` and its index.

    ``samples`` is ``(x, y)`` for a 1D curve or ``(x, y, z)`` for a surface.
    """
    arrays = [np.asarray(s, dtype=float).ravel() for s in samples]
    if not arrays or arrays[0].size == 0:
        raise FitError("empty sample set")
    if isinstance(approx, PwlSurface2D):
        xs, ys, zs = arrays
        (xlo, xhi), (ylo, yhi) = approx.domain
        if np.any((xs < xlo) | (xs > xhi) | (ys < ylo) | (ys > yhi)):
            raise FitError("sample outside the surface domain")
        err = np.abs(approx(xs, ys) - zs)
    else:
        xs, ys = arrays
        lo_, hi_ = approx.domain
        if np.any((xs < lo_) | (xs > hi_)):
            raise FitError("sample outside the curve domain")
        err = np.abs(np.asarray(approx(xs)) - ys)
    idx = int(np.argmax(err))
    return float(err[idx]), idx


class Inequality(NamedTuple):
    """``q_coef*Q + h_coef*h + w_coef*w <= rhs``."""

    q_coef: float
    h_coef: float
    w_coef: float
    rhs: float

    def slack(self, q, h, w):
        return self.rhs - (self.q_coef * q + self.h_coef * h + self.w_coef * w)


def mccormick_envelope(q_bounds: Sequence[float], h_bounds: Sequence[float]) -> list[Inequality]:
    """Convex and concave envelopes of w = Q*h over a box, as 4 inequalities."""
    q_lo, q_hi = (float(v) for v in q_bounds)
    h_lo, h_hi = (float(v) for v in h_bounds)
    if not all(map(math.isfinite, (q_lo, q_hi, h_lo, h_hi))):
        raise FitError("envelope bounds must be finite")
    if q_lo > q_hi or h_lo > h_hi:
        raise FitError(f"inverted envelope box Q in [{q_lo}, {q_hi}], h in [{h_lo}, {h_hi}]")
    return [
        Inequality(h_lo, q_lo, -1.0, q_lo * h_lo),
        Inequality(h_hi, q_hi, -1.0, q_hi * h_hi),
        Inequality(-h_lo, -q_hi, 1.0, -q_hi * h_lo),
        Inequality(-h_hi, -q_lo, 1.0, -q_lo * h_hi),
    ]


def envelope_range(ineqs: Sequence[Inequality], q: float, h: float) -> tuple[float, float]:
    """Interval of w admitted by the envelope at a fixed (Q, h)."""
    lo_, hi_ = -math.inf, math.inf
    for iq in ineqs:
        bound = (iq.rhs - iq.q_coef * q - iq.h_coef * h) / iq.w_coef
        if iq.w_coef < 0:
            lo_ = max(lo_, bound)
        else:
            hi_ = min(hi_, bound)
    return lo_, hi_
