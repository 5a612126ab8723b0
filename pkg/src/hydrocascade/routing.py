"""Transfer of upstream releases to downstream reservoirs.

Three regimes are supported: instantaneous transfer, a fixed whole-period
lag, and a discrete convolution with a travel-time kernel.  All three are
linear in the upstream discharge, so the same weights drive the simulator
and the optimization rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

if TYPE_CHECKING:
    from .domain import CascadeSystem

ROUTING_MODES = ("instantaneous", "fixed_lag", "convolution")


class KernelNormalizationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RoutingSpec:
    """How releases of the upstream reservoir reach the downstream one.

    ``tau`` is only read in ``fixed_lag`` mode and ``kernel`` only in
    ``convolution`` mode (weights for lags 0, 1, ..., k).  Releases before
    the horizon are assumed constant at ``pre_horizon_release`` (m3/s).
    """

    mode: str = "instantaneous"
    tau: int = 0
    kernel: tuple[float, ...] = ()
    pre_horizon_release: float = 0.0

    def __post_init__(self):
        if self.mode not in ROUTING_MODES:
            raise DomainError(
                f"unknown routing mode {self.mode!r}; flow-dependent delay is not supported"
            )
        if int(self.tau) != self.tau or self.tau < 0:
            raise DomainError(f"routing lag must be a non-negative whole number of periods, got {self.tau}")
        object.__setattr__(self, "tau", int(self.tau))
        if self.mode == "convolution":
            k = np.asarray(self.kernel, dtype=float)
            if k.size == 0:
                raise DomainError("convolution routing needs a non-empty kernel")
            if np.any(k < 0) or not np.all(np.isfinite(k)):
                raise DomainError("kernel weights must be finite and non-negative")
            total = k.sum()
            if total <= 0:
                raise DomainError("kernel weights sum to zero")
            if abs(total - 1.0) > 1e-6:
                warnings.warn(
                    f"routing kernel sums to {total:.6g}; normalizing to 1",
                    KernelNormalizationWarning,
                    stacklevel=3,
                )
            if total != 1.0:
                k = k / total
            object.__setattr__(self, "kernel", tuple(float(v) for v in k))
        else:
            object.__setattr__(self, "kernel", tuple(float(v) for v in self.kernel))

    @property
    def weights(self) -> np.ndarray:
        """Arrival weights indexed by lag in periods."""
        if self.mode == "instantaneous":
            return np.array([1.0])
        if self.mode == "fixed_lag":
            w = np.zeros(self.tau + 1)
            w[self.tau] = 1.0
            return w
        return np.array(self.kernel)

    @property
    def max_lag(self) -> int:
        return len(self.weights) - 1

    def terms(self, t: int) -> tuple[list[tuple[int, float]], float]:
        """Linear form of the contribution arriving in period ``t`` (1-based).

        Returns ``(terms, constant)`` where ``terms`` lists ``(source_period,
        weight)`` pairs for in-horizon releases and ``constant`` is the
        discharge contributed by pre-horizon releases.
        """
        terms = []
        const = 0.0
        for lag, w in enumerate(self.weights):
            if w == 0.0:
                continue
            src = t - lag
            if src >= 1:
                terms.append((src, float(w)))
            else:
                const += w * self.pre_horizon_release
        return terms, const


def route_contribution(spec: RoutingSpec, upstream_q: Sequence[float], t: int) -> float:
    """Discharge (m3/s) reaching the downstream reservoir in period ``t``."""
    q = upstream_q
    if spec.mode == "instantaneous":
        return float(q[t - 1])
    if spec.mode == "fixed_lag":
        src = t - spec.tau
        return float(q[src - 1]) if src >= 1 else float(spec.pre_horizon_release)
    total = 0.0
    for lag, w in enumerate(spec.kernel):
        src = t - lag
        total += w * (q[src - 1] if src >= 1 else spec.pre_horizon_release)
    return float(total)


def route_series(spec: RoutingSpec, upstream_q: Sequence[float]) -> np.ndarray:
    """Contribution for every period of the horizon."""
    q = np.asarray(upstream_q, dtype=float)
    return np.array([route_contribution(spec, q, t) for t in range(1, len(q) + 1)])


def in_transit_volume(spec: RoutingSpec, upstream_q: Sequence[float], dt: float) -> float:
    """Volume (m3) released within the horizon that arrives after it ends."""
    q = np.asarray(upstream_q, dtype=float)
    n = len(q)
    w = spec.weights
    late = 0.0
    for s in range(1, n + 1):
        for lag in range(len(w)):
            if s + lag > n:
                late += w[lag] * q[s - 1]
    return late * dt


def pre_horizon_volume(spec: RoutingSpec, n_periods: int, dt: float) -> float:
    """Volume (m3) arriving within the horizon from releases made before it."""
    return sum(spec.terms(t)[1] for t in range(1, n_periods + 1)) * dt


def total_inflow(
    system: CascadeSystem,
    all_discharges: Mapping[str, Sequence[float]],
    w: Mapping[str, Sequence[float]],
    r: str,
    t: int,
) -> float:
    """Total inflow I_{r,t}: local runoff plus routed upstream releases."""
    try:
        local = float(w[r][t - 1])
    except KeyError:
        raise ConfigurationError(f"no local inflow series for reservoir {r!r}") from None
    total = local
    for arc in system.incoming(r):
        src = arc.from_reservoir
        if src not in all_discharges:
            raise ConfigurationError(
                f"missing discharge series of upstream reservoir {src!r} feeding {r!r}"
            )
        total += route_contribution(arc.routing, all_discharges[src], t)
    return total
