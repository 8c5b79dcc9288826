"""Grid sweep over (d, eps) and the (MSE, AoI) achievability boundary."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AoiMseError, ValidationError
from .metrics import SystemConfig, TradeoffPoint, evaluate_point

SPACINGS = ("linear", "log")


def axis(lo: float, hi: float, num: int, spacing: str = "linear") -> np.ndarray:
    if num < 1:
        raise ValidationError(f"number of grid points must be >= 1, got {num}")
    if spacing not in SPACINGS:
        raise ValidationError(f"spacing must be one of {SPACINGS}, got {spacing!r}")
    if num == 1:
        return np.array([float(lo)])
    if spacing == "log":
        if lo <= 0.0:
            raise ValidationError("log spacing needs a positive lower end")
        return np.geomspace(lo, hi, num)
    return np.linspace(lo, hi, num)


@dataclass(frozen=True)
class SweepGrid:
    d_values: tuple[float, ...]
    eps_values: tuple[float, ...]

    def __post_init__(self):
        for name, vals in (("d_values", self.d_values), ("eps_values", self.eps_values)):
            if len(vals) == 0:
                raise ValidationError(f"{name} must be nonempty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValidationError(f"{name} must be strictly increasing")
        if self.d_values[0] <= 0.0:
            raise ValidationError("d values must be > 0")
        if self.eps_values[0] <= 0.0 or self.eps_values[-1] >= 1.0:
            raise ValidationError("eps values must lie strictly inside (0, 1)")

    @classmethod
    def from_ranges(cls, d_lo, d_hi, d_num, eps_lo, eps_hi, eps_num,
                    d_spacing="log", eps_spacing="linear") -> "SweepGrid":
        return cls(tuple(axis(d_lo, d_hi, d_num, d_spacing).tolist()),
                   tuple(axis(eps_lo, eps_hi, eps_num, eps_spacing).tolist()))

    @classmethod
    def default(cls, q_x: float) -> "SweepGrid":
        """60 x 60 grid: log d over [1e-3 q_x, 0.99 q_x], linear eps over [1e-4, 0.5]."""
        return cls.from_ranges(1e-3 * q_x, 0.99 * q_x, 60, 1e-4, 0.5, 60)

    def cells(self) -> list[tuple[float, float]]:
        return [(d, e) for d in self.d_values for e in self.eps_values]


def _cell(cfg: SystemConfig, d: float, eps: float) -> TradeoffPoint:
    try:
        return evaluate_point(cfg, d, eps)
    except AoiMseError as exc:
        return TradeoffPoint(d=d, eps=eps, feasible=False, reason=str(exc))


def sweep(grid: SweepGrid, cfg: SystemConfig, workers: int = 1) -> list[TradeoffPoint]:
    """Evaluate every cell, d-major and eps-minor; failures become infeasible rows."""
    cells = grid.cells()
    if workers <= 1:
        return [_cell(cfg, d, e) for d, e in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: _cell(cfg, *c), cells))


def dominates(p: TradeoffPoint, q: TradeoffPoint) -> bool:
    return (p.mse <= q.mse and p.aoi <= q.aoi) and (p.mse < q.mse or p.aoi < q.aoi)


def pareto_front(points: Sequence[TradeoffPoint]) -> list[TradeoffPoint]:
    """Feasible points not dominated in (mse, aoi), sorted by aoi.

    Exact duplicates keep only the first occurrence in input order.
    """
    if len(points) == 0:
        raise ValidationError("pareto_front needs at least one point")
    feas = [(i, p) for i, p in enumerate(points) if p.feasible]
    if not feas:
        raise ValidationError("pareto_front needs at least one feasible point")
    feas.sort(key=lambda ip: (ip[1].aoi, ip[1].mse, ip[0]))
    front = []
    best = math.inf
    for _, p in feas:
        if p.mse < best:
            front.append(p)
            best = p.mse
    return front


@dataclass(frozen=True)
class BoundaryCurves:
    """Lower boundary of the achievable region and its MSE components.

    ``resolved_aoi`` is the AoI beyond which the sweep's smallest distortion
    limits the region, so the boundary is only reported below it.
    """

    aoi: np.ndarray
    mse_delay: np.ndarray
    mse_channel: np.ndarray
    mse: np.ndarray
    resolved_aoi: float


def boundary_curves(points: Iterable[TradeoffPoint], bins: int = 50) -> BoundaryCurves:
    """Per AoI bin, the minimum-MSE point and its delay/channel components.

    Bins are equal-width over ``[min aoi, resolved_aoi]``. Past
    ``resolved_aoi`` (the smallest AoI reached at the finest distortion in the
    sweep) the lowest achievable MSE would need a finer d than the grid has,
    so those bins would trace the grid edge rather than the system.
    """
    feas = [p for p in points if p.feasible]
    if not feas:
        raise ValidationError("boundary_curves needs feasible points")
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    d_min = min(p.d for p in feas)
    cap = min(p.aoi for p in feas if p.d == d_min)
    kept = sorted((p for p in feas if p.aoi <= cap), key=lambda p: p.aoi)
    lo = kept[0].aoi
    width = (cap - lo) / bins if cap > lo else 1.0
    best: dict[int, TradeoffPoint] = {}
    for p in kept:
        b = min(int((p.aoi - lo) / width), bins - 1)
        if b not in best or p.mse < best[b].mse:
            best[b] = p
    chosen = [best[b] for b in sorted(best)]
    return BoundaryCurves(
        aoi=np.array([p.aoi for p in chosen]),
        mse_delay=np.array([p.mse_delay_avg for p in chosen]),
        mse_channel=np.array([p.mse_channel_avg for p in chosen]),
        mse=np.array([p.mse for p in chosen]),
        resolved_aoi=cap,
    )
