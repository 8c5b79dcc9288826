import numpy as np
import pytest

from aoimse.errors import ValidationError
from aoimse.metrics import SystemConfig, TradeoffPoint, evaluate_point
from aoimse.pareto import SweepGrid, axis, boundary_curves, dominates, pareto_front, sweep


def brute_front(points):
    feas = [p for p in points if p.feasible]
    keep = [p for p in feas if not any(dominates(q, p) for q in feas)]
    out, seen = [], set()
    for p in sorted(keep, key=lambda p: p.aoi):
        if (p.aoi, p.mse) not in seen:
            seen.add((p.aoi, p.mse))
            out.append(p)
    return out


def cloud(rng, n):
    # coarse values force ties and exact duplicates
    xs = rng.integers(0, 40, size=(n, 2)) / 4.0
    return [TradeoffPoint(d=1.0, eps=0.1, aoi=a, mse=m) for a, m in xs]


def test_front_matches_brute_force(rng):
    for _ in range(20):
        pts = cloud(rng, 500)
        got = [(p.aoi, p.mse) for p in pareto_front(pts)]
        want = [(p.aoi, p.mse) for p in brute_front(pts)]
        assert got == want


def test_front_skips_infeasible_and_rejects_empty():
    good = TradeoffPoint(d=1.0, eps=0.1, aoi=1.0, mse=1.0)
    bad = TradeoffPoint(d=1.0, eps=0.1, feasible=False)
    assert pareto_front([bad, good]) == [good]
    with pytest.raises(ValidationError):
        pareto_front([])
    with pytest.raises(ValidationError):
        pareto_front([bad])


def test_degenerate_grid_equals_point():
    cfg = SystemConfig.default_scalar()
    pts = sweep(SweepGrid((1.0,), (0.5,)), cfg)
    assert pts == [evaluate_point(cfg, 1.0, 0.5)]


def test_sweep_order_and_infeasible_rows():
    cfg = SystemConfig.default_scalar()
    grid = SweepGrid((1.0, 30.0), (0.1, 0.2))
    pts = sweep(grid, cfg)
    assert [(p.d, p.eps) for p in pts] == grid.cells()
    assert [p.feasible for p in pts] == [True, True, False, False]
    assert "zero-rate" in pts[2].reason


def test_sweep_components_additive():
    cfg = SystemConfig.default_scalar()
    pts = sweep(SweepGrid.from_ranges(0.025, 24.0, 50, 1e-4, 0.5, 50), cfg)
    for p in pts:
        assert p.feasible
        assert p.mse == pytest.approx(p.mse_delay_avg + p.mse_channel_avg, rel=1e-13)


def test_sweep_workers_identical():
    cfg = SystemConfig.default_scalar()
    grid = SweepGrid.from_ranges(0.1, 20.0, 12, 0.01, 0.5, 12)
    assert sweep(grid, cfg) == sweep(grid, cfg, workers=4)


def test_default_grid_and_boundary():
    grid = SweepGrid.default(25.0)
    assert len(grid.cells()) == 3600
    assert grid.d_values[0] == pytest.approx(0.025) and grid.d_values[-1] == pytest.approx(24.75)
    pts = sweep(grid, SystemConfig.default_scalar())
    b = boundary_curves(pts)
    assert np.all(np.diff(b.aoi) > 0)
    assert np.all(np.diff(b.mse_delay) >= 0)
    assert np.all(np.diff(b.mse_channel) <= 0)
    i = int(np.argmin(b.mse))
    assert 0 < i < b.mse.size - 1


def test_grid_validation():
    with pytest.raises(ValidationError):
        SweepGrid((1.0, 0.5), (0.1,))
    with pytest.raises(ValidationError):
        SweepGrid((1.0,), (1.0,))
    with pytest.raises(ValidationError):
        axis(0.0, 1.0, 5, "log")
    assert axis(1.0, 100.0, 3, "log") == pytest.approx([1.0, 10.0, 100.0])
