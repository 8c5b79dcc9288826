import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoimse.errors import ValidationError
from aoimse.metrics import (ClosedFormTerms, SystemConfig, avg_aoi, avg_aoi_from_moments,
                            avg_mse_general, avg_mse_scalar, cycle_metrics, evaluate_point)
from aoimse.process import ProcessModel, ScalarProcess
from aoimse.timing import LinkTiming

P = ScalarProcess(-0.02, 1.0)
# 40-digit quadrature of M(t) over the cycle summed against the geometric law
AVG_MSE_REF = 12.188582340642255


def test_closed_form_reference():
    assert avg_mse_scalar(P, 1.0, 10.0, 0.0, 0.1).mse == pytest.approx(AVG_MSE_REF, rel=1e-13)


def test_numeric_reference(scalar_model):
    assert avg_mse_general(scalar_model, 1.0, 10.0, 0.0, 0.1).mse == pytest.approx(
        AVG_MSE_REF, rel=1e-10)


def test_terms():
    t = ClosedFormTerms.from_process(P, 1.0)
    assert t.Xi == pytest.approx(25.0)
    assert t.Xi + t.Upsilon == pytest.approx(25 / 26)


def test_aoi_values():
    assert avg_aoi(1.0, 0.0, 0.5) == pytest.approx(2.5, rel=1e-15)
    # renewal-reward oracle: E[L r + L^2/2] / E[L] with L = 1 + 1 gives 2
    assert avg_aoi(1.0, 1.0, 0.0) == pytest.approx(2.0, rel=1e-15)
    assert avg_aoi(3.0, 0.0, 0.0) == pytest.approx(4.5, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(r=st.floats(1e-3, 100.0), s=st.floats(0.0, 100.0), eps=st.floats(0.0, 0.95))
def test_aoi_two_routes_agree(r, s, eps):
    assert avg_aoi(r, s, eps) == pytest.approx(avg_aoi_from_moments(r, s, eps), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(1e-2, 100.0), e1=st.floats(0.0, 0.9), e2=st.floats(0.0, 0.9))
def test_aoi_increases_with_eps(r, e1, e2):
    lo, hi = sorted((e1, e2))
    if hi - lo > 1e-9:
        assert avg_aoi(r, 0.0, hi) > avg_aoi(r, 0.0, lo)


GRID = list(itertools.product([-0.02, -0.5], [0.1, 1.0, 10.0], [0.5, 5.0, 50.0], [0.0, 1.0],
                              [0.0, 0.1, 0.5, 0.9]))


@pytest.mark.parametrize("a,q_w,r,s,eps", GRID)
def test_closed_form_matches_numeric(a, q_w, r, s, eps):
    p = ScalarProcess(a, 1.0)
    c = avg_mse_scalar(p, q_w, r, s, eps)
    n = avg_mse_general(p.to_model(), q_w, r, s, eps)
    for x, y in zip(c, n):
        assert abs(x - y) <= 1e-8 * (1 + abs(x))
    assert c.mse == pytest.approx(c.mse_delay_avg + c.mse_channel_avg, rel=1e-14)
    assert 0.0 <= c.mse <= p.q_x * (1 + 1e-12)


def test_general_model_components_are_additive():
    m = ProcessModel(np.diag([-0.02, -0.1]), np.eye(2))
    b = avg_mse_general(m, 1.0, 10.0, 0.0, 0.1)
    assert math.isfinite(b.mse)
    assert b.mse == pytest.approx(b.mse_delay_avg + b.mse_channel_avg, rel=1e-14)
    # a diagonal system decouples into two scalar problems
    parts = [avg_mse_scalar(ScalarProcess(a, 1.0), 1.0, 10.0, 0.0, 0.1).mse for a in (-0.02, -0.1)]
    assert b.mse == pytest.approx(sum(parts), rel=1e-9)


def test_cycle_validation():
    with pytest.raises(ValidationError, match="never succeeds"):
        avg_mse_scalar(P, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        avg_aoi(0.0, 0.0, 0.1)


def test_reference_point():
    cfg = SystemConfig.default_scalar()
    pt = evaluate_point(cfg, 1.0, 0.5)
    assert pt.n == pytest.approx(1.3423754829424793, rel=1e-12)
    assert pt.r == pt.n
    assert pt.aoi == pytest.approx(2.5 * pt.r, rel=1e-14)
    assert pt.aoi == pytest.approx(3.3559387073561982, rel=1e-12)


def test_integer_blocklength_and_timing():
    cfg = SystemConfig.default_scalar(integer_blocklength=True, timing=LinkTiming(2.0, 1.0))
    pt = evaluate_point(cfg, 1.0, 0.5)
    assert pt.n == 2.0 and pt.r == 5.0


def test_explicit_qw_must_not_exceed_d():
    cfg = SystemConfig.default_scalar(q_w=2.0)
    with pytest.raises(ValidationError):
        evaluate_point(cfg, 1.0, 0.1)
    assert evaluate_point(cfg, 3.0, 0.1).feasible


def test_cycle_metrics_dispatch(scalar_model):
    c = cycle_metrics(scalar_model, 1.0, 2.0, 0.5, 0.2)
    assert c.mse == pytest.approx(avg_mse_scalar(P, 1.0, 2.0, 0.5, 0.2).mse, rel=1e-15)
    assert c.aoi == avg_aoi(2.0, 0.5, 0.2)
