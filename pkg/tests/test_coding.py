import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoimse.coding import (ChannelSpec, SourceVariance, blocklength, capacity, dispersions,
                           make_coding_point, q_func, q_inv, rate_distortion,
                           relation_residual)
from aoimse.errors import InfeasibleRoot, ValidationError, ZeroCapacity, ZeroRateCode

# reference values evaluated at 40 digits with mpmath
C_10 = 1.7297158093186486
R_25_1 = 2.3219280948873623
V_S = 1.0406844905028039
V_C_10 = 1.0320837922341857


def test_capacity_and_dispersions():
    assert capacity(10.0) == pytest.approx(C_10, rel=1e-15)
    v_c, v_s = dispersions(10.0)
    assert v_c == pytest.approx(V_C_10, rel=1e-14)
    assert v_s == pytest.approx(V_S, rel=1e-14)
    assert dispersions(1e-3)[1] == v_s
    with pytest.raises(ValidationError):
        ChannelSpec(0.0)


def test_rate_distortion_water_filling():
    assert rate_distortion([25.0], 1.0) == pytest.approx(R_25_1, rel=1e-15)
    assert rate_distortion([25.0], 30.0) == 0.0
    assert rate_distortion([1.0], 1.0) == 0.0
    # d acts as the water level; the clamped mode contributes nothing
    assert rate_distortion([4.0, 0.5], 1.0) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(ValidationError):
        rate_distortion([1.0, -1.0], 0.5)


def test_q_inv_roundtrip():
    assert q_inv(0.15865525393145705) == pytest.approx(1.0, rel=1e-14)
    assert q_inv(0.5) == 0.0
    # round trip through the erfc-based tail, over the whole supported range
    for e in np.concatenate([np.logspace(-12, -1, 100), np.linspace(0.1, 1 - 1e-12, 100)]):
        assert q_func(q_inv(e)) == pytest.approx(e, rel=1e-10)
    with pytest.raises(ValidationError):
        q_inv(0.0)


def test_blocklength_reference_point():
    n = blocklength(1, C_10, R_25_1, V_C_10, V_S, 0.01)
    assert n == pytest.approx(4.569232633142648, rel=1e-12)
    assert relation_residual(n, 1, C_10, R_25_1, V_C_10, V_S, 0.01) < 1e-9


def test_blocklength_zero_rate_formula():
    q = q_inv(0.01)
    n = blocklength(1, C_10, 0.0, V_C_10, V_S, 0.01)
    expected = (V_C_10 * q**2 + math.sqrt(V_C_10**2 * q**4 + 4 * V_S * C_10**2 * q**2)) / (2 * C_10**2)
    assert n == pytest.approx(expected, rel=1e-13)


def test_blocklength_half_eps_is_rate_ratio(scalar_model):
    cp = make_coding_point(scalar_model, ChannelSpec(10.0), 1.0, 0.5)
    assert cp.n == pytest.approx(1.3423754829424793, rel=1e-12)


def test_blocklength_failures():
    with pytest.raises(ZeroCapacity):
        blocklength(1, 0.0, 1.0, 1.0, 1.0, 0.1)
    # tiny rate and eps near one: no positive root
    with pytest.raises(InfeasibleRoot):
        blocklength(1, C_10, 1e-3, V_C_10, V_S, 0.99)


def test_coding_point(scalar_model):
    cp = make_coding_point(scalar_model, ChannelSpec(10.0), 0.1, 0.01)
    assert cp.n > 0 and cp.residual < 1e-9
    with pytest.raises(ZeroRateCode):
        make_coding_point(scalar_model, ChannelSpec(10.0), 25.0, 0.1)


def test_receiver_output_mode_raises_rate(scalar_model):
    ch = ChannelSpec(10.0)
    a = make_coding_point(scalar_model, ch, 1.0, 0.1)
    b = make_coding_point(scalar_model, ch, 1.0, 0.1, SourceVariance.RECEIVER_OUTPUT, q_w=1.0)
    assert b.R == pytest.approx(0.5 * math.log2(26.0), rel=1e-14)
    assert b.n > a.n


@settings(max_examples=300, deadline=None)
@given(d=st.floats(1e-3, 24.0), eps=st.floats(1e-6, 0.5))
def test_residual_property(scalar_model, d, eps):
    cp = make_coding_point(scalar_model, ChannelSpec(10.0), d, eps)
    assert cp.residual <= 1e-9 * max(1.0, cp.n * cp.C)


@settings(max_examples=100, deadline=None)
@given(d=st.floats(0.5, 5.0), e1=st.floats(1e-4, 0.5), e2=st.floats(1e-4, 0.5))
def test_blocklength_decreases_with_eps(scalar_model, d, e1, e2):
    lo, hi = sorted((e1, e2))
    ch = ChannelSpec(10.0)
    assert make_coding_point(scalar_model, ch, d, lo).n >= make_coding_point(scalar_model, ch, d, hi).n
