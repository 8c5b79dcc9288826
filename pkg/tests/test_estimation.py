import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoimse.errors import ValidationError
from aoimse.estimation import (channel_weight, estimator_gain, mse_channel,
                               mse_channel_with_gain, mse_delay, mse_total, scalar_mse_channel,
                               scalar_mse_delay, scalar_mse_total)
from aoimse.linalg import mat_exp, quadrature
from aoimse.process import ProcessModel, ScalarProcess

from conftest import random_psd, random_stable

P = ScalarProcess(-0.02, 1.0)
SIGMA_10 = 8.241998849109018
MC_10 = 0.6445385058034993


def test_scalar_reference_values(scalar_model):
    assert mse_delay(scalar_model, 10.0) == pytest.approx(SIGMA_10, rel=1e-13)
    assert scalar_mse_delay(P, 10.0) == pytest.approx(SIGMA_10, rel=1e-14)
    assert mse_channel(scalar_model, 1.0, 0.0) == pytest.approx(25 / 26, rel=1e-14)
    assert mse_channel(scalar_model, 1.0, 10.0) == pytest.approx(MC_10, rel=1e-13)
    assert scalar_mse_channel(P, 1.0, 10.0) == pytest.approx(MC_10, rel=1e-14)
    assert scalar_mse_total(P, 1.0, 10.0) == pytest.approx(8.886537354912517, rel=1e-14)
    assert mse_total(scalar_model, 1.0, 10.0) == pytest.approx(8.886537354912517, rel=1e-13)


def test_delay_mse_is_accumulated_noise(rng):
    m = ProcessModel(random_stable(rng, 2), random_psd(rng, 2))
    tau = 3.0
    q = quadrature(lambda u: np.trace(mat_exp(m.A, u) @ m.Q_u @ mat_exp(m.A, u).T), 0.0, tau,
                   tol=1e-12)
    assert mse_delay(m, tau) == pytest.approx(q, rel=1e-10)


def test_optimal_gain_beats_perturbations(rng):
    m = ProcessModel(random_stable(rng, 3), random_psd(rng, 3))
    for tau, q_w in [(0.0, 0.1), (1.0, 1.0), (5.0, 3.0)]:
        F = estimator_gain(m, q_w, tau).F
        best = mse_channel_with_gain(m, q_w, tau, F)
        assert best == pytest.approx(mse_channel(m, q_w, tau), rel=1e-12)
        for _ in range(50):
            d = rng.standard_normal(F.shape)
            d *= 1e-3 / np.linalg.norm(d)
            assert mse_channel_with_gain(m, q_w, tau, F + d) >= best - 1e-12


def test_zero_distortion_means_no_channel_error(rng):
    m = ProcessModel(random_stable(rng, 2), random_psd(rng, 2))
    assert mse_channel(m, 0.0, 2.0) == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(channel_weight(m, 0.0), 0.0, atol=1e-14)


def test_validation(scalar_model):
    with pytest.raises(ValidationError):
        mse_delay(scalar_model, -1.0)
    with pytest.raises(ValidationError):
        mse_channel(scalar_model, -1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(tau=st.floats(0.0, 500.0), q_w=st.floats(0.0, 100.0))
def test_scalar_fast_path_matches_general(scalar_model, tau, q_w):
    assert scalar_mse_total(P, q_w, tau) == pytest.approx(mse_total(scalar_model, q_w, tau),
                                                         rel=1e-11, abs=1e-12)
    # error never exceeds the prior variance
    assert scalar_mse_total(P, q_w, tau) <= P.q_x * (1 + 1e-12)
