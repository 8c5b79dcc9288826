"""Instantaneous estimation error as a function of the age ``tau``.

The receiver holds ``y = x(nu) + w`` with ``w ~ N(0, q_w I)`` and predicts
``x_hat(t) = F_tau y``. The error splits into a staleness part (input noise
accumulated since the sample) and a resolution part (distortion ``w``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import mat_exp
from .process import ProcessModel, ScalarProcess


@dataclass(frozen=True)
class EstimatorGain:
    tau: float
    F: np.ndarray


def _check_tau(tau: float) -> None:
    if not (math.isfinite(tau) and tau >= 0.0):
        raise ValidationError(f"age tau must be a finite value >= 0, got {tau}")


def _check_qw(q_w: float) -> None:
    if not (math.isfinite(q_w) and q_w >= 0.0):
        raise ValidationError(f"distortion variance q_w must be >= 0, got {q_w}")


def shrinkage(m: ProcessModel, q_w: float) -> np.ndarray:
    """``Q_x (Q_x + q_w I)^{-1}``, the zero-age part of the optimal gain."""
    _check_qw(q_w)
    s = m.Q_x + q_w * np.eye(m.k)
    if np.linalg.cond(s) > 1e14:
        raise ValidationError("Q_x + Q_w is singular")
    return np.linalg.solve(s.T, m.Q_x.T).T


def mse_delay(m: ProcessModel, tau: float) -> float:
    """Staleness MSE, ``trace(Q_x - e^{A tau} Q_x e^{A^T tau})``."""
    _check_tau(tau)
    phi = mat_exp(m.A, tau)
    return max(float(np.trace(m.Q_x - phi @ m.Q_x @ phi.T)), 0.0)


def estimator_gain(m: ProcessModel, q_w: float, tau: float) -> EstimatorGain:
    _check_tau(tau)
    return EstimatorGain(tau, mat_exp(m.A, tau) @ shrinkage(m, q_w))


def mse_channel_with_gain(m: ProcessModel, q_w: float, tau: float, F) -> float:
    """Resolution MSE for an arbitrary gain ``F``.

    ``trace((e^{A tau} - F) Q_x (e^{A tau} - F)^T + q_w F F^T)``
    """
    _check_tau(tau)
    _check_qw(q_w)
    F = np.asarray(F, dtype=float)
    diff = mat_exp(m.A, tau) - F
    return float(np.trace(diff @ m.Q_x @ diff.T) + q_w * np.sum(F * F))


def mse_channel(m: ProcessModel, q_w: float, tau: float) -> float:
    """Resolution MSE under the optimal gain."""
    _check_tau(tau)
    phi = mat_exp(m.A, tau)
    h = channel_weight(m, q_w)
    return float(np.trace(phi @ h @ phi.T))


def channel_weight(m: ProcessModel, q_w: float) -> np.ndarray:
    """``Q_x (Q_x + Q_w)^{-1} Q_w``, the zero-age resolution error covariance."""
    h = shrinkage(m, q_w) * q_w
    return 0.5 * (h + h.T)


def mse_total(m: ProcessModel, q_w: float, tau: float) -> float:
    return mse_delay(m, tau) + mse_channel(m, q_w, tau)


# k = 1 fast path

def scalar_mse_delay(p: ScalarProcess, tau: float) -> float:
    _check_tau(tau)
    return -p.q_x * math.expm1(2.0 * p.a * tau)


def scalar_mse_channel(p: ScalarProcess, q_w: float, tau: float) -> float:
    _check_tau(tau)
    _check_qw(q_w)
    return p.q_x * q_w / (p.q_x + q_w) * math.exp(2.0 * p.a * tau)


def scalar_mse_total(p: ScalarProcess, q_w: float, tau: float) -> float:
    return scalar_mse_delay(p, tau) + scalar_mse_channel(p, q_w, tau)
