"""Finite-blocklength joint source-channel coding for a Gaussian source over AWGN.

The blocklength ``n`` is the solution of the normal-approximation relation

    n C - k R(d) = sqrt(n V_C + k V_S) * Qinv(eps)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .errors import InfeasibleRoot, ValidationError, ZeroCapacity, ZeroRateCode
from .process import ProcessModel

LOG2E = math.log2(math.e)


class SourceVariance(enum.Enum):
    """Which covariance supplies the eigenvalues for R(d)."""

    STEADY_STATE = "steady-state"
    RECEIVER_OUTPUT = "receiver-output"


@dataclass(frozen=True)
class ChannelSpec:
    P: float  # linear SNR

    def __post_init__(self):
        if not (math.isfinite(self.P) and self.P > 0.0):
            raise ValidationError(f"SNR P must be finite and > 0, got {self.P}")


def capacity(P: float) -> float:
    """AWGN capacity in bits per channel use."""
    if not P >= 0.0:
        raise ValidationError(f"SNR must be >= 0, got {P}")
    return 0.5 * math.log2(1.0 + P)


def rate_distortion(eigs: Sequence[float], d: float) -> float:
    """Reverse water-filling rate (bits per source symbol) at distortion ``d``."""
    eigs = np.asarray(eigs, dtype=float).ravel()
    if eigs.size == 0:
        raise ValidationError("need at least one source eigenvalue")
    if not d > 0.0:
        raise ValidationError(f"distortion d must be > 0, got {d}")
    if np.any(eigs < 0.0):
        raise ValidationError("source eigenvalues must be >= 0")
    total = 0.0
    for lam in eigs:
        if lam > d:
            total += 0.5 * math.log2(lam / d)
    return total / eigs.size


def dispersions(P: float) -> tuple[float, float]:
    """Channel and source dispersions ``(V_C, V_S)`` in bits^2."""
    if not P >= 0.0:
        raise ValidationError(f"SNR must be >= 0, got {P}")
    v_s = 0.5 * LOG2E**2
    v_c = 0.5 * (1.0 - 1.0 / (1.0 + P) ** 2) * LOG2E**2
    return v_c, v_s


def q_func(x: float) -> float:
    """Gaussian tail probability P(Z > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inv(eps: float) -> float:
    """Inverse of :func:`q_func` on (0, 1)."""
    if not (0.0 < eps < 1.0):
        raise ValidationError(f"eps must lie strictly inside (0, 1), got {eps}")
    return -float(ndtri(eps))


def blocklength(k: int, C: float, R: float, V_C: float, V_S: float, eps: float) -> float:
    """Channel blocklength solving the normal-approximation relation.

    Squaring the relation gives a quadratic in ``n``; its two roots straddle
    ``k R / C``. The root on the side selected by the sign of ``Qinv(eps)`` is
    returned, i.e. the larger root for eps <= 0.5 and the smaller for eps > 0.5.
    """
    if C <= 0.0:
        raise ZeroCapacity("zero-capacity channel")
    if R < 0.0:
        raise ValidationError(f"rate must be >= 0, got {R}")
    q = q_inv(eps)
    q2 = q * q
    b = V_C * q2 + 2.0 * k * C * R
    delta = V_C**2 * q2 * q2 + 4.0 * k * (V_C * C * R + V_S * C * C) * q2
    if delta < 0.0:
        raise InfeasibleRoot(f"infeasible root: discriminant {delta:.3g} < 0")
    root = math.sqrt(delta)
    if q >= 0.0:
        return (b + root) / (2.0 * C * C)
    # smaller root through the product of roots, free of cancellation
    num = 2.0 * (k * k * R * R - k * V_S * q2)
    n = num / (b + root)
    if not n > 0.0:
        raise InfeasibleRoot(
            f"infeasible root: no positive blocklength for eps={eps} at rate {R:.6g}"
        )
    return n


def relation_residual(n: float, k: int, C: float, R: float, V_C: float, V_S: float,
                      eps: float) -> float:
    """Absolute residual of ``n C - k R - sqrt(n V_C + k V_S) Qinv(eps)``."""
    return abs(n * C - k * R - math.sqrt(n * V_C + k * V_S) * q_inv(eps))


@dataclass(frozen=True)
class CodingPoint:
    d: float
    eps: float
    k: int
    C: float
    R: float
    V_C: float
    V_S: float
    n: float

    @property
    def residual(self) -> float:
        return relation_residual(self.n, self.k, self.C, self.R, self.V_C, self.V_S, self.eps)


def source_eigenvalues(m: ProcessModel, mode: SourceVariance = SourceVariance.STEADY_STATE,
                       q_w: float = 0.0) -> np.ndarray:
    cov = np.array(m.Q_x)
    if mode is SourceVariance.RECEIVER_OUTPUT:
        cov = cov + q_w * np.eye(m.k)
    return np.linalg.eigvalsh(0.5 * (cov + cov.T))


def make_coding_point(
    m: ProcessModel,
    ch: ChannelSpec,
    d: float,
    eps: float,
    source_var_mode: SourceVariance = SourceVariance.STEADY_STATE,
    q_w: float | None = None,
) -> CodingPoint:
    """Derive C, R(d), dispersions and blocklength for one (d, eps) pair.

    ``q_w`` only matters for ``RECEIVER_OUTPUT``; it defaults to ``d``.
    """
    if not (math.isfinite(d) and d > 0.0):
        raise ValidationError(f"distortion d must be > 0, got {d}")
    if not (0.0 < eps < 1.0):
        raise ValidationError(f"eps must lie strictly inside (0, 1), got {eps}")
    eigs = source_eigenvalues(m, source_var_mode, d if q_w is None else q_w)
    R = rate_distortion(eigs, d)
    if R <= 0.0:
        raise ZeroRateCode(
            f"zero-rate code: d={d:.6g} >= largest source eigenvalue {eigs.max():.6g}"
        )
    C = capacity(ch.P)
    v_c, v_s = dispersions(ch.P)
    n = blocklength(m.k, C, R, v_c, v_s, eps)
    return CodingPoint(d=d, eps=eps, k=m.k, C=C, R=R, V_C=v_c, V_S=v_s, n=n)
