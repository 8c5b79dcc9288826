"""Time-average MSE and AoI over one success cycle.

A success cycle runs from one successful reception to the next: the age
starts at ``r``, the sender waits ``s`` and then needs ``r' = (m+1) r`` to get
a packet through, so the age sweeps ``[r, r + s + r']``. Time averages are
renewal-reward ratios ``E[integral over cycle] / E[s + r']``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .coding import ChannelSpec, SourceVariance, make_coding_point
from .errors import SeriesError, ValidationError
from .estimation import channel_weight
from .linalg import mat_exp, quadrature_vec
from .process import ProcessModel, ScalarProcess
from .timing import LinkTiming, success_delay_moments

MAX_SERIES_TERMS = 1_000_000


class MSEBreakdown(NamedTuple):
    mse: float
    mse_delay_avg: float
    mse_channel_avg: float


@dataclass(frozen=True)
class ClosedFormTerms:
    """Coefficients of ``M(tau) = Xi + Upsilon e^{2 a tau}`` for k = 1."""

    Xi: float
    Upsilon: float

    @classmethod
    def from_process(cls, p: ScalarProcess, q_w: float) -> "ClosedFormTerms":
        h = p.q_x * q_w / (p.q_x + q_w)
        return cls(Xi=-p.q_u / (2.0 * p.a), Upsilon=p.q_u / (2.0 * p.a) + h)


@dataclass(frozen=True)
class CycleMetrics:
    mse: float
    aoi: float
    mse_delay_avg: float
    mse_channel_avg: float


def _check_cycle(r: float, s: float, eps: float) -> None:
    if not (math.isfinite(r) and r > 0.0):
        raise ValidationError(f"attempt delay r must be > 0, got {r}")
    if not (math.isfinite(s) and s >= 0.0):
        raise ValidationError(f"waiting time s must be >= 0, got {s}")
    if eps >= 1.0:
        raise ValidationError(f"never succeeds: eps must be < 1, got {eps}")
    if not eps >= 0.0:
        raise ValidationError(f"eps must be >= 0, got {eps}")


def decay_bracket(a: float, r: float, s: float, eps: float) -> float:
    """``(1-eps)/(1-eps e^{2ar}) e^{2a(2r+s)} - e^{2ar}``, evaluated with expm1."""
    u = math.exp(2.0 * a * r)
    inner = (1.0 - eps) * math.expm1(2.0 * a * (r + s)) + eps * math.expm1(2.0 * a * r)
    return u * inner / (1.0 - eps * u)


def avg_mse_scalar(p: ScalarProcess, q_w: float, r: float, s: float,
                   eps: float) -> MSEBreakdown:
    """Closed-form time-average MSE for k = 1.

    ``MSE = Xi + (Upsilon / 2a) * bracket / (r / (1 - eps) + s)``; the delay
    and channel parts take ``-Xi`` and ``q_x q_w / (q_x + q_w)`` as their share
    of ``Upsilon``.
    """
    _check_cycle(r, s, eps)
    if not q_w >= 0.0:
        raise ValidationError(f"q_w must be >= 0, got {q_w}")
    terms = ClosedFormTerms.from_process(p, q_w)
    a = p.a
    ratio = decay_bracket(a, r, s, eps) / (2.0 * a) / (r / (1.0 - eps) + s)
    h = terms.Xi + terms.Upsilon
    delay = terms.Xi - terms.Xi * ratio
    channel = h * ratio
    return MSEBreakdown(delay + channel, delay, channel)


def avg_aoi(r: float, s: float, eps: float) -> float:
    """Time-average age under fixed waiting ``s`` and geometric retries.

    ``E[(s + r') r + (s + r')^2 / 2] / E[s + r']`` with the geometric moments
    of ``r'`` substituted.
    """
    _check_cycle(r, s, eps)
    num = 0.5 * (1.0 - eps) * s * s + (2.0 - eps) * s * r + (3.0 - eps) / (2.0 * (1.0 - eps)) * r * r
    return num / ((1.0 - eps) * s + r)


def avg_aoi_from_moments(r: float, s: float, eps: float) -> float:
    m1, m2 = success_delay_moments(r, eps)
    return ((s + m1) * r + 0.5 * (s * s + 2.0 * s * m1 + m2)) / (s + m1)


def _gram_integral(A: np.ndarray, weights: list[np.ndarray], length: float) -> list[np.ndarray]:
    """``int_0^length e^{A u} W e^{A^T u} du`` for each ``W``, by quadrature."""
    if length == 0.0:
        return [np.zeros_like(w) for w in weights]
    stacked = np.stack(weights)

    def integrand(u):
        phi = mat_exp(A, u)
        return np.einsum("ij,wjk,lk->wil", phi, stacked, phi)

    scale = max(1.0, float(np.abs(stacked).max()) * length)
    out = quadrature_vec(integrand, 0.0, length, tol=1e-15 * scale, rtol=1e-13)
    return [0.5 * (g + g.T) for g in out]


def avg_mse_general(m: ProcessModel, q_w: float, r: float, s: float, eps: float,
                    tol: float = 1e-9) -> MSEBreakdown:
    """Time-average MSE for any k by quadrature and a truncated geometric series.

    Writes ``M(tau) = tr Q_x - tr(e^{A tau} Q_x e^{A^T tau}) + tr(e^{A tau} H e^{A^T tau})``
    and integrates each trace term over the waiting stretch and over every
    attempt-long stretch ``[r + s + j r, r + s + (j+1) r]``. Stretch ``j`` is
    covered iff the cycle needs more than ``j`` attempts, which happens with
    probability ``eps^j``. The sum stops once the remaining terms are below
    ``tol``.
    """
    _check_cycle(r, s, eps)
    if not q_w >= 0.0:
        raise ValidationError(f"q_w must be >= 0, got {q_w}")
    if not tol > 0.0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    A = m.A
    qx = np.asarray(m.Q_x)
    h = channel_weight(m, q_w)
    tr_qx = float(np.trace(qx))

    k_wait = _gram_integral(A, [qx, h], s)
    k_att = _gram_integral(A, [qx, h], r)

    phi_r = mat_exp(A, r)
    wait_d = float(np.trace(phi_r @ k_wait[0] @ phi_r.T))
    wait_c = float(np.trace(phi_r @ k_wait[1] @ phi_r.T))

    # E[time] and E[int tr(e Q_x e^T)] and E[int tr(e H e^T)] over the cycle
    exp_time = s
    exp_d = wait_d
    exp_c = wait_c
    phi = mat_exp(A, r + s)
    weight = 1.0
    nominal = 2.0 * r * max(tr_qx, 1e-300)
    for j in range(MAX_SERIES_TERMS):
        term_d = float(np.trace(phi @ k_att[0] @ phi.T))
        term_c = float(np.trace(phi @ k_att[1] @ phi.T))
        exp_time += weight * r
        exp_d += weight * term_d
        exp_c += weight * term_c
        if eps == 0.0:
            break
        weight *= eps
        bound = weight * max(nominal * (j + 2), abs(term_d) + abs(term_c)) / (1.0 - eps)
        if bound < tol:
            break
        phi = phi @ phi_r
    else:
        raise SeriesError(f"series failure: no convergence in {MAX_SERIES_TERMS} terms")

    denom = r / (1.0 - eps) + s
    delay = (tr_qx * exp_time - exp_d) / denom
    channel = exp_c / denom
    return MSEBreakdown(delay + channel, delay, channel)


@dataclass(frozen=True)
class SystemConfig:
    """Everything that turns a (d, eps) pair into (MSE, AoI).

    ``q_w=None`` means the worst case ``q_w = d``.
    """

    model: ProcessModel
    channel: ChannelSpec = field(default_factory=lambda: ChannelSpec(10.0))
    timing: LinkTiming = field(default_factory=LinkTiming)
    q_w: float | None = None
    source_var_mode: SourceVariance = SourceVariance.STEADY_STATE
    integer_blocklength: bool = False
    tol: float = 1e-9

    @classmethod
    def default_scalar(cls, **kw) -> "SystemConfig":
        return cls(model=ProcessModel.scalar(-0.02, 1.0), **kw)

    def distortion_variance(self, d: float) -> float:
        if self.q_w is None:
            return d
        if self.q_w > d:
            raise ValidationError(f"q_w={self.q_w} exceeds the tolerated distortion d={d}")
        return self.q_w


@dataclass(frozen=True)
class TradeoffPoint:
    d: float
    eps: float
    n: float = math.nan
    r: float = math.nan
    aoi: float = math.nan
    mse: float = math.nan
    mse_delay_avg: float = math.nan
    mse_channel_avg: float = math.nan
    feasible: bool = True
    reason: str = ""


def cycle_metrics(m: ProcessModel, q_w: float, r: float, s: float, eps: float,
                  tol: float = 1e-9) -> CycleMetrics:
    """MSE and AoI for a known attempt delay; closed form when k = 1."""
    if m.k == 1:
        br = avg_mse_scalar(ScalarProcess.from_model(m), q_w, r, s, eps)
    else:
        br = avg_mse_general(m, q_w, r, s, eps, tol)
    return CycleMetrics(br.mse, avg_aoi(r, s, eps), br.mse_delay_avg, br.mse_channel_avg)


def evaluate_point(cfg: SystemConfig, d: float, eps: float) -> TradeoffPoint:
    """Run the pipeline d, eps -> n -> r -> (MSE, AoI)."""
    q_w = cfg.distortion_variance(d)
    cp = make_coding_point(cfg.model, cfg.channel, d, eps, cfg.source_var_mode, q_w)
    n = float(math.ceil(cp.n)) if cfg.integer_blocklength else cp.n
    r = cfg.timing.delay(n)
    cm = cycle_metrics(cfg.model, q_w, r, cfg.timing.s, eps, cfg.tol)
    return TradeoffPoint(d=d, eps=eps, n=n, r=r, aoi=cm.aoi, mse=cm.mse,
                         mse_delay_avg=cm.mse_delay_avg,
                         mse_channel_avg=cm.mse_channel_avg)
