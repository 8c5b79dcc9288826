"""Event-driven Monte Carlo simulation of the sampled link.

Each path evolves the state exactly on a fine time grid, draws the number of
failed attempts per cycle, adds distortion noise to the successful sample and
integrates the squared estimation error and the age with the trapezoid rule.
Nothing here uses the closed-form averages, so the simulator can check them.

Paths draw from independent substreams keyed by ``(seed, path_index)`` and
are merged in path order, which keeps results identical for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ValidationError
from .estimation import shrinkage
from .process import ProcessModel, transition
from .timing import sample_failures

# accumulator slots
_ERR, _DELAY, _CHAN, _AGE, _TIME = range(5)


@dataclass(frozen=True)
class SimConfig:
    model: ProcessModel
    q_w: float
    r: float
    s: float = 0.0
    eps: float = 0.0
    horizon_cycles: int = 500
    paths: int = 200
    seed: int = 0
    mse_grid_step: float | None = None  # default r / 50
    burn_in: int = 10
    threads: int = 1
    tau_bin_edges: tuple[float, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise ValidationError(f"r must be > 0, got {self.r}")
        if not (math.isfinite(self.s) and self.s >= 0.0):
            raise ValidationError(f"s must be >= 0, got {self.s}")
        if not (0.0 <= self.eps < 1.0):
            raise ValidationError(f"eps must lie in [0, 1), got {self.eps}")
        if not (math.isfinite(self.q_w) and self.q_w >= 0.0):
            raise ValidationError(f"q_w must be >= 0, got {self.q_w}")
        if self.horizon_cycles < 1 or self.paths < 1:
            raise ValidationError("horizon_cycles and paths must be positive")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        step = self.grid_step
        if not (step > 0.0 and step <= self.r / 10.0 * (1.0 + 1e-12)):
            raise ValidationError(
                f"mse_grid_step must be in (0, r/10] = (0, {self.r / 10.0:.6g}], got {step}"
            )
        edges = np.asarray(self.tau_bin_edges, dtype=float)
        if edges.size and (edges.size < 2 or np.any(np.diff(edges) <= 0.0)):
            raise ValidationError("tau_bin_edges must be strictly increasing")

    @property
    def grid_step(self) -> float:
        return self.r / 50.0 if self.mse_grid_step is None else self.mse_grid_step


@dataclass(frozen=True)
class SimResult:
    mse_mean: float
    aoi_mean: float
    mse_delay_mean: float
    mse_channel_mean: float
    mse_se: float | None
    aoi_se: float | None
    mse_delay_se: float | None
    mse_channel_se: float | None
    cycles_observed: int
    tau_bin_centers: np.ndarray | None = None
    tau_bin_mse: np.ndarray | None = None
    tau_bin_se: np.ndarray | None = None


@numba.njit(cache=True, nogil=True)
def _step(x, p, xh, phi, chol, z, k):
    xn = np.empty(k)
    pn = np.empty(k)
    hn = np.empty(k)
    for i in range(k):
        ax = 0.0
        ap = 0.0
        ah = 0.0
        for j in range(k):
            ax += phi[i, j] * x[j] + chol[i, j] * z[j]
            ap += phi[i, j] * p[j]
            ah += phi[i, j] * xh[j]
        xn[i] = ax
        pn[i] = ap
        hn[i] = ah
    return xn, pn, hn


@numba.njit(cache=True, nogil=True)
def _sq(x, p, xh, k):
    e = 0.0
    dd = 0.0
    cc = 0.0
    for i in range(k):
        e += (x[i] - xh[i]) ** 2
        dd += (x[i] - p[i]) ** 2
        cc += (p[i] - xh[i]) ** 2
    return e, dd, cc


@numba.njit(cache=True, nogil=True)
def _segment(x, p, xh, tau, nsteps, dt, phi, chol, noise, pos, k, acc, edges, bins):
    """Advance ``nsteps`` steps of ``dt`` and trapezoid-integrate into ``acc``."""
    e0, d0, c0 = _sq(x, p, xh, k)
    nb = edges.shape[0] - 1
    for _ in range(nsteps):
        x, p, xh = _step(x, p, xh, phi, chol, noise[pos], k)
        pos += 1
        e1, d1, c1 = _sq(x, p, xh, k)
        acc[0] += 0.5 * dt * (e0 + e1)
        acc[1] += 0.5 * dt * (d0 + d1)
        acc[2] += 0.5 * dt * (c0 + c1)
        acc[3] += dt * (tau + 0.5 * dt)
        if nb > 0:
            tm = tau + 0.5 * dt
            if tm >= edges[0] and tm < edges[nb]:
                b = 0
                while tm >= edges[b + 1]:
                    b += 1
                bins[b, 0] += 0.5 * dt * (e0 + e1)
                bins[b, 1] += dt * tm
                bins[b, 2] += dt
        tau += dt
        e0, d0, c0 = e1, d1, c1
    return x, p, xh, tau, pos


@numba.njit(cache=True, nogil=True)
def _run_path(x0, phi_r, chol_r, phi_s, chol_s, phi_full, chol_full, gain, sqrt_qw,
              r, s, n_r, n_s, fails, noise, wnoise, burn_in, edges):
    k = x0.shape[0]
    acc = np.zeros(5)
    nb = max(edges.shape[0] - 1, 0)
    bins = np.zeros((max(nb, 1), 3))
    cyc_bins = np.zeros((max(nb, 1), 3))
    dt_r = r / n_r
    dt_s = s / n_s if n_s > 0 else 0.0
    pos = 0

    # first sample at time 0, delivered after one attempt
    sample = x0.copy()
    y = np.empty(k)
    for i in range(k):
        y[i] = sample[i] + sqrt_qw * wnoise[0, i]
    zero = np.zeros(k)
    x, _p, _h = _step(x0, zero, zero, phi_full, chol_full, noise[pos], k)
    pos += 1
    p = phi_full @ sample
    xh = phi_full @ (gain @ y)
    tau = r

    for c in range(fails.shape[0]):
        if nb > 0:
            cyc_bins[:, :] = 0.0
        sub = np.zeros(5)
        if n_s > 0:
            x, p, xh, tau, pos = _segment(x, p, xh, tau, n_s, dt_s, phi_s, chol_s,
                                          noise, pos, k, sub, edges, cyc_bins)
        m = fails[c]
        for attempt in range(m + 1):
            if attempt == m:
                sample = x.copy()
            x, p, xh, tau, pos = _segment(x, p, xh, tau, n_r, dt_r, phi_r, chol_r,
                                          noise, pos, k, sub, edges, cyc_bins)
        length = s + (m + 1) * r
        if abs(tau - (r + length)) > 1e-9 * (r + length):
            raise RuntimeError("age bookkeeping drifted from r + s + r'")
        if c >= burn_in:
            for i in range(4):
                acc[i] += sub[i]
            acc[4] += length
            if nb > 0:
                bins += cyc_bins
        # successful reception: age resets to exactly r
        for i in range(k):
            y[i] = sample[i] + sqrt_qw * wnoise[c + 1, i]
        p = phi_full @ sample
        xh = phi_full @ (gain @ y)
        tau = r
    return acc, bins


def _symmetric_sqrt(sigma: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


class _Kernel:
    """Per-config constants shared by all paths (read-only)."""

    def __init__(self, cfg: SimConfig):
        m = cfg.model
        self.k = m.k
        self.n_r = max(1, math.ceil(cfg.r / cfg.grid_step - 1e-9))
        self.n_s = math.ceil(cfg.s / cfg.grid_step - 1e-9) if cfg.s > 0.0 else 0
        phi_r, sig_r = transition(m, cfg.r / self.n_r)
        self.phi_r, self.chol_r = phi_r, _symmetric_sqrt(sig_r)
        if self.n_s:
            phi_s, sig_s = transition(m, cfg.s / self.n_s)
        else:
            phi_s, sig_s = np.eye(m.k), np.zeros((m.k, m.k))
        self.phi_s, self.chol_s = phi_s, _symmetric_sqrt(sig_s)
        phi_f, sig_f = transition(m, cfg.r)
        self.phi_full, self.chol_full = phi_f, _symmetric_sqrt(sig_f)
        self.chol_x = _symmetric_sqrt(np.asarray(m.Q_x))
        self.gain = shrinkage(m, cfg.q_w)
        self.sqrt_qw = math.sqrt(cfg.q_w)
        self.edges = np.asarray(cfg.tau_bin_edges, dtype=float)
        for name in ("phi_r", "chol_r", "phi_s", "chol_s", "phi_full", "chol_full",
                     "chol_x", "gain"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))


def _path(cfg: SimConfig, kern: _Kernel, index: int):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(index,)))
    total_cycles = cfg.burn_in + cfg.horizon_cycles
    fails = sample_failures(cfg.eps, rng, total_cycles)
    steps = 1 + total_cycles * kern.n_s + int((fails + 1).sum()) * kern.n_r
    noise = rng.standard_normal((steps, kern.k))
    wnoise = rng.standard_normal((total_cycles + 1, kern.k))
    x0 = kern.chol_x @ rng.standard_normal(kern.k)
    return _run_path(x0, kern.phi_r, kern.chol_r, kern.phi_s, kern.chol_s,
                     kern.phi_full, kern.chol_full, kern.gain, kern.sqrt_qw,
                     cfg.r, cfg.s, kern.n_r, kern.n_s, fails, noise, wnoise,
                     cfg.burn_in, kern.edges)


def _ratio(num: np.ndarray, den: np.ndarray) -> tuple[float, float | None]:
    """Pooled ratio estimate and its delta-method standard error over paths."""
    est = num.sum() / den.sum()
    n = num.size
    if n < 2:
        return float(est), None
    resid = num - est * den
    se = math.sqrt(np.sum(resid**2) / (n * (n - 1))) / den.mean()
    return float(est), float(se)


def simulate(cfg: SimConfig) -> SimResult:
    kern = _Kernel(cfg)
    if cfg.threads == 1:
        outs = [_path(cfg, kern, i) for i in range(cfg.paths)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outs = list(pool.map(lambda i: _path(cfg, kern, i), range(cfg.paths)))
    acc = np.array([o[0] for o in outs])
    time = acc[:, _TIME]
    mse, mse_se = _ratio(acc[:, _ERR], time)
    dly, dly_se = _ratio(acc[:, _DELAY], time)
    chn, chn_se = _ratio(acc[:, _CHAN], time)
    aoi, aoi_se = _ratio(acc[:, _AGE], time)
    result = dict(
        mse_mean=mse, aoi_mean=aoi, mse_delay_mean=dly, mse_channel_mean=chn,
        mse_se=mse_se, aoi_se=aoi_se, mse_delay_se=dly_se, mse_channel_se=chn_se,
        cycles_observed=cfg.paths * cfg.horizon_cycles,
    )
    if kern.edges.size:
        bins = np.array([o[1] for o in outs])  # paths x nbins x 3
        centers, means, ses = [], [], []
        for b in range(kern.edges.size - 1):
            w = bins[:, b, 2]
            if w.sum() == 0.0:
                centers.append(math.nan)
                means.append(math.nan)
                ses.append(math.nan)
                continue
            centers.append(bins[:, b, 1].sum() / w.sum())
            est, se = _ratio(bins[:, b, 0], w)
            means.append(est)
            ses.append(math.nan if se is None else se)
        result.update(tau_bin_centers=np.array(centers), tau_bin_mse=np.array(means),
                      tau_bin_se=np.array(ses))
    return SimResult(**result)
