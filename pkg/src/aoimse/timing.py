"""Per-attempt delay and the geometric retransmission process.

An attempt takes ``r = alpha n + beta`` seconds and fails with probability
``eps``; a failure triggers a fresh sample right away, so the time between
the start of the first attempt and the successful reception is
``r' = (m + 1) r`` with ``m`` geometric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class LinkTiming:
    """Delay model parameters.

    alpha: seconds per channel symbol; beta: fixed extra delay (s);
    s: waiting time after each ACK (s).
    """

    alpha: float = 1.0
    beta: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise ValidationError(f"beta must be >= 0, got {self.beta}")
        if not (math.isfinite(self.s) and self.s >= 0.0):
            raise ValidationError(f"waiting time s must be >= 0, got {self.s}")

    def delay(self, n: float) -> float:
        return attempt_delay(self.alpha, self.beta, n)


def attempt_delay(alpha: float, beta: float, n: float) -> float:
    if not alpha > 0.0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")
    if not beta >= 0.0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    if not n > 0.0:
        raise ValidationError(f"blocklength n must be > 0, got {n}")
    return alpha * n + beta


def _check_eps(eps: float) -> None:
    if eps >= 1.0:
        raise ValidationError(f"never succeeds: eps must be < 1, got {eps}")
    if not eps >= 0.0:
        raise ValidationError(f"eps must be >= 0, got {eps}")


def success_delay_moments(r: float, eps: float) -> tuple[float, float]:
    """Return ``(E[r'], E[r'^2])``."""
    if not r > 0.0:
        raise ValidationError(f"attempt delay r must be > 0, got {r}")
    _check_eps(eps)
    mean = r / (1.0 - eps)
    second = (1.0 + eps) * r * r / (1.0 - eps) ** 2
    return mean, second


def sample_success_delay(r: float, eps: float, rng: np.random.Generator) -> float:
    """Draw one ``r'`` from the caller's generator."""
    return float(sample_success_delays(r, eps, rng, 1)[0])


def sample_success_delays(r: float, eps: float, rng: np.random.Generator,
                          size: int) -> np.ndarray:
    return r * (sample_failures(eps, rng, size) + 1)


def sample_failures(eps: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Number of failed attempts before each success, ``P{m = j} = eps^j (1 - eps)``."""
    _check_eps(eps)
    if eps == 0.0:
        return np.zeros(size, dtype=np.int64)
    return rng.geometric(1.0 - eps, size=size).astype(np.int64) - 1
