"""Stable Gauss-Markov process dx = A x dt + u, with white input noise Q_u."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnstableSystemError, ValidationError
from .linalg import as_matrix, is_hurwitz, lyapunov_solve, mat_exp


class ProcessModel:
    """Linear time-invariant process with Hurwitz system matrix.

    Attributes:
        A: k x k system matrix (1/second).
        Q_u: k x k input-noise intensity, symmetric PSD.
        Q_x: steady-state covariance, solves A Q_x + Q_x A^T + Q_u = 0.
    """

    def __init__(self, A, Q_u):
        A = as_matrix(A, "A")
        Q_u = as_matrix(Q_u, "Q_u")
        if Q_u.shape != A.shape:
            raise ValidationError(
                f"Q_u shape {Q_u.shape} does not match A shape {A.shape}"
            )
        if not np.allclose(Q_u, Q_u.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(Q_u).max())):
            raise ValidationError("Q_u must be symmetric")
        if np.linalg.eigvalsh(Q_u).min() < -1e-12 * max(1.0, np.abs(Q_u).max()):
            raise ValidationError("Q_u must be positive semidefinite")
        if not is_hurwitz(A):
            raise UnstableSystemError(
                "unstable system: every eigenvalue of A needs a negative real part"
            )
        self.A = _frozen(A)
        self.Q_u = _frozen(0.5 * (Q_u + Q_u.T))
        self.Q_x = _frozen(lyapunov_solve(A, self.Q_u))

    @classmethod
    def scalar(cls, a: float, q_u: float) -> "ProcessModel":
        return cls([[a]], [[q_u]])

    @property
    def k(self) -> int:
        return self.A.shape[0]

    def __repr__(self) -> str:
        return f"ProcessModel(k={self.k}, A={self.A.tolist()}, Q_u={self.Q_u.tolist()})"


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=float)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class ScalarProcess:
    """The k = 1 special case, a < 0 and q_u > 0."""

    a: float
    q_u: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a < 0.0):
            raise UnstableSystemError(f"unstable system: need a < 0, got a={self.a}")
        if not (math.isfinite(self.q_u) and self.q_u > 0.0):
            raise ValidationError(f"need q_u > 0, got q_u={self.q_u}")

    @property
    def q_x(self) -> float:
        return -self.q_u / (2.0 * self.a)

    def to_model(self) -> ProcessModel:
        return ProcessModel.scalar(self.a, self.q_u)

    @classmethod
    def from_model(cls, m: ProcessModel) -> "ScalarProcess":
        if m.k != 1:
            raise ValidationError(f"expected a scalar model, got k={m.k}")
        return cls(float(m.A[0, 0]), float(m.Q_u[0, 0]))


def steady_covariance(m: ProcessModel) -> np.ndarray:
    return m.Q_x


def transition(m: ProcessModel, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact discretization over a step of ``h`` seconds.

    Returns ``(Phi, Sigma)`` with ``x(t+h) = Phi x(t) + v``, ``v ~ N(0, Sigma)``.
    Sigma comes from the Lyapunov identity ``Q_x - Phi Q_x Phi^T``.
    """
    if not math.isfinite(h) or h < 0.0:
        raise ValidationError(f"step h must be a finite value >= 0, got {h}")
    phi = mat_exp(m.A, h)
    if h == 0.0:
        return phi, np.zeros_like(phi)
    sigma = m.Q_x - phi @ m.Q_x @ phi.T
    return phi, 0.5 * (sigma + sigma.T)
