"""Small dense matrix kernels: matrix exponential, Lyapunov solver, quadrature.

All matrices here are square, real and at most 16x16.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from .errors import QuadratureError, UnstableSystemError, ValidationError

MAX_DIM = 16


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert ``a`` to a square float matrix.

    Scalars become 1x1 matrices.
    """
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ValidationError(f"{name} dimension {m.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def mat_exp(A, t: float = 1.0) -> np.ndarray:
    """Return ``exp(A t)``.

    Uses scaling and squaring with a Pade approximant (scipy); ``t == 0``
    short-circuits to the exact identity.
    """
    A = as_matrix(A, "A")
    if not math.isfinite(t):
        raise ValidationError(f"t must be finite, got {t}")
    k = A.shape[0]
    if t == 0.0:
        return np.eye(k)
    if k == 1:
        return np.array([[math.exp(A[0, 0] * t)]])
    return expm(A * t)


def is_hurwitz(A) -> bool:
    A = as_matrix(A, "A")
    return bool(np.max(np.linalg.eigvals(A).real) < 0.0)


def lyapunov_solve(A, Q) -> np.ndarray:
    """Solve ``A X + X A^T + Q = 0`` for stable ``A``.

    The equation is vectorized into ``(I kron A + A kron I) vec(X) = -vec(Q)``,
    which is exact to solver precision for the dimensions used here.
    """
    A = as_matrix(A, "A")
    Q = as_matrix(Q, "Q")
    k = A.shape[0]
    if Q.shape != A.shape:
        raise ValidationError(f"Q shape {Q.shape} does not match A shape {A.shape}")
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ValidationError("Q must be symmetric")
    if not is_hurwitz(A):
        raise UnstableSystemError(
            "unstable system: A has an eigenvalue with nonnegative real part"
        )
    if k == 1:
        return np.array([[-Q[0, 0] / (2.0 * A[0, 0])]])
    eye = np.eye(k)
    # row-major vec: vec(A X) = (A kron I) vec(X), vec(X A^T) = (I kron A) vec(X)
    lhs = np.kron(A, eye) + np.kron(eye, A)
    x = np.linalg.solve(lhs, -Q.reshape(-1)).reshape(k, k)
    return 0.5 * (x + x.T)


def quadrature(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    limit: int = 200,
) -> float:
    """Adaptive Gauss-Kronrod estimate of the integral of ``f`` over [lo, hi].

    Raises QuadratureError when the absolute error target ``tol`` is not met
    within ``limit`` subdivisions.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError("integration limits must be finite")
    if lo > hi:
        raise ValidationError(f"need lo <= hi, got lo={lo}, hi={hi}")
    if lo == hi:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info = integrate.quad(
            f, lo, hi, epsabs=tol, epsrel=0.0, limit=limit, full_output=1
        )[:3]
    if not math.isfinite(value) or err > tol:
        raise QuadratureError(
            f"quadrature failure on [{lo}, {hi}]: error estimate {err:.3g} > {tol:.3g}"
        )
    return float(value)


def quadrature_vec(
    f: Callable[[float], np.ndarray],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    rtol: float = 1e-13,
) -> np.ndarray:
    """Array-valued variant of :func:`quadrature` (max-norm error control)."""
    if lo > hi:
        raise ValidationError(f"need lo <= hi, got lo={lo}, hi={hi}")
    if lo == hi:
        return np.zeros_like(np.asarray(f(lo), dtype=float))
    value, err, info = integrate.quad_vec(
        f, lo, hi, epsabs=tol, epsrel=rtol, norm="max", full_output=True
    )
    if not info.success:
        raise QuadratureError(
            f"quadrature failure on [{lo}, {hi}]: {info.message}"
        )
    return np.asarray(value, dtype=float)
