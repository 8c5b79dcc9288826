import numpy as np
import pytest

from aoimse.process import ProcessModel


def random_stable(rng, k):
    """Random Hurwitz matrix with eigenvalue real parts in [-1, -0.05]."""
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    t = np.triu(rng.standard_normal((k, k)) * 0.3, 1)
    t[np.diag_indices(k)] = -rng.uniform(0.05, 1.0, k)
    return q @ t @ q.T


def random_psd(rng, k):
    b = rng.standard_normal((k, k))
    return b @ b.T + 0.1 * np.eye(k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def scalar_model():
    return ProcessModel.scalar(-0.02, 1.0)
