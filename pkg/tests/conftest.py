import numpy as np
import pytest


def random_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def hermitian_with_spectrum(rng, values):
    """``U diag(values) U^H`` for a Haar-random unitary ``U``."""
    u = random_unitary(rng, len(values))
    return (u * np.asarray(values, dtype=float)) @ u.conj().T


def random_wishart(rng, n, m=None):
    m = 2 * n if m is None else m
    h = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)
    h *= np.sqrt(n / np.sum(np.abs(h) ** 2))
    return h @ h.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
