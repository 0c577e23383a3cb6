import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_unitary(rng, M):
    Z = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def gapped_psd(rng, M, K, gap=0.1, top=10.0):
    """Hermitian PSD matrix with ``sigma_{K+1}/sigma_K == gap`` exactly."""
    Q = random_unitary(rng, M)
    sig = np.linspace(2 * top, top, K)
    tail = gap * top * np.linspace(1.0, 0.1, M - K)
    w = np.concatenate([sig, tail])
    return (Q * w) @ Q.conj().T, Q, w


def rank_k_psd(rng, M, K):
    G = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
    return G @ G.conj().T


def top_projector(S, K):
    """Oracle: top-K eigenprojector from numpy's own eigh."""
    w, V = np.linalg.eigh(S)
    U = V[:, np.argsort(w)[::-1][:K]]
    return U @ U.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import SUMMARY
    except ImportError:
        return
    if SUMMARY:
        terminalreporter.section("acceptance criteria")
        for line in SUMMARY:
            terminalreporter.write_line(line)
