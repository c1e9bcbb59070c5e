import numpy as np
import pytest

from formhess.hessian_operator import LOG, HermitianMatrix, mu_of_matrix
from formhess.symfun import in_gamma_k


def brute_force_esym(mu, k):
    """Subset-enumeration oracle for S_k, n <= 8."""
    from itertools import combinations

    mu = np.asarray(mu, dtype=float)
    if k == 0:
        return 1.0
    if k > mu.size:
        return 0.0
    return float(sum(np.prod([mu[i] for i in idx]) for idx in combinations(range(mu.size), k)))


def random_hermitian(rng, n, scale=1.0):
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianMatrix(scale * (B + B.conj().T) / 2)


def random_admissible(rng, n, k, form="root"):
    """Random Hermitian matrix with mu strictly inside the admissible cone."""
    while True:
        A = random_hermitian(rng, n)
        lam = np.linalg.eigvalsh(A.mat)
        A = HermitianMatrix(A.mat + float(np.abs(lam).max() * rng.uniform(0.5, 2.0)) * np.eye(n))
        mu, _ = mu_of_matrix(A)
        if form == LOG:
            if np.all(mu > 0):
                return A
        elif in_gamma_k(mu, k):
            return A


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
