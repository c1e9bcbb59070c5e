import numpy as np
import pytest

from conftest import random_admissible, random_hermitian
from formhess.errors import InadmissiblePointError, InvalidArgumentError
from formhess.hessian_operator import (
    LOG,
    ROOT,
    HermitianMatrix,
    OperatorParams,
    concavity_probe,
    ellipticity_ratio,
    f_gradient,
    f_value,
    lambda_from_mu,
    mu_from_lambda,
    mu_of_matrix,
    trace_identity_residual,
)
from formhess.verify import gradient_fd_error


class TestParams:
    def test_log_requires_k_equals_n(self):
        with pytest.raises(InvalidArgumentError):
            OperatorParams(n=3, k=2, form=LOG)

    def test_negative_rhs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            OperatorParams(n=3, k=2, rhs_level=-1.0)


class TestHermitianStorage:
    def test_structurally_hermitian(self, rng):
        raw = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        A = HermitianMatrix(raw)
        assert np.array_equal(A.mat, A.mat.conj().T)

    def test_real_diagonal(self):
        A = HermitianMatrix(np.array([[1 + 2j, 3j], [0, 2 - 1j]]))
        assert np.array_equal(np.diag(A.mat).imag, np.zeros(2))


class TestMuLambdaMaps:
    def test_mu_from_lambda(self):
        assert np.array_equal(mu_from_lambda([1.0, 2.0, 3.0]), [5.0, 4.0, 3.0])
        assert np.array_equal(mu_from_lambda(np.zeros(4)), np.zeros(4))
        assert np.array_equal(mu_from_lambda([1.0, 0.0, 0.0]), [0.0, 1.0, 1.0])

    def test_lambda_from_mu(self):
        assert np.array_equal(lambda_from_mu([5.0, 4.0, 3.0]), [1.0, 2.0, 3.0])
        n = 5
        assert np.array_equal(lambda_from_mu(np.full(n, n - 1.0)), np.ones(n))

    def test_round_trip(self, rng):
        lam = rng.standard_normal(6)
        back = lambda_from_mu(mu_from_lambda(lam))
        assert np.abs(back - lam).max() <= 1e-12

    def test_mu_of_identity(self):
        mu, _ = mu_of_matrix(HermitianMatrix(np.eye(3)))
        assert np.allclose(mu, 2.0)

    def test_mu_of_diagonal(self):
        mu, dec = mu_of_matrix(HermitianMatrix(np.diag([1.0, 2.0, 3.0])))
        assert np.allclose(np.sort(mu), [3.0, 4.0, 5.0])
        recon = (dec.unitary * dec.eigenvalues) @ dec.unitary.conj().T
        assert np.abs(recon - np.diag([1, 2, 3])).max() <= 1e-10

    def test_unitary_conjugation_invariance(self, rng):
        Q = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))[0]
        A = HermitianMatrix(Q @ np.diag([1.0, 2.0, 3.0]) @ Q.conj().T)
        mu, _ = mu_of_matrix(A)
        assert np.abs(np.sort(mu) - [3.0, 4.0, 5.0]).max() <= 1e-12


class TestFValue:
    def test_identity_root(self):
        assert f_value(HermitianMatrix(np.eye(3)), OperatorParams(3, 2)) == pytest.approx(
            np.sqrt(12.0), rel=1e-15
        )

    def test_identity_log(self):
        p = OperatorParams(3, 3, form=LOG)
        assert f_value(HermitianMatrix(np.eye(3)), p) == pytest.approx(np.log(8.0), rel=1e-15)

    def test_homogeneity(self, rng):
        p = OperatorParams(3, 2)
        A = random_admissible(rng, 3, 2)
        for t in (0.5, 2.0, 7.5):
            assert f_value(t * A, p) == pytest.approx(t * f_value(A, p), rel=1e-12)

    def test_inadmissible_raises_with_mu(self):
        p = OperatorParams(3, 2)
        with pytest.raises(InadmissiblePointError) as err:
            f_value(HermitianMatrix(-np.eye(3)), p)
        assert err.value.mu is not None


class TestGradient:
    def test_identity_root(self):
        G = f_gradient(HermitianMatrix(np.eye(3)), OperatorParams(3, 2))
        assert np.allclose(np.diag(G.mat).real, 4.0 / np.sqrt(12.0))
        assert np.abs(G.mat - np.diag(np.diag(G.mat))).max() <= 1e-14

    def test_identity_log(self):
        G = f_gradient(HermitianMatrix(np.eye(3)), OperatorParams(3, 3, form=LOG))
        assert np.allclose(np.diag(G.mat).real, 1.0)

    def test_positive_definite(self, rng):
        for n, k in ((2, 1), (3, 2), (4, 3)):
            A = random_admissible(rng, n, k)
            G = f_gradient(A, OperatorParams(n, k))
            assert np.linalg.eigvalsh(G.mat).min() > 0

    def test_matches_finite_differences(self, rng):
        for n in (2, 3, 4):
            for k in range(1, n + 1):
                for form in ((ROOT,) if k < n else (ROOT, LOG)):
                    p = OperatorParams(n, k, form=form)
                    A = random_admissible(rng, n, k, form)
                    assert gradient_fd_error(A, p) <= 1e-5

    def test_repeated_eigenvalues_no_error(self):
        # doubly degenerate spectrum; the first-order formula needs no split
        A = HermitianMatrix(np.diag([2.0, 2.0, 5.0]))
        G = f_gradient(A, OperatorParams(3, 2))
        assert np.isfinite(G.mat).all()


class TestTraceIdentity:
    def test_identity_matrix(self):
        assert trace_identity_residual(HermitianMatrix(np.eye(3)), OperatorParams(3, 2)) <= 1e-14
        p = OperatorParams(3, 3, form=LOG)
        assert trace_identity_residual(HermitianMatrix(np.eye(3)), p) <= 1e-14

    def test_k1_linear(self):
        A = HermitianMatrix(np.diag([1.0, 2.0, 3.0]))
        assert trace_identity_residual(A, OperatorParams(3, 1)) <= 1e-12

    def test_random_sample(self, rng):
        for n in (2, 3, 4):
            for k in range(1, n + 1):
                form = LOG if k == n else ROOT
                p = OperatorParams(n, k, form=form)
                for _ in range(20):
                    A = random_admissible(rng, n, k, form)
                    scale = 1.0 + abs(f_value(A, p)) if form == ROOT else float(n)
                    assert trace_identity_residual(A, p) <= 1e-8 * scale


class TestEllipticity:
    def test_identity(self):
        rep = ellipticity_ratio(HermitianMatrix(np.eye(3)), OperatorParams(3, 2))
        assert rep.ratio == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_k1_constant_gradient(self):
        rep = ellipticity_ratio(HermitianMatrix(np.diag([1.0, 2.0, 3.0])), OperatorParams(3, 1))
        assert rep.ratio == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_rejects_k_equals_n(self):
        with pytest.raises(InvalidArgumentError):
            ellipticity_ratio(HermitianMatrix(np.eye(3)), OperatorParams(3, 3))

    def test_floor_on_samples(self, rng):
        for _ in range(200):
            A = random_admissible(rng, 3, 2)
            rep = ellipticity_ratio(A, OperatorParams(3, 2))
            assert rep.ratio > 0.01
            assert abs(rep.f_sum - rep.f_sum_closed_form) <= 1e-10 * rep.f_sum_closed_form


class TestConcavity:
    def test_linear_along_identity(self):
        # root form is 1-homogeneous, so t -> f(I + t I) is linear
        d2 = concavity_probe(
            HermitianMatrix(np.eye(3)), HermitianMatrix(np.eye(3)), OperatorParams(3, 2), 0.1
        )
        assert abs(d2) <= 1e-9

    def test_k1_exactly_linear(self, rng):
        A = random_admissible(rng, 3, 1)
        H = random_hermitian(rng, 3)
        d2 = concavity_probe(A, H, OperatorParams(3, 1), 0.01)
        assert abs(d2) <= 1e-6

    def test_random_pairs(self, rng):
        p = OperatorParams(3, 2)
        for _ in range(100):
            A = random_admissible(rng, 3, 2)
            H = random_hermitian(rng, 3)
            H = H * (1.0 / np.linalg.norm(H.mat))
            t_max = 0.005 * np.linalg.norm(A.mat)
            for _ in range(20):
                try:
                    d2 = concavity_probe(A, H, p, t_max)
                    break
                except InadmissiblePointError:
                    t_max /= 2
            else:
                continue
            assert d2 <= 1e-6 * max(1.0, abs(d2))

    def test_segment_exit_raises(self):
        A = HermitianMatrix(np.eye(3))
        H = HermitianMatrix(-np.eye(3))
        with pytest.raises(InadmissiblePointError):
            concavity_probe(A, H, OperatorParams(3, 2), 2.0)


class TestSchurMonotonicity:
    def test_f_decreases_along_lambda(self, rng):
        # lambda_i >= lambda_j forces f_i <= f_j for concave symmetric f
        from formhess.hessian_operator import _f_eigen_derivatives
        from formhess.symfun import sample_gamma_k

        for n in (2, 3, 4):
            for k in range(1, n + 1):
                form = LOG if k == n else ROOT
                p = OperatorParams(n, k, form=form)
                for mu in sample_gamma_k(rng, n, k, 100):
                    if form == LOG and np.any(mu <= 0):
                        continue
                    lam = mu.sum() / (n - 1) - mu
                    fi = _f_eigen_derivatives(mu, p)
                    order = np.argsort(lam)
                    f_sorted = fi[order]
                    scale = np.abs(fi).max()
                    assert np.all(np.diff(f_sorted) <= 1e-12 * scale)
