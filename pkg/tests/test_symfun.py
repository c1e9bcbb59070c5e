import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_esym
from formhess.errors import ConeViolationError, InvalidArgumentError
from formhess.symfun import (
    all_partials,
    elementary_symmetric,
    identity_suite,
    in_gamma_k,
    partial_symmetric,
    sample_gamma_k,
)

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)


def spectra(min_n=2, max_n=8):
    return st.lists(finite_floats, min_size=min_n, max_size=max_n).map(np.array)


class TestElementarySymmetric:
    def test_pairs(self):
        assert elementary_symmetric(np.array([3.0, 2.0, 1.0]), 2) == 11.0

    def test_product_of_ones(self):
        assert elementary_symmetric(np.ones(3), 3) == 1.0

    def test_k_zero_is_one(self):
        assert elementary_symmetric(np.array([7.0, -3.0, 0.1]), 0) == 1.0

    def test_above_n_is_zero(self):
        assert elementary_symmetric(np.array([1.0, 2.0]), 3) == 0.0

    def test_rejects_negative_k(self):
        with pytest.raises(InvalidArgumentError):
            elementary_symmetric(np.array([1.0, 2.0]), -1)

    def test_rejects_non_integer(self):
        with pytest.raises(InvalidArgumentError):
            elementary_symmetric(np.array([1.0, 2.0]), 1.5)

    @given(mu=spectra(), k=st.integers(min_value=0, max_value=8))
    @settings(max_examples=300, deadline=None)
    def test_matches_brute_force(self, mu, k):
        got = elementary_symmetric(mu, k)
        want = brute_force_esym(mu, k)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-8)


class TestPartialSymmetric:
    def test_equal_entries(self):
        assert partial_symmetric(np.array([2.0, 2.0, 2.0]), 2, 0) == 4.0

    def test_s0_case(self):
        assert partial_symmetric(np.array([1.0, 0.0, 0.0]), 1, 0) == 1.0

    def test_deletion(self):
        # S_2 of (3, 1)
        assert partial_symmetric(np.array([3.0, 2.0, 1.0]), 3, 1) == 3.0

    def test_index_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            partial_symmetric(np.array([1.0, 2.0]), 1, 2)

    @given(mu=spectra(max_n=6), data=st.data())
    @settings(max_examples=200, deadline=None)
    def test_matches_finite_difference(self, mu, data):
        n = mu.size
        k = data.draw(st.integers(min_value=1, max_value=n))
        j = data.draw(st.integers(min_value=0, max_value=n - 1))
        h = 1e-5 * (1.0 + np.abs(mu).max())
        up, dn = mu.copy(), mu.copy()
        up[j] += h
        dn[j] -= h
        fd = (elementary_symmetric(up, k) - elementary_symmetric(dn, k)) / (2 * h)
        ref = partial_symmetric(mu, k, j)
        scale = 1.0 + abs(ref) + np.abs(mu).max() ** max(k - 1, 0)
        assert abs(fd - ref) <= 1e-6 * scale


class TestGammaCone:
    def test_positive_orthant(self):
        assert in_gamma_k(np.ones(3), 3)

    def test_mixed_signs_inside(self):
        assert in_gamma_k(np.array([3.0, 3.0, -1.0]), 2)

    def test_boundary_excluded(self):
        assert not in_gamma_k(np.array([1.0, -1.0, 0.0]), 1)

    def test_nesting(self, rng):
        for n in range(2, 7):
            for k in range(1, n + 1):
                for mu in sample_gamma_k(rng, n, k, 50):
                    for j in range(1, k + 1):
                        assert in_gamma_k(mu, j)


class TestIdentitySuite:
    def test_equal_entries(self):
        rep = identity_suite(np.array([2.0, 2.0, 2.0]), 2)
        assert rep.decomposition_residual == 0.0
        assert rep.partial_sum_residual == 0.0  # sum = 12 = (n-k+1) S_1

    def test_k1(self):
        rep = identity_suite(np.ones(3), 1)
        assert rep.partial_sum_residual == 0.0  # 3 = (n - 0) S_0
        assert rep.maclaurin_ratio is None

    def test_share(self):
        rep = identity_suite(np.array([3.0, 2.0, 1.0]), 2)
        assert rep.kth_partial_share == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_cone_violation_raises(self):
        with pytest.raises(ConeViolationError):
            identity_suite(np.array([-1.0, -1.0, -1.0]), 1)

    def test_residuals_over_cone_samples(self, rng):
        for n in range(2, 7):
            for k in range(1, n + 1):
                for mu in sample_gamma_k(rng, n, k, 100):
                    rep = identity_suite(mu, k)
                    sk = elementary_symmetric(mu, k)
                    sk1 = elementary_symmetric(mu, k - 1)
                    assert rep.decomposition_residual <= 1e-10 * (1 + abs(sk))
                    assert rep.partial_sum_residual <= 1e-10 * (1 + abs(sk1))
                    assert rep.kth_partial_share > 0
                    if k >= 2:
                        assert rep.maclaurin_ratio > 0

    def test_partials_ascend_for_descending_mu(self, rng):
        for n in range(2, 7):
            for k in range(1, n + 1):
                for mu in sample_gamma_k(rng, n, k, 50):
                    mu = np.sort(mu)[::-1]
                    partials = all_partials(mu, k)
                    scale = np.abs(partials).max() + 1.0
                    assert np.all(np.diff(partials) >= -1e-12 * scale)
