import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from khessian.symcone import (
    Dim,
    chained_maclaurin_gap,
    chained_maclaurin_gap_batch,
    elem_sym,
    elem_sym_batch,
    elem_sym_matrix,
    hessian_monotone_gap,
    in_gamma_k,
    maclaurin_gap,
    maclaurin_gap_batch,
    radial_coeff,
    sample_gamma_k,
    sample_positive,
    split_power_const,
)


def brute_force(lam, k):
    return sum(math.prod(c) for c in itertools.combinations(lam, k))


class TestDim:
    def test_valid(self):
        d = Dim(4, 2)
        assert (d.n, d.k) == (4, 2)

    def test_rejects_bad(self):
        with pytest.raises(ValueError):
            Dim(1, 1)
        with pytest.raises(ValueError):
            Dim(3, 0)
        with pytest.raises(ValueError):
            Dim(3, 4)

    def test_radial_requires_k_below_n(self):
        with pytest.raises(ValueError):
            Dim(3, 3).require_radial()
        assert Dim(3, 2).require_radial().k == 2


class TestElemSym:
    def test_all_ones(self):
        for n in range(2, 9):
            for k in range(1, n + 1):
                assert elem_sym(np.ones(n), k) == math.comb(n, k)

    def test_k1_is_sum(self):
        lam = [0.3, -1.7, 2.2, 5.0]
        assert elem_sym(lam, 1) == pytest.approx(sum(lam), abs=1e-14)

    def test_example_123(self):
        assert elem_sym([1, 2, 3], 2) == 11.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            elem_sym([1.0, 2.0], 3)
        with pytest.raises(ValueError):
            elem_sym([1.0, 2.0], 0)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(-9, 9), min_size=2, max_size=8), st.data())
    def test_recurrence_equals_enumeration(self, lam, data):
        k = data.draw(st.integers(1, len(lam)))
        assert elem_sym(np.array(lam, dtype=float), k) == brute_force(lam, k)

    def test_float_agreement(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(1, n + 1))
            lam = rng.normal(size=n)
            a = elem_sym(lam, k)
            b = brute_force(lam.tolist(), k)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(8)
        lams = rng.normal(size=(50, 5))
        got = elem_sym_batch(lams, 3)
        want = np.array([elem_sym(row, 3) for row in lams])
        np.testing.assert_allclose(got, want, rtol=1e-14)


class TestElemSymMatrix:
    def test_identity(self):
        for n in range(2, 9):
            for k in range(1, n + 1):
                assert elem_sym_matrix(np.eye(n), k) == pytest.approx(math.comb(n, k), rel=1e-13)

    def test_diagonal(self):
        d = np.array([0.5, -1.0, 2.0, 3.5])
        A = np.diag(d)
        for k in range(1, 5):
            assert elem_sym_matrix(A, k) == pytest.approx(elem_sym(d, k), rel=1e-12, abs=1e-12)

    def test_charpoly_oracle(self):
        # det(tI - A) = sum_j (-1)^j e_j t^(n-j): an eigen-free route
        rng = np.random.default_rng(11)
        for _ in range(25):
            B = rng.normal(size=(3, 3))
            A = 0.5 * (B + B.T)
            ts = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
            dets = [np.linalg.det(t * np.eye(3) - A) for t in ts]
            coeffs = np.polyfit(ts, dets, 3)  # highest power first
            want = coeffs[1] * (-1) ** 2  # t^(n-k) with k=2, sign (-1)^k
            assert elem_sym_matrix(A, 2) == pytest.approx(want, rel=1e-9, abs=1e-9)

    def test_rejects_nonsquare_and_asymmetric(self):
        with pytest.raises(ValueError):
            elem_sym_matrix(np.ones((2, 3)), 1)
        with pytest.raises(ValueError):
            elem_sym_matrix(np.array([[0.0, 1.0], [0.5, 0.0]]), 1)


class TestGammaCone:
    def test_positive_cone(self):
        assert in_gamma_k([1.0, 1.0, 1.0], 3)

    def test_order_one_is_positive_sum(self):
        assert in_gamma_k([-1.0, 3.0], 1)
        assert not in_gamma_k([-3.0, 1.0], 1)

    def test_zero_vector_fails_strict(self):
        for k in range(1, 4):
            assert not in_gamma_k([0.0, 0.0, 0.0], k)
            assert in_gamma_k([0.0, 0.0, 0.0], k, strict=False)

    @settings(max_examples=300, deadline=None)
    @given(
        st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=6),
        st.data(),
    )
    def test_nesting(self, lam, data):
        k = data.draw(st.integers(1, len(lam) - 1))
        if in_gamma_k(np.array(lam), k + 1):
            assert in_gamma_k(np.array(lam), k)


class TestRadialCoeff:
    def test_values(self):
        assert radial_coeff(2, 1) == 1.0
        assert radial_coeff(3, 2) == 1.0
        assert radial_coeff(4, 2) == 1.5

    def test_times_n_is_binomial_exactly(self):
        for n in range(2, 13):
            for k in range(1, n):
                assert n * radial_coeff(n, k) == float(math.comb(n, k))

    def test_top_order_rejected_by_default(self):
        with pytest.raises(ValueError):
            radial_coeff(4, 4)
        assert radial_coeff(4, 4, allow_top=True) == pytest.approx(0.25)


class TestMaclaurin:
    def test_equal_entries_equality(self):
        assert maclaurin_gap(np.ones(3), 1) == pytest.approx(0.0, abs=1e-14)
        assert maclaurin_gap(2 * np.ones(4), 2) == pytest.approx(0.0, abs=1e-12)

    def test_explicit_gap(self):
        # n=3, k=1: (e1/3)^2 - e2/3 for (1,2,3): 4 - 11/3 = 1/3
        assert maclaurin_gap([1.0, 2.0, 3.0], 1) == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_outside_cone_rejected(self):
        with pytest.raises(ValueError):
            maclaurin_gap([-1.0, -1.0, 0.5], 1)

    def test_sampled_nonnegative(self):
        rng = np.random.default_rng(13)
        for n in (3, 5):
            for k in range(1, n):
                lams = sample_gamma_k(rng, n, k + 1, 2000)
                assert maclaurin_gap_batch(lams, k).min() >= -1e-12

    def test_chained_explicit(self):
        # (1,4), k=1: e1 - C(2,1) sqrt(e2) = 5 - 2*2 = 1
        assert chained_maclaurin_gap([1.0, 4.0], 1) == pytest.approx(1.0, rel=1e-12)

    def test_chained_equality_at_ones(self):
        for n in range(2, 7):
            for k in range(1, n):
                assert chained_maclaurin_gap(np.ones(n), k) == pytest.approx(0.0, abs=1e-12)

    def test_chained_requires_positive(self):
        with pytest.raises(ValueError):
            chained_maclaurin_gap([1.0, -0.5], 1)

    def test_chained_sampled(self):
        rng = np.random.default_rng(17)
        for n in (2, 4, 6):
            pos = sample_positive(rng, n, 3000)
            for k in range(1, n):
                assert chained_maclaurin_gap_batch(pos, k).min() >= -1e-12


class TestSplitPowerConst:
    def test_value(self):
        assert split_power_const(3, 1) == pytest.approx(2.0 ** (1.0 / 3.0 - 1.0))

    def test_ratio_minimisation_oracle(self):
        # the ratio (1+t)^(k/n) / (1+t^(k/n)) attains its minimum at t=1
        ts = np.logspace(-8, 8, 4001)
        for n in (2, 3, 5):
            for k in range(1, n):
                ratio = (1 + ts) ** (k / n) / (1 + ts ** (k / n))
                c2 = split_power_const(n, k)
                assert ratio.min() >= c2 - 1e-12
                assert abs(ratio.min() - c2) < 1e-6


class TestEllipticityProxy:
    def test_monotone_under_psd_bump(self):
        rng = np.random.default_rng(19)
        for _ in range(300):
            n = int(rng.integers(2, 6))
            k = int(rng.integers(1, n + 1))
            lam = sample_gamma_k(rng, n, k, 1)[0]
            Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            w2 = Q @ np.diag(lam) @ Q.T
            B = rng.normal(size=(n, n)) * 0.5
            w1 = w2 + B @ B.T
            assert hessian_monotone_gap(w1, w2, k) >= -1e-10
