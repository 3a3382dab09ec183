import math

import numpy as np
import pytest

from khessian.families import PsiSpec
from khessian.radialop import (
    RadialProfile,
    SingularityError,
    flux_residual,
    kconvex_check,
    radial_eigs,
    sk_radial,
)
from khessian.symcone import Dim, elem_sym, radial_coeff


def parabola(R=1.0, n_nodes=200):
    r = np.linspace(0.0, R, n_nodes, endpoint=False)
    return RadialProfile(r, 0.5 * r ** 2, r, R=R)


class TestRadialEigs:
    def test_parabola_spectrum(self):
        np.testing.assert_allclose(radial_eigs(0.7, 1.0, 0.7, 5), np.ones(5))

    def test_quartic(self):
        # u = r^4: u' = 4r^3, u'' = 12 r^2; at r=1, n=3: (12, 4, 4)
        np.testing.assert_allclose(radial_eigs(4.0, 12.0, 1.0, 3), [12.0, 4.0, 4.0])

    def test_centre_limit(self):
        np.testing.assert_allclose(radial_eigs(0.0, 3.0, 0.0, 4), 3.0 * np.ones(4))

    def test_centre_mismatch_raises(self):
        with pytest.raises(SingularityError):
            radial_eigs(1.0, 0.0, 0.0, 3)


class TestSkRadial:
    def test_parabola_binomial(self):
        for n in range(2, 9):
            for k in range(1, n):
                assert sk_radial(0.3, 1.0, 0.3, Dim(n, k)) == float(math.comb(n, k))

    def test_matches_eigen_route(self):
        rng = np.random.default_rng(23)
        for _ in range(2000):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(1, n))
            up = rng.uniform(0, 4)
            upp = rng.uniform(-3, 4)
            r = rng.uniform(0.01, 3)
            via = elem_sym(radial_eigs(up, upp, r, n), k)
            assert sk_radial(up, upp, r, Dim(n, k)) == pytest.approx(via, rel=1e-10, abs=1e-10)

    def test_centre_value(self):
        assert sk_radial(0.0, 2.0, 0.0, Dim(3, 2)) == 12.0

    def test_centre_mismatch_raises(self):
        with pytest.raises(SingularityError):
            sk_radial(1.0, 1.0, 0.0, Dim(3, 2))

    def test_vectorised(self):
        d = Dim(4, 2)
        r = np.array([0.0, 0.5, 1.0])
        out = sk_radial(r.copy(), np.ones(3), r, d)
        np.testing.assert_allclose(out, math.comb(4, 2) * np.ones(3))


class TestFluxResidual:
    def test_parabola_with_matching_constant(self):
        d = Dim(3, 2)
        psi = PsiSpec.constant(float(math.comb(3, 2)), 2)
        res = flux_residual(parabola(), psi, d)
        assert np.abs(res).max() < 1e-9

    def test_closed_form_constant_solution(self):
        # u = m - (1/2)(M/(n coeff))^(1/k) (R^2 - r^2) solves the constant problem
        n, k, M, R, m = 4, 2, 3.0, 1.2, 0.7
        d = Dim(n, k)
        slope = (M / (n * radial_coeff(n, k))) ** (1.0 / k)
        r = np.linspace(0.0, R, 2000, endpoint=False)
        prof = RadialProfile(r, m - 0.5 * slope * (R ** 2 - r ** 2), slope * r, R=R)
        res = flux_residual(prof, PsiSpec.constant(M, k), d)
        scale = np.max(r ** (n - 1) * M)
        assert np.abs(res).max() <= 1e-6 * scale

    def test_zero_profile_strictly_negative(self):
        d = Dim(3, 1)
        r = np.linspace(0.0, 1.0, 100, endpoint=False)
        prof = RadialProfile(r, np.zeros_like(r), np.zeros_like(r), R=1.0)
        res = flux_residual(prof, PsiSpec.constant(2.0, 1), d)
        assert np.all(res[1:] < 0)
        assert res[0] == 0.0


class TestKConvex:
    def test_parabola_all_orders(self):
        for k in (1, 2):
            assert kconvex_check(parabola(), Dim(3, k))

    def test_negative_parabola_fails(self):
        r = np.linspace(0.0, 1.0, 100, endpoint=False)
        prof = RadialProfile(r, -0.5 * r ** 2, -r, R=1.0)
        for k in (1, 2):
            assert not kconvex_check(prof, Dim(3, k))

    def test_strict_variant(self):
        r = np.linspace(0.0, 1.0, 100, endpoint=False)
        flat = RadialProfile(r, np.zeros_like(r), np.zeros_like(r), R=1.0)
        assert kconvex_check(flat, Dim(3, 2))
        assert not kconvex_check(flat, Dim(3, 2), strict=True)


class TestProfile:
    def test_validation(self):
        with pytest.raises(ValueError):
            RadialProfile(np.array([0.1, 0.2]), np.zeros(2), np.zeros(2), R=1.0)
        with pytest.raises(ValueError):
            RadialProfile(np.array([0.0, 0.2, 0.2]), np.zeros(3), np.zeros(3), R=1.0)
        with pytest.raises(SingularityError):
            RadialProfile(np.array([0.0, 0.5]), np.zeros(2), np.array([1.0, 1.0]), R=1.0)
        with pytest.raises(ValueError):
            RadialProfile(np.array([0.0, 2.0]), np.zeros(2), np.array([0.0, 1.0]), R=1.0)

    def test_interpolant_derivative_order(self):
        # between-node slope error of the Hermite interpolant drops at
        # least quadratically under grid refinement (smooth analytic data)
        for fn, dfn in ((np.exp, np.exp), (np.cosh, np.sinh)):
            errs = []
            for n_nodes in (50, 100):
                r = np.linspace(0.0, 1.0, n_nodes, endpoint=False)
                du = dfn(r)
                du[0] = 0.0  # centre smoothness; perturbs only the first cell
                prof = RadialProfile(r, fn(r), du, R=1.0)
                mids = 0.5 * (r[5:-1] + r[6:])
                errs.append(np.max(np.abs(prof.slope(mids) - dfn(mids))))
            assert errs[1] <= errs[0] / 4.0

    def test_d2_nodes_quadratic_exact(self):
        prof = parabola()
        np.testing.assert_allclose(prof.d2_nodes(), np.ones_like(prof.r), rtol=1e-9, atol=1e-9)

    def test_csv_roundtrip(self, tmp_path):
        prof = parabola(n_nodes=37)
        prof.sk = sk_radial(prof.du, np.ones_like(prof.r), prof.r, Dim(3, 2))
        path = tmp_path / "p.csv"
        prof.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "r,u,du,sk"
        back = RadialProfile.from_csv(path, R=prof.R)
        np.testing.assert_array_equal(back.r, prof.r)
        np.testing.assert_array_equal(back.u, prof.u)
        np.testing.assert_array_equal(back.du, prof.du)
        np.testing.assert_array_equal(back.sk, prof.sk)

    def test_resample(self):
        prof = parabola(n_nodes=400)
        grid = np.linspace(0.0, 0.9, 50)
        res = prof.resample(grid)
        np.testing.assert_allclose(res.u, 0.5 * grid ** 2, atol=1e-12)
        np.testing.assert_allclose(res.du, grid, atol=1e-12)
