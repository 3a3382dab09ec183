"""Acceptance suite: one check per criterion, shared by the CLI and pytest.

Each check is deterministic (fixed seeds), returns a CheckResult with its
worst slack/error in ``detail``, and carries the runtime budget it is
expected to meet on a warm build.  ``warmup()`` pre-triggers kernel
compilation so the budgets measure the numerics, not the JIT.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .barriers import (
    hbar,
    hbar_loglog_slope,
    make_grad_barrier,
    make_sub_barrier,
    make_super_barrier,
    solve_phi_ivp,
    threshold_radius,
)
from .families import EtaSpec, PsiSpec
from .radialop import RadialProfile, radial_eigs, sk_radial
from .shooter import (
    blowup_limit,
    enclosing_radius_for_boundary,
    max_shooting_radius,
    monotone_sequence,
    scaling_transform,
    solve_dirichlet_ball,
)
from .symcone import (
    Dim,
    elem_sym,
    elem_sym_batch,
    chained_maclaurin_gap_batch,
    maclaurin_gap_batch,
    radial_coeff,
    sample_gamma_k,
    sample_positive,
)
from .verify import check_subsolution, sandwich_check


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<22} {self.seconds:7.2f}s (budget {self.budget:g}s)  {self.detail}"


def warmup() -> None:
    """Compile the hot kernels on tiny inputs (excluded from check timings)."""
    _k.esym_batch(np.ones((2, 3)), 2)
    _k.phi_march(1, 1.0, _k.ETA_CONSTANT, np.array([1.0]), 1.0, 5.0, 1e-6, 10000)
    _k.shoot_march(2, 1, 1.0, _k.PSI_CONSTANT, np.array([1.0]), 0.0, 0.5, 1e-8, 1e8, 10000, 0.01)
    _k.shoot_march_back(2, 1, 1.0, _k.PSI_CONSTANT, np.array([1.0]), 1.0, 0.5, 0.125, 1e-5, 1e-8, 10000, 0.01)


def _timed(name: str, budget: float, fn) -> CheckResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # noqa: BLE001 - report, don't crash the suite
        return CheckResult(name, False, f"exception: {exc}", time.perf_counter() - t0, budget)
    return CheckResult(name, passed, detail, time.perf_counter() - t0, budget)


# -- criterion 1 -------------------------------------------------------------


def _brute_esym(lam, k: int) -> float:
    return float(sum(math.prod(c) for c in itertools.combinations(lam, k)))


def check_symfun_oracle() -> CheckResult:
    def run():
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(1, n + 1))
            lam = rng.integers(-9, 10, size=n).astype(float)
            a = elem_sym(lam, k)
            b = _brute_esym(lam.astype(int).tolist(), k)
            worst = max(worst, abs(a - b))
            if a != b:
                return False, f"mismatch {a} vs {b} at n={n},k={k}"
        return True, f"1000 vectors, recurrence == enumeration exactly (max diff {worst:g})"

    return _timed("symfun-oracle", 1.0, run)


# -- criterion 2 -------------------------------------------------------------


def check_radial_equivalence() -> CheckResult:
    def run():
        rng = np.random.default_rng(202)
        worst = 0.0
        for _ in range(10000):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(1, n))
            up = rng.uniform(0.0, 3.0)
            upp = rng.uniform(-2.0, 3.0)
            r = rng.uniform(0.05, 2.0)
            direct = sk_radial(up, upp, r, Dim(n, k))
            via_eigs = elem_sym(radial_eigs(up, upp, r, n), k)
            err = abs(direct - via_eigs) / (1.0 + abs(via_eigs))
            worst = max(worst, err)
            if err > 1e-10:
                return False, f"routes disagree by {err:.2e} at n={n},k={k}"
        for n in range(2, 9):
            for k in range(1, n):
                val = sk_radial(0.7, 1.0, 0.7, Dim(n, k))
                if val != float(math.comb(n, k)):
                    return False, f"unit parabola mismatch at n={n},k={k}: {val}"
        return True, f"10^4 samples agree (worst rel {worst:.2e}); parabola exact for n<=8"

    return _timed("radial-equivalence", 1.0, run)


# -- criterion 3 -------------------------------------------------------------


def check_maclaurin_suite() -> CheckResult:
    def run():
        rng = np.random.default_rng(303)
        worst = math.inf
        for n in range(2, 7):
            for k in range(1, n):
                lams = sample_gamma_k(rng, n, k + 1, 10000)
                worst = min(worst, float(maclaurin_gap_batch(lams, k).min()))
            for k in range(1, n):
                pos = sample_positive(rng, n, 10000)
                worst = min(worst, float(chained_maclaurin_gap_batch(pos, k).min()))
        return worst >= -1e-12, f"min gap over all sweeps {worst:.3e} (>= -1e-12)"

    return _timed("maclaurin-suite", 5.0, run)


# -- criterion 4 -------------------------------------------------------------


def check_constant_solve() -> CheckResult:
    def run():
        rng = np.random.default_rng(404)
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(2, 7))
            k = int(rng.integers(1, n))
            M = float(rng.uniform(0.5, 4.0))
            R = float(rng.uniform(0.5, 2.0))
            m = float(rng.uniform(-1.0, 3.0))
            dim = Dim(n, k)
            rep = solve_dirichlet_ball(PsiSpec.constant(M, k), dim, R, m)
            if not rep.converged:
                return False, f"solve failed at n={n},k={k}"
            slope = (M / (n * radial_coeff(n, k))) ** (1.0 / k)
            exact = m - 0.5 * slope * (R ** 2 - rep.profile.r ** 2)
            worst = max(worst, float(np.max(np.abs(rep.profile.u - exact))))
        return worst <= 1e-6, f"20 tuples, sup-norm error {worst:.2e} (<= 1e-6)"

    return _timed("constant-solve", 5.0, run)


# -- criterion 5 -------------------------------------------------------------


def check_sub_barrier() -> CheckResult:
    def run():
        worst = math.inf
        for (n, k) in ((2, 1), (3, 1), (3, 2), (4, 2)):
            for eta in (EtaSpec.constant(1.0), EtaSpec.exp(1.0, 1.0)):
                sb = make_sub_barrier(1.0, Dim(n, k), eta)
                cert = sb.certificate(n_nodes=1000, tol=1e-8)
                if not cert.passed:
                    return False, f"inequality fails at (n,k)={(n,k)}, eta={eta.label}"
                worst = min(worst, cert.min_slack)
                if sb.T > sb.sol.bound() + 1e-6:
                    return False, f"blow-up radius above its bound at (n,k)={(n,k)}"
        return True, f"8 builds certified at 1000 nodes (min slack {worst:.3e}); radii within bound"

    return _timed("sub-barrier", 10.0, run)


# -- criterion 6 -------------------------------------------------------------


def check_super_barrier() -> CheckResult:
    def run():
        worst = math.inf
        worst_slope = 0.0
        for (n, k) in ((2, 1), (3, 1), (3, 2), (4, 2)):
            for q in (k + 1.0, k + 2.0, 2.0 * k + 1.0):
                dim = Dim(n, k)
                w = make_super_barrier(1.0, 1.0, q, dim)
                cert = w.certificate(n_nodes=1000, tol=1e-8)
                if not cert.passed:
                    return False, f"inequality fails at (n,k,q)={(n,k,q)}"
                worst = min(worst, cert.min_slack)
                err = abs(hbar_loglog_slope(1.0, q, dim) + 2.0 * k / (q - k))
                worst_slope = max(worst_slope, err)
                if err > 1e-8:
                    return False, f"envelope slope off by {err:.2e} at (n,k,q)={(n,k,q)}"
        return True, f"12 sweeps certified (min slack {worst:.3e}); slope error <= {worst_slope:.2e}"

    return _timed("super-barrier", 5.0, run)


# -- criterion 7 -------------------------------------------------------------


def check_grad_barrier() -> CheckResult:
    def run():
        from .barriers import grad_phi

        for r in (0.1, 0.3, 0.5, 0.7, 0.9):
            err = abs(grad_phi(r, 1, 2.0) + 0.5 * math.log(1.0 - r * r))
            if err > 1e-8:
                return False, f"closed form mismatch {err:.2e} at r={r}"
        worst_id = 0.0
        for (n, k, alpha) in ((2, 1, 2.0), (3, 1, 2.0), (3, 2, 1.5), (4, 2, 3.0)):
            gb = make_grad_barrier(1.0, Dim(n, k), alpha, n_nodes=1000)
            worst_id = max(worst_id, float(np.max(np.abs(gb.identity_residual()))))
            if worst_id > 1e-10:
                return False, f"profile identity residual {worst_id:.2e} at (n,k)={(n,k)}"
            curv = gb.curvature(gb.s_nodes)
            if not np.all(curv > 0):
                return False, f"curvature not positive at (n,k)={(n,k)}"
            h = 1e-4
            fd = (grad_phi(2 * h, k, alpha) - 2 * grad_phi(h, k, alpha)) / h ** 2
            beta_k = (1.0 / (alpha - 1.0)) ** (1.0 / k)
            if abs(fd - beta_k) > 1e-6:
                return False, f"centre curvature {fd} != {beta_k} at (n,k)={(n,k)}"
            cert = gb.certificate(tol=1e-8)
            if not cert.passed:
                return False, f"final inequality fails at (n,k,alpha)={(n,k,alpha)}"
        return True, f"identity residual <= {worst_id:.2e}; curvature, centre limit, inequality all hold"

    return _timed("grad-barrier", 5.0, run)


# -- criterion 8 -------------------------------------------------------------


def check_existence_pipeline() -> CheckResult:
    def run():
        dim = Dim(3, 2)
        psi = PsiSpec.exist_product(1.0, 1.0, 1.0, 3.0, 2)
        reports = monotone_sequence(psi, dim, 1.0, 20)
        if len(reports) < 20 or not all(r.converged for r in reports):
            return False, f"ladder stopped after {len(reports)} rungs"
        mono = math.inf
        for lo, hi in zip(reports, reports[1:]):
            mono = min(mono, float(np.min(hi.profile.u - lo.profile.u)))
        if mono < -1e-8:
            return False, f"ordering violated by {mono:.2e}"
        centres = [r.c for r in reports]
        incs = np.diff(centres)
        if not np.all(np.diff(incs) <= 1e-12):
            return False, "centre increments not shrinking monotonically"

        from .barriers import eta_dominating

        z_floor = min(0.0, float(reports[0].profile.u.min())) - 1.0
        eta = eta_dominating(psi, z_floor)
        sol = solve_phi_ivp(dim, eta)
        worst = math.inf
        from .barriers import SubBarrier

        for rep in reports:
            a_m = enclosing_radius_for_boundary(sol, 1.0, rep.m, dim.k)
            shift = 2.0 * dim.k * max(0.0, math.log(a_m / sol.T))
            sb = SubBarrier(a=a_m, dim=dim, eta=eta, sol=sol, shift=shift)
            cert = sandwich_check(rep.profile, sb, 1.0, 3.0, dim, tol=1e-6)
            worst = min(worst, cert.min_slack)
            if not cert.passed:
                return False, f"sandwich fails at m={rep.m:g} (slack {cert.min_slack:.2e})"
        top = hbar(1.0, 1.0, 3.0, dim)
        if centres[-1] > top + 1e-6:
            return False, f"limit centre {centres[-1]} above envelope {top}"
        return True, (
            f"20 rungs ordered (min gap {mono:.2e}); sandwich slack >= {worst:.2e}; "
            f"centre limit {centres[-1]:.4f} <= envelope {top:.1f}"
        )

    return _timed("existence-pipeline", 60.0, run)


# -- criterion 9 -------------------------------------------------------------


def check_nonexistence_constant() -> CheckResult:
    def run():
        dim = Dim(3, 2)
        M, R = 2.0, 1.0
        psi = PsiSpec.constant(M, dim.k)
        reports = monotone_sequence(psi, dim, R, 8)
        if len(reports) < 8:
            return False, "ladder stopped early"
        drop = 0.5 * (M / (dim.n * radial_coeff(dim.n, dim.k))) ** (1.0 / dim.k) * R ** 2
        worst = max(abs(rep.c - (rep.m - drop)) for rep in reports)
        incs = np.diff([r.c for r in reports])
        affine = float(np.max(np.abs(incs - 1.0)))
        ok = worst <= 1e-6 and affine <= 1e-6
        return ok, f"centres affine in m (inc error {affine:.2e}); closed-form error {worst:.2e}"

    return _timed("nonexistence-constant", 5.0, run)


# -- criterion 10 ------------------------------------------------------------


def check_threshold_and_gradient() -> CheckResult:
    def run():
        if abs(threshold_radius(Dim(2, 1), 2.0, 1.0) - 2.0) > 1e-12:
            return False, "threshold value (2,1,2,1) != 2"
        if abs(threshold_radius(Dim(3, 2), 2.0, 1.0) - math.sqrt(3.0)) > 1e-12:
            return False, "threshold value (3,2,2,1) != sqrt(3)"
        worst = 0.0
        for alpha in (1.5, 2.0, 3.0):
            psi = PsiSpec.grad_power(1.0, alpha, 1)
            r1 = max_shooting_radius(psi, Dim(2, 1), c=0.0)
            r2 = max_shooting_radius(psi, Dim(2, 1), c=5.0)
            if not math.isfinite(r1):
                return False, f"no gradient blow-up found at alpha={alpha}"
            worst = max(worst, abs(r1 - r2))
            if worst > 1e-10:
                return False, f"centre-value dependence {worst:.2e} at alpha={alpha}"
        return True, f"threshold values exact; blow-up radius finite, centre-independent to {worst:.2e}"

    return _timed("threshold-gradient", 10.0, run)


# -- criterion 11 ------------------------------------------------------------


def _steep_quadratic(R: float, curvature: float, offset: float, n_nodes: int = 600) -> RadialProfile:
    r = np.linspace(0.0, R, n_nodes, endpoint=False)
    return RadialProfile(
        r=r,
        u=offset + 0.5 * curvature * r ** 2,
        du=curvature * r,
        R=R,
        meta="candidate",
        upp=np.full_like(r, curvature),
    )


def check_scaling_transform() -> CheckResult:
    def run():
        dim = Dim(2, 1)
        q = 2.0
        psi_pow = PsiSpec.power_half(1.0, q, dim.k)
        base = _steep_quadratic(1.0, 400.0, -201.0)
        if not check_subsolution(base, psi_pow, dim, tol=0.0).passed:
            return False, "power-mode source certificate failed"
        worst = math.inf
        for lam in (0.5, 0.9, 0.99):
            moved = scaling_transform(base, lam, "power", dim, q=q)
            cert = check_subsolution(moved, psi_pow, dim, tol=1e-8)
            worst = min(worst, cert.min_slack)
            if not cert.passed:
                return False, f"power-mode transform fails at lam={lam}"
        psi_exp = PsiSpec.exp_half(1.0, dim.k, eps=1.0)
        base_e = _steep_quadratic(1.0, 40.0, -40.0)
        if not check_subsolution(base_e, psi_exp, dim, tol=0.0).passed:
            return False, "exp-mode source certificate failed"
        for lam in (0.5, 0.9, 0.99):
            moved = scaling_transform(base_e, lam, "exp", dim, eps=1.0)
            cert = check_subsolution(moved, psi_exp, dim, tol=1e-8)
            worst = min(worst, cert.min_slack)
            if not cert.passed:
                return False, f"exp-mode transform fails at lam={lam}"
        return True, f"both modes keep the subsolution certificate (min slack {worst:.3e})"

    return _timed("scaling-transform", 10.0, run)


ALL_CHECKS = [
    check_symfun_oracle,
    check_radial_equivalence,
    check_maclaurin_suite,
    check_constant_solve,
    check_sub_barrier,
    check_super_barrier,
    check_grad_barrier,
    check_existence_pipeline,
    check_nonexistence_constant,
    check_threshold_and_gradient,
    check_scaling_transform,
]


def run_selftest(verbose: bool = True) -> list[CheckResult]:
    warmup()
    results = []
    for fn in ALL_CHECKS:
        res = fn()
        results.append(res)
        if verbose:
            print(res.line())
    return results
