"""Dirichlet shooting on balls, the monotone blow-up pipeline, rate fits.

The radial equation in flux form,
    coeff * d/dr[r^(n-k) (u')^k] = r^(n-1) psi(u, u'),
is integrated from a trial centre value c; bisection on c matches the
boundary value.  Raising the boundary value yields a monotone sequence
whose limit is the blow-up solution when the right-hand side grows fast
enough, and whose divergence witnesses non-existence otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _kernels as _k
from .barriers import (
    PhiSolution,
    SubBarrier,
    eta_dominating,
    eta_domination_slack,
    hbar,
    solve_phi_ivp,
    threshold_radius,
)
from .families import EtaSpec, PsiSpec
from .radialop import RadialProfile, sk_radial
from .symcone import Dim, radial_coeff


class NonconvergenceError(RuntimeError):
    """Shooting bracket or bisection failed."""


@dataclass
class SolveReport:
    """Outcome of one Dirichlet shooting solve."""

    converged: bool
    c: float
    iterations: int
    profile: RadialProfile | None
    residual: float
    residual_scale: float
    boundary_gap: float
    blowup_radius: float | None
    m: float
    R: float
    stitch_gap: float = 0.0

    def to_json_dict(self, profile_csv_path: str | None = None, checks: dict | None = None) -> dict:
        out = {
            "converged": bool(self.converged),
            "c": float(self.c),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "boundary_gap": float(self.boundary_gap),
            "blowup_radius": None if self.blowup_radius is None else float(self.blowup_radius),
            "profile_csv_path": profile_csv_path,
        }
        if checks is not None:
            out["checks"] = checks
        return out


def _march(psi: PsiSpec, dim: Dim, R: float, c: float, rtol: float, grad_cap: float, hmax_frac: float = 0.02):
    coeff = radial_coeff(dim.n, dim.k)
    return _k.shoot_march(
        dim.n, dim.k, coeff, psi.code, psi.params, c, R, rtol, grad_cap, 400000, hmax_frac * R
    )


def _grid_profile(
    rs: np.ndarray, us: np.ndarray, zs: np.ndarray, psi: PsiSpec, dim: Dim, R: float, c: float, n_nodes: int
) -> RadialProfile:
    """Resample a march table onto a fixed uniform grid (shared across m).

    The gradient comes through the flux variable, whose node derivatives the
    equation supplies exactly, so the resampled profile stays accurate even
    inside steep boundary layers; second derivatives are attached from the
    same relation.
    """
    n, k = dim.n, dim.k
    coeff = radial_coeff(n, k)
    cnk = float(math.comb(n, k))
    with np.errstate(invalid="ignore"):
        dus = (np.maximum(zs, 0.0) * rs ** (k - n)) ** (1.0 / k)
    r_all = np.concatenate(([0.0], rs))
    u_all = np.concatenate(([c], us))
    du_all = np.concatenate(([0.0], dus))
    z_all = np.concatenate(([0.0], zs))
    dz_all = r_all ** (n - 1) * psi.eval(u_all, du_all) / coeff
    u_spl = CubicHermiteSpline(r_all, u_all, du_all)
    z_spl = CubicHermiteSpline(r_all, z_all, dz_all)

    grid = np.linspace(0.0, R, n_nodes, endpoint=False)
    u_g = u_spl(grid)
    z_g = np.maximum(z_spl(grid), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        du_g = (z_g * grid ** (k - n)) ** (1.0 / k)
    du_g[grid == 0.0] = 0.0
    rhs_g = grid ** (n - 1) * psi.eval(u_g, du_g) / coeff
    # second derivative from the flux relation; centre-limit fallback where
    # the gradient vanishes (also covers flat stretches with rhs = 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        upp_g = (rhs_g - (n - k) * grid ** (n - k - 1.0) * du_g ** k) / (
            k * grid ** (n - k) * du_g ** (k - 1.0)
        )
    fallback = (psi.eval(u_g, np.zeros_like(u_g)) / cnk) ** (1.0 / k)
    upp_g = np.where(du_g > 0.0, upp_g, fallback)
    return RadialProfile(
        r=grid, u=u_g, du=du_g, R=R, meta="solve", upp=upp_g,
        sk=sk_radial(du_g, upp_g, grid, dim),
    )


def _march_flux_mismatch(
    rs: np.ndarray, us: np.ndarray, zs: np.ndarray, psi: PsiSpec, dim: Dim
) -> tuple[float, float]:
    """A-posteriori consistency of a march table against the flux integral.

    Integrates the source r^(n-1) psi(u, u') through an independent spline
    quadrature and compares with the carried flux; returns (max mismatch,
    scale).  This is the solver-level residual: it does not reuse the
    stepper's own discretisation.
    """
    from scipy.interpolate import CubicSpline

    n, k = dim.n, dim.k
    coeff = radial_coeff(n, k)
    with np.errstate(invalid="ignore"):
        dus = (np.maximum(zs, 0.0) * rs ** (k - n)) ** (1.0 / k)
    g = rs ** (n - 1) * psi.eval(us, dus)
    G = CubicSpline(rs, g).antiderivative()
    mism = coeff * (zs - zs[0]) - (G(rs) - G(rs[0]))
    scale = 1.0 + float(coeff * np.abs(zs).max())
    return float(np.max(np.abs(mism))), scale


def _stitched_solve(psi: PsiSpec, dim: Dim, R: float, m: float, c: float, rtol: float, grad_cap: float):
    """Outer-layer patch for steep regimes: march inward and stitch at 0.9 R.

    The forward bisection pins the centre value to a float; its trajectory
    is accurate away from the boundary layer because the growing-mode
    amplification concentrates there.  The outer 10% is replaced by an
    inward march from (R, m) whose boundary flux is bisected to match the
    interior flux at the junction; inherited layer noise has decayed by the
    amplification factor once the march reaches the junction.  Returns the
    stitched table and the junction value mismatch (an a-posteriori
    accuracy certificate for the stitch).
    """
    n, k = dim.n, dim.k
    coeff = radial_coeff(n, k)
    r_join = 0.9 * R
    iters = 1
    status, rf, uf, zf, nf, _ = _k.shoot_march(
        n, k, coeff, psi.code, psi.params, c, r_join, rtol, grad_cap, 400000, 0.02 * R
    )
    if status != _k.MARCH_OK:
        raise NonconvergenceError("interior march failed during stitching")
    z_target = float(zf[-1])
    u_join = float(uf[-1])

    def probe(zR: float):
        nonlocal iters
        iters += 1
        st, rs, us, zs, npts = _k.shoot_march_back(
            n, k, coeff, psi.code, psi.params, m, R, zR, r_join, rtol, 400000, 0.02 * R
        )
        if st == _k.MARCH_Z_CROSS:
            return -math.inf, None
        if st != _k.MARCH_OK:
            raise NonconvergenceError("inward integration failed")
        return float(zs[-1]) - z_target, (rs, us, zs)

    z_hi = max(2.0 * z_target, 1e-8)
    gap_hi, tab_hi = probe(z_hi)
    guard = 0
    while gap_hi < 0:
        z_hi *= 4.0
        gap_hi, tab_hi = probe(z_hi)
        guard += 1
        if guard > 80:
            raise NonconvergenceError("failed to bracket the boundary flux")
    z_lo = z_target
    table = tab_hi
    for _ in range(90):
        z_mid = 0.5 * (z_lo + z_hi)
        gap_mid, tab = probe(z_mid)
        if gap_mid >= 0:
            z_hi = z_mid
            table = tab
        else:
            z_lo = z_mid
        if z_hi - z_lo <= np.spacing(z_hi):
            break

    rb, ub, zb = table
    stitch_gap = abs(float(ub[-1]) - u_join)
    # ascending merge: interior forward piece, then the inward piece reversed
    keep = rf < rb[-1]
    rs = np.concatenate([rf[keep], rb[::-1]])
    us = np.concatenate([uf[keep], ub[::-1]])
    zs = np.concatenate([zf[keep], zb[::-1]])
    return (rs, us, zs), stitch_gap, iters


def solve_dirichlet_ball(
    psi: PsiSpec,
    dim: Dim,
    R: float,
    m: float,
    tol: float = 1e-6,
    n_nodes: int = 1201,
    grad_cap: float = 1e8,
    rtol: float = 1e-10,
) -> SolveReport:
    """Shoot for the k-convex radial solution with boundary value m.

    The boundary map c -> u(R; c) is strictly increasing for z-monotone
    right-hand sides, so plain bisection brackets the centre value; the
    returned profile sits on a fixed uniform grid.  A gradient blow-up
    before R is reported (converged=False, blowup_radius set), not raised.
    """
    dim.require_radial()
    if R <= 0:
        raise ValueError("ball radius must be positive")
    if not psi.z_monotone:
        raise ValueError("shooting requires a z-monotone right-hand side")

    iters = 0

    def boundary(c: float):
        nonlocal iters
        iters += 1
        status, rs, us, zs, npts, r_star = _march(psi, dim, R, c, rtol, grad_cap)
        if status == _k.MARCH_GRAD_CAP:
            return math.inf, r_star, None
        if status != _k.MARCH_OK:
            raise NonconvergenceError("integration failed during shooting")
        return us[-1] - m, None, (rs, us, zs)

    gap_hi, rstar_hi, _ = boundary(m)
    if math.isinf(gap_hi):
        # larger centre values only increase the flux; if even the boundary
        # value blows up, probe a low centre value before giving up
        gap_lo, rstar_lo, _ = boundary(m - 64.0 * max(1.0, abs(m)))
        if math.isinf(gap_lo):
            return SolveReport(
                converged=False, c=math.nan, iterations=iters, profile=None,
                residual=math.nan, residual_scale=math.nan, boundary_gap=math.nan,
                blowup_radius=rstar_lo, m=m, R=R,
            )

    hi = m
    step = max(1.0, 0.5 * abs(m))
    lo = m - step
    gap_lo, _, _ = boundary(lo)
    expansions = 0
    while gap_lo > 0:
        step *= 2.0
        lo = m - step
        gap_lo, _, _ = boundary(lo)
        expansions += 1
        if expansions > 80:
            raise NonconvergenceError("failed to bracket the centre value")

    btol = 0.1 * tol
    c = lo
    gap = gap_lo
    table = None
    while hi - lo > 4.0 * np.spacing(max(abs(lo), abs(hi), 1.0)):
        mid = 0.5 * (lo + hi)
        gap, _, tab = boundary(mid)
        if abs(gap) <= btol:
            c, table = mid, tab
            break
        if gap > 0:
            hi = mid
        else:
            lo = mid
            c, table = mid, tab
        if iters > 400:
            raise NonconvergenceError("bisection failed to converge")
    if table is None:
        gap, _, table = boundary(c)

    stitch_gap = 0.0
    if abs(gap) > btol:
        # steep regime: the boundary map moves more than btol per float of c,
        # so keep the float-resolved centre value and replace the outer layer
        # by an inward march (boundary value exact by construction)
        c = 0.5 * (lo + hi)
        table, stitch_gap, iters_back = _stitched_solve(psi, dim, R, m, c, rtol, grad_cap)
        iters += iters_back
        boundary_gap = 0.0
    else:
        boundary_gap = abs(gap)

    rs, us, zs = table
    profile = _grid_profile(rs, us, zs, psi, dim, R, c, n_nodes)
    residual, scale = _march_flux_mismatch(rs, us, zs, psi, dim)
    return SolveReport(
        converged=bool(boundary_gap <= tol and residual <= tol * scale),
        c=float(c),
        iterations=iters,
        profile=profile,
        residual=residual,
        residual_scale=scale,
        boundary_gap=float(boundary_gap),
        blowup_radius=None,
        m=m,
        R=R,
        stitch_gap=float(stitch_gap),
    )


def monotone_sequence(
    psi: PsiSpec, dim: Dim, R: float, m_max: int, tol: float = 1e-6, m_start: int = 1, **kw
) -> list[SolveReport]:
    """Solve the boundary-value ladder m = m_start..m_max; stops at a failure."""
    reports: list[SolveReport] = []
    for m in range(m_start, m_max + 1):
        rep = solve_dirichlet_ball(psi, dim, R, float(m), tol=tol, **kw)
        reports.append(rep)
        if not rep.converged:
            break
    return reports


def enclosing_radius_for_boundary(sol: PhiSolution, R: float, m: float, k: int) -> float:
    """Largest-from-above a with sub-barrier value at R at most m.

    The barrier value at fixed radius is strictly decreasing in a; bisection
    keeps the upper side so the boundary ordering needed by the comparison
    step holds by construction.  (Near its blow-up sphere the barrier sweeps
    an entire value range within one float of a, so equality is matched as
    tightly as the arithmetic allows.)
    """

    def val(a: float) -> float:
        return sol.phi_at(sol.T * R / a) - 2.0 * k * max(0.0, math.log(a / sol.T))

    lo = R * (1.0 + 1e-13)
    hi = max(R, sol.T) * 2.0
    guard = 0
    while val(hi) > m:
        hi *= 2.0
        guard += 1
        if guard > 200:  # pragma: no cover - defensive
            raise NonconvergenceError("enclosing-radius bracket failed")
    if val(lo) <= m:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if val(mid) <= m:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    return hi


@dataclass
class BlowupResult:
    """Monotone-sequence limit with its envelope certificates."""

    verdict: str  # "exists" | "diverges"
    limit: RadialProfile | None
    reports: list[SolveReport]
    increments: list[float]
    eta: EtaSpec | None = None
    barrier: SubBarrier | None = None
    enclosing_radii: list[float] = field(default_factory=list)
    lower_slack: float = math.nan
    upper_slack: float = math.nan
    domination_slack: float = math.nan


def blowup_limit(
    psi: PsiSpec,
    dim: Dim,
    R: float,
    tol: float = 1e-6,
    m_cap: int = 40,
    compact: float = 0.9,
    **kw,
) -> BlowupResult:
    """Raise the boundary value until the interior stabilises or visibly diverges.

    Existence verdicts come with the two-sided envelope verified at the
    nodes: the decreasing centre-value envelope from above (needs the
    certified power lower bound with q > k), and a blow-up sub-barrier from
    below, built from the range-restricted dominating eta.
    """
    dim.require_radial()
    reports: list[SolveReport] = []
    increments: list[float] = []
    verdict = "diverges"
    m = 1
    prev = None
    while m <= m_cap:
        rep = solve_dirichlet_ball(psi, dim, R, float(m), tol=tol, **kw)
        if not rep.converged:
            reports.append(rep)
            break
        reports.append(rep)
        if prev is not None:
            mask = rep.profile.r <= compact * R
            inc = float(np.max(np.abs(rep.profile.u[mask] - prev.profile.u[mask])))
            increments.append(inc)
            if len(increments) >= 3 and inc <= tol and increments[-2] >= inc and increments[-3] >= increments[-2]:
                verdict = "exists"
                break
            if len(increments) >= 10 and inc >= 0.5 * increments[0]:
                verdict = "diverges"
                break
        prev = rep
        m += 1

    result = BlowupResult(verdict=verdict, limit=reports[-1].profile, reports=reports, increments=increments)
    if verdict != "exists":
        return result

    # upper envelope needs the certified power lower bound with q > k
    if psi.lower_power is not None and psi.lower_power[1] > dim.k:
        M, q = psi.lower_power
        ratios = []
        for rep in reports:
            d = R - rep.profile.r
            ratios.append(float(np.max(rep.profile.u / hbar(d, M, q, dim))))
        result.upper_slack = 1.0 - max(ratios)

    # lower envelope: sub-barrier for the dominating eta on the value range
    z_floor = min(0.0, float(reports[0].profile.u.min())) - 1.0
    eta = eta_dominating(psi, z_floor)
    zs = np.linspace(z_floor, max(r.m for r in reports) + 1.0, 200)
    ps = np.linspace(0.0, max(float(np.max(r.profile.du)) for r in reports) * 1.5 + 1.0, 80)
    result.domination_slack = eta_domination_slack(psi, eta, zs, ps)
    sol = solve_phi_ivp(dim, eta)
    result.eta = eta
    lower = math.inf
    for rep in reports:
        a_m = enclosing_radius_for_boundary(sol, R, rep.m, dim.k)
        result.enclosing_radii.append(a_m)
        shift = 2.0 * dim.k * max(0.0, math.log(a_m / sol.T))
        vals = sol.phi_at(sol.T * rep.profile.r / a_m) - shift
        lower = min(lower, float(np.min(rep.profile.u - vals)))
    result.lower_slack = lower
    result.barrier = SubBarrier(a=result.enclosing_radii[-1], dim=dim, eta=eta, sol=sol,
                                shift=2.0 * dim.k * max(0.0, math.log(result.enclosing_radii[-1] / sol.T)))
    return result


def rate_fit(profile: RadialProfile, M: float, q: float, dim: Dim) -> tuple[float, float]:
    """Least-squares blow-up exponent over the last decade of boundary distance.

    Returns (slope of ln u against ln d, max of u over the centre-value
    envelope at distance d).
    """
    d = profile.R - profile.r
    u = profile.u
    window = (d <= 10.0 * d.min()) & (u > 0)
    if window.sum() < 8:
        raise ValueError("too few near-boundary nodes for a rate fit")
    slope = float(np.polyfit(np.log(d[window]), np.log(u[window]), 1)[0])
    ratio = float(np.max(u / hbar(d, M, q, dim)))
    return slope, ratio


def max_shooting_radius(
    psi: PsiSpec, dim: Dim, c: float, cap: float = 1e8, hard_mult: float = 10.0
) -> float:
    """Radius where the gradient of the shooting solution passes the cap.

    Independent of the centre value for z-free right-hand sides (the flux
    equation decouples).  Returns +inf when no blow-up occurs before
    hard_mult times the non-existence threshold radius (parameter error).
    """
    if psi.code != _k.PSI_GRADPOW:
        raise ValueError("gradient blow-up radius applies to the gradient-power family")
    M, alpha = float(psi.params[0]), float(psi.params[1])
    hard = hard_mult * threshold_radius(dim, alpha, M)
    status, rs, us, zs, npts, r_star = _march(psi, dim, hard, c, 1e-12, cap, hmax_frac=1.0)
    if status == _k.MARCH_GRAD_CAP:
        return float(r_star)
    if status == _k.MARCH_OK:
        return math.inf
    raise NonconvergenceError("integration failed before the gradient cap")


def scaling_transform(
    profile: RadialProfile,
    lam: float,
    mode: str,
    dim: Dim,
    q: float | None = None,
    eps: float | None = None,
) -> RadialProfile:
    """Shrink-and-rescale a profile: u_lam(x) = lam^alpha u(lam x) - a.

    power mode: alpha = 2k/(q-k), a = 0 (needs q > k); exp mode: alpha = 0,
    a = -(2k/eps) ln(lam).  Nodes map to r/lam, so the output needs no
    interpolation and covers the larger ball of radius R/lam.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("transform requires 0 < lam < 1")
    k = dim.k
    if mode == "power":
        if q is None or q <= k:
            raise ValueError("power mode requires q > k")
        alpha = 2.0 * k / (q - k)
        offset = 0.0
    elif mode == "exp":
        if eps is None or eps <= 0:
            raise ValueError("exp mode requires eps > 0")
        alpha = 0.0
        offset = -(2.0 * k / eps) * math.log(lam)
    else:
        raise ValueError("mode must be 'power' or 'exp'")
    upp = None
    if profile.upp is not None:
        upp = lam ** (alpha + 2.0) * np.asarray(profile.upp, dtype=float)
    return RadialProfile(
        r=profile.r / lam,
        u=lam ** alpha * profile.u - offset,
        du=lam ** (alpha + 1.0) * profile.du,
        R=profile.R / lam,
        meta="transform",
        upp=upp,
    )
