"""Hot numeric kernels: symmetric-function recurrences and ODE marches.

Everything here is numba-compiled unless KHESS_NUMBA=0 (see ``_backend``).
The functions are written against plain floats/ndarrays so the uncompiled
path runs the same code.  Right-hand sides are dispatched on small integer
family codes instead of callables so the marches stay jittable.
"""

import math

import numpy as np

from ._backend import USE_NUMBA, njit

# right-hand-side family codes (mirrored by families.PsiSpec)
PSI_CONSTANT = 0  # params [M]
PSI_SUBCRIT = 1  # params [M, q, gamma]
PSI_GRADPOW = 2  # params [M, alpha]
PSI_EXISTPROD = 3  # params [a0, b0, rho, q, include_power]
PSI_ETAENV = 4  # params [eta_code, eta_c, eta_s]
PSI_POWERHALF = 5  # params [M, q]
PSI_EXPHALF = 6  # params [M, eps]
PSI_PUREPOW = 7  # params [M, q]

ETA_CONSTANT = 0  # params [c]
ETA_EXP = 1  # params [c, s]

# march status codes
MARCH_OK = 0
MARCH_GRAD_CAP = 1
MARCH_STEP_FAIL = 2
MARCH_Z_CROSS = 3

_EXP_CLIP = 700.0


@njit(cache=True)
def eta_val(code: int, params, z: float) -> float:
    if code == ETA_CONSTANT:
        return params[0]
    return params[0] * math.exp(min(params[1] * z, _EXP_CLIP))


@njit(cache=True)
def eta_slope(code: int, params, z: float) -> float:
    if code == ETA_CONSTANT:
        return 0.0
    return params[1] * params[0] * math.exp(min(params[1] * z, _EXP_CLIP))


@njit(cache=True)
def psi_val(code: int, params, k: int, z: float, p: float) -> float:
    """Evaluate a right-hand-side family at (z, p) with p = |gradient| >= 0."""
    if code == PSI_CONSTANT:
        return params[0]
    if code == PSI_SUBCRIT:
        zp = z if z > 0.0 else 0.0
        return params[0] * (1.0 + zp ** params[1]) * (1.0 + p ** params[2])
    if code == PSI_GRADPOW:
        return params[0] * (1.0 + p ** k) ** params[1]
    if code == PSI_EXISTPROD:
        zp = z if z > 0.0 else 0.0
        base = params[0] + params[1] * math.exp(min(params[2] * z, _EXP_CLIP))
        if params[4] > 0.5:
            base += zp ** params[3]
        return base * math.sqrt(1.0 + p ** (2 * k))
    if code == PSI_ETAENV:
        ez = math.exp(min(z, _EXP_CLIP))
        return ez * eta_val(int(params[0]), params[1:], z) * (1.0 + p ** k)
    if code == PSI_POWERHALF:
        zp = z if z > 0.0 else 0.0
        return params[0] * (1.0 + zp ** params[1]) * math.sqrt(1.0 + p ** k)
    if code == PSI_EXPHALF:
        return params[0] * math.exp(min(params[1] * z, _EXP_CLIP)) * math.sqrt(1.0 + p ** k)
    # PSI_PUREPOW
    zp = z if z > 0.0 else 0.0
    return params[0] * zp ** params[1]


# ---------------------------------------------------------------------------
# elementary symmetric functions
# ---------------------------------------------------------------------------


@njit(cache=True)
def _esym_batch_loop(lams, kmax: int):
    """Coefficient recurrence of prod(1 + lam_i t), rows independent, O(n*kmax)."""
    nrow, n = lams.shape
    out = np.zeros((nrow, kmax + 1))
    for row in range(nrow):
        out[row, 0] = 1.0
        for i in range(n):
            lam = lams[row, i]
            top = i + 1
            if top > kmax:
                top = kmax
            for j in range(top, 0, -1):
                out[row, j] += lam * out[row, j - 1]
    return out


def _esym_batch_numpy(lams, kmax: int):
    """Vectorised-over-rows version of the same recurrence (fallback path)."""
    lams = np.asarray(lams, dtype=float)
    nrow, n = lams.shape
    out = np.zeros((nrow, kmax + 1))
    out[:, 0] = 1.0
    for i in range(n):
        col = lams[:, i : i + 1]
        top = min(i + 1, kmax)
        # reads complete before the write, matching the descending-j update
        out[:, 1 : top + 1] = out[:, 1 : top + 1] + col * out[:, 0:top]
    return out


if USE_NUMBA:
    esym_batch = _esym_batch_loop
else:
    esym_batch = _esym_batch_numpy


# ---------------------------------------------------------------------------
# barrier profile ODE: dphi/dr = [exp(r^k e^phi eta(phi) / coeff) - 1]^(1/k)
# ---------------------------------------------------------------------------


@njit(cache=True)
def phi_slope(r: float, phi: float, k: int, coeff: float, eta_code: int, eta_params) -> float:
    g = (r ** k) * math.exp(min(phi, _EXP_CLIP)) * eta_val(eta_code, eta_params, phi) / coeff
    if g > 36.0:
        # exp(g)-1 ~ exp(g); avoids overflow of expm1 past 709
        return math.exp(min(g / k, _EXP_CLIP))
    return math.expm1(g) ** (1.0 / k)


@njit(cache=True)
def phi_curvature(r: float, phi: float, k: int, coeff: float, eta_code: int, eta_params) -> float:
    """Second derivative from differentiating ln(1+(phi')^k) = g(r, phi)."""
    g = (r ** k) * math.exp(min(phi, _EXP_CLIP)) * eta_val(eta_code, eta_params, phi) / coeff
    ev = eta_val(eta_code, eta_params, phi)
    ratio = eta_slope(eta_code, eta_params, phi) / ev
    if g < 1e-10:
        # phi' ~ (e^phi eta/coeff)^(1/k) r near the centre
        return (math.exp(min(phi, _EXP_CLIP)) * ev / coeff) ** (1.0 / k)
    dp = phi_slope(r, phi, k, coeff, eta_code, eta_params)
    pk = dp ** k
    if pk > 1e300:
        pk = 1e300
    return (1.0 + pk) * g * (k / r + (1.0 + ratio) * dp) / (k * dp ** (k - 1))


@njit(cache=True)
def phi_march(
    k: int,
    coeff: float,
    eta_code: int,
    eta_params,
    phi_switch: float,
    phi_cap: float,
    rtol: float,
    max_steps: int,
):
    """Integrate the barrier profile ODE from (0,0) until phi reaches phi_cap.

    Phase 1 marches phi(r) adaptively (RK45 Cash-Karp) until phi >= phi_switch;
    phase 2 swaps variables and marches r(phi), whose slope 1/phi' decays
    double-exponentially, so the blow-up radius is resolved to machine level.

    Returns (status, rs, phis, n_pts, split, T).
    """
    rs = np.empty(max_steps)
    phis = np.empty(max_steps)
    rs[0] = 0.0
    phis[0] = 0.0
    npts = 1

    atol = 1e-14
    r = 0.0
    phi = 0.0
    h = 1e-4
    status = MARCH_OK

    # phase 1: r is the independent variable
    while phi < phi_switch:
        if npts >= max_steps - 1:
            status = MARCH_STEP_FAIL
            break
        k1 = phi_slope(r, phi, k, coeff, eta_code, eta_params)
        k2 = phi_slope(r + 0.2 * h, phi + h * 0.2 * k1, k, coeff, eta_code, eta_params)
        k3 = phi_slope(
            r + 0.3 * h, phi + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2), k, coeff, eta_code, eta_params
        )
        k4 = phi_slope(
            r + 0.6 * h,
            phi + h * (0.3 * k1 - 0.9 * k2 + 1.2 * k3),
            k,
            coeff,
            eta_code,
            eta_params,
        )
        k5 = phi_slope(
            r + h,
            phi + h * (-11.0 / 54.0 * k1 + 2.5 * k2 - 70.0 / 27.0 * k3 + 35.0 / 27.0 * k4),
            k,
            coeff,
            eta_code,
            eta_params,
        )
        k6 = phi_slope(
            r + 0.875 * h,
            phi
            + h
            * (
                1631.0 / 55296.0 * k1
                + 175.0 / 512.0 * k2
                + 575.0 / 13824.0 * k3
                + 44275.0 / 110592.0 * k4
                + 253.0 / 4096.0 * k5
            ),
            k,
            coeff,
            eta_code,
            eta_params,
        )
        phi5 = phi + h * (
            37.0 / 378.0 * k1 + 250.0 / 621.0 * k3 + 125.0 / 594.0 * k4 + 512.0 / 1771.0 * k6
        )
        phi4 = phi + h * (
            2825.0 / 27648.0 * k1
            + 18575.0 / 48384.0 * k3
            + 13525.0 / 55296.0 * k4
            + 277.0 / 14336.0 * k5
            + 0.25 * k6
        )
        err = abs(phi5 - phi4)
        tol = atol + rtol * max(abs(phi), abs(phi5))
        if err <= tol or h <= 1e-14:
            r += h
            phi = phi5
            rs[npts] = r
            phis[npts] = phi
            npts += 1
        if err > 0.0:
            fac = 0.9 * (tol / err) ** 0.2
            if fac < 0.1:
                fac = 0.1
            elif fac > 5.0:
                fac = 5.0
            h *= fac
        else:
            h *= 5.0
        if h < 1e-15:
            status = MARCH_STEP_FAIL
            break

    split = npts

    # phase 2: phi is the independent variable, dr/dphi = 1/phi'
    if status == MARCH_OK:
        hp = 0.05
        while phi < phi_cap:
            if npts >= max_steps - 1:
                status = MARCH_STEP_FAIL
                break
            if phi + hp > phi_cap:
                hp = phi_cap - phi
            k1 = 1.0 / phi_slope(r, phi, k, coeff, eta_code, eta_params)
            k2 = 1.0 / phi_slope(r + hp * 0.2 * k1, phi + 0.2 * hp, k, coeff, eta_code, eta_params)
            k3 = 1.0 / phi_slope(
                r + hp * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2), phi + 0.3 * hp, k, coeff, eta_code, eta_params
            )
            k4 = 1.0 / phi_slope(
                r + hp * (0.3 * k1 - 0.9 * k2 + 1.2 * k3), phi + 0.6 * hp, k, coeff, eta_code, eta_params
            )
            k5 = 1.0 / phi_slope(
                r + hp * (-11.0 / 54.0 * k1 + 2.5 * k2 - 70.0 / 27.0 * k3 + 35.0 / 27.0 * k4),
                phi + hp,
                k,
                coeff,
                eta_code,
                eta_params,
            )
            k6 = 1.0 / phi_slope(
                r
                + hp
                * (
                    1631.0 / 55296.0 * k1
                    + 175.0 / 512.0 * k2
                    + 575.0 / 13824.0 * k3
                    + 44275.0 / 110592.0 * k4
                    + 253.0 / 4096.0 * k5
                ),
                phi + 0.875 * hp,
                k,
                coeff,
                eta_code,
                eta_params,
            )
            r5 = r + hp * (
                37.0 / 378.0 * k1 + 250.0 / 621.0 * k3 + 125.0 / 594.0 * k4 + 512.0 / 1771.0 * k6
            )
            r4 = r + hp * (
                2825.0 / 27648.0 * k1
                + 18575.0 / 48384.0 * k3
                + 13525.0 / 55296.0 * k4
                + 277.0 / 14336.0 * k5
                + 0.25 * k6
            )
            err = abs(r5 - r4)
            tol = atol + rtol * abs(r5)
            if err <= tol or hp <= 1e-12:
                phi += hp
                r = r5
                rs[npts] = r
                phis[npts] = phi
                npts += 1
            if err > 0.0:
                fac = 0.9 * (tol / err) ** 0.2
                if fac < 0.1:
                    fac = 0.1
                elif fac > 5.0:
                    fac = 5.0
                hp *= fac
            else:
                hp *= 5.0

    return status, rs[:npts], phis[:npts], npts, split, r


# ---------------------------------------------------------------------------
# radial Dirichlet shooting: flux form of the k-Hessian equation
# ---------------------------------------------------------------------------


@njit(cache=True)
def _flux_rhs(r, u, zf, n, k, coeff, psi_code, psi_params):
    """Returns (u' , z') for the flux system; zf = r^(n-k) (u')^k."""
    if zf < 0.0:
        zf = 0.0  # transient stage values only; z' >= 0 keeps the state nonnegative
    up = (zf * r ** (k - n)) ** (1.0 / k)
    dz = r ** (n - 1) * psi_val(psi_code, psi_params, k, u, up) / coeff
    return up, dz


@njit(cache=True)
def _rk4_flux_step(r, u, zf, h, n, k, coeff, psi_code, psi_params):
    ku1, kz1 = _flux_rhs(r, u, zf, n, k, coeff, psi_code, psi_params)
    ku2, kz2 = _flux_rhs(r + 0.5 * h, u + 0.5 * h * ku1, zf + 0.5 * h * kz1, n, k, coeff, psi_code, psi_params)
    ku3, kz3 = _flux_rhs(r + 0.5 * h, u + 0.5 * h * ku2, zf + 0.5 * h * kz2, n, k, coeff, psi_code, psi_params)
    ku4, kz4 = _flux_rhs(r + h, u + h * ku3, zf + h * kz3, n, k, coeff, psi_code, psi_params)
    return (
        u + h / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4),
        zf + h / 6.0 * (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4),
    )


@njit(cache=True)
def _refine_grad_crossing(r0, u0, z0, h, n, k, coeff, psi_code, psi_params, grad_cap):
    """Bisect the gradient-cap crossing inside a bracketing step.

    Each probe re-integrates from the last state below the cap with fixed
    RK4 substeps; near blow-up the flux derivative is huge, so the crossing
    radius is insensitive to the residual integration error.
    """
    lo = 0.0
    hi = h
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        u = u0
        zf = z0
        r = r0
        sub = mid / 16.0
        crossed = False
        for _ in range(16):
            u, zf = _rk4_flux_step(r, u, zf, sub, n, k, coeff, psi_code, psi_params)
            r += sub
            up = (zf * r ** (k - n)) ** (1.0 / k)
            if up > grad_cap:
                crossed = True
                break
        if crossed:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * (r0 + hi):
            break
    return r0 + 0.5 * (lo + hi)


@njit(cache=True)
def shoot_march(
    n: int,
    k: int,
    coeff: float,
    psi_code: int,
    psi_params,
    c: float,
    R: float,
    rtol: float,
    grad_cap: float,
    max_steps: int,
    hmax: float,
):
    """March the radial flux system from the centre value c out to radius R.

    Starts with one Taylor step (removes the r^(k-n) singularity), then
    adaptive RK45 (Cash-Karp) with steps capped at hmax (keeps the returned
    table dense enough for quartic-accurate resampling).  Stops early with
    MARCH_GRAD_CAP if the gradient exceeds grad_cap, reporting the crossing
    radius.

    Returns (status, rs, us, zs, n_pts, r_star).
    """
    rs = np.empty(max_steps)
    us = np.empty(max_steps)
    zs = np.empty(max_steps)

    psi0 = psi_val(psi_code, psi_params, k, c, 0.0)
    kappa = (psi0 / (n * coeff)) ** (1.0 / k)

    r0 = 1e-5 * R
    r = r0
    u = c + 0.5 * kappa * r0 * r0
    zf = psi0 * r0 ** n / (n * coeff)

    rs[0] = r
    us[0] = u
    zs[0] = zf
    npts = 1

    atol = 1e-14
    h = 1e-3 * R
    status = MARCH_OK
    r_star = -1.0
    up_prev = kappa * r0

    while r < R:
        if npts >= max_steps - 1:
            if up_prev > 1e4:
                status = MARCH_GRAD_CAP
                r_star = r
            else:
                status = MARCH_STEP_FAIL
            break
        if r + h > R:
            h = R - r
        ku1, kz1 = _flux_rhs(r, u, zf, n, k, coeff, psi_code, psi_params)
        ku2, kz2 = _flux_rhs(
            r + 0.2 * h, u + h * 0.2 * ku1, zf + h * 0.2 * kz1, n, k, coeff, psi_code, psi_params
        )
        ku3, kz3 = _flux_rhs(
            r + 0.3 * h,
            u + h * (3.0 / 40.0 * ku1 + 9.0 / 40.0 * ku2),
            zf + h * (3.0 / 40.0 * kz1 + 9.0 / 40.0 * kz2),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        ku4, kz4 = _flux_rhs(
            r + 0.6 * h,
            u + h * (0.3 * ku1 - 0.9 * ku2 + 1.2 * ku3),
            zf + h * (0.3 * kz1 - 0.9 * kz2 + 1.2 * kz3),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        ku5, kz5 = _flux_rhs(
            r + h,
            u + h * (-11.0 / 54.0 * ku1 + 2.5 * ku2 - 70.0 / 27.0 * ku3 + 35.0 / 27.0 * ku4),
            zf + h * (-11.0 / 54.0 * kz1 + 2.5 * kz2 - 70.0 / 27.0 * kz3 + 35.0 / 27.0 * kz4),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        ku6, kz6 = _flux_rhs(
            r + 0.875 * h,
            u
            + h
            * (
                1631.0 / 55296.0 * ku1
                + 175.0 / 512.0 * ku2
                + 575.0 / 13824.0 * ku3
                + 44275.0 / 110592.0 * ku4
                + 253.0 / 4096.0 * ku5
            ),
            zf
            + h
            * (
                1631.0 / 55296.0 * kz1
                + 175.0 / 512.0 * kz2
                + 575.0 / 13824.0 * kz3
                + 44275.0 / 110592.0 * kz4
                + 253.0 / 4096.0 * kz5
            ),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        u5 = u + h * (37.0 / 378.0 * ku1 + 250.0 / 621.0 * ku3 + 125.0 / 594.0 * ku4 + 512.0 / 1771.0 * ku6)
        z5 = zf + h * (37.0 / 378.0 * kz1 + 250.0 / 621.0 * kz3 + 125.0 / 594.0 * kz4 + 512.0 / 1771.0 * kz6)
        u4 = u + h * (
            2825.0 / 27648.0 * ku1
            + 18575.0 / 48384.0 * ku3
            + 13525.0 / 55296.0 * ku4
            + 277.0 / 14336.0 * ku5
            + 0.25 * ku6
        )
        z4 = zf + h * (
            2825.0 / 27648.0 * kz1
            + 18575.0 / 48384.0 * kz3
            + 13525.0 / 55296.0 * kz4
            + 277.0 / 14336.0 * kz5
            + 0.25 * kz6
        )
        err_u = abs(u5 - u4) / (atol + rtol * max(abs(u), abs(u5)))
        err_z = abs(z5 - z4) / (atol + rtol * max(abs(zf), abs(z5)))
        err = err_u if err_u > err_z else err_z
        if err != err:  # NaN from overflowing stage values: reject hard
            err = 1e12

        if err <= 1.0 or h <= 1e-13 * R:
            rnew = r + h
            up_new = (z5 * rnew ** (k - n)) ** (1.0 / k)
            if up_new > grad_cap:
                r_star = _refine_grad_crossing(
                    r, u, zf, h, n, k, coeff, psi_code, psi_params, grad_cap
                )
                status = MARCH_GRAD_CAP
                rs[npts] = rnew
                us[npts] = u5
                zs[npts] = z5
                npts += 1
                break
            r = rnew
            u = u5
            zf = z5
            up_prev = up_new
            rs[npts] = r
            us[npts] = u
            zs[npts] = zf
            npts += 1
        if err > 0.0:
            fac = 0.9 * err ** -0.2
            if fac < 0.1:
                fac = 0.1
            elif fac > 5.0:
                fac = 5.0
            h *= fac
        else:
            h *= 5.0
        if h > hmax:
            h = hmax
        if h < 1e-14 * R:
            # a genuine gradient blow-up collapses the step size; with the
            # gradient this large the distance left to the singular radius
            # is already below float resolution
            if up_prev > 1e4:
                status = MARCH_GRAD_CAP
                r_star = r
            else:
                status = MARCH_STEP_FAIL
            break

    return status, rs[:npts], us[:npts], zs[:npts], npts, r_star


@njit(cache=True)
def shoot_march_back(
    n: int,
    k: int,
    coeff: float,
    psi_code: int,
    psi_params,
    m: float,
    R: float,
    zR: float,
    r_in: float,
    rtol: float,
    max_steps: int,
    hmax: float,
):
    """March the flux system inward from (R, m, zR) down to r_in.

    Perturbations of the boundary flux decay inward, so matching the
    centre regularity this way stays well conditioned even when the
    forward boundary map is float-degenerate (steep existence regimes).
    Stops with MARCH_Z_CROSS when the flux runs out before r_in.

    Returns (status, rs, us, zs, n_pts) with rs descending.
    """
    rs = np.empty(max_steps)
    us = np.empty(max_steps)
    zs = np.empty(max_steps)
    r = R
    u = m
    zf = zR
    rs[0] = r
    us[0] = u
    zs[0] = zf
    npts = 1

    atol = 1e-14
    h = 1e-3 * R
    status = MARCH_OK

    while r > r_in:
        if npts >= max_steps - 1:
            status = MARCH_STEP_FAIL
            break
        if r - h < r_in:
            h = r - r_in
        hs = -h
        ku1, kz1 = _flux_rhs(r, u, zf, n, k, coeff, psi_code, psi_params)
        ku2, kz2 = _flux_rhs(
            r + 0.2 * hs, u + hs * 0.2 * ku1, zf + hs * 0.2 * kz1, n, k, coeff, psi_code, psi_params
        )
        ku3, kz3 = _flux_rhs(
            r + 0.3 * hs,
            u + hs * (3.0 / 40.0 * ku1 + 9.0 / 40.0 * ku2),
            zf + hs * (3.0 / 40.0 * kz1 + 9.0 / 40.0 * kz2),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        ku4, kz4 = _flux_rhs(
            r + 0.6 * hs,
            u + hs * (0.3 * ku1 - 0.9 * ku2 + 1.2 * ku3),
            zf + hs * (0.3 * kz1 - 0.9 * kz2 + 1.2 * kz3),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        ku5, kz5 = _flux_rhs(
            r + hs,
            u + hs * (-11.0 / 54.0 * ku1 + 2.5 * ku2 - 70.0 / 27.0 * ku3 + 35.0 / 27.0 * ku4),
            zf + hs * (-11.0 / 54.0 * kz1 + 2.5 * kz2 - 70.0 / 27.0 * kz3 + 35.0 / 27.0 * kz4),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        ku6, kz6 = _flux_rhs(
            r + 0.875 * hs,
            u
            + hs
            * (
                1631.0 / 55296.0 * ku1
                + 175.0 / 512.0 * ku2
                + 575.0 / 13824.0 * ku3
                + 44275.0 / 110592.0 * ku4
                + 253.0 / 4096.0 * ku5
            ),
            zf
            + hs
            * (
                1631.0 / 55296.0 * kz1
                + 175.0 / 512.0 * kz2
                + 575.0 / 13824.0 * kz3
                + 44275.0 / 110592.0 * kz4
                + 253.0 / 4096.0 * kz5
            ),
            n,
            k,
            coeff,
            psi_code,
            psi_params,
        )
        u5 = u + hs * (37.0 / 378.0 * ku1 + 250.0 / 621.0 * ku3 + 125.0 / 594.0 * ku4 + 512.0 / 1771.0 * ku6)
        z5 = zf + hs * (37.0 / 378.0 * kz1 + 250.0 / 621.0 * kz3 + 125.0 / 594.0 * kz4 + 512.0 / 1771.0 * kz6)
        u4 = u + hs * (
            2825.0 / 27648.0 * ku1
            + 18575.0 / 48384.0 * ku3
            + 13525.0 / 55296.0 * ku4
            + 277.0 / 14336.0 * ku5
            + 0.25 * ku6
        )
        z4 = zf + hs * (
            2825.0 / 27648.0 * kz1
            + 18575.0 / 48384.0 * kz3
            + 13525.0 / 55296.0 * kz4
            + 277.0 / 14336.0 * kz5
            + 0.25 * kz6
        )
        err_u = abs(u5 - u4) / (atol + rtol * max(abs(u), abs(u5)))
        err_z = abs(z5 - z4) / (atol + rtol * max(abs(zf), abs(z5)))
        err = err_u if err_u > err_z else err_z
        if err != err:  # NaN from overflowing stage values: reject hard
            err = 1e12

        if err <= 1.0 or h <= 1e-13 * R:
            if z5 < 0.0:
                status = MARCH_Z_CROSS
                rs[npts] = r - h
                us[npts] = u5
                zs[npts] = z5
                npts += 1
                break
            r -= h
            u = u5
            zf = z5
            rs[npts] = r
            us[npts] = u
            zs[npts] = zf
            npts += 1
        if err > 0.0:
            fac = 0.9 * err ** -0.2
            if fac < 0.1:
                fac = 0.1
            elif fac > 5.0:
                fac = 5.0
            h *= fac
        else:
            h *= 5.0
        if h > hmax:
            h = hmax
        if h < 1e-14 * R:
            status = MARCH_STEP_FAIL
            break

    return status, rs[:npts], us[:npts], zs[:npts], npts
