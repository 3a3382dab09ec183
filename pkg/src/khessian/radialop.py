"""Radial profiles and the radial form of the k-Hessian operator.

A radial C^2 function u(|x|) has Hessian spectrum (u'', u'/r, ..., u'/r);
the operator collapses to
    C(n-1,k) (u'/r)^k + C(n-1,k-1) u'' (u'/r)^(k-1)
which equals coeff * [(n-k) r^-k (u')^k + k r^(1-k) (u')^(k-1) u''] with
coeff = (n-1)!/(k!(n-k)!).  The binomial split is used throughout: it is
exact in floats for the unit-parabola checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .families import PsiSpec
from .symcone import Dim


class SingularityError(ValueError):
    """Radial data inconsistent at the centre (r = 0 with u' != 0)."""


@dataclass
class RadialProfile:
    """Sampled radial function on [0, R): nodes, values and first derivatives.

    Between nodes the profile is the cubic Hermite interpolant of (u, du);
    second derivatives come from the interpolant unless exact values are
    attached in ``upp``.  ``sk`` optionally carries the operator value at
    the nodes (barrier exports).
    """

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    R: float
    meta: str = ""
    upp: np.ndarray | None = None
    sk: np.ndarray | None = None
    _spline: CubicHermiteSpline | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.du = np.asarray(self.du, dtype=float)
        if not (self.r.shape == self.u.shape == self.du.shape) or self.r.ndim != 1:
            raise ValueError("r, u, du must be 1-d arrays of equal length")
        if self.r.size < 2:
            raise ValueError("profile needs at least two nodes")
        if self.r[0] != 0.0:
            raise ValueError("first node must sit at r = 0")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("node radii must be strictly increasing")
        if abs(self.du[0]) > 1e-12 * max(1.0, float(np.abs(self.du).max())):
            raise SingularityError("radial smoothness requires du = 0 at the centre")
        if not (self.R > 0 and self.r[-1] < self.R + 1e-12):
            raise ValueError("domain radius R must exceed the last node")
        if not np.all(np.isfinite(self.u)) or not np.all(np.isfinite(self.du)):
            raise ValueError("profile values must be finite")

    # -- interpolation ------------------------------------------------------

    def _spl(self) -> CubicHermiteSpline:
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.r, self.u, self.du)
        return self._spline

    def value(self, x):
        return self._spl()(x)

    def slope(self, x):
        return self._spl().derivative()(x)

    def second(self, x):
        return self._spl().derivative(2)(x)

    def d2_nodes(self) -> np.ndarray:
        """Second derivative at the nodes: stored values, else Hermite estimate."""
        if self.upp is not None:
            return np.asarray(self.upp, dtype=float)
        r, u, du = self.r, self.u, self.du
        h = np.diff(r)
        su = np.diff(u)
        left = 6.0 * su / h ** 2 - (4.0 * du[:-1] + 2.0 * du[1:]) / h
        right = -6.0 * su / h ** 2 + (2.0 * du[:-1] + 4.0 * du[1:]) / h
        out = np.empty_like(u)
        out[0] = left[0]
        out[-1] = right[-1]
        out[1:-1] = 0.5 * (right[:-1] + left[1:])
        return out

    def resample(self, new_r, meta: str | None = None) -> "RadialProfile":
        new_r = np.asarray(new_r, dtype=float)
        spl = self._spl()
        return RadialProfile(
            r=new_r,
            u=spl(new_r),
            du=spl.derivative()(new_r),
            R=self.R,
            meta=self.meta if meta is None else meta,
        )

    # -- serialization ------------------------------------------------------

    def to_csv(self, path) -> None:
        cols = ["r", "u", "du"]
        data = [self.r, self.u, self.du]
        if self.sk is not None:
            cols.append("sk")
            data.append(np.asarray(self.sk, dtype=float))
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for row in zip(*data):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @staticmethod
    def from_csv(path, R: float | None = None, meta: str = "") -> "RadialProfile":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            rows = [list(map(float, line.split(","))) for line in fh if line.strip()]
        arr = np.asarray(rows)
        cols = {name: arr[:, i] for i, name in enumerate(header)}
        if not {"r", "u", "du"} <= set(cols):
            raise ValueError("profile CSV needs at least r,u,du columns")
        rr = cols["r"]
        return RadialProfile(
            r=rr,
            u=cols["u"],
            du=cols["du"],
            R=R if R is not None else float(rr[-1]) * (1.0 + 1e-9) + 1e-300,
            meta=meta,
            sk=cols.get("sk"),
        )


# ---------------------------------------------------------------------------
# pointwise radial operator
# ---------------------------------------------------------------------------


def radial_eigs(up: float, upp: float, r: float, n: int) -> np.ndarray:
    """Hessian spectrum of a radial function: u'' once, u'/r with multiplicity n-1."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r == 0.0:
        if up != 0.0:
            raise SingularityError("r = 0 requires u' = 0")
        return np.full(n, upp, dtype=float)
    out = np.full(n, up / r, dtype=float)
    out[0] = upp
    return out


def sk_radial(up, upp, r, dim: Dim):
    """Radial k-Hessian value; vectorised over equal-shaped inputs.

    At r = 0 (where u' must vanish) the value is the analytic centre limit
    C(n,k) * u''^k.
    """
    n, k = dim.n, dim.k
    up = np.asarray(up, dtype=float)
    upp = np.asarray(upp, dtype=float)
    r = np.asarray(r, dtype=float)
    up, upp, r = np.broadcast_arrays(up, upp, r)
    scalar = up.ndim == 0
    up, upp, r = np.atleast_1d(up), np.atleast_1d(upp), np.atleast_1d(r)
    at0 = r == 0.0
    if np.any(at0 & (up != 0.0)):
        raise SingularityError("r = 0 requires u' = 0")
    t = np.empty_like(r)
    np.divide(up, r, out=t, where=~at0)
    t[at0] = upp[at0]
    c_out = math.comb(n - 1, k)
    c_mix = math.comb(n - 1, k - 1)
    with np.errstate(invalid="ignore"):
        val = c_out * t ** k + c_mix * upp * t ** (k - 1.0)
    center = math.comb(n, k) * upp ** k
    val = np.where(at0, center, val)
    return float(val[0]) if scalar else val


def flux_residual(profile: RadialProfile, psi: PsiSpec, dim: Dim) -> np.ndarray:
    """Node-wise residual of the divergence form of the equation.

    coeff * d/dr[ r^(n-k) (u')^k ] - r^(n-1) psi(u, u'), with the flux
    derivative formed from the profile interpolant (or exact stored u'').
    """
    n, k = dim.require_radial().n, dim.k
    coeff = math.comb(n, k) / n
    r, u, du = profile.r, profile.u, profile.du
    upp = profile.d2_nodes()
    with np.errstate(invalid="ignore"):
        zprime = (n - k) * r ** (n - k - 1.0) * du ** k + k * r ** (n - k) * du ** (k - 1.0) * upp
    zprime = np.where(r == 0.0, 0.0, zprime)
    rhs = r ** (n - 1.0) * psi.eval(u, np.maximum(du, 0.0))
    res = coeff * zprime - rhs
    if not np.all(np.isfinite(res)):
        raise FloatingPointError("non-finite interpolant values in flux residual")
    return res


def kconvex_check(profile: RadialProfile, dim: Dim, strict: bool = False, tol: float = 1e-10) -> bool:
    """True when the radial Hessian spectrum lies in the (closed) order-k cone at all nodes."""
    n, k = dim.n, dim.k
    r, du = profile.r, profile.du
    upp = profile.d2_nodes()
    t = np.empty_like(r)
    at0 = r == 0.0
    np.divide(du, r, out=t, where=~at0)
    t[at0] = upp[at0]
    for j in range(1, k + 1):
        c_out = math.comb(n - 1, j)
        c_mix = math.comb(n - 1, j - 1)
        with np.errstate(invalid="ignore"):
            sj = c_out * t ** j + c_mix * upp * t ** (j - 1.0)
        sj = np.where(at0, math.comb(n, j) * upp ** j, sj)
        scale = c_out * np.abs(t) ** j + c_mix * np.abs(upp) * np.abs(t) ** (j - 1.0) + 1.0
        if strict:
            if not np.all(sj > tol * scale):
                return False
        else:
            if not np.all(sj >= -tol * scale):
                return False
    return True
