"""Right-hand-side families, eta envelopes and growth bounds.

The solver and barrier machinery evaluate these through small integer codes
(see ``_kernels``) so the hot loops stay jittable; the dataclasses here are
the user-facing wrappers and carry the monotonicity/positivity flags the
comparison harness checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k

_EXP_CLIP = 700.0


@dataclass(frozen=True)
class EtaSpec:
    """Positive nondecreasing factor eta(z): constant or c*exp(s*z)."""

    code: int
    params: np.ndarray
    label: str

    @staticmethod
    def constant(c: float) -> "EtaSpec":
        if c <= 0:
            raise ValueError("eta constant must be positive")
        return EtaSpec(_k.ETA_CONSTANT, np.array([float(c)]), f"const:{c:g}")

    @staticmethod
    def exp(c: float, s: float) -> "EtaSpec":
        if c <= 0 or s < 0:
            raise ValueError("eta exp requires c > 0 and s >= 0")
        return EtaSpec(_k.ETA_EXP, np.array([float(c), float(s)]), f"exp:c={c:g},s={s:g}")

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        if self.code == _k.ETA_CONSTANT:
            return np.full_like(z, self.params[0])
        return self.params[0] * np.exp(np.minimum(self.params[1] * z, _EXP_CLIP))

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        if self.code == _k.ETA_CONSTANT:
            return np.zeros_like(z)
        return self.params[1] * self.eval(z)

    def value0(self) -> float:
        return float(self.eval(0.0))


@dataclass(frozen=True)
class GrowthBound:
    """Growth bound phi(z) for the z-dependence of a right-hand side.

    Families: constant c; exp c*e^(s z); power_plus_exp M*((z+)^q + c*e^z).
    The decay condition (bounded e^(-z)*phi(z) as z -> -infty, rate 1 after
    normalisation) is what ``eta_from_phi`` checks before factoring.
    """

    family: str
    params: tuple
    eps: float = 1.0

    @staticmethod
    def constant(c: float) -> "GrowthBound":
        return GrowthBound("constant", (float(c),))

    @staticmethod
    def exp(c: float, s: float) -> "GrowthBound":
        return GrowthBound("exp", (float(c), float(s)))

    @staticmethod
    def power_plus_exp(M: float, q: float, c: float) -> "GrowthBound":
        return GrowthBound("power_plus_exp", (float(M), float(q), float(c)))

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "constant":
            return np.full_like(z, self.params[0])
        if self.family == "exp":
            c, s = self.params
            return c * np.exp(np.minimum(s * z, _EXP_CLIP))
        M, q, c = self.params
        zp = np.maximum(z, 0.0)
        return M * (zp ** q + c * np.exp(np.minimum(z, _EXP_CLIP)))

    def is_positive_nondecreasing(self, zs) -> bool:
        vals = self.eval(zs)
        return bool(np.all(vals > 0) and np.all(np.diff(vals) >= -1e-12 * np.abs(vals[:-1])))


@dataclass(frozen=True)
class PsiSpec:
    """A right-hand side psi(z, p), p = |gradient| >= 0, radially symmetric.

    ``z_monotone``/``z_strict``/``positive`` are claims about dz-monotonicity
    and positivity; ``verify_flags`` spot-checks them on a sample grid.
    ``lower_power`` is the (M, q) pair with psi >= M*(z+)^q when one is
    certified (q > k side), used for the upper envelope.
    """

    code: int
    params: np.ndarray
    k: int
    label: str
    z_monotone: bool
    z_strict: bool
    positive: bool
    lower_power: tuple | None = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(M: float, k: int) -> "PsiSpec":
        if M <= 0:
            raise ValueError("constant family requires M > 0")
        return PsiSpec(
            _k.PSI_CONSTANT, np.array([float(M)]), k, f"constant:M={M:g}",
            z_monotone=True, z_strict=False, positive=True,
        )

    @staticmethod
    def subcrit(M: float, q: float, gamma: float, k: int) -> "PsiSpec":
        if M <= 0 or q < 0 or gamma < 0:
            raise ValueError("subcrit family requires M > 0 and q, gamma >= 0")
        return PsiSpec(
            _k.PSI_SUBCRIT, np.array([float(M), float(q), float(gamma)]), k,
            f"subcrit:M={M:g},q={q:g},gamma={gamma:g}",
            z_monotone=True, z_strict=False, positive=True,
        )

    @staticmethod
    def grad_power(M: float, alpha: float, k: int) -> "PsiSpec":
        if M <= 0 or alpha <= 1:
            raise ValueError("grad_power family requires M > 0 and alpha > 1")
        return PsiSpec(
            _k.PSI_GRADPOW, np.array([float(M), float(alpha)]), k,
            f"gradpow:M={M:g},alpha={alpha:g}",
            z_monotone=True, z_strict=False, positive=True,
        )

    @staticmethod
    def exist_product(a0: float, b0: float, rho: float, q: float, k: int) -> "PsiSpec":
        if a0 <= 0 or b0 <= 0 or rho <= 0 or q < 0:
            raise ValueError("exist_product family requires a0, b0, rho > 0 and q >= 0")
        include = 1.0 if q > k else 0.0
        return PsiSpec(
            _k.PSI_EXISTPROD,
            np.array([float(a0), float(b0), float(rho), float(q), include]), k,
            f"existprod:a0={a0:g},b0={b0:g},rho={rho:g},q={q:g}",
            z_monotone=True, z_strict=True, positive=True,
            lower_power=(1.0, float(q)) if q > k else None,
        )

    @staticmethod
    def eta_envelope(eta: EtaSpec, k: int) -> "PsiSpec":
        """psi = e^z * eta(z) * (1 + p^k), the sub-barrier's own equation."""
        params = np.concatenate(([float(eta.code)], eta.params, [0.0]))[:3]
        return PsiSpec(
            _k.PSI_ETAENV, params, k, f"etaenv:{eta.label}",
            z_monotone=True, z_strict=True, positive=True,
        )

    @staticmethod
    def power_half(M: float, q: float, k: int) -> "PsiSpec":
        if M <= 0 or q < 0:
            raise ValueError("power_half family requires M > 0 and q >= 0")
        return PsiSpec(
            _k.PSI_POWERHALF, np.array([float(M), float(q)]), k,
            f"powerhalf:M={M:g},q={q:g}",
            z_monotone=True, z_strict=False, positive=True,
            lower_power=(float(M), float(q)) if q > k else None,
        )

    @staticmethod
    def exp_half(M: float, k: int, eps: float = 1.0) -> "PsiSpec":
        if M <= 0 or eps <= 0:
            raise ValueError("exp_half family requires M > 0 and eps > 0")
        return PsiSpec(
            _k.PSI_EXPHALF, np.array([float(M), float(eps)]), k,
            f"exphalf:M={M:g},eps={eps:g}",
            z_monotone=True, z_strict=True, positive=True,
        )

    @staticmethod
    def pure_power(M: float, q: float, k: int) -> "PsiSpec":
        if M <= 0 or q <= 0:
            raise ValueError("pure_power family requires M > 0 and q > 0")
        return PsiSpec(
            _k.PSI_PUREPOW, np.array([float(M), float(q)]), k,
            f"purepow:M={M:g},q={q:g}",
            z_monotone=True, z_strict=False, positive=False,
            lower_power=(float(M), float(q)) if q > k else None,
        )

    # -- evaluation --------------------------------------------------------

    def eval(self, z, p):
        z = np.asarray(z, dtype=float)
        p = np.asarray(p, dtype=float)
        z, p = np.broadcast_arrays(z, p)
        out = np.empty(z.shape)
        flat_z = z.ravel()
        flat_p = p.ravel()
        flat_o = out.ravel()
        for i in range(flat_z.size):
            flat_o[i] = _k.psi_val(self.code, self.params, self.k, flat_z[i], flat_p[i])
        return out if out.shape else float(out)

    def __call__(self, z, p):
        v = self.eval(z, p)
        return float(v) if np.ndim(v) == 0 else v

    def dz(self, z, p):
        """Analytic partial derivative in z (guards the comparison lemma)."""
        z = np.asarray(z, dtype=float)
        p = np.asarray(p, dtype=float)
        z, p = np.broadcast_arrays(z, p)
        zp = np.maximum(z, 0.0)
        pos = z > 0.0
        c = self.code
        pr = self.params
        if c == _k.PSI_CONSTANT or c == _k.PSI_GRADPOW:
            return np.zeros(z.shape)
        if c == _k.PSI_SUBCRIT:
            M, q, gamma = pr
            if q == 0:
                return np.zeros(z.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(pos, M * q * zp ** (q - 1.0), 0.0)
            return d * (1.0 + p ** gamma)
        if c == _k.PSI_EXISTPROD:
            a0, b0, rho, q, incl = pr
            d = b0 * rho * np.exp(np.minimum(rho * z, _EXP_CLIP))
            if incl > 0.5:
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = d + np.where(pos, q * zp ** (q - 1.0), 0.0)
            return d * np.sqrt(1.0 + p ** (2 * self.k))
        if c == _k.PSI_ETAENV:
            eta = EtaSpec(int(pr[0]), pr[1:], "")
            ez = np.exp(np.minimum(z, _EXP_CLIP))
            return ez * (eta.eval(z) + eta.deriv(z)) * (1.0 + p ** self.k)
        if c == _k.PSI_POWERHALF:
            M, q = pr
            if q == 0:
                return np.zeros(z.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(pos, M * q * zp ** (q - 1.0), 0.0)
            return d * np.sqrt(1.0 + p ** self.k)
        if c == _k.PSI_EXPHALF:
            M, eps = pr
            return eps * M * np.exp(np.minimum(eps * z, _EXP_CLIP)) * np.sqrt(1.0 + p ** self.k)
        # PSI_PUREPOW
        M, q = pr
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(pos, M * q * zp ** (q - 1.0), 0.0)

    def verify_flags(self, zs=None, ps=None, h: float = 1e-6) -> bool:
        """Spot-check the claimed flags on a (z, p) grid."""
        if zs is None:
            # stay clear of the z=0 kink of the (z+)^q terms
            zs = np.concatenate([np.linspace(-8.0, -0.5, 16), np.linspace(0.5, 8.0, 16)])
        if ps is None:
            ps = np.linspace(0.0, 6.0, 13)
        Z, P = np.meshgrid(zs, ps)
        vals = self.eval(Z, P)
        if self.positive and not np.all(vals > 0):
            return False
        if np.any(vals < 0):
            return False
        fd = (self.eval(Z + h, P) - vals) / h
        dz = self.dz(Z, P)
        if not np.allclose(fd, dz, rtol=1e-3, atol=1e-5):
            return False
        if self.z_monotone and np.any(dz < -1e-12):
            return False
        if self.z_strict and not np.all(dz > 0):
            return False
        return True

    def growth_bound(self) -> GrowthBound | None:
        """A factorised bound psi(z,p) <= phi(z)*(1 + p^k), when the family has one."""
        c = self.code
        pr = self.params
        if c == _k.PSI_EXISTPROD:
            # sqrt(1 + p^(2k)) <= 1 + p^k
            a0, b0, rho, q, incl = pr
            if incl > 0.5:
                return GrowthBound("exist_product", (a0, b0, rho, q))
            return GrowthBound("exist_product", (a0, b0, rho, 0.0))
        if c == _k.PSI_EXPHALF:
            return GrowthBound.exp(pr[0], pr[1])
        if c == _k.PSI_ETAENV:
            return None  # already in factored form
        return None


def parse_psi(text: str, k: int) -> PsiSpec:
    """Parse 'family:key=val,key=val' into a PsiSpec (CLI front door)."""
    name, _, rest = text.partition(":")
    kv = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not _ or not key:
                raise ValueError(f"malformed psi parameter {item!r}")
            kv[key.strip()] = float(val)
    try:
        if name == "constant":
            return PsiSpec.constant(kv.pop("M"), k)
        if name == "subcrit":
            return PsiSpec.subcrit(kv.pop("M"), kv.pop("q"), kv.pop("gamma"), k)
        if name == "gradpow":
            return PsiSpec.grad_power(kv.pop("M"), kv.pop("alpha"), k)
        if name == "existprod":
            return PsiSpec.exist_product(kv.pop("a0"), kv.pop("b0"), kv.pop("rho"), kv.pop("q"), k)
        if name == "powerhalf":
            return PsiSpec.power_half(kv.pop("M"), kv.pop("q"), k)
        if name == "exphalf":
            return PsiSpec.exp_half(kv.pop("M"), k, kv.pop("eps", 1.0))
        if name == "purepow":
            return PsiSpec.pure_power(kv.pop("M"), kv.pop("q"), k)
    except KeyError as exc:
        raise ValueError(f"psi family {name!r} missing parameter {exc}") from None
    raise ValueError(f"unknown psi family {name!r}")


def parse_eta(text: str) -> EtaSpec:
    """Parse 'const:c' or 'exp:c=..,s=..' into an EtaSpec."""
    name, _, rest = text.partition(":")
    if name == "const":
        return EtaSpec.constant(float(rest))
    if name == "exp":
        kv = {}
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not _:
                raise ValueError(f"malformed eta parameter {item!r}")
            kv[key.strip()] = float(val)
        return EtaSpec.exp(kv["c"], kv["s"])
    raise ValueError(f"unknown eta family {name!r}")
