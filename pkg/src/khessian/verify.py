"""Pointwise sub/supersolution certificates and the comparison harness.

All certifications are node-wise with relative slack: a profile passes when
slack >= -tol * (1 + |reference|) at every node.  The comparison check is
three-valued (True / False / None): its hypotheses are themselves sampled,
and an unmet hypothesis makes the conclusion inconclusive, not false.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import SubBarrier, hbar
from .families import PsiSpec
from .radialop import RadialProfile, kconvex_check, sk_radial
from .symcone import Dim


@dataclass(frozen=True)
class CheckReport:
    """Node-sweep outcome; min_slack is relative to 1 + |reference side|."""

    passed: bool
    min_slack: float
    worst_node: int
    node_count: int

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.passed

    def to_json_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "min_slack": float(self.min_slack),
            "worst_node": int(self.worst_node),
            "node_count": int(self.node_count),
        }


def _operator_values(profile: RadialProfile, dim: Dim) -> np.ndarray:
    if profile.sk is not None:
        return np.asarray(profile.sk, dtype=float)
    return sk_radial(profile.du, profile.d2_nodes(), profile.r, dim)


def _report(diff: np.ndarray, ref: np.ndarray, tol: float) -> CheckReport:
    rel = diff / (1.0 + np.abs(ref))
    i = int(np.argmin(rel))
    return CheckReport(bool(rel[i] >= -tol), float(rel[i]), i, rel.size)


def check_subsolution(profile: RadialProfile, psi: PsiSpec, dim: Dim, tol: float = 1e-6) -> CheckReport:
    """Certify S_k(D^2 u) >= psi(u, |Du|) at the profile nodes.

    Requires a k-convex profile: the operator is elliptic only there, so
    the inequality has no comparison content otherwise.
    """
    if not kconvex_check(profile, dim):
        raise ValueError("subsolution check requires a k-convex profile")
    lhs = _operator_values(profile, dim)
    rhs = psi.eval(profile.u, np.maximum(profile.du, 0.0))
    return _report(lhs - rhs, rhs, tol)


def check_supersolution(profile: RadialProfile, phi_rhs: PsiSpec, dim: Dim, tol: float = 1e-6) -> CheckReport:
    """Certify S_k(D^2 u) <= phi_rhs(u, |Du|) at the profile nodes."""
    if not kconvex_check(profile, dim):
        raise ValueError("supersolution check requires a k-convex profile")
    lhs = _operator_values(profile, dim)
    rhs = phi_rhs.eval(profile.u, np.maximum(profile.du, 0.0))
    return _report(rhs - lhs, rhs, tol)


def comparison_check(
    u: RadialProfile,
    v: RadialProfile,
    psi: PsiSpec,
    phi_rhs: PsiSpec,
    dim: Dim,
    tol: float = 1e-8,
) -> bool | None:
    """Ordering conclusion of the comparison principle, or None if inconclusive.

    Hypotheses sampled before concluding: psi >= phi_rhs on the value box,
    u a certified subsolution of psi, v a certified supersolution of
    phi_rhs, boundary ordering at the shared radius, and strict
    z-monotonicity of one side.
    """
    if not (psi.z_strict or phi_rhs.z_strict):
        return None
    if not (psi.verify_flags() and phi_rhs.verify_flags()):
        return None
    zs = np.linspace(
        min(u.u.min(), v.u.min()) - 1.0, max(u.u.max(), v.u.max()) + 1.0, 41
    )
    ps = np.linspace(0.0, max(u.du.max(), v.du.max(), 1.0) * 1.5, 21)
    Z, P = np.meshgrid(zs, ps)
    if np.min(psi.eval(Z, P) - phi_rhs.eval(Z, P)) < -1e-12:
        return None
    try:
        if not check_subsolution(u, psi, dim).passed:
            return None
        if not check_supersolution(v, phi_rhs, dim).passed:
            return None
    except ValueError:
        return None
    r_shared = min(u.r[-1], v.r[-1])
    if float(u.value(r_shared)) > float(v.value(r_shared)) + tol:
        return None
    nodes = u.r[u.r <= r_shared]
    return bool(np.all(u.value(nodes) <= v.value(nodes) + tol))


def sandwich_check(
    u: RadialProfile,
    sub: SubBarrier,
    M: float,
    q: float,
    dim: Dim,
    tol: float = 1e-6,
) -> CheckReport:
    """Two-sided envelope at the nodes: barrier-below and centre-value envelope above.

    With d the boundary distance, checks sub(R - d) <= u <= hbar(d); the
    lower side evaluates the sub-barrier at the node radius (its ball
    radius is at least the domain radius).
    """
    if sub.a < u.R * (1.0 - 1e-12):
        raise ValueError("sandwich needs the sub-barrier ball to contain the domain")
    d = u.R - u.r
    lower = sub.value(u.r)
    upper = hbar(d, M, q, dim)
    lo_rel = (u.u - lower) / (1.0 + np.abs(lower))
    hi_rel = (upper - u.u) / (1.0 + np.abs(upper))
    rel = np.minimum(lo_rel, hi_rel)
    i = int(np.argmin(rel))
    return CheckReport(bool(rel[i] >= -tol), float(rel[i]), i, rel.size)
