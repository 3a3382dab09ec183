"""Elementary symmetric functions, cone membership and Maclaurin bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k


@dataclass(frozen=True)
class Dim:
    """Ambient dimension n and operator order k."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension n must be >= 2")
        if not 1 <= self.k <= self.n:
            raise ValueError("order k must satisfy 1 <= k <= n")

    def require_radial(self) -> "Dim":
        """Barrier/shooting formulas additionally need k <= n-1."""
        if self.k > self.n - 1:
            raise ValueError("radial machinery requires k <= n-1")
        return self


def elem_sym_all(lam) -> np.ndarray:
    """All elementary symmetric values e_0..e_n of one vector."""
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    return _k.esym_batch(lam, lam.shape[1])[0]


def elem_sym(lam, k: int) -> float:
    """k-th elementary symmetric function via the product-coefficient recurrence."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for length-{n} vector")
    return float(_k.esym_batch(np.atleast_2d(lam), k)[0, k])


def elem_sym_batch(lams, k: int) -> np.ndarray:
    """Row-wise k-th elementary symmetric function of an (N, n) array."""
    lams = np.asarray(lams, dtype=float)
    if not 1 <= k <= lams.shape[1]:
        raise ValueError(f"k={k} out of range for width-{lams.shape[1]} batch")
    return _k.esym_batch(lams, k)[:, k]


def elem_sym_matrix(A, k: int, sym_tol: float = 1e-12) -> float:
    """k-th elementary symmetric function of the spectrum of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix input must be square")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > sym_tol * scale:
        raise ValueError("matrix input must be symmetric")
    A = 0.5 * (A + A.T)
    return elem_sym(np.linalg.eigvalsh(A), k)


def in_gamma_k(lam, k: int, strict: bool = True, tol: float = 0.0) -> bool:
    """Cone membership: e_j(lam) > 0 for j = 1..k (>= -tol for the closure)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for length-{n} vector")
    es = _k.esym_batch(np.atleast_2d(lam), k)[0, 1 : k + 1]
    if strict:
        return bool(np.all(es > tol))
    return bool(np.all(es >= -tol))


def radial_coeff(n: int, k: int, allow_top: bool = False) -> float:
    """Coefficient (n-1)!/(k!(n-k)!) of the radial operator; n*coeff = C(n,k)."""
    if not 1 <= k <= n - 1:
        if k == n and allow_top:
            return math.factorial(n - 1) / (math.factorial(n) * 1.0)
        raise ValueError("radial coefficient needs 1 <= k <= n-1")
    return math.comb(n, k) / n


def maclaurin_gap(lam, k: int) -> float:
    """Gap (normalised-e_k)^((k+1)/k) - normalised-e_{k+1}, nonnegative on the cone.

    Requires lam in the order-(k+1) cone; raises otherwise since the
    inequality is not asserted there.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if k + 1 > n:
        raise ValueError("maclaurin gap needs k+1 <= n")
    if not in_gamma_k(lam, k + 1):
        raise ValueError("maclaurin gap requires the vector in the order-(k+1) cone")
    es = _k.esym_batch(np.atleast_2d(lam), k + 1)[0]
    lhs = es[k + 1] / math.comb(n, k + 1)
    rhs = (es[k] / math.comb(n, k)) ** ((k + 1) / k)
    return float(rhs - lhs)


def maclaurin_gap_batch(lams, k: int) -> np.ndarray:
    """Row-wise maclaurin_gap; rows must already lie in the order-(k+1) cone."""
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[1]
    es = _k.esym_batch(lams, k + 1)
    lhs = es[:, k + 1] / math.comb(n, k + 1)
    rhs = (es[:, k] / math.comb(n, k)) ** ((k + 1) / k)
    return rhs - lhs


def chained_maclaurin_gap(lam, k: int) -> float:
    """Gap e_k - C(n,k) * e_n^(k/n) for positive vectors (chained Maclaurin).

    The constant C(n,k) comes from chaining the normalised Maclaurin
    quotients from order k up to n and is sharp at equal entries.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if np.any(lam <= 0):
        raise ValueError("chained bound requires all entries positive")
    es = _k.esym_batch(np.atleast_2d(lam), n)[0]
    return float(es[k] - math.comb(n, k) * es[n] ** (k / n))


def chained_maclaurin_gap_batch(lams, k: int) -> np.ndarray:
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[1]
    es = _k.esym_batch(lams, n)
    return es[:, k] - math.comb(n, k) * es[:, n] ** (k / n)


def split_power_const(n: int, k: int) -> float:
    """Largest C with (1+t)^(k/n) >= C*(1+t^(k/n)) for all t >= 0.

    The ratio is symmetric under t -> 1/t with its minimum at t = 1,
    giving C = 2^(k/n - 1).
    """
    return 2.0 ** (k / n - 1.0)


def hessian_monotone_gap(w1, w2, k: int) -> float:
    """e_k(spec(w1)) - e_k(spec(w2)) for w1 - w2 positive semidefinite.

    Ellipticity proxy: nonnegative whenever both spectra lie in the closed
    order-k cone.
    """
    return elem_sym_matrix(w1, k) - elem_sym_matrix(w2, k)


# ---------------------------------------------------------------------------
# samplers for the property suites
# ---------------------------------------------------------------------------


def sample_gamma_k(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    """Rejection-sample vectors in the open order-k cone, shape (count, n)."""
    out = np.empty((count, n))
    have = 0
    while have < count:
        batch = rng.normal(0.8, 1.0, size=(max(4 * count, 1024), n))
        es = _k.esym_batch(batch, k)
        ok = np.all(es[:, 1 : k + 1] > 0, axis=1)
        good = batch[ok]
        take = min(count - have, good.shape[0])
        out[have : have + take] = good[:take]
        have += take
    return out


def sample_positive(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """Positive-orthant samples with a spread of scales."""
    return rng.lognormal(mean=0.0, sigma=0.9, size=(count, n))
