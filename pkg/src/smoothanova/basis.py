"""Orthonormal shifted Legendre polynomials on [0, 1] and the constants

    c1[k] = int_0^1 pi_k(z) Phi^{-1}(z) dz,
    c2[k] = int_0^1 pi_k(z) Phi^{-1}(z)^2 dz,

which describe how estimating the location and scale perturbs the mean of
pi_k(Z_hat).  Both integrals are evaluated in the x-domain (z = Phi(x)),
where the integrands are smooth and decay like x^2 phi(x).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .special import composite_gauss_legendre, std_normal_cdf, std_normal_pdf

__all__ = [
    "K_CAP",
    "BasisConstants",
    "OrthonormalBasis",
    "compute_constants",
    "legendre_scores",
    "pi_k",
]

K_CAP = 12

# x-domain truncation; the neglected tail mass of x^2 phi(x) is below 1e-13
X_LIMIT = 8.0
_PANEL_ORDER = 20
_SELF_CHECK_TOL = 1e-10


def legendre_scores(z, K: int) -> np.ndarray:
    """Return the (K + 1, n) table [pi_0(z), ..., pi_K(z)].

    Uses the Bonnet recurrence on t = 2z - 1 and rescales by sqrt(2k + 1).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    t = 2.0 * z - 1.0
    out = np.empty((K + 1, z.size))
    out[0] = 1.0
    if K >= 1:
        out[1] = t
    for k in range(1, K):
        out[k + 1] = ((2 * k + 1) * t * out[k] - k * out[k - 1]) / (k + 1)
    out *= np.sqrt(2.0 * np.arange(K + 1) + 1.0)[:, None]
    return out


@dataclass(frozen=True)
class OrthonormalBasis:
    """pi_0, ..., pi_K; ``K`` counts the non-constant functions."""

    K: int

    def __post_init__(self):
        if int(self.K) != self.K or not 1 <= self.K <= K_CAP:
            raise ConfigurationError(f"K must be an integer in 1..{K_CAP}, got {self.K!r}")

    def __call__(self, k: int, z):
        if int(k) != k or not 0 <= k <= self.K:
            raise DomainError(f"basis index {k!r} outside 0..{self.K}")
        arr = np.asarray(z, dtype=float)
        if np.any(np.isnan(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
            raise DomainError("basis functions are defined on [0, 1] only")
        vals = legendre_scores(arr.ravel(), int(k))[int(k)]
        return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)

    def scores(self, z) -> np.ndarray:
        """(K, n) matrix of pi_1..pi_K evaluated at ``z``."""
        return legendre_scores(z, self.K)[1:]


def pi_k(k: int, z, K: int = K_CAP):
    """Value of the k-th orthonormal shifted Legendre polynomial at z."""
    return OrthonormalBasis(K)(k, z)


@dataclass(frozen=True)
class BasisConstants:
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        if self.c1.shape != self.c2.shape or self.c1.ndim != 1:
            raise ConfigurationError("c1 and c2 must be vectors of equal length")
        self.c1.setflags(write=False)
        self.c2.setflags(write=False)

    @property
    def K(self) -> int:
        return self.c1.size

    def truncate(self, K: int) -> "BasisConstants":
        if K > self.K:
            raise ConfigurationError(f"constants computed for K={self.K}, requested {K}")
        return BasisConstants(self.c1[:K].copy(), self.c2[:K].copy())


def _integrate_constants(K: int, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    rule = composite_gauss_legendre(
        max(n_points // _PANEL_ORDER, 1), _PANEL_ORDER, -X_LIMIT, X_LIMIT
    )
    x = rule.nodes
    table = legendre_scores(std_normal_cdf(x), K)[1:]
    w = rule.weights * std_normal_pdf(x)
    return table @ (w * x), table @ (w * x * x)


@functools.lru_cache(maxsize=None)
def compute_constants(K: int, quad_points: int = 400) -> BasisConstants:
    """c1 and c2 for k = 1..K by composite Gauss-Legendre on [-8, 8].

    The result is cross-checked against a rule with twice as many points;
    disagreement beyond 1e-10 raises :class:`ConfigurationError`.
    """
    if int(K) != K or not 1 <= K <= K_CAP:
        raise ConfigurationError(f"K must be an integer in 1..{K_CAP}, got {K!r}")
    if quad_points < 200:
        raise ConfigurationError(
            f"quad_points={quad_points} is below the minimum of 200"
        )
    c1, c2 = _integrate_constants(K, quad_points)
    c1_fine, c2_fine = _integrate_constants(K, 2 * quad_points)
    drift = max(np.max(np.abs(c1 - c1_fine)), np.max(np.abs(c2 - c2_fine)))
    if drift > _SELF_CHECK_TOL:
        raise ConfigurationError(
            f"quadrature self-check failed: {quad_points} vs {2 * quad_points} points "
            f"differ by {drift:.3g}; increase quad_points"
        )
    return BasisConstants(c1_fine, c2_fine)
