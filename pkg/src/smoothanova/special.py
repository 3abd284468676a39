"""Normal and chi-square distribution functions, Gauss-Legendre quadrature.

The heavy lifting is delegated to :mod:`scipy.special` (``ndtr``, ``ndtri``,
``gammainc``) and :func:`numpy.polynomial.legendre.leggauss`; the wrappers
here add domain checking and a scalar-in/scalar-out convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special as sc

from .errors import DomainError

__all__ = [
    "QuadratureRule",
    "chi_square_cdf",
    "chi_square_quantile",
    "chi_square_sf",
    "composite_gauss_legendre",
    "gauss_legendre_rule",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _scalar_or_array(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def _finite(x, name: str = "x") -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr, arr.ndim == 0


def std_normal_cdf(x):
    """Standard normal CDF. Accepts scalars or arrays."""
    arr, scalar = _finite(x)
    return _scalar_or_array(sc.ndtr(arr), scalar)


def std_normal_pdf(x):
    arr, scalar = _finite(x)
    return _scalar_or_array(_INV_SQRT_2PI * np.exp(-0.5 * arr * arr), scalar)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("quantile requires 0 < p < 1")
    return _scalar_or_array(sc.ndtri(arr), arr.ndim == 0)


def _check_dof(k) -> None:
    if int(k) != k or k < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {k!r}")


def chi_square_cdf(x, k: int):
    """P(chi2_k <= x), i.e. the regularized lower incomplete gamma P(k/2, x/2)."""
    _check_dof(k)
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("chi-square CDF requires x >= 0")
    return _scalar_or_array(sc.gammainc(0.5 * k, 0.5 * arr), arr.ndim == 0)


def chi_square_sf(x, k: int):
    """Upper tail 1 - chi_square_cdf(x, k) without cancellation."""
    _check_dof(k)
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("chi-square survival function requires x >= 0")
    return _scalar_or_array(sc.gammaincc(0.5 * k, 0.5 * arr), arr.ndim == 0)


def chi_square_quantile(p, k: int):
    _check_dof(k)
    arr = np.asarray(p, dtype=float)
    if not np.all((arr >= 0.0) & (arr < 1.0)):
        raise DomainError("chi-square quantile requires 0 <= p < 1")
    return _scalar_or_array(2.0 * sc.gammaincinv(0.5 * k, arr), arr.ndim == 0)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for integrating over ``[lo, hi]``."""

    nodes: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        for arr in (self.nodes, self.weights):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def _check_interval(lo: float, hi: float) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise DomainError(f"degenerate quadrature interval [{lo}, {hi}]")


def gauss_legendre_rule(n: int, lo: float = -1.0, hi: float = 1.0) -> QuadratureRule:
    """n-point Gauss-Legendre rule mapped affinely onto [lo, hi]."""
    if int(n) != n or n < 2:
        raise DomainError(f"need at least 2 quadrature points, got {n!r}")
    _check_interval(lo, hi)
    t, w = leggauss(int(n))
    half = 0.5 * (hi - lo)
    return QuadratureRule(lo + half * (t + 1.0), half * w, float(lo), float(hi))


def composite_gauss_legendre(
    panels: int, order: int, lo: float, hi: float
) -> QuadratureRule:
    """Split [lo, hi] into equal panels, each carrying an ``order``-point rule."""
    if int(panels) != panels or panels < 1:
        raise DomainError(f"need at least one panel, got {panels!r}")
    _check_interval(lo, hi)
    edges = np.linspace(lo, hi, int(panels) + 1)
    base = gauss_legendre_rule(order)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (base.nodes[None, :] + 1.0)).ravel()
    weights = (half[:, None] * base.weights[None, :]).ravel()
    return QuadratureRule(nodes, weights, float(lo), float(hi))
