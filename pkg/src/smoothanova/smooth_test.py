"""Estimation-effect-corrected smooth statistic and fixed-K tests.

The score vector v_bar[k] = mean over all observations of pi_k(Z_hat) is
normalized by

* ``sigma``: I - c1 c1' - c2 c2' / 2, for models whose residuals share one
  scale estimate (pooled, group-means, and each group of group-full);
* ``omega-mixture``: sum_j p_j Omega_j for the common-mean, group-variance
  model, where the location estimate mixes the groups.

The statistic N v_bar' C^{-1} v_bar is asymptotically chi-square with K
degrees of freedom under normality.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .basis import BasisConstants, OrthonormalBasis, compute_constants, legendre_scores
from .errors import ConfigurationError, ContractError, NumericalError
from .models import Dataset, FittedModel, ModelKind, fit
from .special import chi_square_sf

__all__ = [
    "K_MAX",
    "CovarianceMatrix",
    "TestResult",
    "covariance_for",
    "nested_statistics",
    "omega_mixture_matrix",
    "score_means",
    "sigma_matrix",
    "statistic",
    "test_fixed_K",
]

K_MAX = 8

EIG_FLOOR = 1e-12
# eigenvalues below -NEG_TOL are a genuine failure, not rounding
NEG_TOL = 1e-8
ILL_CONDITIONED = 1e8


@dataclass(frozen=True)
class CovarianceMatrix:
    entries: np.ndarray
    kind: str
    chol: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    clipped: bool = False

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @property
    def condition(self) -> float:
        return float(self.eigenvalues[-1] / self.eigenvalues[0])

    def warnings(self) -> list[str]:
        out = []
        if self.clipped:
            out.append(
                f"{self.kind} covariance was not positive definite; "
                f"eigenvalues clipped at {EIG_FLOOR:g}"
            )
        if self.condition > ILL_CONDITIONED:
            out.append(f"{self.kind} covariance is ill-conditioned (cond={self.condition:.3g})")
        return out


def _factor(entries: np.ndarray, kind: str) -> CovarianceMatrix:
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ContractError("covariance must be square")
    if not np.allclose(entries, entries.T, rtol=0.0, atol=1e-12):
        raise NumericalError(f"{kind} covariance is not symmetric")
    eig = np.linalg.eigvalsh(entries)
    clipped = False
    try:
        chol = np.linalg.cholesky(entries)
    except np.linalg.LinAlgError:
        if eig[0] < -NEG_TOL:
            raise NumericalError(
                f"{kind} covariance is not positive definite "
                f"(smallest eigenvalue {eig[0]:.3g}); K is too large or the "
                "constants are wrong"
            ) from None
        w, V = np.linalg.eigh(entries)
        entries = (V * np.maximum(w, EIG_FLOOR)) @ V.T
        entries = 0.5 * (entries + entries.T)
        chol = np.linalg.cholesky(entries)
        eig = np.linalg.eigvalsh(entries)
        clipped = True
    for arr in (entries, chol, eig):
        arr.setflags(write=False)
    return CovarianceMatrix(entries, kind, chol, eig, clipped)


@functools.lru_cache(maxsize=64)
def _sigma_cached(c1: tuple, c2: tuple) -> CovarianceMatrix:
    a, b = np.array(c1), np.array(c2)
    entries = np.eye(a.size) - np.outer(a, a) - 0.5 * np.outer(b, b)
    return _factor(entries, "sigma")


def sigma_matrix(constants: BasisConstants, K: int) -> CovarianceMatrix:
    """sigma[k, l] = delta_kl - c1_k c1_l - c2_k c2_l / 2, cached per K."""
    if not 1 <= K <= constants.K:
        raise ContractError(f"K={K} exceeds the {constants.K} available constants")
    return _sigma_cached(tuple(constants.c1[:K]), tuple(constants.c2[:K]))


def omega_mixture_matrix(
    fitted: FittedModel, constants: BasisConstants, K: int
) -> CovarianceMatrix:
    """sum_j p_j Omega_j for the common-mean, group-variance model.

    With r_j = sigma_j S / q_j and S = sum_l p_l / sigma_l, each group
    contributes I - (2 r_j - r_j^2) c1 c1' - c2 c2' / 2.  Estimates replace
    p_j, q_j and sigma_j.
    """
    if fitted.kind is not ModelKind.GROUP_VARIANCES:
        raise ContractError(f"omega mixture applies to group-variances fits, not {fitted.kind}")
    if not 1 <= K <= constants.K:
        raise ContractError(f"K={K} exceeds the {constants.K} available constants")
    p, q = fitted.p_hat, fitted.q_hat
    s = fitted.group_sigma()
    S = float(np.sum(p / s))
    r = s * S / q
    g = float(np.sum(p * (2.0 * r - r * r)))
    c1, c2 = constants.c1[:K], constants.c2[:K]
    entries = np.eye(K) - g * np.outer(c1, c1) - 0.5 * np.outer(c2, c2)
    return _factor(entries, "omega-mixture")


def covariance_for(fitted: FittedModel, K: int, constants: Optional[BasisConstants] = None):
    """Normalizing matrix matching ``fitted.kind``."""
    constants = constants if constants is not None else compute_constants(max(K, K_MAX))
    if fitted.kind is ModelKind.GROUP_VARIANCES:
        return omega_mixture_matrix(fitted, constants, K)
    return sigma_matrix(constants, K)


def score_means(fitted: FittedModel, K: int) -> np.ndarray:
    """v_bar[k - 1] = N^{-1} sum_ij pi_k(Z_hat_ij), k = 1..K."""
    return legendre_scores(fitted.z_flat, K)[1:].mean(axis=1)


def nested_statistics(fitted: FittedModel, cov: CovarianceMatrix) -> np.ndarray:
    """N v_bar' C^{-1} v_bar for every leading dimension 1..cov.K.

    The Cholesky factor of a leading block is the leading block of the
    factor, so one triangular solve yields all prefixes.
    """
    v = score_means(fitted, cov.K)
    w = solve_triangular(cov.chol, v, lower=True)
    return fitted.n_total * np.cumsum(w * w)


def statistic(
    fitted: FittedModel,
    K: OrthonormalBasis | int,
    cov: Optional[CovarianceMatrix] = None,
) -> float:
    """Feasible statistic N v_bar' C^{-1} v_bar for dimension K."""
    K = K.K if isinstance(K, OrthonormalBasis) else int(K)
    cov = covariance_for(fitted, K) if cov is None else cov
    if cov.K != K:
        raise ContractError(f"covariance is {cov.K}x{cov.K} but K={K}")
    expected = "omega-mixture" if fitted.kind is ModelKind.GROUP_VARIANCES else "sigma"
    if cov.kind != expected:
        raise ContractError(f"{fitted.kind} fits need a {expected} covariance, got {cov.kind}")
    return float(nested_statistics(fitted, cov)[-1])


@dataclass(frozen=True)
class TestResult:
    """Outcome of one smooth test.

    ``group_results`` is filled for group-full fits only, one pooled test per
    group; the top-level numbers then come from the combined statistic over
    all residuals and carry no multiplicity adjustment.
    """

    __test__ = False  # keep pytest from collecting this class

    K_used: int
    statistic: float
    dof: Optional[int]
    p_value: float
    method: str
    reject: bool
    model_kind: ModelKind
    n_total: int
    alpha: float
    warnings: tuple[str, ...] = ()
    group_results: tuple["TestResult", ...] = ()
    selection: Optional[object] = None
    fitted: Optional[FittedModel] = field(default=None, repr=False, compare=False)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_K(K: int) -> None:
    if int(K) != K or not 1 <= K <= K_MAX:
        raise ConfigurationError(f"K must be an integer in 1..{K_MAX}, got {K!r}")


def fit_warnings(fitted: FittedModel) -> list[str]:
    if fitted.n_clamped:
        return [
            f"{fitted.n_clamped} standardized residual(s) beyond +/-{fitted.clamp:g} "
            "were clamped before the probability integral transform"
        ]
    return []


def _fixed(fitted: FittedModel, K: int, alpha: float, constants: BasisConstants) -> TestResult:
    cov = covariance_for(fitted, K, constants)
    stat = float(nested_statistics(fitted, cov)[-1])
    p = float(chi_square_sf(stat, K))
    return TestResult(
        K_used=K,
        statistic=stat,
        dof=K,
        p_value=p,
        method="fixed-K",
        reject=p < alpha,
        model_kind=fitted.kind,
        n_total=fitted.n_total,
        alpha=alpha,
        warnings=tuple(fit_warnings(fitted) + cov.warnings()),
        fitted=fitted,
    )


def test_fixed_K(
    data: Dataset, kind: ModelKind | str, K: int, alpha: float = 0.05
) -> TestResult:
    """Chi-square smooth test with a fixed number K of basis functions."""
    kind = ModelKind(kind)
    _check_K(K)
    _check_alpha(alpha)
    constants = compute_constants(K_MAX)
    fitted = fit(data, kind)
    result = _fixed(fitted, K, alpha, constants)
    if kind is not ModelKind.GROUP_FULL:
        return result
    per_group = tuple(
        _fixed(fit(data.subset(j), ModelKind.POOLED), K, alpha, constants)
        for j in range(data.n_groups)
    )
    return _with_groups(result, per_group)


def _with_groups(result: TestResult, per_group: tuple[TestResult, ...]) -> TestResult:
    note = (
        "group-full: per-group tests are primary; the combined statistic is "
        "informational and no multiplicity correction is applied"
    )
    return replace(result, group_results=per_group, warnings=result.warnings + (note,))


test_fixed_K.__test__ = False
