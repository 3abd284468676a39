"""Schwarz-rule choice of the basis dimension and the revised null law.

K* is the smallest maximizer of CH_K - K log N over K = 1..D, where CH_K is
the fixed-K statistic.  Under normality K* tends to 1, so N Psi^2_{K*} is
referred either to chi-square(1) or, in finite samples, to a three-branch
approximation H that corrects the chi-square(1) law's excess rejections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .basis import compute_constants
from .errors import ConfigurationError, DomainError
from .models import Dataset, FittedModel, ModelKind, fit
from .smooth_test import (
    K_MAX,
    TestResult,
    _check_alpha,
    _with_groups,
    covariance_for,
    fit_warnings,
    nested_statistics,
)
from .special import chi_square_cdf, chi_square_sf, std_normal_cdf

__all__ = [
    "SelectionResult",
    "revised_cdf",
    "revised_sf",
    "schwarz_select",
    "select_K",
    "test_data_driven",
]

Approximation = Literal["chi1", "revised"]


@dataclass(frozen=True)
class SelectionResult:
    K_star: int
    penalized: np.ndarray
    D_used: int
    statistics: np.ndarray = field(repr=False)
    warnings: tuple[str, ...] = ()


def schwarz_select(statistics, n_total: int) -> tuple[int, np.ndarray]:
    """Return (K*, penalized) for CH_1..CH_D; ties go to the smallest K."""
    ch = np.asarray(statistics, dtype=float)
    penalized = ch - np.arange(1, ch.size + 1) * math.log(n_total)
    best = 0
    for k in range(1, ch.size):
        if penalized[k] > penalized[best]:
            best = k
    return best + 1, penalized


def _check_D(D: int) -> None:
    if int(D) != D or D < 1:
        raise ConfigurationError(f"D must be a positive integer, got {D!r}")
    if D > K_MAX:
        raise ConfigurationError(f"D={D} exceeds the maximum basis dimension {K_MAX}")


def _select(fitted: FittedModel, D: int) -> tuple[SelectionResult, list[str]]:
    cov = covariance_for(fitted, D, compute_constants(K_MAX))
    ch = nested_statistics(fitted, cov)
    k_star, penalized = schwarz_select(ch, fitted.n_total)
    notes = []
    if D > math.log(fitted.n_total) ** 2:
        notes.append(
            f"D={D} exceeds log(N)^2={math.log(fitted.n_total) ** 2:.2f}; "
            "K* need not settle at 1 under normality"
        )
    for arr in (ch, penalized):
        arr.setflags(write=False)
    return SelectionResult(k_star, penalized, D, ch, tuple(notes)), cov.warnings()


def select_K(data: Dataset, kind: ModelKind | str, D: int = 5) -> SelectionResult:
    _check_D(D)
    return _select(fit(data, ModelKind(kind)), D)[0]


def _branches(x: np.ndarray, log_n: float):
    """Return (F1(x), c, tail) with F1 the chi-square(1) CDF."""
    c = float(chi_square_cdf(log_n, 1))  # 2 Phi(sqrt(log N)) - 1
    tail = 2.0 * float(std_normal_cdf(-math.sqrt(log_n)))  # 2 [1 - Phi(sqrt(log N))]
    return chi_square_cdf(x, 1), c, tail


def _check_revised_args(x, N):
    if int(N) != N or N < 2:
        raise DomainError(f"revised approximation needs N >= 2, got {N!r}")
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("revised approximation requires x >= 0")
    return arr, math.log(N)


def revised_cdf(x, N: int):
    """Three-branch approximation to P(N Psi^2_{K*} <= x) under normality.

    Below log N it is F1(x) c, above 2 log N it is F1(x) c + tail, and in
    between it interpolates linearly; F1 is the chi-square(1) CDF,
    c = 2 Phi(sqrt(log N)) - 1 and tail = 2 [1 - Phi(sqrt(log N))].
    """
    arr, L = _check_revised_args(x, N)
    f1, c, tail = _branches(arr, L)
    lo = float(chi_square_cdf(L, 1)) * c
    hi = float(chi_square_cdf(2.0 * L, 1)) * c + tail
    out = np.where(
        arr <= L,
        f1 * c,
        np.where(arr >= 2.0 * L, f1 * c + tail, lo + (arr - L) / L * (hi - lo)),
    )
    out = np.minimum(out, 1.0)  # c + tail = 1 only up to rounding
    return float(out) if arr.ndim == 0 else out


def revised_sf(x, N: int):
    """1 - revised_cdf(x, N), evaluated without cancellation in the far tail."""
    arr, L = _check_revised_args(x, N)
    f1, c, tail = _branches(arr, L)
    # in the top branch 1 - (F1 c + tail) = c (1 - F1) since c + tail = 1
    upper = c * chi_square_sf(arr, 1)
    out = np.where(arr >= 2.0 * L, upper, 1.0 - revised_cdf(arr, N))
    return float(out) if arr.ndim == 0 else out


def _data_driven(
    fitted: FittedModel, D: int, alpha: float, approximation: Approximation
) -> TestResult:
    selection, cov_notes = _select(fitted, D)
    stat = float(selection.statistics[selection.K_star - 1])
    if approximation == "chi1":
        p = float(chi_square_sf(stat, 1))
        dof = 1
    else:
        p = float(revised_sf(stat, fitted.n_total))
        dof = None
    return TestResult(
        K_used=selection.K_star,
        statistic=stat,
        dof=dof,
        p_value=p,
        method=f"data-driven-{approximation}",
        reject=p < alpha,
        model_kind=fitted.kind,
        n_total=fitted.n_total,
        alpha=alpha,
        warnings=tuple(fit_warnings(fitted) + cov_notes + list(selection.warnings)),
        selection=selection,
        fitted=fitted,
    )


def test_data_driven(
    data: Dataset,
    kind: ModelKind | str,
    D: int = 5,
    alpha: float = 0.05,
    approximation: Approximation = "revised",
) -> TestResult:
    """Smooth test at the Schwarz-selected dimension K*.

    ``approximation="chi1"`` refers the statistic to chi-square(1);
    ``"revised"`` uses :func:`revised_sf`.
    """
    if approximation not in ("chi1", "revised"):
        raise ConfigurationError(f"unknown approximation {approximation!r}")
    kind = ModelKind(kind)
    _check_D(D)
    _check_alpha(alpha)
    result = _data_driven(fit(data, kind), D, alpha, approximation)
    if kind is not ModelKind.GROUP_FULL:
        return result
    per_group = tuple(
        _data_driven(fit(data.subset(j), ModelKind.POOLED), D, alpha, approximation)
        for j in range(data.n_groups)
    )
    return _with_groups(result, per_group)


test_data_driven.__test__ = False
