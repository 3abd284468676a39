"""One-way ANOVA data containers and the four fixed-effects fits.

Every fit uses maximum-likelihood divisors (N or N_j, never N - 1) and
standardizes the residuals before the probability integral transform.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError
from .special import std_normal_cdf

__all__ = [
    "CLAMP",
    "Dataset",
    "FittedModel",
    "ModelKind",
    "fit",
    "flatten_two_way",
    "reduce_random_effects",
]

# |e_hat| beyond this is clamped before the PIT so that Z_hat stays in (0, 1)
CLAMP = 8.0

MIN_OBSERVATIONS = 3


class ModelKind(str, enum.Enum):
    POOLED = "pooled"  # common mean, common variance
    GROUP_MEANS = "group-means"  # group means, common variance
    GROUP_VARIANCES = "group-variances"  # common mean, group variances
    GROUP_FULL = "group-full"  # group means and group variances

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Dataset:
    """Grouped observations; ``groups[j]`` holds Y_{1j}, ..., Y_{N_j j}."""

    groups: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.groups:
            raise InsufficientDataError("dataset has no groups")
        for j, g in enumerate(self.groups):
            if g.ndim != 1 or g.size == 0:
                raise InsufficientDataError(f"group {j} is empty")
            if not np.all(np.isfinite(g)):
                raise DegenerateDataError(f"group {j} contains non-finite values")
            g.setflags(write=False)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(j) for j in range(len(self.groups))))
        elif len(self.labels) != len(self.groups):
            raise InsufficientDataError("one label per group is required")

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[float]], labels=None) -> "Dataset":
        arrays = tuple(np.array(g, dtype=float).ravel() for g in groups)
        return cls(arrays, tuple(str(s) for s in labels) if labels is not None else ())

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.size for g in self.groups)

    @property
    def n_total(self) -> int:
        return sum(self.sizes)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def map_groups(self, fn) -> "Dataset":
        """Apply ``fn(j, values)`` to every group."""
        return Dataset(
            tuple(np.asarray(fn(j, g), dtype=float) for j, g in enumerate(self.groups)),
            self.labels,
        )

    def subset(self, j: int) -> "Dataset":
        return Dataset((self.groups[j].copy(),), (self.labels[j],))


@dataclass(frozen=True)
class FittedModel:
    """Estimates, standardized residuals and PIT values for one model kind.

    ``mu_hat`` and ``sigma_hat`` have length 1 when the quantity is common to
    all groups and length J otherwise.  ``e_hat`` and ``z_hat`` are ragged:
    one array per group.
    """

    kind: ModelKind
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    e_hat: tuple[np.ndarray, ...]
    z_hat: tuple[np.ndarray, ...]
    sizes: tuple[int, ...]
    n_clamped: int = 0
    clamp: float = CLAMP
    fractions: tuple[Fraction, ...] = field(init=False)

    def __post_init__(self):
        n = sum(self.sizes)
        object.__setattr__(self, "fractions", tuple(Fraction(s, n) for s in self.sizes))

    @property
    def n_total(self) -> int:
        return sum(self.sizes)

    @property
    def n_groups(self) -> int:
        return len(self.sizes)

    @property
    def p_hat(self) -> np.ndarray:
        """N_j / N."""
        return np.asarray(self.sizes, dtype=float) / self.n_total

    @property
    def q_hat(self) -> np.ndarray:
        """J N_j / N."""
        return self.n_groups * self.p_hat

    @property
    def e_flat(self) -> np.ndarray:
        return np.concatenate(self.e_hat)

    @property
    def z_flat(self) -> np.ndarray:
        return np.concatenate(self.z_hat)

    def group_sigma(self) -> np.ndarray:
        """sigma_hat broadcast to one value per group."""
        return np.broadcast_to(self.sigma_hat, (self.n_groups,)).copy()


def _require(data: Dataset, kind: ModelKind) -> None:
    if kind in (ModelKind.POOLED, ModelKind.GROUP_MEANS):
        if data.n_total < MIN_OBSERVATIONS:
            raise InsufficientDataError(
                f"model {kind} needs at least {MIN_OBSERVATIONS} observations, "
                f"got {data.n_total}"
            )
    else:
        for j, n in enumerate(data.sizes):
            if n < MIN_OBSERVATIONS:
                raise InsufficientDataError(
                    f"group {j} ({data.labels[j]!r}) has {n} observation(s); "
                    f"model {kind} needs at least {MIN_OBSERVATIONS} per group"
                )


def _sd(sum_sq: float, n: int, where: str) -> float:
    var = sum_sq / n
    if not var > 0.0:
        raise DegenerateDataError(f"estimated variance is zero ({where})")
    return math.sqrt(var)


def fit(data: Dataset, kind: ModelKind | str) -> FittedModel:
    """Estimate location and scale for ``kind`` and transform the residuals."""
    kind = ModelKind(kind)
    _require(data, kind)
    groups = data.groups
    J = data.n_groups
    N = data.n_total

    if kind is ModelKind.POOLED:
        y = np.concatenate(groups)
        mu = np.array([y.mean()])
        resid = [g - mu[0] for g in groups]
        sigma = np.array([_sd(sum(float(r @ r) for r in resid), N, "pooled")])
    elif kind is ModelKind.GROUP_MEANS:
        mu = np.array([g.mean() for g in groups])
        resid = [g - m for g, m in zip(groups, mu)]
        sigma = np.array([_sd(sum(float(r @ r) for r in resid), N, "pooled within groups")])
    elif kind is ModelKind.GROUP_VARIANCES:
        # unweighted average of the group means, not the grand mean
        mu = np.array([np.mean([g.mean() for g in groups])])
        resid = [g - mu[0] for g in groups]
        sigma = np.array([_sd(float(r @ r), r.size, f"group {j}") for j, r in enumerate(resid)])
    else:
        mu = np.array([g.mean() for g in groups])
        resid = [g - m for g, m in zip(groups, mu)]
        sigma = np.array([_sd(float(r @ r), r.size, f"group {j}") for j, r in enumerate(resid)])

    scale = np.broadcast_to(sigma, (J,))
    e_hat = tuple(r / s for r, s in zip(resid, scale))
    n_clamped = int(sum(np.count_nonzero(np.abs(e) > CLAMP) for e in e_hat))
    z_hat = tuple(std_normal_cdf(np.clip(e, -CLAMP, CLAMP)) for e in e_hat)
    for arr in (*e_hat, *z_hat, mu, sigma):
        arr.setflags(write=False)
    return FittedModel(kind, mu, sigma, e_hat, z_hat, data.sizes, n_clamped)


def reduce_random_effects(data: Dataset) -> tuple[Dataset, ModelKind]:
    """One-way random effects with a common error variance.

    Within-group centring removes the random group effect, so the test is the
    group-means test on the same data.
    """
    return data, ModelKind.GROUP_MEANS


def flatten_two_way(table: Sequence[Sequence[Sequence[float]]]) -> Dataset:
    """Turn a J x L grid of cells into a one-way dataset with J*L groups.

    Cells are taken in row-major order and labelled ``"j,l"``.  Test the
    result with ``group-means`` (common variance) or ``group-full``.
    """
    groups, labels = [], []
    for j, row in enumerate(table):
        for l, cell in enumerate(row):
            values = np.array(cell, dtype=float).ravel()
            if values.size == 0:
                raise InsufficientDataError(f"cell ({j}, {l}) is empty")
            groups.append(values)
            labels.append(f"{j},{l}")
    if not groups:
        raise InsufficientDataError("two-way table has no cells")
    return Dataset(tuple(groups), tuple(labels))
