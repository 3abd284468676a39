"""Seeded Monte Carlo study of size and power.

Two designs with five groups of sizes m, 2m, ..., 5m:

``means``      group j has mean 5j and variance 4; the null arm is normal,
               the alternative arm is a shifted chi-square(2).  Tested with
               the group-means model.
``variances``  every group has mean 8 and variance j^2; the null arm is
               normal, the alternative arm uniform.  Tested with the
               group-variances model.

Each replication draws its data from ``SeedSequence(master_seed,
spawn_key=(scenario, m, replication))`` and applies every method to the same
draw, so a report depends only on the configuration and never on the order
or process in which replications run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import compute_constants, legendre_scores
from .data_driven import revised_sf, schwarz_select
from .errors import ConfigurationError, SmoothTestError
from .models import Dataset, ModelKind, fit
from .smooth_test import K_MAX, covariance_for, nested_statistics, sigma_matrix
from .special import chi_square_sf, std_normal_cdf

__all__ = [
    "ALTERNATIVES",
    "ARMS",
    "ReplicationError",
    "SimConfig",
    "SimReport",
    "estimate_noncentrality",
    "generate_scenario1",
    "generate_scenario2",
    "mean_psi_squared",
    "run_simulation",
]

ARMS = ("H0", "H1")
N_GROUPS = 5
DESK_M = (10, 20, 30)
FULL_M = tuple(range(10, 151, 10))

_SCENARIO_IDS = {"means": 1, "variances": 2, "custom": 3}


class ReplicationError(SmoothTestError, RuntimeError):
    """A single replication failed; ``seed_key`` replays it."""

    def __init__(self, message: str, seed_key: tuple):
        super().__init__(f"{message} (replay with master_seed/spawn_key {seed_key})")
        self.seed_key = seed_key


def _generators(seed) -> tuple[np.random.Generator, np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    h0, h1 = ss.spawn(2)
    return np.random.default_rng(h0), np.random.default_rng(h1)


def _chi2_2(rng: np.random.Generator, size: int) -> np.ndarray:
    # exact for two degrees of freedom; 1 - U avoids log(0)
    return -2.0 * np.log1p(-rng.random(size))


def generate_scenario1(m: int, seed) -> tuple[Dataset, Dataset]:
    """Group means 5j, variance 4: normal null arm, shifted chi2(2) alternative."""
    if m < 1:
        raise ConfigurationError(f"m must be positive, got {m}")
    g0, g1 = _generators(seed)
    h0 = [5.0 * j + 2.0 * g0.standard_normal(j * m) for j in range(1, N_GROUPS + 1)]
    h1 = [_chi2_2(g1, j * m) + (5.0 * j - 2.0) for j in range(1, N_GROUPS + 1)]
    return Dataset.from_groups(h0), Dataset.from_groups(h1)


def generate_scenario2(m: int, seed) -> tuple[Dataset, Dataset]:
    """Common mean 8, variance j^2: normal null arm, uniform alternative."""
    if m < 1:
        raise ConfigurationError(f"m must be positive, got {m}")
    g0, g1 = _generators(seed)
    half = 2.0 * math.sqrt(3.0)
    h0 = [8.0 + j * g0.standard_normal(j * m) for j in range(1, N_GROUPS + 1)]
    h1 = [g1.uniform(8.0 - half * j, 8.0 + half * j, j * m) for j in range(1, N_GROUPS + 1)]
    return Dataset.from_groups(h0), Dataset.from_groups(h1)


_BUILTIN = {
    "means": (generate_scenario1, ModelKind.GROUP_MEANS),
    "variances": (generate_scenario2, ModelKind.GROUP_VARIANCES),
}


@dataclass(frozen=True)
class SimConfig:
    scenario: str = "means"
    m_values: tuple[int, ...] = DESK_M
    replications: int = 500
    alpha: float = 0.05
    D: int = 5
    fixed_K: tuple[int, ...] = (1, 2, 3, 4, 5)
    data_driven: tuple[str, ...] = ("chi1", "revised")
    master_seed: int = 42
    # only for scenario="custom": generator(m, seed) -> (H0 dataset, H1 dataset)
    generator: Optional[Callable] = field(default=None, compare=False, repr=False)
    kind: Optional[ModelKind] = None

    def __post_init__(self):
        for name in ("m_values", "fixed_K", "data_driven"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.kind is not None:
            object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.scenario not in _SCENARIO_IDS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "custom" and (self.generator is None or self.kind is None):
            raise ConfigurationError("custom scenarios need a generator and a model kind")
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if not self.m_values or any(int(m) != m or m < 1 for m in self.m_values):
            raise ConfigurationError("m_values must be a nonempty list of positive integers")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if any(not 1 <= k <= K_MAX for k in self.fixed_K):
            raise ConfigurationError(f"fixed K values must lie in 1..{K_MAX}")
        if self.data_driven and not 1 <= self.D <= K_MAX:
            raise ConfigurationError(f"D must lie in 1..{K_MAX}")
        if not set(self.data_driven) <= {"chi1", "revised"}:
            raise ConfigurationError("data_driven entries must be 'chi1' or 'revised'")
        if not self.fixed_K and not self.data_driven:
            raise ConfigurationError("no methods selected")

    @property
    def model_kind(self) -> ModelKind:
        return self.kind if self.scenario == "custom" else _BUILTIN[self.scenario][1]

    @property
    def methods(self) -> tuple[str, ...]:
        return tuple(f"K={k}" for k in self.fixed_K) + tuple(f"K*-{a}" for a in self.data_driven)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("generator")
        out["kind"] = str(self.model_kind)
        out["m_values"] = list(self.m_values)
        out["fixed_K"] = list(self.fixed_K)
        out["data_driven"] = list(self.data_driven)
        return out


def _decisions(data: Dataset, config: SimConfig) -> tuple[list[bool], int]:
    """Reject/accept for every method on one dataset, plus K* (0 if unused)."""
    fitted = fit(data, config.model_kind)
    dim = max(config.fixed_K + ((config.D,) if config.data_driven else ()))
    cov = covariance_for(fitted, dim, compute_constants(K_MAX))
    ch = nested_statistics(fitted, cov)
    out = [bool(chi_square_sf(ch[k - 1], k) < config.alpha) for k in config.fixed_K]
    k_star = 0
    if config.data_driven:
        k_star, _ = schwarz_select(ch[: config.D], fitted.n_total)
        stat = ch[k_star - 1]
        for approx in config.data_driven:
            if approx == "chi1":
                p = chi_square_sf(stat, 1)
            else:
                p = revised_sf(stat, fitted.n_total)
            out.append(bool(p < config.alpha))
    return out, k_star


def _replicate(task) -> tuple[int, int, list[tuple[list[bool], int]]]:
    config, m, rep = task
    key = (_SCENARIO_IDS[config.scenario], m, rep)
    seed = np.random.SeedSequence(config.master_seed, spawn_key=key)
    generator = config.generator if config.scenario == "custom" else _BUILTIN[config.scenario][0]
    try:
        arms = generator(m, seed)
        return m, rep, [_decisions(d, config) for d in arms]
    except SmoothTestError as exc:
        raise ReplicationError(
            f"replication {rep} at m={m} failed: {exc}", (config.master_seed, key)
        ) from exc


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    rates: dict  # (arm, m, method) -> rejection frequency
    k_star_hist: dict  # (arm, m) -> frequencies of K* = 1..D
    runtime_seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        """JSON-ready content; runtime is left out so reruns are byte-identical."""
        return {
            "config": self.config.as_dict(),
            "rates": [
                {"arm": arm, "m": m, "method": method, "rate": rate}
                for (arm, m, method), rate in self.rates.items()
            ],
            "k_star": [
                {"arm": arm, "m": m, "frequencies": list(freq)}
                for (arm, m), freq in self.k_star_hist.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scenario", "arm", "m", "method", "rate"])
        for (arm, m, method), rate in self.rates.items():
            writer.writerow([self.config.scenario, arm, m, method, repr(rate)])
        return buf.getvalue()

    def format_table(self) -> str:
        """Rejection rates laid out with one row per m and one column per method."""
        methods = self.config.methods
        lines = []
        for arm in ARMS:
            lines.append(f"{self.config.scenario} / {arm}  ({self.config.model_kind})")
            lines.append(f"{'m':>6} " + " ".join(f"{name:>11}" for name in methods))
            for m in self.config.m_values:
                cells = " ".join(f"{self.rates[(arm, m, name)]:>11.3f}" for name in methods)
                lines.append(f"{m:>6} {cells}")
            lines.append("")
        if self.k_star_hist:
            D = self.config.D
            lines.append("K* frequencies")
            lines.append(f"{'arm':>4} {'m':>6} " + " ".join(f"{'K*=' + str(k):>7}" for k in range(1, D + 1)))
            for (arm, m), freq in self.k_star_hist.items():
                lines.append(f"{arm:>4} {m:>6} " + " ".join(f"{f:>7.3f}" for f in freq))
        return "\n".join(lines)


def run_simulation(config: SimConfig, workers: int = 1) -> SimReport:
    """Run every (m, replication) cell and tabulate rejection frequencies."""
    start = time.perf_counter()
    tasks = [(config, m, rep) for m in config.m_values for rep in range(config.replications)]
    if workers > 1:
        if config.scenario == "custom":
            raise ConfigurationError("custom scenarios run with workers=1")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_replicate(t) for t in tasks]

    methods = config.methods
    R = config.replications
    counts = {(arm, m, meth): 0 for arm in ARMS for m in config.m_values for meth in methods}
    kcounts = {(arm, m): [0] * config.D for arm in ARMS for m in config.m_values}
    for m, _, arms in results:
        for arm, (decisions, k_star) in zip(ARMS, arms):
            for meth, rejected in zip(methods, decisions):
                counts[(arm, m, meth)] += rejected
            if k_star:
                kcounts[(arm, m)][k_star - 1] += 1
    rates = {key: c / R for key, c in counts.items()}
    hist = {key: [c / R for c in row] for key, row in kcounts.items()} if config.data_driven else {}
    return SimReport(config, rates, hist, time.perf_counter() - start)


def _standard_normal(rng, size):
    return rng.standard_normal(size)


def _standard_uniform(rng, size):
    return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)


def _standard_chi2_2(rng, size):
    return (_chi2_2(rng, size) - 2.0) / 2.0


# samplers of mean-zero, unit-variance errors
ALTERNATIVES: dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "normal": _standard_normal,
    "uniform": _standard_uniform,
    "chi2_2": _standard_chi2_2,
}


def _sampler(alternative):
    if callable(alternative):
        return alternative
    try:
        return ALTERNATIVES[alternative]
    except KeyError:
        raise ConfigurationError(f"unknown alternative {alternative!r}") from None


def estimate_noncentrality(
    alternative,
    kind: ModelKind | str = ModelKind.POOLED,
    K: int = 3,
    draws: int = 10**6,
    seed=0,
) -> float:
    """Monte Carlo estimate of a' Sigma^{-1} a with a_k = E pi_k(Phi(e)).

    ``alternative`` is a name from :data:`ALTERNATIVES` or a callable
    ``(rng, size) -> standardized draws``.  This is the probability limit of
    the statistic divided by N when the errors follow the alternative.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.GROUP_VARIANCES:
        raise ConfigurationError("the limit for group-variances depends on the design")
    if draws < 10**5:
        raise ConfigurationError("use at least 1e5 draws")
    rng = np.random.default_rng(seed)
    e = _sampler(alternative)(rng, draws)
    a = legendre_scores(std_normal_cdf(e), K)[1:].mean(axis=1)
    sigma = sigma_matrix(compute_constants(K_MAX), K)
    w = np.linalg.solve(sigma.entries, a)
    return float(a @ w)


def mean_psi_squared(
    alternative,
    K: int = 3,
    n: int = 5000,
    replications: int = 200,
    seed=0,
    loc: float = 0.0,
    scale: float = 1.0,
) -> float:
    """Average of the pooled statistic divided by N over independent samples."""
    sampler = _sampler(alternative)
    constants = compute_constants(K_MAX)
    total = 0.0
    for child in np.random.SeedSequence(seed).spawn(replications):
        y = loc + scale * sampler(np.random.default_rng(child), n)
        fitted = fit(Dataset((y,)), ModelKind.POOLED)
        total += nested_statistics(fitted, covariance_for(fitted, K, constants))[-1] / n
    return total / replications


def k_star_frequencies(report: SimReport, arm: str = "H0") -> dict[int, list[float]]:
    return {m: report.k_star_hist[(arm, m)] for m in report.config.m_values}


def scenario_names() -> Sequence[str]:
    return tuple(_BUILTIN)
