"""Monte Carlo size experiment: data generation, replication loop, and
empirical-size table assembly.

Each replication of cell (k, n) draws a fresh dataset from the linear
two-covariate design (uniform covariates, Gaussian noise), fits the
unrestricted and restricted estimators, computes the requested statistics
for the linear hypothesis and its power-rewritten equivalent, and rejects
against the upper-alpha chi-square critical value. Replications are keyed
to independent counter-based substreams, so the resulting table is a pure
function of (seed, config) regardless of worker count or execution order.

Replications where the root reparametrization is undefined at an estimate
(even k with a nonpositive coefficient) are excluded from the affected
statistics' denominators and counted; failed fits are excluded from the
whole replication and counted. Neither is ever treated as a rejection.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .chisq import chisq_critical_value
from .estimators import fit_restricted, fit_unrestricted
from .exceptions import ConfigurationError, NotConvergedError, RankDeficientError
from .models import LinearGaussianModel, estimate_error_variance
from .restrictions import linear_restriction, power_restriction, power_reparametrization
from .rng import cell_stream, substream
from .statistics import (
    _bf_corrected_value,
    _bf_value,
    _distance_value,
    _lm_value,
    _wald_value,
)

#: Statistic column labels, in canonical output order.
ALL_STATISTICS = ("W", "W*", "BF", "BF*", "BFc-transform", "BFc-direct", "LM", "D")

DEFAULT_SEED = 20260810

WORKERS_ENV_VAR = "BFTEST_THREADS"


@dataclass(frozen=True)
class SimulationConfig:
    """Full specification of the size experiment."""

    k_list: tuple[int, ...] = (-5, -2, 2, 5)
    n_list: tuple[int, ...] = (25, 50, 100, 500)
    reps: int = 10_000
    alpha: float = 0.05
    theta0: tuple[float, float] = (1.0, 1.0)
    sigma2: float = 1.0
    seed: int = DEFAULT_SEED
    statistics: tuple[str, ...] = ALL_STATISTICS
    fixed_design: bool = False
    estimate_sigma2: bool = False
    undefined_policy: str = "exclude-and-count"

    def validate(self) -> None:
        if self.reps < 1:
            raise ConfigurationError(f"reps must be >= 1, got {self.reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.sigma2 > 0.0:
            raise ConfigurationError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.k_list:
            raise ConfigurationError("k_list must not be empty")
        for k in self.k_list:
            if int(k) != k or k == 0:
                raise ConfigurationError(f"k values must be nonzero integers, got {k}")
        p = len(self.theta0)
        for n in self.n_list:
            if n < p:
                raise ConfigurationError(f"sample size {n} is below the parameter count {p}")
        unknown = set(self.statistics) - set(ALL_STATISTICS)
        if unknown:
            raise ConfigurationError(f"unknown statistics: {sorted(unknown)}")
        if not self.statistics:
            raise ConfigurationError("statistics must not be empty")
        if self.undefined_policy != "exclude-and-count":
            raise ConfigurationError(
                f"unsupported undefined_policy {self.undefined_policy!r}"
            )


@dataclass
class CellCounts:
    rejections: int = 0
    valid: int = 0
    excluded: int = 0

    def merge(self, other: "CellCounts") -> None:
        self.rejections += other.rejections
        self.valid += other.valid
        self.excluded += other.excluded

    @property
    def empirical_size(self) -> float:
        return self.rejections / self.valid if self.valid else float("nan")


@dataclass
class CellResult:
    """Per-statistic counts for one (k, n) cell plus replication metadata."""

    counts: dict[str, CellCounts]
    branch_negative: int = 0
    fit_failures: int = 0

    def merge(self, other: "CellResult") -> None:
        for name, cc in other.counts.items():
            self.counts[name].merge(cc)
        self.branch_negative += other.branch_negative
        self.fit_failures += other.fit_failures


@dataclass(frozen=True)
class SizeTable:
    """Rejection counts keyed by (k, n, statistic)."""

    config: SimulationConfig
    cells: dict[tuple[int, int, str], CellCounts]
    meta: dict[tuple[int, int], dict] = field(default_factory=dict)

    def counts(self, k: int, n: int, statistic: str) -> CellCounts:
        return self.cells[(k, n, statistic)]

    def empirical_size(self, k: int, n: int, statistic: str) -> float:
        return self.counts(k, n, statistic).empirical_size


def generate_dataset(
    n: int,
    theta0,
    sigma2: float,
    rng: np.random.Generator,
    *,
    design: np.ndarray | None = None,
) -> LinearGaussianModel:
    """One dataset from the simulation design.

    Covariates are i.i.d. uniform on (0, 1) and drawn before the Gaussian
    noise, so a given stream always yields the same dataset. An externally
    drawn ``design`` can be supplied (fixed-design mode), in which case only
    the noise is drawn from ``rng``.
    """
    theta0 = np.asarray(theta0, dtype=float)
    if design is None:
        X = rng.uniform(0.0, 1.0, size=(n, theta0.size))
    else:
        X = design
    eps = rng.normal(0.0, np.sqrt(sigma2), size=n)
    return LinearGaussianModel(X, X @ theta0 + eps, sigma2)


def _replication(k, n, config, rng, crit, fixtures, design=None):
    """Counts for one replication: {statistic: (rejected, excluded)} plus flags."""
    lin, power, star, reparam = fixtures
    model = generate_dataset(n, config.theta0, config.sigma2, rng, design=design)
    try:
        hat = fit_unrestricted(model)
        if config.estimate_sigma2:
            model = model.with_sigma2(estimate_error_variance(model, hat.theta))
        til_lin = fit_restricted(model, lin)
        til_star = fit_restricted(model, power)
    except (NotConvergedError, RankDeficientError):
        return None  # whole replication excluded

    values: dict[str, float | None] = {}
    if "W" in config.statistics:
        values["W"] = _wald_value(model, lin, hat.theta)[0]
    if "W*" in config.statistics:
        values["W*"] = _wald_value(model, power, hat.theta)[0]
    if "BF" in config.statistics:
        values["BF"] = _bf_value(model, lin, hat.theta, til_lin.theta, "unrestricted")[0]
    if "BF*" in config.statistics:
        values["BF*"] = _bf_value(
            model, power, hat.theta, til_star.theta, "unrestricted"
        )[0]
    if "LM" in config.statistics:
        values["LM"] = _lm_value(model, lin, til_lin.theta)[0]
    if "D" in config.statistics:
        values["D"] = _distance_value(model, hat.theta, til_lin.theta)[0]

    wants_corrected = [
        v for v in ("BFc-transform", "BFc-direct") if v in config.statistics
    ]
    if wants_corrected:
        definable = reparam.in_domain(hat.theta) and reparam.in_domain(til_star.theta)
        for label in wants_corrected:
            if definable:
                variant = label.split("-", 1)[1]
                values[label] = _bf_corrected_value(
                    model, star, reparam, hat.theta, til_star.theta, variant
                )[0]
            else:
                values[label] = None  # excluded, counted by the caller

    out = {}
    for name in config.statistics:
        v = values[name]
        if v is None:
            out[name] = (False, True)
        else:
            out[name] = (v > crit, False)
    branch_negative = til_star.branch is not None and til_star.branch < 0.0
    return out, branch_negative


def _cell_fixtures(k: int):
    return (
        linear_restriction(coord=1, target=1.0, p=2),
        power_restriction(k, coord=1, p=2),
        power_restriction(k, coord=1, p=2),  # star restriction: same formula
        power_reparametrization(k, coord=1, p=2),
    )


def run_cell_range(
    k: int, n: int, config: SimulationConfig, rep_start: int, rep_stop: int
) -> CellResult:
    """Replications [rep_start, rep_stop) of one cell (worker unit)."""
    config.validate()
    crit = chisq_critical_value(config.alpha, df=1)
    fixtures = _cell_fixtures(k)
    design = None
    if config.fixed_design:
        design = cell_stream(config.seed, k, n).uniform(
            0.0, 1.0, size=(n, len(config.theta0))
        )
    result = CellResult(counts={name: CellCounts() for name in config.statistics})
    for rep in range(rep_start, rep_stop):
        rng = substream(config.seed, k, n, rep)
        rep_out = _replication(k, n, config, rng, crit, fixtures, design=design)
        if rep_out is None:
            result.fit_failures += 1
            for cc in result.counts.values():
                cc.excluded += 1
            continue
        per_stat, branch_negative = rep_out
        if branch_negative:
            result.branch_negative += 1
        for name, (rejected, excluded) in per_stat.items():
            cc = result.counts[name]
            if excluded:
                cc.excluded += 1
            else:
                cc.valid += 1
                if rejected:
                    cc.rejections += 1
    return result


def run_cell(k: int, n: int, config: SimulationConfig) -> CellResult:
    """All replications of one cell, serially."""
    return run_cell_range(k, n, config, 0, config.reps)


def _worker(args):
    k, n, config, lo, hi = args
    return (k, n), run_cell_range(k, n, config, lo, hi)


def resolve_workers(workers: int | None) -> int:
    """Worker count: explicit argument, else the environment cap, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return 1


def run_experiment(config: SimulationConfig, *, workers: int | None = None) -> SizeTable:
    """Run every (k, n) cell of the experiment.

    The output is identical for any ``workers`` value: replications are
    keyed to substreams independent of scheduling, and counts are reduced by
    integer sums.
    """
    config.validate()
    nworkers = resolve_workers(workers)
    results: dict[tuple[int, int], CellResult] = {
        (k, n): CellResult(counts={name: CellCounts() for name in config.statistics})
        for k in config.k_list
        for n in config.n_list
    }
    tasks = []
    chunks = 1 if nworkers == 1 else nworkers * 2
    for k in config.k_list:
        for n in config.n_list:
            bounds = np.linspace(0, config.reps, chunks + 1).astype(int)
            for lo, hi in zip(bounds[:-1], bounds[1:]):
                if hi > lo:
                    tasks.append((k, n, config, int(lo), int(hi)))
    if nworkers == 1:
        outputs = map(_worker, tasks)
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            outputs = list(pool.map(_worker, tasks, chunksize=1))
    for key, partial in outputs:
        results[key].merge(partial)

    cells: dict[tuple[int, int, str], CellCounts] = {}
    meta: dict[tuple[int, int], dict] = {}
    for (k, n), res in results.items():
        for name, cc in res.counts.items():
            cells[(k, n, name)] = cc
        meta[(k, n)] = {
            "branch_negative": res.branch_negative,
            "fit_failures": res.fit_failures,
        }
    return SizeTable(config=config, cells=cells, meta=meta)


def single_cell_config(config: SimulationConfig, k: int, n: int) -> SimulationConfig:
    """Restrict a config to one (k, n) cell."""
    return replace(config, k_list=(k,), n_list=(n,))
