"""Window-level test for a constant beta.

For a window of ``T`` days with ``n`` increments per day and blocks of size
``k_n``, each day contributes

    S_d = (1/sqrt(2)) * sqrt(k_n/n) * sum_{j>=2} t_j(b)

and the window statistic is ``sum_d S_d / sqrt(T)``, approximately standard
normal when beta is constant.  ``b`` is either a known value or the pooled
least-squares beta of the whole window.  The test rejects for large values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConfigError, DegenerateInputError, InputError
from .stats import (
    BlockStats,
    DenominatorGuard,
    IncrementSet,
    ObservationGrid,
    TruncationSpec,
    beta_avar,
    day_statistic,
    pooled_beta,
    truncate,
)

__all__ = [
    "TestConfig",
    "TestOutcome",
    "run_test",
    "scaled_alternative",
    "suggest_block_size",
    "alternative_limit",
    "normal_sf",
    "critical_value",
]

_STD = NormalDist()


def normal_sf(x: float) -> float:
    """Upper-tail probability of the standard normal."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def critical_value(level: float) -> float:
    """``z`` with ``P(Z > z) = level``; ``-inf`` at level 1."""
    if level >= 1.0:
        return -math.inf
    return _STD.inv_cdf(1.0 - level)


@dataclass(frozen=True)
class TestConfig:
    """Test settings.  ``beta=None`` estimates beta from the window."""

    __test__ = False  # not a pytest class

    k_n: int = 19
    beta: float | None = None
    truncation: TruncationSpec = TruncationSpec()
    levels: tuple[float, ...] = (0.10, 0.05, 0.01)
    guard: DenominatorGuard = DenominatorGuard()
    ci_level: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(a) for a in self.levels))
        if self.k_n < 2:
            raise ConfigError("k_n must be at least 2")
        if not all(0.0 < a <= 1.0 for a in self.levels):
            raise ConfigError("significance levels must lie in (0, 1]")
        if not 0.0 < self.ci_level < 1.0:
            raise ConfigError("ci_level must lie in (0, 1)")

    def check_grid(self, n_per_day: int) -> None:
        if self.k_n > n_per_day or n_per_day // self.k_n < 2:
            raise ConfigError(
                f"k_n={self.k_n} leaves fewer than two blocks in a day of {n_per_day} increments"
            )


@dataclass(frozen=True, eq=False)
class TestOutcome:
    __test__ = False

    statistic: float
    p_value: float
    decisions: dict[float, bool]
    beta: float
    beta_estimated: bool
    beta_ci: tuple[float, float] | None
    beta_avar: float | None
    day_statistics: np.ndarray
    blocks: tuple[BlockStats, ...]
    skipped: int
    terms: int
    valid: bool
    n_total: int
    k_n: int
    days: int
    retained: int

    @property
    def scaled_alt(self) -> float:
        return self.statistic / math.sqrt(self.n_total * self.k_n)


def _increment_sets(grid: ObservationGrid, spec: TruncationSpec) -> list[IncrementSet]:
    dx, dy = grid.increments()
    return [truncate(dx[d], dy[d], spec, grid.n_per_day) for d in range(grid.days)]


def run_test(grid: ObservationGrid, cfg: TestConfig = TestConfig()) -> TestOutcome:
    """Test for a constant beta over every day of ``grid``."""
    if grid.days < 1:
        raise InputError("empty window")
    n = grid.n_per_day
    cfg.check_grid(n)
    days = _increment_sets(grid, cfg.truncation)

    avar = None
    ci = None
    if cfg.beta is None:
        b = pooled_beta(days)
        try:
            avar = beta_avar(days, b, cfg.k_n, n)
        except DegenerateInputError:
            avar = None
        if avar is not None:
            half = _STD.inv_cdf(0.5 + cfg.ci_level / 2) * math.sqrt(avar / grid.n_total)
            ci = (b - half, b + half)
    else:
        b = float(cfg.beta)

    scale = math.sqrt(cfg.k_n / n) / math.sqrt(2.0)
    s_d = np.empty(grid.days)
    blocks: list[BlockStats] = []
    skipped = 0
    for d, inc in enumerate(days):
        res = day_statistic(inc, b, cfg.k_n, n, cfg.guard, day=d)
        s_d[d] = scale * res.total
        blocks.extend(res.blocks)
        skipped += res.skipped

    terms = grid.days * (n // cfg.k_n - 1)
    statistic = float(np.sum(s_d) / math.sqrt(grid.days))
    p = normal_sf(statistic)
    decisions = {a: statistic > critical_value(a) for a in cfg.levels}
    return TestOutcome(
        statistic=statistic,
        p_value=p,
        decisions=decisions,
        beta=b,
        beta_estimated=cfg.beta is None,
        beta_ci=ci,
        beta_avar=avar,
        day_statistics=s_d,
        blocks=tuple(blocks),
        skipped=skipped,
        terms=terms,
        valid=skipped <= cfg.guard.max_skip_fraction * terms,
        n_total=grid.n_total,
        k_n=cfg.k_n,
        days=grid.days,
        retained=sum(inc.retained_count for inc in days),
    )


def scaled_alternative(outcome: TestOutcome, n_total: int | None = None, k_n: int | None = None) -> float:
    """Statistic divided by ``sqrt(n_total * k_n)``; tends to ``alternative_limit`` when beta varies."""
    n_total = outcome.n_total if n_total is None else n_total
    k_n = outcome.k_n if k_n is None else k_n
    return outcome.statistic / math.sqrt(n_total * k_n)


def alternative_limit(beta, sigma2, sigma2_idio, beta_ref: float | None = None) -> float:
    """Probability limit of the scaled statistic for deterministic paths.

    Paths are sampled on an equidistant grid over the window; integrals become
    grid averages.  ``beta_ref=None`` uses the volatility-weighted mean beta,
    the limit of the pooled estimator.
    """
    beta, s2, q2 = np.broadcast_arrays(
        np.asarray(beta, dtype=float), np.asarray(sigma2, dtype=float), np.asarray(sigma2_idio, dtype=float)
    )
    if beta_ref is None:
        beta_ref = float((beta * s2).mean() / s2.mean())
    dev = (beta - beta_ref) ** 2 * s2
    return float(np.mean(dev / (dev + q2)) / math.sqrt(2.0))


def suggest_block_size(n: int, alpha: float) -> int:
    """Rate-optimal block size ``floor(n**((4a-1)/(4a+1)))`` for Hoelder-``alpha`` betas."""
    if not 5.0 / 12.0 < alpha <= 1.0:
        raise InputError("alpha must lie in (5/12, 1]")
    if n < 4:
        raise InputError("need at least 4 observations")
    exponent = (4 * alpha - 1) / (4 * alpha + 1)
    k = math.floor(n**exponent)
    # guard against floor(2**6 - eps) style round-off
    if (k + 1) ** (1 / exponent) <= n * (1 + 1e-12):
        k += 1
    return int(min(max(k, 2), n // 2))

