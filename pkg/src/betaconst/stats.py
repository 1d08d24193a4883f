"""Jump-truncated block statistics for testing a constant beta.

Every quantity here is computed from the increments of one trading day at a
time.  A day holds ``n`` increments; blocks of ``k_n`` consecutive increments
tile the day from the left and any remainder is dropped.  With ``e = dy - b*dx``
and the truncation mask applied, the block quantities are

    c_hat = n / sqrt(k_n) * sum(dx * e)
    v1    = n / k_n * sum(dx**2)
    v2    = n / k_n * sum(e**2)
    v     = v1 * v2

and the per-block test contribution is ``t_j = (c_hat_j**2 - v_j) / v_{j-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, InputError

__all__ = [
    "ObservationGrid",
    "TruncationSpec",
    "IncrementSet",
    "BlockStats",
    "DenominatorGuard",
    "DayResult",
    "bipower_variation",
    "truncate",
    "block_c",
    "block_v1",
    "block_v2",
    "day_statistic",
    "pooled_beta",
    "beta_avar",
    "beta_avar_closed_form",
    "sample_r_squared",
]


@dataclass(frozen=True, eq=False)
class ObservationGrid:
    """Equidistant log-price observations of ``(X, Y)`` over whole days.

    ``x`` and ``y`` hold ``days * n_per_day + 1`` log-prices; observation
    ``d * n_per_day`` closes day ``d - 1`` and opens day ``d``.
    """

    n_per_day: int
    days: int
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.n_per_day < 1 or self.days < 1:
            raise InputError("n_per_day and days must be positive")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        expected = self.days * self.n_per_day + 1
        if x.shape != (expected,) or y.shape != (expected,):
            raise InputError(
                f"expected {expected} observations per series, got {x.shape} and {y.shape}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputError("observations must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_increments(cls, dx, dy, x0: float = 0.0, y0: float = 0.0) -> "ObservationGrid":
        """Build a grid from ``(days, n_per_day)`` arrays of increments."""
        dx = np.atleast_2d(np.asarray(dx, dtype=float))
        dy = np.atleast_2d(np.asarray(dy, dtype=float))
        if dx.shape != dy.shape:
            raise InputError("dx and dy must have the same shape")
        days, n = dx.shape
        x = np.concatenate([[x0], x0 + np.cumsum(dx.ravel())])
        y = np.concatenate([[y0], y0 + np.cumsum(dy.ravel())])
        return cls(n_per_day=n, days=days, x=x, y=y)

    @property
    def n_total(self) -> int:
        return self.days * self.n_per_day

    def increments(self) -> tuple[np.ndarray, np.ndarray]:
        """Increments as two ``(days, n_per_day)`` arrays."""
        shape = (self.days, self.n_per_day)
        return np.diff(self.x).reshape(shape), np.diff(self.y).reshape(shape)

    def window(self, start: int, stop: int) -> "ObservationGrid":
        """Sub-grid covering days ``start`` up to (not including) ``stop``."""
        if not 0 <= start < stop <= self.days:
            raise InputError(f"invalid day range [{start}, {stop}) for {self.days} days")
        lo, hi = start * self.n_per_day, stop * self.n_per_day + 1
        return ObservationGrid(self.n_per_day, stop - start, self.x[lo:hi], self.y[lo:hi])


@dataclass(frozen=True)
class TruncationSpec:
    """Threshold rule ``|increment| <= alpha * (1/n)**varpi``.

    ``mode="adaptive"`` sets ``alpha = c * sqrt(BV)`` per asset and per day from
    the day's bipower variation; ``mode="fixed"`` uses ``alpha_x``/``alpha_y``
    directly; ``mode="off"`` keeps every increment.
    """

    mode: Literal["adaptive", "fixed", "off"] = "adaptive"
    c: float = 4.0
    alpha_x: float | None = None
    alpha_y: float | None = None
    varpi: float = 0.49

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed", "off"):
            raise ConfigError(f"unknown truncation mode {self.mode!r}")
        if not 0.0 < self.varpi < 0.5:
            raise ConfigError("varpi must lie strictly inside (0, 1/2)")
        if self.mode == "adaptive" and not self.c > 0:
            raise ConfigError("adaptive truncation constant c must be positive")
        if self.mode == "fixed":
            if self.alpha_x is None:
                raise ConfigError("fixed truncation needs alpha_x")
            if self.alpha_y is None:
                object.__setattr__(self, "alpha_y", self.alpha_x)
            if not (self.alpha_x > 0 and self.alpha_y > 0):
                raise ConfigError("truncation levels must be positive")

    @classmethod
    def adaptive(cls, c: float = 4.0, varpi: float = 0.49) -> "TruncationSpec":
        return cls(mode="adaptive", c=c, varpi=varpi)

    @classmethod
    def fixed(cls, alpha_x: float, alpha_y: float | None = None, varpi: float = 0.49) -> "TruncationSpec":
        return cls(mode="fixed", alpha_x=alpha_x, alpha_y=alpha_y, varpi=varpi)

    @classmethod
    def off(cls) -> "TruncationSpec":
        return cls(mode="off")


@dataclass(frozen=True, eq=False)
class IncrementSet:
    """One day of increments together with the truncation mask."""

    dx: np.ndarray
    dy: np.ndarray
    keep: np.ndarray
    threshold_x: float = math.inf
    threshold_y: float = math.inf

    @property
    def n(self) -> int:
        return self.dx.shape[0]

    @property
    def retained_count(self) -> int:
        return int(np.count_nonzero(self.keep))

    def masked(self, b: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """``dx`` and the residual ``dy - b*dx``, zeroed where truncated."""
        return (
            np.where(self.keep, self.dx, 0.0),
            np.where(self.keep, self.dy - b * self.dx, 0.0),
        )


def bipower_variation(d) -> float:
    """``(pi/2) * sum |d_i| |d_{i-1}|``, a jump-robust estimate of diffusive variance."""
    a = np.abs(np.asarray(d, dtype=float))
    return float(np.pi / 2 * np.sum(a[1:] * a[:-1]))


def truncate(dx, dy, spec: TruncationSpec, n_per_day: int) -> IncrementSet:
    """Apply the truncation rule to one day of increments."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if dx.shape != (n_per_day,) or dy.shape != (n_per_day,):
        raise InputError(
            f"expected {n_per_day} increments per series, got {dx.shape} and {dy.shape}"
        )
    if spec.mode == "off":
        return IncrementSet(dx, dy, np.ones(n_per_day, dtype=bool))
    scale = (1.0 / n_per_day) ** spec.varpi
    if spec.mode == "fixed":
        ax, ay = spec.alpha_x, spec.alpha_y
    else:
        bv_x, bv_y = bipower_variation(dx), bipower_variation(dy)
        if bv_x <= 0.0 or bv_y <= 0.0:
            raise DegenerateInputError("zero bipower variation; adaptive threshold undefined")
        ax, ay = spec.c * math.sqrt(bv_x), spec.c * math.sqrt(bv_y)
    tx, ty = ax * scale, ay * scale
    keep = (np.abs(dx) <= tx) & (np.abs(dy) <= ty)
    return IncrementSet(dx, dy, keep, tx, ty)


def _block_range(j: int, k_n: int, n: int) -> slice:
    if j < 1 or j * k_n > n:
        raise IndexError(f"block {j} of size {k_n} does not fit in {n} increments")
    return slice((j - 1) * k_n, j * k_n)


def block_c(inc: IncrementSet, b: float, j: int, k_n: int, n: int) -> float:
    """Scaled covariation between ``dx`` and the residual in block ``j`` (1-based)."""
    sl = _block_range(j, k_n, inc.n)
    x, e = inc.masked(b)
    return float(n / math.sqrt(k_n) * np.dot(x[sl], e[sl]))


def block_v1(inc: IncrementSet, j: int, k_n: int, n: int) -> float:
    sl = _block_range(j, k_n, inc.n)
    x, _ = inc.masked()
    return float(n / k_n * np.dot(x[sl], x[sl]))


def block_v2(inc: IncrementSet, b: float, j: int, k_n: int, n: int) -> float:
    sl = _block_range(j, k_n, inc.n)
    _, e = inc.masked(b)
    return float(n / k_n * np.dot(e[sl], e[sl]))


@dataclass(frozen=True)
class BlockStats:
    day: int
    j: int
    c_hat: float
    v1: float
    v2: float
    v: float
    t_j: float | None
    r2: float
    retained: int
    skipped: bool = False


@dataclass(frozen=True)
class DenominatorGuard:
    """Finite-sample protection against a vanishing previous-block denominator.

    A block whose predecessor has ``v < floor`` contributes nothing and is
    counted as skipped (``policy="skip"``) or raises (``policy="raise"``).  A
    window with more than ``max_skip_fraction`` skipped blocks is invalid.
    """

    floor: float = 1e-12
    max_skip_fraction: float = 0.10
    policy: Literal["skip", "raise"] = "skip"

    def __post_init__(self):
        if self.floor < 0:
            raise ConfigError("guard floor must be nonnegative")
        if not 0.0 <= self.max_skip_fraction <= 1.0:
            raise ConfigError("max_skip_fraction must lie in [0, 1]")
        if self.policy not in ("skip", "raise"):
            raise ConfigError(f"unknown guard policy {self.policy!r}")


class DayResult(NamedTuple):
    total: float
    blocks: tuple[BlockStats, ...]
    skipped: int


def _block_arrays(inc: IncrementSet, b: float, k_n: int, n: int):
    nb = inc.n // k_n
    m = nb * k_n
    x, e = inc.masked(b)
    xb = x[:m].reshape(nb, k_n)
    eb = e[:m].reshape(nb, k_n)
    c = n / math.sqrt(k_n) * np.einsum("ij,ij->i", xb, eb)
    v1 = n / k_n * np.einsum("ij,ij->i", xb, xb)
    v2 = n / k_n * np.einsum("ij,ij->i", eb, eb)
    retained = inc.keep[:m].reshape(nb, k_n).sum(axis=1)
    return c, v1, v2, retained


def day_statistic(
    inc: IncrementSet,
    b: float,
    k_n: int,
    n: int,
    guard: DenominatorGuard = DenominatorGuard(),
    day: int = 0,
) -> DayResult:
    """Sum of ``t_j`` over blocks ``j >= 2`` of one day, with all block records."""
    if k_n < 2:
        raise ConfigError("block size must be at least 2")
    if inc.n != n:
        raise InputError(f"day has {inc.n} increments, expected {n}")
    if n // k_n < 2:
        raise ConfigError(f"need at least two blocks per day, got n={n}, k_n={k_n}")
    c, v1, v2, retained = _block_arrays(inc, b, k_n, n)
    v = v1 * v2
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(v > 0, c * c / (k_n * v), np.nan)
    blocks = [BlockStats(day, 1, float(c[0]), float(v1[0]), float(v2[0]), float(v[0]),
                         None, float(r2[0]), int(retained[0]))]
    total = 0.0
    skipped = 0
    for i in range(1, c.shape[0]):
        if v[i - 1] < guard.floor or v[i - 1] <= 0.0:
            if guard.policy == "raise":
                raise DegenerateInputError(
                    f"day {day} block {i}: previous-block variation {v[i - 1]:.3g} below floor"
                )
            skipped += 1
            t = None
        else:
            t = float((c[i] * c[i] - v[i]) / v[i - 1])
            total += t
        blocks.append(BlockStats(day, i + 1, float(c[i]), float(v1[i]), float(v2[i]),
                                 float(v[i]), t, float(r2[i]), int(retained[i]), t is None))
    return DayResult(total, tuple(blocks), skipped)


def pooled_beta(days: Sequence[IncrementSet]) -> float:
    """Least-squares beta from all retained increments of the window."""
    sxy = 0.0
    sxx = 0.0
    for inc in days:
        x = np.where(inc.keep, inc.dx, 0.0)
        sxy += float(np.dot(x, inc.dy))
        sxx += float(np.dot(x, x))
    if sxx == 0.0:
        raise DegenerateInputError("no retained variation in the factor; beta undefined")
    return sxy / sxx


def beta_avar(days: Sequence[IncrementSet], beta_hat: float, k_n: int, n: int) -> float:
    """Plug-in asymptotic variance of the pooled beta.

    Estimates ``V = (2 * int (beta - beta_bar)**2 sigma**4 + int sigma**2 sigma_tilde**2)
    / (int sigma**2)**2`` on the window rescaled to unit length, with block sums
    for the integrals.  The first integral uses ``(c_hat**2 - v) / k_n``, which
    is unbiased for the block's ``(beta - beta_bar)**2 sigma**4`` term.  The
    approximate confidence interval is ``beta_hat +/- z * sqrt(V / n_total)``
    with ``n_total = len(days) * n``.
    """
    if n // k_n < 2:
        raise ConfigError(f"need at least two blocks per day, got n={n}, k_n={k_n}")
    num = 0.0
    sxx_total = 0.0
    used = 0
    for inc in days:
        nb = inc.n // k_n
        m = nb * k_n
        x, e = inc.masked(beta_hat)
        sxx_total += float(np.dot(x, x))
        xb = x[:m].reshape(nb, k_n)
        eb = e[:m].reshape(nb, k_n)
        sxx = np.einsum("ij,ij->i", xb, xb)
        see = np.einsum("ij,ij->i", eb, eb)
        sxe = np.einsum("ij,ij->i", xb, eb)
        ok = sxx > 0
        num += float(np.sum(2.0 * (sxe[ok] ** 2 - sxx[ok] * see[ok] / k_n) + sxx[ok] * see[ok]))
        used += int(np.count_nonzero(ok))
    if used == 0 or sxx_total == 0.0:
        raise DegenerateInputError("every block has zero factor variation")
    n_total = len(days) * n
    # blocks in use cover used*k_n of the n_total increments
    num *= n_total / (used * k_n)
    return max(0.0, n_total * num / (k_n * sxx_total**2))


def beta_avar_closed_form(beta, sigma2, sigma2_idio, published: bool = False) -> float:
    """Asymptotic variance of the pooled beta for deterministic coefficient paths.

    The paths are sampled on an equidistant grid over the unit interval and
    integrals are grid averages.  ``published=True`` evaluates the published
    closed form literally, which counts the ``sigma**2 * sigma_tilde**2`` term
    twice.  The default is the delta-method variance, which matches simulation.
    """
    beta, s2, q2 = np.broadcast_arrays(
        np.asarray(beta, dtype=float), np.asarray(sigma2, dtype=float), np.asarray(sigma2_idio, dtype=float)
    )
    B = s2.mean()
    A = (beta * s2).mean()
    if published:
        bracket = ((beta**2 * s2**2 + s2 * q2).mean() * B**2
                   + A**2 * (s2**2).mean()
                   - 2.0 * A * (beta * s2**2).mean() * B)
        return float(2.0 * bracket / B**4)
    bbar = A / B
    return float((2.0 * ((beta - bbar) ** 2 * s2**2).mean() + (s2 * q2).mean()) / B**2)


def sample_r_squared(inc: IncrementSet, b: float) -> float:
    """Squared uncentred correlation between ``dx`` and ``dy - b*dx`` over retained increments."""
    x, e = inc.masked(b)
    sxx = float(np.dot(x, x))
    see = float(np.dot(e, e))
    if sxx == 0.0 or see == 0.0:
        raise DegenerateInputError("zero variation in factor or residual")
    r2 = float(np.dot(x, e)) ** 2 / (sxx * see)
    return min(r2, 1.0)
