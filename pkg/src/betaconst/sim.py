"""Simulator for the stochastic-volatility jump model of the Monte Carlo study.

    dX = sqrt(V) dW + dL
    dY = beta dX + sqrt(Vt) dWt + dLt
    dV  = kappa (theta - V) dt  + xi sqrt(V) dB
    dVt = kappa (theta - Vt) dt + xi sqrt(Vt) dBt

Time is measured in trading days.  ``L`` and ``Lt`` are independent compound
Poisson processes with Laplace jump sizes.  Under the alternative ``beta``
itself follows a square-root diffusion.  All square-root processes are
integrated by full-truncation Euler on a sub-grid that is ``substeps`` times
finer than the observation grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numba
import numpy as np

from .errors import ConfigError
from .stats import ObservationGrid

__all__ = [
    "CIRParams",
    "ConstantBeta",
    "CIRBeta",
    "BetaFunction",
    "JumpSpec",
    "SimConfig",
    "Shocks",
    "Latent",
    "SimPath",
    "cir_step",
    "draw_shocks",
    "integrate",
    "simulate",
]


@dataclass(frozen=True)
class CIRParams:
    kappa: float = 0.03
    theta: float = 1.0
    xi: float = 0.18

    def __post_init__(self):
        if not (self.kappa > 0 and self.theta > 0 and self.xi >= 0):
            raise ConfigError(f"invalid CIR parameters {self}")


@dataclass(frozen=True)
class ConstantBeta:
    value: float = 1.0


@dataclass(frozen=True)
class CIRBeta:
    params: CIRParams = CIRParams()
    initial: float | None = None


@dataclass(frozen=True)
class BetaFunction:
    """Deterministic beta path; ``fn`` maps an array of times (days) to betas."""

    fn: Callable[[np.ndarray], np.ndarray]


BetaSpec = Union[ConstantBeta, CIRBeta, BetaFunction]


@dataclass(frozen=True)
class JumpSpec:
    """Compound Poisson jumps with density proportional to ``exp(-laplace_rate*|x|)``.

    ``intensity`` is the rate (per day) of jumps in ``L``; ``idio_intensity``
    the rate of ``Y``'s own jumps ``Lt`` (defaults to ``intensity``).
    """

    intensity: float = 1.6
    laplace_rate: float = 2.0
    idio_intensity: float | None = None

    def __post_init__(self):
        if self.idio_intensity is None:
            object.__setattr__(self, "idio_intensity", self.intensity)
        if self.intensity < 0 or self.idio_intensity < 0:
            raise ConfigError("jump intensities must be nonnegative")
        if not self.laplace_rate > 0:
            raise ConfigError("laplace_rate must be positive")

    @classmethod
    def formula(cls) -> "JumpSpec":
        """Levy measure ``1.6 exp(-2|x|) dx`` for both processes."""
        return cls(1.6, 2.0)

    @classmethod
    def prose(cls) -> "JumpSpec":
        """0.4 jumps/day in ``X`` and 0.8 jumps/day of ``Y``'s own, same size law."""
        return cls(0.4, 2.0, 0.8)


@dataclass(frozen=True)
class SimConfig:
    days: int = 1
    steps_per_day: int = 38
    substeps: int = 10
    vol_x: CIRParams = CIRParams()
    vol_y: CIRParams = CIRParams()
    beta: BetaSpec = ConstantBeta(1.0)
    jumps: JumpSpec | None = JumpSpec()
    seed: int = 0
    v0: float | None = None
    vtilde0: float | None = None
    drift_x: float = 0.0
    drift_y: float = 0.0

    def __post_init__(self):
        if self.days < 1:
            raise ConfigError("days must be positive")
        if self.steps_per_day < 2:
            raise ConfigError("steps_per_day must be at least 2")
        if self.substeps < 1:
            raise ConfigError("substeps must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.beta, (ConstantBeta, CIRBeta, BetaFunction)):
            raise ConfigError(f"unsupported beta specification {self.beta!r}")
        for name in ("v0", "vtilde0"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ConfigError(f"{name} must be nonnegative")

    @property
    def n_substeps(self) -> int:
        return self.days * self.steps_per_day * self.substeps

    @property
    def dt(self) -> float:
        return 1.0 / (self.steps_per_day * self.substeps)


@dataclass(frozen=True, eq=False)
class Shocks:
    """All randomness of one path on the sub-grid.

    ``normals[:, 0..4]`` drive ``W, Wt, B, Bt, B_beta``.  ``jump_x[s]`` and
    ``jump_y[s]`` are the summed jump sizes of ``L`` and ``Lt`` in sub-step
    ``s``; the individual events are kept as (sub-step index, size) pairs.
    """

    normals: np.ndarray
    jump_x: np.ndarray
    jump_y: np.ndarray
    events_x: tuple[np.ndarray, np.ndarray] = field(
        default_factory=lambda: (np.empty(0, dtype=np.int64), np.empty(0)))
    events_y: tuple[np.ndarray, np.ndarray] = field(
        default_factory=lambda: (np.empty(0, dtype=np.int64), np.empty(0)))


@dataclass(frozen=True, eq=False)
class Latent:
    """Per-observation model state, for oracle checks.

    ``x_cont`` and ``y_idio`` are the cumulative diffusive parts of ``X`` and
    of ``Y``'s idiosyncratic component; ``x_jump`` and ``y_jump`` the
    cumulative jump parts (``y_jump`` includes ``beta * dL``).  Event times are
    in days from the start of the path.
    """

    v: np.ndarray
    vtilde: np.ndarray
    beta: np.ndarray
    x_cont: np.ndarray
    x_jump: np.ndarray
    y_idio: np.ndarray
    y_jump: np.ndarray
    jump_times_x: np.ndarray
    jump_sizes_x: np.ndarray
    jump_times_y: np.ndarray
    jump_sizes_y: np.ndarray


@dataclass(frozen=True, eq=False)
class SimPath:
    grid: ObservationGrid
    latent: Latent
    config: SimConfig


def cir_step(state, kappa, theta, xi, dt, shock):
    """One full-truncation Euler step of a square-root diffusion.

    The level may go negative; only the argument of the square root is clamped.
    """
    return state + kappa * (theta - state) * dt + xi * np.sqrt(np.maximum(state, 0.0)) * np.sqrt(dt) * shock


_cir_step_jit = numba.njit(cache=True, nogil=True)(cir_step)


@numba.njit(cache=True, nogil=True)
def _integrate_kernel(z, jx, jy, beta_mode, beta_path, b0, v0, w0,
                      vx, vy, vb, dt, substeps, drift_x, drift_y, out):
    # out rows: x, y, v, vtilde, beta, x_cont, x_jump, y_idio, y_jump
    sq = math.sqrt(dt)
    x = 0.0
    y = 0.0
    xc = 0.0
    xj = 0.0
    yi = 0.0
    yj = 0.0
    v = v0
    w = w0
    b = b0
    out[0, 0] = 0.0
    out[1, 0] = 0.0
    out[2, 0] = v
    out[3, 0] = w
    out[4, 0] = b if beta_mode != 2 else beta_path[0]
    for r in range(5, 9):
        out[r, 0] = 0.0
    for s in range(z.shape[0]):
        if beta_mode == 2:
            b = beta_path[s]
        dc = drift_x * dt + math.sqrt(max(v, 0.0)) * sq * z[s, 0]
        di = drift_y * dt + math.sqrt(max(w, 0.0)) * sq * z[s, 1]
        dX = dc + jx[s]
        x += dX
        y += b * dX + di + jy[s]
        xc += dc
        xj += jx[s]
        yi += di
        yj += b * jx[s] + jy[s]
        v = _cir_step_jit(v, vx[0], vx[1], vx[2], dt, z[s, 2])
        w = _cir_step_jit(w, vy[0], vy[1], vy[2], dt, z[s, 3])
        if beta_mode == 1:
            b = _cir_step_jit(b, vb[0], vb[1], vb[2], dt, z[s, 4])
        if (s + 1) % substeps == 0:
            i = (s + 1) // substeps
            out[0, i] = x
            out[1, i] = y
            out[2, i] = v
            out[3, i] = w
            out[4, i] = beta_path[s + 1] if beta_mode == 2 else b
            out[5, i] = xc
            out[6, i] = xj
            out[7, i] = yi
            out[8, i] = yj


def _compound_poisson(rng, rate_per_step, size, n_steps):
    counts = rng.poisson(rate_per_step, n_steps)
    sizes = rng.laplace(0.0, size, int(counts.sum()))
    idx = np.repeat(np.arange(n_steps, dtype=np.int64), counts)
    summed = np.bincount(idx, weights=sizes, minlength=n_steps).astype(float)
    return summed, (idx, sizes)


def draw_shocks(config: SimConfig, rng: np.random.Generator | None = None) -> Shocks:
    """Draw the sub-grid randomness for ``config`` (from its seed unless ``rng`` is given)."""
    if rng is None:
        rng = np.random.default_rng(int(config.seed))
    N = config.n_substeps
    normals = rng.standard_normal((N, 5))
    if config.jumps is None:
        zeros = np.zeros(N)
        return Shocks(normals, zeros, zeros.copy())
    j = config.jumps
    jx, ex = _compound_poisson(rng, j.intensity * config.dt, 1.0 / j.laplace_rate, N)
    jy, ey = _compound_poisson(rng, j.idio_intensity * config.dt, 1.0 / j.laplace_rate, N)
    return Shocks(normals, jx, jy, ex, ey)


def integrate(config: SimConfig, shocks: Shocks) -> SimPath:
    """Run the Euler scheme for ``config`` driven by ``shocks``."""
    N = config.n_substeps
    if shocks.normals.shape != (N, 5) or shocks.jump_x.shape != (N,) or shocks.jump_y.shape != (N,):
        raise ConfigError("shocks do not match the configuration's sub-grid")
    dt = config.dt
    beta = config.beta
    beta_path = np.empty(0)
    vb = np.array([1.0, 1.0, 0.0])
    if isinstance(beta, ConstantBeta):
        mode, b0 = 0, float(beta.value)
    elif isinstance(beta, CIRBeta):
        mode = 1
        vb = np.array([beta.params.kappa, beta.params.theta, beta.params.xi])
        b0 = float(beta.params.theta if beta.initial is None else beta.initial)
    else:
        mode, b0 = 2, 0.0
        # left endpoints of every sub-step plus the terminal time
        times = np.arange(N + 1) * dt
        beta_path = np.asarray(beta.fn(times), dtype=float)
        if beta_path.shape != (N + 1,) or not np.all(np.isfinite(beta_path)):
            raise ConfigError("beta function must return one finite value per time point")
    v0 = config.vol_x.theta if config.v0 is None else config.v0
    w0 = config.vol_y.theta if config.vtilde0 is None else config.vtilde0
    vx = np.array([config.vol_x.kappa, config.vol_x.theta, config.vol_x.xi])
    vy = np.array([config.vol_y.kappa, config.vol_y.theta, config.vol_y.xi])
    n_obs = config.days * config.steps_per_day + 1
    out = np.empty((9, n_obs))
    _integrate_kernel(
        np.ascontiguousarray(shocks.normals), shocks.jump_x, shocks.jump_y, mode, beta_path,
        b0, float(v0), float(w0), vx, vy, vb, dt, config.substeps,
        float(config.drift_x), float(config.drift_y), out,
    )
    grid = ObservationGrid(config.steps_per_day, config.days, out[0].copy(), out[1].copy())
    latent = Latent(
        v=out[2].copy(), vtilde=out[3].copy(), beta=out[4].copy(),
        x_cont=out[5].copy(), x_jump=out[6].copy(), y_idio=out[7].copy(), y_jump=out[8].copy(),
        jump_times_x=shocks.events_x[0] * dt, jump_sizes_x=shocks.events_x[1],
        jump_times_y=shocks.events_y[0] * dt, jump_sizes_y=shocks.events_y[1],
    )
    return SimPath(grid, latent, config)


def simulate(config: SimConfig) -> SimPath:
    """Simulate one path of the model; identical configs give identical paths."""
    return integrate(config, draw_shocks(config))
