"""Test signals with analytic derivatives and reproducible Gaussian noise.

A signal is ``sum_j K_j t**j + sum_i A_i sin(w_i t + phi_i)`` plus optional
white noise. Noise for sample index ``i`` depends only on ``(seed, stream, i)``:
it is drawn from a Philox counter-based generator positioned at counter
``i``, so any slice of the stream can be regenerated independently and
Monte Carlo replicas need no shared generator state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import numpy as np

from .coefficients import gain_table
from .core import advance_batch

MIN_RUNS = 100
_TWO_53 = float(2**53)


class InsufficientRunsError(ValueError):
    pass


class TransientWarning(UserWarning):
    """Variance is not yet monotone over the late part of the time grid."""


@dataclass(frozen=True)
class SignalSpec:
    poly: tuple[float, ...] = ()
    harmonics: tuple[tuple[float, float, float], ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(k) for k in self.poly))
        object.__setattr__(
            self, "harmonics", tuple(tuple(float(v) for v in h) for h in self.harmonics)
        )
        for h in self.harmonics:
            if len(h) != 3:
                raise ValueError(f"harmonic must be (amplitude, omega, phase), got {h}")
        vals = list(self.poly) + [v for h in self.harmonics for v in h] + [self.noise_sigma]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("signal parameters must be finite")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def degree(self) -> int:
        """Polynomial degree (-1 for an empty polynomial part)."""
        return len(self.poly) - 1

    def clean(self, t):
        return derivative(self, t, 0)

    def derivatives(self, t: float, count: int) -> list[float]:
        return [float(derivative(self, t, m)) for m in range(count)]

    def with_seed(self, seed: int) -> "SignalSpec":
        return SignalSpec(self.poly, self.harmonics, self.noise_sigma, seed)


def _philox(seed: int, stream: int, start: int) -> np.random.Philox:
    key = np.array([seed, stream], dtype=np.uint64)
    counter = np.array([start, 0, 0, 0], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


def standard_normal_block(seed: int, start: int, count: int, stream: int = 0) -> np.ndarray:
    """N(0, 1) values for indices ``start .. start+count-1`` via Box-Muller."""
    if count <= 0:
        return np.empty(0)
    raw = _philox(seed, stream, start).random_raw(4 * count).reshape(count, 4)
    u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO_53
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) / _TWO_53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def noise(spec: SignalSpec, index: int, stream: int = 0) -> float:
    if spec.noise_sigma == 0:
        return 0.0
    return spec.noise_sigma * float(standard_normal_block(spec.seed, index, 1, stream)[0])


def derivative(spec: SignalSpec, t, m: int):
    """Analytic m-th derivative of the noiseless part; ``t`` may be an array."""
    if m < 0:
        raise ValueError(f"derivative order must be >= 0, got {m}")
    t = np.asarray(t, dtype=float) if not isinstance(t, (int, float)) else float(t)
    acc = 0.0 * t
    # Horner over the differentiated coefficients j!/(j-m)! K_j
    for j in range(len(spec.poly) - 1, m - 1, -1):
        acc = acc * t + spec.poly[j] * (factorial(j) // factorial(j - m))
    for amp, omega, phase in spec.harmonics:
        # d^m/dt^m sin(x) = sin(x + m*pi/2)
        acc = acc + amp * omega**m * _sin_shift(omega * t + phase, m)
    return acc


def _sin_shift(x, m: int):
    r = m % 4
    if r == 0:
        return np.sin(x)
    if r == 1:
        return np.cos(x)
    if r == 2:
        return -np.sin(x)
    return -np.cos(x)


def sample(spec: SignalSpec, t: float, index: int = 0, stream: int = 0) -> float:
    """Clean value at ``t`` plus the noise draw assigned to ``index``."""
    return float(derivative(spec, t, 0)) + noise(spec, index, stream)


def samples(spec: SignalSpec, ts: Sequence[float], start_index: int = 0, stream: int = 0) -> np.ndarray:
    """Vectorised :func:`sample` for consecutive indices starting at ``start_index``."""
    ts = np.asarray(ts, dtype=float)
    out = np.asarray(derivative(spec, ts, 0), dtype=float).copy()
    if spec.noise_sigma > 0:
        out += spec.noise_sigma * standard_normal_block(spec.seed, start_index, len(ts), stream)
    return out


def uniform_grid(t_start: float, t_end: float, dt: float) -> np.ndarray:
    count = int(math.floor((t_end - t_start) / dt + 1e-9)) + 1
    return t_start + dt * np.arange(count)


@dataclass
class VarianceFit:
    """Result of :func:`variance_slope`."""

    slope: float
    intercept: float
    times: np.ndarray
    variances: np.ndarray
    means: np.ndarray
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)


def monte_carlo_estimates(
    spec: SignalSpec,
    n: int,
    runs: int,
    t_grid: Sequence[float],
    dt: float = 1.0,
    t_start: float = 0.0,
) -> np.ndarray:
    """Run ``runs`` noisy replicas; returns estimates of shape (len(t_grid), runs, n).

    Replica r uses noise stream r of ``spec.seed``. Grid times must lie on
    the sampling lattice ``t_start + k*dt``.
    """
    grid = np.asarray(sorted(t_grid), dtype=float)
    steps = np.rint((grid - t_start) / dt).astype(np.int64)
    if np.any(np.abs(t_start + steps * dt - grid) > 1e-9 * np.maximum(1.0, np.abs(grid))):
        raise ValueError("t_grid points must lie on the sampling lattice")
    last = int(steps[-1])
    ts = t_start + dt * np.arange(last + 1)
    clean = np.asarray(derivative(spec, ts, 0), dtype=float)
    gains = gain_table(n).gains_float
    out = np.empty((len(grid), runs, n))

    chunk = 4096
    z = np.zeros((runs, n))
    want = {int(s): i for i, s in enumerate(steps)}
    for c0 in range(0, last + 1, chunk):
        c1 = min(last + 1, c0 + chunk)
        eta = np.stack(
            [standard_normal_block(spec.seed, c0, c1 - c0, stream=r) for r in range(runs)], axis=1
        ) * spec.noise_sigma
        for k in range(c0, c1):
            f = clean[k] + eta[k - c0]
            if k == 0:
                z[:, 0] = f
            else:
                z, _ = advance_batch(z, dt, ts[k], f, gains)
            if k in want:
                out[want[k]] = z
    return out


def variance_slope(
    spec: SignalSpec,
    n: int,
    m: int,
    runs: int,
    t_grid: Sequence[float],
    dt: float = 1.0,
    t_start: float = 0.0,
) -> VarianceFit:
    """Log-log slope of the cross-replica variance of ``z[m-1]`` against t.

    ``m`` is 1-based as in ``Var(z_{m-1}) ~ t**-(2m-1)``.
    """
    if runs < MIN_RUNS:
        raise InsufficientRunsError(f"need at least {MIN_RUNS} runs, got {runs}")
    if not 1 <= m <= n:
        raise ValueError(f"m={m} outside 1..{n}")
    if spec.degree > n - 1:
        raise ValueError(f"signal degree {spec.degree} exceeds differentiator capacity {n - 1}")
    est = monte_carlo_estimates(spec, n, runs, t_grid, dt, t_start)
    return fit_variance(est, m, np.asarray(sorted(t_grid), dtype=float))


def fit_variance(est: np.ndarray, m: int, times: np.ndarray) -> VarianceFit:
    ch = est[:, :, m - 1]
    var = ch.var(axis=1, ddof=1)
    means = ch.mean(axis=1)
    if np.all(var == 0):
        return VarianceFit(math.nan, math.nan, times, var, means, degenerate=True,
                           notes=["zero variance at every grid time; slope undefined"])
    slope, intercept = np.polyfit(np.log(times), np.log(var), 1)
    notes = []
    half = var[len(var) // 2:]
    if len(half) > 1 and np.any(np.diff(half) > 0):
        notes.append("variance not monotone over the last half of the grid")
        warnings.warn(notes[-1], TransientWarning, stacklevel=3)
    return VarianceFit(float(slope), float(intercept), times, var, means, notes=notes)
