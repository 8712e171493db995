"""Online high-order cumulative smoothing.

Each accepted sample ``(t, f)`` advances the estimate vector
``z = (z_0, ..., z_{n-1})`` of the signal and its first n-1 derivatives:

1. predict every channel by an exact Taylor shift over ``dt``;
2. form the residual ``eps = f - prediction[0]``;
3. correct channel m (1-based) by ``dt * gain(n, m) / t**m * eps``.

``t`` in step 3 is the timestamp of the new sample, so the smoothing factors
shrink like ``1/t**m`` and the whole history is weighted equally. For n=1
and unit steps this is the running mean; for n=2 it is Holt's linear method
with ``alpha = 4/t`` and ``beta = 3/(2t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .coefficients import GainTable, gain_table


class NonMonotoneTimeError(ValueError):
    pass


class ZeroTimeError(ValueError):
    pass


class NonFiniteSampleError(ValueError):
    pass


class Sample(NamedTuple):
    t: float
    f: float


@dataclass(frozen=True)
class DifferentiatorConfig:
    """Construction parameters.

    Args:
        order: Number of tracked quantities n; derivatives 0..n-1 are estimated.
        t0: Timestamp assigned to the first sample when the caller supplies
            values without timestamps (fixed-step input).
        initial_estimates: Optional starting z; by default ``z_0`` takes the
            first sample value and higher channels start at zero.
        skip_repeats: Ignore samples whose value equals the last accepted one.
    """

    order: int
    t0: float = 0.0
    initial_estimates: tuple[float, ...] | None = None
    skip_repeats: bool = False

    def __post_init__(self):
        if not isinstance(self.order, int) or self.order < 1:
            raise ValueError(f"order must be a positive int, got {self.order!r}")
        if self.t0 < 0 or not math.isfinite(self.t0):
            raise ValueError(f"t0 must be finite and >= 0, got {self.t0}")
        if self.initial_estimates is not None:
            est = tuple(float(v) for v in self.initial_estimates)
            if len(est) != self.order:
                raise ValueError(
                    f"initial_estimates has {len(est)} entries, expected {self.order}"
                )
            if not all(math.isfinite(v) for v in est):
                raise ValueError("initial_estimates must be finite")
            object.__setattr__(self, "initial_estimates", est)
        gain_table(self.order)  # validates against MAX_ORDER


@dataclass(frozen=True)
class DifferentiatorState:
    """Value-like snapshot of one stream; every update returns a new state."""

    t: float
    z: tuple[float, ...]
    samples_seen: int = 1
    last_f: float | None = None
    skip_repeats: bool = False
    gains: GainTable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gains", gain_table(len(self.z)))

    @property
    def order(self) -> int:
        return len(self.z)

    def to_record(self) -> dict:
        """Flat JSON-compatible record; floats survive a JSON round trip exactly."""
        return {
            "t": self.t,
            "n": self.order,
            "z": list(self.z),
            "samples_seen": self.samples_seen,
            "last_f": self.last_f,
            "skip_repeats": self.skip_repeats,
            "gain_checksum": self.gains.checksum(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "DifferentiatorState":
        z = tuple(float(v) for v in rec["z"])
        if len(z) != int(rec["n"]):
            raise ValueError(f"record has n={rec['n']} but {len(z)} estimates")
        state = cls(
            t=float(rec["t"]),
            z=z,
            samples_seen=int(rec.get("samples_seen", 1)),
            last_f=None if rec.get("last_f") is None else float(rec["last_f"]),
            skip_repeats=bool(rec.get("skip_repeats", False)),
        )
        want = rec.get("gain_checksum")
        if want is not None and want != state.gains.checksum():
            raise ValueError("gain table checksum mismatch")
        return state


def _check_finite(t: float, f: float) -> None:
    if not (math.isfinite(t) and math.isfinite(f)):
        raise NonFiniteSampleError(f"non-finite sample t={t!r} f={f!r}")


def init(config: DifferentiatorConfig, first: Sample) -> DifferentiatorState:
    t, f = float(first[0]), float(first[1])
    _check_finite(t, f)
    if t < 0:
        raise ValueError(f"first sample time must be >= 0, got {t}")
    if config.initial_estimates is not None:
        z = config.initial_estimates
    else:
        z = (f,) + (0.0,) * (config.order - 1)
    return DifferentiatorState(t=t, z=z, samples_seen=1, last_f=f, skip_repeats=config.skip_repeats)


def taylor_weights(dt: float, n: int) -> list[float]:
    """``[dt**k / k! for k in range(n)]`` by running products."""
    w = [1.0] * n
    for k in range(1, n):
        w[k] = w[k - 1] * dt / k
    return w


def predict(z: Sequence[float], dt: float) -> list[float]:
    """Exact Taylor shift of a derivative vector by ``dt``."""
    n = len(z)
    w = taylor_weights(dt, n)
    return [math.fsum(z[k] * w[k - m] for k in range(m, n)) for m in range(n)]


def advance(
    z: Sequence[float], dt: float, t: float, f: float, gains: Sequence[float]
) -> tuple[list[float], float]:
    """One recurrence step on plain floats. Returns (new z, residual)."""
    p = predict(z, dt)
    eps = f - p[0]
    w = dt * eps
    out = p
    for m, g in enumerate(gains):
        w /= t
        out[m] = p[m] + g * w
    return out, eps


def advance_batch(
    z: np.ndarray, dt: float, t: float, f: np.ndarray, gains: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`advance` over a leading batch axis; ``z`` has shape (..., n)."""
    n = z.shape[-1]
    w = taylor_weights(dt, n)
    p = np.empty_like(z)
    for m in range(n):
        acc = z[..., n - 1] * w[n - 1 - m]
        for k in range(n - 2, m - 1, -1):
            acc = acc + z[..., k] * w[k - m]
        p[..., m] = acc
    eps = f - p[..., 0]
    c = dt * eps
    for m, g in enumerate(gains):
        c = c / t
        p[..., m] += g * c
    return p, eps


def update_with_residual(
    state: DifferentiatorState, sample: Sample
) -> tuple[DifferentiatorState, float]:
    t, f = float(sample[0]), float(sample[1])
    _check_finite(t, f)
    if t <= state.t:
        raise NonMonotoneTimeError(f"sample time {t} not after state time {state.t}")
    if t == 0:
        raise ZeroTimeError("cannot update at t=0; use init for the first sample")
    if state.skip_repeats and state.last_f is not None and f == state.last_f:
        return state, 0.0
    z, eps = advance(state.z, t - state.t, t, f, state.gains.gains_float)
    if not all(math.isfinite(v) for v in z):
        raise FloatingPointError(f"non-finite estimate after update at t={t}")
    new = replace(state, t=t, z=tuple(z), samples_seen=state.samples_seen + 1, last_f=f)
    return new, eps


def update(state: DifferentiatorState, sample: Sample) -> DifferentiatorState:
    return update_with_residual(state, sample)[0]


def state_error(state: DifferentiatorState, truth: Sequence[float]) -> list[float]:
    """Elementwise ``z - truth``; ``truth`` holds the exact derivatives at ``state.t``."""
    if len(truth) != state.order:
        raise ValueError(f"truth has {len(truth)} entries, expected {state.order}")
    return [z - v for z, v in zip(state.z, truth)]


class Differentiator:
    """Mutable convenience wrapper around the functional API.

    >>> d = Differentiator(1)
    >>> for t, f in enumerate([3.0, 1.0, 2.0, 3.0]):
    ...     _ = d.push(t, f)
    >>> d.z
    (2.0,)
    """

    def __init__(self, order: int | DifferentiatorConfig):
        self.config = order if isinstance(order, DifferentiatorConfig) else DifferentiatorConfig(order)
        self.state: DifferentiatorState | None = None

    @classmethod
    def from_state(cls, state: DifferentiatorState) -> "Differentiator":
        d = cls(DifferentiatorConfig(state.order, skip_repeats=state.skip_repeats))
        d.state = state
        return d

    @property
    def z(self) -> tuple[float, ...]:
        if self.state is None:
            raise RuntimeError("no samples yet")
        return self.state.z

    def push(self, t: float, f: float) -> float:
        """Feed one sample; returns the residual (0.0 for the first sample)."""
        if self.state is None:
            self.state = init(self.config, Sample(t, f))
            return 0.0
        self.state, eps = update_with_residual(self.state, Sample(t, f))
        return eps

    def run(self, samples: Iterable[tuple[float, float]]) -> "Differentiator":
        for t, f in samples:
            self.push(t, f)
        return self


def run_uniform(order: int, values: Sequence[float], dt: float = 1.0, t0: float = 0.0) -> np.ndarray:
    """Differentiate a uniformly sampled series; returns the (len(values), n) estimate history."""
    d = Differentiator(DifferentiatorConfig(order, t0=t0))
    out = np.empty((len(values), order))
    for i, f in enumerate(values):
        d.push(t0 + i * dt, f)
        out[i] = d.z
    return out
