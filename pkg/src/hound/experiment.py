"""Reference run on a degree-4 polynomial with optional white noise.

Signal ``5 - 0.004 t + 0.0003 t^2 - 0.00002 t^3 + 0.000001 t^4`` sampled at
``t = 0, 1, ..., 20000`` and differentiated with n = 5.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import factorial
from pathlib import Path

import numpy as np

from .core import run_uniform
from .io import SignalConfig
from .signals import SignalSpec, derivative, samples, uniform_grid
from .taylor import TaylorModel, extract_poly_coeffs

DEMO_POLY = (5.0, -0.004, 0.0003, -0.00002, 0.000001)
DEMO_CONFIG = SignalConfig(SignalSpec(DEMO_POLY, noise_sigma=0.7, seed=20000), 0.0, 20000.0, 1.0)


def coeff_history(ts: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Global coefficient estimates at every step (plain sums; for plotting)."""
    n = z.shape[1]
    out = np.zeros_like(z)
    for j in range(n):
        for i in range(j, n):
            out[:, j] += (-ts) ** (i - j) / factorial(i - j) * z[:, i]
        out[:, j] /= factorial(j)
    return out


def envelope_decreasing(ts: np.ndarray, err: np.ndarray, t_lo: float, t_hi: float, windows: int = 5) -> bool:
    """True if the max of ``|err|`` over log-spaced windows of ``[t_lo, t_hi]`` strictly falls."""
    edges = np.geomspace(t_lo, t_hi, windows + 1)
    peaks = []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (ts >= a) & (ts <= b)
        peaks.append(np.max(np.abs(err[sel])))
    return bool(np.all(np.diff(peaks) < 0))


@dataclass
class ExperimentResult:
    spec: SignalSpec
    ts: np.ndarray
    f: np.ndarray
    z: np.ndarray
    truth: np.ndarray

    @property
    def errors(self) -> np.ndarray:
        return self.z - self.truth

    @property
    def model(self) -> TaylorModel:
        return TaylorModel(float(self.ts[-1]), tuple(self.z[-1]))

    @property
    def coeffs(self) -> list[float]:
        return extract_poly_coeffs(self.model)

    def write_tables(self, out_dir: Path, stride: int = 10, margin: float = 100.0) -> dict[str, Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        n = self.z.shape[1]
        model = self.model
        t_lo, t_hi = float(self.ts[0]), float(self.ts[-1])
        paths = {}

        def dump(name, header, rows):
            path = out_dir / f"{name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
            paths[name] = path

        keep = slice(None, None, max(1, stride))
        fhat = model(self.ts)
        dump("interpolation", ["t", "f", "f0", "f_hat"],
             np.column_stack([self.ts, self.f, self.truth[:, 0], fhat])[keep].tolist())
        for name, a, b in (("extrapolation_start", t_lo - margin, t_lo), ("extrapolation_end", t_hi, t_hi + margin)):
            tau = np.arange(a, b + 0.5)
            dump(name, ["tau", "f0", "f0_hat"],
                 np.column_stack([tau, derivative(self.spec, tau, 0), model(tau)]).tolist())
        dump("errors", ["t"] + [f"e{k}" for k in range(n)],
             np.column_stack([self.ts, self.errors])[keep].tolist())
        dump("coefficients", ["t"] + [f"K{k}" for k in range(n)],
             np.column_stack([self.ts, coeff_history(self.ts, self.z)])[keep].tolist())
        return paths


def run_experiment(
    spec: SignalSpec | None = None,
    order: int = 5,
    t_start: float = 0.0,
    t_end: float = 20000.0,
    dt: float = 1.0,
) -> ExperimentResult:
    spec = spec or DEMO_CONFIG.spec
    ts = uniform_grid(t_start, t_end, dt)
    f = samples(spec, ts)
    z = run_uniform(order, f.tolist(), dt=dt, t0=t_start)
    truth = np.stack([np.asarray(derivative(spec, ts, m), dtype=float) for m in range(order)], axis=1)
    return ExperimentResult(spec, ts, f, z, truth)
