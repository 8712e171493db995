"""Continuous-time reference for the differentiator.

The continuous system is

    z'_{m-1}(t) = z_m(t) - gain(n, m) / t**m * (z_0(t) - f(t)),   z_n = 0,

integrated here with fixed-step classical RK4. Its error ``e = z - f^(.)``
has the explicit solution

    e_{m-1}(t) = sum_d a_{m,d} / t**(d+m-1) * (c_d + (-1)**d / b_d * I_d(t)),
    I_d(t) = int_{t0}^{t} tau**(d+n-1) f^(n)(tau) dtau,

which :func:`closed_form_errors` evaluates. The discrete recurrence, the RK4
trajectory and the closed form are three independent routes to the same
quantity and are cross-checked by :func:`consistency_suite`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

import numpy as np

from .coefficients import GainTable, SingularMatrixError, gain_table, solve_exact
from .core import Differentiator, DifferentiatorConfig
from .signals import SignalSpec, derivative


class DivergenceError(FloatingPointError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t={t}; integrator step too large")
        self.t = t


@dataclass(frozen=True)
class ContinuousRun:
    n: int
    signal: SignalSpec
    t0: float = 1.0
    step: float | None = None
    z0_init: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError(f"t0 must be > 0 (the system is singular at t=0), got {self.t0}")
        if self.step is not None and not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if self.z0_init is not None and len(self.z0_init) != self.n:
            raise ValueError(f"z0_init needs {self.n} entries")

    @property
    def h(self) -> float:
        return self.step if self.step is not None else 1e-3 * self.t0

    def initial_state(self) -> list[float]:
        if self.z0_init is not None:
            return [float(v) for v in self.z0_init]
        return [float(derivative(self.signal, self.t0, 0))] + [0.0] * (self.n - 1)


@dataclass
class Trajectory:
    t: np.ndarray
    z: np.ndarray  # shape (len(t), n)

    def errors(self, signal: SignalSpec) -> np.ndarray:
        n = self.z.shape[1]
        truth = np.stack([np.asarray(derivative(signal, self.t, m), dtype=float) for m in range(n)], axis=1)
        return self.z - truth


def integrate_continuous(run: ContinuousRun, t_end: float, record_every: int = 1) -> Trajectory:
    """Classical RK4 from ``run.t0`` to ``t_end`` with fixed step.

    The last step is shortened if ``t_end - t0`` is not a multiple of the step.
    Every ``record_every``-th step is kept, plus the final point.
    """
    if not t_end > run.t0:
        raise ValueError(f"t_end={t_end} must exceed t0={run.t0}")
    n, t0, h = run.n, run.t0, run.h
    steps = int(math.ceil((t_end - t0) / h - 1e-9))
    grid = t0 + h * np.arange(steps + 1)
    grid[-1] = t_end
    mids = 0.5 * (grid[:-1] + grid[1:])
    f_grid = np.asarray(derivative(run.signal, grid, 0), dtype=float).tolist()
    f_mid = np.asarray(derivative(run.signal, mids, 0), dtype=float).tolist()
    g = gain_table(n).gains_float
    tl = grid.tolist()
    ml = mids.tolist()

    def rhs(t, z, f):
        r = (z[0] - f) / t
        out = [0.0] * n
        for m in range(n):
            nxt = z[m + 1] if m + 1 < n else 0.0
            out[m] = nxt - g[m] * r
            r /= t
        return out

    z = run.initial_state()
    keep_t = [t0]
    keep_z = [list(z)]
    for i in range(steps):
        t, hh = tl[i], tl[i + 1] - tl[i]
        k1 = rhs(t, z, f_grid[i])
        y = [a + 0.5 * hh * b for a, b in zip(z, k1)]
        k2 = rhs(ml[i], y, f_mid[i])
        y = [a + 0.5 * hh * b for a, b in zip(z, k2)]
        k3 = rhs(ml[i], y, f_mid[i])
        y = [a + hh * b for a, b in zip(z, k3)]
        k4 = rhs(tl[i + 1], y, f_grid[i + 1])
        z = [a + hh / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(z, k1, k2, k3, k4)]
        if not all(math.isfinite(v) for v in z):
            raise DivergenceError(tl[i + 1])
        if (i + 1) % record_every == 0 or i + 1 == steps:
            keep_t.append(tl[i + 1])
            keep_z.append(z)
    return Trajectory(np.array(keep_t), np.array(keep_z))


def closed_form_errors(
    n: int,
    gains: GainTable,
    c: Sequence[float],
    t: float,
    integral_terms: Sequence[float] | None = None,
) -> list[float]:
    """Evaluate the explicit error solution at ``t``.

    ``integral_terms[d-1]`` is ``I_d(t)``; pass None (all zero) for polynomial
    signals of degree < n.
    """
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    if gains.order != n:
        raise ValueError(f"gain table is for order {gains.order}, not {n}")
    integral_terms = [0.0] * n if integral_terms is None else integral_terms
    inner = [c[d] + (-1) ** (d + 1) / gains.b[d] * integral_terms[d] for d in range(n)]
    out = []
    for m in range(1, n + 1):
        row = gains.a[m - 1]
        out.append(math.fsum(row[d - 1] * inner[d - 1] / t ** (d + m - 1) for d in range(1, n + 1)))
    return out


def fit_constants_from_state(n: int, gains: GainTable, t0: float, e_at_t0: Sequence[float]) -> list[float]:
    """Integration constants c_d matching the errors ``e_at_t0`` at ``t0``.

    Substituting ``y_d = c_d / t0**d`` turns the system into
    ``A y = (e_{m-1} * t0**(m-1))_m``, which is solved exactly over the
    rationals; A is nonsingular because its determinant is a signed
    superfactorial.
    """
    if not t0 > 0:
        raise ValueError(f"t0 must be > 0, got {t0}")
    if len(e_at_t0) != n:
        raise ValueError(f"expected {n} errors, got {len(e_at_t0)}")
    t0q = Fraction(t0)
    rhs = [Fraction(e_at_t0[m]) * t0q**m for m in range(n)]
    try:
        y = solve_exact(gains.a, rhs)
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"cannot fit constants at t0={t0}: {exc}") from exc
    return [float(y[d] * t0q ** (d + 1)) for d in range(n)]


def _poly_antiderivative_eval(coeffs: Sequence[float], a: float, b: float) -> float:
    """``int_a^b sum_k coeffs[k] tau**k dtau``."""
    return math.fsum(ck / (k + 1) * (b ** (k + 1) - a ** (k + 1)) for k, ck in enumerate(coeffs) if ck)


def _gauss_legendre(func, a: float, b: float, panels: int, nodes: int = 10) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = mid[:, None] + half[:, None] * x[None, :]
    return float(np.sum(half[:, None] * w[None, :] * func(pts)))


def forcing_integrals(signal: SignalSpec, n: int, t0: float, t: float, panels: int | None = None) -> list[float]:
    """``I_d = int_{t0}^{t} tau**(d+n-1) f^(n)(tau) dtau`` for d = 1..n.

    The polynomial part of ``f^(n)`` is integrated exactly; harmonic terms use
    composite Gauss-Legendre with at least 64 panels.
    """
    poly_n = [
        signal.poly[j] * (factorial(j) // factorial(j - n)) for j in range(n, len(signal.poly))
    ]
    out = []
    if signal.harmonics and panels is None:
        w_max = max(abs(h[1]) for h in signal.harmonics)
        panels = max(64, int(math.ceil(abs(t - t0) * w_max / math.pi)))
    for d in range(1, n + 1):
        p = d + n - 1
        total = _poly_antiderivative_eval([0.0] * p + poly_n, t0, t) if poly_n else 0.0
        if signal.harmonics:
            harm = SignalSpec(harmonics=signal.harmonics)
            total += _gauss_legendre(lambda s: s**p * derivative(harm, s, n), t0, t, panels)
        out.append(total)
    return out


@dataclass(frozen=True)
class ErrorBoundParams:
    """Inputs of the Lipschitz error bound; ``L`` bounds ``|f^(n-1)|``."""

    L: float
    c_abs: tuple[float, ...]
    t0: float
    gains: GainTable

    def __post_init__(self):
        if not (self.L >= 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be finite and >= 0, got {self.L}")
        if not self.t0 > 0:
            raise ValueError(f"t0 must be > 0, got {self.t0}")
        if len(self.c_abs) != self.gains.order:
            raise ValueError("c_abs length must equal the order")
        object.__setattr__(self, "c_abs", tuple(abs(float(v)) for v in self.c_abs))


def error_bound(params: ErrorBoundParams, m: int, t):
    """Upper bound on ``|e_{m-1}(t)|`` (m is 1-based); tends to 2L as t grows.

    ``t`` may be a scalar or an array.
    """
    g = params.gains
    n = g.order
    if not 1 <= m <= n:
        raise ValueError(f"m={m} outside 1..{n}")
    ts = np.asarray(t, dtype=float)
    if np.any(ts < params.t0):
        raise ValueError(f"t precedes t0={params.t0}")
    two_l = 2.0 * params.L
    row = g.a[m - 1]
    out = np.full(ts.shape, two_l)
    for d in range(1, n + 1):
        k = params.c_abs[d - 1] + params.t0 ** (d + n - 1) * two_l / g.b[d - 1]
        out = out + row[d - 1] * k / ts ** (d + m - 1)
    return float(out) if out.ndim == 0 else out


# --- consistency checks ---------------------------------------------------


def discrete_trajectory(signal: SignalSpec, n: int, t0: float, t_end: float, h: float) -> Trajectory:
    """Discrete recurrence on the lattice ``t0 + k*h`` with the default initial state."""
    steps = int(round((t_end - t0) / h))
    ts = t0 + h * np.arange(steps + 1)
    fs = np.asarray(derivative(signal, ts, 0), dtype=float)
    d = Differentiator(DifferentiatorConfig(n))
    zs = np.empty((len(ts), n))
    for i, (t, f) in enumerate(zip(ts.tolist(), fs.tolist())):
        d.push(t, f)
        zs[i] = d.z
    return Trajectory(ts, zs)


def discrete_continuous_discrepancy(
    signal: SignalSpec, n: int, t0: float, t_end: float, h: float, fine: Trajectory
) -> float:
    """Max absolute difference over channels and shared times."""
    disc = discrete_trajectory(signal, n, t0, t_end, h)
    idx = np.searchsorted(fine.t, disc.t - 1e-9 * np.maximum(1.0, disc.t))
    idx = np.clip(idx, 0, len(fine.t) - 1)
    if np.max(np.abs(fine.t[idx] - disc.t)) > 1e-7:
        raise ValueError("fine trajectory does not contain every discrete time")
    return float(np.max(np.abs(disc.z - fine.z[idx])))


def power_law_exponent(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(t), np.log(np.abs(y)), 1)[0])


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: str
    extra: dict = field(default_factory=dict)


def check_discretization_order(
    signal: SignalSpec | None = None, n: int = 3, t0: float = 1.0, t_end: float = 100.0,
    h: float = 0.02, fine_step: float = 1e-3, min_ratio: float = 1.8,
) -> CheckResult:
    signal = signal or SignalSpec(poly=(1.0, 2.0, 3.0))
    fine = integrate_continuous(ContinuousRun(n, signal, t0=t0, step=fine_step), t_end)
    coarse = discrete_continuous_discrepancy(signal, n, t0, t_end, h, fine)
    half = discrete_continuous_discrepancy(signal, n, t0, t_end, h / 2, fine)
    ratio = coarse / half
    return CheckResult("discretization_order", ratio >= min_ratio, ratio, f">= {min_ratio}",
                       {"max_discrepancy_h": coarse, "max_discrepancy_h/2": half})


def check_closed_form(signal: SignalSpec, n: int, t0: float = 1.0, t_end: float = 20.0,
                      step: float = 1e-3, rel_tol: float = 1e-6, points: int = 20) -> CheckResult:
    """RK4 error trajectory against the explicit solution with fitted constants."""
    run = ContinuousRun(n, signal, t0=t0, step=step)
    traj = integrate_continuous(run, t_end)
    err = traj.errors(signal)
    g = gain_table(n)
    c = fit_constants_from_state(n, g, t0, err[0].tolist())
    worst = 0.0
    for i in np.linspace(0, len(traj.t) - 1, points).astype(int)[1:]:
        t = float(traj.t[i])
        cf = closed_form_errors(n, g, c, t, forcing_integrals(signal, n, t0, t))
        for a, b in zip(err[i], cf):
            worst = max(worst, abs(a - b) / max(abs(b), 1e-12))
    return CheckResult(f"closed_form_n{n}", bool(worst <= rel_tol), worst, f"<= {rel_tol} rel")


def check_error_bound(n: int = 2, t0: float = 1.0, t_end: float = 500.0, step: float = 1e-3,
                      slack: float = 1e-6) -> CheckResult:
    """Observed errors on f = sin(t) never exceed the Lipschitz bound (L = 1)."""
    signal = SignalSpec(harmonics=((1.0, 1.0, 0.0),))
    traj = integrate_continuous(ContinuousRun(n, signal, t0=t0, step=step), t_end)
    err = traj.errors(signal)
    g = gain_table(n)
    c = fit_constants_from_state(n, g, t0, err[0].tolist())
    params = ErrorBoundParams(1.0, tuple(c), t0, g)
    worst = -math.inf
    for m in range(1, n + 1):
        bounds = error_bound(params, m, traj.t)
        worst = max(worst, float(np.max(np.abs(err[:, m - 1]) - bounds)))
    return CheckResult("error_bound", worst <= slack, worst, f"max(|e|-bound) <= {slack}")


def check_divergence(n: int = 2, t_end: float = 10000.0, t_fit: float = 100.0, tol: float = 0.2) -> CheckResult:
    """Growth exponents of each channel's error on f = t**n versus n - m + 1."""
    signal = SignalSpec(poly=(0.0,) * n + (1.0,))
    traj = discrete_trajectory(signal, n, 0.0, t_end, 1.0)
    err = traj.errors(signal)
    mask = traj.t >= t_fit
    exps = [power_law_exponent(traj.t[mask], err[mask, m]) for m in range(n)]
    want = [n - m for m in range(n)]
    worst = max(abs(a - b) for a, b in zip(exps, want))
    return CheckResult("divergence_exponent", worst <= tol, worst, f"|exp - (n-m+1)| <= {tol}",
                       {"exponents": exps})


def consistency_suite() -> list[CheckResult]:
    return [
        check_discretization_order(),
        check_closed_form(SignalSpec(poly=(1.0, 2.0, 3.0)), 3),
        check_closed_form(SignalSpec(poly=(0.0, 0.0, 0.0, 1.0)), 3),
        check_closed_form(SignalSpec(harmonics=((1.0, 1.0, 0.0),)), 2),
        check_error_bound(),
        check_divergence(),
    ]
