"""Polynomial models built from a snapshot of the estimates.

A snapshot ``z`` taken at time ``t`` is the derivative vector of a
polynomial of degree n-1 centred at ``t``. :class:`TaylorModel` evaluates that
polynomial (and its derivatives) anywhere, which covers both interpolation
inside the processed range and extrapolation beyond it, and re-expands it
about zero to recover global coefficients ``f(t) ~ sum_j K_j t**j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DifferentiatorState


@dataclass(frozen=True)
class TaylorModel:
    anchor_t: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("model needs at least one coefficient")
        if not (math.isfinite(self.anchor_t) and all(math.isfinite(c) for c in self.coeffs)):
            raise ValueError("model coefficients must be finite")

    @classmethod
    def capture(cls, state: DifferentiatorState) -> "TaylorModel":
        return cls(state.t, state.z)

    @property
    def order_param(self) -> int:
        return len(self.coeffs)

    def __call__(self, tau):
        return eval_derivative(self, 0, tau)

    def derivative_vector(self, tau: float) -> list[float]:
        return [eval_derivative(self, j, tau) for j in range(self.order_param)]

    def shifted(self, tau: float) -> "TaylorModel":
        """The same polynomial re-anchored at ``tau``."""
        return TaylorModel(tau, self.derivative_vector(tau))


def eval_derivative(model: TaylorModel, m_minus_1: int, tau):
    """Derivative ``m_minus_1`` of the model polynomial at ``tau`` (scalar or array).

    Horner form over ``s = tau - anchor``:
    ``z_j + s*(z_{j+1} + s/2*(z_{j+2} + s/3*(...)))``.
    """
    n = model.order_param
    if not 0 <= m_minus_1 < n:
        raise IndexError(f"derivative index {m_minus_1} outside 0..{n - 1}")
    s = np.asarray(tau, dtype=float) - model.anchor_t
    z = model.coeffs
    acc = z[n - 1] + 0.0 * s
    for k in range(n - 2, m_minus_1 - 1, -1):
        acc = z[k] + acc * s / (k - m_minus_1 + 1)
    return float(acc) if acc.ndim == 0 else acc


def extract_poly_coeffs(model: TaylorModel) -> list[float]:
    """Global coefficients ``K_j = (1/j!) sum_{i>=j} (-t)**(i-j)/(i-j)! * z_i``.

    The alternating terms grow like ``t**(n-1)``; each sum is taken with
    ``math.fsum`` so cancellation costs no more than the rounding of the
    individual terms.
    """
    t = model.anchor_t
    z = model.coeffs
    n = len(z)
    # (-t)**k / k! by running product
    w = [1.0] * n
    for k in range(1, n):
        w[k] = w[k - 1] * (-t) / k
    out = []
    inv_fact = 1.0
    for j in range(n):
        if j:
            inv_fact /= j
        out.append(inv_fact * math.fsum(w[i - j] * z[i] for i in range(j, n)))
    return out


def coeffs_polynomial(coeffs: Sequence[float], tau):
    """``sum_j K_j tau**j`` by Horner."""
    tau = np.asarray(tau, dtype=float)
    acc = 0.0 * tau
    for c in reversed(coeffs):
        acc = acc * tau + c
    return float(acc) if acc.ndim == 0 else acc


def extrapolation_table(model: TaylorModel, start: float, stop: float, step: float) -> np.ndarray:
    """Rows ``(tau, f^(0)(tau), ..., f^(n-1)(tau))`` for tau in ``[start, stop]``."""
    if not step > 0 or stop < start:
        raise ValueError("extrapolation range must satisfy start <= stop and step > 0")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    taus = start + step * np.arange(count)
    cols = [eval_derivative(model, j, taus) for j in range(model.order_param)]
    return np.column_stack([taus] + cols)
