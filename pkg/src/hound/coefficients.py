"""Exact order-dependent constants of the differentiator.

Everything here is computed with Python integers and ``fractions.Fraction``;
no floating point enters until :attr:`GainTable.gains_float` is read.

Indexing follows the 1-based (m, d) convention of the formulas in the
docstrings, stored in 0-based lists: ``a[m - 1][d - 1]`` is a_{m,d,n}.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Sequence

MAX_ORDER = 32
DEFAULT_IDENTITY_ORDER = 16


class OrderError(ValueError):
    """Order parameter or channel index outside the supported range."""


class SingularMatrixError(ArithmeticError):
    pass


def _check_order(n: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool):
        raise OrderError(f"order must be an int, got {n!r}")
    if not 1 <= n <= MAX_ORDER:
        raise OrderError(f"order n={n} outside 1..{MAX_ORDER}")


def _check_index(name: str, k: int, n: int) -> None:
    if not isinstance(k, int) or not 1 <= k <= n:
        raise OrderError(f"{name}={k!r} outside 1..{n}")


def gain(n: int, m: int) -> int:
    """Time-free observer gain ``(n+m-1)! * n / (m! (n-m)!)`` for channel m.

    The value is always an integer; at runtime it is divided by ``t**m``.

    >>> [gain(5, m) for m in range(1, 6)]
    [25, 300, 2100, 8400, 15120]
    """
    _check_order(n)
    _check_index("m", m, n)
    num = factorial(n + m - 1) * n
    den = factorial(m) * factorial(n - m)
    q, r = divmod(num, den)
    assert r == 0
    return q


@lru_cache(maxsize=None)
def _a_table(n: int) -> tuple[tuple[int, ...], ...]:
    rows = [[1] * n]
    for m in range(1, n):
        g = gain(n, m)
        prev = rows[-1]
        rows.append([-(d + m - 1) * prev[d - 1] + g for d in range(1, n + 1)])
    return tuple(tuple(r) for r in rows)


def a_coeff_table(n: int) -> list[list[int]]:
    """Error-mode weights a_{m,d,n} for m, d = 1..n.

    Row 1 is all ones; each following row comes from
    ``a_{m+1,d} = -(d+m-1) a_{m,d} + gain(n, m)``.
    """
    _check_order(n)
    return [list(r) for r in _a_table(n)]


def a_recurrence_tail(n: int) -> list[int]:
    """Apply the a-recurrence once past row n; every entry should be zero."""
    _check_order(n)
    last = _a_table(n)[-1]
    g = gain(n, n)
    return [-(d + n - 1) * last[d - 1] + g for d in range(1, n + 1)]


def b_coeff(d: int, n: int) -> int:
    """Forcing-integral scale ``b_{d,n} = (n-d)! (d-1)!``."""
    _check_order(n)
    _check_index("d", d, n)
    return factorial(n - d) * factorial(d - 1)


@dataclass(frozen=True)
class CharPoly:
    """Characteristic polynomial of the error equation; ``coeffs[k]`` multiplies λ**k."""

    order: int
    coeffs: tuple[int, ...]

    def __call__(self, lam):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * lam + c
        return acc

    def roots(self) -> list[int]:
        return [-k for k in range(1, self.order + 1) if self(-k) == 0]


@lru_cache(maxsize=None)
def stirling1_signed(n: int, k: int) -> int:
    """Signed Stirling number of the first kind s(n, k).

    Coefficient of λ**k in the falling factorial λ(λ-1)...(λ-n+1).
    """
    if n == k:
        return 1
    if n == 0 or k == 0 or k > n:
        return 0
    return stirling1_signed(n - 1, k - 1) - (n - 1) * stirling1_signed(n - 1, k)


def stirling1_unsigned(n: int, k: int) -> int:
    return abs(stirling1_signed(n, k))


def char_poly(n: int) -> CharPoly:
    """Expand ``sum_d (n!/d!) C(n,d) λ(λ-1)...(λ-d+1)`` in powers of λ."""
    _check_order(n)
    coeffs = [0] * (n + 1)
    for d in range(n + 1):
        w = factorial(n) // factorial(d) * comb(n, d)
        for k in range(d + 1):
            coeffs[k] += w * stirling1_signed(d, k)
    return CharPoly(n, tuple(coeffs))


def rising_product_coeffs(n: int) -> list[int]:
    """Coefficients of ``(λ+1)(λ+2)...(λ+n)`` by direct polynomial multiplication."""
    coeffs = [1]
    for k in range(1, n + 1):
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] += k * c
            nxt[i + 1] += c
        coeffs = nxt
    return coeffs


def superfactorial(n: int) -> int:
    """``prod_{k=0}^{n} k!``."""
    out = 1
    for k in range(n + 1):
        out *= factorial(k)
    return out


def det_exact(matrix: Sequence[Sequence[int | Fraction]]) -> Fraction:
    """Determinant by Gaussian elimination over the rationals."""
    a = [[Fraction(x) for x in row] for row in matrix]
    size = len(a)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        p = a[col][col]
        det *= p
        for r in range(col + 1, size):
            f = a[r][col] / p
            if f:
                for c in range(col, size):
                    a[r][c] -= f * a[col][c]
    return det


def solve_exact(
    matrix: Sequence[Sequence[int | Fraction]], rhs: Sequence[int | Fraction]
) -> list[Fraction]:
    """Solve ``matrix @ x = rhs`` exactly (Gauss-Jordan with row pivoting)."""
    size = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError(f"singular system at column {col}")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[r][size] for r in range(size)]


def det_a(n: int) -> Fraction:
    return det_exact(a_coeff_table(n))


def expected_det_a(n: int) -> int:
    return (-1) ** (n // 2) * superfactorial(n - 1)


def verify_det_identity(n: int) -> bool:
    """Check ``det(A) == (-1)**(n//2) * prod_{k<n} k!``.

    det(A D) carries an extra ``t**(n(n-1)/2)`` from the diagonal D, which
    cancels from both sides and is not evaluated.
    """
    return det_a(n) == expected_det_a(n)


def solve_variation_system(n: int) -> list[Fraction]:
    """Coefficients x_d with ``dC_d/dt = x_d * t**(d+n-1) * f^(n)(t)``.

    With the t-powers factored out, the variation-of-constants system
    reduces to ``A x = -e_n``. Should equal ``(-1)**d / b_{d,n}``.
    """
    _check_order(n)
    rhs = [0] * (n - 1) + [-1]
    return solve_exact(a_coeff_table(n), rhs)


def alternating_sums(n: int) -> list[Fraction]:
    """``sum_d (-1)**d a_{m,d,n} / b_{d,n}`` for m = 1..n."""
    a = a_coeff_table(n)
    b = [b_coeff(d, n) for d in range(1, n + 1)]
    return [
        sum((Fraction((-1) ** d * row[d - 1], b[d - 1]) for d in range(1, n + 1)), Fraction(0))
        for row in a
    ]


@dataclass(frozen=True)
class GainTable:
    """Per-order constants, computed exactly once and shared read-only."""

    order: int
    gains: tuple[int, ...]
    a: tuple[tuple[int, ...], ...]
    b: tuple[int, ...]
    gains_float: tuple[float, ...] = field(repr=False)

    @classmethod
    def build(cls, n: int) -> "GainTable":
        gains = tuple(gain(n, m) for m in range(1, n + 1))
        return cls(
            order=n,
            gains=gains,
            a=_a_table(n),
            b=tuple(b_coeff(d, n) for d in range(1, n + 1)),
            gains_float=tuple(float(g) for g in gains),
        )

    def checksum(self) -> str:
        """Short digest of the exact gains, for detecting config drift downstream."""
        text = f"{self.order}:" + ",".join(str(g) for g in self.gains)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@lru_cache(maxsize=None)
def gain_table(n: int) -> GainTable:
    _check_order(n)
    return GainTable.build(n)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    order: int
    passed: bool
    detail: str = ""


def identity_suite(max_order: int = DEFAULT_IDENTITY_ORDER) -> list[IdentityResult]:
    """Run every exact identity for n = 1..max_order."""
    if max_order < 1:
        raise OrderError(f"max_order must be >= 1, got {max_order}")
    _check_order(max_order)
    results = []
    for n in range(1, max_order + 1):
        cp = char_poly(n)
        prod = rising_product_coeffs(n)
        stir = [stirling1_unsigned(n + 1, k + 1) for k in range(n + 1)]
        results.append(
            IdentityResult("char_poly", n, list(cp.coeffs) == prod == stir, f"coeffs={list(cp.coeffs)}")
        )

        sums = alternating_sums(n)
        want = [Fraction(0)] * (n - 1) + [Fraction(-1)]
        results.append(IdentityResult("alternating_sum", n, sums == want, f"sums={[str(s) for s in sums]}"))

        det = det_a(n)
        results.append(
            IdentityResult("determinant", n, det == expected_det_a(n), f"det={det} expected={expected_det_a(n)}")
        )

        x = solve_variation_system(n)
        bx = [Fraction((-1) ** d, b_coeff(d, n)) for d in range(1, n + 1)]
        results.append(IdentityResult("variation_system", n, x == bx, f"x={[str(v) for v in x]}"))

        a = a_coeff_table(n)
        positive = all(v > 0 for row in a for v in row) and all(v == 1 for v in a[0])
        tail = a_recurrence_tail(n)
        results.append(
            IdentityResult("a_recurrence", n, positive and not any(tail), f"tail={tail}")
        )
    return results
