from fractions import Fraction
from itertools import permutations
from math import prod

import pytest
import sympy
from sympy.functions.combinatorial.numbers import stirling

from hound.coefficients import (
    MAX_ORDER,
    GainTable,
    OrderError,
    SingularMatrixError,
    a_coeff_table,
    a_recurrence_tail,
    alternating_sums,
    b_coeff,
    char_poly,
    det_a,
    det_exact,
    gain,
    gain_table,
    identity_suite,
    rising_product_coeffs,
    solve_exact,
    solve_variation_system,
    superfactorial,
    verify_det_identity,
)

N_MAX = 16


@pytest.mark.parametrize(
    "n, expected",
    [
        (1, [1]),
        (2, [4, 6]),
        (3, [9, 36, 60]),
        (5, [25, 300, 2100, 8400, 15120]),
    ],
)
def test_gain_values(n, expected):
    assert [gain(n, m) for m in range(1, n + 1)] == expected


@pytest.mark.parametrize("n, m", [(0, 1), (3, 0), (3, 4), (MAX_ORDER + 1, 1)])
def test_gain_out_of_range(n, m):
    with pytest.raises(OrderError):
        gain(n, m)


def test_a_table_examples():
    assert a_coeff_table(1) == [[1]]
    assert a_coeff_table(2) == [[1, 1], [3, 2]]
    assert a_coeff_table(3) == [[1, 1, 1], [8, 7, 6], [20, 15, 12]]


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_a_table_positive_and_first_row(n):
    a = a_coeff_table(n)
    assert a[0] == [1] * n
    assert all(v > 0 for row in a for v in row)


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_a_recurrence_terminates_at_zero(n):
    # one more step of the recurrence lands on the k > n zero row
    assert a_recurrence_tail(n) == [0] * n


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_gain_drives_recurrence(n):
    a = a_coeff_table(n)
    for m in range(1, n):
        for d in range(1, n + 1):
            assert a[m][d - 1] + (d + m - 1) * a[m - 1][d - 1] == gain(n, m)


def test_b_examples():
    assert [b_coeff(d, 3) for d in (1, 2, 3)] == [2, 1, 2]
    assert b_coeff(1, 1) == 1
    assert [b_coeff(d, 5) for d in range(1, 6)] == [24, 6, 4, 6, 24]


def test_b_out_of_range():
    with pytest.raises(OrderError):
        b_coeff(0, 3)
    with pytest.raises(OrderError):
        b_coeff(4, 3)


def test_b_n5_matches_linear_solve():
    x = solve_variation_system(5)
    assert [Fraction((-1) ** d, b) for d, b in zip(range(1, 6), [24, 6, 4, 6, 24])] == x


@pytest.mark.parametrize(
    "n, coeffs", [(1, (1, 1)), (2, (2, 3, 1)), (3, (6, 11, 6, 1))]
)
def test_char_poly_examples(n, coeffs):
    cp = char_poly(n)
    assert cp.coeffs == coeffs
    assert cp.roots() == [-k for k in range(1, n + 1)]


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_char_poly_against_sympy(n):
    lam = sympy.symbols("lam")
    expanded = sympy.Poly(sympy.prod([lam + k for k in range(1, n + 1)]), lam)
    want = [int(expanded.coeff_monomial(lam**k)) for k in range(n + 1)]
    assert list(char_poly(n).coeffs) == want == rising_product_coeffs(n)
    assert want == [int(stirling(n + 1, k + 1, kind=1, signed=False)) for k in range(n + 1)]


def _det_leibniz(m):
    size = len(m)
    total = 0
    for perm in permutations(range(size)):
        inv = sum(1 for i in range(size) for j in range(i + 1, size) if perm[i] > perm[j])
        total += (-1) ** inv * prod(m[i][perm[i]] for i in range(size))
    return total


def test_det_examples():
    assert det_a(1) == 1
    assert det_a(2) == -1
    assert _det_leibniz([[1, 1, 1], [8, 7, 6], [20, 15, 12]]) == -2
    assert det_a(3) == -2


@pytest.mark.parametrize("n", range(1, 7))
def test_det_gauss_matches_leibniz(n):
    assert det_a(n) == _det_leibniz(a_coeff_table(n))


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_det_identity(n):
    assert verify_det_identity(n)
    assert abs(det_a(n)) == superfactorial(n - 1)


def test_variation_system_examples():
    assert solve_variation_system(1) == [-1]
    assert solve_variation_system(2) == [-1, 1]
    assert solve_variation_system(3) == [Fraction(-1, 2), 1, Fraction(-1, 2)]


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_variation_system_matches_b(n):
    x = solve_variation_system(n)
    assert x == [Fraction((-1) ** d, b_coeff(d, n)) for d in range(1, n + 1)]


@pytest.mark.parametrize("n", range(1, N_MAX + 1))
def test_alternating_sum(n):
    assert alternating_sums(n) == [0] * (n - 1) + [-1]


def test_solve_exact_singular():
    with pytest.raises(SingularMatrixError):
        solve_exact([[1, 2], [2, 4]], [1, 1])
    assert det_exact([[1, 2], [2, 4]]) == 0


def test_solve_exact_against_sympy():
    m = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    rhs = [1, 2, 3]
    want = sympy.Matrix(m).LUsolve(sympy.Matrix(rhs))
    assert solve_exact(m, rhs) == [Fraction(int(v.p), int(v.q)) for v in want]


def test_gain_table():
    g = gain_table(3)
    assert isinstance(g, GainTable)
    assert g.gains == (9, 36, 60)
    assert g.gains_float == (9.0, 36.0, 60.0)
    assert g.a[1] == (8, 7, 6)
    assert g.b == (2, 1, 2)
    assert g.checksum() == GainTable.build(3).checksum()
    assert g.checksum() != gain_table(4).checksum()


def test_identity_suite_all_pass():
    results = identity_suite(12)
    assert len(results) == 12 * 5
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_identity_suite_rejects_bad_order():
    with pytest.raises(OrderError):
        identity_suite(0)
