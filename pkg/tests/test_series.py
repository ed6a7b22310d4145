import numpy as np
import pytest
from hypothesis import given, strategies as st

from smero.errors import BasepointMismatch
from smero.frobenius import frobenius_solution
from smero.potential import inverse_square
from smero.series import (EXACT, LaurentSeries, coefficient_at, laurent_from_samples,
                          principal_part, regular_part, series_mul)

y = LaurentSeries.monomial


def S(d, trunc=EXACT, base=0.0):
    return LaurentSeries(base, d, trunc)


def test_monomial_products():
    assert series_mul(y(-1), y(-1)).coeffs == {-2: 1}
    assert series_mul(S({-1: 1, 1: 1}), S({-1: 1, 1: -1})).coeffs == {-2: 1, 2: -1}


def test_lambda_zero_solutions_product():
    prod = series_mul(y(-1), y(2))
    assert prod.coeffs == {1: 1}
    assert coefficient_at(prod, -1) == 0


def test_coefficient_at():
    assert coefficient_at(y(-2), -1) == 0
    assert coefficient_at(S({-1: 3, 1: 1}), -1) == 3


def test_frobenius_square_has_no_residue():
    f = frobenius_solution(inverse_square(1), 0.0, 1.0, "lower", 20)
    assert abs(coefficient_at(series_mul(f, f), -1)) < 1e-15


def test_principal_part():
    assert principal_part(S({-2: 1, 0: 1, 1: 1})).coeffs == {-2: 1}
    assert principal_part(S({0: 1, 1: 1})).coeffs == {}
    f = frobenius_solution(inverse_square(1), 0.0, 1.0, "lower", 20)
    assert principal_part(f).coeffs == {-1: 1}
    assert regular_part(f)[1] == pytest.approx(0.5)


def test_truncation_propagates():
    a = S({-1: 1, 0: 2}, trunc=3)
    b = S({-2: 1}, trunc=EXACT)
    p = series_mul(a, b)
    assert p.trunc == 1
    assert p.coeffs == {-3: 1, -2: 2}
    assert (a + S({5: 1})).trunc == 3


def test_coefficient_beyond_truncation_raises():
    with pytest.raises(Exception):
        coefficient_at(S({0: 1}, trunc=2), 4)


def test_basepoint_mismatch():
    with pytest.raises(BasepointMismatch):
        series_mul(S({0: 1}), S({0: 1}, base=1.0))


def test_derivative_and_eval():
    s = S({-1: 1, 2: 3})
    assert s.derivative().coeffs == {-2: -1, 1: 6}
    assert s(0.5) == pytest.approx(2 + 0.75)


def test_json_roundtrip():
    s = S({-3: 1 + 2j, 4: -0.5}, trunc=9, base=0.25)
    assert LaurentSeries.from_json(s.to_json()) == s


def test_laurent_from_samples_recovers_cot():
    s = laurent_from_samples(lambda z: 1 / np.tan(z), 0.0, 0.5, -1, 8)
    assert s[-1] == pytest.approx(1, abs=1e-12)
    assert s[1] == pytest.approx(-1 / 3, abs=1e-12)
    assert s[3] == pytest.approx(-1 / 45, abs=1e-12)


coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
series = st.dictionaries(st.integers(-4, 6), coef, max_size=6).map(lambda d: S(d, trunc=8))


@given(series, series, series)
def test_product_associative_commutative(a, b, c):
    ab_c = series_mul(series_mul(a, b), c)
    a_bc = series_mul(a, series_mul(b, c))
    assert ab_c.trunc == a_bc.trunc
    for e in range(-12, ab_c.trunc):
        assert abs(ab_c[e] - a_bc[e]) <= 1e-9 * (1 + abs(ab_c[e]))
    ab, ba = series_mul(a, b), series_mul(b, a)
    for e in range(-8, ab.trunc):
        assert abs(ab[e] - ba[e]) <= 1e-12 * (1 + abs(ab[e]))


@given(series, series, series)
def test_product_distributes(a, b, c):
    lhs = series_mul(a, b + c)
    rhs = series_mul(a, b) + series_mul(a, c)
    for e in range(-8, lhs.trunc):
        assert abs(lhs[e] - rhs[e]) <= 1e-9 * (1 + abs(lhs[e]))


@given(series)
def test_principal_plus_regular(s):
    t = principal_part(s) + regular_part(s)
    for e in range(-6, s.trunc):
        assert t[e] == s[e]
