import math

import pytest

from smero.errors import DependentSpan, LogTermRequired
from smero.frobenius import (canonical_basis, frobenius_solution, indicial_exponents,
                             is_smeromorphic, log_obstruction, ode_residual, pair_residue,
                             subspace_for_pole)
from smero.potential import (adler_moser, csc_squared, inverse_square, make_family,
                             rational_poles, singularity_profile)
from smero.series import LaurentSeries


def with_linear(alpha):
    return make_family({"family": "inverse_square", "n": 1, "background": {"poly": [0, alpha]}})


@pytest.mark.parametrize("n", [1, 2, 3])
def test_indicial(n):
    assert indicial_exponents(singularity_profile(inverse_square(n), 0.0)) == (-n, n + 1)


def test_lambda_zero_exact():
    u = inverse_square(1)
    assert frobenius_solution(u, 0.0, 0.0, "lower", 20).coeffs == {-1: 1}
    assert frobenius_solution(u, 0.0, 0.0, "upper", 20).coeffs == {2: 1}


def test_lower_matches_closed_form():
    # cos x / x + sin x solves -f'' + 2 f / x^2 = f
    f = frobenius_solution(inverse_square(1), 0.0, 1.0, "lower", 30)
    assert f[-1] == 1 and f[0] == 0 and f[2] == 0
    for m in range(0, 13):
        want = (-1) ** m * (2 * m + 1) / math.factorial(2 * m + 2)
        assert f[2 * m + 1] == pytest.approx(want, rel=1e-13, abs=1e-300)
    assert f[1] == pytest.approx(0.5) and f[3] == pytest.approx(-1 / 8)


def test_upper_matches_closed_form():
    # 3 (sin x / x - cos x)
    f = frobenius_solution(inverse_square(1), 0.0, 1.0, "upper", 30)
    for m in range(1, 13):
        want = 3 * (-1) ** (m + 1) * 2 * m / math.factorial(2 * m + 1)
        assert f[2 * m] == pytest.approx(want, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("lam", [0.0, 1.0, 3.7, -2.0 + 1.5j])
def test_obstruction_vanishes_for_inverse_square(lam):
    assert abs(log_obstruction(inverse_square(1), 0.0, lam)) < 1e-14


@pytest.mark.parametrize("alpha", [1.0, -0.3, 2.5])
@pytest.mark.parametrize("lam", [0.0, 1.0, 4.2])
def test_obstruction_linear_background(alpha, lam):
    assert log_obstruction(with_linear(alpha), 0.0, lam) == pytest.approx(-alpha, abs=1e-12)


def test_obstruction_csc():
    assert abs(log_obstruction(csc_squared(1, 1.0), 0.0, 1.0)) < 1e-12


def test_log_term_raised():
    with pytest.raises(LogTermRequired):
        frobenius_solution(with_linear(1.0), 0.0, 1.0, "lower", 10)
    frobenius_solution(with_linear(1.0), 0.0, 1.0, "upper", 10)


@pytest.mark.parametrize("mk,pole", [
    (lambda: inverse_square(1), 0.0), (lambda: inverse_square(2), 0.0),
    (lambda: inverse_square(3), 0.0), (lambda: csc_squared(1, 1.0), 0.0),
    (lambda: adler_moser(2, [1.0]), -1.0), (lambda: adler_moser(3, [0.5, 1.0]), None),
])
def test_smeromorphic_families(mk, pole):
    u = mk()
    if pole is None:
        pole = min((p.real for p in u.poles if abs(p.imag) < 1e-9), key=abs)
    assert is_smeromorphic(u, pole).verdict


def test_certificate_negative():
    cert = is_smeromorphic(with_linear(1.0), 0.0)
    assert not cert.verdict
    assert all(abs(v - 1) < 1e-9 for _, v in cert.samples)
    assert cert.to_json()["verdict"] is False


def test_non_admissible_certificate():
    cert = is_smeromorphic(rational_poles([0.0], [3.0]), 0.0)
    assert not cert.verdict and cert.reason


@pytest.mark.parametrize("lam", [1.0, 2.5 - 0.5j])
def test_residuals_small(lam):
    for u, p in ((inverse_square(2), 0.0), (csc_squared(1, 1.0), 0.0), (adler_moser(2, [1.0]), -1.0)):
        for branch in ("lower", "upper"):
            f = frobenius_solution(u, p, lam, branch, 30)
            res, _ = ode_residual(u, f, lam)
            assert max(res.values(), default=0.0) < 1e-12


def test_subspaces():
    assert subspace_for_pole(1).exponents == (1,)
    assert subspace_for_pole(3).exponents == (3, 1)
    assert subspace_for_pole(4).exponents == (4, 2)
    assert subspace_for_pole(4).dim == 2


def y(d):
    return LaurentSeries(0.0, d)


def test_canonical_basis():
    b = canonical_basis([y({-3: 1, -1: 2}), y({-1: 1})])
    assert b.exponents == (3, 1) and b.basis_rows == ({}, {})
    b = canonical_basis([y({-2: 1, -1: 1})])
    assert b.exponents == (2,) and b.basis_rows == ({1: 1},)
    b = canonical_basis([y({-2: 2})])
    assert b.exponents == (2,) and b.basis()[0].coeffs == {-2: 1}


def test_canonical_basis_dependent():
    with pytest.raises(DependentSpan):
        canonical_basis([y({-2: 1}), y({-2: 3})])


def test_contains():
    sub = subspace_for_pole(1)
    assert sub.contains(y({-1: 4}))[0]
    assert not sub.contains(y({-2: 1}))[0]


def test_pair_residue():
    assert pair_residue(y({-1: 1}), y({-1: 1})) == 0
    assert pair_residue(y({-1: 1}), y({0: 1})) == 1
    f = frobenius_solution(inverse_square(1), 0.0, 1.0, "lower", 20)
    assert abs(pair_residue(f, f)) < 1e-15
