import math

import mpmath as mp
import numpy as np
import pytest

from smero.errors import AperiodicPotential, ContourError
from smero.potential import adler_moser, csc_squared, free, inverse_square
from smero.transfer import (default_base_point, discriminant, discriminant_sweep, monodromy,
                            periodic_spectrum_gaps, sweep_csv, transfer_matrix)
from smero.verify import bloch_csc

PERTURBED = dict(cos=[0.0, 0.3])


def free_t(lam, d):
    k = np.sqrt(complex(lam))
    return np.array([[np.cos(k * d), -k * np.sin(k * d)], [np.sin(k * d) / k, np.cos(k * d)]])


@pytest.mark.parametrize("lam,x0,x1", [(1.0, 0.0, 1.3), (7.5, -0.4, 2.0), (-2.0, 0.0, 1.0),
                                       (2 + 1j, 0.3, -0.9)])
def test_free_matrix(lam, x0, x1):
    t = transfer_matrix(free(), lam, x0, x1).t
    assert np.allclose(t, free_t(lam, x1 - x0), rtol=1e-10, atol=1e-10)


def test_free_lambda_zero():
    t = transfer_matrix(free(), 0.0, 0.2, 1.7).t
    assert np.allclose(t, [[1, 0], [1.5, 1]], atol=1e-12)


def closed_basis(x):
    p = np.exp(1j * x) * (1 / x - 1j)
    dp = np.exp(1j * x) * (1j / x - 1 / x**2 + 1)
    m = np.exp(-1j * x) * (1 / x + 1j)
    dm = np.exp(-1j * x) * (-1j / x - 1 / x**2 + 1)
    return np.array([[p, m], [dp, dm]])


@pytest.mark.parametrize("x0,x1", [(-1.0, 1.0), (-0.7, 2.1), (1.5, -0.4)])
def test_inverse_square_against_closed_forms(x0, x1):
    state_map = closed_basis(x1) @ np.linalg.inv(closed_basis(x0))
    for side in ("upper", "lower"):
        tm = transfer_matrix(inverse_square(1), 1.0, x0, x1, side)
        assert np.allclose(tm.t, state_map.T, rtol=1e-9, atol=1e-9)
        assert np.allclose(tm.state_map, state_map, rtol=1e-9, atol=1e-9)


def test_bloch_solution_oracle():
    mp.mp.dps = 30
    k = mp.mpf("1.7")
    f = lambda x: mp.exp(1j * k * x) * (mp.cot(x) - 1j * k)  # noqa: E731
    for x in (mp.mpf("0.4"), mp.mpf("2.0")):
        res = -mp.diff(f, x, 2) + 2 / mp.sin(x) ** 2 * f(x) - k**2 * f(x)
        assert abs(res) < 1e-20
        assert abs(f(x + mp.pi) - mp.exp(1j * k * mp.pi) * f(x)) < 1e-25
    assert bloch_csc(0.4, 1.7) == pytest.approx(complex(f(mp.mpf("0.4"))), rel=1e-14)


def test_monodromy_examples():
    M = monodromy(free(), 1.0, x0=0.3, period=2 * math.pi)
    assert np.allclose(M.t, np.eye(2), atol=1e-9)
    M = monodromy(csc_squared(1, 1.0), 4.0, x0=math.pi / 2)
    assert M.trace == pytest.approx(2, abs=1e-8)
    M = monodromy(free(), -1.0, x0=0.0, period=1.0)
    assert M.trace == pytest.approx(2 * math.cosh(1), rel=1e-10)


def test_bloch_multiplier():
    # the Bloch solution is an eigenvector of the monodromy with multiplier e^{ik pi}
    k, x0 = 1.3, math.pi / 2
    M = monodromy(csc_squared(1, 1.0), k * k, x0=x0)
    f0 = bloch_csc(x0, k)
    df0 = np.exp(1j * k * x0) * (1j * k * (1 / np.tan(x0) - 1j * k) - 1 / np.sin(x0) ** 2)
    end = M.state_map @ np.array([f0, df0])
    assert np.allclose(end, np.exp(1j * k * math.pi) * np.array([f0, df0]), rtol=1e-9)


def test_aperiodic():
    with pytest.raises(AperiodicPotential):
        monodromy(inverse_square(1), 1.0, x0=1.0)


def test_endpoint_too_close():
    with pytest.raises(ContourError):
        transfer_matrix(inverse_square(1), 1.0, -1.0, 0.05, r=0.1)


POTS = [csc_squared(1, 1.0), csc_squared(1, 1.0, **PERTURBED), adler_moser(2, [1.0]),
        inverse_square(2)]


@pytest.mark.parametrize("u", POTS, ids=repr)
@pytest.mark.parametrize("lam", [0.7, 12.0, 3 - 2j])
def test_det_and_side_independence(u, lam):
    up = transfer_matrix(u, lam, -0.5, 3.9, "upper")
    lo = transfer_matrix(u, lam, -0.5, 3.9, "lower")
    assert abs(up.det - 1) < 1e-10
    assert np.allclose(up.t, lo.t, rtol=1e-8, atol=1e-8 * np.abs(up.t).max())


def test_det_ill_conditioned():
    # 6/sin^2 x: solutions grow by ~10^2 between poles, so det loses ~|t|^2 * rtol
    tm = transfer_matrix(csc_squared(2, 1.0), 0.7, -0.5, 3.9)
    big = np.abs(tm.t).max()
    assert big > 100
    assert abs(tm.det - 1) < 1e-11 * big**2


@pytest.mark.parametrize("u", POTS, ids=repr)
def test_composition(u):
    a = transfer_matrix(u, 5.0, -0.5, 1.3)
    b = transfer_matrix(u, 5.0, 1.3, 3.9)
    whole = transfer_matrix(u, 5.0, -0.5, 3.9)
    assert np.allclose(a.then(b).t, whole.t, rtol=1e-8, atol=1e-8 * np.abs(whole.t).max())
    back = transfer_matrix(u, 5.0, 3.9, -0.5)
    assert np.allclose(whole.t @ back.t, np.eye(2), atol=1e-8 * np.abs(whole.t).max() ** 2)


def test_analytic_in_lambda():
    u = csc_squared(1, 1.0, **PERTURBED)
    lam0 = 6.0 + 0.5j
    nodes = lam0 + 0.4 * np.exp(2j * np.pi * np.arange(9) / 9)
    vals = np.array([transfer_matrix(u, z, 0.5, 3.0).t for z in nodes])
    exact = transfer_matrix(u, lam0, 0.5, 3.0).t
    V = np.vander(nodes - lam0, 9, increasing=True)
    for i in range(2):
        for j in range(2):
            c = np.linalg.solve(V, vals[:, i, j])
            assert abs(c[0] - exact[i, j]) < 1e-6 * max(1.0, abs(exact[i, j]))


def test_discriminant_sweeps():
    lams = np.linspace(0, 100, 41)
    rows = discriminant_sweep(free(period=math.pi), lams)
    assert max(abs(r.delta - 2 * math.cos(math.pi * math.sqrt(r.lam.real))) for r in rows) < 1e-8
    rows = discriminant_sweep(csc_squared(1, 1.0), lams[1:])
    assert max(abs(r.delta - 2 * math.cos(math.pi * math.sqrt(r.lam.real))) for r in rows) < 1e-6
    rows = discriminant_sweep(csc_squared(1, 1.0, **PERTURBED), lams)
    assert max(abs(r.delta.imag) for r in rows) < 1e-10
    assert [r.lam.real for r in rows] == list(lams)


def test_sweep_thread_independent():
    u = csc_squared(1, 1.0, **PERTURBED)
    lams = np.linspace(0.5, 30, 9)
    a = sweep_csv(discriminant_sweep(u, lams, threads=1))
    b = sweep_csv(discriminant_sweep(u, lams, threads=4))
    assert a == b
    assert a.splitlines()[0] == "lambda_re,lambda_im,delta_re,delta_im"


def test_frozen_discriminant_value():
    # frozen from the high-precision route (see test_precise); no gap opens at lam = 1
    d = discriminant(csc_squared(1, 1.0, **PERTURBED), 1.0)
    assert d.real == pytest.approx(0.78354837014606, abs=1e-10)
    assert abs(d.real) < 2


def test_default_base_point():
    assert default_base_point(csc_squared(1, 1.0)) == pytest.approx(math.pi / 2)
    assert default_base_point(free(period=2.0)) == pytest.approx(1.0)


def test_free_gaps_closed():
    rep = periodic_spectrum_gaps(free(period=math.pi), 50.0)
    assert rep.gaps and all(g.kind == "closed" and g.length == 0 for g in rep.gaps)
    lefts = [g.left for g in rep.gaps]
    assert lefts == pytest.approx([m * m for m in range(1, 8)], abs=1e-6)


def test_csc_gaps_closed():
    rep = periodic_spectrum_gaps(csc_squared(1, 1.0), 100.0)
    assert max(g.length for g in rep.gaps) < 1e-6


def test_perturbed_double_precision_gaps():
    rep = periodic_spectrum_gaps(csc_squared(1, 1.0, **PERTURBED), 20.0)
    L = rep.lengths()
    assert L[0] == pytest.approx(0.04276931, rel=1e-6)
    assert L[0] > L[1] > 0
    assert rep.to_json()[0]["kind"] == "open"
