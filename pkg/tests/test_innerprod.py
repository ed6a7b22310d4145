import math

import numpy as np
import pytest

from smero.errors import DescriptorError, ResidueObstruction
from smero.frobenius import subspace_for_pole
from smero.innerprod import (PlateauWindow, adjoint_defect, adler_moser_family, apply_operator,
                             boundary_bracket, bump, canonical_family, closed_form,
                             frobenius_handle, gram_signature, inner_product, membership_check,
                             monomial, solution_handle, star_conjugate, windowed)
from smero.potential import free, inverse_square

U1 = inverse_square(1)


def lower_closed(k=1.0):
    """cos(kz)/z + k sin(kz), the lower solution of 2/x^2 at lam = k^2."""
    return closed_form(lambda z: np.cos(k * z) / z + k * np.sin(k * z), [0.0],
                       lambda z: -k * np.sin(k * z) / z - np.cos(k * z) / z**2 + k * k * np.cos(k * z),
                       lam=k * k, name=f"low{k}")


def test_star_conjugate_examples():
    g = closed_form(lambda z: np.cos(z) + z**2, name="real")
    gs = star_conjugate(g)
    x = np.linspace(-2, 2, 9)
    assert np.allclose(gs(x), g(x))
    h = closed_form(lambda z: 1j * z, name="iz")
    z = 0.3 + 0.8j
    assert star_conjugate(h)(z) == pytest.approx(-1j * z)


def test_star_conjugate_solution_residual():
    lam = 2.0 + 0.7j
    g = solution_handle(U1, lam, -1.0, (1.0, 0.3j), (-1.0, 1.0))
    gs = star_conjugate(g)
    assert gs.lam == pytest.approx(lam.conjugate())
    # residual of -g'' + u g - conj(lam) g by finite differences on the real axis
    for x in (-0.6, 0.45):
        h = 1e-4
        d2 = (gs(x + h) - 2 * gs(x) + gs(x - h)) / h**2
        res = -d2 + 2 / x**2 * gs(x) - lam.conjugate() * gs(x)
        assert abs(res) < 1e-5 * abs(gs(x))


def test_disjoint_supports():
    a, b = bump(-0.5, 0.2), bump(0.5, 0.2)
    assert inner_product(a, b, (-1, 1)) == 0


def test_inverse_x_pairing():
    f = monomial(-1)
    for side in ("upper", "lower"):
        assert inner_product(f, f, (-1, 1), sides=side) == pytest.approx(-2, abs=1e-10)
    # exact antiderivative along the detour
    assert inner_product(f, f, (-0.5, 2.0)) == pytest.approx((-1 / 2.0) - (1 / 0.5), abs=1e-10)


def test_bump_positive():
    v = inner_product(bump(0.1, 0.4), bump(0.1, 0.4), (-1, 1))
    assert v.real > 0 and abs(v.imag) < 1e-14


def test_residue_gate():
    with pytest.raises(ResidueObstruction) as exc:
        inner_product(monomial(-1), monomial(0), (-1, 1))
    assert exc.value.residue == pytest.approx(1)


def test_regular_partner():
    # 1/z^2 against an analytic partner: the residue is the partner's slope at 0
    even = closed_form(np.cos, name="cos")
    assert inner_product(monomial(-2), even, (-1, 1)) == pytest.approx(-2 * math.cos(1) - 2 * 0.946083070367183,
                                                                     abs=1e-10)
    with pytest.raises(ResidueObstruction) as exc:
        inner_product(monomial(-2), closed_form(np.sin, name="sin"), (-1, 1))
    assert exc.value.residue == pytest.approx(1)
    with pytest.raises(DescriptorError):
        inner_product(monomial(-2), bump(0.0, 0.5), (-1, 1))


def test_window_pole_on_ramp():
    with pytest.raises(DescriptorError):
        windowed(monomial(-1, 0.9), PlateauWindow(-1, 1, 0.3))


def test_gram_examples():
    win = PlateauWindow(-1, 1, 0.25)
    assert gram_signature([bump(0, 0.5)], (-1, 1)).signature == (1, 0, 0)
    w = windowed(monomial(-1), win)
    assert gram_signature([w], (-1, 1)).signature == (0, 1, 0)
    res = gram_signature([w, bump(0.5, 0.15)], (-1, 1))
    assert res.signature == (1, 1, 0)
    assert np.allclose(res.matrix, res.matrix.conj().T)
    assert res.to_json()["signature"] == [1, 1, 0]


def test_gram_threads_deterministic():
    fam = canonical_family(3)
    a = gram_signature(fam, (-1, 1), threads=1).matrix
    b = gram_signature(fam, (-1, 1), threads=4).matrix
    assert np.array_equal(a, b)


@pytest.mark.parametrize("n,want", [(1, 1), (2, 1), (3, 2)])
def test_canonical_signatures(n, want):
    fam = canonical_family(n)
    assert len(fam) == math.ceil(n / 2)
    assert gram_signature(fam, (-1, 1)).n_minus == want
    assert gram_signature(fam, (-1, 1), r=0.05).n_minus == want


def test_canonical_signature_index_four():
    # beyond the required range; the detour quadrature cancels ~r^-7, so only the default r
    assert gram_signature(canonical_family(4), (-1, 1)).n_minus == 2


def test_path_independence():
    w = PlateauWindow(-1, 1, 0.3)
    f = windowed(frobenius_handle(U1, 0.0, 1.0), w)
    g = windowed(frobenius_handle(U1, 0.0, 2.5, "upper"), w)
    for a, b in ((f, f), (f, g), (g, f)):
        up = inner_product(a, b, (-1, 1), sides="upper")
        lo = inner_product(a, b, (-1, 1), sides="lower")
        assert abs(up - lo) < 1e-8


def test_adjoint_windowed():
    w = PlateauWindow(-1, 1, 0.3)
    f = windowed(frobenius_handle(U1, 0.0, 1.0), w)
    g = windowed(frobenius_handle(U1, 0.0, 4.0), w)
    assert abs(adjoint_defect(U1, f, f, (-1, 1))) < 1e-8
    assert abs(adjoint_defect(U1, f, g, (-1, 1))) < 1e-8


def test_sin_cos_bracket():
    s = closed_form(np.sin, d1=np.cos, d2=lambda z: -np.sin(z), lam=1.0, name="sin")
    c = closed_form(np.cos, d1=lambda z: -np.sin(z), d2=lambda z: -np.cos(z), lam=1.0, name="cos")
    assert abs(boundary_bracket(s, c, (0, math.pi))) < 1e-14
    assert abs(adjoint_defect(free(), s, c, (0, math.pi))) < 1e-12


@pytest.mark.parametrize("iv", [(-1.0, 1.3), (-0.8, 2.0)])
def test_defect_equals_bracket(iv):
    f, g = lower_closed(1.0), lower_closed(2.0)
    d = adjoint_defect(U1, f, g, iv)
    assert abs(d - boundary_bracket(f, g, iv)) < 1e-7
    assert abs(d) > 1e-3  # non-trivial boundary contribution


def test_defect_generic_handle():
    # not an eigenfunction, so L is applied by differentiation
    w = PlateauWindow(-1, 1, 0.3)
    f = windowed(monomial(-1), w)
    g = bump(0.4, 0.3)
    Lf = apply_operator(U1, f)
    assert Lf(0.5) == pytest.approx(-(2 / 0.5**3) + 2 / 0.5**3, abs=1e-12)
    assert abs(adjoint_defect(U1, f, g, (-1, 1))) < 1e-8


def test_propagated_matches_closed_form():
    f = lower_closed(1.0)
    x0 = -1.0
    s = solution_handle(U1, 1.0, x0, (f(x0), f.d1(x0)), (-1.0, 1.3))
    g = lower_closed(2.0)
    t = solution_handle(U1, 4.0, x0, (g(x0), g.d1(x0)), (-1.0, 1.3))
    want = inner_product(f, g, (-1.0, 1.3))
    assert inner_product(s, t, (-1.0, 1.3)) == pytest.approx(want, abs=1e-8)
    assert s.laurent[0.0][-1] == pytest.approx(1, abs=1e-9)


def test_hermiticity_solution_handles():
    iv = (-1.0, 1.2)
    f = solution_handle(U1, 1.3, -1.0, (1.0, 0.2), iv)
    g = solution_handle(U1, 2.1, -1.0, (0.4, -1.0), iv)
    fg = inner_product(f, g, iv)
    gf = inner_product(g, f, iv)
    assert abs(fg - np.conj(gf)) < 1e-8


def test_membership():
    sub = {0.0: subspace_for_pole(1)}
    f = closed_form(lambda z: 1 / z + np.sin(z), [0.0], name="f")
    assert membership_check(f, sub, [f]).verdict
    g = closed_form(lambda z: 1 / z**2, [0.0], name="g")
    assert not membership_check(g, sub).verdict
    h = closed_form(lambda z: 1 / z + 0.5, [0.0], name="h")
    rep = membership_check(h, sub, [monomial(-1)])
    assert not rep.verdict and len(rep.violations) == 1


def test_adler_moser_invariance():
    sigs = set()
    for tau in (1.0, 2.0, 5.0):
        _, fam = adler_moser_family(2, [tau])
        sigs.add(gram_signature(fam, (-3.5, 1.5)).n_minus)
    assert sigs == {1}
