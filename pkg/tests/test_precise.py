import math

import mpmath
import numpy as np
import pytest

from smero.errors import LogTermRequired
from smero.potential import csc_squared, free, inverse_square, make_family
from smero.precise import (gap_excess, monodromy_precise, refine_gap, snap,
                           transfer_matrix_precise)
from smero.transfer import transfer_matrix

mp = mpmath.mp
PERTURBED = csc_squared(1, 1.0, cos=[0.0, 0.3])


def test_snap():
    with mp.workdps(50):
        assert snap(math.pi) == mp.pi
        assert snap(math.pi / 2) == mp.pi / 2
        assert snap(0.3) == mp.mpf(0.3)


def test_free_matrix_exact():
    with mp.workdps(40):
        t = transfer_matrix_precise(free(), 2.0, 0.25, 1.75, dps=40)
        k, d = mp.sqrt(2), mp.mpf("1.5")
        want = [[mp.cos(k * d), -k * mp.sin(k * d)], [mp.sin(k * d) / k, mp.cos(k * d)]]
        for i in range(2):
            for j in range(2):
                assert abs(t[i, j] - want[i][j]) < mp.mpf("1e-34")


def test_inverse_square_through_pole():
    with mp.workdps(40):
        def basis(x):
            x = mp.mpf(x)
            e, ei = mp.expj(x), mp.expj(-x)
            return mp.matrix([[e * (1 / x - 1j), ei * (1 / x + 1j)],
                              [e * (1j / x - 1 / x**2 + 1), ei * (-1j / x - 1 / x**2 + 1)]])
        want = (basis(1) * basis(-1) ** -1).T
        t = transfer_matrix_precise(inverse_square(1), 1.0, -1.0, 1.0, dps=40)
        assert mp.mnorm(t - want, 1) < mp.mpf("1e-32")


def test_log_obstruction_detected():
    u = make_family({"family": "inverse_square", "n": 1, "background": {"poly": [0, 1.0]}})
    with pytest.raises(LogTermRequired):
        transfer_matrix_precise(u, 1.0, -1.0, 1.0, dps=30)


def test_csc_discriminant_exact():
    for lam in ("2.3", "4"):
        with mp.workdps(50):
            t = monodromy_precise(csc_squared(1, 1.0), mp.mpf(lam), dps=50)
            delta = t[0, 0] + t[1, 1]
            assert abs(delta - 2 * mp.cos(mp.pi * mp.sqrt(mp.mpf(lam)))) < mp.mpf("1e-40")
            assert abs(mp.det(t) - 1) < mp.mpf("1e-40")


def test_routes_agree():
    for lam in (1.0, 7.3, 40.0):
        t = monodromy_precise(PERTURBED, lam)
        d = transfer_matrix(PERTURBED, lam, math.pi / 2, 3 * math.pi / 2).t
        tp = np.array([[complex(t[i, j]) for j in range(2)] for i in range(2)])
        assert np.allclose(tp, d, rtol=1e-9, atol=1e-10 * np.abs(tp).max())


def test_frozen_discriminant():
    t = monodromy_precise(PERTURBED, 1.0)
    assert float(mp.re(t[0, 0] + t[1, 1])) == pytest.approx(0.78354837014606, abs=1e-13)


def test_gap_excess_sign():
    # inside the second band E < 0; at the first gap's centre E > 0
    assert gap_excess(PERTURBED, 2.0) < 0
    assert gap_excess(PERTURBED, 3.7776) > 0


# widths converged between 64 and 90 digits; guesses are the double-route peaks
FROZEN = [(5, 24.9752184666, 1.5546482e-9), (8, 63.9906198853, 1.5856622e-18)]


@pytest.mark.parametrize("m,guess,width", FROZEN)
def test_frozen_gap_width(m, guess, width):
    left, right, peak, res = refine_gap(PERTURBED, guess)
    assert peak > res
    assert float(right - left) == pytest.approx(width, rel=1e-6)
    assert float(left) == pytest.approx(guess, abs=1e-8)


def test_unperturbed_closed():
    left, right, peak, res = refine_gap(csc_squared(1, 1.0), 25.0 + 1e-6)
    assert left == right
    assert abs(float(left) - 25.0) < 1e-12
