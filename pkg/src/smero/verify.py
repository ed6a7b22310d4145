"""The acceptance suite: ten checks with fixed inputs and tolerances.

Each check returns a :class:`Criterion`.  ``run_suite`` is what the
``verify`` subcommand and ``tests/test_acceptance.py`` both call.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import mpmath
import numpy as np

from .contour import build_contour, propagate
from .errors import ResidueObstruction
from .frobenius import frobenius_solution, is_smeromorphic, log_obstruction, ode_residual
from .innerprod import (PlateauWindow, adjoint_defect, adler_moser_family, boundary_bracket,
                        canonical_family, closed_form, frobenius_handle, gram_signature,
                        inner_product, monomial, windowed)
from .potential import adler_moser, csc_squared, free, inverse_square, make_family
from .transfer import discriminant_sweep, periodic_spectrum_gaps, transfer_matrix


@dataclass
class Criterion:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"

    def to_json(self):
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "seconds": round(self.seconds, 3)}


def bloch_csc(x, k):
    """``e^{ikx} (cot x - ik)``, a Bloch solution of ``-f'' + 2 csc^2 x f = k^2 f``."""
    return np.exp(1j * k * x) * (1 / np.tan(x) - 1j * k)


def c1_free_discriminant():
    u = free(period=math.pi)
    lams = np.arange(0.0, 100.0 + 1e-9, 0.5)
    t0 = time.perf_counter()
    rows = discriminant_sweep(u, lams)
    dt = time.perf_counter() - t0
    err = max(abs(r.delta - 2 * math.cos(math.pi * math.sqrt(r.lam.real))) for r in rows)
    return err < 1e-8 and dt < 10, f"max |Delta - 2cos(pi sqrt(lam))| = {err:.2e}, sweep {dt:.2f}s"


def certify_bloch(ks=(0.7, 2.0, 5.3), xs=("0.3", "1.1", "2.6"), dps=30):
    """Largest residual of the Bloch oracle in the ODE and in its quasi-periodicity."""
    worst = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for k in ks:
            k = mpmath.mpf(k)
            f = lambda x, k=k: mpmath.expj(k * x) * (mpmath.cot(x) - 1j * k)  # noqa: E731
            for x in map(mpmath.mpf, xs):
                ode = -mpmath.diff(f, x, 2) + (2 / mpmath.sin(x) ** 2 - k * k) * f(x)
                shift = f(x + mpmath.pi) - mpmath.expj(k * mpmath.pi) * f(x)
                worst = max(worst, abs(ode) / abs(f(x)), abs(shift) / abs(f(x)))
    return float(worst)


def c2_singular_discriminant():
    cert = certify_bloch()
    if cert > 1e-15:
        return False, f"Bloch oracle not certified (residual {cert:.1e})"
    u = csc_squared(1, 1.0)
    lams = np.arange(0.5, 100.0 + 1e-9, 0.5)
    rows = discriminant_sweep(u, lams, x0=math.pi / 2, r=0.2)
    err = max(abs(r.delta - 2 * math.cos(math.pi * math.sqrt(r.lam.real))) for r in rows)
    return err < 1e-6, f"max |Delta - 2cos(pi sqrt(lam))| = {err:.2e} over {len(lams)} points " \
                       f"(oracle residual {cert:.0e})"


def c3_closed_form_propagation():
    u = inverse_square(1)
    exact = lambda x: np.exp(1j * x) * (1 / x - 1j)  # noqa: E731
    dexact = lambda x: np.exp(1j * x) * (1j / x - 1 / x**2 + 1)  # noqa: E731
    ends = {}
    worst = 0.0
    for side in ("upper", "lower"):
        c = build_contour(-1.0, 1.0, [0.0], sides=side)
        st = propagate(u, 1.0, c, (exact(-1.0), dexact(-1.0)))
        ends[side] = st.value
        worst = max(worst, abs(st.value - exact(1.0)) / abs(exact(1.0)))
    agree = abs(ends["upper"] - ends["lower"]) / abs(exact(1.0))
    det = max(abs(transfer_matrix(u, 1.0, -1.0, 1.0, s).det - 1) for s in ("upper", "lower"))
    ok = worst < 1e-8 and agree < 1e-8 and det < 1e-10
    return ok, f"rel err {worst:.1e}, sides differ {agree:.1e}, |det T - 1| = {det:.1e}"


SMERO_TRUE = (
    ("2/x^2", lambda: inverse_square(1)),
    ("6/x^2", lambda: inverse_square(2)),
    ("12/x^2", lambda: inverse_square(3)),
    ("2/sin^2 x", lambda: csc_squared(1, 1.0)),
    ("adler_moser(2, [1])", lambda: adler_moser(2, [1.0])),
)


def _real_pole(u):
    return float(min((p for p in u.poles if abs(p.imag) < 1e-12), key=abs, default=0.0).real)


def c4_smeromorphy():
    msgs, ok = [], True
    for name, mk in SMERO_TRUE:
        u = mk()
        cert = is_smeromorphic(u, _real_pole(u) if len(u.poles) else 0.0)
        ok &= cert.verdict
        if not cert.verdict:
            msgs.append(f"{name} rejected")
    bad = make_family({"family": "inverse_square", "n": 1, "background": {"poly": [0, 1]}})
    cert = is_smeromorphic(bad, 0.0)
    dev = max(abs(v - 1) for _, v in cert.samples)
    ok &= (not cert.verdict) and dev < 1e-9
    msgs.append(f"2/x^2+x rejected={not cert.verdict}, max ||obs| - 1| = {dev:.1e}, "
                f"obstruction(lam=1) = {log_obstruction(bad, 0.0, 1.0).real:+.3f}")
    return ok, "; ".join(msgs)


def c5_frobenius_residual():
    worst, ok = 0.0, True
    for name, mk in SMERO_TRUE:
        u = mk()
        f = frobenius_solution(u, _real_pole(u) if len(u.poles) else 0.0, 1.0, "lower", 30)
        res, _ = ode_residual(u, f, 1.0)
        worst = max(worst, max(res.values(), default=0.0))
    f = frobenius_solution(inverse_square(1), 0.0, 1.0, "lower", 30)
    c1 = f[1]
    ok = worst < 1e-12 and abs(c1 - 0.5) < 1e-12
    return ok, f"max relative residual {worst:.1e}; x^1 coefficient {c1.real:.15f}"


def c6_inner_product():
    f = monomial(-1)
    vals = {s: inner_product(f, f, (-1, 1), sides=s) for s in ("upper", "lower")}
    err = max(abs(v + 2) for v in vals.values())
    try:
        inner_product(f, monomial(0), (-1, 1))
        gate, res = False, None
    except ResidueObstruction as exc:
        gate, res = True, exc.residue
    ok = err < 1e-8 and gate and abs(res - 1) < 1e-12
    return ok, f"<1/x,1/x> = {vals['upper'].real:.12f} (sides differ {abs(vals['upper'] - vals['lower']):.1e}); " \
               f"gate residue = {res}"


def c7_signatures():
    ok, parts = True, []
    for n, want in ((1, 1), (2, 1), (3, 2)):
        fam = canonical_family(n)
        a = gram_signature(fam, (-1, 1)).n_minus
        b = gram_signature(fam, (-1, 1), r=0.05).n_minus
        ok &= a == want and b == want
        parts.append(f"n={n}: n_minus={a} (r/2: {b}, expect {want})")
    return ok, "; ".join(parts)


def c8_adjointness():
    u = inverse_square(1)
    w = PlateauWindow(-1.0, 1.0, 0.3)
    f = windowed(frobenius_handle(u, 0.0, 1.0), w)
    g = windowed(frobenius_handle(u, 0.0, 4.0), w)
    win = max(abs(adjoint_defect(u, f, g, (-1, 1))), abs(adjoint_defect(u, f, f, (-1, 1))))
    fc = closed_form(lambda z: np.cos(z) / z + np.sin(z), [0.0],
                     lambda z: -np.sin(z) / z - np.cos(z) / z**2 + np.cos(z), lam=1.0, name="f")
    gc = closed_form(lambda z: np.cos(2 * z) / z + 2 * np.sin(2 * z), [0.0],
                     lambda z: -2 * np.sin(2 * z) / z - np.cos(2 * z) / z**2 + 4 * np.cos(2 * z),
                     lam=4.0, name="g")
    iv = (-1.0, 1.3)
    d = adjoint_defect(u, fc, gc, iv)
    br = boundary_bracket(fc, gc, iv)
    ok = win < 1e-8 and abs(d - br) < 1e-7
    return ok, f"windowed defect {win:.1e}; defect {d.real:.10f} vs bracket {br.real:.10f} " \
               f"(diff {abs(d - br):.1e})"


def c9_gap_decay():
    up = periodic_spectrum_gaps(csc_squared(1, 1.0, cos=[0.0, 0.3]), 90.0, precise=True)
    L = [g.length for g in up.gaps][:8]
    ok = len(L) == 8 and all(x > 0 for x in L) and all(b < a for a, b in zip(L[1:], L[2:])) \
        and L[-1] < 1e-3 * L[0]
    un = periodic_spectrum_gaps(csc_squared(1, 1.0), 100.0)
    worst = max((g.length for g in un.gaps), default=0.0)
    ok &= worst < 1e-6
    shown = ", ".join(f"{x:.2e}" for x in L)
    return ok, f"perturbed gaps [{shown}]; unperturbed max gap {worst:.1e}"


def c10_signature_invariance():
    sig = {}
    for tau in (1.0, 2.0, 5.0):
        _, fam = adler_moser_family(2, [tau])
        sig[tau] = gram_signature(fam, (-3.5, 1.5)).signature
    ok = len({s[1] for s in sig.values()}) == 1
    return ok, ", ".join(f"tau={t:g}: {s}" for t, s in sig.items())


CRITERIA = (
    (1, "free discriminant", c1_free_discriminant),
    (2, "singular oracle discriminant", c2_singular_discriminant),
    (3, "closed-form propagation", c3_closed_form_propagation),
    (4, "s-meromorphy classification", c4_smeromorphy),
    (5, "Frobenius residual", c5_frobenius_residual),
    (6, "regularized inner product", c6_inner_product),
    (7, "signature counts", c7_signatures),
    (8, "adjointness", c8_adjointness),
    (9, "gap decay", c9_gap_decay),
    (10, "signature invariance", c10_signature_invariance),
)


def run_criterion(number) -> Criterion:
    for num, title, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crash is a failure, reported not raised
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            return Criterion(num, title, bool(ok), detail, time.perf_counter() - t0)
    raise KeyError(number)


def run_suite(only=None):
    nums = [n for n, _, _ in CRITERIA if only is None or n in only]
    return [run_criterion(n) for n in nums]
