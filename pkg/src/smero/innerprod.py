"""The regularized indefinite pairing ``<f, g> = int f(z) g*(z) dz`` and its Gram matrices.

The integral runs along the real axis with half-circle detours around the
poles in ``(a, b)``.  It does not depend on the detour sides exactly when
``f g*`` has no ``y**-1`` term at any of those poles; that is checked on the
declared Laurent data before any quadrature happens.

Handles whose evaluator is only smooth in ``Re z`` (windows, bumps) record
the real intervals where that matters in ``rough``; a detour may not
enter them.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial

from ._accel import thread_count
from .contour import (SolutionCompanion, build_contour, default_radius, integrate_along,
                      propagate, propagate_system, real_path)
from .errors import ContourError, DescriptorError, NonHermitianGram, ResidueObstruction
from .frobenius import frobenius_solution, pair_residue, subspace_for_pole
from .potential import adler_moser_theta, list_singularities, potential_laurent
from .series import LaurentSeries, laurent_from_samples, principal_part, series_mul

RESIDUE_RTOL = 1e-9
SPOT_RTOL = 1e-8
GRAM_TOL = 1e-8
LAURENT_ORDER = 16


def _vec(fn):
    """Wrap a scalar callable so it also accepts arrays."""
    def wrapped(z):
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            return complex(fn(complex(z)))
        return np.array([fn(complex(v)) for v in z.ravel()], dtype=complex).reshape(z.shape)
    return wrapped


@dataclass(frozen=True)
class FunctionHandle:
    """A member of the function space: evaluator, derivatives and Laurent data per pole.

    ``func``, ``d1`` and ``d2`` take complex scalars or arrays.  ``laurent``
    maps each real pole of the working set to the expansion there.  ``lam``
    is set for eigenfunctions (``L f = lam f``); ``solution`` carries what
    is needed to co-propagate one.
    """

    func: object
    d1: object
    d2: object
    laurent: dict
    provenance: str  # "closed-form" | "propagated-solution" | "windowed"
    lam: complex | None = None
    rough: tuple = ()
    name: str = ""
    solution: object = None

    def __call__(self, z):
        return self.func(z)

    @property
    def poles(self):
        return tuple(sorted(self.laurent))

    def spot_check(self, radius, npts=8, rtol=SPOT_RTOL):
        """Largest relative mismatch between evaluator and Laurent data on ``|y| = radius``."""
        worst = 0.0
        th = 2 * np.pi * (np.arange(npts) + 0.5) / npts
        for p, s in self.laurent.items():
            z = p + radius * np.exp(1j * th)
            ev = np.asarray(self.func(z))
            sv = s(z)
            err = float(np.max(np.abs(ev - sv)) / max(1e-300, np.max(np.abs(ev))))
            worst = max(worst, err)
            if err > rtol:
                raise DescriptorError(f"{self.name or 'handle'}: evaluator and Laurent data at {p} "
                                      f"differ by {err:.2e} at radius {radius}")
        return worst

    def to_json(self):
        return {"name": self.name, "provenance": self.provenance,
                "lambda": None if self.lam is None else [self.lam.real, self.lam.imag],
                "poles": list(self.poles),
                "laurent": {str(p): s.to_json() for p, s in self.laurent.items()}}


# -- constructors --------------------------------------------------------------

def _cauchy_derivative(func, order, radius, npts=24):
    th = 2 * np.pi * np.arange(npts) / npts
    e = np.exp(1j * th)

    def d(z):
        z = np.asarray(z, dtype=complex)
        zz = z[..., None] + radius * e
        vals = np.asarray(func(zz))
        return math.factorial(order) * np.mean(vals * e ** (-order), axis=-1) / radius**order
    return d


def closed_form(func, poles=(), d1=None, d2=None, laurent=None, name="", order=LAURENT_ORDER,
                lam=None):
    """Handle for an analytic (meromorphic) closed form.

    Missing Laurent data is sampled on a circle around each pole; missing
    derivatives use a Cauchy integral, so ``func`` must be analytic near the
    points where they are requested.  Declared data are spot-checked.
    """
    poles = sorted(float(p) for p in poles)
    gaps = [b - a for a, b in zip(poles, poles[1:])]
    rad = min([0.5] + [g / 3 for g in gaps])
    lau = dict(laurent or {})
    for p in poles:
        if p not in lau:
            s = _sampled_laurent(func, p, rad, order)
            lau[p] = s
    if d1 is None:
        d1 = _cauchy_derivative(func, 1, min(0.05, rad / 4))
    if d2 is None:
        d2 = _cauchy_derivative(func, 2, min(0.05, rad / 4))
    h = FunctionHandle(func, d1, d2, lau, "closed-form", None if lam is None else complex(lam),
                       name=name)
    h.spot_check(rad / 2)
    return h


def _sampled_laurent(func, p, radius, order):
    from .series import laurent_from_samples

    s = laurent_from_samples(func, p, radius, -order, order, npts=256)
    big = max(abs(c) * radius**e for e, c in s.coeffs.items()) if s.coeffs else 0.0
    keep = {e: c for e, c in s.coeffs.items() if abs(c) * radius**e > 1e-13 * big}
    return LaurentSeries(p, keep, s.trunc)


def monomial(exponent, pole=0.0, coeff=1.0, name=None):
    """``coeff * (z - pole)**exponent`` with exact derivatives and Laurent data."""
    k, c, p = int(exponent), complex(coeff), float(pole)
    lau = {p: LaurentSeries.monomial(k, c, p)} if k < 0 else {}
    return FunctionHandle(
        lambda z: c * (np.asarray(z) - p) ** k,
        lambda z: c * k * (np.asarray(z) - p) ** (k - 1),
        lambda z: c * k * (k - 1) * (np.asarray(z) - p) ** (k - 2),
        lau, "closed-form", name=name or f"y^{k}@{p}")


def series_handle(s: LaurentSeries, name="", lam=None):
    """Evaluate a truncated Laurent series directly (e.g. a Frobenius solution)."""
    ds = s.derivative()
    dds = ds.derivative()
    return FunctionHandle(s, ds, dds, {float(s.basepoint): s}, "closed-form",
                          None if lam is None else complex(lam), name=name)


def frobenius_handle(u, pole, lam, branch="lower", order=40):
    s = frobenius_solution(u, pole, lam, branch, order)
    return series_handle(s, name=f"frobenius-{branch}@{pole}", lam=lam)


def _bump_parts(x, c, w):
    t = (np.asarray(x, dtype=float) - c) / w
    inside = np.abs(t) < 1
    ts = np.where(inside, t, 0.0)
    q = 1 - ts**2
    b = np.where(inside, np.exp(1 - 1 / np.where(inside, q, 1.0)), 0.0)
    # derivatives of exp(1 - 1/(1 - t^2)) in t
    g1 = np.where(inside, -2 * ts / np.where(inside, q, 1.0) ** 2, 0.0)
    g2 = np.where(inside, (-2 * q - 8 * ts**2) / np.where(inside, q, 1.0) ** 3, 0.0)
    return b, b * g1 / w, b * (g1**2 + g2) / w**2


def bump(center, width, height=1.0, name=None):
    """Smooth bump ``height * exp(1 - 1/(1 - t^2))``, ``t = (Re z - center)/width``."""
    c, w, hgt = float(center), float(width), complex(height)
    return FunctionHandle(
        lambda z: hgt * _bump_parts(np.real(z), c, w)[0],
        lambda z: hgt * _bump_parts(np.real(z), c, w)[1],
        lambda z: hgt * _bump_parts(np.real(z), c, w)[2],
        {}, "closed-form", rough=((c - w, c + w),), name=name or f"bump@{c}")


@dataclass(frozen=True)
class PlateauWindow:
    """1 on ``[a + ramp, b - ramp]``, 0 outside ``[a, b]``, quintic smoothstep ramps (C^2)."""

    a: float
    b: float
    ramp: float

    def __post_init__(self):
        if not (self.ramp > 0 and self.a + 2 * self.ramp <= self.b):
            raise DescriptorError(f"bad window {self}")

    @property
    def plateau(self):
        return self.a + self.ramp, self.b - self.ramp

    def parts(self, x):
        """``(w, w', w'')`` at real ``x``."""
        x = np.asarray(x, dtype=float)
        tl = np.clip((x - self.a) / self.ramp, 0, 1)
        tr = np.clip((self.b - x) / self.ramp, 0, 1)
        s = lambda t: t**3 * (10 - 15 * t + 6 * t * t)  # noqa: E731
        s1 = lambda t: 30 * t * t * (1 - t) ** 2  # noqa: E731
        s2 = lambda t: 60 * t * (1 - t) * (1 - 2 * t)  # noqa: E731
        left = x < self.a + self.ramp
        w = np.where(left, s(tl), s(tr))
        w1 = np.where(left, s1(tl) / self.ramp, -s1(tr) / self.ramp)
        w2 = np.where(left, s2(tl), s2(tr)) / self.ramp**2
        return w, w1, w2

    def __call__(self, x):
        return self.parts(x)[0]


def windowed(h: FunctionHandle, window: PlateauWindow):
    """``w(Re z) h(z)``; Laurent data pass through unchanged, so each pole must sit on the plateau."""
    lo, hi = window.plateau
    for p in h.laurent:
        if window.a < p < window.b and not lo < p < hi:
            raise DescriptorError(f"pole {p} lies on a window ramp")
    lau = {p: s for p, s in h.laurent.items() if window.a < p < window.b}

    def f(z):
        return window.parts(np.real(z))[0] * h.func(z)

    def d1(z):
        w, w1, _ = window.parts(np.real(z))
        return w1 * h.func(z) + w * h.d1(z)

    def d2(z):
        w, w1, w2 = window.parts(np.real(z))
        return w2 * h.func(z) + 2 * w1 * h.d1(z) + w * h.d2(z)

    ramps = ((window.a, lo), (hi, window.b))
    return FunctionHandle(f, d1, d2, lau, "windowed", None, h.rough + ramps,
                          name=f"w*{h.name}", solution=None)


def star_conjugate(g: FunctionHandle) -> FunctionHandle:
    """``g*(z) = conj(g(conj z))``; for a real-``u`` eigenfunction at ``lam`` this solves at ``conj(lam)``."""
    def c(fn):
        return lambda z: np.conj(fn(np.conj(z)))
    lau = {p: s.conj() for p, s in g.laurent.items()}
    sol = None
    if g.solution is not None:
        sol = g.solution.conjugated()
    return FunctionHandle(c(g.func), c(g.d1), c(g.d2), lau, g.provenance,
                          None if g.lam is None else complex(g.lam).conjugate(), g.rough,
                          name=f"{g.name}*", solution=sol)


def scaled(h: FunctionHandle, c):
    c = complex(c)
    return replace(h, func=lambda z: c * h.func(z), d1=lambda z: c * h.d1(z),
                   d2=lambda z: c * h.d2(z), laurent={p: s.scale(c) for p, s in h.laurent.items()},
                   solution=None if h.solution is None else h.solution.scaled(c))


def apply_operator(u, h: FunctionHandle) -> FunctionHandle:
    """``L h = -h'' + u h``.  Eigenfunctions are scaled by ``lam`` instead of differentiated."""
    if h.lam is not None:
        return replace(scaled(h, h.lam), name=f"L{h.name}")
    lau = {}
    for p, s in h.laurent.items():
        U = potential_laurent(u, p, max(s.trunc - s.valuation, 2))
        lau[p] = series_mul(U, s) - s.derivative().derivative()

    def f(z):
        return -h.d2(z) + u._eval(np.asarray(z, dtype=complex)) * h.func(z)
    return FunctionHandle(f, None, None, lau, h.provenance, None, h.rough, name=f"L{h.name}")


# -- propagated solutions --------------------------------------------------------

@dataclass
class _Solution:
    """Checkpointed numerical solution of ``L f = lam f`` on a real interval."""

    u: object
    lam: complex
    xs: np.ndarray
    vals: np.ndarray
    ders: np.ndarray
    poles: tuple
    r: float
    rtol: float
    conj: bool = False
    scale: complex = 1.0

    def conjugated(self):
        return replace(self, conj=not self.conj)

    def scaled(self, c):
        return replace(self, scale=self.scale * c)

    def state(self, z):
        """``(f, f')`` at ``z`` by a short propagation from the nearest checkpoint."""
        zq = np.conj(z) if self.conj else z
        i = int(np.argmin(np.abs(self.xs - zq.real)))
        x0, v, d = self.xs[i], self.vals[i], self.ders[i]
        x1 = float(zq.real)
        if x1 != x0:
            path = real_path(x0, x1, self.poles, self.r)
            y, _, _ = propagate_system(self.u, [self.lam], [v, d], path, False, self.rtol)
            v, d = y
        if zq.imag != 0:
            from .contour import Contour, Segment
            path = Contour((Segment(complex(x1), zq),), x1, x1)
            y, _, _ = propagate_system(self.u, [self.lam], [v, d], path, False, self.rtol)
            v, d = y
        if self.conj:
            v, d = np.conj(v), np.conj(d)
        return self.scale * complex(v), self.scale * complex(d)


def solution_handle(u, lam, x_start, init, interval, r=None, rtol=1e-12, order=40, spacing=0.1):
    """Propagated solution of ``L f = lam f`` with ``(f, f')(x_start) = init``.

    Checkpoints are laid on ``interval`` away from the poles; Laurent data at
    each pole come from expanding the solution in the local Frobenius pair.
    """
    a, b = map(float, interval)
    lam = complex(lam)
    poles = tuple(list_singularities(u, (a, b)))
    if r is None:
        r = default_radius(a, b, poles) if poles else 0.1
    pts = [float(x) for x in np.linspace(a, b, max(2, int(math.ceil((b - a) / spacing)) + 1))]
    pts = [x for x in pts if all(abs(x - p) > 2 * r for p in poles)]
    pts.append(float(x_start))
    pts = sorted(set(pts))
    i0 = pts.index(float(x_start))
    vals = np.zeros(len(pts), dtype=complex)
    ders = np.zeros(len(pts), dtype=complex)
    vals[i0], ders[i0] = complex(init[0]), complex(init[1])
    for order_ in (range(i0 + 1, len(pts)), range(i0 - 1, -1, -1)):
        for i in order_:
            j = i - 1 if i > i0 else i + 1
            path = real_path(pts[j], pts[i], poles, r)
            y, _, _ = propagate_system(u, [lam], [vals[j], ders[j]], path, False, rtol)
            vals[i], ders[i] = y
    sol = _Solution(u, lam, np.array(pts), vals, ders, poles, r, rtol)
    lau = {}
    for p in poles:
        rho = min(0.3, 0.5 * min([abs(p - q) for q in poles if q != p] + [abs(p - a), abs(p - b)]))
        lo = frobenius_solution(u, p, lam, "lower", order)
        up = frobenius_solution(u, p, lam, "upper", order)
        x = p - rho
        v, d = sol.state(complex(x))
        M = np.array([[lo(x), up(x)], [lo.derivative()(x), up.derivative()(x)]])
        alpha, beta = np.linalg.solve(M, [v, d])
        lau[p] = lo.scale(alpha) + up.scale(beta)

    def f(z):
        return _vec(lambda q: sol.state(q)[0])(z)

    def d1(z):
        return _vec(lambda q: sol.state(q)[1])(z)

    def d2(z):
        return (u._eval(np.asarray(z, dtype=complex)) - lam) * f(z)

    return FunctionHandle(f, d1, d2, lau, "propagated-solution", lam, name=f"sol[{lam}]", solution=sol)


# -- the pairing -----------------------------------------------------------------

def _working_poles(f, g, a, b):
    X = sorted({p for p in (*f.laurent, *g.laurent) if a < p < b})
    for p in (*f.laurent, *g.laurent):
        if p in (a, b):
            raise ContourError(f"interval endpoint {p} is a pole")
    return X


def residue_gate(f: FunctionHandle, g: FunctionHandle, X, tol=RESIDUE_RTOL):
    """Raise ``ResidueObstruction`` unless ``f g*`` has no ``y**-1`` term at each pole of ``X``."""
    out = {}
    for p in X:
        fl = f.laurent.get(p)
        gl = g.laurent.get(p)
        if fl is None or gl is None:
            continue  # regular partner: product has no principal part beyond the other's
        res = pair_residue(fl, gl.conj())
        scale = max(1.0, max(abs(c) for c in fl.coeffs.values()) * max(abs(c) for c in gl.coeffs.values()))
        out[p] = res
        if abs(res) > tol * scale:
            raise ResidueObstruction(p, complex(res))
    return out


def _check_regular_partner(h, other, X, first):
    """Residue test at poles where only ``other`` carries Laurent data.

    ``h`` is analytic there, so its Taylor series is sampled on a small
    circle; ``first`` says whether ``h`` is the left factor of ``f g*``.
    """
    for p in X:
        if p in h.laurent or p not in other.laurent:
            continue
        near = [abs(p - q) for q in X if q != p]
        for lo, hi in h.rough:
            if lo <= p <= hi:
                raise DescriptorError(f"{h.name}: pole {p} lies where the evaluator is not analytic")
            near.append(min(abs(p - lo), abs(p - hi)))
        s = other.laurent[p]
        if not principal_part(s).coeffs:
            continue
        need = -s.valuation
        taylor = laurent_from_samples(h.func, p, min([0.05] + [d / 3 for d in near]), 0, need + 1)
        res = pair_residue(taylor, s.conj()) if first else pair_residue(s, taylor.conj())
        scale = max(1.0, max(abs(c) for c in s.coeffs.values()) *
                    max([abs(c) for c in taylor.coeffs.values()] + [0.0]))
        if abs(res) > RESIDUE_RTOL * scale:
            raise ResidueObstruction(p, complex(res))


def inner_product(f: FunctionHandle, g: FunctionHandle, interval, r=None, sides="upper",
                  epsabs=1e-13, epsrel=1e-12, rtol=1e-12):
    """``<f, g> = int f g* dz`` along ``[a, b]`` with half-circle detours of radius ``r``."""
    a, b = map(float, interval)
    X = _working_poles(f, g, a, b)
    residue_gate(f, g, X)
    _check_regular_partner(f, g, X, True)
    _check_regular_partner(g, f, X, False)
    c = build_contour(a, b, X, r, sides)
    for h in (f, g):
        for lo, hi in h.rough:
            for p in X:
                if lo < p + c.radius and p - c.radius < hi:
                    raise DescriptorError(f"{h.name}: detour around {p} meets a non-analytic region")
    if f.solution is not None and g.solution is not None:
        fv, fd = f.solution.state(complex(a))
        gs = g.solution.conjugated()
        gv, gd = gs.state(complex(a))
        comp = SolutionCompanion(complex(g.lam).conjugate(), gv, gd)
        st = propagate(f.solution.u, f.lam, c, (fv, fd), comp, rtol)
        return complex(st.accumulated)
    gstar = star_conjugate(g)
    breaks = sorted({x for h in (f, g) for iv in h.rough for x in iv})
    return integrate_along(c, lambda z: f.func(z) * gstar.func(z), epsabs, epsrel, breaks)


def boundary_bracket(f: FunctionHandle, g: FunctionHandle, interval):
    """``[f g*' - f' g*]`` from ``a`` to ``b`` (real endpoints, so ``g* = conj g`` there)."""
    a, b = map(float, interval)

    def at(x):
        return complex(f.func(x) * np.conj(g.d1(x)) - f.d1(x) * np.conj(g.func(x)))
    return at(b) - at(a)


def adjoint_defect(u, f: FunctionHandle, g: FunctionHandle, interval, **opts):
    """``<L f, g> - <f, L g>``; integration by parts makes it ``boundary_bracket(f, g)``."""
    return inner_product(apply_operator(u, f), g, interval, **opts) - \
        inner_product(f, apply_operator(u, g), interval, **opts)


@dataclass
class GramResult:
    matrix: np.ndarray
    signature: tuple
    tol: float
    skew: float = 0.0
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def n_minus(self):
        return self.signature[1]

    def to_json(self):
        return {"matrix": [[[v.real, v.imag] for v in row] for row in self.matrix],
                "signature": list(self.signature)}


def gram_signature(family, interval, tol=GRAM_TOL, threads=None, **opts) -> GramResult:
    """Hermitian Gram matrix of the family and its inertia ``(n_plus, n_minus, n_zero)``."""
    family = list(family)
    n = len(family)
    pairs = [(i, j) for i in range(n) for j in range(n)]

    def one(ij):
        i, j = ij
        return inner_product(family[i], family[j], interval, **opts)

    workers = threads or thread_count()
    if workers == 1 or n < 2:
        vals = [one(ij) for ij in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(one, pairs))
    G = np.array(vals, dtype=complex).reshape(n, n)
    scale = max(1.0, float(np.max(np.abs(G)))) if n else 1.0
    skew = float(np.max(np.abs(G - G.conj().T))) / 2 if n else 0.0
    if skew > tol * scale:
        raise NonHermitianGram(f"Gram skew part {skew:.3e} exceeds {tol * scale:.3e}")
    H = (G + G.conj().T) / 2
    ev = np.linalg.eigvalsh(H) if n else np.zeros(0)
    thr = tol * (float(np.max(np.abs(ev))) if n else 0.0)
    sig = (int(np.sum(ev > thr)), int(np.sum(ev < -thr)), int(np.sum(np.abs(ev) <= thr)))
    return GramResult(H, sig, tol, skew, ev)


# -- membership --------------------------------------------------------------------

@dataclass
class MembershipReport:
    verdict: bool
    violations: list
    notes: list

    def __bool__(self):
        return self.verdict

    def to_json(self):
        return {"verdict": self.verdict, "violations": self.violations, "notes": self.notes}


def membership_check(f: FunctionHandle, space: dict, partners=(), tol=1e-10) -> MembershipReport:
    """Principal parts of ``f`` lie in the allowed subspaces, and every ``f g*`` is residue-free."""
    violations, notes = [], []
    for p, sub in space.items():
        s = f.laurent.get(p)
        if s is None:
            continue
        ok, resid = sub.contains(principal_part(s), tol)
        if not ok:
            violations.append(f"principal part at {p} outside the allowed subspace (residual {resid:.3e})")
    for p in f.laurent:
        if p not in space and principal_part(f.laurent[p]).coeffs:
            violations.append(f"pole {p} has no allowed subspace")
    for g in partners:
        for p in space:
            fl, gl = f.laurent.get(p), g.laurent.get(p)
            if fl is None or gl is None:
                continue
            res = pair_residue(fl, gl.conj())
            if abs(res) > tol * max(1.0, abs(res)) and abs(res) > tol:
                violations.append(f"f*{g.name}: y^-1 coefficient {complex(res)} at {p}")
    if partners:
        notes.append("residue-freeness against partners restricts the regular parts of f")
    return MembershipReport(not violations, violations, notes)


# -- families used by the signature checks -----------------------------------------

def canonical_family(n, pole=0.0, interval=(-1.0, 1.0), ramp=0.25):
    """Windowed canonical basis of the principal-part subspace allowed at an index-``n`` pole."""
    win = PlateauWindow(interval[0], interval[1], ramp)
    out = []
    for s in subspace_for_pole(n).basis(float(pole)):
        h = closed_form(s, poles=[pole], laurent={float(pole): s},
                        d1=s.derivative(), d2=s.derivative().derivative(), name=f"canon{n}")
        out.append(windowed(h, win))
    return out


def adler_moser_psi(k, tau):
    """``theta_{k-1} / theta_k``, a ``lam = 0`` eigenfunction of the Adler-Moser potential."""
    tau = list(tau)
    num = Polynomial(adler_moser_theta(k - 1, tau[:max(k - 2, 0)]))
    den = Polynomial(adler_moser_theta(k, tau))
    dn, dd = num.deriv(), den.deriv()
    ddn, ddd = dn.deriv(), dd.deriv()

    def f(z):
        return num(z) / den(z)

    def d1(z):
        return (dn(z) * den(z) - num(z) * dd(z)) / den(z) ** 2

    def d2(z):
        q = den(z)
        return (ddn(z) * q - num(z) * ddd(z)) / q**2 - 2 * dd(z) * d1(z) / q
    return f, d1, d2


def adler_moser_family(k, tau, interval=(-3.5, 1.5), ramp=0.4, bump_width=0.3):
    """Windowed ``theta_{k-1}/theta_k`` and ``y**-1`` at each real pole, plus bumps between poles."""
    from .potential import adler_moser

    u = adler_moser(k, tau)
    a, b = interval
    X = list_singularities(u, (a, b))
    win = PlateauWindow(a, b, ramp)
    f, d1, d2 = adler_moser_psi(k, tau)
    fam = [windowed(closed_form(f, X, d1, d2, name="psi", lam=0.0), win)]
    for p in X:
        fam.append(windowed(monomial(-1, p), win))
    lo, hi = win.plateau
    cands = [p + s * 0.8 for p in X for s in (-1, 1)]
    for c in cands:
        if lo + bump_width < c < hi - bump_width and all(abs(c - p) > bump_width + 0.2 for p in X):
            fam.append(bump(c, bump_width))
    return u, fam
