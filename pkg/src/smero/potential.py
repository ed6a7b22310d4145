"""Meromorphic potentials ``u(x)`` and their local data at poles.

Every potential is a sum of four kinds of terms, which is also the layout
handed to the compiled stepper:

* rational double poles ``c_j / (z - p_j)**2`` (``inverse_square``,
  ``rational_poles`` and ``adler_moser`` all reduce to these),
* cosecant terms ``c * a**2 / sin(a (z - s))**2``,
* a trigonometric background ``sum_k C_k cos(k w z) + S_k sin(k w z)``,
* a polynomial background.

Families are built from JSON-style descriptors, e.g.
``{"family": "csc_squared", "m": 1, "a": 1.0}`` optionally carrying
``{"background": {"cos": [...], "sin": [...], "poly": [...], "omega": w}}``.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DescriptorError, PoleProximityError
from .series import LaurentSeries, laurent_from_samples

FAMILIES = ("free", "inverse_square", "csc_squared", "rational_poles", "adler_moser")
_FAMILY_KEYS = {
    "free": {"period"},
    "inverse_square": {"n", "center"},
    "csc_squared": {"m", "a", "shift", "period"},
    "rational_poles": {"poles", "coeffs"},
    "adler_moser": {"k", "tau"},
}
_BG_KEYS = {"cos", "sin", "poly", "omega"}

INDEX_RTOL = 1e-8


def _carr(values):
    return np.asarray(values if values is not None else [], dtype=complex).reshape(-1)


@dataclass(frozen=True, eq=False)
class Potential:
    family: str
    descriptor: dict
    poles: np.ndarray = field(default_factory=lambda: _carr([]))
    pole_coeffs: np.ndarray = field(default_factory=lambda: _carr([]))
    csc_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    csc_freq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    csc_shift: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omega: float = 1.0
    bg_cos: np.ndarray = field(default_factory=lambda: _carr([]))
    bg_sin: np.ndarray = field(default_factory=lambda: _carr([]))
    bg_poly: np.ndarray = field(default_factory=lambda: _carr([]))
    period: float | None = None
    theta: np.ndarray | None = None
    exclusion_radius: float = 1e-10

    def __repr__(self):
        return f"Potential({json.dumps(self.descriptor)})"

    # -- evaluation ---------------------------------------------------
    def pole_distance(self, z):
        """Distance from ``z`` to the nearest pole (real or complex)."""
        z = np.asarray(z, dtype=complex)
        d = np.full(z.shape, np.inf)
        for p in self.poles:
            d = np.minimum(d, np.abs(z - p))
        for a, s in zip(self.csc_freq, self.csc_shift):
            w = a * (z - s)
            m = np.round(w.real / np.pi)
            d = np.minimum(d, np.abs(w - m * np.pi) / a)
        return d

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if np.any(self.pole_distance(z) < self.exclusion_radius):
            raise PoleProximityError(f"evaluation point within {self.exclusion_radius} of a pole")
        return self._eval(z)

    def _eval(self, z):
        out = np.zeros(z.shape, dtype=complex)
        for p, c in zip(self.poles, self.pole_coeffs):
            out += c / (z - p) ** 2
        for c, a, s in zip(self.csc_coef, self.csc_freq, self.csc_shift):
            out += c * a * a / np.sin(a * (z - s)) ** 2
        for k, c in enumerate(self.bg_cos):
            out += c * np.cos(k * self.omega * z)
        for k, c in enumerate(self.bg_sin):
            out += c * np.sin(k * self.omega * z)
        if len(self.bg_poly):
            out += P.polyval(z, self.bg_poly)
        return out

    def kernel_args(self):
        """Flat array tuple consumed by the compiled stepper."""
        return (
            self.poles.astype(complex),
            self.pole_coeffs.astype(complex),
            self.csc_coef.astype(float),
            self.csc_freq.astype(float),
            self.csc_shift.astype(float),
            float(self.omega),
            self.bg_cos.astype(complex),
            self.bg_sin.astype(complex),
            self.bg_poly.astype(complex),
        )

    @property
    def is_real(self):
        """True when ``u`` is real on the real axis (so ``L`` is formally self-adjoint)."""
        real_poles = all(
            (abs(p.imag) < 1e-14 and abs(c.imag) < 1e-14)
            or any(abs(q - p.conjugate()) < 1e-10 and abs(d - c.conjugate()) < 1e-10
                   for q, d in zip(self.poles, self.pole_coeffs))
            for p, c in zip(self.poles, self.pole_coeffs)
        )
        bg = [self.bg_cos, self.bg_sin, self.bg_poly]
        return real_poles and all(np.all(np.abs(np.imag(b)) < 1e-14) for b in bg)

    def check_period(self, npts=17, rtol=1e-12):
        """Max relative deviation of ``u(z + T)`` from ``u(z)`` on a complex test grid."""
        if self.period is None:
            return math.inf
        rng = np.random.default_rng(0)
        z = rng.uniform(0, self.period, npts) + 1j * rng.uniform(0.1, 0.5, npts)
        a, b = self._eval(z), self._eval(z + self.period)
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))

    def to_json(self):
        return dict(self.descriptor)


# -- families -------------------------------------------------------------

def _as_int(d, key, default=None, minimum=1):
    v = d.get(key, default)
    if v is None or isinstance(v, bool) or int(v) != v or int(v) < minimum:
        raise DescriptorError(f"{key!r} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def _as_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise DescriptorError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def _background(bg):
    if bg is None:
        return {}
    if not isinstance(bg, dict):
        raise DescriptorError("background must be an object")
    extra = set(bg) - _BG_KEYS
    if extra:
        raise DescriptorError(f"unknown background keys: {sorted(extra)}")
    out = {}
    for key in ("cos", "sin", "poly"):
        if key in bg:
            out[key] = _carr([_as_complex(c) for c in bg[key]])
    if "omega" in bg:
        out["omega"] = float(bg["omega"])
        if out["omega"] <= 0:
            raise DescriptorError("omega must be positive")
    return out


def adler_moser_theta(k, tau=()):
    """Ascending coefficients of the Adler-Moser polynomial ``theta_k``.

    Built from ``theta_{j+1}' theta_{j-1} - theta_{j+1} theta_{j-1}' =
    (2j+1) theta_j**2`` with ``theta_0 = 1``, ``theta_1 = x``.  Each step is
    a linear solve whose kernel is spanned by ``theta_{j-1}``; the particular
    solution has zero coefficient at ``x**deg(theta_{j-1})`` and
    ``tau[j-1]`` times ``theta_{j-1}`` is added (so ``theta_2 = x**3 + tau_2``).
    """
    tau = list(tau) + [0.0] * max(0, k - 1 - len(tau))
    thetas = [np.array([1.0]), np.array([0.0, 1.0])]
    for j in range(1, k):
        prev, cur = thetas[j - 1], thetas[j]
        deg = (j + 1) * (j + 2) // 2
        dprev = P.polyder(prev) if len(prev) > 1 else np.zeros(1)
        rhs = (2 * j + 1) * P.polymul(cur, cur)
        cols = []
        for i in range(deg + 1):
            e = np.zeros(deg + 1)
            e[i] = 1.0
            de = P.polyder(e)
            col = P.polysub(P.polymul(de, prev), P.polymul(e, dprev))
            cols.append(np.pad(col, (0, 2 * deg + 2 - len(col))))
        A = np.array(cols).T
        b = np.pad(rhs, (0, A.shape[0] - len(rhs)))
        keep = [i for i in range(deg + 1) if i != len(prev) - 1]
        sol, *_ = np.linalg.lstsq(A[:, keep], b, rcond=None)
        c = np.zeros(deg + 1)
        c[keep] = sol
        if np.max(np.abs(A @ c - b)) > 1e-8 * max(1.0, np.max(np.abs(b))):
            raise DescriptorError(f"Adler-Moser recursion failed at step {j}")
        c = P.polyadd(c, tau[j - 1] * prev)
        c[np.abs(c) < 1e-12 * np.max(np.abs(c))] = 0.0
        thetas.append(c)
    return thetas[k]


def _cluster_roots(roots, tol):
    """Group numerically split multiple roots; returns (centres, multiplicities)."""
    roots = list(roots)
    groups = []
    while roots:
        r = roots.pop(0)
        g = [r] + [q for q in roots if abs(q - r) < tol]
        roots = [q for q in roots if abs(q - r) >= tol]
        groups.append(g)
    centres = [complex(np.mean(g)) for g in groups]
    centres = [complex(c.real, 0.0) if abs(c.imag) < 1e-13 * (1 + abs(c)) else c for c in centres]
    return centres, [len(g) for g in groups]


def _theta_poles(theta):
    """Distinct roots of ``theta`` with multiplicities.

    Numerical roots of a multiple root scatter like ``eps**(1/mult)``; the
    coarsest clustering whose product still reproduces ``theta`` wins.
    """
    roots = np.roots(theta[::-1])
    scale = 1.0 + float(np.max(np.abs(roots)))
    ref = np.max(np.abs(theta))
    for tol in (5e-2, 1e-2, 1e-3, 1e-6, 0.0):
        centres, mult = _cluster_roots(roots, tol * scale)
        rebuilt = P.polyfromroots([c for c, m in zip(centres, mult) for _ in range(m)])
        if len(rebuilt) == len(theta) and np.max(np.abs(rebuilt - theta)) < 1e-8 * ref:
            return centres, mult
    return _cluster_roots(roots, 0.0)


def make_family(spec) -> Potential:
    """Build a :class:`Potential` from a descriptor dict or JSON string."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "family" not in spec:
        raise DescriptorError("descriptor must be an object with a 'family' key")
    fam = spec["family"]
    if fam not in FAMILIES:
        raise DescriptorError(f"unknown family {fam!r}")
    extra = set(spec) - _FAMILY_KEYS[fam] - {"family", "background", "period"}
    if extra:
        raise DescriptorError(f"unknown keys for {fam}: {sorted(extra)}")
    bg = _background(spec.get("background"))
    kw = {}
    period = spec.get("period")
    if period is not None:
        period = float(period)
        if period <= 0:
            raise DescriptorError("period must be positive")

    if fam == "inverse_square":
        n = _as_int(spec, "n")
        kw.update(poles=_carr([float(spec.get("center", 0.0))]), pole_coeffs=_carr([n * (n + 1)]))
    elif fam == "csc_squared":
        m = _as_int(spec, "m", 1)
        a = float(spec.get("a", 1.0))
        if a <= 0:
            raise DescriptorError("'a' must be positive")
        kw.update(csc_coef=np.array([m * (m + 1.0)]), csc_freq=np.array([a]),
                  csc_shift=np.array([float(spec.get("shift", 0.0))]))
        period = period or math.pi / a
    elif fam == "rational_poles":
        poles = [_as_complex(p) for p in spec.get("poles", [])]
        coeffs = [_as_complex(c) for c in spec.get("coeffs", [2.0] * len(poles))]
        if len(coeffs) != len(poles):
            raise DescriptorError("'coeffs' must match 'poles' in length")
        for i in range(len(poles)):
            for j in range(i):
                if abs(poles[i] - poles[j]) < 1e-12:
                    raise DescriptorError("repeated pole")
        kw.update(poles=_carr(poles), pole_coeffs=_carr(coeffs))
    elif fam == "adler_moser":
        k = _as_int(spec, "k")
        tau = [float(t) for t in spec.get("tau", [])]
        if len(tau) > k - 1:
            raise DescriptorError(f"adler_moser k={k} takes at most {k - 1} tau values")
        theta = adler_moser_theta(k, tau)
        centres, mult = _theta_poles(theta)
        kw.update(poles=_carr(centres), pole_coeffs=_carr([2.0 * m for m in mult]), theta=theta)

    if "cos" in bg or "sin" in bg:
        if "omega" in bg:
            omega = bg["omega"]
        elif period is not None:
            omega = 2 * math.pi / period
        else:
            omega = 1.0
        kw.update(omega=omega, bg_cos=bg.get("cos", _carr([])), bg_sin=bg.get("sin", _carr([])))
        if period is None and fam == "free":
            period = 2 * math.pi / omega
    if "poly" in bg:
        kw["bg_poly"] = bg["poly"]
        if len(bg["poly"]) > 1 and np.any(bg["poly"][1:] != 0):
            period = None
    if fam in ("inverse_square", "rational_poles", "adler_moser"):
        period = None if "period" not in spec else period

    desc = {"family": fam}
    desc.update({k: v for k, v in spec.items() if k not in ("family",)})
    return Potential(family=fam, descriptor=desc, period=period, **kw)


def free(period=None, **bg):
    d = {"family": "free"}
    if period is not None:
        d["period"] = period
    if bg:
        d["background"] = bg
    return make_family(d)


def inverse_square(n=1, center=0.0, **bg):
    d = {"family": "inverse_square", "n": n, "center": center}
    if bg:
        d["background"] = bg
    return make_family(d)


def csc_squared(m=1, a=1.0, **bg):
    d = {"family": "csc_squared", "m": m, "a": a}
    if bg:
        d["background"] = bg
    return make_family(d)


def rational_poles(poles, coeffs=None, **bg):
    d = {"family": "rational_poles",
         "poles": [[p.real, p.imag] if isinstance(p, complex) else p for p in poles]}
    if coeffs is not None:
        d["coeffs"] = list(coeffs)
    if bg:
        d["background"] = bg
    return make_family(d)


def adler_moser(k, tau=(), **bg):
    d = {"family": "adler_moser", "k": k, "tau": list(tau)}
    if bg:
        d["background"] = bg
    return make_family(d)


# -- singularities ----------------------------------------------------------

def _real_pole_list(u: Potential, a, b):
    out = []
    for p in u.poles:
        if abs(p.imag) <= 1e-12 * (1 + abs(p.real)):
            out.append(p.real)
    for f, s in zip(u.csc_freq, u.csc_shift):
        mlo = math.floor((a - s) * f / math.pi) - 1
        mhi = math.ceil((b - s) * f / math.pi) + 1
        out.extend(s + m * math.pi / f for m in range(mlo, mhi + 1))
    return out


def list_singularities(u: Potential, interval):
    """Sorted real pole locations strictly inside ``interval``."""
    a, b = map(float, interval)
    if not a < b:
        raise DescriptorError(f"interval must satisfy a < b, got {interval}")
    tol = 1e-12 * (1 + abs(a) + abs(b))
    found = []
    for x in _real_pole_list(u, a, b):
        if abs(x - a) <= tol or abs(x - b) <= tol:
            raise PoleProximityError(f"interval endpoint coincides with pole at {x}")
        if a < x < b and not any(abs(x - y) <= tol for y in found):
            found.append(x)
    return sorted(found)


@dataclass(frozen=True)
class SingularityProfile:
    """Local data of ``u`` at a real pole.

    ``lower_coeffs[q]`` is the coefficient of ``y**(2q)`` for ``q < n``;
    ``tail`` is ``laurent`` minus the leading ``n(n+1)/y**2`` and those even
    terms, recorded verbatim (odd low-order terms, if present, stay in it).
    ``index == -1`` marks a non-admissible pole, with ``reason`` set.
    """

    location: float
    index: int
    lower_coeffs: list
    tail: LaurentSeries
    laurent: LaurentSeries
    reason: str = ""

    @property
    def admissible(self):
        return self.index >= 0

    def to_json(self):
        return {
            "location": self.location,
            "index": self.index,
            "lower_coeffs": [[c.real, c.imag] for c in self.lower_coeffs],
            "laurent": self.laurent.to_json(),
            "reason": self.reason,
        }


@lru_cache(maxsize=None)
def _bernoulli(n):
    """Exact Bernoulli numbers ``B_0..B_n`` (Akiyama-Tanigawa, ``B_1 = +1/2``)."""
    out, a = [], []
    for m in range(n + 1):
        a.append(Fraction(1, m + 1))
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return tuple(out)


@lru_cache(maxsize=None)
def _csc2_coeffs(nmax):
    """``1/sin(z)**2 = sum_n c_n z**(2n-2)``, ``c_n`` exact for ``n <= nmax``."""
    B = _bernoulli(2 * nmax)
    return tuple(
        float((-1) ** (n + 1) * (2 * n - 1) * 2 ** (2 * n) * B[2 * n] / math.factorial(2 * n))
        for n in range(nmax + 1)
    )


def _cos_taylor(a, order):
    return {e: (-1) ** (e // 2) * a**e / math.factorial(e) for e in range(0, order, 2)}


def _sin_taylor(a, order):
    return {e: (-1) ** (e // 2) * a**e / math.factorial(e) for e in range(1, order, 2)}


def potential_laurent(u: Potential, x0: float, order: int) -> LaurentSeries:
    """Laurent expansion of ``u`` at real ``x0`` with exponents ``< order``."""
    c = {}

    def add(e, v):
        if e < order:
            c[e] = c.get(e, 0) + v

    scale = 1 + abs(x0)
    for p, cf in zip(u.poles, u.pole_coeffs):
        d = x0 - p
        if abs(d) < 1e-12 * scale:
            add(-2, cf)
            continue
        r = cf / d**2
        for k in range(max(order, 0)):
            add(k, r * (k + 1) * (-1 / d) ** k)
    for cf, f, s in zip(u.csc_coef, u.csc_freq, u.csc_shift):
        w = f * (x0 - s)
        m = round(w / math.pi)
        if abs(w - m * math.pi) < 1e-12 * (1 + abs(w)):
            for n, coef in enumerate(_csc2_coeffs((order + 2) // 2 + 1)):
                e = 2 * n - 2
                add(e, cf * f * f * coef * f**e)
        else:
            rho = 0.5 * min(abs(w - m * math.pi), abs(w - (m + 1) * math.pi), abs(w - (m - 1) * math.pi)) / f
            term = laurent_from_samples(
                lambda z, cf=cf, f=f, s=s: cf * f * f / np.sin(f * (z - s)) ** 2, x0, rho, 0, order
            )
            for e, v in term.coeffs.items():
                add(e, v)
    for k, cf in enumerate(u.bg_cos):
        a = k * u.omega
        ca, sa = math.cos(a * x0), math.sin(a * x0)
        for e, v in _cos_taylor(a, order).items():
            add(e, cf * ca * v)
        for e, v in _sin_taylor(a, order).items():
            add(e, -cf * sa * v)
    for k, cf in enumerate(u.bg_sin):
        a = k * u.omega
        ca, sa = math.cos(a * x0), math.sin(a * x0)
        for e, v in _cos_taylor(a, order).items():
            add(e, cf * sa * v)
        for e, v in _sin_taylor(a, order).items():
            add(e, cf * ca * v)
    if len(u.bg_poly):
        for e, v in enumerate(_poly_shift(u.bg_poly, x0)):
            add(e, v)
    return LaurentSeries(x0, c, order)


def _poly_shift(coeffs, x0):
    """Coefficients of ``p(x0 + y)`` in ``y``."""
    out = np.zeros(len(coeffs), dtype=complex)
    for k, ck in enumerate(coeffs):
        for j in range(k + 1):
            out[j] += ck * math.comb(k, j) * x0 ** (k - j)
    return out


def singularity_profile(u: Potential, x_j: float, order: int = 12) -> SingularityProfile:
    """Index, even lower coefficients and tail of ``u`` at ``x_j``."""
    lau = potential_laurent(u, float(x_j), order)
    lead = lau.coeffs.get(-2, 0j)
    reason = ""
    n = -1
    if lau.valuation < -2:
        reason = f"pole of order {-lau.valuation} > 2"
    elif abs(lead) < 1e-12:
        n = 0
    else:
        cand = round((-1 + math.sqrt(max(0.0, 1 + 4 * lead.real))) / 2)
        target = cand * (cand + 1)
        if cand >= 1 and abs(lead - target) <= INDEX_RTOL * target:
            n = cand
        else:
            reason = f"leading coefficient {lead} is not of the form n(n+1)"
    if n < 0:
        return SingularityProfile(float(x_j), -1, [], lau, lau, reason)
    lower = [lau.coeffs.get(2 * q, 0j) if 2 * q < order else 0j for q in range(n)]
    strip = {-2: -n * (n + 1)} if n else {}
    strip.update({2 * q: -c for q, c in enumerate(lower)})
    tail = lau + LaurentSeries(lau.basepoint, strip)
    return SingularityProfile(float(x_j), n, lower, tail, lau)


def verify_pole_constraint(poles) -> float:
    """``max_j |sum_{k != j} (x_j - x_k)**-3|``; zero for s-meromorphic ``2 sum (x - x_j)**-2``."""
    poles = [complex(p) for p in poles]
    for i in range(len(poles)):
        for j in range(i):
            if abs(poles[i] - poles[j]) < 1e-14 * (1 + abs(poles[i])):
                raise DescriptorError(f"repeated pole {poles[i]}")
    worst = 0.0
    for j, pj in enumerate(poles):
        s = sum((pj - pk) ** -3 for k, pk in enumerate(poles) if k != j)
        worst = max(worst, abs(s))
    return worst
