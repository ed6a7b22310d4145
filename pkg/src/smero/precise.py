"""Arbitrary-precision monodromy by Taylor marching and Frobenius pole crossing.

This route never leaves the real axis.  Between poles the solution is
advanced by Taylor steps of length at most ``rho / STEP_DIV``, where ``rho``
is the distance to the nearest singularity of ``u``.  Each real pole is
crossed by expanding the incoming data in the two local Frobenius
solutions and re-evaluating them on the far side, which is legitimate
because both are single-valued when the log obstruction vanishes.

It shares no code path with the contour stepper and serves two purposes:
an independent check of the double-precision transfer matrices, and
resolving gap widths far below double-precision resolution.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath
from mpmath import mp

from .errors import LogTermRequired, NonAdmissiblePole
from .potential import _bernoulli, list_singularities, singularity_profile

STEP_DIV = 4
H_MAX = 0.5
POLISH_ABOVE = 1e-10
DEFAULT_DPS = 64


def _order(dps, ratio):
    return int(math.ceil(dps * math.log(10) / math.log(ratio))) + 10


def _csc2_exact(nmax):
    B = _bernoulli(2 * nmax)
    return [(-1) ** (n + 1) * (2 * n - 1) * 2 ** (2 * n) * B[2 * n] / math.factorial(2 * n)
            for n in range(nmax + 1)]


def _mpc(c):
    c = complex(c)
    return mp.mpf(c.real) if c.imag == 0 else mp.mpc(c.real, c.imag)


def _series_recip(q, N):
    r = [1 / q[0]]
    for k in range(1, N):
        r.append(-mpmath.fdot(q[1:k + 1], r[k - 1::-1]) / q[0])
    return r


def _u_expansion(u, x0, N, pole=False):
    """Coefficients of ``u(x0 + y)`` at exponents ``-2 .. N-3`` (list index = exponent + 2).

    ``pole=True`` expands about a real pole of ``u``; otherwise ``x0`` must
    be a regular point and the two leading entries are zero.
    """
    x0 = snap(x0)
    out = [mp.mpf(0)] * N
    tol = mp.mpf(10) ** (-12)
    for p, c in zip(u.poles, u.pole_coeffs):
        p, c = _mpc(p), _mpc(c)
        d = x0 - p
        if abs(d) < tol:
            out[0] += c
            continue
        for k in range(N - 2):
            out[k + 2] += c * (k + 1) * (-1) ** k / d ** (k + 2)
    for c, a, s in zip(u.csc_coef, u.csc_freq, u.csc_shift):
        c, a, s = mp.mpf(c), snap(a), snap(s)
        w = a * (x0 - s)
        m = mpmath.nint(w / mp.pi)
        if abs(w - m * mp.pi) < tol:
            exact = _csc2_exact(N // 2 + 1)
            for n, cf in enumerate(exact):
                e = 2 * n - 2
                if e + 2 < N:
                    out[e + 2] += c * a * a * mp.mpf(cf.numerator) / cf.denominator * a ** e
            continue
        sw, cw = mpmath.sin(w), mpmath.cos(w)
        S = [(sw if k % 4 == 0 else cw if k % 4 == 1 else -sw if k % 4 == 2 else -cw) * a ** k / mpmath.factorial(k)
             for k in range(N - 2)]
        Q = [mpmath.fdot(S[:k + 1], S[k::-1]) for k in range(N - 2)]
        R = _series_recip(Q, N - 2)
        for k in range(N - 2):
            out[k + 2] += c * a * a * R[k]
    omega = snap(u.omega)
    for kind, coeffs in (("cos", u.bg_cos), ("sin", u.bg_sin)):
        for k, c in enumerate(coeffs):
            if c == 0:
                continue
            c = _mpc(c)
            a = k * omega
            phase = a * x0 if kind == "cos" else a * x0 - mp.pi / 2
            for j in range(N - 2):
                out[j + 2] += c * a ** j / mpmath.factorial(j) * mpmath.cos(phase + j * mp.pi / 2)
    for k, c in enumerate(u.bg_poly):
        c = _mpc(c)
        for j in range(min(k + 1, N - 2)):
            out[j + 2] += c * math.comb(k, j) * x0 ** (k - j)
    return out


def _taylor_step(ucoef, states, lam, h, nmax=4000):
    """Advance each ``(f, f')`` in ``states`` by ``h``.

    Terms are generated until four consecutive ones fall below the working
    precision; ``u`` coefficients past the stored ones are below it by
    construction of the step size.
    """
    ut = ucoef[2:]
    nu = len(ut)
    eps = mp.mpf(2) ** (-mp.prec - 4)
    out = []
    for f0, f1 in states:
        c = [f0, f1]
        val, der = f0 + f1 * h, f1
        hk = h
        big = max(abs(f0), abs(f1 * h), mp.mpf(1e-300))
        quiet = 0
        k = 0
        while quiet < 4 and k < nmax:
            lo = max(0, k - nu + 1)
            ck = (mpmath.fdot(ut[:k + 1 - lo], c[k:lo - 1 if lo else None:-1]) - lam * c[k]) / ((k + 1) * (k + 2))
            c.append(ck)
            der += (k + 2) * ck * hk
            hk *= h
            term = ck * hk
            val += term
            big = max(big, abs(term))
            quiet = quiet + 1 if abs(term) <= eps * big else 0
            k += 1
        out.append((val, der))
    return out


def _frobenius_pair(ulau, n, lam, N):
    """Lower and upper local solutions as coefficient lists (exponent ``rho + k``)."""
    lead = n * (n + 1)
    sols = []
    for rho in (-n, n + 1):
        a = [mp.mpf(1)]
        scale = mp.mpf(1)
        for k in range(1, N):
            rhs = lam * a[k - 2] if k >= 2 else mp.mpf(0)
            m = min(k, len(ulau) - 1)
            rhs -= mpmath.fdot(ulau[1:m + 1], a[k - 1:k - m - 1 if k - m - 1 >= 0 else None:-1])
            d = lead - (rho + k) * (rho + k - 1)
            if d == 0:
                if abs(rhs) > mp.mpf(10) ** (-(mp.dps // 2)) * scale:
                    raise LogTermRequired(None, complex(lam), complex(rhs))
                a.append(mp.mpf(0))
            else:
                a.append(rhs / d)
            scale = max(scale, abs(a[-1]))
        sols.append((rho, a))
    return sols


def _frob_eval(rho, a, y):
    val = mpmath.fdot(a, [y ** (rho + k) for k in range(len(a))])
    der = mpmath.fdot([(rho + k) * a[k] for k in range(len(a))], [y ** (rho + k - 1) for k in range(len(a))])
    return val, der


def snap(x):
    """``x`` as an mp number, made exact when it is a small rational multiple of pi."""
    if isinstance(x, (mp.mpf, mp.mpc)):
        return x
    x = float(x)
    if x != 0.0:
        q = Fraction(x / math.pi).limit_denominator(720)
        if abs(float(q) * math.pi - x) <= 4e-16 * abs(x):
            return mp.pi * q.numerator / q.denominator
    return mp.mpf(x)


class _Marcher:
    """A fixed real path from ``x0`` to ``x1`` with every ``u`` expansion precomputed.

    Repeated runs at different ``lam`` only redo the solution recursions.
    """

    def __init__(self, u, x0, x1, dps):
        self.u, self.dps = u, dps
        self.plan = []
        with mp.workdps(dps):
            a, b = snap(x0), snap(x1)
            lo, hi = float(min(a, b)), float(max(a, b))
            poles = [snap(p) for p in list_singularities(u, (lo, hi))]
            if a > b:
                poles = poles[::-1]
            sign = 1 if b > a else -1
            cur = a
            for p in poles:
                prof = singularity_profile(u, float(p), order=4)
                if not prof.admissible or prof.index < 1:
                    raise NonAdmissiblePole(prof.reason or f"non-admissible pole at {float(p)}")
                near = [abs(q - p) for q in poles if q is not p] + [abs(a - p), abs(b - p)]
                r = min(self._dist(float(p), exclude_self=True), *(float(d) for d in near)) / STEP_DIV
                r = mp.mpf(r)
                self._march(cur, p - sign * r)
                N = _order(dps, STEP_DIV) + 2 * prof.index
                self.plan.append(("pole", p, sign * r, prof.index, _u_expansion(u, p, N, pole=True), N))
                cur = p + sign * r
            self._march(cur, b)

    def _dist(self, x, exclude_self=False):
        """Distance from real ``x`` to the nearest singularity (other than ``x`` itself)."""
        cand = [abs(p - x) for p in self.u.poles if not (exclude_self and abs(p - x) < 1e-9)]
        for a, s in zip(self.u.csc_freq, self.u.csc_shift):
            w = (x - s) * a / math.pi
            m = math.floor(w)
            for j in (m - 1, m, m + 1, m + 2):
                d = abs(w - j) * math.pi / a
                if not (exclude_self and d < 1e-9):
                    cand.append(d)
        return min(cand) if cand else math.inf

    def _march(self, start, stop):
        x = start
        direction = 1 if stop > x else -1
        while abs(stop - x) > mp.mpf(10) ** (-(self.dps - 5)):
            rho = self._dist(float(x))
            h = min(abs(stop - x), mp.mpf(min(rho / STEP_DIV, H_MAX)))
            N = _order(self.dps, rho / float(h)) if math.isfinite(rho) else 0
            self.plan.append(("taylor", x, direction * h, _u_expansion(self.u, x, max(N, 3))))
            x = x + direction * h

    def run(self, lam, states):
        with mp.workdps(self.dps):
            lam = _as_mp(lam)
            states = [(_as_mp(f), _as_mp(g)) for f, g in states]
            for step in self.plan:
                if step[0] == "taylor":
                    states = _taylor_step(step[3], states, lam, step[2])
                    continue
                _, p, r, n, ulau, N = step
                try:
                    (rl, al), (ru, au) = _frobenius_pair(ulau, n, lam, N)
                except LogTermRequired as exc:
                    raise LogTermRequired(float(p), complex(lam), exc.obstruction) from None
                lv, ld = _frob_eval(rl, al, -r)
                uv, ud = _frob_eval(ru, au, -r)
                det = lv * ud - uv * ld
                lv2, ld2 = _frob_eval(rl, al, r)
                uv2, ud2 = _frob_eval(ru, au, r)
                new = []
                for f, g in states:
                    alpha = (f * ud - uv * g) / det
                    beta = (lv * g - ld * f) / det
                    new.append((alpha * lv2 + beta * uv2, alpha * ld2 + beta * ud2))
                states = new
            return states


def _as_mp(v):
    return v if isinstance(v, (mp.mpf, mp.mpc)) else _mpc(v)


_CACHE = {}


def _marcher(u, x0, x1, dps):
    key = (id(u), float(x0), float(x1), dps)
    m = _CACHE.get(key)
    if m is None or m.u is not u:
        if len(_CACHE) > 64:
            _CACHE.clear()
        m = _CACHE[key] = _Marcher(u, x0, x1, dps)
    return m


def transfer_matrix_precise(u, lam, x0, x1, dps=DEFAULT_DPS):
    """``t`` (row convention) as a 2x2 ``mpmath.matrix`` computed at ``dps`` digits."""
    m = _marcher(u, x0, x1, dps)
    with mp.workdps(dps):
        (a, b), (c, d) = m.run(lam, [(mp.mpf(1), mp.mpf(0)), (mp.mpf(0), mp.mpf(1))])
        return mpmath.matrix([[a, b], [c, d]])


def monodromy_precise(u, lam, x0=None, period=None, dps=DEFAULT_DPS):
    from .transfer import _period, default_base_point

    T = _period(u, period)
    if x0 is None:
        x0 = default_base_point(u, T)
    with mp.workdps(dps):
        x1 = snap(x0) + snap(T)
    return transfer_matrix_precise(u, lam, x0, x1, dps)


def gap_excess(u, lam, x0=None, period=None, dps=DEFAULT_DPS):
    """``Delta**2 - 4`` written as ``(t00 - t11)**2 + 4 t01 t10`` (exact when ``det = 1``)."""
    t = monodromy_precise(u, lam, x0, period, dps)
    with mp.workdps(dps):
        return (t[0, 0] - t[1, 1]) ** 2 + 4 * t[0, 1] * t[1, 0]


def refine_gap(u, lam_guess, x0=None, period=None, dps=DEFAULT_DPS, h=(1e-5, 1e-10, 1e-15)):
    """Locate a near-double band edge and measure the gap around it.

    Fits ``E(lam) = Delta**2 - 4`` by a parabola at successively smaller
    spacings, moving to the vertex each time.  Returns
    ``(left, right, peak, resolution)`` as mp numbers; a vertex value below
    the working-precision ``resolution`` gives ``left == right``.
    """
    with mp.workdps(dps):
        lam = mp.mpf(lam_guess)
        peak, e2 = None, mp.mpf(-1)
        for hk in h:
            hk = mp.mpf(hk)
            Em, E0, Ep = (mp.re(gap_excess(u, lam + s * hk, x0, period, dps)) for s in (-1, 0, 1))
            e1 = (Ep - Em) / (2 * hk)
            e2 = (Ep - 2 * E0 + Em) / (2 * hk * hk)
            if e2 >= 0:
                break
            peak = E0 - e1 * e1 / (4 * e2)
            lam = lam - e1 / (2 * e2)
        resolution = mp.mpf(10) ** (-(dps - 14))
        if peak is None or e2 >= 0 or peak <= resolution:
            return lam, lam, peak, resolution
        half = mpmath.sqrt(-peak / e2)
        edges = [lam - half, lam + half]
        if half > POLISH_ABOVE:
            # the parabola misses the cubic term; polish each edge on E itself
            E = lambda x: mp.re(gap_excess(u, x, x0, period, dps))  # noqa: E731
            edges = [mpmath.findroot(E, (e, e + half * s * mp.mpf("1e-3")), solver="secant",
                                     tol=mp.mpf(10) ** (-(dps - 8)))
                     for e, s in zip(edges, (-1, 1))]
        return edges[0], edges[1], peak, resolution
