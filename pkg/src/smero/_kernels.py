"""Adaptive Dormand-Prince 5(4) stepping along one contour leg.

The state is ``[f_0, f_0', f_1, f_1', ..., (acc)]``: ``npair`` solutions of
``f'' = (u - lam_p) f``, each with its own ``lam_p``, plus an optional
accumulator ``acc' = f_0 f_1``.  A leg is parameterised by ``t`` in
``[0, 1]``: a segment ``za + t (zb - za)`` or an arc
``c + r exp(i (th0 + t (th1 - th0)))``, so arcs are stepped in angle.

Two interchangeable implementations: ``_leg_numba`` (scalar loops under
``@njit``) and ``_leg_numpy`` (vectorised tableau algebra).  They share the
tableau and step-size controller and agree to rounding.

Status codes: 0 ok, 1 step-size underflow, 2 non-finite state, 3 step budget.
"""
import cmath

import numpy as np

from ._accel import backend, njit

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

MAX_STEPS = 2_000_000
H_MIN = 1e-14

_A = np.zeros((7, 7))
_A[1, :1] = [A21]
_A[2, :2] = [A31, A32]
_A[3, :3] = [A41, A42, A43]
_A[4, :4] = [A51, A52, A53, A54]
_A[5, :5] = [A61, A62, A63, A64, A65]
_A[6, :6] = [B1, 0.0, B3, B4, B5, B6]
_C = np.array([0.0, C2, C3, C4, C5, 1.0, 1.0])
_E = np.array([E1, 0.0, E3, E4, E5, E6, E7])


@njit(cache=True, nogil=True)
def _point(kind, za, zb, c, r, th0, th1, t):
    if kind == 0:
        return za + t * (zb - za), zb - za
    e = cmath.exp(1j * (th0 + t * (th1 - th0)))
    return c + r * e, 1j * r * e * (th1 - th0)


@njit(cache=True, nogil=True)
def eval_u(z, pl, pc, cc, cf, cs, om, tc, ts, pp):
    """Scalar potential evaluation matching ``Potential._eval``."""
    s = 0j
    for j in range(pl.shape[0]):
        d = z - pl[j]
        s += pc[j] / (d * d)
    for j in range(cc.shape[0]):
        sn = cmath.sin(cf[j] * (z - cs[j]))
        s += cc[j] * cf[j] * cf[j] / (sn * sn)
    for k in range(tc.shape[0]):
        s += tc[k] * cmath.cos(k * om * z)
    for k in range(ts.shape[0]):
        s += ts[k] * cmath.sin(k * om * z)
    acc = 0j
    for k in range(pp.shape[0] - 1, -1, -1):
        acc = acc * z + pp[k]
    return s + acc


@njit(cache=True, nogil=True)
def _rhs(t, y, out, lams, npair, accum, kind, za, zb, c, r, th0, th1,
         pl, pc, cc, cf, cs, om, tc, ts, pp):
    z, dz = _point(kind, za, zb, c, r, th0, th1, t)
    uz = eval_u(z, pl, pc, cc, cf, cs, om, tc, ts, pp)
    for p in range(npair):
        out[2 * p] = y[2 * p + 1] * dz
        out[2 * p + 1] = (uz - lams[p]) * y[2 * p] * dz
    if accum:
        out[2 * npair] = y[0] * y[2] * dz


@njit(cache=True, nogil=True)
def _leg_numba(kind, za, zb, c, r, th0, th1, y0, lams, accum, rtol, atol, h0,
               pl, pc, cc, cf, cs, om, tc, ts, pp):
    npair = lams.shape[0]
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty_like(k1)
    k3 = np.empty_like(k1)
    k4 = np.empty_like(k1)
    k5 = np.empty_like(k1)
    k6 = np.empty_like(k1)
    k7 = np.empty_like(k1)
    yt = np.empty_like(k1)
    yn = np.empty_like(k1)
    t = 0.0
    h = h0
    nacc = 0
    nrej = 0
    _rhs(t, y, k1, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
    while t < 1.0:
        if nacc + nrej > MAX_STEPS:
            return y, nacc, nrej, 3
        if h < H_MIN:
            return y, nacc, nrej, 1
        last = False
        if t + h >= 1.0:
            h = 1.0 - t
            last = True
        for i in range(n):
            yt[i] = y[i] + h * A21 * k1[i]
        _rhs(t + C2 * h, yt, k2, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
        for i in range(n):
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        _rhs(t + C3 * h, yt, k3, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
        for i in range(n):
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(t + C4 * h, yt, k4, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
        for i in range(n):
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(t + C5 * h, yt, k5, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
        for i in range(n):
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        _rhs(t + h, yt, k6, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
        for i in range(n):
            yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        _rhs(t + h, yn, k7, lams, npair, accum, kind, za, zb, c, r, th0, th1, pl, pc, cc, cf, cs, om, tc, ts, pp)
        err = 0.0
        for i in range(n):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            q = abs(e) / sc
            if q != q:
                return y, nacc, nrej, 2
            if q > err:
                err = q
        if err <= 1.0:
            t = 1.0 if last else t + h
            for i in range(n):
                y[i] = yn[i]
                k1[i] = k7[i]
                if not np.isfinite(y[i].real) or not np.isfinite(y[i].imag):
                    return y, nacc, nrej, 2
            nacc += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = h * fac
        else:
            nrej += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
    return y, nacc, nrej, 0


def _leg_numpy(kind, za, zb, c, r, th0, th1, y0, lams, accum, rtol, atol, h0, u):
    """Vectorised twin of ``_leg_numba``; ``u`` is the Potential itself."""
    npair = len(lams)
    y = np.array(y0, dtype=complex)
    K = np.empty((7, len(y)), dtype=complex)

    def rhs(t, yy):
        if kind == 0:
            z, dz = za + t * (zb - za), zb - za
        else:
            e = np.exp(1j * (th0 + t * (th1 - th0)))
            z, dz = c + r * e, 1j * r * e * (th1 - th0)
        uz = u._eval(np.array([z]))[0]
        out = np.empty_like(yy)
        out[0:2 * npair:2] = yy[1:2 * npair:2] * dz
        out[1:2 * npair:2] = (uz - lams) * yy[0:2 * npair:2] * dz
        if accum:
            out[2 * npair] = yy[0] * yy[2] * dz
        return out

    t, h, nacc, nrej = 0.0, h0, 0, 0
    K[0] = rhs(t, y)
    while t < 1.0:
        if nacc + nrej > MAX_STEPS:
            return y, nacc, nrej, 3
        if h < H_MIN:
            return y, nacc, nrej, 1
        last = t + h >= 1.0
        if last:
            h = 1.0 - t
        for s in range(1, 6):
            K[s] = rhs(t + _C[s] * h, y + h * (_A[s, :s] @ K[:s]))
        yn = y + h * (_A[6, :6] @ K[:6])
        K[6] = rhs(t + h, yn)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
        err = float(np.max(np.abs(h * (_E @ K)) / sc))
        if not np.isfinite(err):
            return y, nacc, nrej, 2
        if err <= 1.0:
            t = 1.0 if last else t + h
            y = yn
            K[0] = K[6]
            if not np.all(np.isfinite(y)):
                return y, nacc, nrej, 2
            nacc += 1
            h *= 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            nrej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return y, nacc, nrej, 0


def run_leg(geom, y0, lams, accum, rtol, atol, u, h0=0.05, which=None):
    """Step one leg with the selected backend; ``geom`` is ``(kind, za, zb, c, r, th0, th1)``."""
    which = which or backend()
    y0 = np.asarray(y0, dtype=np.complex128)
    lams = np.asarray(lams, dtype=np.complex128)
    if which == "numba":
        return _leg_numba(*geom, y0, lams, bool(accum), float(rtol), float(atol), float(h0),
                          *u.kernel_args())
    return _leg_numpy(*geom, y0, lams, bool(accum), float(rtol), float(atol), float(h0), u)
