"""Pole-avoiding paths and propagation of ``-f'' + (u - lam) f = 0`` along them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from ._kernels import run_leg
from .errors import ContourError, PropagationError

DEFAULT_RTOL = 1e-10


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def geom(self):
        return (0, complex(self.start), complex(self.end), 0j, 0.0, 0.0, 0.0)

    def reversed(self):
        return Segment(self.end, self.start)

    def point(self, t):
        return self.start + t * (self.end - self.start), (self.end - self.start) * np.ones_like(t)

    def to_json(self):
        return {"type": "segment", "start": [self.start.real, self.start.imag],
                "end": [self.end.real, self.end.imag]}


@dataclass(frozen=True)
class Arc:
    """Half circle about a real pole, stepped in the angle from ``theta0`` to ``theta1``."""

    center: float
    radius: float
    theta0: float
    theta1: float
    start: complex
    end: complex

    @property
    def side(self):
        return "upper" if (self.theta0 + self.theta1) / 2 > 0 else "lower"

    def geom(self):
        return (1, complex(self.start), complex(self.end), complex(self.center),
                float(self.radius), float(self.theta0), float(self.theta1))

    def reversed(self):
        return Arc(self.center, self.radius, self.theta1, self.theta0, self.end, self.start)

    def point(self, t):
        th = self.theta0 + t * (self.theta1 - self.theta0)
        e = np.exp(1j * th)
        return self.center + self.radius * e, 1j * self.radius * e * (self.theta1 - self.theta0)

    def to_json(self):
        return {"type": "arc", "center": self.center, "radius": self.radius, "side": self.side,
                "theta0": self.theta0, "theta1": self.theta1}


@dataclass(frozen=True)
class Contour:
    legs: tuple
    x0: float
    x1: float
    poles: tuple = ()
    radius: float = 0.0
    sides: tuple = ()

    @property
    def start(self):
        return self.legs[0].start

    @property
    def end(self):
        return self.legs[-1].end

    def reversed(self):
        return Contour(tuple(leg.reversed() for leg in reversed(self.legs)), self.x1, self.x0,
                       self.poles[::-1], self.radius, self.sides[::-1])

    def mirrored(self):
        """Complex-conjugate path: every detour moves to the other side of the axis."""
        flip = {"upper": "lower", "lower": "upper"}
        legs = tuple(
            Arc(leg.center, leg.radius, -leg.theta0, -leg.theta1, leg.start, leg.end)
            if isinstance(leg, Arc) else leg
            for leg in self.legs
        )
        return Contour(legs, self.x0, self.x1, self.poles, self.radius,
                       tuple(flip[s] for s in self.sides))

    def to_json(self):
        return {"x0": self.x0, "x1": self.x1, "radius": self.radius,
                "legs": [leg.to_json() for leg in self.legs]}


def default_radius(x0, x1, poles):
    """``min(0.1, gap / 4)`` over gaps between consecutive poles and endpoints."""
    pts = [x0, *sorted(poles), x1]
    gap = min(b - a for a, b in zip(pts, pts[1:]))
    return min(0.1, gap / 4)


def build_contour(x0, x1, poles=(), r=None, sides="upper") -> Contour:
    """Real segments joined by half-circle detours of radius ``r`` around each pole."""
    x0, x1 = float(x0), float(x1)
    if not x0 < x1:
        raise ContourError(f"need x0 < x1, got {x0}, {x1}")
    poles = sorted(float(p) for p in poles)
    for p in poles:
        if not x0 < p < x1:
            raise ContourError(f"pole {p} is not strictly inside ({x0}, {x1})")
    if isinstance(sides, str):
        sides = [sides] * len(poles)
    sides = list(sides)
    if len(sides) != len(poles):
        raise ContourError(f"{len(sides)} side choices for {len(poles)} poles")
    if any(s not in ("upper", "lower") for s in sides):
        raise ContourError(f"sides must be 'upper' or 'lower', got {sides}")
    if r is None:
        r = default_radius(x0, x1, poles) if poles else 0.0
    r = float(r)
    if poles:
        pts = [x0, *poles, x1]
        gaps = [b - a for a, b in zip(pts, pts[1:])]
        if not 0 < r < min(gaps) / 2:
            raise ContourError(f"radius {r} must lie in (0, {min(gaps) / 2})")
    legs = []
    cur = complex(x0)
    for p, side in zip(poles, sides):
        left, right = complex(p - r), complex(p + r)
        legs.append(Segment(cur, left))
        th0 = math.pi if side == "upper" else -math.pi
        legs.append(Arc(p, r, th0, 0.0, left, right))
        cur = right
    legs.append(Segment(cur, complex(x1)))
    return Contour(tuple(legs), x0, x1, tuple(poles), r, tuple(sides))


def real_path(a, b, poles, r=None, sides="upper"):
    """Contour from ``a`` to ``b`` in either direction, detouring the poles between them."""
    if a == b:
        return None
    lo, hi = min(a, b), max(a, b)
    inner = [p for p in poles if lo < p < hi]
    if isinstance(sides, str):
        sides = [sides] * len(inner)
    c = build_contour(lo, hi, inner, r, sides)
    return c if a < b else c.reversed()


@dataclass
class PropagationState:
    position: complex
    value: complex
    derivative: complex
    accumulated: complex = 0j
    companion_value: complex | None = None
    companion_derivative: complex | None = None
    steps: int = 0
    rejected: int = 0


@dataclass(frozen=True)
class SolutionCompanion:
    """A second solution ``Lg = lam g`` stepped alongside ``f``; accumulates ``int f g dz``."""

    lam: complex
    value: complex
    derivative: complex


def propagate_system(u, lams, y0, contour: Contour, accumulate=False, rtol=DEFAULT_RTOL, atol=None):
    """Step the raw state vector across every leg; returns ``(y, steps, rejected)``."""
    y = np.asarray(y0, dtype=complex)
    atol = rtol if atol is None else atol
    steps = rejected = 0
    for leg in contour.legs:
        y, na, nr, status = run_leg(leg.geom(), y, lams, accumulate, rtol, atol, u)
        steps += na
        rejected += nr
        if status:
            reason = {1: "step-size underflow (unflagged singularity?)",
                      2: "overflow / non-finite state", 3: "step budget exhausted"}[status]
            raise PropagationError(f"{reason} on leg {leg.to_json()}")
    return y, steps, rejected


def propagate(u, lam, contour: Contour, init, companion: SolutionCompanion | None = None,
              rtol=DEFAULT_RTOL, atol=None) -> PropagationState:
    """Carry ``(f, f')`` from the start of ``contour`` to its end.

    With a ``companion``, a second solution is stepped in the same pass and
    ``accumulated`` holds ``int f g dz`` along the path.
    """
    v, d = complex(init[0]), complex(init[1])
    if not (np.isfinite(v) and np.isfinite(d)):
        raise PropagationError("non-finite initial data")
    if companion is None:
        y, n, nr = propagate_system(u, [lam], [v, d], contour, False, rtol, atol)
        return PropagationState(contour.end, y[0], y[1], steps=n, rejected=nr)
    y0 = [v, d, companion.value, companion.derivative, 0j]
    y, n, nr = propagate_system(u, [lam, companion.lam], y0, contour, True, rtol, atol)
    return PropagationState(contour.end, y[0], y[1], y[4], y[2], y[3], n, nr)


def integrate_along(contour: Contour, func, epsabs=1e-13, epsrel=1e-12, breakpoints=()):
    """``int func(z) dz`` along the contour by adaptive Gauss-Kronrod per leg.

    ``breakpoints`` are real abscissae where ``func`` loses smoothness; they
    are passed to the quadrature on the segments that contain them.
    """
    total = 0j
    for leg in contour.legs:
        pts = None
        if isinstance(leg, Segment):
            a, b = leg.start.real, leg.end.real
            lo, hi = min(a, b), max(a, b)
            inner = sorted((x - a) / (b - a) for x in breakpoints if lo < x < hi)
            pts = inner or None

        def integrand(t, leg=leg):
            z, dz = leg.point(t)
            return complex(func(z) * dz)

        val, _ = quad_vec(integrand, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, points=pts, limit=2000)
        total += complex(val)
    return total
