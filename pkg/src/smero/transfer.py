"""Transfer and monodromy matrices, the Floquet discriminant, and gap reports.

Row convention: ``t[i, j]`` is the ``j``-th derivative at ``x1`` of the
solution with ``f_i^{(k)}(x0) = delta_ik``, so the solution normalised at
``x0`` equals ``sum_j t[i, j]`` times the one normalised at ``x1``.
The matrix acting on columns ``(f, f')`` is the transpose, and
``T(x0, x2) = T(x0, x1) @ T(x1, x2)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ._accel import thread_count
from .contour import real_path, propagate_system
from .errors import AperiodicPotential, ContourError, PropagationError
from .potential import _real_pole_list, list_singularities

TRANSFER_RTOL = 1e-12
ROOT_FTOL = 1e-10
ROOT_XTOL = 1e-12
CLOSED_GAP = 1e-8
PRECISE_BELOW = 1e-2


@dataclass(frozen=True)
class TransferMatrix:
    t: np.ndarray
    x0: float
    x1: float
    lam: complex
    sides: tuple = ()
    radius: float = 0.0

    @property
    def state_map(self):
        """Matrix sending the column ``(f(x0), f'(x0))`` to ``(f(x1), f'(x1))``."""
        return self.t.T

    @property
    def det(self):
        return complex(np.linalg.det(self.t))

    @property
    def trace(self):
        return complex(np.trace(self.t))

    def then(self, other: "TransferMatrix") -> "TransferMatrix":
        """Compose ``T(x0, x1)`` with ``T(x1, x2)``."""
        if abs(self.x1 - other.x0) > 1e-14 * (1 + abs(self.x1)):
            raise ContourError("transfer matrices do not chain")
        return TransferMatrix(self.t @ other.t, self.x0, other.x1, self.lam, self.sides + other.sides,
                              self.radius)

    def to_json(self):
        return {
            "x0": self.x0,
            "x1": self.x1,
            "lambda": [self.lam.real, self.lam.imag],
            "t": [[[v.real, v.imag] for v in row] for row in self.t],
            "convention": "row: f_i normalised at x0 = sum_j t_ij f_j normalised at x1",
            "sides": list(self.sides),
            "radius": self.radius,
        }


def transfer_matrix(u, lam, x0, x1, sides="upper", r=None, rtol=TRANSFER_RTOL) -> TransferMatrix:
    """Transfer matrix between two non-singular real points (either order)."""
    lam = complex(lam)
    x0, x1 = float(x0), float(x1)
    lo, hi = min(x0, x1), max(x0, x1)
    poles = list_singularities(u, (lo, hi))
    path = real_path(x0, x1, poles, r, sides)
    if path is None:
        return TransferMatrix(np.eye(2, dtype=complex), x0, x1, lam)
    for x in (x0, x1):
        if np.min(u.pole_distance(np.array([x]))) <= path.radius:
            raise ContourError(f"endpoint {x} within detour radius of a pole")
    y, _, _ = propagate_system(u, [lam, lam], [1, 0, 0, 1], path, False, rtol)
    t = np.array([[y[0], y[1]], [y[2], y[3]]], dtype=complex)
    side_tuple = path.sides if x0 < x1 else path.sides[::-1]
    return TransferMatrix(t, x0, x1, lam, tuple(side_tuple), path.radius)


def _period(u, period):
    T = period if period is not None else u.period
    if T is None:
        raise AperiodicPotential(f"{u!r} declares no period")
    return float(T)


def default_base_point(u, period=None):
    """Midpoint of the largest pole-free stretch of one period."""
    T = _period(u, period)
    poles = sorted({round(p % T, 14) % T for p in _real_pole_list(u, 0.0, T)})
    if not poles:
        return 0.5 * T
    gaps = [(poles[(i + 1) % len(poles)] - p) % T or T for i, p in enumerate(poles)]
    i = int(np.argmax(gaps))
    return (poles[i] + gaps[i] / 2) % T


def monodromy(u, lam, x0=None, period=None, sides="upper", r=None, rtol=TRANSFER_RTOL) -> TransferMatrix:
    T = _period(u, period)
    if x0 is None:
        x0 = default_base_point(u, T)
    return transfer_matrix(u, lam, x0, x0 + T, sides, r, rtol)


def discriminant(u, lam, x0=None, period=None, r=None, rtol=TRANSFER_RTOL) -> complex:
    return monodromy(u, lam, x0, period, "upper", r, rtol).trace


@dataclass
class SweepRow:
    lam: complex
    delta: complex
    error: str = ""


def discriminant_sweep(u, lams, x0=None, period=None, r=None, rtol=TRANSFER_RTOL, threads=None):
    """``Delta(lam)`` for each grid value, in grid order; failures are flagged, not raised."""
    T = _period(u, period)
    if x0 is None:
        x0 = default_base_point(u, T)

    def one(lam):
        try:
            return SweepRow(complex(lam), discriminant(u, lam, x0, T, r, rtol))
        except PropagationError as exc:
            return SweepRow(complex(lam), complex(math.nan, math.nan), str(exc))

    lams = list(lams)
    workers = threads or thread_count()
    if workers == 1 or len(lams) < 4:
        return [one(lam) for lam in lams]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, lams))


def sweep_csv(rows) -> str:
    lines = ["lambda_re,lambda_im,delta_re,delta_im"]
    for row in rows:
        vals = (row.lam.real, row.lam.imag, row.delta.real, row.delta.imag)
        lines.append(",".join(format(v, ".16e") for v in vals))
    return "\n".join(lines) + "\n"


@dataclass
class Gap:
    """A spectral gap; ``length`` is kept separately because precise widths
    can be far below the float spacing of ``left`` and ``right``."""

    left: float
    right: float
    kind: str  # "open" | "closed"
    level: int  # +2 or -2
    length: float = None

    def __post_init__(self):
        if self.length is None:
            self.length = self.right - self.left

    def to_json(self):
        return {"left": self.left, "right": self.right, "length": self.length, "kind": self.kind}


@dataclass
class GapReport:
    gaps: list
    edges: list  # (lam, level, multiplicity)
    lam_min: float
    lam_max: float
    max_imag: float = 0.0
    warnings: list = field(default_factory=list)

    def lengths(self):
        return [g.length for g in self.gaps]

    def to_json(self):
        return [g.to_json() for g in self.gaps]


def _default_lam_min(u):
    bg = sum(abs(c) for c in u.bg_cos) + sum(abs(c) for c in u.bg_sin)
    return -1.0 - 2.0 * bg


def periodic_spectrum_gaps(u, lam_max, lam_min=None, dk=0.02, x0=None, period=None, r=None,
                           rtol=TRANSFER_RTOL, threads=None, precise=False, dps=None) -> GapReport:
    """Band edges (roots of ``Delta = +-2``) on ``(lam_min, lam_max]`` and the gaps between them.

    The positive axis is sampled uniformly in ``k = sqrt(lam)``.  Simple roots
    are bracketed by sign changes; near-touching edges are found by
    maximising ``|Delta|`` around sampled extrema, and a peak within
    ``ROOT_FTOL`` of 2 is a double root (closed gap).

    With ``precise=True`` every double root is re-measured at ``dps`` digits
    (see ``smero.precise.refine_gap``), so gaps far narrower than double
    precision can resolve are reported as open with their true width.
    """
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    T = _period(u, period)
    if x0 is None:
        x0 = default_base_point(u, T)
    if lam_min is None:
        lam_min = _default_lam_min(u)
    neg = np.linspace(lam_min, 0.0, max(2, int(math.ceil(-lam_min / 0.05)) + 1))[:-1] if lam_min < 0 else []
    kmax = math.sqrt(lam_max)
    ks = np.linspace(math.sqrt(max(lam_min, 0.0)), kmax, max(3, int(math.ceil(kmax / dk)) + 1))
    grid = np.concatenate([np.asarray(neg, dtype=float), ks**2])
    rows = discriminant_sweep(u, grid, x0, T, r, rtol, threads)
    if any(row.error for row in rows):
        bad = [row.lam.real for row in rows if row.error]
        raise PropagationError(f"discriminant failed at lambda = {bad[:5]}")
    D = np.array([row.delta.real for row in rows])
    max_imag = float(max(abs(row.delta.imag) for row in rows))

    def delta(lam):
        return discriminant(u, lam, x0, T, r, rtol).real

    def peak(sgn, a, b):
        res = minimize_scalar(lambda x: -sgn * delta(x), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-11})
        return float(res.x), -float(res.fun) - 2.0

    edges = []
    for level in (2.0, -2.0):
        g = D - level
        sgn = 1.0 if level > 0 else -1.0
        for i in range(len(grid) - 1):
            if g[i] == 0.0:
                edges.append((float(grid[i]), int(level), 1))
            elif g[i] * g[i + 1] < 0:
                root = brentq(lambda x: delta(x) - level, grid[i], grid[i + 1], xtol=ROOT_XTOL)
                edges.append((float(root), int(level), 1))
        for i in range(1, len(grid) - 1):
            a, b, c = sgn * D[i - 1], sgn * D[i], sgn * D[i + 1]
            if not (b >= a and b >= c) or b < 1.5:
                continue
            if (g[i - 1] * g[i] < 0) or (g[i] * g[i + 1] < 0) or g[i] == 0.0:
                continue
            lam_pk, excess = peak(sgn, grid[i - 1], grid[i + 1])
            if abs(excess) <= ROOT_FTOL:
                edges.append((lam_pk, int(level), 2))
            elif excess > ROOT_FTOL:
                lo = brentq(lambda x: delta(x) - level, grid[i - 1], lam_pk, xtol=ROOT_XTOL) \
                    if sgn * (D[i - 1] - level) < 0 else None
                hi = brentq(lambda x: delta(x) - level, lam_pk, grid[i + 1], xtol=ROOT_XTOL) \
                    if sgn * (D[i + 1] - level) < 0 else None
                if lo is None or hi is None:
                    continue
                edges.append((float(lo), int(level), 1))
                edges.append((float(hi), int(level), 1))
    edges.sort()
    gaps, warnings, doubles = [], [], []
    simple = []
    for lam, level, mult in edges:
        if mult == 2:
            doubles.append((lam, level))
        else:
            simple.append((lam, level))
    for (l1, v1), (l2, v2) in zip(simple, simple[1:]):
        if abs(delta(0.5 * (l1 + l2))) <= 2.0:
            continue  # a band
        if v1 != v2:
            warnings.append(f"edge levels disagree around ({l1}, {l2}); grid too coarse?")
            continue
        lam_pk, excess = peak(1.0 if v1 > 0 else -1.0, l1, l2)
        if excess <= ROOT_FTOL or l2 - l1 < CLOSED_GAP or (precise and l2 - l1 < PRECISE_BELOW):
            doubles.append((lam_pk, v1))  # noise split a double root, or worth re-measuring
        else:
            gaps.append(Gap(l1, l2, "open", v1))
    for lam, level in doubles:
        if precise:
            gaps.append(_precise_gap(u, lam, level, x0, T, dps))
        else:
            gaps.append(Gap(lam, lam, "closed", level))
    gaps.sort(key=lambda g: g.left)
    return GapReport(gaps, edges, float(lam_min), float(lam_max), max_imag, warnings)


def _precise_gap(u, lam, level, x0, T, dps):
    from . import precise as P

    left, right, _, _ = P.refine_gap(u, lam, x0, T, dps or P.DEFAULT_DPS)
    width = float(right - left)
    if width > 0:
        return Gap(float(left), float(right), "open", level, width)
    return Gap(float(left), float(left), "closed", level, 0.0)
