"""Truncated Laurent series in a local variable ``y = x - basepoint``.

A :class:`LaurentSeries` stores a sparse ``{exponent: coefficient}`` map and
an integer ``trunc``: coefficients are trusted for exponents strictly below
``trunc`` and the series is ``sum(coeffs) + O(y**trunc)``.  Exact finite
series use ``trunc=EXACT``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BasepointMismatch, TruncationError

EXACT = 1 << 30


def _clean(coeffs, trunc):
    return {int(e): complex(c) for e, c in coeffs.items() if e < trunc and c != 0}


@dataclass(frozen=True)
class LaurentSeries:
    basepoint: float
    coeffs: dict = field(default_factory=dict)
    trunc: int = EXACT

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(self.coeffs, self.trunc))

    @classmethod
    def monomial(cls, exponent, coeff=1.0, basepoint=0.0, trunc=EXACT):
        return cls(basepoint, {exponent: coeff}, trunc)

    @classmethod
    def from_array(cls, values, start, basepoint=0.0, trunc=None):
        """Dense coefficients ``values[k]`` at exponent ``start + k``."""
        if trunc is None:
            trunc = start + len(values)
        return cls(basepoint, {start + k: v for k, v in enumerate(values)}, trunc)

    @property
    def valuation(self):
        """Lowest exponent present (``trunc`` for an all-zero series)."""
        return min(self.coeffs) if self.coeffs else self.trunc

    def __getitem__(self, e):
        return coefficient_at(self, e)

    def _check(self, other):
        if other.basepoint != self.basepoint:
            raise BasepointMismatch(f"basepoints differ: {self.basepoint} vs {other.basepoint}")

    def __add__(self, other):
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return LaurentSeries(self.basepoint, out, trunc)

    def __neg__(self):
        return LaurentSeries(self.basepoint, {e: -c for e, c in self.coeffs.items()}, self.trunc)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return series_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c):
        return LaurentSeries(self.basepoint, {e: c * v for e, v in self.coeffs.items()}, self.trunc)

    def derivative(self):
        """Term-wise d/dy; truncation drops by one."""
        return LaurentSeries(
            self.basepoint, {e - 1: e * c for e, c in self.coeffs.items()}, self.trunc - 1
        )

    def shift(self, k):
        """Multiply by ``y**k``."""
        return LaurentSeries(self.basepoint, {e + k: c for e, c in self.coeffs.items()}, self.trunc + k)

    def truncate(self, trunc):
        return LaurentSeries(self.basepoint, self.coeffs, min(trunc, self.trunc))

    def conj(self):
        """Coefficient-wise conjugate (the local data of ``g*`` at a real basepoint)."""
        return LaurentSeries(
            self.basepoint, {e: c.conjugate() for e, c in self.coeffs.items()}, self.trunc
        )

    def __call__(self, x):
        """Evaluate the retained terms at ``x`` (absolute coordinate)."""
        y = np.asarray(x, dtype=complex) - self.basepoint
        out = np.zeros_like(y)
        for e, c in self.coeffs.items():
            out = out + c * y**e
        return out

    def dense(self, lo, hi):
        """Coefficient array for exponents ``lo..hi-1`` (zeros where absent)."""
        if hi > self.trunc:
            raise TruncationError(f"exponent {hi - 1} beyond truncation {self.trunc}")
        return np.array([self.coeffs.get(e, 0j) for e in range(lo, hi)], dtype=complex)

    def to_json(self):
        return {
            "basepoint": float(self.basepoint),
            "trunc": int(self.trunc),
            "coeffs": [[e, c.real, c.imag] for e, c in sorted(self.coeffs.items())],
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            float(d["basepoint"]),
            {int(e): complex(re, im) for e, re, im in d["coeffs"]},
            int(d["trunc"]),
        )


def series_mul(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    """Cauchy product.

    ``(A + O(y^ta)) (B + O(y^tb))`` is only known up to
    ``min(val(A) + tb, val(B) + ta)``; terms at or past that order are dropped.
    """
    a._check(b)
    trunc = min(a.valuation + b.trunc, b.valuation + a.trunc, a.trunc + b.trunc)
    out = {}
    for ea, ca in a.coeffs.items():
        for eb, cb in b.coeffs.items():
            e = ea + eb
            if e < trunc:
                out[e] = out.get(e, 0) + ca * cb
    return LaurentSeries(a.basepoint, out, trunc)


def coefficient_at(s: LaurentSeries, e: int) -> complex:
    if e >= s.trunc:
        raise TruncationError(f"coefficient beyond truncation: exponent {e} >= {s.trunc}")
    return s.coeffs.get(e, 0j)


def principal_part(s: LaurentSeries) -> LaurentSeries:
    return LaurentSeries(s.basepoint, {e: c for e, c in s.coeffs.items() if e < 0}, s.trunc)


def regular_part(s: LaurentSeries) -> LaurentSeries:
    return LaurentSeries(s.basepoint, {e: c for e, c in s.coeffs.items() if e >= 0}, s.trunc)


def laurent_from_samples(func, basepoint, radius, lo, trunc, npts=256):
    """Laurent coefficients of ``func`` at ``basepoint`` from a circle of samples.

    Trapezoidal rule on ``|y| = radius`` (an FFT).  ``func`` must be analytic
    on the punctured disc of that radius and vectorised over complex input.
    Aliasing error is of order ``(radius / R)**npts`` where ``R`` is the
    distance to the next singularity; roundoff grows like ``radius**-e``.
    """
    theta = 2 * np.pi * np.arange(npts) / npts
    y = radius * np.exp(1j * theta)
    vals = np.asarray(func(basepoint + y), dtype=complex)
    spec = np.fft.fft(vals) / npts
    coeffs = {}
    for e in range(lo, trunc):
        coeffs[e] = spec[e % npts] / radius**e
    return LaurentSeries(basepoint, coeffs, trunc)
