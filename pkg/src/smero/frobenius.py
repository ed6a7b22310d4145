"""Local solutions of ``-f'' + (u - lam) f = 0`` at a regular singular point.

With ``u = sum_m u_m y**m`` (``u_{-2} = n(n+1)``) and
``f = sum_k a_k y**(rho + k)``, matching powers of ``y`` gives

    [n(n+1) - (rho+k)(rho+k-1)] a_k = lam a_{k-2} - sum_{i=1..k} u_{i-2} a_{k-i}.

The indicial roots are ``rho = -n`` and ``rho = n + 1``.  On the lower branch
the bracket vanishes at ``k = 2n + 1``; the right-hand side there is the
logarithmic obstruction.  It is a polynomial of degree at most ``n`` in
``lam``, and the pole is s-meromorphic exactly when it vanishes identically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DependentSpan, DescriptorError, LogTermRequired, NonAdmissiblePole
from .potential import Potential, potential_laurent, singularity_profile
from .series import LaurentSeries, coefficient_at, series_mul

OBSTRUCTION_RTOL = 1e-9


def indicial_exponents(profile):
    """``(-n, n + 1)``, the roots of ``rho (rho - 1) = n (n + 1)``."""
    if not profile.admissible:
        raise NonAdmissiblePole(profile.reason or f"non-admissible pole at {profile.location}")
    n = profile.index
    return -n, n + 1


def _recursion(u_coef, n, rho, lam, kmax):
    """Run the recursion for ``k = 0..kmax-1``.

    ``u_coef[m + 2]`` is the coefficient of ``y**m``.  Returns the
    coefficients, the obstruction (``None`` off the resonance) and the
    largest magnitude seen, which sets the tolerance scale.
    """
    a = np.zeros(kmax, dtype=complex)
    a[0] = 1.0
    obstruction = None
    scale = 1.0
    lead = n * (n + 1)
    for k in range(1, kmax):
        rhs = lam * a[k - 2] if k >= 2 else 0j
        for i in range(1, k + 1):
            if i < len(u_coef):
                rhs -= u_coef[i] * a[k - i]
        d = lead - (rho + k) * (rho + k - 1)
        if d == 0:
            obstruction = rhs
            a[k] = 0.0
        else:
            a[k] = rhs / d
        scale = max(scale, abs(a[k]))
    return a, obstruction, scale


def _local_data(u, x_j, trunc, branch):
    prof = singularity_profile(u, x_j, order=4)
    if not prof.admissible:
        raise NonAdmissiblePole(prof.reason or f"non-admissible pole at {x_j}")
    n = prof.index
    rho = -n if branch == "lower" else n + 1
    lau = potential_laurent(u, float(x_j), max(trunc - rho - 2, 1))
    u_coef = lau.dense(-2, lau.trunc)
    return n, rho, lau, u_coef


def frobenius_solution(u: Potential, x_j, lam, branch="lower", order=30, tol=OBSTRUCTION_RTOL):
    """Local solution ``y**rho (1 + ...)`` with coefficients for exponents ``< order``.

    The free coefficient at the lower-branch resonance is set to zero.
    """
    if branch not in ("lower", "upper"):
        raise DescriptorError(f"branch must be 'lower' or 'upper', got {branch!r}")
    n, rho, _, u_coef = _local_data(u, x_j, order, branch)
    kmax = order - rho
    a, obs, scale = _recursion(u_coef, n, rho, complex(lam), max(kmax, 2 * n + 2))
    if obs is not None and abs(obs) > tol * scale:
        raise LogTermRequired(float(x_j), lam, obs)
    return LaurentSeries(float(x_j), {rho + k: a[k] for k in range(kmax)}, order)


def log_obstruction(u: Potential, x_j, lam):
    """Right-hand side of the lower-branch recursion at ``k = 2n + 1``."""
    return _obstruction(u, x_j, lam)[0]


def _obstruction(u, x_j, lam):
    prof = singularity_profile(u, x_j, order=4)
    if not prof.admissible:
        raise NonAdmissiblePole(prof.reason or f"non-admissible pole at {x_j}")
    n = prof.index
    lau = potential_laurent(u, float(x_j), 2 * n)
    u_coef = lau.dense(-2, lau.trunc)
    _, obs, scale = _recursion(u_coef, n, -n, complex(lam), 2 * n + 2)
    return obs, scale, prof


@dataclass
class SmeroCertificate:
    pole: float
    n: int
    samples: list = field(default_factory=list)  # (lam, |obstruction|)
    verdict: bool = False
    reason: str = ""
    tol: float = OBSTRUCTION_RTOL

    def __bool__(self):
        return self.verdict

    def to_json(self):
        d = {
            "pole": self.pole,
            "n": self.n,
            "samples": [[lam.real, lam.imag, v] for lam, v in self.samples],
            "verdict": self.verdict,
        }
        if self.reason:
            d["reason"] = self.reason
        return d


def is_smeromorphic(u: Potential, x_j, tol=OBSTRUCTION_RTOL) -> SmeroCertificate:
    """Certify that every local solution at ``x_j`` is meromorphic for all ``lam``.

    The obstruction has degree at most ``n`` in ``lam``, so vanishing at
    ``n + 2`` distinct samples proves it vanishes identically.
    """
    prof = singularity_profile(u, x_j, order=4)
    if not prof.admissible:
        return SmeroCertificate(float(x_j), -1, verdict=False, reason=prof.reason, tol=tol)
    n = prof.index
    c0 = prof.lower_coeffs[0] if prof.lower_coeffs else 0j
    lams = [complex(s * (1 + abs(c0))) for s in range(1, n + 3)]
    samples, ok = [], True
    for lam in lams:
        obs, scale, _ = _obstruction(u, x_j, lam)
        obs = 0j if obs is None else obs
        samples.append((lam, abs(obs)))
        ok &= abs(obs) <= tol * scale
    return SmeroCertificate(float(x_j), n, samples, bool(ok), tol=tol)


def ode_residual(u: Potential, f: LaurentSeries, lam):
    """Coefficients of ``-f'' + (u - lam) f``, relative to the largest ``|a_k|``."""
    ulau = potential_laurent(u, f.basepoint, f.trunc - f.valuation - 2)
    res = -(f.derivative().derivative()) + series_mul(ulau, f) - f.scale(lam)
    ref = max(abs(c) for c in f.coeffs.values())
    return {e: abs(c) / ref for e, c in res.coeffs.items()}, res.trunc


# -- principal-part subspaces --------------------------------------------------

@dataclass(frozen=True)
class PrincipalSubspace:
    """Span of ``y**-n_k + sum_j alpha_kj y**-m_kj`` in canonical triangular form.

    ``exponents`` holds the pivots ``n_1 > n_2 > ...`` as positive integers;
    ``basis_rows[k]`` maps each filler ``m`` to ``alpha_{k,m}``.
    """

    exponents: tuple
    basis_rows: tuple

    @property
    def dim(self):
        return len(self.exponents)

    def basis(self, basepoint=0.0):
        out = []
        for n_k, row in zip(self.exponents, self.basis_rows):
            c = {-n_k: 1.0}
            c.update({-m: a for m, a in row.items()})
            out.append(LaurentSeries(basepoint, c))
        return out

    def contains(self, part: LaurentSeries, tol=1e-10):
        """Whether a principal part lies in the span; returns ``(ok, residual)``."""
        coords = [part.coeffs.get(-n_k, 0j) for n_k in self.exponents]
        rest = dict(part.coeffs)
        for beta, n_k, row in zip(coords, self.exponents, self.basis_rows):
            rest[-n_k] = rest.get(-n_k, 0) - beta
            for m, a in row.items():
                rest[-m] = rest.get(-m, 0) - beta * a
        residual = max((abs(c) for e, c in rest.items() if e < 0), default=0.0)
        scale = max([1.0] + [abs(c) for c in part.coeffs.values()])
        return residual <= tol * scale, residual

    def to_json(self):
        return {
            "exponents": list(self.exponents),
            "basis_rows": [{str(m): [a.real, a.imag] for m, a in row.items()} for row in self.basis_rows],
        }


def subspace_for_pole(n: int) -> PrincipalSubspace:
    """Principal parts allowed at an index-``n`` pole: ``y**-n, y**-(n-2), ...`` down to 1 or 2."""
    if int(n) != n or n < 1:
        raise DescriptorError(f"pole index must be >= 1, got {n}")
    exps = tuple(range(int(n), 0, -2))
    return PrincipalSubspace(exps, tuple({} for _ in exps))


def canonical_basis(span, tol=1e-12) -> PrincipalSubspace:
    """Reduced echelon form of principal parts, columns ordered by decreasing pole order."""
    span = list(span)
    if not span:
        return PrincipalSubspace((), ())
    cols = set()
    for s in span:
        s._check(span[0])
        if any(e >= 0 for e in s.coeffs):
            raise DescriptorError("canonical_basis expects pure principal parts")
        cols.update(-e for e in s.coeffs)
    cols = sorted(cols, reverse=True)
    M = np.array([[s.coeffs.get(-c, 0j) for c in cols] for s in span], dtype=complex)
    scale = np.max(np.abs(M)) if M.size else 0.0
    pivots, r = [], 0
    for j in range(len(cols)):
        if r == len(span):
            break
        i = r + int(np.argmax(np.abs(M[r:, j])))
        if abs(M[i, j]) <= tol * scale:
            continue
        M[[r, i]] = M[[i, r]]
        M[r] /= M[r, j]
        for k in range(len(span)):
            if k != r:
                M[k] -= M[k, j] * M[r]
        pivots.append(j)
        r += 1
    if r < len(span):
        raise DependentSpan(f"{len(span)} principal parts span only {r} dimensions")
    exps, rows = [], []
    pivot_set = set(pivots)
    for k, j in enumerate(pivots):
        exps.append(cols[j])
        rows.append({cols[c]: complex(M[k, c]) for c in range(len(cols))
                     if c not in pivot_set and abs(M[k, c]) > tol * scale})
    return PrincipalSubspace(tuple(exps), tuple(rows))


def pair_residue(f: LaurentSeries, g: LaurentSeries) -> complex:
    """Coefficient of ``y**-1`` in ``f g``."""
    return coefficient_at(series_mul(f, g), -1)
