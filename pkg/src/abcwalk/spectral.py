"""Characteristic polynomials, p_plus * p_zero splits and eigen-projections.

Polynomial identities (product, squarefreeness, divisibility) are decided in
exact rational arithmetic.  Only root moduli and the projections pi_plus and
pi_zero are floating point, and the tolerances used travel with the result.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .laurent import LaurentPoly, edp_check, lp_eval_matrix

__all__ = [
    "SplitRejected",
    "NearDefectiveError",
    "SpectralSplit",
    "Projections",
    "char_poly",
    "verify_split",
    "projections",
    "annihilation_check",
    "find_edp_multiple",
    "cyclotomic_order",
    "poly_gcd",
    "bezout_projector",
]

DEFAULT_MODULUS_TOL = 1e-9
DEFAULT_RESIDUAL_TOL = 1e-8
DEFAULT_COND_LIMIT = 1e8


class SplitRejected(ValueError):
    def __init__(self, failures: list[str]):
        super().__init__("split rejected: " + "; ".join(failures))
        self.failures = failures


class NearDefectiveError(ValueError):
    pass


# exact dense polynomials over Q, ascending coefficient lists


def _trim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _from_laurent(p: LaurentPoly) -> list[Fraction]:
    """Ordinary polynomial t^-m(p) * p with nonzero constant term."""
    return [Fraction(c) for c in p.coeffs]


def _divmod(a: list, b: list) -> tuple[list, list]:
    a = list(a)
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    lead = b[-1]
    while len(_trim(a)) >= len(b):
        shift = len(a) - len(b)
        f = a[-1] / lead
        q[shift] = f
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a.pop()
    return _trim(q), _trim(a)


def _mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(out)


def _sub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def poly_gcd(a: Sequence, b: Sequence) -> list[Fraction]:
    """Monic gcd over Q (ascending coefficients)."""
    a = _trim([Fraction(x) for x in a])
    b = _trim([Fraction(x) for x in b])
    while b:
        a, b = b, _divmod(a, b)[1]
    if not a:
        return []
    return [x / a[-1] for x in a]


def _ext_gcd(a: list, b: list) -> tuple[list, list, list]:
    """(g, u, v) with u*a + v*b = g, g monic."""
    r0, r1 = _trim(list(a)), _trim(list(b))
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        q, r = _divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _sub(s0, _mul(q, s1))
        t0, t1 = t1, _sub(t0, _mul(q, t1))
    lead = r0[-1]
    return [x / lead for x in r0], [x / lead for x in s0], [x / lead for x in t0]


def _derivative(p: list) -> list:
    return _trim([i * c for i, c in enumerate(p)][1:])


def _is_squarefree(p: list) -> bool:
    if len(p) <= 2:
        return True
    return len(poly_gcd(p, _derivative(p))) == 1


# characteristic polynomial


def char_poly(phi) -> LaurentPoly:
    """det(tI - phi) by the Faddeev-LeVerrier recursion in exact rationals."""
    A = linalg.as_exact(phi)
    n = len(A)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    M = linalg.zeros(n)
    for k in range(1, n + 1):
        M = linalg.add(linalg.matmul(A, M), linalg.scalar(coeffs[n - k + 1], n))
        AM = linalg.matmul(A, M)
        coeffs[n - k] = -Fraction(sum(AM[i][i] for i in range(n))) / k
    if any(c.denominator != 1 for c in coeffs):
        raise ValueError(f"characteristic polynomial {coeffs} is not integral")
    return LaurentPoly([int(c) for c in coeffs])


# split verification


@dataclass
class Projections:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    inverse: np.ndarray
    plus_mask: np.ndarray
    pi_plus: np.ndarray
    pi_zero: np.ndarray
    condition: float

    def d_plus(self, v) -> float:
        """Distance from the expanding eigenspace, ||(I - pi_plus) v||."""
        v = np.asarray(v, dtype=complex)
        return float(np.linalg.norm(v - self.pi_plus @ v))

    def d_zero(self, v) -> float:
        v = np.asarray(v, dtype=complex)
        return float(np.linalg.norm(v - self.pi_zero @ v))

    def trace_deviations(self, polys: Sequence[LaurentPoly], gens: Sequence[Sequence]) -> tuple[float, float]:
        """(d_plus, d_zero) of sum_g P_g(phi) w_g, evaluated in the eigenbasis.

        Working with P_g(lambda_i) avoids forming the (possibly astronomically
        large) vector itself, so the neutral component keeps full precision.
        """
        coef = np.zeros(len(self.eigenvalues), dtype=complex)
        for P, w in zip(polys, gens):
            if not P:
                continue
            alpha = self.inverse @ np.asarray([float(x) for x in w], dtype=complex)
            coef += _eval_at(P, self.eigenvalues) * alpha
        V = self.eigenvectors
        zero_part = V[:, ~self.plus_mask] @ coef[~self.plus_mask]
        plus_part = V[:, self.plus_mask] @ coef[self.plus_mask]
        return float(np.linalg.norm(zero_part)), float(np.linalg.norm(plus_part))


def _eval_at(P: LaurentPoly, xs: np.ndarray) -> np.ndarray:
    degs = np.arange(P.low, P.low + len(P.coeffs))
    cs = np.asarray(P.coeffs, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        return (cs[None, :] * xs[:, None] ** degs[None, :]).sum(axis=1)


@dataclass
class SpectralSplit:
    p_char: LaurentPoly
    p_plus: LaurentPoly
    p_zero: LaurentPoly
    plus_roots: np.ndarray
    zero_roots: np.ndarray
    edp_reducer: LaurentPoly
    modulus_tol: float = DEFAULT_MODULUS_TOL
    residual_tol: float = DEFAULT_RESIDUAL_TOL
    proj: Projections | None = field(default=None, repr=False)
    residual_plus: float = float("nan")
    residual_zero: float = float("nan")

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([self.plus_roots, self.zero_roots])

    @property
    def pi_plus(self):
        return None if self.proj is None else self.proj.pi_plus

    @property
    def pi_zero(self):
        return None if self.proj is None else self.proj.pi_zero


def _roots(p: LaurentPoly) -> np.ndarray:
    if not p or p.diameter == 0:
        return np.zeros(0, dtype=complex)
    return np.roots([float(c) for c in reversed(p.coeffs)]).astype(complex)


def verify_split(p_char: LaurentPoly, p_plus: LaurentPoly, p_zero: LaurentPoly, phi=None,
                 modulus_tol: float = DEFAULT_MODULUS_TOL, residual_tol: float = DEFAULT_RESIDUAL_TOL,
                 edp_multiple: LaurentPoly | None = None, search: bool = True) -> SpectralSplit:
    """Accept ``p_char = p_plus * p_zero`` or raise :class:`SplitRejected`.

    Conditions, each reported separately on failure: exact product, exact
    squarefreeness of both factors, root moduli off / on the unit circle, and
    a dissipative multiple of ``p_plus`` (``p_plus`` itself, the supplied
    ``edp_multiple``, or one found by :func:`find_edp_multiple`).
    """
    failures = []
    if p_plus * p_zero != p_char:
        failures.append(f"product ({p_plus})*({p_zero}) != {p_char}")
    for label, p in (("p_plus", p_plus), ("p_zero", p_zero)):
        if not p:
            failures.append(f"{label} is zero")
        elif not _is_squarefree(_from_laurent(p)):
            failures.append(f"{label} = {p} has a repeated root")
    plus_roots, zero_roots = _roots(p_plus), _roots(p_zero)
    bad_plus = [z for z in plus_roots if abs(abs(z) - 1) <= modulus_tol]
    bad_zero = [z for z in zero_roots if abs(abs(z) - 1) > modulus_tol]
    if bad_plus:
        failures.append(f"p_plus has roots of modulus 1: {bad_plus}")
    if bad_zero:
        failures.append(f"p_zero has roots off the unit circle: {bad_zero}")

    reducer = None
    if p_plus and edp_check(p_plus).holds:
        reducer = p_plus
    elif edp_multiple is not None:
        if not _divides(p_plus, edp_multiple):
            failures.append(f"{edp_multiple} is not a multiple of {p_plus}")
        elif not edp_check(edp_multiple).holds:
            failures.append(f"supplied multiple {edp_multiple} fails EDP")
        else:
            reducer = edp_multiple
    else:
        found = find_edp_multiple(p_plus) if search and p_plus else None
        if found is None:
            failures.append(f"no dissipative multiple of p_plus = {p_plus} found")
        else:
            reducer = found[1]
    if failures:
        raise SplitRejected(failures)

    split = SpectralSplit(p_char, p_plus, p_zero, plus_roots, zero_roots, reducer,
                          modulus_tol, residual_tol)
    if phi is not None:
        split.proj = projections(phi, split)
        split.residual_plus = annihilation_check(phi, p_plus, split.proj.pi_plus)
        split.residual_zero = annihilation_check(phi, p_zero, split.proj.pi_zero)
        bad = [f"||{p}(phi) pi|| = {r:.3g} exceeds {residual_tol:g}"
               for p, r in ((p_plus, split.residual_plus), (p_zero, split.residual_zero)) if not r <= residual_tol]
        if bad:
            raise SplitRejected(bad)
    return split


def _divides(d: LaurentPoly, p: LaurentPoly) -> bool:
    if not d:
        return False
    _, r = _divmod(_from_laurent(p), _from_laurent(d))
    return not r


def projections(phi, split: SpectralSplit, cond_limit: float = DEFAULT_COND_LIMIT) -> Projections:
    A = linalg.to_float(linalg.as_exact(phi))
    lam, V = np.linalg.eig(A)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > cond_limit:
        raise NearDefectiveError(f"eigenvector matrix condition number {cond:.3g} exceeds {cond_limit:g}")
    plus = np.abs(np.abs(lam) - 1) > split.modulus_tol
    n_plus = max(len(split.p_plus.coeffs) - 1, 0)
    if int(plus.sum()) != n_plus:
        raise SplitRejected([f"phi has {int(plus.sum())} eigenvalues off the unit circle, p_plus has degree {n_plus}"])
    Vinv = np.linalg.inv(V)
    pi_plus = V @ np.diag(plus.astype(float)) @ Vinv
    pi_zero = V @ np.diag((~plus).astype(float)) @ Vinv
    return Projections(lam, V, Vinv, plus, pi_plus, pi_zero, cond)


def annihilation_check(phi, p_I: LaurentPoly, pi_I) -> float:
    """Max-norm of p_I(phi) pi_I; exact when pi_I is an exact matrix."""
    P = lp_eval_matrix(p_I, phi)
    if isinstance(pi_I, np.ndarray):
        R = linalg.to_float(P) @ pi_I
        return float(np.max(np.abs(R)))
    R = linalg.matmul(P, linalg.as_exact(pi_I))
    return float(linalg.max_abs(R))


def bezout_projector(phi, p_keep: LaurentPoly, p_other: LaurentPoly) -> linalg.Matrix:
    """Exact projector onto ker p_keep(phi) along ker p_other(phi).

    With u*p_keep + v*p_other = 1, the matrix v(phi) p_other(phi) is the
    identity on ker p_keep(phi) and zero on ker p_other(phi).
    """
    g, u, v = _ext_gcd(_from_laurent(p_keep), _from_laurent(p_other))
    if len(g) != 1:
        raise ValueError("factors are not coprime")
    A = linalg.as_exact(phi)
    n = len(A)
    V = linalg.zeros(n)
    for c in reversed(v):
        V = linalg.add(linalg.matmul(V, A), linalg.scalar(c, n))
    other = lp_eval_matrix(p_other, A)
    # p_other is shifted to an ordinary polynomial; undo that shift
    shift = linalg.power(A, -p_other.low) if p_other.low else linalg.identity(n)
    return linalg.matmul(linalg.matmul(V, shift), other)


def find_edp_multiple(p: LaurentPoly, max_degree: int = 4, max_coeff: int = 8) -> tuple[LaurentPoly, LaurentPoly] | None:
    """Smallest multiplier m (by degree, then coefficient size) with m*p dissipative.

    Returns ``(m, m*p)`` or None.  Candidates are screened with vectorised
    integer arithmetic and the hit is re-checked exactly.
    """
    if edp_check(p).holds:
        return LaurentPoly.constant(1), p
    base = np.asarray(p.coeffs, dtype=np.int64)
    for deg in range(1, max_degree + 1):
        width = deg + len(base)
        for B in range(1, max_coeff + 1):
            rng = np.arange(-B, B + 1, dtype=np.int64)
            for lead in range(1, B + 1):
                inner = np.array(list(itertools.product(rng, repeat=deg)), dtype=np.int64).reshape(-1, deg)
                inner = inner[inner[:, 0] != 0]  # constant term nonzero
                if len(inner) == 0:
                    continue
                mult = np.hstack([inner, np.full((len(inner), 1), lead, dtype=np.int64)])
                mult = mult[np.abs(mult).max(axis=1) == B]
                if len(mult) == 0:
                    continue
                prod = np.zeros((len(mult), width), dtype=np.int64)
                for i in range(deg + 1):
                    prod[:, i:i + len(base)] += mult[:, i:i + 1] * base[None, :]
                a = np.abs(prod)
                srt = np.sort(a, axis=1)
                m1, m2 = srt[:, -1], srt[:, -2]
                ok = (a.sum(axis=1) - m1) * m2 < m1
                hits = np.flatnonzero(ok)
                for h in hits:
                    m = LaurentPoly([int(x) for x in mult[h]])
                    y = m * p
                    if edp_check(y).holds:
                        return m, y
    return None


def cyclotomic_order(p: LaurentPoly, max_order: int = 720) -> int | None:
    """Smallest L <= max_order with p | t^L - 1, or None."""
    d = _from_laurent(p)
    if len(d) <= 1:
        return 1
    r = [Fraction(1)]
    t = [Fraction(0), Fraction(1)]
    for L in range(1, max_order + 1):
        r = _divmod(_mul(r, t), d)[1]
        if r == [Fraction(1)]:
            return L
    return None
