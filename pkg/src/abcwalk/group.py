"""Exact arithmetic in abelian-by-cyclic groups G = A x|_phi Z.

Elements are kept in normal form ``(a, k)`` with ``a`` a kernel vector and
``k`` the Z-coordinate; the product law is ``(a, k)(b, l) = (a + phi^k b, k + l)``.
Lattice kernels (modulus 1) use integer vectors; kernels Z[1/m]^D use
``Fraction`` entries whose denominators are powers of ``m``.

Generators are indexed ``2j`` / ``2j + 1`` for ``+w_j`` / ``-w_j`` and the
last two indices are ``t`` and ``t^-1``, so ``i ^ 1`` is the inverse of
generator ``i``.
"""
from __future__ import annotations

import itertools
import math
import string
from fractions import Fraction
from typing import NamedTuple, Sequence

from . import linalg
from .laurent import LaurentPoly, lp_eval_matrix
from .toppling import reduce_poly

__all__ = [
    "GroupSpec",
    "GroupElement",
    "BallCapError",
    "BallMemoryError",
    "DecompositionError",
    "multiply",
    "inverse",
    "evaluate_word",
    "ball",
    "expansion_factor",
    "length_lower_bound",
    "length_upper_bound",
    "sol_trace_word",
    "project_to_Z",
    "decompose_kernel",
    "witness_word",
]

DEFAULT_BALL_CAP = 10
DEFAULT_MAX_STATES = 10**7


class BallCapError(ValueError):
    pass


class BallMemoryError(MemoryError):
    pass


class DecompositionError(ValueError):
    """A kernel vector is not an integer combination of the generator orbits."""


class GroupElement(NamedTuple):
    a: tuple
    k: int


def _prime_factors(n: int) -> set[int]:
    out, p = set(), 2
    n = abs(n)
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return out


class GroupSpec:
    """Presentation of A x|_phi Z with generating set {+-w_j} u {t, t^-1}.

    Treat instances as immutable; powers of phi and generator orbits are
    cached on first use.
    """

    def __init__(self, name: str, phi, kernel_gens: Sequence[Sequence], modulus: int = 1,
                 description: str = ""):
        self.name = name
        self.phi = linalg.as_exact(phi)
        self.dim = len(self.phi)
        self.modulus = int(modulus)
        self.description = description
        if self.modulus < 1:
            raise ValueError("modulus must be a positive integer")
        try:
            self.phi_inv = linalg.inverse(self.phi)
        except ZeroDivisionError:
            raise ValueError(f"{name}: phi is singular") from None
        primes = _prime_factors(self.modulus)
        for M in (self.phi, self.phi_inv):
            for row in M:
                for x in row:
                    den = Fraction(x).denominator
                    if not _prime_factors(den) <= primes:
                        raise ValueError(
                            f"{name}: entry {x} has a denominator not dividing a power of {self.modulus}"
                        )
        gens = []
        for w in kernel_gens:
            v = tuple(linalg.norm_entry(x) for x in w)
            if len(v) != self.dim:
                raise ValueError(f"{name}: generator {w} has the wrong dimension")
            if not any(v):
                raise ValueError(f"{name}: zero kernel generator")
            gens.append(v)
        if not gens:
            raise ValueError(f"{name}: at least one kernel generator is required")
        self.kernel_gens: tuple[tuple, ...] = tuple(gens)
        self._powers: dict[int, linalg.Matrix] = {0: linalg.identity(self.dim), 1: self.phi, -1: self.phi_inv}
        self._orbits: dict[tuple[int, int], tuple] = {}
        self._basis = None

    def __repr__(self) -> str:
        return f"GroupSpec({self.name!r}, dim={self.dim}, modulus={self.modulus})"

    @property
    def n_kernel(self) -> int:
        return len(self.kernel_gens)

    @property
    def n_generators(self) -> int:
        return 2 * self.n_kernel + 2

    @property
    def t_index(self) -> int:
        return 2 * self.n_kernel

    @property
    def identity(self) -> GroupElement:
        return GroupElement((0,) * self.dim, 0)

    def generator(self, i: int) -> GroupElement:
        if i >= self.t_index:
            return GroupElement((0,) * self.dim, 1 if i == self.t_index else -1)
        w = self.kernel_gens[i // 2]
        return GroupElement(w if i % 2 == 0 else tuple(-x for x in w), 0)

    def generator_names(self) -> list[str]:
        letters = [c for c in string.ascii_lowercase if c != "t"]
        names = []
        for j in range(self.n_kernel):
            names += [letters[j], letters[j].upper()]
        return names + ["t", "T"]

    def format_word(self, word: Sequence[int]) -> str:
        names = self.generator_names()
        return "".join(names[i] for i in word)

    def parse_word(self, text: str) -> list[int]:
        names = self.generator_names()
        try:
            return [names.index(ch) for ch in text if not ch.isspace()]
        except ValueError:
            raise ValueError(f"unknown generator letter in {text!r}; expected one of {''.join(names)}") from None

    def kernel_index(self, i: int) -> tuple[int, int] | None:
        """(generator j, sign) for a kernel letter, None for t-letters."""
        if i >= self.t_index:
            return None
        return i // 2, (1 if i % 2 == 0 else -1)

    def phi_power(self, k: int) -> linalg.Matrix:
        M = self._powers.get(k)
        if M is None:
            step = self.phi if k > 0 else self.phi_inv
            nearer = k - 1 if k > 0 else k + 1
            M = linalg.matmul(step, self.phi_power(nearer))
            self._powers[k] = M
        return M

    def orbit(self, j: int, k: int) -> tuple:
        """phi^k w_j, cached."""
        key = (j, k)
        v = self._orbits.get(key)
        if v is None:
            if k == 0:
                v = self.kernel_gens[j]
            else:
                step = self.phi if k > 0 else self.phi_inv
                v = linalg.matvec(step, self.orbit(j, k - 1 if k > 0 else k + 1))
            self._orbits[key] = v
        return v

    def contains(self, g: GroupElement) -> bool:
        if len(g.a) != self.dim:
            return False
        primes = _prime_factors(self.modulus)
        return all(_prime_factors(Fraction(x).denominator) <= primes for x in g.a)


def multiply(spec: GroupSpec, g: GroupElement, h: GroupElement) -> GroupElement:
    b = linalg.matvec(spec.phi_power(g.k), h.a) if g.k else h.a
    return GroupElement(linalg.vec_add(g.a, b), g.k + h.k)


def inverse(spec: GroupSpec, g: GroupElement) -> GroupElement:
    a = linalg.matvec(spec.phi_power(-g.k), g.a) if g.k else g.a
    return GroupElement(tuple(linalg.norm_entry(-x) for x in a), -g.k)


def _step(spec: GroupSpec, g: GroupElement, i: int) -> GroupElement:
    """g times generator i (right action)."""
    t = spec.t_index
    if i == t:
        return GroupElement(g.a, g.k + 1)
    if i == t + 1:
        return GroupElement(g.a, g.k - 1)
    v = spec.orbit(i // 2, g.k)
    if i & 1:
        return GroupElement(tuple(x - y for x, y in zip(g.a, v)), g.k)
    return GroupElement(tuple(x + y for x, y in zip(g.a, v)), g.k)


def evaluate_word(spec: GroupSpec, word: Sequence[int]) -> GroupElement:
    g = spec.identity
    n = spec.n_generators
    for i in word:
        if not 0 <= i < n:
            raise IndexError(f"generator index {i} out of range for {spec.name}")
        g = _step(spec, g, i)
    return GroupElement(tuple(linalg.norm_entry(x) for x in g.a), g.k)


def ball(spec: GroupSpec, radius: int, cap: int = DEFAULT_BALL_CAP,
         max_states: int = DEFAULT_MAX_STATES) -> dict[GroupElement, int]:
    """Breadth-first ball: every element within ``radius`` mapped to its word length."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius > cap:
        raise BallCapError(f"radius {radius} exceeds the cap {cap}")
    start = spec.identity
    dist = {start: 0}
    frontier = [start]
    gens = range(spec.n_generators)
    for r in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for i in gens:
                h = _step(spec, g, i)
                if h not in dist:
                    dist[h] = r
                    nxt.append(h)
        if len(dist) > max_states:
            raise BallMemoryError(f"ball of radius {r} has more than {max_states} elements")
        frontier = nxt
    return dist


def sphere_profile(lengths: dict[GroupElement, int], radius: int) -> list[int]:
    """Largest kernel sup-norm among elements at distance <= r, for r = 0..radius."""
    best = [0] * (radius + 1)
    for g, r in lengths.items():
        n = linalg.sup_norm(g.a)
        if n > best[r]:
            best[r] = n
    for r in range(1, radius + 1):
        best[r] = max(best[r], best[r - 1])
    return best


def expansion_factor(spec: GroupSpec):
    """q >= 1 with |phi^k v|_inf <= q^|k| |v|_inf for every k and v."""
    return max(linalg.row_sum_norm(spec.phi), linalg.row_sum_norm(spec.phi_inv), 1)


def _generator_norm(spec: GroupSpec):
    return max(linalg.sup_norm(w) for w in spec.kernel_gens)


def _floor_log(ratio: Fraction, q) -> int:
    """Largest e >= 0 with q^e <= ratio (ratio >= 1, q > 1), exactly."""
    q = Fraction(q)
    approx = (ratio.numerator.bit_length() - ratio.denominator.bit_length()) / math.log2(q)
    e = max(0, int(approx) - 2)
    while q ** (e + 1) <= ratio:
        e += 1
    while e > 0 and q**e > ratio:
        e -= 1
    return e


def length_lower_bound(spec: GroupSpec, g: GroupElement) -> int:
    """A certified lower bound on |g|_S.

    A word with n_a kernel letters and n_t letters t^+-1 reaches a kernel vector
    of sup norm at most c0 * n_a * q^n_t.  For q >= 2 this is at most
    c0 * q^(L-1), giving L >= floor(log_q(|a| / c0)) + 1; the reported
    floor(log_q(|a| / c0)) is therefore safe.  For 1 <= q < 2 the bound is
    found by direct search over L.
    """
    lb = abs(g.k)
    norm = linalg.sup_norm(g.a)
    if not norm:
        return lb
    ratio = Fraction(norm) / Fraction(_generator_norm(spec))
    if ratio < 1:
        return max(lb, 1)
    q = Fraction(expansion_factor(spec))
    if q >= 2:
        return max(lb, _floor_log(ratio, q))
    if q == 1:
        return max(lb, math.ceil(ratio))
    L = 1
    while max(n * q ** (L - n) for n in range(1, L + 1)) < ratio:
        L += 1
    return max(lb, L)


def project_to_Z(g: GroupElement) -> int:
    return g.k


# kernel vectors as polynomial traces


def _orbit_basis(spec: GroupSpec):
    """D columns phi^j w_g (|j| <= 2D) forming a basis of the kernel lattice.

    Prefers unimodular choices with the smallest total |j|.
    """
    if spec._basis is not None:
        return spec._basis
    D = spec.dim
    window = range(-2 * D, 2 * D + 1)
    cols = sorted(
        ((j, g) for j in window for g in range(spec.n_kernel)),
        key=lambda c: (abs(c[0]), c[0], c[1]),
    )
    fallback = None
    for combo in itertools.combinations(cols, D):
        M = tuple(zip(*(spec.orbit(g, j) for j, g in combo)))
        dt = linalg.det(M)
        if dt in (1, -1):
            spec._basis = (combo, M)
            return spec._basis
        if dt != 0 and fallback is None:
            fallback = (combo, M)
    spec._basis = fallback if spec.modulus > 1 else (None, None)
    return spec._basis


def decompose_kernel(spec: GroupSpec, a: Sequence, max_shift: int = 64) -> tuple[LaurentPoly, ...]:
    """Integer polynomials P_g with sum_g P_g(phi) w_g == a."""
    a = tuple(linalg.norm_entry(x) for x in a)
    if not any(a):
        return tuple(LaurentPoly() for _ in spec.kernel_gens)
    combo, M = _orbit_basis(spec)
    if combo is None:
        raise DecompositionError(f"{spec.name}: generator orbits do not span the kernel lattice")
    Minv = linalg.inverse(M)
    shifts = [0] + [s for k in range(1, max_shift + 1) for s in (k, -k)]
    for s in shifts:
        b = linalg.matvec(spec.phi_power(s), a) if s else a
        x = linalg.matvec(Minv, b)
        if all(isinstance(c, int) for c in x):
            terms: list[dict[int, int]] = [{} for _ in spec.kernel_gens]
            for (j, g), c in zip(combo, x):
                if c:
                    terms[g][j - s] = terms[g].get(j - s, 0) + c
            return tuple(LaurentPoly.from_dict(t) for t in terms)
    raise DecompositionError(f"{spec.name}: {a} is not an integer combination of generator orbits")


def trace_value(spec: GroupSpec, polys: Sequence[LaurentPoly]) -> tuple:
    """sum_g P_g(phi) w_g, exactly."""
    acc = (0,) * spec.dim
    for g, P in enumerate(polys):
        for d, c in P.items():
            acc = linalg.vec_add(acc, linalg.vec_scale(c, spec.orbit(g, d)))
    return acc


def annihilates(spec: GroupSpec, y: LaurentPoly) -> bool:
    """True iff y(phi) w_g == 0 for every kernel generator."""
    Y = lp_eval_matrix(y, spec.phi)
    return all(not any(linalg.matvec(Y, w)) for w in spec.kernel_gens)


def witness_word(spec: GroupSpec, polys: Sequence[LaurentPoly], k: int) -> list[int]:
    """Word for (sum_g Q_g(phi) w_g, k): descend through degrees <= 0 placing
    |Q_j| kernel letters at each height, climb through the positive degrees,
    then walk to height k."""
    live = [Q for Q in polys if Q]
    lo = min([0] + [Q.min_degree for Q in live])
    hi = max([0] + [Q.max_degree for Q in live])
    t, T = spec.t_index, spec.t_index + 1
    word: list[int] = []

    def place(h: int) -> None:
        for g, Q in enumerate(polys):
            c = Q[h]
            if c:
                word.extend([2 * g if c > 0 else 2 * g + 1] * abs(c))

    for h in range(0, lo - 1, -1):
        if h < 0:
            word.append(T)
        place(h)
    if hi > 0:
        word.extend([t] * (0 - lo))
        for h in range(1, hi + 1):
            word.append(t)
            place(h)
        end = hi
    else:
        end = lo
    word.extend([t] * (k - end) if k > end else [T] * (end - k))
    return word


def upper_bound_from_polys(polys: Sequence[LaurentPoly], k: int) -> int:
    """||Q||_P + 2(|m(Q)| + |M(Q)|) + |k| over the union of supports."""
    live = [Q for Q in polys if Q]
    if not live:
        return abs(k)
    m = min(Q.min_degree for Q in live)
    M = max(Q.max_degree for Q in live)
    return sum(Q.length for Q in live) + 2 * (abs(m) + abs(M)) + abs(k)


def length_upper_bound(spec: GroupSpec, g: GroupElement, reducer: LaurentPoly,
                       polys: Sequence[LaurentPoly] | None = None) -> tuple[int, list[int]]:
    """Toppling-based upper bound on |g|_S with a witness word.

    ``polys`` may carry the element's polynomial trace; otherwise the kernel
    part is decomposed over the generator orbits.  The reducer must
    annihilate phi on the generators (e.g. the characteristic polynomial).
    """
    if not annihilates(spec, reducer):
        raise ValueError(f"reducer {reducer} does not annihilate phi on the generators of {spec.name}")
    if polys is None:
        polys = decompose_kernel(spec, g.a)
    Qs = [reduce_poly(P, reducer).Q for P in polys]
    return upper_bound_from_polys(Qs, g.k), witness_word(spec, Qs, g.k)


def sol_trace_word(spec: GroupSpec, i: int, k: int) -> list[int]:
    """z^k b_i z^-2k b_i^(det^k) z^k, which evaluates to (tr(phi^k) e_i, 0).

    ``i`` is a 1-based basis index; e_i must be one of the kernel generators.
    """
    if spec.dim != 2 or spec.modulus != 1:
        raise ValueError("trace words need a 2x2 integer matrix")
    dt = linalg.det(spec.phi)
    tr = spec.phi[0][0] + spec.phi[1][1]
    if dt not in (1, -1) or abs(tr) <= 2:
        raise ValueError(f"{spec.name}: phi is not hyperbolic (trace {tr}, det {dt})")
    if k < 0:
        raise ValueError("k must be nonnegative")
    e = tuple(int(j == i - 1) for j in range(2))
    try:
        j = spec.kernel_gens.index(e)
    except ValueError:
        raise ValueError(f"{spec.name}: e_{i} is not a kernel generator") from None
    z, Z = spec.t_index, spec.t_index + 1
    b = 2 * j
    b_pow = b if dt**k == 1 else b + 1
    return [z] * k + [b] + [Z] * (2 * k) + [b_pow] + [z] * k
