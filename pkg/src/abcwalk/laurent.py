"""Integer Laurent polynomials and the dissipation (EDP) predicate.

A polynomial is stored densely as an integer offset ``low`` plus a tuple of
coefficients for degrees ``low, low+1, ...``.  Both ends are trimmed so the
representation is canonical and two equal polynomials compare (and hash)
equal.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from . import linalg

__all__ = [
    "LaurentPoly",
    "EdpReport",
    "PolyParseError",
    "UndefinedSpanError",
    "NormStats",
    "lp_add",
    "lp_mul",
    "norm_stats",
    "edp_check",
    "lp_eval_matrix",
    "parse_poly",
]


class UndefinedSpanError(ValueError):
    """m(p), M(p) and d(p) were requested on the zero polynomial."""


class PolyParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class LaurentPoly:
    """Immutable element of Z[t, t^-1]."""

    __slots__ = ("_low", "_coeffs", "_hash")

    def __init__(self, coeffs: Iterable[int] = (), low: int = 0):
        cs = [int(c) for c in coeffs]
        start = 0
        while start < len(cs) and cs[start] == 0:
            start += 1
        stop = len(cs)
        while stop > start and cs[stop - 1] == 0:
            stop -= 1
        self._coeffs = tuple(cs[start:stop])
        self._low = low + start if self._coeffs else 0
        self._hash = None

    # construction helpers

    @classmethod
    def from_dict(cls, terms: Mapping[int, int]) -> "LaurentPoly":
        nz = {int(k): int(v) for k, v in terms.items() if v}
        if not nz:
            return cls()
        lo, hi = min(nz), max(nz)
        return cls([nz.get(i, 0) for i in range(lo, hi + 1)], lo)

    @classmethod
    def monomial(cls, coeff: int, degree: int = 0) -> "LaurentPoly":
        return cls([coeff], degree)

    @classmethod
    def constant(cls, value: int) -> "LaurentPoly":
        return cls([value], 0)

    @classmethod
    def parse(cls, text: str) -> "LaurentPoly":
        return parse_poly(text)

    # accessors

    @property
    def low(self) -> int:
        return self._low

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self._coeffs

    def is_zero(self) -> bool:
        return not self._coeffs

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __len__(self) -> int:
        """Number of nonzero terms."""
        return sum(1 for c in self._coeffs if c)

    def __getitem__(self, degree: int) -> int:
        i = degree - self._low
        if 0 <= i < len(self._coeffs):
            return self._coeffs[i]
        return 0

    def items(self) -> Iterator[tuple[int, int]]:
        """Nonzero (degree, coefficient) pairs in increasing degree."""
        for i, c in enumerate(self._coeffs):
            if c:
                yield self._low + i, c

    def to_dict(self) -> dict[int, int]:
        return dict(self.items())

    @property
    def min_degree(self) -> int:
        if not self._coeffs:
            raise UndefinedSpanError("m(p) is undefined for the zero polynomial")
        return self._low

    @property
    def max_degree(self) -> int:
        if not self._coeffs:
            raise UndefinedSpanError("M(p) is undefined for the zero polynomial")
        return self._low + len(self._coeffs) - 1

    @property
    def diameter(self) -> int:
        return self.max_degree - self.min_degree

    @property
    def length(self) -> int:
        """The l1 norm ||p||_P = sum |p_i|."""
        return sum(abs(c) for c in self._coeffs)

    @property
    def height(self) -> int:
        """K(p) = max |p_i| (0 for the zero polynomial)."""
        return max((abs(c) for c in self._coeffs), default=0)

    # arithmetic

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.constant(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._low == other._low and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._low, self._coeffs))
        return self._hash

    def __add__(self, other) -> "LaurentPoly":
        return lp_add(self, _coerce(other))

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly([-c for c in self._coeffs], self._low)

    def __sub__(self, other) -> "LaurentPoly":
        return lp_add(self, -_coerce(other))

    def __rsub__(self, other) -> "LaurentPoly":
        return lp_add(_coerce(other), -self)

    def __mul__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            return LaurentPoly([other * c for c in self._coeffs], self._low)
        return lp_mul(self, _coerce(other))

    __rmul__ = __mul__

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by t^k."""
        return LaurentPoly(self._coeffs, self._low + k)

    def __call__(self, x):
        """Evaluate at a scalar (int, Fraction, float or complex)."""
        if not self._coeffs:
            return 0
        if self._low < 0 and isinstance(x, int):
            x = Fraction(x)
        acc = 0
        for c in reversed(self._coeffs):
            acc = acc * x + c
        return acc * x**self._low if self._low else acc

    def __repr__(self) -> str:
        return f"LaurentPoly({format_poly(self)!r})"

    def __str__(self) -> str:
        return format_poly(self)


def _coerce(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    if isinstance(x, int):
        return LaurentPoly.constant(x)
    raise TypeError(f"cannot use {type(x).__name__} as a Laurent polynomial")


def lp_add(p: LaurentPoly, q: LaurentPoly) -> LaurentPoly:
    if not p:
        return q
    if not q:
        return p
    lo = min(p.low, q.low)
    hi = max(p.max_degree, q.max_degree)
    out = [0] * (hi - lo + 1)
    for i, c in enumerate(p.coeffs):
        out[p.low - lo + i] += c
    for i, c in enumerate(q.coeffs):
        out[q.low - lo + i] += c
    return LaurentPoly(out, lo)


def lp_mul(p: LaurentPoly, q: LaurentPoly) -> LaurentPoly:
    if not p or not q:
        return LaurentPoly()
    a, b = p.coeffs, q.coeffs
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return LaurentPoly(out, p.low + q.low)


@dataclass(frozen=True)
class NormStats:
    length: int
    K: int
    m: int | None
    M: int | None
    d: int | None


def norm_stats(p: LaurentPoly) -> NormStats:
    """(||p||_P, K(p), m(p), M(p), d(p)); the span fields are None for zero."""
    if not p:
        return NormStats(0, 0, None, None, None)
    return NormStats(p.length, p.height, p.min_degree, p.max_degree, p.diameter)


@dataclass(frozen=True)
class EdpReport:
    holds: bool
    y0: int
    i0: int
    delta: int
    r: Fraction
    contraction: Fraction

    @property
    def threshold(self) -> int:
        return abs(self.y0)


def edp_check(y: LaurentPoly) -> EdpReport:
    """Check the dissipation condition delta * r < 1.

    ``y0`` is the coefficient of largest magnitude (smallest degree on ties),
    ``delta = ||y||_P - |y0|`` and ``r`` is the second largest magnitude,
    counted with multiplicity over positions, divided by ``|y0|``.
    """
    if not y:
        raise ValueError("edp_check needs a nonzero polynomial")
    terms = list(y.items())
    i0, y0 = max(terms, key=lambda t: (abs(t[1]), -t[0]))
    delta = y.length - abs(y0)
    rest = [abs(c) for i, c in terms if i != i0]
    r = Fraction(max(rest), abs(y0)) if rest else Fraction(0)
    contraction = delta * r
    return EdpReport(contraction < 1, y0, i0, delta, r, contraction)


def lp_eval_matrix(p: LaurentPoly, A) -> tuple[tuple, ...]:
    """Exact sum of p_i A^i for a square rational matrix A."""
    A = linalg.as_exact(A)
    n = len(A)
    if not p:
        return linalg.zeros(n)
    if p.min_degree < 0:
        base = linalg.inverse(A)  # raises on singular A
        acc = linalg.zeros(n)
        # Horner in A^-1 for the negative part, then in A for the rest
        neg = [p[d] for d in range(p.min_degree, 0)]
        for c in neg:
            acc = linalg.add(linalg.matmul(acc, base), linalg.scalar(c, n))
        acc = linalg.matmul(acc, base)
        pos = LaurentPoly([p[d] for d in range(0, max(p.max_degree, -1) + 1)])
        return linalg.add(acc, _eval_nonneg(pos, A))
    return _eval_nonneg(p, A)


def _eval_nonneg(p: LaurentPoly, A) -> tuple[tuple, ...]:
    n = len(A)
    acc = linalg.zeros(n)
    if not p:
        return acc
    for c in reversed(p.coeffs):
        acc = linalg.add(linalg.matmul(acc, A), linalg.scalar(c, n))
    return linalg.matmul(acc, linalg.power(A, p.low)) if p.low else acc


# text form

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>[a-zA-Z])|(?P<op>[-+*^()]))")


def parse_poly(text: str) -> LaurentPoly:
    """Parse forms like ``"t^-2+3*t-1"``, ``"2 - t"`` or ``"x^4-3x^2+1"``.

    Any single letter is accepted as the variable, but a polynomial may only
    use one.
    """
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolyParseError("unexpected character", text, pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    if not tokens:
        raise PolyParseError("empty polynomial", text, 0)

    terms: dict[int, int] = {}
    var: str | None = None
    i = 0

    def peek(k=0):
        return tokens[i + k] if i + k < len(tokens) else (None, None, len(text))

    def expect_int() -> int:
        nonlocal i
        sign = 1
        kind, val, at = peek()
        if kind == "op" and val == "(":
            i += 1
            v = expect_int()
            kind, val, at = peek()
            if val != ")":
                raise PolyParseError("expected ')'", text, at)
            i += 1
            return v
        if kind == "op" and val in "+-":
            sign = -1 if val == "-" else 1
            i += 1
            kind, val, at = peek()
        if kind != "num":
            raise PolyParseError("expected an integer exponent", text, at)
        i += 1
        return sign * int(val)

    first = True
    while i < len(tokens):
        kind, val, at = peek()
        sign = 1
        if kind == "op" and val in "+-":
            sign = -1 if val == "-" else 1
            i += 1
        elif not first:
            raise PolyParseError("expected '+' or '-'", text, at)
        first = False
        kind, val, at = peek()
        coeff = None
        if kind == "num":
            coeff = int(val)
            i += 1
            kind, val, at = peek()
            if kind == "op" and val == "*":
                i += 1
                kind, val, at = peek()
                if kind != "var":
                    raise PolyParseError("expected variable after '*'", text, at)
        degree = 0
        if kind == "var":
            if var is None:
                var = val
            elif val != var:
                raise PolyParseError(f"mixed variables {var!r} and {val!r}", text, at)
            i += 1
            degree = 1
            kind, val, at = peek()
            if kind == "op" and val == "^":
                i += 1
                degree = expect_int()
        elif coeff is None:
            raise PolyParseError("expected a term", text, at)
        c = sign * (1 if coeff is None else coeff)
        terms[degree] = terms.get(degree, 0) + c
    return LaurentPoly.from_dict(terms)


def format_poly(p: LaurentPoly, var: str = "t") -> str:
    """Inverse of :func:`parse_poly`, highest degree first."""
    if not p:
        return "0"
    parts = []
    for deg, c in sorted(p.items(), reverse=True):
        mag = abs(c)
        if deg == 0:
            body = str(mag)
        else:
            mono = var if deg == 1 else f"{var}^{deg}"
            body = mono if mag == 1 else f"{mag}*{mono}"
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("-" if c < 0 else "+") + body)
    return "".join(parts)
