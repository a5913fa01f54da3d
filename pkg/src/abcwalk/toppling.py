"""Dissipative sandpile reduction of Laurent polynomials.

A site ``j`` whose coefficient has magnitude at least ``|y0|`` topples by
subtracting ``q * t^(j - i0) * y``, where ``q`` is ``p_j / y0`` rounded to the
nearest integer (halves toward zero).  Sites are toppled largest magnitude
first, smallest degree on ties, until every coefficient is below ``|y0|``.
The multiples subtracted are accumulated into a cofactor ``x`` so that
``P - Q == x * y`` can be checked exactly.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from .laurent import EdpReport, LaurentPoly, edp_check

__all__ = [
    "NonEdpReducerError",
    "ToppleCapExceeded",
    "ToppleReport",
    "height_constant",
    "topple_once",
    "reduce_constant",
    "reduce_poly",
    "verify_membership",
    "log_star",
]


class NonEdpReducerError(ValueError):
    def __init__(self, y: LaurentPoly, report: EdpReport):
        super().__init__(
            f"reducer {y} fails the dissipation condition "
            f"(delta*r = {report.contraction} >= 1)"
        )
        self.reducer = y
        self.report = report


class ToppleCapExceeded(RuntimeError):
    """Toppling ran past its hard cap.  Termination is guaranteed for valid
    reducers, so this always indicates a bug."""


@dataclass(frozen=True)
class ToppleReport:
    input: LaurentPoly
    reducer: LaurentPoly
    Q: LaurentPoly
    cofactor: LaurentPoly
    topples: int
    passes: int
    final_K: int
    final_d: int
    height_bound: int
    spread_ratio: float

    @property
    def mass_ratio(self) -> float:
        """||Q||_P / log2 K(input), the constant in the O(log K) mass bound."""
        K = self.input.height
        return self.Q.length / math.log2(K) if K > 1 else float(self.Q.length)

    @property
    def diameter_ratio(self) -> float:
        """d(Q) / (d(y) * log2(K + 2)), the constant in the spread bound."""
        dy = max(1, self.reducer.diameter)
        return self.final_d / (dy * math.log2(self.input.height + 2))


def _check_reducer(y: LaurentPoly) -> EdpReport:
    rep = edp_check(y)
    if not rep.holds:
        raise NonEdpReducerError(y, rep)
    return rep


def height_constant(y: LaurentPoly) -> int:
    """C_y = ceil(|y0| / (1 - delta*r)) + |y0|, the uniform bound on K(Q)."""
    rep = _check_reducer(y)
    y0 = abs(rep.y0)
    return math.ceil(Fraction(y0) / (1 - rep.contraction)) + y0


def _nearest_quotient(c: int, y0: int) -> int:
    """c / y0 rounded to the nearest integer, exact halves toward zero."""
    num, den = (c, y0) if y0 > 0 else (-c, -y0)
    a = abs(num)
    q = -((den - 2 * a) // (2 * den))
    return q if num >= 0 else -q


def log_star(x: float) -> int:
    n = 0
    while x >= 1:
        x = math.log(x) if x > 1 else 0.0
        n += 1
    return n


def topple_once(p: LaurentPoly, y: LaurentPoly, j: int) -> tuple[LaurentPoly, LaurentPoly]:
    rep = _check_reducer(y)
    if abs(p[j]) < abs(rep.y0):
        raise ValueError(f"|p_{j}| = {abs(p[j])} is below the threshold {abs(rep.y0)}")
    q = _nearest_quotient(p[j], rep.y0)
    inc = LaurentPoly.monomial(q, j - rep.i0)
    return p - inc * y, inc


def reduce_poly(P: LaurentPoly, y: LaurentPoly, max_topples: int | None = None) -> ToppleReport:
    rep = _check_reducer(y)
    y0, i0 = rep.y0, rep.i0
    thr = abs(y0)
    stencil = [(d - i0, c) for d, c in y.items()]

    coeffs: dict[int, int] = P.to_dict()
    depth: dict[int, int] = {}
    cof: dict[int, int] = {}
    heap = [(-abs(c), j) for j, c in coeffs.items() if abs(c) >= thr]
    heapq.heapify(heap)

    if max_topples is None:
        d = P.diameter if P else 0
        max_topples = 64 * (d + 2) * int((math.log2(P.height + 2) + 2) ** 2 + 1)

    topples = 0
    passes = 0
    while heap:
        neg, j = heapq.heappop(heap)
        c = coeffs.get(j, 0)
        if abs(c) != -neg or abs(c) < thr:
            continue  # stale entry
        q = _nearest_quotient(c, y0)
        gen = depth.get(j, 0)
        for off, yc in stencil:
            k = j + off
            nc = coeffs.get(k, 0) - q * yc
            coeffs[k] = nc
            if k != j and depth.get(k, 0) < gen + 1:
                depth[k] = gen + 1
            if abs(nc) >= thr:
                heapq.heappush(heap, (-abs(nc), k))
        cof[j - i0] = cof.get(j - i0, 0) + q
        topples += 1
        passes = max(passes, gen + 1)
        if topples > max_topples:
            raise ToppleCapExceeded(
                f"more than {max_topples} topples reducing a polynomial of "
                f"height {P.height} by {y}"
            )

    Q = LaurentPoly.from_dict(coeffs)
    final_d = Q.diameter if Q else 0
    in_d = P.diameter if P else 0
    K = P.height
    scale = max(1.0, log_star(K) * math.log2(K)) if K > 1 else 1.0
    return ToppleReport(
        input=P,
        reducer=y,
        Q=Q,
        cofactor=LaurentPoly.from_dict(cof),
        topples=topples,
        passes=passes,
        final_K=Q.height,
        final_d=final_d,
        height_bound=height_constant(y),
        spread_ratio=(final_d - in_d) / scale,
    )


def reduce_constant(K: int, y: LaurentPoly) -> ToppleReport:
    return reduce_poly(LaurentPoly.constant(K), y)


def verify_membership(report: ToppleReport) -> bool:
    """True iff input - Q == cofactor * reducer, exactly."""
    return report.input - report.Q == report.cofactor * report.reducer

