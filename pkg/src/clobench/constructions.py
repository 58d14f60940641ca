"""Explicit monotone CLOs for k-clique and their closed-form localities."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .circuits import BINARY, UNBOUNDED, Circuit, CircuitBuilder
from .errors import ParameterError
from .rectangles import (All, ContainsClique, LexFirst, NotEdgeU, NotEdgeV, RectFamily,
                         RectPair, SmallestPair, SplitPair)
from .testsets import falling


def _check(n: int, k: int) -> None:
    if n < 4 or not 3 <= k < n:
        raise ParameterError(f"need 3 <= k < n and n >= 4, got n={n}, k={k}")


def single_oracle(n: int, k: int) -> tuple[Circuit, RectFamily]:
    """One oracle leaf whose rectangle is all of U x V (locality 1)."""
    _check(n, k)
    b = CircuitBuilder(n)
    return b.build(b.y(0)), RectFamily((RectPair(All(), All()),))


def triangle_clo(n: int) -> tuple[Circuit, RectFamily]:
    """OR over i<j of (x_ij AND y_ij), depth 2 with unbounded fan-in.

    Oracle ``y_ij`` has id equal to the edge index of {i, j}. Its U-set is the
    triangles whose two smallest vertices are i, j; its V-set the bipartite
    graphs splitting i from j.
    """
    _check(n, 3)
    b = CircuitBuilder(n, UNBOUNDED)
    terms, rects = [], []
    for oid, (i, j) in enumerate((i, j) for j in range(n) for i in range(j)):
        terms.append(b.and_(b.x(i, j), b.y(oid)))
        rects.append(RectPair(SmallestPair(i, j), SplitPair(i, j)))
    return b.build(b.or_(*terms)), RectFamily(tuple(rects))


def triangle_locality(n: int) -> Fraction:
    return Fraction(2 ** (n - 1), 2 ** n - 2)


def trivial_dnf(n: int, k: int, fanin: str = UNBOUNDED) -> tuple[Circuit, RectFamily]:
    """OR of the clique indicators of every k-subset; no oracles."""
    _check(n, k)
    b = CircuitBuilder(n, fanin)
    terms = [b.and_(*(b.x(i, j) for i, j in itertools.combinations(B, 2)))
             for B in itertools.combinations(range(n), k)]
    return b.build(b.or_(*terms)), RectFamily(())


def lex_first(B, ell: int) -> tuple[int, ...]:
    B = sorted(B)
    if not 0 <= ell <= len(B):
        raise ParameterError(f"cannot take {ell} elements of a {len(B)}-set")
    return tuple(B[:ell])


def lex_clo(n: int, k: int, ell: int, fanin: str = BINARY) -> tuple[Circuit, RectFamily]:
    """OR over ell-sets D of (clique indicator of D AND y_D).

    Oracle ids follow the lexicographic order of D. U_D holds the cliques whose
    ell smallest vertices are D, so the U-sets partition U(n,k); V_D holds the
    multipartite graphs containing K_D.
    """
    _check(n, k)
    if not 2 <= ell < k:
        raise ParameterError(f"need 2 <= ell < k, got ell={ell}, k={k}")
    b = CircuitBuilder(n, fanin)
    terms, rects = [], []
    for oid, D in enumerate(itertools.combinations(range(n), ell)):
        xs = [b.x(i, j) for i, j in itertools.combinations(D, 2)]
        terms.append(b.and_(*xs, b.y(oid)))
        rects.append(RectPair(LexFirst(D), ContainsClique(D)))
    return b.build(b.or_(*terms)), RectFamily(tuple(rects))


def lex_clo_locality(n: int, k: int, ell: int) -> Fraction:
    """Exact locality of lex_clo: P[D properly colored] / P[coloring nontrivial]."""
    _check(n, k)
    if not 2 <= ell < k:
        raise ParameterError(f"need 2 <= ell < k, got ell={ell}, k={k}")
    proper = Fraction(falling(k - 1, ell), (k - 1) ** ell)
    nontrivial = 1 - Fraction(1, (k - 1) ** (n - 1))
    return proper / nontrivial


def lex_clo_decay_bound(k: int, ell: int) -> float:
    """exp(-ell (floor(ell/2) - 1) / (2 (k-1))), the tail bound on the coloring factor."""
    return math.exp(-ell * (ell // 2 - 1) / (2 * (k - 1)))


def lex_ell_for(n: int, k: int, eps: Fraction) -> int:
    """Least ell in [2, k) whose lex_clo locality is at most eps."""
    for ell in range(2, k):
        if lex_clo_locality(n, k, ell) <= eps:
            return ell
    raise ParameterError(f"no ell < {k} reaches locality {eps} at n={n}")


def small_locality_clo(n: int, k: int, eps: Fraction) -> tuple[Circuit, RectFamily, int]:
    """A lex CLO with locality <= eps and pairwise disjoint U-sets."""
    ell = lex_ell_for(n, k, eps)
    C, W = lex_clo(n, k, ell)
    return C, W, ell


def negation_oracle(e: tuple[int, int], n: int, k: int) -> RectPair:
    """Rectangle of an oracle acting as the negated edge variable for e."""
    _check(n, k)
    i, j = e
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise ParameterError(f"bad edge {e} for n={n}")
    return RectPair(NotEdgeU(i, j), NotEdgeV(i, j))


CONSTRUCTIONS = {
    "single-oracle": lambda n, k, ell: single_oracle(n, k),
    "triangle": lambda n, k, ell: triangle_clo(n),
    "trivial-dnf": lambda n, k, ell: trivial_dnf(n, k),
    "lex": lambda n, k, ell: lex_clo(n, k, ell),
}
