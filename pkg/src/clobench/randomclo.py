"""Random instances for property tests: correct CLOs, oracle-free circuits, rectangles.

All generators take a ``random.Random`` so that a test can replay any
instance from its seed.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from .circuits import BINARY, Circuit, CircuitBuilder, evaluate
from .rectangles import Empty, Explicit, RectFamily, RectPair
from .testsets import TestSuite


def random_rect_pair(rng: random.Random, suite: TestSuite, density: float | None = None) -> RectPair:
    """Explicit rectangle with each member included independently."""
    q = rng.random() if density is None else density
    us = [m.encode() for m in suite.U if rng.random() < q]
    vs = [m.encode() for m in suite.V if rng.random() < q]
    return RectPair(Explicit(tuple(us)) if us else Empty(), Explicit(tuple(vs)) if vs else Empty())


def _members_to_expr(members: list[str]):
    return Explicit(tuple(members)) if members else Empty()


def _y_formula(b: CircuitBuilder, rng: random.Random, e: int) -> int:
    i = rng.randrange(e)
    shape = rng.random()
    if shape < 0.5 or e == 1:
        return b.y(i)
    j = rng.choice([t for t in range(e) if t != i])
    return b.and_(b.y(i), b.y(j)) if shape < 0.75 else b.or_(b.y(i), b.y(j))


def _random_circuit_shape(rng: random.Random, n: int, k: int, e: int) -> Circuit:
    b = CircuitBuilder(n, BINARY)
    verts = list(range(n))
    terms = []
    covered: set[tuple[int, ...]] = set()

    def cover(xs_edges):
        vs = set(v for ed in xs_edges for v in ed)
        for B in cliques:
            if vs <= set(B):
                covered.add(B)

    # walk the cliques in random order, covering each one that is still open
    cliques = list(itertools.combinations(verts, k))
    for B in rng.sample(cliques, len(cliques)):
        if B in covered:
            continue
        if rng.random() < 0.15:
            pairs = list(itertools.combinations(B, 2))
            terms.append(b.and_(*(b.x(i, j) for i, j in pairs)))
            cover(pairs)
            continue
        i, j = rng.sample(B, 2)
        pairs = [(i, j)]
        if rng.random() < 0.3:
            t = rng.choice([v for v in B if v not in (i, j)])
            pairs.append((j, t))
        xs = b.and_(*(b.x(*p) for p in pairs))
        term = b.and_(xs, _y_formula(b, rng, e))
        if rng.random() < 0.3:
            # noise that is 1 whenever every oracle fires
            u, v = rng.sample(verts, 2)
            term = b.and_(term, b.or_(b.x(u, v), b.y(rng.randrange(e))))
        terms.append(term)
        cover(pairs)
    rng.shuffle(terms)
    return b.build(b.or_(*terms))


def random_correct_clo(rng: random.Random, suite: TestSuite, max_oracles: int = 3,
                       max_tries: int = 1000) -> tuple[Circuit, RectFamily]:
    """A random CLO that is correct under F* on ``suite``.

    The circuit is drawn first and kept only if it accepts every clique when
    all oracles fire and rejects every V-member when none do. Rectangles are
    then fitted member by member: each clique gets a random oracle set,
    grown until the circuit accepts, and each V-member a random set of
    oracles that must reject it, grown until the circuit rejects.
    """
    n, k = suite.n, suite.k
    edges_u = suite.edges_A[:suite.nu]
    edges_v = suite.edges_A[suite.nu:]
    for _ in range(max_tries):
        e = rng.randint(1, max_oracles)
        C = _random_circuit_shape(rng, n, k, e)
        if sorted(C.oracle_ids) != list(range(e)):
            continue
        ones = np.ones((suite.nu, e), dtype=bool)
        zeros = np.zeros((suite.nv, e), dtype=bool)
        if not evaluate(C, edges_u, ones).all() or evaluate(C, edges_v, zeros).any():
            continue
        u_sets: list[list[str]] = [[] for _ in range(e)]
        v_sets: list[list[str]] = [[] for _ in range(e)]
        for r, member in enumerate(suite.U):
            S = [rng.random() < 0.5 for _ in range(e)]
            order = rng.sample(range(e), e)
            while not evaluate(C, edges_u[r:r + 1], np.array([S]))[0]:
                S[next(i for i in order if not S[i])] = True
            for i in range(e):
                if S[i]:
                    u_sets[i].append(member.encode())
        for r, member in enumerate(suite.V):
            T = [rng.random() < 0.5 for _ in range(e)]
            order = rng.sample(range(e), e)
            while evaluate(C, edges_v[r:r + 1], ~np.array([T]))[0]:
                T[next(i for i in order if not T[i])] = True
            for i in range(e):
                if T[i]:
                    v_sets[i].append(member.encode())
        W = RectFamily(tuple(RectPair(_members_to_expr(u_sets[i]), _members_to_expr(v_sets[i]))
                             for i in range(e)))
        return C, W
    raise RuntimeError("no repairable random circuit found")


def random_monotone_circuit(rng: random.Random, n: int, max_size: int = 30) -> Circuit:
    """Random oracle-free binary circuit whose reachable size is at most ``max_size``."""
    all_edges = list(itertools.combinations(range(n), 2))
    while True:
        b = CircuitBuilder(n, BINARY)
        pool = [b.x(i, j) for i, j in rng.sample(all_edges, rng.randint(2, min(10, len(all_edges))))]
        for _ in range(rng.randint(1, max_size - len(pool))):
            a, c = rng.sample(pool, 2)
            g = b.gate(rng.choice(("and", "or")), [a, c])
            if g not in pool:
                pool.append(g)
        C = b.build(pool[-1])
        if 2 <= C.size <= max_size:
            return C


def random_family(rng: random.Random, n: int, ell: int, count: int) -> list[frozenset]:
    """``count`` distinct random subsets of [n], each of size 1..ell."""
    seen: set[frozenset] = set()
    while len(seen) < count:
        seen.add(frozenset(rng.sample(range(n), rng.randint(1, ell))))
    return list(seen)
