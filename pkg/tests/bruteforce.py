"""Independent slow oracles used to freeze expected values.

Nothing here imports the package's enumeration or measure code: graphs are
frozensets of vertex pairs and colorings are plain tuples.
"""

import itertools
from collections import Counter
from fractions import Fraction


def pairs(vertices):
    return frozenset(itertools.combinations(sorted(vertices), 2))


def coloring_graph(chi):
    n = len(chi)
    return frozenset((i, j) for i in range(n) for j in range(i + 1, n) if chi[i] != chi[j])


def colorings(n, k, nontrivial=True):
    for chi in itertools.product(range(k - 1), repeat=n):
        if nontrivial and len(set(chi)) == 1:
            continue
        yield chi


def blocks_of(chi):
    groups = {}
    for v, c in enumerate(chi):
        groups.setdefault(c, []).append(v)
    return frozenset(frozenset(g) for g in groups.values())


def dv_distribution(n, k):
    """Partition (as frozenset of blocks) -> probability under a uniform nontrivial coloring."""
    counts = Counter(blocks_of(chi) for chi in colorings(n, k))
    total = sum(counts.values())
    return {P: Fraction(c, total) for P, c in counts.items()}


def cliques(n, k):
    return [frozenset(B) for B in itertools.combinations(range(n), k)]


def locality(n, k, in_rect):
    """Pr over (clique B, nontrivial coloring chi) of in_rect(B, chi), by double loop."""
    cs = cliques(n, k)
    cols = list(colorings(n, k))
    hits = sum(1 for B in cs for chi in cols if in_rect(B, chi))
    return Fraction(hits, len(cs) * len(cols))


def subset_pairs(graphs):
    """All ordered pairs (a, b), a != b, with a's edge set inside b's."""
    gs = list(graphs)
    return [(a, b) for a in gs for b in gs if a != b and a <= b]
