"""Positive/negative test sets for k-clique and the distribution over them.

Vertices are 0-based. The edge {i, j} with i < j has index ``j*(j-1)//2 + i``,
so edges are ordered (0,1), (0,2), (1,2), (0,3), ...

U(n, k) holds the k-cliques K_B in lexicographic order of the sorted tuple B.
V(n, k) holds the complete zeta-partite graphs, 2 <= zeta <= k-1, one per set
partition of the vertices. Partitions are stored canonically (parts sorted by
their minimum, each part ascending), which is the same as a restricted growth
string of block labels; V is listed in lexicographic order of that string.

All probability masses are exact ``Fraction`` values.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, ScaleError

CLIQUE_CAP = 10**6
PARTITION_CAP = 10**7


def edge_index(i: int, j: int) -> int:
    if i == j:
        raise ParameterError(f"loop edge {{{i},{j}}}")
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


def edge_count(n: int) -> int:
    return n * (n - 1) // 2


@functools.lru_cache(maxsize=None)
def edge_endpoints(n: int) -> tuple[tuple[int, int], ...]:
    """Endpoints of every edge slot, indexed by edge index."""
    return tuple((i, j) for j in range(n) for i in range(j))


def _endpoint_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    ends = edge_endpoints(n)
    if not ends:
        return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    arr = np.array(ends, dtype=np.intp)
    return arr[:, 0], arr[:, 1]


def falling(a: int, r: int) -> int:
    """a (a-1) ... (a-r+1); equals 0 when r > a >= 0."""
    out = 1
    for t in range(r):
        out *= a - t
    return out


@functools.lru_cache(maxsize=None)
def stirling2(n: int, r: int) -> int:
    if n == r:
        return 1
    if r == 0 or r > n:
        return 0
    return r * stirling2(n - 1, r) + stirling2(n - 1, r - 1)


def partition_count(n: int, k: int) -> int:
    """|V(n, k)| = sum of S(n, zeta) for 2 <= zeta <= k-1."""
    return sum(stirling2(n, z) for z in range(2, k))


# ---------------------------------------------------------------- members


@dataclass(frozen=True)
class Graph:
    n: int
    edges: int

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("graph needs at least one vertex")
        if self.edges < 0 or self.edges >> edge_count(self.n):
            raise ParameterError("edge bits outside the C(n,2) slots")

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.edges >> edge_index(i, j) & 1)

    @property
    def size(self) -> int:
        return self.edges.bit_count()

    def edge_list(self) -> list[tuple[int, int]]:
        return [e for t, e in enumerate(edge_endpoints(self.n)) if self.edges >> t & 1]

    def issubset(self, other: "Graph") -> bool:
        return self.edges & ~other.edges == 0

    def encode(self) -> str:
        return format(self.edges, "x")

    @classmethod
    def decode(cls, text: str, n: int) -> "Graph":
        return cls(n, int(text, 16))

    def edge_vector(self) -> np.ndarray:
        m = edge_count(self.n)
        return np.array([self.edges >> t & 1 for t in range(m)], dtype=bool)


@dataclass(frozen=True)
class CliqueGraph:
    """K_B on n vertices."""

    n: int
    B: tuple[int, ...]

    @property
    def graph(self) -> Graph:
        bits = 0
        for a, b in itertools.combinations(self.B, 2):
            bits |= 1 << edge_index(a, b)
        return Graph(self.n, bits)

    def encode(self) -> str:
        return ",".join(map(str, self.B))


@dataclass(frozen=True)
class Coloring:
    chi: tuple[int, ...]
    k: int

    def __post_init__(self):
        if any(c < 0 or c > self.k - 2 for c in self.chi):
            raise ParameterError(f"colors must lie in 0..{self.k - 2}")

    @property
    def n(self) -> int:
        return len(self.chi)

    @property
    def trivial(self) -> bool:
        return len(set(self.chi)) <= 1


@dataclass(frozen=True)
class Partition:
    """A set partition of range(n) in canonical form."""

    n: int
    parts: tuple[tuple[int, ...], ...]

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        groups: dict[int, list[int]] = {}
        for v, c in enumerate(labels):
            groups.setdefault(int(c), []).append(v)
        parts = sorted((tuple(g) for g in groups.values()), key=lambda p: p[0])
        return cls(len(labels), tuple(parts))

    @property
    def zeta(self) -> int:
        return len(self.parts)

    @property
    def labels(self) -> tuple[int, ...]:
        """Restricted growth string: block number of each vertex."""
        out = [0] * self.n
        for b, part in enumerate(self.parts):
            for v in part:
                out[v] = b
        return tuple(out)

    @property
    def graph(self) -> Graph:
        lab = self.labels
        bits = 0
        for t, (i, j) in enumerate(edge_endpoints(self.n)):
            if lab[i] != lab[j]:
                bits |= 1 << t
        return Graph(self.n, bits)

    def encode(self) -> str:
        return "|".join(",".join(map(str, p)) for p in self.parts)


def parse_member(text: str, n: int) -> CliqueGraph | Partition:
    """Inverse of ``encode`` for cliques ("0,2,5") and partitions ("0,2|1,3")."""
    text = text.strip()
    try:
        if "|" in text:
            parts = [tuple(int(v) for v in p.split(",")) for p in text.split("|")]
            labels = [-1] * n
            for b, part in enumerate(parts):
                for v in part:
                    if not 0 <= v < n or labels[v] != -1:
                        raise ParameterError(f"bad partition encoding {text!r}")
                    labels[v] = b
            if -1 in labels:
                raise ParameterError(f"partition {text!r} does not cover range({n})")
            return Partition.from_labels(labels)
        B = tuple(sorted(int(v) for v in text.split(",")))
    except ValueError as exc:
        raise ParameterError(f"cannot parse member {text!r}") from exc
    if len(set(B)) != len(B) or (B and (B[0] < 0 or B[-1] >= n)):
        raise ParameterError(f"bad clique encoding {text!r}")
    return CliqueGraph(n, B)


def clique_graph(B: Iterable[int], n: int) -> CliqueGraph:
    B = tuple(sorted(set(B)))
    if len(B) < 2:
        raise ParameterError("a clique needs at least two vertices")
    if B[0] < 0 or B[-1] >= n:
        raise ParameterError(f"clique {B} not inside range({n})")
    return CliqueGraph(n, B)


def graph_of_coloring(chi: Coloring) -> Graph:
    return partition_of_coloring(chi).graph


def partition_of_coloring(chi: Coloring) -> Partition:
    return Partition.from_labels(chi.chi)


# ------------------------------------------------------------ enumeration


def _check_range(n: int, k: int, allow_k_eq_n: bool = False) -> None:
    if k < 3 or n < 4 or k > n or (k == n and not allow_k_eq_n):
        raise ParameterError(f"need 3 <= k < n and n >= 4, got n={n}, k={k}")


def enumerate_U(n: int, k: int) -> list[CliqueGraph]:
    _check_range(n, k)
    return [CliqueGraph(n, B) for B in itertools.combinations(range(n), k)]


def restricted_growth_strings(n: int, max_blocks: int) -> Iterable[tuple[int, ...]]:
    """All set partitions of range(n) into at most max_blocks blocks, lexicographic."""
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(pos: int, used: int):
        if pos == n:
            yield tuple(a)
            return
        for c in range(min(used + 1, max_blocks)):
            a[pos] = c
            yield from rec(pos + 1, max(used, c + 1))

    yield from rec(1, 1)


def enumerate_V(n: int, k: int) -> list[Partition]:
    # (n, n) is accepted here so that V can be listed for tiny sanity cases.
    _check_range(n, k, allow_k_eq_n=True)
    out = []
    for labels in restricted_growth_strings(n, k - 1):
        if max(labels) >= 1:
            out.append(Partition.from_labels(labels))
    return out


def dv_mass(P: Partition, n: int, k: int) -> Fraction:
    """Probability of P under a uniform nontrivial coloring with k-1 colors."""
    if not 2 <= P.zeta <= k - 1:
        raise ParameterError(f"partition has {P.zeta} parts, need 2..{k - 1}")
    return Fraction(falling(k - 1, P.zeta), (k - 1) ** n - (k - 1))


def coloring_multiplicity(zeta: int, k: int) -> int:
    """Number of colorings with k-1 colors inducing a fixed zeta-block partition."""
    return falling(k - 1, zeta)


def check_antichain(members) -> bool:
    """True iff no two distinct entries are comparable under edge inclusion.

    Accepts a TestSuite or any iterable of Graph objects. Two equal graphs at
    different positions count as comparable.
    """
    if isinstance(members, TestSuite):
        codes = members.graph_codes()
    else:
        codes = [g.edges for g in members]
    N = len(codes)
    if N < 2:
        return True
    if max(codes).bit_length() <= 63:
        c = np.array(codes, dtype=np.int64)
        chunk = max(1, 2_000_000 // N)
        for start in range(0, N, chunk):
            a = c[start:start + chunk, None]
            sub = (a & ~c[None, :]) == 0
            idx = np.arange(start, min(start + chunk, N))
            sub[idx - start, idx] = False
            if sub.any():
                return False
        return True
    for x, y in itertools.permutations(range(N), 2):
        if codes[x] & ~codes[y] == 0:
            return False
    return True


# ------------------------------------------------------------- test suite


class TestSuite:
    """U(n,k), V(n,k) and their exact masses, plus array views for fast evaluation.

    Members of A = U + V are indexed with U first: index i < len(U) is U[i],
    index len(U) + j is V[j].
    """

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, n: int, k: int, *, clique_cap: int = CLIQUE_CAP,
                 partition_cap: int = PARTITION_CAP):
        _check_range(n, k)
        nu, nv = math.comb(n, k), partition_count(n, k)
        if nu > clique_cap or nv > partition_cap:
            raise ScaleError(
                f"exact enumeration of (n={n}, k={k}) needs {nu} cliques and {nv} "
                f"partitions (caps {clique_cap}, {partition_cap}); use Monte Carlo locality")
        self.n, self.k = n, k
        self.m = edge_count(n)
        self.u_sets = np.array(list(itertools.combinations(range(n), k)), dtype=np.int16)
        self.v_labels = np.array(
            [rgs for rgs in restricted_growth_strings(n, k - 1) if max(rgs) >= 1],
            dtype=np.int8).reshape(-1, n)
        self.v_zeta = self.v_labels.max(axis=1).astype(np.int64) + 1
        self.du_mass = Fraction(1, nu)
        denom = (k - 1) ** n - (k - 1)
        self.zeta_weight = {z: Fraction(falling(k - 1, z), denom) for z in range(2, k)}

        I, J = _endpoint_arrays(n)
        in_b = np.zeros((nu, n), dtype=bool)
        np.put_along_axis(in_b, self.u_sets.astype(np.intp), True, axis=1)
        self.u_edges = in_b[:, I] & in_b[:, J]
        self.v_edges = self.v_labels[:, I] != self.v_labels[:, J]
        for arr in (self.u_sets, self.v_labels, self.v_zeta, self.u_edges, self.v_edges):
            arr.flags.writeable = False
        self._index: dict | None = None

    def __repr__(self):
        return f"TestSuite(n={self.n}, k={self.k}, |U|={self.nu}, |V|={self.nv})"

    @property
    def nu(self) -> int:
        return len(self.u_sets)

    @property
    def nv(self) -> int:
        return len(self.v_labels)

    @property
    def U(self) -> list[CliqueGraph]:
        return [CliqueGraph(self.n, tuple(int(v) for v in row)) for row in self.u_sets]

    @property
    def V(self) -> list[Partition]:
        return [Partition.from_labels(row) for row in self.v_labels]

    @property
    def dv_mass(self) -> list[Fraction]:
        return [self.zeta_weight[int(z)] for z in self.v_zeta]

    @property
    def edges_A(self) -> np.ndarray:
        return np.vstack([self.u_edges, self.v_edges])

    def member(self, index: int) -> CliqueGraph | Partition:
        if index < self.nu:
            return CliqueGraph(self.n, tuple(int(v) for v in self.u_sets[index]))
        return Partition.from_labels(self.v_labels[index - self.nu])

    def index_of(self, member: CliqueGraph | Partition) -> int:
        if self._index is None:
            self._index = {tuple(int(v) for v in r): i for i, r in enumerate(self.u_sets)}
            self._index.update({("P",) + tuple(int(v) for v in r): self.nu + j
                                for j, r in enumerate(self.v_labels)})
        if isinstance(member, CliqueGraph):
            key = member.B
        else:
            key = ("P",) + member.labels
        try:
            return self._index[key]
        except KeyError:
            raise ParameterError(f"{member.encode()!r} is not a member of A({self.n},{self.k})") from None

    def graph_codes(self) -> list[int]:
        weights = [1 << t for t in range(self.m)]
        out = []
        for row in self.edges_A:
            out.append(sum(w for w, b in zip(weights, row) if b))
        return out

    def v_measure(self, mask: np.ndarray) -> Fraction:
        """Exact D^V mass of the V-members selected by a boolean mask."""
        mask = np.asarray(mask, dtype=bool)
        counts = np.bincount(self.v_zeta[mask], minlength=self.k)
        return sum((int(counts[z]) * w for z, w in self.zeta_weight.items()), Fraction(0))

    def u_measure(self, mask: np.ndarray) -> Fraction:
        return Fraction(int(np.count_nonzero(mask)), self.nu)

    def v_coloring_weight(self, mask: np.ndarray) -> int:
        """Number of colorings (k-1 colors) whose graph is a selected V-member."""
        mask = np.asarray(mask, dtype=bool)
        counts = np.bincount(self.v_zeta[mask], minlength=self.k)
        return sum(int(counts[z]) * falling(self.k - 1, z) for z in range(2, self.k))


@functools.lru_cache(maxsize=16)
def build_suite(n: int, k: int) -> TestSuite:
    """Cached TestSuite with the default caps."""
    return TestSuite(n, k)
