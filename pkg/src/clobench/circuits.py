"""Monotone circuits with local oracles: IR, evaluation, valuations, normal form.

A circuit is a tuple of nodes in topological order: every gate refers only to
earlier nodes. Leaves are edge variables ``x`` (by edge index), oracle inputs
``y`` (by oracle id) and constants. Size is the number of nodes reachable from
the output, leaves included; the builder shares identical leaves so each
distinct leaf is counted once.

Evaluation is vectorized: a whole batch of graphs is pushed through the DAG
at once as boolean arrays.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import AssumptionError, CloError, NormalFormError, ParameterError
from .rectangles import (All, Empty, Intersection, RectFamily, RectPair, Union,
                         U_SIDE, V_SIDE, eval_set_expr, family_masks, max_overlap,
                         pair_masks)
from .testsets import CliqueGraph, Partition, TestSuite, edge_count, edge_index

BINARY, UNBOUNDED = "binary", "unbounded"
GATES = ("and", "or")


class Node(NamedTuple):
    op: str                       # "x", "y", "const", "and", "or"
    arg: int | tuple[int, ...]    # edge index, oracle id, 0/1, or child ids


@dataclass(frozen=True)
class Circuit:
    n: int
    nodes: tuple[Node, ...]
    output: int
    fanin: str = BINARY

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(Node(op, arg) for op, arg in self.nodes))
        if self.fanin not in (BINARY, UNBOUNDED):
            raise ParameterError(f"unknown fan-in mode {self.fanin!r}")
        if not 0 <= self.output < len(self.nodes):
            raise ParameterError("output is not a node")
        m = edge_count(self.n)
        for idx, (op, arg) in enumerate(self.nodes):
            if op == "x":
                if not 0 <= arg < m:
                    raise ParameterError(f"node {idx}: edge index {arg} out of range")
            elif op == "y":
                if arg < 0:
                    raise ParameterError(f"node {idx}: negative oracle id")
            elif op == "const":
                if arg not in (0, 1):
                    raise ParameterError(f"node {idx}: constant must be 0 or 1")
            elif op in GATES:
                if any(not 0 <= c < idx for c in arg):
                    raise ParameterError(f"node {idx}: children must precede the gate")
                if self.fanin == BINARY and len(arg) != 2:
                    raise ParameterError(f"node {idx}: binary circuits need fan-in 2")
            else:
                raise ParameterError(f"node {idx}: unknown op {op!r}")

    def reachable(self) -> list[int]:
        seen = {self.output}
        stack = [self.output]
        while stack:
            op, arg = self.nodes[stack.pop()]
            if op in GATES:
                for c in arg:
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
        return sorted(seen)

    @property
    def size(self) -> int:
        return len(self.reachable())

    @property
    def oracle_ids(self) -> list[int]:
        return sorted({self.nodes[i].arg for i in self.reachable() if self.nodes[i].op == "y"})

    @property
    def oracle_free(self) -> bool:
        return not self.oracle_ids


class CircuitBuilder:
    """Incremental construction with shared leaves.

    In binary mode, ``and_``/``or_`` with more than two arguments fold to the
    left: and_(a, b, c) = and(and(a, b), c).
    """

    def __init__(self, n: int, fanin: str = BINARY):
        self.n = n
        self.fanin = fanin
        self.nodes: list[Node] = []
        self._leaves: dict[tuple, int] = {}

    def _leaf(self, op, arg) -> int:
        key = (op, arg)
        if key not in self._leaves:
            self._leaves[key] = len(self.nodes)
            self.nodes.append(Node(op, arg))
        return self._leaves[key]

    def x(self, i: int, j: int) -> int:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ParameterError(f"edge {{{i},{j}}} outside range({self.n})")
        return self._leaf("x", edge_index(i, j))

    def x_index(self, e: int) -> int:
        return self._leaf("x", int(e))

    def y(self, oracle: int) -> int:
        return self._leaf("y", int(oracle))

    def const(self, value: int) -> int:
        return self._leaf("const", int(value))

    def gate(self, op: str, args: Sequence[int]) -> int:
        args = list(args)
        if not args:
            return self.const(1 if op == "and" else 0)
        if len(args) == 1:
            return args[0]
        if self.fanin == BINARY:
            acc = args[0]
            for a in args[1:]:
                self.nodes.append(Node(op, (acc, a)))
                acc = len(self.nodes) - 1
            return acc
        self.nodes.append(Node(op, tuple(args)))
        return len(self.nodes) - 1

    def and_(self, *args: int) -> int:
        return self.gate("and", args)

    def or_(self, *args: int) -> int:
        return self.gate("or", args)

    def build(self, output: int) -> Circuit:
        return Circuit(self.n, tuple(self.nodes), output, self.fanin)


def evaluate(C: Circuit, edges: np.ndarray, oracles: np.ndarray | None = None) -> np.ndarray:
    """Evaluate on a batch: ``edges`` is (N, C(n,2)) bool, ``oracles`` is (N, e) bool."""
    edges = np.asarray(edges, dtype=bool)
    N = edges.shape[0]
    vals: dict[int, np.ndarray] = {}
    for idx in C.reachable():
        op, arg = C.nodes[idx]
        if op == "x":
            v = edges[:, arg]
        elif op == "y":
            if oracles is None or arg >= oracles.shape[1]:
                raise ParameterError(f"no valuation for oracle y{arg}")
            v = oracles[:, arg]
        elif op == "const":
            v = np.full(N, bool(arg))
        elif op == "and":
            v = vals[arg[0]].copy()
            for c in arg[1:]:
                v &= vals[c]
        else:
            v = vals[arg[0]].copy()
            for c in arg[1:]:
                v |= vals[c]
        vals[idx] = v
    return vals[C.output]


def binarize(C: Circuit) -> Circuit:
    """Left-leaning fan-in-2 version of an unbounded fan-in circuit."""
    if C.fanin == BINARY:
        return C
    b = CircuitBuilder(C.n, BINARY)
    remap: dict[int, int] = {}
    for idx in C.reachable():
        op, arg = C.nodes[idx]
        if op in GATES:
            remap[idx] = b.gate(op, [remap[c] for c in arg])
        else:
            remap[idx] = b._leaf(op, arg)
    return b.build(remap[C.output])


# -------------------------------------------------------------- valuations


def fstar_vector(rect: RectPair, suite: TestSuite) -> np.ndarray:
    """f*_(U',V') over A: 1 on U' and on V minus V'."""
    um, vm = pair_masks(rect, suite)
    return np.concatenate([um, ~vm])


class OracleValuation:
    """Boolean functions on A for each oracle of a family, all separating their pairs."""

    family: RectFamily

    def matrix(self, suite: TestSuite) -> np.ndarray:
        """Values of every oracle on every member of A, shape (|A|, e)."""
        raise NotImplementedError

    def row(self, member: CliqueGraph | Partition, suite: TestSuite | None = None) -> np.ndarray:
        if suite is None:
            raise ParameterError(f"{type(self).__name__} needs the test suite to evaluate a member")
        return self.matrix(suite)[suite.index_of(member)]


@dataclass(frozen=True)
class FStar(OracleValuation):
    family: RectFamily

    def matrix(self, suite):
        um, vm = family_masks(self.family, suite)
        return np.concatenate([um, ~vm], axis=1).T.copy()

    def row(self, member, suite=None):
        out = []
        for rect in self.family:
            if isinstance(member, CliqueGraph):
                out.append(eval_set_expr(rect.U, member))
            else:
                out.append(not eval_set_expr(rect.V, member))
        return np.array(out, dtype=bool)


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def hash_bits(seed: int, oracle: int, count: int) -> np.ndarray:
    """Stateless pseudo-random bits indexed by (seed, oracle, member index)."""
    with np.errstate(over="ignore"):
        idx = np.arange(count, dtype=np.uint64)
        h = _splitmix(np.full(count, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
        h = _splitmix(h ^ np.uint64(oracle & 0xFFFFFFFF))
        h = _splitmix(h ^ idx)
    return (h >> np.uint64(63)).astype(bool)


@dataclass(frozen=True)
class SeededValuation(OracleValuation):
    family: RectFamily
    seed: int

    def matrix(self, suite):
        um, vm = family_masks(self.family, suite)
        na = suite.nu + suite.nv
        out = np.empty((na, len(self.family)), dtype=bool)
        for i in range(len(self.family)):
            bits = hash_bits(self.seed, i, na)
            out[:suite.nu, i] = bits[:suite.nu] | um[i]
            out[suite.nu:, i] = bits[suite.nu:] & ~vm[i]
        return out


@dataclass(frozen=True, eq=False)
class ExplicitTable(OracleValuation):
    """A fully materialized valuation; checked to separate at construction."""

    family: RectFamily
    suite: TestSuite
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=bool)
        if t.shape != (self.suite.nu + self.suite.nv, len(self.family)):
            raise ParameterError("table must have shape (|A|, e)")
        um, vm = family_masks(self.family, self.suite)
        if (um.T & ~t[:self.suite.nu]).any() or (vm.T & t[self.suite.nu:]).any():
            raise ParameterError("table does not separate every (U_i, V_i)")
        object.__setattr__(self, "table", t)

    def matrix(self, suite):
        if suite is not self.suite and (suite.n, suite.k) != (self.suite.n, self.suite.k):
            raise ParameterError("table was built for a different test suite")
        return self.table


def f_star(W: RectFamily) -> FStar:
    return FStar(W)


def random_separating(W: RectFamily, suite: TestSuite, seed: int) -> SeededValuation:
    # suite is accepted for signature symmetry; the hash needs only member indices
    del suite
    return SeededValuation(W, seed)


def eval_circuit(C: Circuit, member: CliqueGraph | Partition, val: OracleValuation | None = None,
                 suite: TestSuite | None = None) -> bool:
    edges = member.graph.edge_vector()[None, :]
    oracles = None
    if C.oracle_ids:
        if val is None:
            raise ParameterError("circuit has oracle leaves but no valuation was given")
        oracles = val.row(member, suite)[None, :]
    return bool(evaluate(C, edges, oracles)[0])


def eval_on_suite(C: Circuit, suite: TestSuite, val: OracleValuation | None = None) -> np.ndarray:
    oracles = val.matrix(suite) if val is not None and C.oracle_ids else None
    return evaluate(C, suite.edges_A, oracles)


# ------------------------------------------------------------ verification


@dataclass
class SeparationReport:
    passed: bool
    u_accepted: int
    u_total: int
    v_rejected: int
    v_total: int
    witness: str | None = None
    witness_side: str | None = None

    def to_json(self) -> dict:
        return {"verdict": "pass" if self.passed else "fail",
                "u_accepted": self.u_accepted, "u_total": self.u_total,
                "v_rejected": self.v_rejected, "v_total": self.v_total,
                "witness": self.witness, "witness_side": self.witness_side}


def separation_report(out: np.ndarray, suite: TestSuite) -> SeparationReport:
    u_out, v_out = out[:suite.nu], out[suite.nu:]
    rep = SeparationReport(bool(u_out.all() and not v_out.any()),
                           int(u_out.sum()), suite.nu, int((~v_out).sum()), suite.nv)
    if not rep.passed:
        bad_u = np.flatnonzero(~u_out)
        if len(bad_u):
            rep.witness, rep.witness_side = suite.member(int(bad_u[0])).encode(), U_SIDE
        else:
            j = int(np.flatnonzero(v_out)[0])
            rep.witness, rep.witness_side = suite.member(suite.nu + j).encode(), V_SIDE
    return rep


def verify_separation(C: Circuit, W: RectFamily, suite: TestSuite) -> SeparationReport:
    """Check C under F* on all of A.

    A pass certifies correctness for every separating valuation, since F* is
    the pointwise worst case on both sides.
    """
    _check_oracles(C, W)
    return separation_report(eval_on_suite(C, suite, FStar(W)), suite)


def _check_oracles(C: Circuit, W: RectFamily) -> None:
    missing = [i for i in C.oracle_ids if i >= len(W)]
    if missing:
        raise ParameterError(f"oracle ids {missing} have no rectangle (family has {len(W)})")


# ------------------------------------------------------------- normal form


def substitute(C: Circuit, J: Iterable[int]) -> Circuit:
    """Oracle-free D_J: y_j becomes 1 for j in J and 0 otherwise."""
    J = set(J)
    b = CircuitBuilder(C.n, C.fanin)
    remap: dict[int, int] = {}
    for idx in C.reachable():
        op, arg = C.nodes[idx]
        if op == "y":
            remap[idx] = b.const(1 if arg in J else 0)
        elif op in GATES:
            b.nodes.append(Node(op, tuple(remap[c] for c in arg)))
            remap[idx] = len(b.nodes) - 1
        else:
            remap[idx] = b._leaf(op, arg)
    return b.build(remap[C.output])


def combined_pair(W: RectFamily, J: Sequence[int]) -> RectPair:
    """(intersection of U_j, union of V_j) over j in J; (All, None) for empty J."""
    if not J:
        return RectPair(All(), Empty())
    if len(J) == 1:
        return W[J[0]]
    return RectPair(Intersection(tuple(W[j].U for j in J)), Union(tuple(W[j].V for j in J)))


@dataclass
class NormalFormEntry:
    J: tuple[int, ...]
    circuit: Circuit
    pair: RectPair


@dataclass
class NormalForm:
    entries: list[NormalFormEntry] = field(default_factory=list)
    d: int = 0

    def evaluate(self, suite: TestSuite) -> np.ndarray:
        out = np.zeros(suite.nu + suite.nv, dtype=bool)
        for ent in self.entries:
            out |= evaluate(ent.circuit, suite.edges_A) & fstar_vector(ent.pair, suite)
        return out


def normal_form(C: Circuit, W: RectFamily, d: int, suite: TestSuite, *, check: bool = True) -> NormalForm:
    """OR over |J| <= d of D_J AND f*_(U_J, V_J), checked pointwise on A."""
    _check_oracles(C, W)
    overlap = max_overlap(W, suite)
    if overlap > d:
        raise AssumptionError(f"A_{d} fails: some clique lies in {overlap} of the U_i")
    rep = verify_separation(C, W, suite)
    if not rep.passed:
        raise CloError(f"normal form needs a correct CLO; fails on {rep.witness}")
    e = len(W)
    nf = NormalForm(d=d)
    for size in range(0, min(d, e) + 1):
        for J in itertools.combinations(range(e), size):
            nf.entries.append(NormalFormEntry(J, substitute(C, J), combined_pair(W, J)))
    if check:
        direct = eval_on_suite(C, suite, FStar(W))
        bad = np.flatnonzero(direct != nf.evaluate(suite))
        if len(bad):
            raise NormalFormError(f"normal form disagrees on {suite.member(int(bad[0])).encode()}")
    return nf
