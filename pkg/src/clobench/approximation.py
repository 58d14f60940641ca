"""Approximation method: clique-indicator approximators, plucking, error counts.

An approximator is an OR of clique indicators, each on at most ``ell``
vertices. Gates are approximated bottom-up: OR concatenates the two
families, AND takes all pairwise unions and drops those larger than ``ell``;
either way the result is plucked (sunflowers replaced by their cores) until at
most ``m`` indicators remain.

Errors are counted against the k-clique test sets: positive errors on the
k-cliques, negative errors on all colorings with k-1 colors (the trivial ones
included, they map to the empty graph).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .circuits import (UNBOUNDED, Circuit, binarize, evaluate, fstar_vector,
                       normal_form, eval_on_suite, FStar)
from .errors import ParameterError
from .rectangles import RectFamily
from .testsets import TestSuite, edge_endpoints, edge_index


@dataclass(frozen=True)
class ApproxParams:
    ell: int
    p: int
    m: int

    def __post_init__(self):
        if self.ell < 1 or self.p < 2 or self.m < 1:
            raise ParameterError(f"need ell >= 1, p >= 2, m >= 1; got {self}")

    @property
    def sunflower_bound(self) -> int:
        """(p-1)^ell * ell!: more distinct sets than this always contain a p-sunflower."""
        return (self.p - 1) ** self.ell * math.factorial(self.ell)

    def to_json(self):
        return {"ell": self.ell, "p": self.p, "m": self.m}


def default_params(n: int, k: int) -> ApproxParams:
    """ell = floor(sqrt k), p = ceil(10 sqrt(k) log2 n), m = (p-1)^ell ell!."""
    if n < 2 or k < 2:
        raise ParameterError("need n, k >= 2")
    ell = math.isqrt(k)
    with localcontext() as ctx:
        ctx.prec = 60
        val = 10 * Decimal(k).sqrt() * (Decimal(n).ln() / Decimal(2).ln())
        # log2 of a power of two must come out integral
        if n & (n - 1) == 0:
            val = 10 * Decimal(k).sqrt() * (n.bit_length() - 1)
        p = int(val.to_integral_value(rounding=ROUND_CEILING))
    return ApproxParams(ell, p, (p - 1) ** ell * math.factorial(ell))


def _order(S: frozenset) -> tuple:
    return (max(S) if S else -1, tuple(sorted(S)))


@dataclass(frozen=True)
class Approximator:
    indicators: tuple[frozenset, ...] = ()

    def __post_init__(self):
        uniq = {frozenset(int(v) for v in S) for S in self.indicators}
        object.__setattr__(self, "indicators", tuple(sorted(uniq, key=lambda S: (len(S), sorted(S)))))

    @classmethod
    def zero(cls) -> "Approximator":
        return cls(())

    @classmethod
    def one(cls) -> "Approximator":
        return cls((frozenset(),))

    def __len__(self):
        return len(self.indicators)

    @property
    def is_constant_one(self) -> bool:
        return any(len(S) <= 1 for S in self.indicators)

    def evaluate(self, edges: np.ndarray, n: int) -> np.ndarray:
        """Batch evaluation on (N, C(n,2)) edge arrays."""
        edges = np.asarray(edges, dtype=bool)
        out = np.zeros(edges.shape[0], dtype=bool)
        for S in self.indicators:
            cols = [edge_index(a, b) for a, b in itertools.combinations(sorted(S), 2)]
            out |= edges[:, cols].all(axis=1) if cols else True
        return out

    def to_json(self, ell: int | None = None) -> dict:
        out = {"indicators": [sorted(S) for S in self.indicators]}
        if ell is not None:
            out = {"ell": ell, **out}
        return out

    @classmethod
    def from_json(cls, obj) -> "Approximator":
        return cls(tuple(frozenset(s) for s in obj["indicators"]))


# --------------------------------------------------------------- sunflowers


def find_sunflower(family: Sequence[Iterable[int]], p: int) -> tuple[frozenset, list[int]] | None:
    """Find p members whose pairwise intersections all equal one core.

    Greedy maximal pairwise-disjoint subfamily (members scanned smallest
    maximum element first); if it has p members the core is empty. Otherwise
    recurse on the link of an element, most frequent first. Returns
    (core, indices into ``family``) or None.
    """
    sets = [frozenset(S) for S in family]
    items = sorted(((i, S) for i, S in enumerate(sets)), key=lambda t: (_order(t[1]), t[0]))
    # the search works on distinct sets only
    seen, uniq = set(), []
    for i, S in items:
        if S not in seen:
            seen.add(S)
            uniq.append((i, S))
    res = _sunflower(uniq, p)
    if res is None:
        return None
    core, idx = res
    return core, sorted(idx)


def _sunflower(items: list[tuple[int, frozenset]], p: int):
    if len(items) < p:
        return None
    chosen, used = [], set()
    for i, S in items:
        if not (S & used):
            chosen.append(i)
            used |= S
            if len(chosen) == p:
                return frozenset(), chosen
    freq = Counter(v for _, S in items for v in S)
    for v, c in sorted(freq.items(), key=lambda t: (-t[1], t[0])):
        if c < p:
            break
        link = [(i, S - {v}) for i, S in items if v in S]
        res = _sunflower(link, p)
        if res is not None:
            return res[0] | {v}, res[1]
    return None


def is_sunflower(sets: Sequence[frozenset], core: frozenset) -> bool:
    return all(a & b == core for a, b in itertools.combinations(sets, 2))


@dataclass
class StepStats:
    plucks: int = 0
    dropped: int = 0
    dropped_sets: list = field(default_factory=list)


def pluck(A: Approximator, params: ApproxParams, stats: StepStats | None = None) -> Approximator:
    """Replace p-sunflowers by their cores while more than m indicators remain.

    Stops early if no sunflower is found (possible when m is below the
    sunflower bound). A core on at most one vertex makes the whole
    approximator the constant 1.
    """
    sets = list(A.indicators)
    while len(sets) > params.m:
        found = find_sunflower(sets, params.p)
        if found is None:
            break
        core, idx = found
        if stats is not None:
            stats.plucks += 1
        if len(core) <= 1:
            return Approximator.one()
        drop = set(idx)
        sets = [S for t, S in enumerate(sets) if t not in drop]
        if core not in sets:
            sets.append(core)
    return Approximator(tuple(sets))


def join(A: Approximator, B: Approximator) -> list[frozenset]:
    """All pairwise unions, before dropping. Below A AND B everywhere, equal to it on cliques."""
    return [X | Y for X in A.indicators for Y in B.indicators]


def drop_large(sets: Iterable[frozenset], ell: int, stats: StepStats | None = None) -> Approximator:
    kept = []
    for S in sets:
        if len(S) > ell:
            if stats is not None:
                stats.dropped += 1
                stats.dropped_sets.append(S)
        else:
            kept.append(S)
    return Approximator(tuple(kept))


def approx_or(A: Approximator, B: Approximator, params: ApproxParams,
              stats: StepStats | None = None) -> Approximator:
    return pluck(Approximator(A.indicators + B.indicators), params, stats)


def approx_and(A: Approximator, B: Approximator, params: ApproxParams,
               stats: StepStats | None = None) -> Approximator:
    return pluck(drop_large(join(A, B), params.ell, stats), params, stats)


@dataclass
class GateStep:
    """One approximated gate: inputs, the pre-pluck family, and the result."""

    node: int
    op: str
    inputs: tuple[Approximator, Approximator]
    unplucked: Approximator
    result: Approximator
    stats: StepStats


def approximate_circuit(C: Circuit, params: ApproxParams,
                        trace: list[GateStep] | None = None) -> Approximator:
    """Bottom-up approximator of an oracle-free circuit.

    Unbounded fan-in circuits are binarized (left-leaning) first.
    """
    if C.oracle_ids:
        raise ParameterError("approximate_circuit needs an oracle-free circuit")
    if C.fanin == UNBOUNDED:
        C = binarize(C)
    ends = edge_endpoints(C.n)
    vals: dict[int, Approximator] = {}
    for idx in C.reachable():
        op, arg = C.nodes[idx]
        if op == "x":
            vals[idx] = Approximator((frozenset(ends[arg]),))
        elif op == "const":
            vals[idx] = Approximator.one() if arg else Approximator.zero()
        else:
            a, b = vals[arg[0]], vals[arg[1]]
            st = StepStats()
            if op == "or":
                before = Approximator(a.indicators + b.indicators)
            else:
                before = drop_large(join(a, b), params.ell, st)
            out = pluck(before, params, st)
            vals[idx] = out
            if trace is not None:
                trace.append(GateStep(idx, op, (a, b), before, out, st))
    return vals[C.output]


# -------------------------------------------------------------- error counts


@dataclass(frozen=True)
class ErrorCounts:
    e_plus: int
    e_minus: int

    def to_json(self):
        return {"e_plus": self.e_plus, "e_minus": self.e_minus}


def _empty_graph(suite: TestSuite) -> np.ndarray:
    return np.zeros((1, suite.m), dtype=bool)


def error_counts_from(c_u, a_u, c_v, a_v, c_empty, a_empty, suite: TestSuite) -> ErrorCounts:
    """Counts from evaluated vectors: C and approximator on U, V and the empty graph."""
    e_plus = int(np.count_nonzero(c_u & ~a_u))
    e_minus = suite.v_coloring_weight(a_v & ~c_v)
    if a_empty and not c_empty:
        e_minus += suite.k - 1  # the k-1 trivial colorings
    return ErrorCounts(e_plus, e_minus)


def count_errors(C: Circuit, A: Approximator, suite: TestSuite) -> ErrorCounts:
    """e_plus: cliques with C=1, A=0. e_minus: colorings with A=1, C=0 (trivial ones included)."""
    if C.oracle_ids:
        raise ParameterError("count_errors needs an oracle-free circuit")
    n = suite.n
    c_u, c_v = evaluate(C, suite.u_edges), evaluate(C, suite.v_edges)
    a_u, a_v = A.evaluate(suite.u_edges, n), A.evaluate(suite.v_edges, n)
    empty = _empty_graph(suite)
    return error_counts_from(c_u, a_u, c_v, a_v, bool(evaluate(C, empty)[0]),
                             bool(A.evaluate(empty, n)[0]), suite)


def positive_error_bound(s: int, params: ApproxParams, n: int, k: int) -> int:
    """s * m^2 * C(n-ell-1, k-ell-1)."""
    return s * params.m ** 2 * math.comb(n - params.ell - 1, k - params.ell - 1) \
        if k - params.ell - 1 >= 0 else 0


def negative_error_bound(s: int, params: ApproxParams, n: int, k: int) -> int:
    """floor(s * m^2 * (C(ell,2)/(k-1))^p * (k-1)^n), evaluated exactly."""
    q = Fraction(math.comb(params.ell, 2), k - 1)
    return math.floor(s * params.m ** 2 * q ** params.p * (k - 1) ** n)


def step_errors(step: GateStep, suite: TestSuite) -> ErrorCounts:
    """Errors one gate introduces relative to the exact gate on its approximated inputs."""
    a, b = step.inputs
    n = suite.n

    def exact(edges):
        x, y = a.evaluate(edges, n), b.evaluate(edges, n)
        return x | y if step.op == "or" else x & y

    empty = _empty_graph(suite)
    return error_counts_from(exact(suite.u_edges), step.result.evaluate(suite.u_edges, n),
                             exact(suite.v_edges), step.result.evaluate(suite.v_edges, n),
                             bool(exact(empty)[0]), bool(step.result.evaluate(empty, n)[0]),
                             suite)


# ---------------------------------------------------------- CLO approximation


@dataclass
class JEntryReport:
    J: tuple[int, ...]
    size: int
    indicators: int
    errors: ErrorCounts


@dataclass
class CloApproxReport:
    n: int
    k: int
    d: int
    params: ApproxParams
    circuit_size: int
    entries: list[JEntryReport]
    u_accept: Fraction
    v_reject: Fraction
    u_disagree: int
    v_disagree: int
    v_disagree_colorings: int
    u_missed: int               # cliques C(.,F*) accepts and the approximator rejects
    v_false_colorings: int      # colorings the approximator accepts and C(.,F*) rejects
    only_if_holds: bool
    output: np.ndarray = field(repr=False, default=None)

    @property
    def sum_e_plus(self) -> int:
        return sum(e.errors.e_plus for e in self.entries)

    @property
    def sum_e_minus(self) -> int:
        return sum(e.errors.e_minus for e in self.entries)

    @property
    def union_bound_holds(self) -> bool:
        return self.u_missed <= self.sum_e_plus and self.v_false_colorings <= self.sum_e_minus

    @property
    def approximated_count_bound(self) -> int:
        """(s+1)^d, the bound on the number of approximated circuits D_J."""
        return (self.circuit_size + 1) ** self.d

    def to_json(self) -> dict:
        s, d, p = self.circuit_size, self.d, self.params
        fr = lambda x: f"{x.numerator}/{x.denominator}"
        return {
            "n": self.n, "k": self.k, "d": d, "params": p.to_json(), "size": s,
            "entries": [{"J": list(e.J), "size": e.size, "indicators": e.indicators,
                         **e.errors.to_json()} for e in self.entries],
            "u_accept_measure": fr(self.u_accept),
            "v_reject_measure": fr(self.v_reject),
            "u_disagreements": self.u_disagree,
            "v_disagreements": self.v_disagree,
            "v_disagreement_colorings": self.v_disagree_colorings,
            "u_missed": self.u_missed, "v_false_colorings": self.v_false_colorings,
            "sum_e_plus": self.sum_e_plus, "sum_e_minus": self.sum_e_minus,
            "union_bound_holds": self.union_bound_holds,
            "only_if_holds": self.only_if_holds,
            "approximated_circuits": len(self.entries),
            "approximated_circuits_bound": self.approximated_count_bound,
            "positive_error_bound_per_J": positive_error_bound(s, p, self.n, self.k),
            "negative_error_bound_per_J": negative_error_bound(s, p, self.n, self.k),
        }


def approximate_clo(C: Circuit, W: RectFamily, d: int, params: ApproxParams,
                    suite: TestSuite) -> CloApproxReport:
    """Approximate every D_J of the normal form and gate it by f*_(U_J, V_J)."""
    nf = normal_form(C, W, d, suite)
    n, nu = suite.n, suite.nu
    edges = suite.edges_A
    out = np.zeros(nu + suite.nv, dtype=bool)
    some_j_wrong = np.zeros_like(out)
    entries = []
    for ent in nf.entries:
        approx = approximate_circuit(ent.circuit, params)
        exact_j = evaluate(ent.circuit, edges)
        approx_j = approx.evaluate(edges, n)
        out |= approx_j & fstar_vector(ent.pair, suite)
        some_j_wrong |= exact_j != approx_j
        entries.append(JEntryReport(ent.J, ent.circuit.size, len(approx),
                                    count_errors(ent.circuit, approx, suite)))
    direct = eval_on_suite(C, suite, FStar(W))
    disagree = direct != out
    u_dis, v_dis = disagree[:nu], disagree[nu:]
    return CloApproxReport(
        n=n, k=suite.k, d=d, params=params, circuit_size=C.size, entries=entries,
        u_accept=suite.u_measure(out[:nu]), v_reject=suite.v_measure(~out[nu:]),
        u_disagree=int(u_dis.sum()), v_disagree=int(v_dis.sum()),
        v_disagree_colorings=suite.v_coloring_weight(v_dis),
        u_missed=int((direct[:nu] & ~out[:nu]).sum()),
        v_false_colorings=suite.v_coloring_weight(out[nu:] & ~direct[nu:]),
        only_if_holds=bool(not (disagree & ~some_j_wrong).any()),
        output=out)
