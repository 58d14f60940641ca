"""Oracle rectangles (U_i, V_i), their locality, overlap, and rectangle algebra.

Set families are predicate expressions. U-side expressions are evaluated on
arrays of sorted clique vertex tuples (shape (N, k)); V-side expressions on
arrays of per-vertex block labels (shape (N, n)). The labels may come from a
canonical partition or straight from a sampled coloring; every predicate here
only compares labels for equality, so both work.
"""

from __future__ import annotations

import functools
import itertools
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from .errors import ParameterError, SchemaError, SideMismatchError
from .testsets import CliqueGraph, Partition, TestSuite, parse_member

U_SIDE, V_SIDE = "U", "V"


class SetExpr:
    kind: str = ""
    fixed_side: str | None = None

    @property
    def side(self) -> str | None:
        return self.fixed_side

    def mask(self, rows: np.ndarray, side: str) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _pair(i: int, j: int) -> tuple[int, int]:
    i, j = int(i), int(j)
    if i == j:
        raise ParameterError("pair needs two distinct vertices")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class All(SetExpr):
    kind = "all"

    def mask(self, rows, side):
        return np.ones(len(rows), dtype=bool)

    def to_json(self):
        return {"kind": "all"}


@dataclass(frozen=True)
class Empty(SetExpr):
    kind = "none"

    def mask(self, rows, side):
        return np.zeros(len(rows), dtype=bool)

    def to_json(self):
        return {"kind": "none"}


def _canonical_key(row, side: str) -> tuple:
    if side == U_SIDE:
        return tuple(sorted(int(v) for v in row))
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(int(c), len(seen)) for c in row)


@dataclass(frozen=True)
class Explicit(SetExpr):
    """A hand-listed set of members given by their text encodings."""

    members: tuple[str, ...]
    kind = "explicit"

    @property
    def side(self):
        if not self.members:
            return None
        kinds = {"|" in m for m in self.members}
        if len(kinds) > 1:
            raise SideMismatchError("explicit set mixes cliques and partitions")
        return V_SIDE if kinds.pop() else U_SIDE

    @functools.cached_property
    def _keys(self) -> frozenset:
        keys = set()
        for text in self.members:
            if "|" in text:
                parts = [[int(v) for v in p.split(",")] for p in text.split("|")]
                n = sum(len(p) for p in parts)
                keys.add(parse_member(text, n).labels)
            else:
                keys.add(tuple(sorted(int(v) for v in text.split(","))))
        return frozenset(keys)

    def mask(self, rows, side):
        keys = self._keys
        return np.array([_canonical_key(r, side) in keys for r in rows], dtype=bool).reshape(len(rows))

    def to_json(self):
        return {"kind": "explicit", "members": list(self.members)}


@dataclass(frozen=True)
class SmallestPair(SetExpr):
    """Cliques whose two smallest vertices are exactly i and j."""

    i: int
    j: int
    kind = "smallest_pair"
    fixed_side = U_SIDE

    def __post_init__(self):
        i, j = _pair(self.i, self.j)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)

    def mask(self, rows, side):
        return (rows[:, 0] == self.i) & (rows[:, 1] == self.j)

    def to_json(self):
        return {"kind": self.kind, "i": self.i, "j": self.j}


@dataclass(frozen=True)
class SplitPair(SetExpr):
    """Multipartite graphs with i and j in different parts."""

    i: int
    j: int
    kind = "split_pair"
    fixed_side = V_SIDE

    def __post_init__(self):
        i, j = _pair(self.i, self.j)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)

    def mask(self, rows, side):
        return rows[:, self.i] != rows[:, self.j]

    def to_json(self):
        return {"kind": self.kind, "i": self.i, "j": self.j}


@dataclass(frozen=True)
class LexFirst(SetExpr):
    """Cliques K_B whose |D| smallest vertices are exactly D."""

    D: tuple[int, ...]
    kind = "lex_first"
    fixed_side = U_SIDE

    def __post_init__(self):
        object.__setattr__(self, "D", tuple(sorted(int(v) for v in self.D)))

    def mask(self, rows, side):
        r = len(self.D)
        if r > rows.shape[1]:
            return np.zeros(len(rows), dtype=bool)
        return np.all(rows[:, :r] == np.array(self.D, dtype=rows.dtype), axis=1)

    def to_json(self):
        return {"kind": self.kind, "D": list(self.D)}


@dataclass(frozen=True)
class ContainsClique(SetExpr):
    """Multipartite graphs containing K_D, i.e. D lies in pairwise distinct parts."""

    D: tuple[int, ...]
    kind = "contains_clique"
    fixed_side = V_SIDE

    def __post_init__(self):
        object.__setattr__(self, "D", tuple(sorted(int(v) for v in self.D)))

    def mask(self, rows, side):
        out = np.ones(len(rows), dtype=bool)
        for a, b in itertools.combinations(self.D, 2):
            out &= rows[:, a] != rows[:, b]
        return out

    def to_json(self):
        return {"kind": self.kind, "D": list(self.D)}


@dataclass(frozen=True)
class NotEdgeU(SetExpr):
    """Cliques on which the negated edge variable is 1 (the edge is not inside B)."""

    i: int
    j: int
    kind = "not_edge_u"
    fixed_side = U_SIDE

    def __post_init__(self):
        i, j = _pair(self.i, self.j)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)

    def mask(self, rows, side):
        has_i = np.any(rows == self.i, axis=1)
        has_j = np.any(rows == self.j, axis=1)
        return ~(has_i & has_j)

    def to_json(self):
        return {"kind": self.kind, "edge": [self.i, self.j]}


@dataclass(frozen=True)
class NotEdgeV(SetExpr):
    """Multipartite graphs on which the negated edge variable is 0 (edge present)."""

    i: int
    j: int
    kind = "not_edge_v"
    fixed_side = V_SIDE

    def __post_init__(self):
        i, j = _pair(self.i, self.j)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)

    def mask(self, rows, side):
        return rows[:, self.i] != rows[:, self.j]

    def to_json(self):
        return {"kind": self.kind, "edge": [self.i, self.j]}


def _combined_side(args: Iterable[SetExpr]) -> str | None:
    sides = {a.side for a in args} - {None}
    if len(sides) > 1:
        raise SideMismatchError("expression mixes U-side and V-side sets")
    return sides.pop() if sides else None


@dataclass(frozen=True)
class Union(SetExpr):
    args: tuple[SetExpr, ...]
    kind = "union"

    @property
    def side(self):
        return _combined_side(self.args)

    def mask(self, rows, side):
        out = np.zeros(len(rows), dtype=bool)
        for a in self.args:
            out |= a.mask(rows, side)
        return out

    def to_json(self):
        return {"kind": "union", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True)
class Intersection(SetExpr):
    args: tuple[SetExpr, ...]
    kind = "intersection"

    @property
    def side(self):
        return _combined_side(self.args)

    def mask(self, rows, side):
        out = np.ones(len(rows), dtype=bool)
        for a in self.args:
            out &= a.mask(rows, side)
        return out

    def to_json(self):
        return {"kind": "intersection", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True)
class Complement(SetExpr):
    """Complement relative to U(n,k) or V(n,k), whichever side it is used on."""

    arg: SetExpr
    kind = "complement"

    @property
    def side(self):
        return self.arg.side

    def mask(self, rows, side):
        return ~self.arg.mask(rows, side)

    def to_json(self):
        return {"kind": "complement", "arg": self.arg.to_json()}


def check_side(expr: SetExpr, side: str) -> None:
    s = expr.side
    if s is not None and s != side:
        raise SideMismatchError(f"{expr.kind} expression is {s}-side, used on the {side} side")


def set_expr_from_json(obj: Any, path: str = "$") -> SetExpr:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError("set expression must be an object with a 'kind'", path)
    kind = obj["kind"]
    try:
        if kind == "all":
            return All()
        if kind == "none":
            return Empty()
        if kind == "explicit":
            return Explicit(tuple(str(m) for m in obj["members"]))
        if kind in ("smallest_pair", "split_pair"):
            cls = SmallestPair if kind == "smallest_pair" else SplitPair
            return cls(int(obj["i"]), int(obj["j"]))
        if kind in ("lex_first", "contains_clique"):
            cls = LexFirst if kind == "lex_first" else ContainsClique
            return cls(tuple(int(v) for v in obj["D"]))
        if kind in ("not_edge_u", "not_edge_v"):
            cls = NotEdgeU if kind == "not_edge_u" else NotEdgeV
            i, j = obj["edge"]
            return cls(int(i), int(j))
        if kind in ("union", "intersection"):
            cls = Union if kind == "union" else Intersection
            return cls(tuple(set_expr_from_json(a, f"{path}.args[{t}]")
                             for t, a in enumerate(obj["args"])))
        if kind == "complement":
            return Complement(set_expr_from_json(obj["arg"], f"{path}.arg"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed {kind!r} expression ({exc})", path) from None
    raise SchemaError(f"unknown set expression kind {kind!r}", path)


def eval_set_expr(expr: SetExpr, member: CliqueGraph | Partition) -> bool:
    if isinstance(member, CliqueGraph):
        side, rows = U_SIDE, np.array([member.B], dtype=np.int16)
    else:
        side, rows = V_SIDE, np.array([member.labels], dtype=np.int8)
    check_side(expr, side)
    return bool(expr.mask(rows, side)[0])


# -------------------------------------------------------------- rectangles


@dataclass(frozen=True)
class RectPair:
    U: SetExpr
    V: SetExpr

    def __post_init__(self):
        check_side(self.U, U_SIDE)
        check_side(self.V, V_SIDE)

    def to_json(self):
        return {"U": self.U.to_json(), "V": self.V.to_json()}


@dataclass(frozen=True)
class RectFamily:
    rects: tuple[RectPair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(self.rects))

    def __len__(self):
        return len(self.rects)

    def __iter__(self):
        return iter(self.rects)

    def __getitem__(self, i):
        return self.rects[i]

    def to_json(self, n: int | None = None, k: int | None = None) -> dict:
        out: dict = {}
        if n is not None:
            out["n"], out["k"] = n, k
        out["rects"] = [r.to_json() for r in self.rects]
        return out

    @classmethod
    def from_json(cls, obj: Any, path: str = "$") -> "RectFamily":
        if not isinstance(obj, dict) or not isinstance(obj.get("rects"), list):
            raise SchemaError("rectangle family needs a 'rects' list", path)
        rects = []
        for t, r in enumerate(obj["rects"]):
            p = f"{path}.rects[{t}]"
            if not isinstance(r, dict) or "U" not in r or "V" not in r:
                raise SchemaError("rectangle needs 'U' and 'V'", p)
            try:
                rects.append(RectPair(set_expr_from_json(r["U"], p + ".U"),
                                      set_expr_from_json(r["V"], p + ".V")))
            except SideMismatchError as exc:
                raise SchemaError(str(exc), p) from None
        return cls(tuple(rects))


def rect_or(a: RectPair, b: RectPair) -> RectPair:
    """Rectangle whose F* function is the OR of the two F* functions."""
    return RectPair(Union((a.U, b.U)), Intersection((a.V, b.V)))


def rect_and(a: RectPair, b: RectPair) -> RectPair:
    """Rectangle whose F* function is the AND of the two F* functions."""
    return RectPair(Intersection((a.U, b.U)), Union((a.V, b.V)))


def pair_masks(rect: RectPair, suite: TestSuite) -> tuple[np.ndarray, np.ndarray]:
    return rect.U.mask(suite.u_sets, U_SIDE), rect.V.mask(suite.v_labels, V_SIDE)


def family_masks(W: RectFamily, suite: TestSuite) -> tuple[np.ndarray, np.ndarray]:
    """Boolean membership matrices of shape (e, |U|) and (e, |V|)."""
    e = len(W)
    um = np.zeros((e, suite.nu), dtype=bool)
    vm = np.zeros((e, suite.nv), dtype=bool)
    for i, rect in enumerate(W):
        um[i], vm[i] = pair_masks(rect, suite)
    return um, vm


def locality_exact(W: RectFamily, suite: TestSuite) -> Fraction:
    """Exact D(n,k)-measure of the union of the rectangles U_i x V_i."""
    if len(W) == 0:
        return Fraction(0)
    um, vm = family_masks(W, suite)
    # cliques covered by the same set of rectangles see the same V-union
    patterns, counts = np.unique(np.packbits(um, axis=0).T, axis=0, return_counts=True)
    total = Fraction(0)
    for pat, cnt in zip(patterns, counts):
        rows = np.unpackbits(pat)[:len(W)].astype(bool)
        if not rows.any():
            continue
        total += int(cnt) * suite.v_measure(vm[rows].any(axis=0))
    return total * suite.du_mass


def max_overlap(W: RectFamily, suite: TestSuite) -> int:
    """Largest number of U_i containing one clique; A_d holds iff this is <= d."""
    if len(W) == 0:
        return 0
    um, _ = family_masks(W, suite)
    return int(um.sum(axis=0).max())


# ------------------------------------------------------------ Monte Carlo

Z99 = statistics.NormalDist().inv_cdf(0.995)


@dataclass
class LocalityReport:
    mode: str
    value: Fraction | None = None
    estimate: float | None = None
    samples: int = 0
    hits: int = 0
    seed: int | None = None
    workers: int = 1
    half_width: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict = {"mode": self.mode}
        if self.value is not None:
            out["value"] = f"{self.value.numerator}/{self.value.denominator}"
            out["approx"] = float(self.value)
        if self.mode == "mc":
            out.update(estimate=self.estimate, samples=self.samples, hits=self.hits,
                       ci99_half_width=self.half_width)
        out.update(seed=self.seed, workers=self.workers)
        out.update(self.extra)
        return out


def sample_cliques(rng: np.random.Generator, n: int, k: int, size: int) -> np.ndarray:
    keys = rng.random((size, n))
    return np.sort(np.argsort(keys, axis=1)[:, :k], axis=1).astype(np.int16)


def sample_nontrivial_colorings(rng: np.random.Generator, n: int, k: int, size: int) -> np.ndarray:
    chi = rng.integers(0, k - 1, size=(size, n), dtype=np.int8)
    bad = np.all(chi == chi[:, :1], axis=1)
    while bad.any():
        chi[bad] = rng.integers(0, k - 1, size=(int(bad.sum()), n), dtype=np.int8)
        bad = np.all(chi == chi[:, :1], axis=1)
    return chi


def _mc_chunk(W: RectFamily, n: int, k: int, samples: int, seed: int, worker: int,
              batch: int = 50_000) -> int:
    rng = np.random.default_rng(np.random.SeedSequence([seed, worker]))
    hits = 0
    left = samples
    while left > 0:
        size = min(batch, left)
        left -= size
        us = sample_cliques(rng, n, k, size)
        vs = sample_nontrivial_colorings(rng, n, k, size)
        hit = np.zeros(size, dtype=bool)
        for rect in W:
            hit |= rect.U.mask(us, U_SIDE) & rect.V.mask(vs, V_SIDE)
        hits += int(hit.sum())
    return hits


def locality_mc(W: RectFamily, n: int, k: int, samples: int, seed: int = 0,
                workers: int = 1) -> LocalityReport:
    """Monte Carlo estimate of the locality with a normal-approximation 99% CI.

    The result is a deterministic function of (seed, workers, samples): worker
    ``w`` draws ``samples // workers`` pairs (the first ``samples % workers``
    workers draw one extra) from a generator seeded by (seed, w).
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    if k < 3 or n <= k:
        raise ParameterError(f"need 3 <= k < n, got n={n}, k={k}")
    base, extra = divmod(samples, workers)
    shares = [base + (1 if w < extra else 0) for w in range(workers)]
    if workers == 1:
        hits = _mc_chunk(W, n, k, shares[0], seed, 0)
    else:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            futures = [pool.submit(_mc_chunk, W, n, k, s, seed, w)
                       for w, s in enumerate(shares) if s > 0]
            hits = sum(f.result() for f in futures)
    p = hits / samples
    hw = Z99 * math.sqrt(p * (1 - p) / samples)
    return LocalityReport("mc", estimate=p, samples=samples, hits=hits, seed=seed,
                          workers=workers, half_width=hw)


def exact_report(W: RectFamily, suite: TestSuite) -> LocalityReport:
    return LocalityReport("exact", value=locality_exact(W, suite))
