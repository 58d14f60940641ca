import random
from fractions import Fraction

import numpy as np
import pytest

import bruteforce as bf
from clobench.constructions import lex_clo, negation_oracle, triangle_clo
from clobench.errors import SchemaError, SideMismatchError
from clobench.randomclo import random_rect_pair
from clobench.rectangles import (All, Complement, ContainsClique, Empty, Explicit, Intersection,
                                 LexFirst, NotEdgeU, NotEdgeV, RectFamily, RectPair, SmallestPair,
                                 SplitPair, Union, eval_set_expr, family_masks, locality_exact,
                                 locality_mc, max_overlap, pair_masks, rect_and, rect_or,
                                 set_expr_from_json)
from clobench.testsets import build_suite, clique_graph, parse_member


def test_eval_examples():
    assert eval_set_expr(SmallestPair(0, 1), clique_graph({0, 1, 5}, 6))
    assert not eval_set_expr(SmallestPair(0, 1), clique_graph({0, 2, 5}, 6))
    assert eval_set_expr(ContainsClique((0, 1)), parse_member("0|1,2,3", 4))
    assert not eval_set_expr(ContainsClique((1, 2)), parse_member("0|1,2,3", 4))
    assert eval_set_expr(SplitPair(0, 3), parse_member("0,1|2,3", 4))
    assert eval_set_expr(LexFirst((1, 3)), clique_graph({1, 3, 4}, 5))
    assert not eval_set_expr(LexFirst((1, 4)), clique_graph({1, 3, 4}, 5))
    for m in (clique_graph({0, 1, 2}, 4), parse_member("0|1,2,3", 4)):
        assert eval_set_expr(All(), m)
        assert not eval_set_expr(Empty(), m)


def test_side_mismatch():
    with pytest.raises(SideMismatchError):
        eval_set_expr(SplitPair(0, 1), clique_graph({0, 1, 2}, 4))
    with pytest.raises(SideMismatchError):
        RectPair(SplitPair(0, 1), All())
    with pytest.raises(SideMismatchError):
        Union((SmallestPair(0, 1), SplitPair(0, 1))).side


def test_combinators_and_explicit():
    s = build_suite(6, 3)
    e = Explicit(("0,1,2", "1,2,3"))
    u_rows = s.u_sets
    assert e.mask(u_rows, "U").sum() == 2
    c = Complement(Union((e, SmallestPair(0, 1))))
    want = ~(e.mask(u_rows, "U") | SmallestPair(0, 1).mask(u_rows, "U"))
    assert (c.mask(u_rows, "U") == want).all()
    i = Intersection((All(), SmallestPair(0, 1)))
    assert i.mask(u_rows, "U").sum() == 4


def test_set_expr_json_roundtrip():
    exprs = [All(), Empty(), Explicit(("0,2|1,3,4,5",)), SmallestPair(0, 2), SplitPair(1, 3),
             LexFirst((0, 1, 4)), ContainsClique((2, 3)), NotEdgeU(0, 1), NotEdgeV(0, 1),
             Complement(Union((SmallestPair(0, 1), LexFirst((2, 3)))))]
    for e in exprs:
        assert set_expr_from_json(e.to_json()) == e


def test_set_expr_json_error_path():
    with pytest.raises(SchemaError) as exc:
        set_expr_from_json({"kind": "union", "args": [{"kind": "bogus"}]})
    assert "args[0]" in exc.value.path


def test_or_and_identities_exhaustive():
    s = build_suite(6, 3)
    rng = random.Random(11)
    for _ in range(30):
        a, b = random_rect_pair(rng, s), random_rect_pair(rng, s)
        ua, va = pair_masks(a, s)
        ub, vb = pair_masks(b, s)
        fa = np.concatenate([ua, ~va])
        fb = np.concatenate([ub, ~vb])
        uo, vo = pair_masks(rect_or(a, b), s)
        ua2, va2 = pair_masks(rect_and(a, b), s)
        assert ((fa | fb) == np.concatenate([uo, ~vo])).all()
        assert ((fa & fb) == np.concatenate([ua2, ~va2])).all()
        assert (uo >= ua).all() and (vo <= va).all()
        assert (ua2 <= ua).all() and (va2 >= va).all()


def test_triangle_locality_brute():
    # U_ij x V_ij: i, j are the two smallest vertices of B and get different colors
    want = bf.locality(6, 3, lambda B, chi: chi[sorted(B)[0]] != chi[sorted(B)[1]])
    assert want == Fraction(16, 31)
    _, W = triangle_clo(6)
    assert locality_exact(W, build_suite(6, 3)) == want


def test_lex_locality_brute():
    def in_rect(B, chi):
        a, b = sorted(B)[:2]
        return chi[a] != chi[b]

    want = bf.locality(8, 4, in_rect)
    assert want == Fraction(729, 1093)
    _, W = lex_clo(8, 4, 2)
    assert locality_exact(W, build_suite(8, 4)) == want


def test_negation_oracle_locality():
    # cliques avoiding edge {0,1} times colorings splitting 0 from 1
    want = bf.locality(6, 3, lambda B, chi: not {0, 1} <= B and chi[0] != chi[1])
    assert want == Fraction(64, 155)
    W = RectFamily((negation_oracle((0, 1), 6, 3),))
    assert locality_exact(W, build_suite(6, 3)) == want


def test_locality_of_overlapping_family_brute():
    s = build_suite(6, 3)
    W = RectFamily((RectPair(SmallestPair(0, 1), SplitPair(0, 2)),
                    RectPair(LexFirst((0,)), NotEdgeV(0, 1)),
                    RectPair(NotEdgeU(1, 2), ContainsClique((3, 4, 5)))))

    def in_rect(B, chi):
        b = sorted(B)
        return ((b[:2] == [0, 1] and chi[0] != chi[2])
                or (b[0] == 0 and chi[0] != chi[1])
                or (not {1, 2} <= B and len({chi[3], chi[4], chi[5]}) == 3))

    assert locality_exact(W, s) == bf.locality(6, 3, in_rect)


def test_max_overlap():
    s = build_suite(6, 3)
    _, W = lex_clo(6, 3, 2)
    assert max_overlap(W, s) == 1
    W2 = RectFamily((RectPair(All(), All()),) * 3)
    assert max_overlap(W2, s) == 3
    assert max_overlap(RectFamily(()), s) == 0


def test_family_masks_shape():
    s = build_suite(6, 3)
    _, W = triangle_clo(6)
    um, vm = family_masks(W, s)
    assert um.shape == (15, 20) and vm.shape == (15, 31)
    assert (um.sum(axis=0) == 1).all()


def test_mc_locality_is_deterministic_and_close():
    _, W = lex_clo(8, 4, 2)
    a = locality_mc(W, 8, 4, 40_000, seed=5)
    b = locality_mc(W, 8, 4, 40_000, seed=5)
    assert a.hits == b.hits
    assert abs(a.estimate - 729 / 1093) <= a.half_width
    c = locality_mc(W, 8, 4, 40_000, seed=6)
    assert c.to_json()["seed"] == 6


def test_mc_locality_workers_deterministic():
    _, W = triangle_clo(6)
    runs = [locality_mc(W, 6, 3, 9_001, seed=1, workers=3).hits for _ in range(2)]
    assert runs[0] == runs[1]
