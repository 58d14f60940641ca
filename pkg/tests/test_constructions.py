import math
from fractions import Fraction

import numpy as np
import pytest

from clobench.circuits import eval_on_suite, f_star, verify_separation
from clobench.constructions import (CONSTRUCTIONS, lex_clo, lex_clo_decay_bound, lex_clo_locality,
                                    lex_ell_for, lex_first, negation_oracle, single_oracle,
                                    small_locality_clo, triangle_clo, triangle_locality,
                                    trivial_dnf)
from clobench.errors import ParameterError
from clobench.rectangles import RectFamily, locality_exact, max_overlap
from clobench.testsets import build_suite, edge_index


def test_single_oracle():
    C, W = single_oracle(6, 3)
    assert C.size == 1
    s = build_suite(6, 3)
    assert locality_exact(W, s) == 1
    assert verify_separation(C, W, s).passed


@pytest.mark.parametrize("n", [4, 6, 8])
def test_triangle(n):
    C, W = triangle_clo(n)
    s = build_suite(n, 3)
    assert len(W) == math.comb(n, 2)
    assert locality_exact(W, s) == triangle_locality(n)
    assert verify_separation(C, W, s).passed


def test_triangle_size_at_6():
    # 15 edge leaves, 15 oracle leaves, 15 ANDs, one OR
    assert triangle_clo(6)[0].size == 46
    assert triangle_locality(6) == Fraction(16, 31)


def test_trivial_dnf():
    C, W = trivial_dnf(6, 3)
    assert len(C.nodes[C.output].arg) == 20
    assert len(W) == 0
    assert verify_separation(C, W, build_suite(6, 3)).passed


def test_lex_first():
    assert lex_first({5, 1, 3, 2}, 2) == (1, 2)
    with pytest.raises(ParameterError):
        lex_first({1, 2}, 3)


@pytest.mark.parametrize("n,k,ell", [(8, 4, 2), (7, 4, 3), (9, 5, 2)])
def test_lex_clo(n, k, ell):
    C, W = lex_clo(n, k, ell)
    s = build_suite(n, k)
    assert max_overlap(W, s) == 1
    assert verify_separation(C, W, s).passed
    assert locality_exact(W, s) == lex_clo_locality(n, k, ell)


def test_lex_closed_form_values():
    assert lex_clo_locality(8, 4, 2) == Fraction(729, 1093)
    # k = 25, ell = 5: coloring factor 23*22*21*20/24^4, about 0.64
    assert abs(float(lex_clo_locality(26, 25, 5)) - 0.6406) < 1e-3


def test_lex_decay_bound_dominates():
    for k in range(5, 40):
        for ell in range(2, k):
            proper = Fraction(math.perm(k - 1, ell), (k - 1) ** ell)
            assert float(proper) <= lex_clo_decay_bound(k, ell) + 1e-12


def test_small_locality_clo():
    C, W, ell = small_locality_clo(9, 6, Fraction(1, 2))
    assert lex_clo_locality(9, 6, ell) <= Fraction(1, 2)
    assert ell == lex_ell_for(9, 6, Fraction(1, 2))
    with pytest.raises(ParameterError):
        lex_ell_for(6, 4, Fraction(1, 100))


def test_negation_oracle_computes_negated_edge():
    s = build_suite(6, 3)
    for e in [(0, 1), (2, 5)]:
        W = RectFamily((negation_oracle(e, 6, 3),))
        fs = f_star(W).matrix(s)[:, 0]
        assert (fs == ~s.edges_A[:, edge_index(*e)]).all()


def test_construction_registry():
    assert set(CONSTRUCTIONS) == {"single-oracle", "triangle", "trivial-dnf", "lex"}
    C, W = CONSTRUCTIONS["lex"](7, 4, 2)
    assert len(W) == math.comb(7, 2)


def test_range_errors():
    with pytest.raises(ParameterError):
        lex_clo(8, 4, 4)
    with pytest.raises(ParameterError):
        trivial_dnf(4, 4)


def test_lex_fstar_agrees_on_U():
    C, W = lex_clo(7, 4, 2)
    s = build_suite(7, 4)
    out = eval_on_suite(C, s, f_star(W))
    assert out[:s.nu].all() and not np.any(out[s.nu:])
