import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import bruteforce as bf
from clobench.approximation import (ApproxParams, Approximator, StepStats, approx_and, approx_or,
                                    approximate_circuit, approximate_clo, count_errors,
                                    default_params, drop_large, find_sunflower, is_sunflower,
                                    join, negative_error_bound, pluck, positive_error_bound,
                                    step_errors)
from clobench.circuits import CircuitBuilder, evaluate
from clobench.constructions import lex_clo, trivial_dnf
from clobench.errors import ParameterError
from clobench.randomclo import random_family, random_monotone_circuit
from clobench.testsets import build_suite, edge_endpoints


def accepts(indicators, graph_pairs):
    return any(bf.pairs(S) <= graph_pairs for S in indicators)


def test_default_params():
    P = default_params(8, 4)
    assert (P.ell, P.p, P.m) == (2, 60, 59 ** 2 * 2)
    P = default_params(10, 5)
    assert P.p == math.ceil(10 * math.sqrt(5) * math.log2(10)) == 75
    assert P.m == P.sunflower_bound


def test_params_validation():
    with pytest.raises(ParameterError):
        ApproxParams(0, 3, 4)
    with pytest.raises(ParameterError):
        ApproxParams(2, 1, 4)


def test_approximator_dedupes_and_evaluates():
    A = Approximator((frozenset({0, 1}), frozenset({1, 0}), frozenset({1, 2, 3})))
    assert len(A) == 2
    s = build_suite(5, 3)
    ends = edge_endpoints(5)
    for row in s.edges_A:
        g = frozenset(ends[i] for i in np.flatnonzero(row))
        assert A.evaluate(row[None, :], 5)[0] == accepts(A.indicators, g)
    assert Approximator.one().evaluate(s.edges_A, 5).all()
    assert not Approximator.zero().evaluate(s.edges_A, 5).any()


def test_find_sunflower_examples():
    fam = [{0, 1}, {0, 2}, {0, 3}, {4, 5}]
    core, idx = find_sunflower(fam, 3)
    assert core == frozenset({0})
    assert is_sunflower([frozenset(fam[i]) for i in idx], core)
    assert find_sunflower([{0, 1}, {1, 2}], 3) is None
    core, idx = find_sunflower([{0}, {1}, {2}], 3)
    assert core == frozenset()


def test_sunflower_guarantee_above_bound():
    rng = random.Random(2)
    for _ in range(200):
        ell, p = rng.choice([(2, 2), (2, 3), (3, 2)])
        bound = (p - 1) ** ell * math.factorial(ell)
        fam = random_family(rng, 9, ell, bound + 1)
        found = find_sunflower(fam, p)
        assert found is not None
        core, idx = found
        assert len(idx) == p
        assert is_sunflower([frozenset(fam[i]) for i in idx], core)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.frozensets(st.integers(0, 6), min_size=2, max_size=3), min_size=1, max_size=14),
       st.integers(2, 3), st.integers(1, 6))
def test_pluck_only_grows_accepted_set(sets, p, m):
    s = build_suite(7, 3)
    A = Approximator(tuple(sets))
    B = pluck(A, ApproxParams(3, p, m))
    a, b = A.evaluate(s.edges_A, 7), B.evaluate(s.edges_A, 7)
    assert (b >= a).all()
    if not B.is_constant_one:
        assert len(B) <= max(m, len(A))


def test_drop_only_shrinks_accepted_set():
    s = build_suite(6, 3)
    rng = random.Random(4)
    for _ in range(100):
        sets = random_family(rng, 6, 4, rng.randint(1, 12))
        full = Approximator(tuple(sets)).evaluate(s.edges_A, 6)
        kept = drop_large(sets, 2).evaluate(s.edges_A, 6)
        assert (kept <= full).all()


def test_join_below_and_exact_on_cliques():
    s = build_suite(6, 3)
    A = Approximator((frozenset({0, 1}), frozenset({2, 3})))
    B = Approximator((frozenset({1, 2}),))
    got = Approximator(tuple(join(A, B))).evaluate(s.edges_A, 6)
    want = A.evaluate(s.edges_A, 6) & B.evaluate(s.edges_A, 6)
    assert (got <= want).all()
    assert (got[:s.nu] == want[:s.nu]).all()
    assert (got != want).any()  # 0|1,2,3,4,5 has {0,1} and {1,2} but not the triangle


def test_pluck_to_small_core_gives_one():
    A = Approximator(tuple(frozenset({0, v}) for v in range(1, 6)))
    B = pluck(A, ApproxParams(2, 3, 2))
    assert B.is_constant_one


def test_gate_stats():
    st_ = StepStats()
    A = Approximator((frozenset({0, 1}), frozenset({2, 3})))
    out = approx_and(A, A, ApproxParams(2, 2, 10), st_)
    assert st_.dropped == 2 and out.indicators == A.indicators
    assert approx_or(A, Approximator.zero(), ApproxParams(2, 2, 10)) == A


def test_trivial_dnf_known_errors():
    C, _ = trivial_dnf(5, 3)
    A = approximate_circuit(C, ApproxParams(2, 3, 8))
    assert len(A) == 0
    counts = count_errors(C, A, build_suite(5, 3))
    assert (counts.e_plus, counts.e_minus) == (10, 0)


def brute_errors(C, A, n, k):
    """E+ over cliques and E- over every coloring, trivial ones included."""
    ends = edge_endpoints(n)
    idx = {e: i for i, e in enumerate(ends)}

    def circ(g):
        row = np.zeros((1, len(ends)), dtype=bool)
        row[0, [idx[e] for e in g]] = True
        return bool(evaluate(C, row)[0])

    e_plus = sum(1 for B in bf.cliques(n, k)
                 if circ(bf.pairs(B)) and not accepts(A.indicators, bf.pairs(B)))
    e_minus = sum(1 for chi in bf.colorings(n, k, nontrivial=False)
                  if accepts(A.indicators, bf.coloring_graph(chi)) and not circ(bf.coloring_graph(chi)))
    return e_plus, e_minus


def test_error_counts_match_brute_force():
    rng = random.Random(9)
    s = build_suite(6, 4)
    for _ in range(25):
        C = random_monotone_circuit(rng, 6)
        P = ApproxParams(2, rng.choice([2, 3]), rng.randint(1, 4))
        A = approximate_circuit(C, P)
        got = count_errors(C, A, s)
        assert (got.e_plus, got.e_minus) == brute_errors(C, A, 6, 4)


def test_bounds_formulae():
    P = ApproxParams(2, 3, 4)
    assert positive_error_bound(10, P, 8, 4) == 10 * 16 * math.comb(5, 1)
    assert negative_error_bound(10, P, 8, 4) == 10 * 16 * 3 ** 5
    assert positive_error_bound(10, ApproxParams(3, 3, 4), 8, 3) == 0


def test_error_bounds_random():
    rng = random.Random(5)
    for n, k in [(7, 3), (8, 4)]:
        s = build_suite(n, k)
        for _ in range(10):
            C = random_monotone_circuit(rng, n)
            for p, m in itertools.product((2, 3), (2, 5, 8)):
                P = ApproxParams(2, p, m)
                got = count_errors(C, approximate_circuit(C, P), s)
                assert got.e_plus <= positive_error_bound(C.size, P, n, k)
                assert got.e_minus <= negative_error_bound(C.size, P, n, k)


def test_step_errors_sum_dominates_total():
    # errors introduced gate by gate add up to at least the final error
    rng = random.Random(6)
    s = build_suite(7, 3)
    for _ in range(15):
        C = random_monotone_circuit(rng, 7)
        P = ApproxParams(2, 2, 2)
        trace = []
        A = approximate_circuit(C, P, trace)
        total = count_errors(C, A, s)
        steps = [step_errors(t, s) for t in trace]
        assert total.e_plus <= sum(e.e_plus for e in steps)
        assert total.e_minus <= sum(e.e_minus for e in steps)


def test_approximate_clo_lex_exact_with_generous_params():
    C, W = lex_clo(8, 4, 2)
    s = build_suite(8, 4)
    rep = approximate_clo(C, W, 1, ApproxParams(4, 2, 10 ** 9), s)
    assert rep.u_disagree == 0 and rep.v_disagree == 0
    assert len(rep.entries) == 1 + len(W)
    assert len(rep.entries) <= rep.approximated_count_bound


def test_approximate_clo_degraded_union_bound():
    C, W = lex_clo(8, 4, 2)
    s = build_suite(8, 4)
    rep = approximate_clo(C, W, 1, ApproxParams(1, 2, 1), s)
    assert rep.u_missed > 0
    assert rep.union_bound_holds
    assert rep.only_if_holds


def test_approximate_circuit_rejects_oracles():
    b = CircuitBuilder(5)
    with pytest.raises(ParameterError):
        approximate_circuit(b.build(b.y(0)), ApproxParams(2, 2, 2))
