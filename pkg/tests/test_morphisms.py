from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import graphs_st, labeled_st
from fraisse_bench.errors import ResourceLimit
from fraisse_bench.morphisms import (
    Embedding,
    HomogeneityCertificate,
    PartialIso,
    age,
    automorphisms,
    canonical_labeling,
    canonicalize,
    extend_partial_iso,
    find_embeddings,
    homogeneity_check,
    is_isomorphic,
    iter_partial_isos,
    partial_iso,
)
from fraisse_bench.structures import (
    complete_graph,
    cycle_graph,
    graph,
    path_graph,
    relabel,
)


def test_edge_into_path():
    assert len(find_embeddings(graph(2, [(0, 1)]), path_graph(3))) == 4


def test_c5_automorphisms():
    assert len(automorphisms(cycle_graph(5))) == 10


def test_automorphism_bound():
    with pytest.raises(ResourceLimit):
        automorphisms(cycle_graph(11))


def test_embeddings_in_lex_order():
    maps = [e.map for e in find_embeddings(graph(2, [(0, 1)]), cycle_graph(4))]
    assert maps == sorted(maps)


def test_compose_and_inverse():
    c = cycle_graph(5)
    r = Embedding(c, c, (1, 2, 3, 4, 0))
    assert r.compose(r.inverse()).map == tuple(range(5))
    assert r.compose(r).map == (2, 3, 4, 0, 1)


def test_p4_not_homogeneous():
    res = homogeneity_check(path_graph(4), 1)
    assert isinstance(res, PartialIso) and res.map == {0: 1}


def test_c5_homogeneous():
    res = homogeneity_check(cycle_graph(5), 2)
    assert isinstance(res, HomogeneityCertificate) and res.verify()


def test_partial_iso_extension():
    c = cycle_graph(5)
    e = extend_partial_iso(c, partial_iso(c, {0: 2, 1: 3}))
    assert e is not None and e.map[0] == 2 and e.map[1] == 3


def test_age_of_c5():
    # point; edge; non-edge; path on three points; edge plus isolated point
    assert len(age(cycle_graph(5), 3)) == 5


@pytest.mark.parametrize("n", [0, 1, 5, 10])
def test_canonicalize_extremes(n):
    for g in (graph(n, []), complete_graph(n)):
        assert canonicalize(g) == g


@given(graphs_st(max_n=5), graphs_st(max_n=4))
def test_embeddings_match_brute_force(b, a):
    got = [e.map for e in find_embeddings(a, b)]
    assert got == oracles.embeddings_brute(a, b)


@given(labeled_st(max_n=4, colors=range(2), ordered=True), labeled_st(max_n=3, colors=range(2),
                                                                       ordered=True))
def test_ordered_embeddings_match_brute_force(b, a):
    assert [e.map for e in find_embeddings(a, b)] == oracles.embeddings_brute(a, b)


@given(labeled_st(max_n=5, colors=range(3)))
def test_automorphisms_match_brute_force(s):
    assert [g.map for g in automorphisms(s)] == oracles.automorphisms_brute(s)


@given(graphs_st(max_n=7), st.randoms(use_true_random=False))
def test_canonical_form_is_invariant(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    h = relabel(g, perm)
    assert canonicalize(g) == canonicalize(h)
    assert is_isomorphic(g, h)


@given(labeled_st(max_n=6, colors=range(3)), st.randoms(use_true_random=False))
def test_canonical_labeled_invariant(s, rnd):
    perm = list(range(s.n))
    rnd.shuffle(perm)
    assert canonicalize(s) == canonicalize(relabel(s, perm))
    lab = canonical_labeling(s)
    assert sorted(lab) == list(range(s.n))


@given(graphs_st(max_n=5))
def test_canonical_separates_non_isomorphic(g):
    # equal canonical forms exactly when some permutation maps one onto the other
    for h in oracles.graph_iso_reps(g.n):
        same = any(relabel(g, p) == h for p in itertools.permutations(range(g.n)))
        assert (canonicalize(g) == canonicalize(h)) == same


@given(graphs_st(max_n=5))
def test_partial_isos_match_brute_force(g):
    k = min(g.n, 3)
    got = sorted(tuple(sorted(p.map.items())) for p in iter_partial_isos(g, k))
    want = sorted(tuple(sorted(f.items())) for f in oracles.partial_isos_brute(g, k) if f)
    assert got == want


@given(labeled_st(max_n=4, colors=range(2)))
def test_homogeneity_matches_brute_force_labeled(s):
    res = homogeneity_check(s, s.n)
    assert isinstance(res, HomogeneityCertificate) == oracles.homogeneous_brute(s, s.n)
    if isinstance(res, HomogeneityCertificate):
        assert res.verify()
    else:
        assert extend_partial_iso(s, res) is None
