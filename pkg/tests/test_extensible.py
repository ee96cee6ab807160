from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import graphs_st, labeled_st
from fraisse_bench.classes import get_class
from fraisse_bench.errors import ChainError, ConstructionError, RejectedInput
from fraisse_bench.extensible import (
    ExtChain,
    ExtensibilityFailure,
    ExtensionOperator,
    act,
    build_g_extensible_chain,
    chain_limit,
    close_under,
    closing_off,
    compose,
    e_of_x,
    is_extensible,
    pair_orbit_coloring,
    verify_chain,
)
from fraisse_bench.morphisms import Embedding, homogeneity_check, HomogeneityCertificate
from fraisse_bench.structures import (
    OnePointExtension,
    complete_graph,
    cycle_graph,
    graph,
    induced_substructure,
    labeled,
)

TFO = get_class("tfLabeledOrdered")


def test_identity_is_extensible():
    c = cycle_graph(5)
    op = is_extensible(Embedding(c, c, tuple(range(5))))
    assert isinstance(op, ExtensionOperator)
    assert all(h == ht for h, ht in op.table)


def test_swap_does_not_extend():
    e = Embedding(graph(2, []), graph(3, [(0, 1)]), (0, 2))
    res = is_extensible(e, [(1, 0)])
    assert isinstance(res, ExtensibilityFailure) and res.h == (1, 0)


def test_vertex_in_c5():
    op = is_extensible(Embedding(graph(1, []), cycle_graph(5), (0,)), [(0,)])
    assert isinstance(op, ExtensionOperator) and op.verify()


@given(graphs_st(min_n=1, max_n=4), graphs_st(min_n=0, max_n=3))
def test_extension_operator_against_brute_force(t, s0):
    from fraisse_bench.morphisms import find_embeddings
    embs = find_embeddings(s0, t, limit=1)
    if not embs:
        return
    e = embs[0]
    res = is_extensible(e)
    auts_t = oracles.automorphisms_brute(t)
    for h in oracles.automorphisms_brute(s0):
        ok = any(all(g[e.map[z]] == e.map[h[z]] for z in range(s0.n)) for g in auts_t)
        if isinstance(res, ExtensibilityFailure):
            if res.h == h:
                assert not ok
                return
        else:
            assert ok
            assert res.square_commutes(h, res(h))


def test_e_of_x_one_point():
    x = labeled(1, order=[0])
    res = e_of_x(x, [0, 1])
    y = res.y
    assert y.n == 5 and len(res.fresh_colors) == 6
    assert not oracles.mono_triangle_brute(y)
    new = range(1, 5)
    assert len({y.color(a, b) for a, b in itertools.combinations(new, 2)}) == 6
    below = [p for p in new if y.order[p] < y.order[0]]
    assert sorted(y.order[p] for p in below) == [0, 1]
    # same position: the point colored 0 comes first (smaller support at color 0)
    by_rank = sorted(below, key=lambda p: y.order[p])
    assert [y.color(0, p) for p in by_rank] == [1, 0]


def test_e_of_x_empty_family():
    x = labeled(2, {(0, 1): 0}, order=[0, 1])
    res = e_of_x(x, [0, 1], exts=[])
    assert res.y == x and res.e.map == (0, 1)


def test_e_of_x_unique_realization():
    x = labeled(2, {(0, 1): 0}, order=[0, 1])
    ext = OnePointExtension(x, (1, 1), 2)
    res = e_of_x(x, [0, 1], exts=[ext])
    assert res.unique_realization()
    hits = [p for p in range(res.y.n) if p >= 2
            and oracles.is_embedding_brute(ext.realize(), res.y, (0, 1, p))]
    assert hits == [res.realization[0][1]]


def test_e_of_x_rejects_foreign_colors():
    x = labeled(1, order=[0])
    with pytest.raises(RejectedInput):
        e_of_x(x, [0, 1], exts=[OnePointExtension(x, (4,), 0)])


@given(labeled_st(max_n=3, colors=range(2), ordered=True))
def test_e_of_x_properties(x):
    if not TFO.member(x):
        return
    res = e_of_x(x, [0, 1])
    assert not oracles.mono_triangle_brute(res.y)
    assert induced_substructure(res.y, range(x.n)) == x
    assert res.unique_realization() and res.order_invariant() and res.orbit_constant()
    assert all(c >= 2 for c in res.fresh_colors)
    for h, ht in res.op.table:
        assert all(ht[z] == h[z] for z in range(x.n))


def test_orbit_coloring_nontrivial_actions():
    # rotation of four points: pairs fall into two orbits (sides and diagonals)
    rot = [1, 2, 3, 0]
    col = pair_orbit_coloring(4, [rot], 10)
    assert col[(0, 1)] == col[(1, 2)] == col[(2, 3)] == col[(0, 3)] == 10
    assert col[(0, 2)] == col[(1, 3)] == 11


@given(st.permutations(range(5)), st.permutations(range(5)))
def test_orbit_coloring_constant_on_orbits(p, q):
    col = pair_orbit_coloring(5, [p, q], 3)
    for h in (p, q):
        for a, b in itertools.combinations(range(5), 2):
            i, j = sorted((h[a], h[b]))
            assert col[(a, b)] == col[(i, j)]
    # the number of colors is the number of orbits, counted by brute force
    seen, orbits = set(), 0
    for pr in itertools.combinations(range(5), 2):
        if pr in seen:
            continue
        orbits += 1
        stack = [pr]
        while stack:
            a, b = stack.pop()
            if (a, b) in seen:
                continue
            seen.add((a, b))
            for h in (p, q):
                stack.append(tuple(sorted((h[a], h[b]))))
    assert len(set(col.values())) == orbits


def test_close_under_orbit():
    # unordered reduct: swapping the two points moves extensions around
    x = labeled(2, {(0, 1): 0})
    exts = close_under([OnePointExtension(x, (1, 2))], [(1, 0)])
    assert [e.alpha for e in exts] == [(1, 2), (2, 1)]
    assert act((1, 0), exts[1]) == exts[0]


def test_chain_example():
    u0 = labeled(2, {(0, 1): 0}, order=[0, 1])
    ch = build_g_extensible_chain(u0, None, 2, [[0, 1], range(6)])
    sizes = [s.n for s in ch.stages]
    assert all(a < b for a, b in zip(sizes, sizes[1:]))
    for s in ch.stages:
        assert TFO.member(s) and s.order is not None


def test_chain_one_stage_is_e_of_x():
    u0 = labeled(1, order=[0])
    ch = build_g_extensible_chain(u0, None, 1, [[0, 1]])
    assert ch.stages[1].n == e_of_x(u0, [0, 1]).y.n


def test_chain_slack_exhausted():
    u0 = labeled(3, {(0, 1): 0, (0, 2): 1, (1, 2): 0}, order=[0, 1, 2])
    with pytest.raises(ConstructionError, match="stage 0"):
        build_g_extensible_chain(u0, None, 1, [[0, 1]])


def _toy_chain():
    k = [complete_graph(1), complete_graph(2), complete_graph(3)]
    fams = [[(0,)], [(0, 1)], [(0, 1, 2), (0, 2, 1)]]
    tr = {(0, 1): {(0,): (0, 1)}, (1, 2): {(0, 1): (0, 1, 2)}, (0, 2): {(0,): (0, 1, 2)}}
    return ExtChain(k, fams, tr)


def test_toy_chain_is_valid_and_limits():
    ch = _toy_chain()
    verify_chain(ch)
    lim = chain_limit(ch)
    assert lim.chain.limit == 3 and lim.family_size <= lim.bound


def test_perturbed_transfer_names_triple():
    ch = _toy_chain()
    ch.transfers[(0, 2)][(0,)] = (0, 2, 1)
    with pytest.raises(ChainError) as info:
        verify_chain(ch)
    assert info.value.invariant == "coherence" and info.value.where == (0, 1, 2)
    with pytest.raises(RejectedInput):
        chain_limit(ch)


def test_limit_of_built_chain():
    u0 = labeled(2, {(0, 1): 0}, order=[0, 1])
    ch = build_g_extensible_chain(u0, None, 2, [[0, 1], range(6)])
    lim = chain_limit(ch)
    verify_chain(lim.chain)
    assert lim.chain.stages[-1] == ch.stages[-1]


@pytest.mark.parametrize("w", [complete_graph(3), cycle_graph(5)], ids=["K3", "C5"])
def test_closing_off_grows_to_whole(w):
    res = closing_off(w, [0])
    assert res.u == w and res.subset == tuple(range(w.n))


def test_closing_off_full_universe():
    w = cycle_graph(5)
    assert closing_off(w, range(5)).u == w


def test_closing_off_rejects_non_homogeneous():
    from fraisse_bench.structures import path_graph
    with pytest.raises(RejectedInput):
        closing_off(path_graph(4), [0])


@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_closing_off_invariance(parts, size, data):
    # disjoint unions of equal cliques are homogeneous
    n = parts * size
    w = graph(n, [(i, j) for i, j in itertools.combinations(range(n), 2) if i // size == j // size])
    x = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2, unique=True))
    res = closing_off(w, x)
    s = set(res.subset)
    assert set(x) <= s
    assert all({h[v] for v in s} == s for h in res.family)
    cert = homogeneity_check(res.u, min(2, res.u.n))
    assert isinstance(cert, HomogeneityCertificate)


def test_compose_order():
    assert compose((1, 2, 0), (0, 2, 1)) == (1, 0, 2)
