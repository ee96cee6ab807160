from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import graphs_st, labeled_st
from fraisse_bench.amalgamation import (
    amalgamate_one_point,
    amalgamation_base_check,
    ap_check,
    completions,
    koenig_tree_amalgamation,
)
from fraisse_bench.classes import get_class, members
from fraisse_bench.errors import RejectedInput
from fraisse_bench.morphisms import is_embedding
from fraisse_bench.structures import (
    OnePointExtension,
    graph,
    induced_substructure,
    labeled,
)

G = get_class("graphs")
ADJ = OnePointExtension(graph(1, []), tuples=frozenset({("E", (0, 1)), ("E", (1, 0))}))
NONADJ = OnePointExtension(graph(1, []))


def test_glued_plus_two():
    res = amalgamate_one_point(graph(1, []), ADJ, ADJ, G)
    assert [a.glued for a in res] == [True, False, False]


def test_adjacent_vs_nonadjacent():
    res = amalgamate_one_point(graph(1, []), ADJ, NONADJ, G)
    assert len(res) == 2 and not any(a.glued for a in res)


def test_tf_edge_base():
    z = labeled(2, {(0, 1): 0})
    e = OnePointExtension(z, (1, 2))
    res = amalgamate_one_point(z, e, e, get_class("tfLabeled"), 6)
    assert res[0].glued
    # c(a, b) = 1 would close {0, a, b} in color 1, and likewise for 2
    assert [a.result.color(2, 3) for a in res[1:]] == [0, 3, 4, 5]


def test_base_check_identical_pair_glues():
    z = labeled(2, {(0, 1): 0})
    e = OnePointExtension(z, (1, 2))
    (v,) = amalgamation_base_check(z, [(e, e)], get_class("tfLabeled"), 4)
    assert v.amalgamates and v.amalgam.glued and v.glue_block is None


def test_ap_examples():
    assert ap_check(G, 4).passed
    assert ap_check(get_class("tfLabeled"), 3, 6).passed
    assert ap_check(get_class("antiMetric"), 3, 6).passed


def test_ap_graphs_up_to_five():
    rep = ap_check(G, 5)
    assert rep.passed and rep.pairs_checked > 0


@pytest.mark.parametrize("method", ["generic", "vector", "symmetric"])
def test_methods_agree(method):
    for cid in ("tfLabeled", "antiMetric"):
        c = get_class(cid)
        if method == "symmetric" and not c.color_symmetric:
            continue
        ref = ap_check(c, 3, 4, method="generic")
        rep = ap_check(c, 3, 4, method=method)
        assert rep.passed == ref.passed
        if method != "symmetric":
            assert (rep.pairs_checked, rep.enlarged) == (ref.pairs_checked, ref.enlarged)


def _graph_pairs(z):
    exts = list(G.extensions(z))
    return [(a, b) for a in exts for b in exts]


@pytest.mark.parametrize("n", [0, 1, 2])
def test_graph_completion_count_matches_brute_force(n):
    for z in members(G, n):
        for ea, eb in _graph_pairs(z):
            got = [a for a in amalgamate_one_point(z, ea, eb, G) if not a.glued]
            want = oracles.completion_count_brute(z, ea, eb, oracles.is_graph_brute, None)
            assert len(got) == want


def test_knfree_completion_count_matches_brute_force():
    c = get_class("knFree(3)")
    for z in members(c, 2):
        exts = list(c.extensions(z))
        for ea, eb in itertools.product(exts, repeat=2):
            got = [a for a in amalgamate_one_point(z, ea, eb, c) if not a.glued]
            want = oracles.completion_count_brute(
                z, ea, eb, lambda w: not oracles.has_clique_brute(w, 3), None)
            assert len(got) == want


@given(labeled_st(max_n=2, colors=range(3), ordered=True), st.data())
def test_ordered_completion_count(z, data):
    c = get_class("tfLabeledOrdered")
    if not c.member(z):
        return
    exts = list(c.extensions(z, 3))
    ea, eb = data.draw(st.sampled_from(exts)), data.draw(st.sampled_from(exts))
    got = [a for a in amalgamate_one_point(z, ea, eb, c, 3) if not a.glued]
    want = oracles.completion_count_brute(z, ea, eb, lambda w: not oracles.mono_triangle_brute(w),
                                          range(3))
    assert len(got) == want


@given(graphs_st(max_n=4), st.data())
def test_amalgams_validate_and_commute(z, data):
    exts = list(G.extensions(z))
    ea, eb = data.draw(st.sampled_from(exts)), data.draw(st.sampled_from(exts))
    for a in amalgamate_one_point(z, ea, eb, G):
        assert oracles.is_graph_brute(a.result)
        assert a.commutes()
        assert oracles.is_embedding_brute(ea.realize(), a.result, a.left_emb.map)
        assert oracles.is_embedding_brute(eb.realize(), a.result, a.right_emb.map)
        assert a.left_emb.map[:z.n] == a.right_emb.map[:z.n] == tuple(range(z.n))


@given(labeled_st(max_n=4, colors=range(3)), st.data())
def test_tf_amalgams_validate(z, data):
    c = get_class("tfLabeled")
    if not c.member(z):
        return
    exts = list(c.extensions(z, 3))
    ea, eb = data.draw(st.sampled_from(exts)), data.draw(st.sampled_from(exts))
    res = amalgamate_one_point(z, ea, eb, c, 5)
    assert res, "a fresh color always amalgamates"
    for a in res:
        assert not oracles.mono_triangle_brute(a.result)
        assert is_embedding(ea.realize(), a.result, a.left_emb.map)
        assert is_embedding(eb.realize(), a.result, a.right_emb.map)


@st.composite
def chains(draw, cid):
    c = get_class(cid)
    top = draw(graphs_st(min_n=1, max_n=6))
    if not c.member(top):
        top = graph(top.n, [])
    cuts = sorted(draw(st.lists(st.integers(0, top.n), min_size=1, max_size=4)))
    chain = [induced_substructure(top, range(m)) for m in cuts] + [top]
    exts = list(c.extensions(top))
    return chain, draw(st.sampled_from(exts)), draw(st.sampled_from(exts))


@pytest.mark.parametrize("cid", ["graphs", "knFree(3)"])
@given(data=st.data())
def test_koenig_restriction_coherence(cid, data):
    c = get_class(cid)
    chain, ea, eb = data.draw(chains(cid))
    res = koenig_tree_amalgamation(chain, ea, eb, c)
    assert res.found
    br = res.branch
    for i in range(len(br) - 1):
        lower, upper = br[i].result, br[i + 1].result
        n_hi = chain[i + 1].n
        ab = [n_hi] if br[i + 1].glued else [n_hi, n_hi + 1]
        assert induced_substructure(upper, list(range(chain[i].n)) + ab) == lower
    for a, z in zip(br, chain):
        assert a.base == z and c.member(a.result)


def test_koenig_rejects_infinite_language():
    z = labeled(1)
    e = OnePointExtension(z, (0,))
    with pytest.raises(RejectedInput):
        koenig_tree_amalgamation([z], e, e, get_class("tfLabeled"))
    res = koenig_tree_amalgamation([z], e, e, get_class("tfLabeled"), 3, allow_infinite=True)
    assert res.found


def test_completions_order():
    z = labeled(1, order=[0])
    ea = OnePointExtension(z, (0,), 1)
    ws = list(completions(z, ea, ea, [0, 1]))
    # each color, a below b first
    assert [(w.color(1, 2), w.order[1] < w.order[2]) for w in ws] == \
        [(0, True), (0, False), (1, True), (1, False)]
