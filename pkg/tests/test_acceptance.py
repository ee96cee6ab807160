"""Acceptance gate: one test per criterion, each with its runtime limit.

Every test records a PASS/FAIL line (shown in the terminal summary) and
prints it as well.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import json
import random
import time

import pytest

import oracles
from conftest import ACCEPTANCE
from fraisse_bench.amalgamation import amalgamation_base_check, ap_check, koenig_tree_amalgamation
from fraisse_bench.classes import get_class, members
from fraisse_bench.cli import run
from fraisse_bench.counterexamples import (
    antimetric_failure_witness,
    group_counterexample_verify,
    labeled_failure_witness,
    ordered_failure_witness,
)
from fraisse_bench.extensible import build_g_extensible_chain, e_of_x
from fraisse_bench.fraisse import InjectivityCertificate, build_limit_approx
from fraisse_bench.morphisms import HomogeneityCertificate, homogeneity_check
from fraisse_bench.structures import (
    graph,
    induced_substructure,
    labeled,
    to_doc,
)


@contextlib.contextmanager
def criterion(num: int, title: str, limit: float | None):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"[{num:2d}] FAIL {title}: {type(exc).__name__}: {str(exc)[:120]}"
        ACCEPTANCE[num] = line
        print(line)
        raise
    elapsed = time.perf_counter() - start
    if limit is not None and elapsed >= limit:
        line = f"[{num:2d}] FAIL {title}: {elapsed:.2f}s exceeds {limit:.0f}s"
        ACCEPTANCE[num] = line
        print(line)
        pytest.fail(line)
    budget = f" (limit {limit:.0f}s)" if limit is not None else ""
    line = f"[{num:2d}] PASS {title}: {elapsed:.2f}s{budget}"
    ACCEPTANCE[num] = line
    print(line)


# 1 ------------------------------------------------------------------------------------


def test_01_group_identity():
    with criterion(1, "group conjugation identity, orbit and sampled finite orders", 5):
        rep = group_counterexample_verify(k_max=64, m_max=1000, samples=500)
        assert rep.conjugation_ok and rep.orbit_ok, rep.failures
        assert rep.passed, rep.failures
        for name in ("G[a]", "G[b]"):
            assert len(rep.sampled_orders[name]) == 500
            assert all(o >= 1 for o in rep.sampled_orders[name])


# 2 ------------------------------------------------------------------------------------


def test_02_antimetric_failure():
    with criterion(2, "anti-metric failure at n=12, every k<=10 blocked", 5):
        t = antimetric_failure_witness(12, 10)
        inst = t.instance
        assert oracles.antimetric_brute(inst.x)
        assert oracles.antimetric_brute(inst.ext_a.realize())
        assert oracles.antimetric_brute(inst.ext_b.realize())
        assert sorted(t.candidates) == list(range(1, 11))
        a, b = inst.ext_a.alpha, inst.ext_b.alpha
        for k, m in t.candidates.items():
            x, y, z = sorted((a[m], b[m], k))
            assert z <= x + y, f"triangle {{a, b, {m}}} at distance {k} is still anti-metric"
        # gluing a and b needs equal distances everywhere
        assert t.glue_block[0] == "color" and a[t.glue_block[1]] != b[t.glue_block[1]]
        (v,) = amalgamation_base_check(inst.x, [(inst.ext_a, inst.ext_b)],
                                       get_class("antiMetric"), range(1, 11))
        assert not v.amalgamates and set(v.blocked) == set(range(1, 11))


# 3 ------------------------------------------------------------------------------------


def test_03_labeled_failure():
    with criterion(3, "labeled failure at n=10, cross-checked with base-check", 5):
        t = labeled_failure_witness(10)
        inst = t.instance
        assert sorted(t.candidates) == list(range(10))
        for q, z in t.candidates.items():
            assert inst.ext_a.alpha[z] == inst.ext_b.alpha[z] == q == z
        assert t.glue_block == ("color", 10)
        (v,) = amalgamation_base_check(inst.x, [(inst.ext_a, inst.ext_b)],
                                       get_class("tfLabeled"), range(10))
        assert not v.amalgamates and v.glue_block == t.glue_block
        assert v.blocked == {q: (z,) for q, z in t.candidates.items()}


# 4 ------------------------------------------------------------------------------------


def test_04_ordered_failure():
    with criterion(4, "ordered failure at n=10, order-conflict glue block", 5):
        t = ordered_failure_witness(10)
        inst = t.instance
        assert t.glue_block == ("order", 0)
        ra, rb = inst.ext_a.realize(), inst.ext_b.realize()
        assert ra.less(10, 0) and rb.less(0, 10)
        (v,) = amalgamation_base_check(inst.x, [(inst.ext_a, inst.ext_b)],
                                       get_class("tfLabeledOrdered"), range(10))
        assert not v.amalgamates and v.glue_block == t.glue_block
        assert v.blocked == {q: (z,) for q, z in t.candidates.items()}
        assert sorted(v.blocked) == list(range(10))


# 5 ------------------------------------------------------------------------------------


def _random_instance(rng: random.Random, cid: str):
    c = get_class(cid)
    n = rng.randint(1, 6)
    while True:
        edges = [p for p in itertools.combinations(range(n), 2) if rng.random() < 0.45]
        top = graph(n, edges)
        if c.member(top):
            break
    depth = rng.randint(0, 4)
    sizes = sorted(rng.randint(0, n) for _ in range(depth)) + [n]
    chain = [induced_substructure(top, range(m)) for m in sizes]
    exts = list(c.extensions(top))
    return chain, rng.choice(exts), rng.choice(exts)


def test_05_koenig_branches():
    with criterion(5, "tree amalgamation on 100 random instances", 30):
        rng = random.Random(20240501)
        for i in range(100):
            cid = ("graphs", "knFree(3)")[i % 2]
            c = get_class(cid)
            chain, ea, eb = _random_instance(rng, cid)
            res = koenig_tree_amalgamation(chain, ea, eb, c)
            assert res.found, f"instance {i}"
            br = res.branch
            assert len(br) == len(chain)
            for j in range(len(br) - 1):
                hi = chain[j + 1].n
                ab = [hi] if br[j + 1].glued else [hi, hi + 1]
                assert induced_substructure(br[j + 1].result,
                                            list(range(chain[j].n)) + ab) == br[j].result
            for a in br:
                assert c.member(a.result) and a.commutes()


# 6 ------------------------------------------------------------------------------------


def test_06_e_of_x():
    with criterion(6, "E(X) over every ordered base with n<=3, Q={0,1}", 60):
        c = get_class("tfLabeledOrdered")
        q = [0, 1]
        count = 0
        for n in range(4):
            for x in members(c, n, [0, 1, 2]):
                exts = list(c.extensions(x, q))
                auts = oracles.automorphisms_brute(x)
                res = e_of_x(x, q, exts, auts)
                y = res.y
                count += 1
                assert not oracles.mono_triangle_brute(y)
                assert induced_substructure(y, range(n)) == x
                for ext, p in res.realization:
                    hits = [v for v in range(n, y.n)
                            if oracles.is_embedding_brute(ext.realize(), y, tuple(range(n)) + (v,))]
                    assert hits == [p]
                for h, ht in res.op.table:
                    assert oracles.is_embedding_brute(y, y, ht)
                    assert all(ht[z] == h[z] for z in range(n))
                    for u, v in itertools.combinations(range(n, y.n), 2):
                        assert (y.order[u] < y.order[v]) == (y.order[ht[u]] < y.order[ht[v]])
                assert {tuple(h) for h, _ in res.op.table} == set(auts)
        assert count == 1 + 1 + 6 + 144


# 7 ------------------------------------------------------------------------------------


def test_07_extensible_chain():
    with criterion(7, "extensible chain with N=3", 60):
        u0 = labeled(2, {(0, 1): 0}, order=[0, 1])
        ch = build_g_extensible_chain(u0, None, 3, [[0, 1], [0, 1, 2], [0, 1, 2, 3]])
        sizes = [s.n for s in ch.stages]
        assert len(sizes) == 4 and all(a < b for a, b in zip(sizes, sizes[1:]))
        for s in ch.stages:
            assert get_class("tfLabeledOrdered").member(s)
            if s.n <= 60:
                assert not oracles.mono_triangle_brute(s)
        for a, b, g in itertools.combinations(range(4), 3):
            for h in ch.families[a]:
                assert ch.s(b, g, ch.s(a, b, h)) == ch.s(a, g, h)
        top = ch.stages[-1]
        e = tuple(range(u0.n))  # e_0^N is the inclusion
        for h in ch.families[0]:
            t = ch.s(0, 3, h)
            assert oracles.is_embedding_brute(top, top, t)
            assert all(t[e[z]] == e[h[z]] for z in range(u0.n))


# 8 ------------------------------------------------------------------------------------


def test_08_limit_approximation():
    with criterion(8, "approximation of the random and triangle-free limits", 60):
        for cid in ("graphs", "knFree(3)"):
            la = build_limit_approx(get_class(cid), graph(1, []), 3, 2)
            assert len(la.stages) == 4
            for cert, lo, hi in zip(la.certificates, la.stages, la.stages[1:]):
                assert isinstance(cert, InjectivityCertificate) and cert.verify()
                assert induced_substructure(hi, range(lo.n)) == lo
                for sub, ext, p in cert.witnesses:
                    assert p not in sub
                    assert oracles.is_embedding_brute(ext.realize(), hi, tuple(sub) + (p,))
            if cid == "knFree(3)":
                assert all(not oracles.has_clique_brute(s, 3) for s in la.stages)


# 9 ------------------------------------------------------------------------------------


def test_09_homogeneity_oracle():
    with criterion(9, "homogeneity verdicts for all graphs up to 5 vertices", 120):
        total = 0
        for n in range(6):
            for g in oracles.graph_iso_reps(n):
                total += 1
                res = homogeneity_check(g, n)
                want = oracles.homogeneous_brute(g, n)
                assert isinstance(res, HomogeneityCertificate) == want, to_doc(g)
        # 1 + 1 + 2 + 4 + 11 + 34 isomorphism types on 0..5 vertices
        assert total == 53


# 10 -----------------------------------------------------------------------------------


def test_10_ap_budget_16():
    with criterion(10, "amalgamation property at base size <=3, budget 16", 60):
        for cid in ("graphs", "knFree(3)", "linearOrders", "antiMetric", "tfLabeled"):
            rep = ap_check(get_class(cid), 3, 16)
            assert rep.passed, (cid, rep.failure)
            assert rep.pairs_checked > 0


# 11 -----------------------------------------------------------------------------------


def _suite(tmp):
    def put(name, doc):
        p = tmp / name
        p.write_text(json.dumps(doc))
        return str(p)

    c5 = put("c5.json", to_doc(graph(5, [(i, (i + 1) % 5) for i in range(5)])))
    g1 = put("g1.json", to_doc(graph(1, [])))
    k2 = put("k2.json", to_doc(graph(2, [(0, 1)])))
    x1 = put("x1.json", to_doc(labeled(1, order=[0])))
    u0 = put("u0.json", to_doc(labeled(2, {(0, 1): 0}, order=[0, 1])))
    adj = put("adj.json", {"tuples": {"E": [[0, 1], [1, 0]]}})
    pairs = put("pairs.json", [[{"tuples": {"E": [[0, 1], [1, 0]]}}, {"tuples": {}}]])
    return [
        ["catalog"],
        ["validate", "--class", "graphs", c5],
        ["embed", k2, c5],
        ["auts", c5],
        ["age", c5, "--k", "3"],
        ["homogeneity", c5, "--k", "2"],
        ["amalgamate", "--class", "graphs", "--base", g1, "--left", adj, "--right", adj],
        ["ap-check", "--class", "tfLabeled", "--max-size", "2", "--budget", "4"],
        ["koenig", "--class", "graphs", "--random-depth", "3"],
        ["koenig", "--class", "knFree(3)", "--random-depth", "4"],
        ["base-check", "--class", "graphs", "--base", g1, "--pairs", pairs],
        ["build-limit", "--class", "graphs", "--steps", "2", "--level", "2"],
        ["injectivity", "--class", "graphs", c5, c5],
        ["iterate", "--class", "graphs", "--source", g1, "--target", k2, "--map", "0",
         "--copies", "3"],
        ["extensible", "--source", g1, "--target", c5, "--map", "0"],
        ["extend", "--input", x1, "--q", "0,1"],
        ["chain", "--input", u0, "--stages", "2", "--q", "0,1;0,1,2", "--limit"],
        ["closing-off", "--input", c5, "--subset", "0"],
        ["counterexample", "group", "--size", "16", "--budget", "100", "--samples", "50"],
        ["counterexample", "antimetric", "--size", "12", "--budget", "10"],
        ["counterexample", "labeled", "--size", "10", "--budget", "10"],
        ["counterexample", "ordered", "--size", "10", "--budget", "10"],
    ]


def test_11_cli_determinism(tmp_path):
    with criterion(11, "byte-identical structured reports on repeated runs", None):
        for argv in _suite(tmp_path):
            outs = []
            for _ in range(2):
                out = io.StringIO()
                code = run(["--format", "json", "--random-seed", "7", *argv], out, io.StringIO())
                assert code in (0, 1), argv
                outs.append(out.getvalue().encode())
            assert outs[0] == outs[1], argv
            json.loads(outs[0])
