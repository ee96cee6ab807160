"""Command-line entry point.

Exit codes: 0 success, 1 a witness or mathematical failure was found (the
report carries it), 2 usage or input error, 3 a resource bound or budget was
exhausted.  Structured output (``--format json``) uses sorted keys so equal
inputs and seeds give byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import amalgamation as am
from . import counterexamples as cx
from . import extensible as ex
from . import fraisse as fr
from . import morphisms as mo
from .classes import CATALOG_IDS, DEFAULT_BUDGET, catalog, color_budget, get_class, validate
from .errors import ConstructionError, ParseError, RejectedInput, ResourceLimit
from .structures import (
    FinStructure,
    OnePointExtension,
    empty,
    extension_from_doc,
    from_doc,
    induced_substructure,
    to_doc,
)

DEFAULT_SEED = 0


class Outcome:
    def __init__(self, code: int, doc: dict, text: list[str]):
        self.code, self.doc, self.text = code, doc, text


# -- input helpers ------------------------------------------------------------------


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise RejectedInput(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None


def _load_structure(path: str) -> FinStructure:
    return from_doc(_load_json(path))


def _load_extension(base: FinStructure, path: str) -> OnePointExtension:
    return extension_from_doc(base, _load_json(path))


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise RejectedInput(f"expected comma-separated integers, got {text!r}") from None


def _budget(text: str | None):
    """``"16"`` means colors 0..15; ``"0,1,5"`` lists colors."""
    if text is None:
        return DEFAULT_BUDGET
    return int(text) if "," not in text else _int_list(text)


def _group(path: str | None):
    if path is None:
        return None
    doc = _load_json(path)
    if not isinstance(doc, list):
        raise ParseError("group document must be a list of permutations", "$")
    return [list(h) for h in doc]


# -- commands ---------------------------------------------------------------------------


def cmd_catalog(args, rng) -> Outcome:
    rows = [{"id": c.id, "kind": c.kind.describe(), "finiteLanguage": c.finite_language}
            for c in catalog()]
    return Outcome(0, {"classes": rows, "ids": list(CATALOG_IDS)},
                   [f"{r['id']}: {r['kind']}" for r in rows])


def cmd_validate(args, rng) -> Outcome:
    c = get_class(args.cls)
    s = _load_structure(args.file)
    ok = validate(s, c)
    return Outcome(0 if ok else 1, {"class": c.id, "valid": ok},
                   [f"{'valid' if ok else 'invalid'} in {c.id}"])


def cmd_embed(args, rng) -> Outcome:
    a, b = _load_structure(args.source), _load_structure(args.target)
    embs = mo.find_embeddings(a, b, args.limit)
    return Outcome(0 if embs else 1, {"embeddings": [e.to_doc() for e in embs]},
                   [f"{len(embs)} embedding(s)"] + [str(list(e.map)) for e in embs])


def cmd_auts(args, rng) -> Outcome:
    s = _load_structure(args.file)
    auts = mo.automorphisms(s, args.bound)
    return Outcome(0, {"automorphisms": [g.to_doc() for g in auts]},
                   [f"{len(auts)} automorphism(s)"] + [str(list(g.map)) for g in auts])


def cmd_age(args, rng) -> Outcome:
    s = _load_structure(args.file)
    reps = mo.age(s, args.k)
    return Outcome(0, {"age": [to_doc(r) for r in reps]},
                   [f"{len(reps)} isomorphism type(s) of size <= {args.k}"])


def cmd_homogeneity(args, rng) -> Outcome:
    s = _load_structure(args.file)
    res = mo.homogeneity_check(s, args.k, args.bound)
    if isinstance(res, mo.PartialIso):
        return Outcome(1, {"homogeneous": False, "counterexample": {"partialIso": res.to_doc()}},
                       [f"not homogeneous: {res.map} does not extend"])
    return Outcome(0, {"homogeneous": True, "certificate": res.to_doc()},
                   [f"certificate with {len(res.witnesses)} witness(es) up to size {args.k}"])


def cmd_amalgamate(args, rng) -> Outcome:
    c = get_class(args.cls)
    z = _load_structure(args.base)
    ea, eb = _load_extension(z, args.left), _load_extension(z, args.right)
    res = am.amalgamate_one_point(z, ea, eb, c, _budget(args.budget))
    budget = list(color_budget(_budget(args.budget)))
    return Outcome(0 if res else 1, {"amalgams": [a.to_doc() for a in res], "budget": budget},
                   [f"{len(res)} amalgam(s)" if res else "none within budget"])


def cmd_ap_check(args, rng) -> Outcome:
    c = get_class(args.cls)
    rep = am.ap_check(c, args.max_size, _budget(args.budget), args.method)
    line = f"{c.id}: {'pass' if rep.passed else 'FAIL'} ({rep.pairs_checked} pairs, " \
           f"{rep.enlarged} needed colors beyond the budget)"
    return Outcome(0 if rep.passed else 1, rep.to_doc(), [line])


def _random_graph_instance(c, depth: int, rng: random.Random):
    """Random chain of initial substructures plus two extensions of the top."""
    sizes = sorted(rng.sample(range(1, depth + 3), depth + 1)) if depth >= 0 else []
    top_n = sizes[-1]
    while True:
        edges = [(i, j) for i in range(top_n) for j in range(i + 1, top_n) if rng.random() < 0.4]
        from .structures import graph
        top = graph(top_n, edges)
        if c.member(top):
            break
    chain = [induced_substructure(top, range(m)) for m in sizes]
    exts = list(c.extensions(top))
    return chain, rng.choice(exts), rng.choice(exts)


def cmd_koenig(args, rng) -> Outcome:
    c = get_class(args.cls)
    if args.chain:
        doc = _load_json(args.chain)
        docs = doc.get("chain") if isinstance(doc, dict) else doc
        if not isinstance(docs, list) or not docs:
            raise ParseError("chain document must list structures", "chain")
        chain = [from_doc(d) for d in docs]
        if not (args.left and args.right):
            raise RejectedInput("--left and --right are required with --chain")
        ea, eb = _load_extension(chain[-1], args.left), _load_extension(chain[-1], args.right)
    else:
        if c.kind.is_labeled or c.id == "linearOrders":
            raise RejectedInput("random instances are generated for graph classes only")
        chain, ea, eb = _random_graph_instance(c, args.random_depth, rng)
    res = am.koenig_tree_amalgamation(chain, ea, eb, c, _budget(args.budget), args.allow_infinite)
    doc = {"found": res.found, "levelSizes": res.level_sizes, "nodesVisited": res.nodes_visited,
           "chain": [to_doc(z) for z in chain], "left": ea.to_doc(), "right": eb.to_doc()}
    if res.found:
        doc["branch"] = [a.to_doc() for a in res.branch]
    return Outcome(0 if res.found else 1, doc,
                   [f"branch {'found' if res.found else 'not found'}; level sizes {res.level_sizes}"])


def cmd_base_check(args, rng) -> Outcome:
    c = get_class(args.cls)
    x = _load_structure(args.base)
    pairs_doc = _load_json(args.pairs)
    if not isinstance(pairs_doc, list):
        raise ParseError("pairs document must be a list of [left, right]", "$")
    pairs = []
    for idx, p in enumerate(pairs_doc):
        if not isinstance(p, list) or len(p) != 2:
            raise ParseError("each pair must be [left, right]", f"[{idx}]")
        pairs.append((extension_from_doc(x, p[0]), extension_from_doc(x, p[1])))
    verdicts = am.amalgamation_base_check(x, pairs, c, _budget(args.budget))
    ok = all(v.amalgamates for v in verdicts)
    return Outcome(0 if ok else 1, {"verdicts": [v.to_doc() for v in verdicts]},
                   [f"pair {i}: {'amalgamates' if v.amalgamates else 'blocked within budget'}"
                    for i, v in enumerate(verdicts)])


def cmd_build_limit(args, rng) -> Outcome:
    c = get_class(args.cls)
    if args.seed:
        seed = _load_structure(args.seed)
    else:
        seed = next(iter(c.extensions(empty(c.kind), _budget(args.budget)))).realize()
    la = fr.build_limit_approx(c, seed, args.steps, args.level, _budget(args.budget))
    ok = all(isinstance(cert, fr.InjectivityCertificate) for cert in la.certificates)
    return Outcome(0 if ok else 1, la.to_doc(),
                   [f"stage sizes {[s.n for s in la.stages]}; "
                    f"{'all certified' if ok else 'certificate missing'}"])


def cmd_injectivity(args, rng) -> Outcome:
    c = get_class(args.cls)
    u, v = _load_structure(args.u), _load_structure(args.v)
    res = fr.injectivity_certificate(u, v, c, args.level, _budget(args.budget))
    ok = isinstance(res, fr.InjectivityCertificate)
    return Outcome(0 if ok else 1, {"certified": ok, **res.to_doc()},
                   ["certified" if ok else f"unrealized extension over {list(res.subset)}"])


def cmd_iterate(args, rng) -> Outcome:
    c = get_class(args.cls)
    u, t = _load_structure(args.source), _load_structure(args.target)
    e = mo.Embedding(u, t, tuple(_int_list(args.map)))
    copy = _int_list(args.copy) if args.copy else None
    chain = fr.iterate_self_embedding(u, e, args.copies, c, copy, _budget(args.budget))
    ok = chain.coherent()
    return Outcome(0 if ok else 1, {"coherent": ok, **chain.to_doc()},
                   [f"stage sizes {[s.n for s in chain.stages]}; coherent: {ok}"])


def cmd_extensible(args, rng) -> Outcome:
    s, t = _load_structure(args.source), _load_structure(args.target)
    e = mo.Embedding(s, t, tuple(_int_list(args.map)))
    res = ex.is_extensible(e, _group(args.group), args.bound)
    if isinstance(res, ex.ExtensibilityFailure):
        return Outcome(1, {"extensible": False, **res.to_doc()},
                       [f"{list(res.h)} does not extend"])
    return Outcome(0, {"extensible": True, "table": res.to_doc()},
                   [f"extensible; {len(res.table)} table entries"])


def cmd_extend(args, rng) -> Outcome:
    x = _load_structure(args.input)
    exts = None
    if args.exts:
        doc = _load_json(args.exts)
        if not isinstance(doc, list):
            raise ParseError("extensions document must be a list", "$")
        exts = [extension_from_doc(x, d) for d in doc]
    res = ex.e_of_x(x, _int_list(args.q), exts, _group(args.group), args.fresh_limit)
    checks = {"uniqueRealization": res.unique_realization(),
              "orderInvariant": res.order_invariant(), "orbitConstant": res.orbit_constant()}
    ok = all(checks.values())
    return Outcome(0 if ok else 1, {**res.to_doc(), "checks": checks},
                   [f"E(X) has {res.y.n} points; checks {checks}"])


def cmd_chain(args, rng) -> Outcome:
    u0 = _load_structure(args.input)
    schedule = [_int_list(p) for p in args.q.split(";")]
    chain = ex.build_g_extensible_chain(u0, _group(args.group), args.stages, schedule,
                                        k=args.level, margin=args.margin)
    doc = {"chain": chain.to_doc()}
    text = [f"stage sizes {[s.n for s in chain.stages]}"]
    if args.limit:
        lim = ex.chain_limit(chain)
        doc["limit"] = {"chain": lim.chain.to_doc(), "familySize": lim.family_size,
                        "bound": lim.bound}
        text.append(f"limit family size {lim.family_size} <= {lim.bound}")
    return Outcome(0, doc, text)


def cmd_closing_off(args, rng) -> Outcome:
    w = _load_structure(args.input)
    res = ex.closing_off(w, _int_list(args.subset), _group(args.group) or (), args.level,
                         args.bound)
    return Outcome(0, res.to_doc(), [f"closed set {list(res.subset)} after {res.rounds} round(s)"])


def cmd_counterexample(args, rng) -> Outcome:
    which = args.which
    if which == "group":
        rep = cx.group_counterexample_verify(args.size or 64, args.budget or 1000,
                                             args.samples, seed=args.random_seed)
        if not rep.passed:
            raise ConstructionError("; ".join(rep.failures))
        return Outcome(1, {"construction": "group", **rep.to_doc()},
                       ["conjugation identity and unbounded orbit confirmed; "
                        "sampled elements have finite order"])
    n = args.size
    if n is None:
        raise RejectedInput("--size is required")
    if which == "antimetric":
        k_max = args.budget or 10
        table = cx.antimetric_failure_witness(n, k_max, args.slack)
        cls = "antiMetric"
        budget = list(range(1, k_max + 1))
    else:
        k = n if args.budget is None else args.budget
        if k > n:
            raise RejectedInput(f"budget {k} exceeds the truncation size {n}")
        table = (cx.labeled_failure_witness if which == "labeled" else cx.ordered_failure_witness)(n)
        table.candidates = {q: z for q, z in table.candidates.items() if q < k}
        cls = "tfLabeled" if which == "labeled" else "tfLabeledOrdered"
        budget = list(range(k))
    inst = table.instance
    verdict = am.amalgamation_base_check(inst.x, [(inst.ext_a, inst.ext_b)], get_class(cls),
                                         budget)[0]
    blocked = set(verdict.blocked)
    if which == "antimetric":
        agree = blocked == set(budget) and all(
            (m,) == verdict.blocked[k] or _blocks(cls, inst, k, m)
            for k, m in table.candidates.items())
    else:
        agree = {q: (z,) for q, z in table.candidates.items()} == verdict.blocked
    agree = agree and verdict.glue_block == table.glue_block and not verdict.amalgamates
    doc = {"construction": which, **table.to_doc(), "crossCheck": agree}
    lines = [f"glue blocked: {table.glue_block[0]} at {table.glue_block[1]}"]
    lines += [f"candidate {k}: blocked by point {m}" for k, m in sorted(table.candidates.items())]
    lines.append(f"base-check agreement: {agree}")
    if not agree:
        raise ConstructionError("builder table disagrees with the base check")
    return Outcome(1, doc, lines)


def _blocks(cls: str, inst, k: int, m: int) -> bool:
    """Is ``{a, b, m}`` with new edge ``k`` outside the class?"""
    c = get_class(cls)
    from .structures import labeled
    tri = labeled(3, {(0, 1): inst.ext_a.alpha[m], (0, 2): inst.ext_b.alpha[m], (1, 2): k})
    return not c.member(tri)


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate, "embed": cmd_embed, "auts": cmd_auts, "age": cmd_age,
    "homogeneity": cmd_homogeneity, "amalgamate": cmd_amalgamate, "ap-check": cmd_ap_check,
    "koenig": cmd_koenig, "base-check": cmd_base_check, "build-limit": cmd_build_limit,
    "injectivity": cmd_injectivity, "iterate": cmd_iterate, "extensible": cmd_extensible,
    "extend": cmd_extend, "chain": cmd_chain, "closing-off": cmd_closing_off,
    "counterexample": cmd_counterexample, "catalog": cmd_catalog,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraisse-bench", description="Fraïssé theory workbench")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--report", help="write the report to this file instead of stdout")
    p.add_argument("--random-seed", type=int, default=DEFAULT_SEED)
    sub = p.add_subparsers(dest="command", required=True)

    def cls_arg(sp):
        sp.add_argument("--class", dest="cls", required=True, help="class id, e.g. knFree(3)")

    sp = sub.add_parser("catalog", help="list the catalogued classes")

    sp = sub.add_parser("validate", help="check class membership")
    cls_arg(sp)
    sp.add_argument("file")

    sp = sub.add_parser("embed", help="list embeddings of SOURCE into TARGET")
    sp.add_argument("source")
    sp.add_argument("target")
    sp.add_argument("--limit", type=int)

    sp = sub.add_parser("auts", help="list automorphisms")
    sp.add_argument("file")
    sp.add_argument("--bound", type=int, default=mo.AUT_BOUND)

    sp = sub.add_parser("age", help="isomorphism types of small substructures")
    sp.add_argument("file")
    sp.add_argument("--k", type=int, required=True)

    sp = sub.add_parser("homogeneity", help="k-bounded homogeneity certificate")
    sp.add_argument("file")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--bound", type=int, default=mo.AUT_BOUND)

    sp = sub.add_parser("amalgamate", help="amalgams of two one-point extensions")
    cls_arg(sp)
    sp.add_argument("--base", required=True)
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)
    sp.add_argument("--budget")

    sp = sub.add_parser("ap-check", help="check the amalgamation property of a class")
    cls_arg(sp)
    sp.add_argument("--max-size", type=int, default=3)
    sp.add_argument("--budget")
    sp.add_argument("--method", choices=["auto", "generic", "vector", "symmetric"],
                    default="auto")

    sp = sub.add_parser("koenig", help="coherent branch of amalgams along a chain")
    cls_arg(sp)
    sp.add_argument("--chain", help="JSON list of structures (initial substructures of the last)")
    sp.add_argument("--left")
    sp.add_argument("--right")
    sp.add_argument("--random-depth", type=int, default=3,
                    help="depth of a random instance when --chain is not given")
    sp.add_argument("--budget")
    sp.add_argument("--allow-infinite", action="store_true",
                    help="also search classes with infinitely many colors (semi-decision)")

    sp = sub.add_parser("base-check", help="amalgamation-base verdicts for extension pairs")
    cls_arg(sp)
    sp.add_argument("--base", required=True)
    sp.add_argument("--pairs", required=True)
    sp.add_argument("--budget")

    sp = sub.add_parser("build-limit", help="iterate the one-step extension")
    cls_arg(sp)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--level", type=int, default=2)
    sp.add_argument("--budget")
    sp.add_argument("--seed", help="seed structure file (default: one point)")

    sp = sub.add_parser("injectivity", help="injectivity certificate for U inside V")
    cls_arg(sp)
    sp.add_argument("u")
    sp.add_argument("v")
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--budget")

    sp = sub.add_parser("iterate", help="chain of copies of an embedding")
    cls_arg(sp)
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--map", required=True, help="images of the source points, comma separated")
    sp.add_argument("--copy", help="embedding of the source into the target for the next copy")
    sp.add_argument("--copies", type=int, required=True)
    sp.add_argument("--budget")

    sp = sub.add_parser("extensible", help="check that automorphisms extend along an embedding")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--map", required=True)
    sp.add_argument("--group", help="JSON list of automorphisms of the source")
    sp.add_argument("--bound", type=int, default=mo.AUT_BOUND)

    sp = sub.add_parser("extend", help="the E(X) construction")
    sp.add_argument("--input", required=True)
    sp.add_argument("--q", required=True, help="colors, comma separated")
    sp.add_argument("--exts", help="JSON list of extensions (default: all Q-colored ones)")
    sp.add_argument("--group", help="JSON list of automorphisms of the input")
    sp.add_argument("--fresh-limit", type=int)

    sp = sub.add_parser("chain", help="build a G-extensible chain")
    sp.add_argument("--input", required=True)
    sp.add_argument("--stages", type=int, required=True)
    sp.add_argument("--q", required=True, help="palettes separated by ';', e.g. '0,1;0,1,2'")
    sp.add_argument("--group")
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--margin", type=int, default=1)
    sp.add_argument("--limit", action="store_true", help="append the limit index")

    sp = sub.add_parser("closing-off", help="close a subset under homogeneity witnesses")
    sp.add_argument("--input", required=True)
    sp.add_argument("--subset", required=True)
    sp.add_argument("--group")
    sp.add_argument("--level", type=int, default=2)
    sp.add_argument("--bound", type=int, default=mo.AUT_BOUND)

    sp = sub.add_parser("counterexample", help="build an amalgamation failure and its witnesses")
    sp.add_argument("which", choices=["group", "antimetric", "labeled", "ordered"])
    sp.add_argument("--size", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--samples", type=int, default=500)
    sp.add_argument("--slack", type=int, default=0)
    return p


def render(outcome: Outcome, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(outcome.doc, sort_keys=True, separators=(",", ":")) + "\n"
    return "\n".join(outcome.text) + "\n"


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rng = random.Random(args.random_seed)
    try:
        outcome = COMMANDS[args.command](args, rng)
    except (RejectedInput, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    except (ResourceLimit, ConstructionError) as exc:
        err.write(f"resource: {exc}\n")
        return 3
    text = render(outcome, args.format)
    if args.report:
        Path(args.report).write_text(text)
    else:
        out.write(text)
    return outcome.code


def main() -> None:
    sys.exit(run())
