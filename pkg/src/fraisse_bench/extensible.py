"""Extensible embeddings, the E(X) construction, extensible chains and the
closing-off procedure.

Automorphisms are passed around as plain permutation tuples ``h`` with
``h[x]`` the image of ``x``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .classes import color_budget, tf_labeled_ordered
from .errors import ChainError, ConstructionError, RejectedInput
from .fraisse import realizes, subsets_upto
from .morphisms import (
    AUT_BOUND,
    Embedding,
    extend_partial_iso,
    find_embeddings,
    homogeneity_check,
    is_embedding,
    iter_embeddings,
    PartialIso,
)
from .structures import FinStructure, OnePointExtension, induced_substructure

Perm = tuple[int, ...]


def _as_auts(s: FinStructure, g: Iterable[Sequence[int]] | None) -> list[Perm]:
    out = []
    for h in ([tuple(range(s.n))] if g is None else g):
        h = tuple(int(v) for v in h)
        if len(h) != s.n or not is_embedding(s, s, h):
            raise RejectedInput(f"{list(h)} is not an automorphism")
        if h not in out:
            out.append(h)
    return out


def compose(p: Sequence[int], q: Sequence[int]) -> Perm:
    """``p`` after ``q``."""
    return tuple(p[x] for x in q)


@dataclass(frozen=True)
class ExtensionOperator:
    embedding: Embedding
    table: tuple[tuple[Perm, Perm], ...]

    def __call__(self, h: Sequence[int]) -> Perm:
        h = tuple(h)
        for src, dst in self.table:
            if src == h:
                return dst
        raise KeyError(h)

    def square_commutes(self, h: Perm, ht: Perm) -> bool:
        e = self.embedding.map
        return all(ht[e[z]] == e[h[z]] for z in range(len(e)))

    def verify(self) -> bool:
        y = self.embedding.target
        return all(is_embedding(y, y, ht) and self.square_commutes(h, ht) for h, ht in self.table)

    def to_doc(self) -> list:
        return [[list(h), list(ht)] for h, ht in self.table]


@dataclass(frozen=True)
class ExtensibilityFailure:
    h: Perm

    def to_doc(self) -> dict:
        return {"unextendable": list(self.h)}


def is_extensible(e: Embedding, g: Iterable[Sequence[int]] | None = None,
                  bound: int = AUT_BOUND) -> ExtensionOperator | ExtensibilityFailure:
    """Extend every ``h`` in ``g`` (default: all automorphisms of the source)
    to the least automorphism ``h~`` of the target with ``h~ ∘ e = e ∘ h``."""
    if not e.is_valid():
        raise RejectedInput("not an embedding")
    src, tgt = e.source, e.target
    if tgt.n > bound:
        from .errors import ResourceLimit
        raise ResourceLimit(f"automorphism search limited to n <= {bound}, got {tgt.n}")
    if g is None:
        g = [f.map for f in find_embeddings(src, src)]
    table = []
    for h in _as_auts(src, g):
        fixed = {e.map[z]: e.map[h[z]] for z in range(src.n)}
        found = find_embeddings(tgt, tgt, limit=1, fixed=fixed)
        if not found:
            return ExtensibilityFailure(h)
        table.append((h, found[0].map))
    return ExtensionOperator(e, tuple(table))


# -- E(X) ---------------------------------------------------------------------------


def act(h: Sequence[int], ext: OnePointExtension) -> OnePointExtension:
    """Image of an extension under an automorphism ``h`` of its base: the new
    point sees ``h(z)`` the way the old one saw ``z``."""
    x = ext.base
    alpha = [0] * x.n
    for z in range(x.n):
        alpha[h[z]] = ext.alpha[z]
    position = None
    if x.order is not None:
        position = len({h[z] for z in ext.below()})
    return OnePointExtension(x, tuple(alpha), position)


def close_under(exts: Sequence[OnePointExtension], g: Sequence[Perm]) -> list[OnePointExtension]:
    """Closure under the group generated by ``g``, in discovery order."""
    out = list(dict.fromkeys(exts))
    seen = set(out)
    i = 0
    while i < len(out):
        for h in g:
            im = act(h, out[i])
            if im not in seen:
                seen.add(im)
                out.append(im)
        i += 1
    return out


def support_key(ext: OnePointExtension, palette: Sequence[int]) -> tuple:
    """Sort key among extensions with the same position: color fibers compared
    at the least color where they differ, smaller fibers first and then by
    their increasing enumerations."""
    x = ext.base
    fibers = []
    for r in palette:
        fib = sorted(x.order[z] for z in range(x.n) if ext.alpha[z] == r)
        fibers.append((len(fib), tuple(fib)))
    return tuple(fibers)


def pair_orbit_coloring(m: int, actions: Sequence[Sequence[int]], start: int
                        ) -> dict[tuple[int, int], int]:
    """Color unordered pairs of ``0..m-1`` constantly on the orbits of the
    group generated by ``actions`` (permutations of ``0..m-1``), one fresh
    color per orbit from ``start`` upwards, orbits ranked by their least pair."""
    pairs = list(itertools.combinations(range(m), 2))
    parent = {p: p for p in pairs}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for h in actions:
        for i, j in pairs:
            a, b = h[i], h[j]
            q = (a, b) if a < b else (b, a)
            ra, rb = find((i, j)), find(q)
            if ra != rb:
                if rb < ra:
                    ra, rb = rb, ra
                parent[rb] = ra
    roots = sorted({find(p) for p in pairs})
    color_of = {r: start + i for i, r in enumerate(roots)}
    return {p: color_of[find(p)] for p in pairs}


@dataclass(frozen=True)
class EResult:
    y: FinStructure
    e: Embedding
    op: ExtensionOperator
    # (supplied extension, its realizing point in y)
    realization: tuple[tuple[OnePointExtension, int], ...]
    points: tuple[OnePointExtension, ...]  # the extension each new point realizes
    fresh_colors: tuple[int, ...]

    def unique_realization(self) -> bool:
        x = self.e.source
        sub = list(range(x.n))
        for ext, p in self.realization:
            hits = [v for v in range(self.y.n) if realizes(self.y, sub, ext, v)]
            if hits != [p]:
                return False
        return True

    def order_invariant(self) -> bool:
        y, n = self.y, self.e.source.n
        for _, ht in self.op.table:
            for a, b in itertools.combinations(range(n, y.n), 2):
                if (y.order[a] < y.order[b]) != (y.order[ht[a]] < y.order[ht[b]]):
                    return False
        return True

    def orbit_constant(self) -> bool:
        y, n = self.y, self.e.source.n
        return all(y.color(a, b) == y.color(ht[a], ht[b])
                   for _, ht in self.op.table
                   for a, b in itertools.combinations(range(n, y.n), 2))

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"y": to_doc(self.y), "embedding": self.e.to_doc(), "operator": self.op.to_doc(),
                "realization": [{"extension": ext.to_doc(), "point": p}
                                for ext, p in self.realization],
                "freshColors": list(self.fresh_colors)}


def e_of_x(x: FinStructure, q, exts: Sequence[OnePointExtension] | None = None,
           g: Iterable[Sequence[int]] | None = None, fresh_limit: int | None = None,
           fresh_start: int | None = None) -> EResult:
    """Add one point per extension in the closure of ``exts`` under ``g``.

    ``x`` is an ordered triangle-free labeled graph and every extension takes
    colors from ``q``.  New points sit at their prescribed positions; points
    sharing a position are ordered by :func:`support_key`.  Edges between new
    points get one color per orbit of ``g`` on pairs, chosen outside ``q``.
    """
    c = tf_labeled_ordered()
    c.check_kind(x)
    if not c.member(x):
        raise RejectedInput("x has a monochromatic triangle")
    q = color_budget(q)
    if exts is None:
        exts = list(c.extensions(x, q))
    for ext in exts:
        if ext.base != x:
            raise RejectedInput("extensions must have x as base")
        if not ext.is_q_colored(q):
            raise RejectedInput(f"extension {ext.to_doc()} is not colored from Q")
        if not c.extension_ok(ext):
            raise RejectedInput(f"extension {ext.to_doc()} creates a monochromatic triangle")
    auts = _as_auts(x, g)
    closed = close_under(exts, auts)
    palette = sorted({col for ext in closed for col in ext.alpha})
    closed.sort(key=lambda ext: (ext.position, support_key(ext, palette)))
    n, m = x.n, len(closed)
    index = {ext: i for i, ext in enumerate(closed)}
    actions = [[index[act(h, ext)] for ext in closed] for h in auts]
    start = max(q, default=-1) + 1 if fresh_start is None else fresh_start
    if start <= max(q, default=-1):
        raise RejectedInput("fresh colors must lie outside Q")
    coloring = pair_orbit_coloring(m, actions, start)
    fresh = tuple(sorted(set(coloring.values())))
    if fresh_limit is not None and len(fresh) > fresh_limit:
        raise ConstructionError(f"need {len(fresh)} fresh colors, only {fresh_limit} available")
    keys = [(x.order[z], 1, ()) for z in range(n)]
    keys += [(ext.position, 0, support_key(ext, palette)) for ext in closed]
    ranked = sorted(range(n + m), key=lambda v: keys[v])
    order = [0] * (n + m)
    for r, v in enumerate(ranked):
        order[v] = r
    rows = list(x.colors)
    for i, ext in enumerate(closed):
        rows.append(tuple(ext.alpha) + tuple(coloring[(j, i)] for j in range(i)))
    y = FinStructure(x.kind, n + m, (), tuple(rows), tuple(order))
    table = []
    for h, act_h in zip(auts, actions):
        table.append((h, tuple(h) + tuple(n + i for i in act_h)))
    op = ExtensionOperator(Embedding(x, y, tuple(range(n))), tuple(table))
    realization = tuple((ext, n + index[ext]) for ext in dict.fromkeys(exts))
    res = EResult(y, op.embedding, op, realization, tuple(closed), fresh)
    if not c.member(y):
        raise ConstructionError("E(X) has a monochromatic triangle")
    if not op.verify():
        raise ConstructionError("extended automorphisms are not automorphisms of E(X)")
    return res


# -- extensible chains -------------------------------------------------------------


@dataclass
class ExtChain:
    """Stages ``U_0 ⊊ U_1 ⊊ ...`` (each the initial substructure of the next),
    automorphism families and transfers ``transfers[(a, b)][h] = s_a^b(h)``.

    ``limit`` marks an appended limit index, whose stage repeats the previous
    one.
    """

    stages: list[FinStructure]
    families: list[list[Perm]]
    transfers: dict[tuple[int, int], dict[Perm, Perm]]
    limit: int | None = None
    metadata: list[dict] = field(default_factory=list)

    def s(self, a: int, b: int, h: Sequence[int]) -> Perm:
        if a == b:
            return tuple(h)
        return self.transfers[(a, b)][tuple(h)]

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"stages": [to_doc(st) for st in self.stages],
                "families": [[list(h) for h in fam] for fam in self.families],
                "transfers": [[a, b, [[list(h), list(t)] for h, t in sorted(tab.items())]]
                              for (a, b), tab in sorted(self.transfers.items())],
                "limit": self.limit, "metadata": self.metadata}


def verify_chain(chain: ExtChain) -> None:
    """Raise :class:`ChainError` at the first violated invariant: proper
    inclusions, automorphism families, ``h ⊆ s(h)``, then coherence."""
    st = chain.stages
    m = len(st)
    if len(chain.families) != m:
        raise ChainError("families", (m,), "one family per stage required")
    for a in range(m - 1):
        lo, hi = st[a], st[a + 1]
        if a + 1 == chain.limit:
            if hi != lo:
                raise ChainError("inclusion", (a, a + 1), "limit stage must equal the union")
            continue
        if hi.n <= lo.n or induced_substructure(hi, range(lo.n)) != lo:
            raise ChainError("inclusion", (a, a + 1), "stage is not a proper initial extension")
    for a, fam in enumerate(chain.families):
        for h in fam:
            if len(h) != st[a].n or not is_embedding(st[a], st[a], h):
                raise ChainError("automorphism", (a,), f"{list(h)} is not an automorphism")
    for a, b in itertools.combinations(range(m), 2):
        tab = chain.transfers.get((a, b))
        if tab is None:
            raise ChainError("transfer", (a, b), "missing transfer map")
        for h in chain.families[a]:
            t = tab.get(h)
            if t is None or t not in chain.families[b]:
                raise ChainError("transfer", (a, b), f"{list(h)} has no image in the family")
            if t[:len(h)] != h:
                raise ChainError("extension", (a, b), f"s({list(h)}) does not extend it")
    for a, b, g in itertools.combinations(range(m), 3):
        for h in chain.families[a]:
            if chain.s(b, g, chain.s(a, b, h)) != chain.s(a, g, h):
                raise ChainError("coherence", (a, b, g), f"differs at {list(h)}")


def _lift(x: FinStructure, sub: Sequence[int], ext0: OnePointExtension, qn: Sequence[int],
          stage: int) -> OnePointExtension:
    """Extension of ``x`` restricting to ``ext0`` on ``sub``; the other points
    receive pairwise different colors from ``qn`` avoiding ``ext0``'s."""
    avoid = set(ext0.alpha)
    pool = [col for col in qn if col not in avoid]
    rest = [v for v in range(x.n) if v not in set(sub)]
    if len(pool) < len(rest):
        raise ConstructionError(f"slack exhausted at stage {stage}: need {len(rest)} spare "
                                f"colors, have {len(pool)}")
    alpha = [0] * x.n
    for i, v in enumerate(sub):
        alpha[v] = ext0.alpha[i]
    for v, col in zip(rest, pool):
        alpha[v] = col
    below = sorted((v for i, v in enumerate(sub) if ext0.base.order[i] < ext0.position),
                   key=lambda v: x.order[v])
    position = x.order[below[-1]] + 1 if below else 0
    return OnePointExtension(x, tuple(alpha), position)


def default_selector(k: int = 1) -> Callable:
    """All extensions of subsets with at most ``k`` points colored from the
    stage palette."""
    c = tf_labeled_ordered()

    def select(x: FinStructure, palette: Sequence[int]):
        for sub in subsets_upto(x.n, k):
            for ext0 in c.extensions(induced_substructure(x, sub), palette):
                yield sub, ext0
    return select


def _rename_new_edges(y: FinStructure, n_old: int, mapping: dict[int, int]) -> FinStructure:
    rows = [row if j < n_old else
            tuple(col if i < n_old else mapping[col] for i, col in enumerate(row))
            for j, row in enumerate(y.colors)]
    return FinStructure(y.kind, y.n, (), tuple(rows), y.order)


def build_g_extensible_chain(u0: FinStructure, g: Iterable[Sequence[int]] | None, stages: int,
                             q_schedule: Sequence, selector: Callable | None = None,
                             k: int = 1, margin: int = 1) -> ExtChain:
    """Iterate :func:`e_of_x` ``stages`` times starting from ``u0``.

    ``q_schedule[n]`` is the palette of stage ``n``; the colors available at
    stage ``n`` are that palette plus the colors earlier stages introduced
    between new points.  Each selected extension of a subset is lifted to the
    whole stage with spare colors, and the fresh colors of each stage are
    renamed into a band above every palette and every color used so far.
    """
    c = tf_labeled_ordered()
    c.check_kind(u0)
    if not c.member(u0):
        raise RejectedInput("u0 has a monochromatic triangle")
    if stages < 1:
        raise RejectedInput("at least one stage is required")
    palettes = [color_budget(p) for p in q_schedule]
    if len(palettes) < stages:
        raise RejectedInput(f"q schedule lists {len(palettes)} palettes, need {stages}")
    for i in range(len(palettes) - 1):
        lo, hi = set(palettes[i]), set(palettes[i + 1])
        if not lo < hi or len(hi - lo) < margin:
            raise RejectedInput(f"palette {i + 1} must strictly extend palette {i} "
                                f"by at least {margin} colors")
    select = selector or default_selector(k)
    fam = _as_auts(u0, g)
    chain = ExtChain([u0], [fam], {})
    bands: set[int] = set()
    ceiling = max([*itertools.chain.from_iterable(palettes), *u0.colors_used()], default=-1)
    for stage in range(stages):
        x = chain.stages[-1]
        qn = sorted(set(palettes[stage]) | bands)
        lifted = [_lift(x, sub, ext0, qn, stage) for sub, ext0 in select(x, palettes[stage])]
        res = e_of_x(x, qn, lifted, chain.families[-1])
        rename = {f: ceiling + 1 + i for i, f in enumerate(res.fresh_colors)}
        ceiling += len(rename)
        bands |= set(rename.values())
        y = _rename_new_edges(res.y, x.n, rename)
        new_fam = [ht for _, ht in res.op.table]
        chain.stages.append(y)
        chain.families.append(new_fam)
        chain.metadata.append({"stage": stage, "q": qn, "extensions": len(lifted),
                               "newPoints": y.n - x.n,
                               "renaming": [[f, t] for f, t in sorted(rename.items())]})
        b = stage + 1
        step = dict(res.op.table)
        chain.transfers[(stage, b)] = step
        for a in range(stage):
            chain.transfers[(a, b)] = {h: step[t] for h, t in chain.transfers[(a, stage)].items()}
    verify_chain(chain)
    top = len(chain.stages) - 1
    for h in chain.families[0]:
        if chain.s(0, top, h)[:u0.n] != h:
            raise ConstructionError("colimit identity fails")
    return chain


@dataclass(frozen=True)
class LimitReport:
    chain: ExtChain
    family_size: int
    bound: int  # sum of the sizes of the earlier families


def chain_limit(chain: ExtChain) -> LimitReport:
    """Append a limit index: the stage is the union of the (finite) chain and
    ``s_a^δ(h)`` is the union of all ``s_a^b(h)`` for ``a < b < δ``."""
    verify_chain(chain)
    st = chain.stages
    top = len(st) - 1
    d = top + 1
    transfers = {key: dict(tab) for key, tab in chain.transfers.items()}
    new_fam: list[Perm] = []
    for a in range(d):
        tab = {}
        for h in chain.families[a]:
            union: dict[int, int] = {}
            for b in range(a + 1, d):
                for v, w in enumerate(chain.s(a, b, h)):
                    if union.setdefault(v, w) != w:
                        raise ChainError("union", (a, b), f"images of {list(h)} disagree")
            if a == top:
                union = dict(enumerate(h))
            t = tuple(union[v] for v in range(st[top].n))
            tab[h] = t
            if t not in new_fam:
                new_fam.append(t)
        transfers[(a, d)] = tab
    out = ExtChain(st + [st[top]], [list(f) for f in chain.families] + [new_fam], transfers,
                   limit=d, metadata=list(chain.metadata))
    verify_chain(out)
    return LimitReport(out, len(new_fam), sum(len(f) for f in chain.families))


# -- closing off -------------------------------------------------------------------


@dataclass(frozen=True)
class ClosingResult:
    u: FinStructure
    subset: tuple[int, ...]
    family: tuple[Perm, ...]  # automorphisms of w
    restricted: tuple[Perm, ...]  # the same, as automorphisms of u
    rounds: int

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"u": to_doc(self.u), "subset": list(self.subset),
                "family": [list(h) for h in self.family],
                "restricted": [list(h) for h in self.restricted], "rounds": self.rounds}


def closing_off(w: FinStructure, x: Iterable[int], h0: Iterable[Sequence[int]] = (),
                k: int = 2, bound: int = AUT_BOUND) -> ClosingResult:
    """Grow ``x`` to a set closed under a family ``H`` of automorphisms of
    ``w`` such that every partial isomorphism of ``w`` with at most ``k``
    points, all inside the set, extends to a member of ``H``.

    Partial isomorphisms may map into all of ``w``: this is what lets a
    single point grow to its whole orbit.  Each round either enlarges the set
    or ends the iteration.
    """
    k = min(k, w.n)
    hc = homogeneity_check(w, k, bound)
    if isinstance(hc, PartialIso):
        raise RejectedInput(f"w is not homogeneous at level {k}: {hc.to_doc()} does not extend")
    s = set(int(v) for v in x)
    if any(not 0 <= v < w.n for v in s):
        raise RejectedInput("x must lie inside the universe of w")
    fam = _as_auts(w, list(h0)) if h0 else []
    rounds = 0
    while True:
        rounds += 1
        if rounds > max(w.n, 1) + 1:
            raise ConstructionError("closing off did not stabilize")
        frontier = list(s)
        while frontier:
            v = frontier.pop()
            for h in fam:
                if h[v] not in s:
                    s.add(h[v])
                    frontier.append(h[v])
        before = len(fam)
        pts = sorted(s)
        for size in range(1, min(k, len(pts)) + 1):
            for dom in itertools.combinations(pts, size):
                sub = induced_substructure(w, dom)
                for emb in iter_embeddings(sub, w):
                    if any(all(h[a] == b for a, b in zip(dom, emb.map)) for h in fam):
                        continue
                    ext = extend_partial_iso(w, PartialIso(w, tuple(zip(dom, emb.map))))
                    fam.append(ext.map)
        if len(fam) == before or all(h[v] in s for h in fam[before:] for v in s):
            break
    pts = sorted(s)
    pos = {v: i for i, v in enumerate(pts)}
    for h in fam:
        if {h[v] for v in pts} != s:
            raise ConstructionError("family does not preserve the closed set")
    restricted = tuple(dict.fromkeys(tuple(pos[h[v]] for v in pts) for h in fam))
    u = induced_substructure(w, pts)
    # the restrictions must witness homogeneity of u itself
    for size in range(1, min(k, u.n) + 1):
        for dom in itertools.combinations(range(u.n), size):
            for emb in iter_embeddings(induced_substructure(u, dom), u):
                if not any(all(r[a] == b for a, b in zip(dom, emb.map)) for r in restricted):
                    raise ConstructionError("restricted family misses a partial isomorphism")
    return ClosingResult(u, tuple(pts), tuple(fam), restricted, rounds)
