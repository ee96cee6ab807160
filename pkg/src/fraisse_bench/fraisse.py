"""Finite approximations of Fraïssé limits.

``katetov_step`` adds points until every one-point extension of every small
subset is realized; iterating it gives a chain whose consecutive stages are
certified by :class:`InjectivityCertificate`.  ``iterate_self_embedding``
builds a finite chain by repeatedly pushing an embedding forward along a
copy of its source.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .classes import DEFAULT_BUDGET, ClassSpec, color_budget
from .errors import ConstructionError, RejectedInput
from .morphisms import Embedding, find_embeddings, is_embedding
from .structures import FinStructure, OnePointExtension, induced_substructure


def realizes(y: FinStructure, subset: Sequence[int], ext: OnePointExtension, p: int) -> bool:
    """Does ``p`` (outside ``subset``) realize ``ext`` over ``subset``?

    For ordered kinds only the position relative to ``subset`` counts.
    """
    if p in subset:
        return False
    if y.kind.is_labeled:
        alpha = ext.alpha
        for i, x in enumerate(subset):
            if y.color(x, p) != alpha[i]:
                return False
        if y.order is not None:
            base_order = ext.base.order
            op = y.order[p]
            for i, x in enumerate(subset):
                if (y.order[x] < op) != (base_order[i] < ext.position):
                    return False
        return True
    f = list(subset) + [p]
    m = len(subset)
    for (sym, ar), (_, rel) in zip(y.kind.signature, y.relations):
        for t in itertools.product(range(m + 1), repeat=ar):
            if m in t and ((sym, t) in ext.tuples) != (tuple(f[i] for i in t) in rel):
                return False
    return True


def subsets_upto(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Subsets of ``0..n-1`` with at most ``k`` elements, by size then
    lexicographically."""
    for size in range(min(k, n) + 1):
        yield from itertools.combinations(range(n), size)


def katetov_step(c: ClassSpec, x: FinStructure, k: int, budget=DEFAULT_BUDGET
                 ) -> tuple[FinStructure, Embedding]:
    """A superstructure of ``x`` realizing every extension (colors from the
    budget) of every subset of ``x`` with at most ``k`` points.

    Extensions are handled greedily, subsets first by size and then
    lexicographically, extensions in enumeration order; an unrealized one
    gets a new point through the class's free completion.
    """
    c.check_kind(x)
    if not c.member(x):
        raise RejectedInput(f"seed is not a member of {c.id}")
    colors = color_budget(budget)
    y = x
    for sub in subsets_upto(x.n, k):
        base = induced_substructure(x, sub)
        for ext in c.extensions(base, colors):
            if any(realizes(y, sub, ext, p) for p in range(y.n)):
                continue
            grown = c.free_extend(y, sub, ext, colors)
            if not c.extension_ok(grown):
                raise ConstructionError(
                    f"no room for extension {ext.to_doc()} of subset {list(sub)} in {c.id}; "
                    "enlarge the budget")
            y = grown.realize()
    return y, Embedding(x, y, tuple(range(x.n)))


@dataclass(frozen=True)
class InjectivityCertificate:
    u: FinStructure
    v: FinStructure
    k: int
    budget: tuple[int, ...]
    # (subset of u, extension of the induced subset, realizing point of v)
    witnesses: tuple[tuple[tuple[int, ...], OnePointExtension, int], ...]

    def embeddings(self) -> Iterator[Embedding]:
        for sub, ext, p in self.witnesses:
            yield Embedding(ext.realize(), self.v, tuple(sub) + (p,))

    def verify(self) -> bool:
        for (sub, _, _), emb in zip(self.witnesses, self.embeddings()):
            if emb.map[:len(sub)] != tuple(sub) or not emb.is_valid():
                return False
        return True

    def to_doc(self) -> dict:
        return {"k": self.k, "budget": list(self.budget), "uSize": self.u.n, "vSize": self.v.n,
                "witnesses": [{"subset": list(sub), "extension": ext.to_doc(), "point": p}
                              for sub, ext, p in self.witnesses]}


@dataclass(frozen=True)
class InjectivityFailure:
    subset: tuple[int, ...]
    extension: OnePointExtension

    def to_doc(self) -> dict:
        return {"subset": list(self.subset), "extension": self.extension.to_doc()}


def injectivity_certificate(u: FinStructure, v: FinStructure, c: ClassSpec, k: int,
                            budget=DEFAULT_BUDGET) -> InjectivityCertificate | InjectivityFailure:
    """Witness table for ``u ⊆ v``: every extension of every subset of ``u``
    with at most ``k`` points is realized in ``v``.  Returns the first
    unrealized (subset, extension) otherwise."""
    c.check_kind(u)
    c.check_kind(v)
    if u.n > v.n or induced_substructure(v, range(u.n)) != u:
        raise RejectedInput("u must be the substructure of v on its first points")
    colors = color_budget(budget)
    witnesses = []
    for sub in subsets_upto(u.n, k):
        base = induced_substructure(u, sub)
        for ext in c.extensions(base, colors):
            p = next((p for p in range(v.n) if realizes(v, sub, ext, p)), None)
            if p is None:
                return InjectivityFailure(sub, ext)
            witnesses.append((sub, ext, p))
    return InjectivityCertificate(u, v, k, colors, tuple(witnesses))


@dataclass
class LimitApprox:
    class_spec: ClassSpec
    stages: list[FinStructure]
    inclusions: list[Embedding]
    certificates: list[InjectivityCertificate | InjectivityFailure]
    level: int
    budget: tuple[int, ...]

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"class": self.class_spec.id, "level": self.level, "budget": list(self.budget),
                "stages": [to_doc(s) for s in self.stages],
                "certificates": [
                    {"certified": isinstance(cert, InjectivityCertificate), **cert.to_doc()}
                    for cert in self.certificates]}


def build_limit_approx(c: ClassSpec, seed: FinStructure, steps: int, k: int,
                       budget=DEFAULT_BUDGET) -> LimitApprox:
    if steps < 0:
        raise RejectedInput("steps must be non-negative")
    colors = color_budget(budget)
    stages, incs, certs = [seed], [], []
    c.check_kind(seed)
    if not c.member(seed):
        raise RejectedInput(f"seed is not a member of {c.id}")
    for _ in range(steps):
        y, inc = katetov_step(c, stages[-1], k, colors)
        certs.append(injectivity_certificate(stages[-1], y, c, k, colors))
        stages.append(y)
        incs.append(inc)
    return LimitApprox(c, stages, incs, certs, k, colors)


# -- chains of self-embeddings ------------------------------------------------------


@dataclass
class EmbeddingChain:
    """``stages[0] -> stages[1] -> ...`` with ``maps[(i, j)]`` the composite
    from stage ``i`` to stage ``j``.  ``copies[i]`` locates the copy of the
    source structure along which stage ``i`` is pushed forward."""

    stages: list[FinStructure]
    maps: dict[tuple[int, int], Embedding] = field(default_factory=dict)
    copies: list[tuple[int, ...]] = field(default_factory=list)

    def bonding(self, i: int) -> Embedding:
        return self.maps[(i, i + 1)]

    def coherent(self) -> bool:
        m = len(self.stages) - 1
        for a, b, g in itertools.combinations(range(m + 1), 3):
            if self.maps[(b, g)].compose(self.maps[(a, b)]).map != self.maps[(a, g)].map:
                return False
        return True

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"stages": [to_doc(s) for s in self.stages],
                "maps": [[i, j, list(e.map)] for (i, j), e in sorted(self.maps.items())],
                "copies": [list(cp) for cp in self.copies]}


def _pushout(c: ClassSpec, big: FinStructure, copy: Sequence[int], e: Embedding,
             colors) -> tuple[FinStructure, list[int]]:
    """Glue ``e.target`` onto ``big`` along ``copy ∘ e⁻¹``; returns the new
    structure and the map ``j`` from ``e.target`` into it."""
    target = e.target
    j: dict[int, int] = {e.map[x]: copy[x] for x in range(e.source.n)}
    y = big
    for t in range(target.n):
        if t in j:
            continue
        placed = sorted(j, key=lambda s: j[s])
        sub = [j[s] for s in placed]
        base = induced_substructure(y, sub)
        if target.kind.is_labeled:
            alpha = tuple(target.color(s, t) for s in placed)
            pos = None
            if target.order is not None:
                pos = sum(1 for s in placed if target.order[s] < target.order[t])
            ext = OnePointExtension(base, alpha, pos)
        else:
            idx = {s: i for i, s in enumerate(placed)}
            idx[t] = len(placed)
            tuples = set()
            for (sym, ar), (_, rel) in zip(target.kind.signature, target.relations):
                for tup in rel:
                    if t in tup and all(v in idx for v in tup):
                        tuples.add((sym, tuple(idx[v] for v in tup)))
            ext = OnePointExtension(base, tuples=frozenset(tuples))
        grown = c.free_extend(y, sub, ext, colors)
        if not c.extension_ok(grown):
            raise ConstructionError(f"free completion failed while gluing point {t}")
        y = grown.realize()
        j[t] = y.n - 1
    return y, [j[t] for t in range(target.n)]


def iterate_self_embedding(u: FinStructure, e: Embedding, m: int, c: ClassSpec,
                           copy: Sequence[int] | None = None,
                           budget=DEFAULT_BUDGET) -> EmbeddingChain:
    """Chain ``U_0 = u ⊆ U_1 ⊆ ... ⊆ U_m`` where ``U_{i+1}`` glues a fresh
    copy of ``e.target`` onto ``U_i`` along the current copy of ``u``.

    Each bonding map is an inclusion that restricts to a relabeled copy of
    ``e``.  ``copy`` is an embedding of ``u`` into ``e.target`` fixing where
    the next copy sits; by default the least one whose image differs from
    that of ``e`` (or ``e`` itself when there is none).
    """
    if e.source != u or not e.is_valid():
        raise RejectedInput("e must be a valid embedding with source u")
    if m < 0:
        raise RejectedInput("number of copies must be non-negative")
    c.check_kind(u)
    colors = color_budget(budget)
    if copy is None:
        opts = find_embeddings(u, e.target)
        other = [f.map for f in opts if set(f.map) != set(e.map)]
        copy = other[0] if other else e.map
    copy = tuple(copy)
    if not is_embedding(u, e.target, copy):
        raise RejectedInput("copy must embed u into the target of e")
    chain = EmbeddingChain([u], {}, [tuple(range(u.n))])
    for i in range(m):
        big = chain.stages[-1]
        y, j = _pushout(c, big, chain.copies[-1], e, colors)
        chain.stages.append(y)
        chain.copies.append(tuple(j[x] for x in copy))
        # the square j ∘ e = inclusion ∘ (current copy) commutes by construction
        if tuple(j[x] for x in e.map) != chain.copies[-2]:
            raise ConstructionError("pushout square does not commute")
    for a in range(m + 1):
        st = chain.stages[a]
        chain.maps[(a, a)] = Embedding(st, st, tuple(range(st.n)))
    for b in range(1, m + 1):
        bond = Embedding(chain.stages[b - 1], chain.stages[b], tuple(range(chain.stages[b - 1].n)))
        for a in range(b):
            chain.maps[(a, b)] = bond.compose(chain.maps[(a, b - 1)])
    return chain
