"""Embeddings, automorphisms, canonical forms, ages and homogeneity.

Embeddings are found by backtracking over target points in increasing
order, so every list returned here is sorted lexicographically by the map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import RejectedInput, ResourceLimit
from .structures import FinStructure, induced_substructure, relabel

AUT_BOUND = 10


@dataclass(frozen=True)
class Embedding:
    source: FinStructure
    target: FinStructure
    map: tuple[int, ...]

    def __call__(self, x: int) -> int:
        return self.map[x]

    def compose(self, inner: Embedding) -> Embedding:
        """``self`` after ``inner``."""
        if inner.target != self.source:
            raise RejectedInput("composition needs matching target and source")
        return Embedding(inner.source, self.target, tuple(self.map[y] for y in inner.map))

    def is_valid(self) -> bool:
        return is_embedding(self.source, self.target, self.map)

    def inverse(self) -> Embedding:
        if self.source.n != self.target.n:
            raise RejectedInput("only bijective embeddings have inverses")
        inv = [0] * len(self.map)
        for x, y in enumerate(self.map):
            inv[y] = x
        return Embedding(self.target, self.source, tuple(inv))

    def to_doc(self) -> list[int]:
        return list(self.map)


def _check_kinds(a: FinStructure, b: FinStructure) -> None:
    if a.kind != b.kind:
        raise RejectedInput(f"kind mismatch: {a.kind.describe()} vs {b.kind.describe()}")


def preserves(a: FinStructure, b: FinStructure, pairs: Sequence[tuple[int, int]]) -> bool:
    """Whether ``x -> y`` over ``pairs`` is an isomorphism between the
    induced substructures of ``a`` and ``b`` on its domain and image."""
    dom = [x for x, _ in pairs]
    img = [y for _, y in pairs]
    if len(set(dom)) != len(dom) or len(set(img)) != len(img):
        return False
    if any(not 0 <= x < a.n for x in dom) or any(not 0 <= y < b.n for y in img):
        return False
    if a.kind.is_labeled:
        for (x1, y1), (x2, y2) in itertools.combinations(pairs, 2):
            if a.color(x1, x2) != b.color(y1, y2):
                return False
            if a.order is not None and (a.order[x1] < a.order[x2]) != (b.order[y1] < b.order[y2]):
                return False
        return True
    f = dict(pairs)
    back = {y: x for x, y in pairs}
    for (sym, ta), (_, tb) in zip(a.relations, b.relations):
        inside_a = {tuple(f[x] for x in t) for t in ta if all(x in f for x in t)}
        inside_b = {t for t in tb if all(y in back for y in t)}
        if inside_a != inside_b:
            return False
    return True


def is_embedding(a: FinStructure, b: FinStructure, f: Sequence[int]) -> bool:
    if a.kind != b.kind or len(f) != a.n:
        return False
    return preserves(a, b, list(enumerate(f)))


class _Matcher:
    """Incremental consistency test for extending a partial map by one point."""

    def __init__(self, a: FinStructure, b: FinStructure):
        self.a, self.b = a, b
        self.labeled = a.kind.is_labeled
        if not self.labeled:
            self.arities = [ar for _, ar in a.kind.signature]
            self.binary = all(ar <= 2 for ar in self.arities)
            self.rels_a = [t for _, t in a.relations]
            self.rels_b = [t for _, t in b.relations]

    def ok(self, f: list[int], x: int, y: int) -> bool:
        """May ``x -> y`` be added to ``f`` (defined on ``0..x-1``)?"""
        a, b = self.a, self.b
        if self.labeled:
            ca = a.colors[x]
            for x2 in range(x):
                y2 = f[x2]
                if ca[x2] != b.color(y2, y):
                    return False
            if a.order is not None:
                ox, oy = a.order[x], b.order[y]
                for x2 in range(x):
                    if (a.order[x2] < ox) != (b.order[f[x2]] < oy):
                        return False
            return True
        if self.binary:
            for ar, ra, rb in zip(self.arities, self.rels_a, self.rels_b):
                if ar == 1:
                    if ((x,) in ra) != ((y,) in rb):
                        return False
                    continue
                if ((x, x) in ra) != ((y, y) in rb):
                    return False
                for x2 in range(x):
                    y2 = f[x2]
                    if ((x, x2) in ra) != ((y, y2) in rb) or ((x2, x) in ra) != ((y2, y) in rb):
                        return False
            return True
        g = f[:x] + [y]
        for ar, ra, rb in zip(self.arities, self.rels_a, self.rels_b):
            for t in itertools.product(range(x + 1), repeat=ar):
                if x in t and (t in ra) != (tuple(g[i] for i in t) in rb):
                    return False
        return True


def iter_embeddings(a: FinStructure, b: FinStructure,
                    fixed: Mapping[int, int] | None = None) -> Iterator[Embedding]:
    """Embeddings of ``a`` into ``b`` in lexicographic order of the map,
    optionally forced to agree with ``fixed``."""
    _check_kinds(a, b)
    fixed = dict(fixed or {})
    if a.n > b.n:
        return
    matcher = _Matcher(a, b)
    f = [0] * a.n
    used = [False] * b.n

    def rec(x: int):
        if x == a.n:
            yield Embedding(a, b, tuple(f))
            return
        cands = [fixed[x]] if x in fixed else range(b.n)
        for y in cands:
            if not 0 <= y < b.n or used[y]:
                continue
            if matcher.ok(f, x, y):
                f[x] = y
                used[y] = True
                yield from rec(x + 1)
                used[y] = False

    yield from rec(0)


def find_embeddings(a: FinStructure, b: FinStructure, limit: int | None = None,
                    fixed: Mapping[int, int] | None = None) -> list[Embedding]:
    return list(itertools.islice(iter_embeddings(a, b, fixed), limit))


def is_isomorphic(a: FinStructure, b: FinStructure) -> bool:
    if a.kind != b.kind or a.n != b.n:
        return False
    return bool(find_embeddings(a, b, limit=1))


def automorphisms(s: FinStructure, bound: int = AUT_BOUND) -> list[Embedding]:
    if s.n > bound:
        raise ResourceLimit(f"automorphism search limited to n <= {bound}, got {s.n}")
    return find_embeddings(s, s)


# -- canonical forms ------------------------------------------------------------


def _binary(s: FinStructure) -> bool:
    return s.kind.is_labeled or all(ar <= 2 for _, ar in s.kind.signature)


def _self_code(s: FinStructure, v: int) -> tuple:
    if s.kind.is_labeled:
        return ()
    out = []
    for (_, ar), (_, t) in zip(s.kind.signature, s.relations):
        out.append(int((v,) * ar in t))
    return tuple(out)


def _pair_code(s: FinStructure, u: int, v: int) -> tuple:
    """How a point ``v`` labeled later relates to ``u`` labeled earlier."""
    if s.kind.is_labeled:
        if s.order is not None:
            return (s.color(u, v), int(s.order[u] < s.order[v]))
        return (s.color(u, v),)
    out = []
    for (_, ar), (_, t) in zip(s.kind.signature, s.relations):
        if ar == 2:
            out.append(int((u, v) in t))
            out.append(int((v, u) in t))
    return tuple(out)


def canonical_labeling(s: FinStructure, bound: int = AUT_BOUND) -> tuple[int, ...]:
    """Sequence ``seq`` with ``seq[k]`` the point receiving label ``k`` in
    the lexicographically least relabeling.

    A relabeling is compared through its rows: row ``k`` is the self code of
    label ``k`` followed by its codes towards labels ``0..k-1``.  The search
    keeps, level by level, every labeled prefix whose rows are minimal, and
    merges prefixes that leave identical choices for the remaining points.
    """
    if s.n > bound:
        raise ResourceLimit(f"canonical labeling limited to n <= {bound}, got {s.n}")
    n = s.n
    if not _binary(s):
        return _canonical_brute(s)
    self_codes = [_self_code(s, v) for v in range(n)]
    pc = [[_pair_code(s, u, v) if u != v else () for v in range(n)] for u in range(n)]
    # state: labeled prefix -> profile of every unlabeled point towards it
    states = [()]
    for _level in range(n):
        best = None
        nxt: dict = {}
        for seq in states:
            chosen = set(seq)
            for v in range(n):
                if v in chosen:
                    continue
                row = (self_codes[v], tuple(pc[u][v] for u in seq))
                if best is None or row < best:
                    best = row
                    nxt = {}
                if row == best:
                    new = seq + (v,)
                    rest = tuple(w for w in range(n) if w not in chosen and w != v)
                    key = (frozenset(new), tuple(tuple(pc[u][w] for u in new) for w in rest))
                    nxt.setdefault(key, new)
        states = list(nxt.values())
    return min(states) if states else ()


def _canonical_brute(s: FinStructure) -> tuple[int, ...]:
    best_key, best_seq = None, ()
    for seq in itertools.permutations(range(s.n)):
        pos = [0] * s.n
        for k, v in enumerate(seq):
            pos[v] = k
        key = _structure_key(relabel(s, pos))
        if best_key is None or key < best_key:
            best_key, best_seq = key, seq
    return best_seq


def _structure_key(s: FinStructure) -> tuple:
    if s.kind.is_labeled:
        return (s.order or (), s.colors)
    return tuple(tuple(sorted(t)) for _, t in s.relations)


def canonicalize(s: FinStructure, bound: int = AUT_BOUND) -> FinStructure:
    seq = canonical_labeling(s, bound)
    pos = [0] * s.n
    for k, v in enumerate(seq):
        pos[v] = k
    return relabel(s, pos)


def age(s: FinStructure, k: int) -> list[FinStructure]:
    """Canonical representatives of the induced substructures of size
    ``1..k``, sorted by size and then by their serialized form."""
    if not 0 <= k <= s.n:
        raise RejectedInput(f"age bound must lie in 0..{s.n}")
    from .structures import serialize

    reps: dict[str, FinStructure] = {}
    for size in range(1, k + 1):
        for sub in itertools.combinations(range(s.n), size):
            c = canonicalize(induced_substructure(s, sub))
            reps.setdefault(serialize(c), c)
    return sorted(reps.values(), key=lambda c: (c.n, _structure_key(c)))


# -- partial isomorphisms and homogeneity -----------------------------------------


@dataclass(frozen=True)
class PartialIso:
    structure: FinStructure
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not preserves(self.structure, self.structure, self.pairs):
            raise RejectedInput(f"{list(self.pairs)} is not a partial isomorphism")

    @property
    def domain(self) -> tuple[int, ...]:
        return tuple(x for x, _ in self.pairs)

    @property
    def map(self) -> dict[int, int]:
        return dict(self.pairs)

    def to_doc(self) -> list[list[int]]:
        return [[x, y] for x, y in self.pairs]


def partial_iso(s: FinStructure, mapping: Mapping[int, int]) -> PartialIso:
    return PartialIso(s, tuple(sorted(mapping.items())))


def extend_partial_iso(s: FinStructure, p: PartialIso) -> Embedding | None:
    """The lexicographically least automorphism extending ``p``, or ``None``."""
    if p.structure != s:
        raise RejectedInput("partial isomorphism belongs to another structure")
    found = find_embeddings(s, s, limit=1, fixed=p.map)
    return found[0] if found else None


def iter_partial_isos(s: FinStructure, k: int) -> Iterator[PartialIso]:
    """Partial isomorphisms with domain size ``1..k``, ordered by size, then
    domain, then image."""
    for size in range(1, k + 1):
        for dom in itertools.combinations(range(s.n), size):
            sub = induced_substructure(s, dom)
            for emb in iter_embeddings(sub, s):
                yield PartialIso(s, tuple(zip(dom, emb.map)))


@dataclass(frozen=True)
class HomogeneityCertificate:
    structure: FinStructure
    k: int
    witnesses: tuple[tuple[PartialIso, Embedding], ...]

    def verify(self) -> bool:
        for p, g in self.witnesses:
            if not g.is_valid() or g.source != self.structure or g.target != self.structure:
                return False
            if any(g.map[x] != y for x, y in p.pairs):
                return False
        return True

    def to_doc(self) -> dict:
        return {"k": self.k, "witnesses": [{"partialIso": p.to_doc(), "automorphism": g.to_doc()}
                                           for p, g in self.witnesses]}


def homogeneity_check(s: FinStructure, k: int, bound: int = AUT_BOUND
                      ) -> HomogeneityCertificate | PartialIso:
    """A certificate covering every partial isomorphism of domain size at most
    ``k``, or the first one (in enumeration order) with no extension."""
    if s.n > bound:
        raise ResourceLimit(f"homogeneity check limited to n <= {bound}, got {s.n}")
    if not 0 <= k <= s.n:
        raise RejectedInput(f"k must lie in 0..{s.n}")
    auts = automorphisms(s, bound)
    witnesses = []
    for p in iter_partial_isos(s, k):
        g = next((g for g in auts if all(g.map[x] == y for x, y in p.pairs)), None)
        if g is None:
            return p
        witnesses.append((p, g))
    return HomogeneityCertificate(s, k, tuple(witnesses))
