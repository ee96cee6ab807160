"""One-point amalgams, class-level AP checks, tree amalgamation along a
chain, and amalgamation-base verdicts for concrete structures.

Layout convention for an amalgam of ``Z ∪ {a}`` and ``Z ∪ {b}``: the base
occupies ``0..n-1``, ``a`` is ``n`` and ``b`` is ``n+1``.  A glued amalgam
has ``n+1`` points and sends both ``a`` and ``b`` to ``n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .classes import DEFAULT_BUDGET, ClassSpec, color_budget, members
from .errors import RejectedInput, ResourceLimit
from .morphisms import Embedding
from .structures import (
    FinStructure,
    OnePointExtension,
    _unchecked,
    induced_substructure,
)

MAX_COMPLETION_TUPLES = 16
# colors tried after the budget is exhausted
ENLARGED_BUDGET = 64


@dataclass(frozen=True)
class Amalgam:
    base: FinStructure
    left: OnePointExtension
    right: OnePointExtension
    result: FinStructure
    left_emb: Embedding
    right_emb: Embedding

    @property
    def glued(self) -> bool:
        return self.result.n == self.base.n + 1

    def commutes(self) -> bool:
        n = self.base.n
        return self.left_emb.map[:n] == self.right_emb.map[:n]

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"glued": self.glued, "result": to_doc(self.result),
                "leftEmb": self.left_emb.to_doc(), "rightEmb": self.right_emb.to_doc()}


def _check_pair(z: FinStructure, ea: OnePointExtension, eb: OnePointExtension,
                c: ClassSpec) -> None:
    c.check_kind(z)
    if ea.base != z or eb.base != z:
        raise RejectedInput("both extensions must extend the given base")


def _glued(z, ea, eb) -> Amalgam:
    w = ea.realize()
    ident = tuple(range(z.n + 1))
    return Amalgam(z, ea, eb, w, Embedding(ea.realize(), w, ident),
                   Embedding(eb.realize(), w, ident))


def _two_point_order(z: FinStructure, pa: int, pb: int, a_first: bool) -> tuple[int, ...]:
    keys = [(z.order[x], 1, 0) for x in range(z.n)]
    keys.append((pa, 0, 0 if a_first else 1))
    keys.append((pb, 0, 1 if a_first else 0))
    ranked = sorted(range(z.n + 2), key=lambda x: keys[x])
    order = [0] * (z.n + 2)
    for r, x in enumerate(ranked):
        order[x] = r
    return tuple(order)


def completions(z: FinStructure, ea: OnePointExtension, eb: OnePointExtension,
                colors: Sequence[int]) -> Iterator[FinStructure]:
    """Every structure on ``Z ∪ {a, b}`` extending both one-point extensions,
    in the order: new edge color (or relation subset) ascending, then
    ``a < b`` before ``b < a`` when the order leaves it open.  Membership in
    a class is not checked here."""
    n = z.n
    if z.kind.is_relational:
        a, b = n, n + 1
        cands = []
        for sym, ar in z.kind.signature:
            for t in itertools.product(range(n + 2), repeat=ar):
                if a in t and b in t:
                    cands.append((sym, t))
        if len(cands) > MAX_COMPLETION_TUPLES:
            raise ResourceLimit(f"{len(cands)} candidate tuples exceed {MAX_COMPLETION_TUPLES}")
        side_b = {(sym, tuple(b if x == n else x for x in t)) for sym, t in eb.tuples}
        extra = set(ea.tuples) | side_b
        for mask in range(1 << len(cands)):
            chosen = extra | {cands[i] for i in range(len(cands)) if mask >> i & 1}
            rels = tuple((sym, tuples | frozenset(t for s2, t in chosen if s2 == sym))
                         for sym, tuples in z.relations)
            yield _unchecked(z.kind, n + 2, rels)
        return
    for q in colors:
        rows = z.colors + (tuple(ea.alpha), tuple(eb.alpha) + (q,))
        if z.order is None:
            yield _unchecked(z.kind, n + 2, (), rows, None)
            continue
        pa, pb = ea.position, eb.position
        firsts = (True, False) if pa == pb else (pa < pb,)
        for a_first in firsts:
            yield _unchecked(z.kind, n + 2, (), rows, _two_point_order(z, pa, pb, a_first))


def amalgamate_one_point(z: FinStructure, ea: OnePointExtension, eb: OnePointExtension,
                         c: ClassSpec, budget=DEFAULT_BUDGET) -> list[Amalgam]:
    """All amalgams within the budget: the glued one first (when the two
    extensions agree over ``Z``), then completions in ascending order.  An
    empty list means none within the budget, not impossibility."""
    _check_pair(z, ea, eb, c)
    out = []
    if ea == eb:
        out.append(_glued(z, ea, eb))
    n = z.n
    left = tuple(range(n + 1))
    right = tuple(range(n)) + (n + 1,)
    ra, rb = ea.realize(), eb.realize()
    for w in completions(z, ea, eb, color_budget(budget)):
        if c.member(w):
            out.append(Amalgam(z, ea, eb, w, Embedding(ra, w, left), Embedding(rb, w, right)))
    return out


def _has_amalgam(z, ea, eb, c: ClassSpec, colors) -> bool:
    # same search as amalgamate_one_point, stopping at the first hit
    return ea == eb or any(c.member(w) for w in completions(z, ea, eb, colors))


# -- class-level AP ---------------------------------------------------------------


@dataclass
class APReport:
    class_id: str
    max_size: int
    budget: tuple[int, ...]
    passed: bool
    pairs_checked: int = 0
    enlarged: int = 0  # pairs that needed colors beyond the budget
    failure: tuple | None = None  # (Z, ea, eb)
    method: str = "generic"

    def to_doc(self) -> dict:
        from .structures import to_doc
        doc = {"class": self.class_id, "maxSize": self.max_size, "budget": list(self.budget),
               "passed": self.passed, "pairsChecked": self.pairs_checked,
               "enlarged": self.enlarged, "method": self.method}
        if self.failure is not None:
            z, ea, eb = self.failure
            doc["witness"] = {"base": to_doc(z), "left": ea.to_doc(), "right": eb.to_doc()}
        return doc


def _allowed_table(c: ClassSpec, width: int) -> np.ndarray:
    """``T[x, y]`` has bit ``q`` set iff a new edge of color ``q`` is allowed
    opposite two edges of colors ``x`` and ``y``."""
    tab = np.zeros((width, width), dtype=np.uint64)
    for x in range(width):
        for y in range(x, width):
            bits = 0
            for q in range(width):
                if c.pair_ok(q) and c.triple_ok(x, y, q):
                    bits |= 1 << q
            tab[x, y] = tab[y, x] = bits
    return tab


def _mask(colors: Sequence[int]) -> int:
    m = 0
    for q in colors:
        m |= 1 << q
    return m


def ap_check(c: ClassSpec, n: int = 3, budget=DEFAULT_BUDGET, method: str = "auto") -> APReport:
    """Check that every pair of one-point extensions of every member of size
    at most ``n`` (colors from the budget) has an amalgam.

    Colors beyond the budget (up to 64) are tried when the budget itself is
    exhausted; ``enlarged`` counts those pairs.  ``method`` selects the
    enumeration: ``generic`` builds every completion, ``vector`` evaluates
    triangle-local classes with bitmask tables, ``symmetric`` enumerates
    color-symmetric classes up to renaming of colors.
    """
    colors = color_budget(budget)
    if method == "auto":
        if c.kind.is_relational:
            method = "generic"
        elif c.color_symmetric:
            method = "symmetric"
        else:
            method = "vector"
    if method != "generic" and (not c.triangle_local or c.kind.is_relational):
        raise RejectedInput(f"method {method} needs a triangle-local labeled class")
    if max(colors, default=0) >= ENLARGED_BUDGET:
        raise RejectedInput(f"colors must stay below {ENLARGED_BUDGET}")
    report = APReport(c.id, n, colors, True, method=method)
    if method == "generic":
        _ap_generic(c, n, colors, report)
    elif method == "vector":
        _ap_vector(c, n, colors, report)
    elif method == "symmetric":
        _ap_symmetric(c, n, colors, report)
    else:
        raise RejectedInput(f"unknown method {method!r}")
    return report


def _ap_generic(c, n, colors, report):
    wide = tuple(range(ENLARGED_BUDGET)) if c.kind.is_labeled else colors
    for size in range(n + 1):
        for z in members(c, size, colors):
            exts = list(c.extensions(z, colors))
            for i, ea in enumerate(exts):
                for eb in exts[i:]:
                    report.pairs_checked += 1
                    if _has_amalgam(z, ea, eb, c, colors):
                        continue
                    if c.kind.is_labeled and _has_amalgam(z, ea, eb, c, wide):
                        report.enlarged += 1
                        continue
                    report.passed = False
                    report.failure = (z, ea, eb)
                    return


def _ap_vector(c, n, colors, report):
    if c.kind.ordered:
        raise RejectedInput("vector method covers unordered classes")
    tab = _allowed_table(c, ENLARGED_BUDGET)
    qmask = np.uint64(_mask(colors))
    for size in range(n + 1):
        for z in members(c, size, colors):
            exts = list(c.extensions(z, colors))
            if not exts:
                continue
            alphas = np.array([e.alpha for e in exts], dtype=np.int64).reshape(len(exts), size)
            m = len(exts)
            acc = np.full((m, m), np.uint64(~np.uint64(0)), dtype=np.uint64)
            for x in range(size):
                col = alphas[:, x]
                acc &= tab[col[:, None], col[None, :]]
            same = np.eye(m, dtype=bool)  # identical extensions glue
            upper = np.triu(np.ones((m, m), dtype=bool))
            report.pairs_checked += int(upper.sum())
            within = (acc & qmask) != 0
            anywhere = acc != 0
            report.enlarged += int((upper & ~same & ~within & anywhere).sum())
            bad = upper & ~same & ~anywhere
            if bad.any():
                i, j = map(int, np.argwhere(bad)[0])
                report.passed = False
                report.failure = (z, exts[i], exts[j])
                return


def _restricted_growth(length: int, start: int, limit: int) -> Iterator[tuple[int, ...]]:
    """Color sequences in which each new color is the least unused one."""
    seq = [0] * length

    def rec(i: int, used: int):
        if i == length:
            yield tuple(seq), used
            return
        for col in range(min(used + 1, limit)):
            seq[i] = col
            yield from rec(i + 1, max(used, col + 1))

    yield from rec(0, start)


def _ap_symmetric(c, n, colors, report):
    """Renaming colors injectively within the budget preserves membership and
    amalgams, so it suffices to take the budget's first colors in order of
    first appearance across (base, left, right)."""
    palette = list(colors)
    k = len(palette)
    for size in range(n + 1):
        npairs = size * (size - 1) // 2
        for zseq, used in _restricted_growth(npairs, 0, k):
            it = iter(zseq)
            rows = tuple(tuple(palette[next(it)] for _ in range(j)) for j in range(size))
            orders = itertools.permutations(range(size)) if c.kind.ordered else [None]
            for order in orders:
                z = FinStructure(c.kind, size, (), rows, None if order is None else tuple(order))
                if not c.member(z):
                    continue
                if _ap_symmetric_base(c, z, used, palette, report):
                    return


def _ap_symmetric_base(c, z, used, palette, report) -> bool:
    # the new edge color is constrained only by the two color vectors, so the
    # color test is shared by every pair of positions
    size = z.n
    positions = range(size + 1) if c.kind.ordered else [None]
    for aseq, used_a in _restricted_growth(size, used, len(palette)):
        alpha = tuple(palette[x] for x in aseq)
        lefts = [e for e in (OnePointExtension(z, alpha, p) for p in positions)
                 if c.extension_ok(e)]
        if not lefts:
            continue
        for bseq, _ in _restricted_growth(size, used_a, len(palette)):
            beta = tuple(palette[x] for x in bseq)
            rights = [e for e in (OnePointExtension(z, beta, p) for p in positions)
                      if c.extension_ok(e)]
            report.pairs_checked += len(lefts) * len(rights)
            pending = [(ea, eb) for ea in lefts for eb in rights if ea != eb]
            if not pending or _some_color(c, alpha, beta, palette):
                continue
            if _some_color(c, alpha, beta, range(ENLARGED_BUDGET)):
                report.enlarged += len(pending)
                continue
            report.passed = False
            report.failure = (z,) + pending[0]
            return True
    return False


def _some_color(c: ClassSpec, alpha, beta, colors) -> bool:
    return any(c.pair_ok(q) and all(c.triple_ok(x, y, q) for x, y in zip(alpha, beta))
               for q in colors)


# -- tree amalgamation along a chain --------------------------------------------


@dataclass
class KoenigResult:
    branch: list[Amalgam] | None
    level_sizes: list[int]
    nodes_visited: int

    @property
    def found(self) -> bool:
        return self.branch is not None


def restrict_amalgam(top: Amalgam, m: int) -> FinStructure:
    """The induced substructure of ``top.result`` on ``0..m-1`` together with
    the images of ``a`` and ``b``, relabeled so that they come last."""
    n = top.base.n
    keep = list(range(m)) + ([n] if top.glued else [n, n + 1])
    return induced_substructure(top.result, keep)


def koenig_tree_amalgamation(chain: Sequence[FinStructure], ea: OnePointExtension,
                             eb: OnePointExtension, c: ClassSpec, budget=DEFAULT_BUDGET,
                             allow_infinite: bool = False) -> KoenigResult:
    """Amalgams ``A_0, ..., A_d`` of the restrictions of ``ea`` and ``eb`` to
    ``Z_0 ⊆ ... ⊆ Z_d`` with each ``A_i`` the restriction of ``A_{i+1}``.

    The levels form a finitely branching tree (parent = restriction); a
    branch is found by depth-first search from the root with backtracking.
    Each ``Z_i`` must be the substructure of ``Z_d`` on its first points.
    """
    if not c.finite_language and not allow_infinite:
        raise RejectedInput(f"class {c.id} has no finite relational language; "
                            "tree amalgamation needs one (pass allow_infinite to search anyway)")
    if not chain:
        raise RejectedInput("chain must be nonempty")
    top = chain[-1]
    _check_pair(top, ea, eb, c)
    sizes = [z.n for z in chain]
    for i, z in enumerate(chain):
        if i and sizes[i] < sizes[i - 1]:
            raise RejectedInput("chain must be increasing")
        if induced_substructure(top, range(z.n)) != z:
            raise RejectedInput(f"chain member {i} is not an initial substructure of the last")
        if not c.member(z):
            raise RejectedInput(f"chain member {i} is not in class {c.id}")
    levels = []
    for z in chain:
        la, lb = ea.restrict(range(z.n)), eb.restrict(range(z.n))
        levels.append(amalgamate_one_point(z, la, lb, c, budget))
    visited = 0
    path: list[Amalgam] = []

    def dfs(i: int) -> bool:
        nonlocal visited
        if i == len(levels):
            return True
        for node in levels[i]:
            visited += 1
            if i and (node.glued != path[-1].glued
                      or restrict_amalgam(node, sizes[i - 1]) != path[-1].result):
                continue
            path.append(node)
            if dfs(i + 1):
                return True
            path.pop()
        return False

    found = dfs(0)
    return KoenigResult(list(path) if found else None, [len(lv) for lv in levels], visited)


# -- amalgamation bases ------------------------------------------------------------


@dataclass
class BaseVerdict:
    """Outcome for one extension pair.

    ``glue_block`` is ``None`` when gluing works, else ``(reason, z)`` with
    reason ``"color"`` (colors of ``z`` disagree) or ``"order"`` (``z`` lies
    between the two new points).  ``blocked`` maps each rejected candidate
    (a color, or an index into the relational completions) to the smallest
    set of base points which, together with ``a`` and ``b``, spans a
    non-member.
    """

    amalgam: Amalgam | None
    glue_block: tuple[str, int] | None
    blocked: dict = field(default_factory=dict)
    budget: tuple[int, ...] = ()

    @property
    def amalgamates(self) -> bool:
        return self.amalgam is not None

    def to_doc(self) -> dict:
        doc = {"amalgamates": self.amalgamates, "budget": list(self.budget),
               "glueBlock": None if self.glue_block is None
               else {"reason": self.glue_block[0], "at": self.glue_block[1]},
               "blocked": [[k, list(v)] for k, v in sorted(self.blocked.items())]}
        if self.amalgam is not None:
            doc["amalgam"] = self.amalgam.to_doc()
        return doc


def _glue_block(z: FinStructure, ea: OnePointExtension, eb: OnePointExtension):
    if ea == eb:
        return None
    if z.kind.is_labeled:
        for x in range(z.n):
            if ea.alpha[x] != eb.alpha[x]:
                return ("color", x)
        lo, hi = sorted((ea.position, eb.position))
        between = [x for x in range(z.n) if lo <= z.order[x] < hi]
        return ("order", min(between))
    new = z.n
    for x in range(z.n):
        for sym, ar in z.kind.signature:
            for t in itertools.product((x, new), repeat=ar):
                if new in t and x in t and (((sym, t) in ea.tuples) != ((sym, t) in eb.tuples)):
                    return ("relation", x)
    return ("relation", new)


def blocking_subset(w: FinStructure, n: int, c: ClassSpec) -> tuple[int, ...] | None:
    """Least set ``S`` of base points (by size, then lexicographically) such
    that ``S ∪ {a, b}`` induces a non-member of ``c``."""
    ab = [n, n + 1]
    for size in range(n + 1):
        for sub in itertools.combinations(range(n), size):
            if not c.member(induced_substructure(w, list(sub) + ab)):
                return sub
    return None


def amalgamation_base_check(x: FinStructure, pairs: Sequence[tuple[OnePointExtension,
                                                                     OnePointExtension]],
                            c: ClassSpec, budget=DEFAULT_BUDGET) -> list[BaseVerdict]:
    """Per-pair verdicts over the base ``x``, in input order."""
    colors = color_budget(budget)
    out = []
    for ea, eb in pairs:
        _check_pair(x, ea, eb, c)
        glue = _glue_block(x, ea, eb)
        found = amalgamate_one_point(x, ea, eb, c, colors)
        verdict = BaseVerdict(found[0] if found else None, glue, {}, colors)
        if x.kind.is_labeled:
            for q in colors:
                ws = list(completions(x, ea, eb, [q]))
                if all(not c.member(w) for w in ws):
                    verdict.blocked[q] = blocking_subset(ws[0], x.n, c)
        else:
            for idx, w in enumerate(completions(x, ea, eb, colors)):
                if not c.member(w):
                    verdict.blocked[idx] = blocking_subset(w, x.n, c)
        out.append(verdict)
    return out
