"""Finite structures over the universe ``0..n-1``.

Two kinds are supported: relational structures over a finite signature, and
complete labeled graphs (every unordered pair carries a natural-number color),
optionally with a linear order.  Colorings are stored as lower-triangular
rows: ``colors[j][i]`` is the color of ``{i, j}`` for ``i < j``.  Orders are
rank tuples: ``order[x]`` is the position of ``x``.

All values are immutable; operations return new structures.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ParseError, RejectedInput

RELATIONAL = "relational"
LABELED = "labeled"


@dataclass(frozen=True)
class StructureKind:
    tag: str
    signature: tuple[tuple[str, int], ...] = ()
    ordered: bool = False

    def __post_init__(self):
        if self.tag not in (RELATIONAL, LABELED):
            raise RejectedInput(f"unknown structure kind {self.tag!r}")
        if self.tag == RELATIONAL:
            if self.ordered:
                raise RejectedInput("relational kinds carry order as a relation")
            names = [s for s, _ in self.signature]
            if len(set(names)) != len(names):
                raise RejectedInput("duplicate relation symbol in signature")
            if any(a < 1 for _, a in self.signature):
                raise RejectedInput("relation arities must be >= 1")
        elif self.signature:
            raise RejectedInput("labeled kinds have no signature")

    @property
    def is_relational(self) -> bool:
        return self.tag == RELATIONAL

    @property
    def is_labeled(self) -> bool:
        return self.tag == LABELED

    def arity(self, symbol: str) -> int:
        for s, a in self.signature:
            if s == symbol:
                return a
        raise RejectedInput(f"symbol {symbol!r} not in signature")

    def describe(self) -> str:
        if self.is_relational:
            sig = ",".join(f"{s}/{a}" for s, a in self.signature)
            return f"relational[{sig}]"
        return "ordered-labeled" if self.ordered else "labeled"


def relational_kind(signature: Iterable[tuple[str, int]]) -> StructureKind:
    return StructureKind(RELATIONAL, tuple((str(s), int(a)) for s, a in signature))


def labeled_kind(ordered: bool = False) -> StructureKind:
    return StructureKind(LABELED, (), bool(ordered))


GRAPH_KIND = relational_kind([("E", 2)])
ORDER_KIND = relational_kind([("<", 2)])
LABELED_KIND = labeled_kind(False)
ORDERED_LABELED_KIND = labeled_kind(True)


@dataclass(frozen=True)
class FinStructure:
    kind: StructureKind
    n: int
    relations: tuple[tuple[str, frozenset], ...] = ()
    colors: tuple[tuple[int, ...], ...] = ()
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        n = self.n
        if n < 0:
            raise RejectedInput("universe size must be non-negative")
        if self.kind.is_relational:
            if self.colors or self.order is not None:
                raise RejectedInput("relational structures carry no coloring or order")
            syms = tuple(s for s, _ in self.relations)
            if syms != tuple(s for s, _ in self.kind.signature):
                raise RejectedInput("relations must follow the signature order")
            for (sym, tuples), (_, arity) in zip(self.relations, self.kind.signature):
                for t in tuples:
                    if len(t) != arity or any(not 0 <= x < n for x in t):
                        raise RejectedInput(f"bad tuple {t} for {sym}/{arity} on n={n}")
        else:
            if self.relations:
                raise RejectedInput("labeled structures carry no relations")
            if len(self.colors) != n or any(len(row) != j for j, row in enumerate(self.colors)):
                raise RejectedInput("coloring must cover all pairs")
            for row in self.colors:
                for c in row:
                    if not isinstance(c, int) or c < 0:
                        raise RejectedInput(f"colors are natural numbers, got {c!r}")
            if self.kind.ordered:
                if self.order is None or sorted(self.order) != list(range(n)):
                    raise RejectedInput("order must be a rank bijection onto 0..n-1")
            elif self.order is not None:
                raise RejectedInput("unordered kind given an order")

    def __hash__(self):
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.kind, self.n, self.relations, self.colors, self.order))

    # -- access ------------------------------------------------------------

    def color(self, i: int, j: int) -> int:
        if i < j:
            return self.colors[j][i]
        if j < i:
            return self.colors[i][j]
        raise RejectedInput("no color on the diagonal")

    def less(self, i: int, j: int) -> bool:
        return self.order[i] < self.order[j]

    def rel(self, symbol: str) -> frozenset:
        for s, tuples in self.relations:
            if s == symbol:
                return tuples
        raise RejectedInput(f"symbol {symbol!r} not in signature")

    def pairs(self) -> Iterator[tuple[int, int, int]]:
        for i in range(self.n):
            for j in range(i + 1, self.n):
                yield i, j, self.colors[j][i]

    def colors_used(self) -> set[int]:
        return {c for row in self.colors for c in row}

    @cached_property
    def by_rank(self) -> tuple[int, ...]:
        """Elements listed in increasing order."""
        inv = [0] * self.n
        for x, r in enumerate(self.order):
            inv[r] = x
        return tuple(inv)

    def __repr__(self):
        if self.kind.is_relational:
            body = ", ".join(f"{s}={sorted(t)}" for s, t in self.relations)
        else:
            body = "colors=" + str({(i, j): c for i, j, c in self.pairs()})
            if self.order is not None:
                body += f", order={list(self.order)}"
        return f"FinStructure({self.kind.describe()}, n={self.n}, {body})"


def _unchecked(kind: StructureKind, n: int, relations=(), colors=(), order=None) -> FinStructure:
    """Build without re-validating; for internal growth loops whose inputs
    are already known to be well formed."""
    s = object.__new__(FinStructure)
    object.__setattr__(s, "kind", kind)
    object.__setattr__(s, "n", n)
    object.__setattr__(s, "relations", relations)
    object.__setattr__(s, "colors", colors)
    object.__setattr__(s, "order", order)
    return s


# -- constructors ------------------------------------------------------------


def relational(kind: StructureKind, n: int,
               relations: Mapping[str, Iterable[Sequence[int]]] | None = None) -> FinStructure:
    relations = relations or {}
    extra = set(relations) - {s for s, _ in kind.signature}
    if extra:
        raise RejectedInput(f"symbols {sorted(extra)} not in signature")
    rels = tuple((s, frozenset(tuple(int(x) for x in t) for t in relations.get(s, ())))
                 for s, _ in kind.signature)
    return FinStructure(kind, n, rels)


def graph(n: int, edges: Iterable[tuple[int, int]]) -> FinStructure:
    tuples = set()
    for u, v in edges:
        tuples.add((u, v))
        tuples.add((v, u))
    return relational(GRAPH_KIND, n, {"E": tuples})


def linear_order(ranks: Sequence[int]) -> FinStructure:
    """Strict linear order with ``x < y`` iff ``ranks[x] < ranks[y]``."""
    n = len(ranks)
    return relational(ORDER_KIND, n, {"<": [(x, y) for x in range(n) for y in range(n)
                                              if ranks[x] < ranks[y]]})


def labeled(n: int, coloring: Mapping[tuple[int, int], int] | None = None, *,
            color_fn=None, order: Sequence[int] | None = None) -> FinStructure:
    """Complete labeled graph from a pair map or a function ``(i, j) -> color``."""
    rows = []
    for j in range(n):
        row = []
        for i in range(j):
            if color_fn is not None:
                c = color_fn(i, j)
            else:
                if (i, j) in coloring:
                    c = coloring[(i, j)]
                elif (j, i) in coloring:
                    c = coloring[(j, i)]
                else:
                    raise RejectedInput(f"coloring missing pair {(i, j)}")
            row.append(c)
        rows.append(tuple(row))
    kind = ORDERED_LABELED_KIND if order is not None else LABELED_KIND
    return FinStructure(kind, n, (), tuple(rows), tuple(order) if order is not None else None)


def empty(kind: StructureKind) -> FinStructure:
    if kind.is_relational:
        return relational(kind, 0)
    return FinStructure(kind, 0, (), (), () if kind.ordered else None)


def cycle_graph(n: int) -> FinStructure:
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> FinStructure:
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> FinStructure:
    return graph(n, itertools.combinations(range(n), 2))


# -- substructures and relabelings -------------------------------------------


def induced_substructure(s: FinStructure, subset: Iterable[int]) -> FinStructure:
    """Substructure on ``subset``, relabeled by increasing original index."""
    elems = sorted(set(subset))
    if any(not 0 <= x < s.n for x in elems):
        raise RejectedInput(f"subset {elems} not inside universe of size {s.n}")
    pos = {x: i for i, x in enumerate(elems)}
    m = len(elems)
    if s.kind.is_relational:
        rels = tuple(
            (sym, frozenset(tuple(pos[x] for x in t) for t in tuples if all(x in pos for x in t)))
            for sym, tuples in s.relations)
        return FinStructure(s.kind, m, rels)
    rows = tuple(tuple(s.color(elems[i], elems[j]) for i in range(j)) for j in range(m))
    order = None
    if s.order is not None:
        ranked = sorted(elems, key=lambda x: s.order[x])
        rank_of = {x: r for r, x in enumerate(ranked)}
        order = tuple(rank_of[x] for x in elems)
    return FinStructure(s.kind, m, (), rows, order)


def relabel(s: FinStructure, perm: Sequence[int]) -> FinStructure:
    """Image of ``s`` under the bijection ``x -> perm[x]``."""
    n = s.n
    if sorted(perm) != list(range(n)):
        raise RejectedInput("relabeling must be a permutation of the universe")
    if s.kind.is_relational:
        rels = tuple((sym, frozenset(tuple(perm[x] for x in t) for t in tuples))
                     for sym, tuples in s.relations)
        return FinStructure(s.kind, n, rels)
    inv = [0] * n
    for x, y in enumerate(perm):
        inv[y] = x
    rows = tuple(tuple(s.color(inv[i], inv[j]) for i in range(j)) for j in range(n))
    order = None
    if s.order is not None:
        order = tuple(s.order[inv[y]] for y in range(n))
    return FinStructure(s.kind, n, (), rows, order)


def recolor(s: FinStructure, mapping: Mapping[int, int]) -> FinStructure:
    """Rename colors; colors missing from ``mapping`` are kept."""
    rows = tuple(tuple(mapping.get(c, c) for c in row) for row in s.colors)
    return FinStructure(s.kind, s.n, (), rows, s.order)


def unordered_reduct(s: FinStructure) -> FinStructure:
    return FinStructure(LABELED_KIND, s.n, (), s.colors, None)


# -- one-point extensions ----------------------------------------------------


@dataclass(frozen=True)
class OnePointExtension:
    """``base`` plus one new point with index ``base.n``.

    Labeled kinds give the new point's colors in ``alpha`` (``alpha[x]`` is the
    color of ``{x, new}``) and, when ordered, its ``position``: the new point
    lies above exactly the base elements of rank ``< position``.  Relational
    kinds list the new tuples (each mentions ``base.n``) in ``tuples``.
    """

    base: FinStructure
    alpha: tuple[int, ...] | None = None
    position: int | None = None
    tuples: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        b = self.base
        if b.kind.is_labeled:
            if self.alpha is None or len(self.alpha) != b.n:
                raise RejectedInput("alpha must color every base element")
            if any(not isinstance(c, int) or c < 0 for c in self.alpha):
                raise RejectedInput("colors are natural numbers")
            if b.kind.ordered:
                if self.position is None or not 0 <= self.position <= b.n:
                    raise RejectedInput("ordered extensions need a position in 0..n")
            elif self.position is not None:
                raise RejectedInput("unordered extensions take no position")
            if self.tuples:
                raise RejectedInput("labeled extensions take no tuples")
        else:
            if self.alpha is not None or self.position is not None:
                raise RejectedInput("relational extensions are given by tuples")
            for sym, t in self.tuples:
                arity = b.kind.arity(sym)
                if len(t) != arity or b.n not in t or any(not 0 <= x <= b.n for x in t):
                    raise RejectedInput(f"bad extension tuple {sym}{t}")

    @property
    def new(self) -> int:
        return self.base.n

    @property
    def finitary(self) -> bool:
        # every color support of a finite base is finite
        return True

    def is_q_colored(self, q: Iterable[int]) -> bool:
        q = set(q)
        return self.alpha is not None and all(c in q for c in self.alpha)

    def below(self) -> frozenset[int]:
        """Base elements lying below the new point."""
        return frozenset(x for x in range(self.base.n) if self.base.order[x] < self.position)

    def realize(self) -> FinStructure:
        b = self.base
        if b.kind.is_relational:
            rels = tuple((sym, tuples | frozenset(t for s2, t in self.tuples if s2 == sym))
                         for sym, tuples in b.relations)
            return _unchecked(b.kind, b.n + 1, rels)
        rows = b.colors + (tuple(self.alpha),)
        order = None
        if b.order is not None:
            order = tuple(r + 1 if r >= self.position else r for r in b.order) + (self.position,)
        # the extension was validated on construction, so skip the re-check
        return _unchecked(b.kind, b.n + 1, (), rows, order)

    def restrict(self, subset: Iterable[int]) -> OnePointExtension:
        """The extension seen from the induced substructure on ``subset``."""
        elems = sorted(set(subset))
        sub = induced_substructure(self.base, elems)
        if self.base.kind.is_relational:
            pos = {x: i for i, x in enumerate(elems)}
            pos[self.base.n] = len(elems)
            tuples = frozenset((sym, tuple(pos[x] for x in t)) for sym, t in self.tuples
                               if all(x in pos for x in t))
            return OnePointExtension(sub, tuples=tuples)
        alpha = tuple(self.alpha[x] for x in elems)
        position = None
        if self.base.order is not None:
            position = sum(1 for x in elems if self.base.order[x] < self.position)
        return OnePointExtension(sub, alpha, position)

    def to_doc(self) -> dict:
        if self.base.kind.is_relational:
            out: dict[str, list] = {}
            for sym, t in sorted(self.tuples):
                out.setdefault(sym, []).append(list(t))
            return {"tuples": out}
        doc: dict = {"alpha": list(self.alpha)}
        if self.position is not None:
            doc["position"] = self.position
        return doc


def extension_from_doc(base: FinStructure, doc: Mapping) -> OnePointExtension:
    if not isinstance(doc, Mapping):
        raise ParseError("extension document must be an object")
    try:
        if base.kind.is_relational:
            tuples = frozenset((sym, tuple(int(x) for x in t))
                               for sym, ts in doc.get("tuples", {}).items() for t in ts)
            return OnePointExtension(base, tuples=tuples)
        alpha = tuple(int(c) for c in doc["alpha"])
        position = doc.get("position")
        return OnePointExtension(base, alpha, None if position is None else int(position))
    except KeyError as exc:
        raise ParseError(f"extension document missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, RejectedInput):
            raise
        raise ParseError(f"malformed extension document: {exc}") from None


# -- the Cantor anti-metric space ----------------------------------------------


def cantor_antimetric(d: int) -> FinStructure:
    """All binary strings of length ``d``; distance ``3**i`` where ``i`` is the
    first coordinate at which the strings differ.

    Point ``x`` is the string whose coordinate ``i`` is bit ``d-1-i`` of ``x``.
    """
    if not 1 <= d <= 12:
        raise RejectedInput("depth must lie in 1..12")

    def rho(x: int, y: int) -> int:
        diff = x ^ y
        first = d - diff.bit_length()
        return 3 ** first

    return labeled(2 ** d, color_fn=rho)


# -- serialization -----------------------------------------------------------


def to_doc(s: FinStructure) -> dict:
    if s.kind.is_relational:
        return {
            "kind": RELATIONAL,
            "n": s.n,
            "signature": [[sym, a] for sym, a in s.kind.signature],
            "relations": {sym: sorted(list(t) for t in tuples) for sym, tuples in s.relations},
        }
    doc = {"kind": LABELED, "n": s.n, "coloring": [[i, j, c] for i, j, c in s.pairs()]}
    if s.order is not None:
        doc["order"] = list(s.order)
    return doc


def serialize(s: FinStructure) -> str:
    return json.dumps(to_doc(s), sort_keys=True, separators=(",", ":"))


def from_doc(doc) -> FinStructure:
    if not isinstance(doc, Mapping):
        raise ParseError("structure document must be an object", "$")
    kind = doc.get("kind")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ParseError("'n' must be a non-negative integer", "n")
    try:
        if kind == RELATIONAL:
            rels = doc.get("relations", {})
            if not isinstance(rels, Mapping):
                raise ParseError("'relations' must be an object", "relations")
            if "signature" in doc:
                sig = [(str(s), int(a)) for s, a in doc["signature"]]
            else:
                sig = []
                for sym, ts in sorted(rels.items()):
                    if not ts:
                        raise ParseError(f"cannot infer arity of empty relation {sym!r}",
                                         f"relations.{sym}")
                    sig.append((sym, len(ts[0])))
            return relational(relational_kind(sig), n, rels)
        if kind == LABELED:
            coloring = doc.get("coloring")
            if not isinstance(coloring, list):
                raise ParseError("'coloring' must be a list of [i, j, color]", "coloring")
            pairs: dict[tuple[int, int], int] = {}
            for idx, entry in enumerate(coloring):
                if (not isinstance(entry, list) or len(entry) != 3
                        or not all(isinstance(v, int) and not isinstance(v, bool) for v in entry)):
                    raise ParseError("coloring entries are [i, j, color] integer triples",
                                     f"coloring[{idx}]")
                i, j, c = entry
                if not (0 <= i < j < n):
                    raise ParseError(f"pair ({i}, {j}) needs 0 <= i < j < n", f"coloring[{idx}]")
                if (i, j) in pairs:
                    raise ParseError(f"pair ({i}, {j}) colored twice", f"coloring[{idx}]")
                pairs[(i, j)] = c
            for j in range(n):
                for i in range(j):
                    if (i, j) not in pairs:
                        raise ParseError(f"coloring missing pair ({i}, {j})", "coloring")
            order = doc.get("order")
            return labeled(n, pairs, order=order)
    except ParseError:
        raise
    except RejectedInput as exc:
        raise ParseError(str(exc), "$") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed structure document: {exc}", "$") from None
    raise ParseError(f"unknown kind {kind!r}", "kind")


def deserialize(text: str) -> FinStructure:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_doc(doc)
