"""Catalog of hereditary classes.

Each :class:`ClassSpec` bundles a membership predicate, an enumerator of the
one-point extensions of a member within a color budget, and a
``free_extend`` rule that completes an extension of a substructure ``A`` to
a one-point extension of a larger member ``Y`` (the strong amalgam used by
the Katětov construction).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .errors import RejectedInput
from .structures import (
    GRAPH_KIND,
    LABELED_KIND,
    ORDER_KIND,
    ORDERED_LABELED_KIND,
    FinStructure,
    OnePointExtension,
    StructureKind,
)

DEFAULT_BUDGET = 16


def color_budget(budget) -> tuple[int, ...]:
    """Normalize a budget (an int ``k`` meaning ``{0..k-1}``, or a color set)."""
    if isinstance(budget, int):
        if budget < 0:
            raise RejectedInput("budget must be non-negative")
        return tuple(range(budget))
    colors = tuple(sorted(set(int(c) for c in budget)))
    if any(c < 0 for c in colors):
        raise RejectedInput("colors are natural numbers")
    return colors


@dataclass(frozen=True)
class ClassSpec:
    id: str
    kind: StructureKind
    member: Callable[[FinStructure], bool]
    _extensions: Callable[[FinStructure, tuple], Iterator[OnePointExtension]]
    _extension_ok: Callable[[OnePointExtension], bool]
    _free_extend: Callable
    finite_language: bool
    # membership of a labeled structure is decided by its pairs and triangles
    pair_ok: Callable[[int], bool] | None = None
    triple_ok: Callable[[int, int, int], bool] | None = None
    # membership is invariant under injective renaming of colors
    color_symmetric: bool = False

    @property
    def triangle_local(self) -> bool:
        return self.triple_ok is not None

    def extensions(self, s: FinStructure, budget=DEFAULT_BUDGET) -> Iterator[OnePointExtension]:
        """Valid one-point extensions of ``s`` with colors from the budget.

        Order: labeled classes go through color vectors lexicographically
        (ascending colors), then positions; graphs go by neighbor bitmask;
        linear orders by position.
        """
        self.check_kind(s)
        return self._extensions(s, color_budget(budget))

    def extension_ok(self, ext: OnePointExtension) -> bool:
        """Membership of ``ext.realize()`` for a member base, checking only
        the substructures that contain the new point."""
        return self._extension_ok(ext)

    def free_extend(self, y: FinStructure, subset: Sequence[int], ext: OnePointExtension,
                    budget=DEFAULT_BUDGET) -> OnePointExtension:
        """A one-point extension of ``y`` whose restriction to ``subset`` is ``ext``."""
        subset = sorted(subset)
        return self._free_extend(y, subset, ext, color_budget(budget))

    def check_kind(self, s: FinStructure) -> None:
        if s.kind != self.kind:
            raise RejectedInput(f"class {self.id} expects {self.kind.describe()}, "
                                f"got {s.kind.describe()}")

    def __repr__(self):
        return f"ClassSpec({self.id})"


# -- predicates --------------------------------------------------------------


def _is_graph(s: FinStructure) -> bool:
    e = s.rel("E")
    return all(u != v and (v, u) in e for u, v in e)


def _neighbors(s: FinStructure) -> list[set[int]]:
    nb = [set() for _ in range(s.n)]
    for u, v in s.rel("E"):
        nb[u].add(v)
    return nb


def _has_clique(candidates: set[int], nb: list[set[int]], size: int) -> bool:
    if size == 0:
        return True
    if len(candidates) < size:
        return False
    for v in sorted(candidates):
        if _has_clique({u for u in candidates if u > v} & nb[v], nb, size - 1):
            return True
    return False


def _is_linear_order(s: FinStructure) -> bool:
    lt = s.rel("<")
    n = s.n
    if any(x == y for x, y in lt):
        return False
    below = [0] * n
    for x, y in lt:
        below[y] += 1
    # a tournament is transitive iff its score sequence is 0..n-1
    if len(lt) != n * (n - 1) // 2 or sorted(below) != list(range(n)):
        return False
    return all((y, x) not in lt for x, y in lt)


def _order_ranks(s: FinStructure) -> list[int]:
    below = [0] * s.n
    for _, y in s.rel("<"):
        below[y] += 1
    return below


def _no_mono_triangle(s: FinStructure) -> bool:
    adj: dict[int, dict[int, set[int]]] = {}
    for i, j, c in s.pairs():
        by = adj.setdefault(c, {})
        by.setdefault(i, set()).add(j)
        by.setdefault(j, set()).add(i)
    for by in adj.values():
        if len(by) < 3:
            continue
        for i, nb in by.items():
            for j in nb:
                if j > i and nb & by[j]:
                    return False
    return True


def _antimetric_triple(a: int, b: int, c: int) -> bool:
    x, y, z = sorted((a, b, c))
    return z > x + y


def _all_triangles(s: FinStructure, triple_ok) -> bool:
    n = s.n
    for i, j, k in itertools.combinations(range(n), 3):
        if not triple_ok(s.color(i, j), s.color(i, k), s.color(j, k)):
            return False
    return True


def _mono_triple(a: int, b: int, c: int) -> bool:
    return not (a == b == c)


# -- extension enumerators ----------------------------------------------------


def _graph_extensions(pred_ok):
    def enum(s: FinStructure, _colors) -> Iterator[OnePointExtension]:
        n = s.n
        for mask in range(1 << n):
            tuples = frozenset(t for x in range(n) if mask >> x & 1
                               for t in (("E", (x, n)), ("E", (n, x))))
            ext = OnePointExtension(s, tuples=tuples)
            if pred_ok(ext):
                yield ext
    return enum


def _order_extensions(s: FinStructure, _colors) -> Iterator[OnePointExtension]:
    n = s.n
    ranks = _order_ranks(s)
    for p in range(n + 1):
        tuples = frozenset(("<", (x, n)) if ranks[x] < p else ("<", (n, x)) for x in range(n))
        yield OnePointExtension(s, tuples=tuples)


def _labeled_extensions(pair_ok, triple_ok):
    def enum(s: FinStructure, colors) -> Iterator[OnePointExtension]:
        n = s.n
        palette = [c for c in colors if pair_ok(c)]
        alpha = [0] * n

        def rec(j: int):
            if j == n:
                yield tuple(alpha)
                return
            for c in palette:
                if all(triple_ok(alpha[i], c, s.colors[j][i]) for i in range(j)):
                    alpha[j] = c
                    yield from rec(j + 1)

        for a in rec(0):
            if s.kind.ordered:
                for p in range(n + 1):
                    yield OnePointExtension(s, a, p)
            else:
                yield OnePointExtension(s, a)
    return enum


# -- incremental checks -------------------------------------------------------


def _graph_ext_ok(ext: OnePointExtension) -> bool:
    ts = {t for _, t in ext.tuples}
    return all(t[0] != t[1] and (t[1], t[0]) in ts for t in ts)


def _knfree_ext_ok(k: int):
    def ok(ext: OnePointExtension) -> bool:
        if not _graph_ext_ok(ext):
            return False
        nb_new = {t[1] for _, t in ext.tuples if t[0] == ext.new}
        nb = _neighbors(ext.base)
        return not _has_clique(nb_new, nb, k - 1)
    return ok


def _order_ext_ok(ext: OnePointExtension) -> bool:
    n = ext.new
    ranks = _order_ranks(ext.base)
    below = {t[0] for _, t in ext.tuples if t[1] == n}
    above = {t[1] for _, t in ext.tuples if t[0] == n}
    if below & above or len(below) + len(above) != n or len(ext.tuples) != n:
        return False
    return max((ranks[x] for x in below), default=-1) < min((ranks[x] for x in above), default=n)


def _labeled_ext_ok(pair_ok, triple_ok, mono: bool):
    def ok(ext: OnePointExtension) -> bool:
        a = ext.alpha
        s = ext.base
        if not all(pair_ok(c) for c in a):
            return False
        if mono:
            groups: dict[int, list[int]] = {}
            for x, c in enumerate(a):
                groups.setdefault(c, []).append(x)
            for c, xs in groups.items():
                for i, j in itertools.combinations(xs, 2):
                    if s.color(i, j) == c:
                        return False
            return True
        return all(triple_ok(a[i], a[j], s.colors[j][i])
                   for j in range(s.n) for i in range(j))
    return ok


# -- free completions ----------------------------------------------------------


def _graph_free_extend(y: FinStructure, subset, ext: OnePointExtension, _colors):
    n = y.n
    m = ext.new
    tuples = frozenset((sym, tuple(n if x == m else subset[x] for x in t))
                       for sym, t in ext.tuples)
    return OnePointExtension(y, tuples=tuples)


def _order_free_extend(y: FinStructure, subset, ext: OnePointExtension, _colors):
    n = y.n
    ranks = _order_ranks(y)
    below_a = [subset[t[0]] for _, t in ext.tuples if t[1] == ext.new]
    cut = max((ranks[x] for x in below_a), default=-1)
    tuples = frozenset(("<", (x, n)) if ranks[x] <= cut else ("<", (n, x)) for x in range(n))
    return OnePointExtension(y, tuples=tuples)


def _free_position(y: FinStructure, subset, ext: OnePointExtension) -> int | None:
    if not y.kind.ordered:
        return None
    a_sorted = sorted(subset, key=lambda x: y.order[x])
    if ext.position == 0:
        return 0
    # immediate successor of the largest element of the subset lying below
    return y.order[a_sorted[ext.position - 1]] + 1


def _distinct_free_extend(y: FinStructure, subset, ext: OnePointExtension, colors):
    """Pairwise-distinct filler colors avoiding ``alpha[subset]``."""
    alpha = [None] * y.n
    for i, x in enumerate(subset):
        alpha[x] = ext.alpha[i]
    used = set(ext.alpha)
    pool = (c for c in itertools.chain(colors, itertools.count(max(colors, default=-1) + 1))
            if c not in used)
    for x in range(y.n):
        if alpha[x] is None:
            alpha[x] = next(pool)
    return OnePointExtension(y, tuple(alpha), _free_position(y, subset, ext))


def _antimetric_free_extend(y: FinStructure, subset, ext: OnePointExtension, _colors):
    big = max(max(y.colors_used(), default=0), max(ext.alpha, default=0))
    alpha = [None] * y.n
    for i, x in enumerate(subset):
        alpha[x] = ext.alpha[i]
    step = 0
    for x in range(y.n):
        if alpha[x] is None:
            # exceeds every two-sided sum, and consecutive fillers differ by > big
            alpha[x] = 2 * big + 1 + step * (big + 1)
            step += 1
    return OnePointExtension(y, tuple(alpha), None)


# -- catalog -------------------------------------------------------------------


def _graph_member(s: FinStructure) -> bool:
    return _is_graph(s)


def graphs() -> ClassSpec:
    return ClassSpec("graphs", GRAPH_KIND, _graph_member, _graph_extensions(_graph_ext_ok),
                     _graph_ext_ok, _graph_free_extend, finite_language=True)


def kn_free(k: int) -> ClassSpec:
    if k < 3:
        raise RejectedInput("knFree needs k >= 3")

    def member(s: FinStructure) -> bool:
        return _is_graph(s) and not _has_clique(set(range(s.n)), _neighbors(s), k)

    ok = _knfree_ext_ok(k)
    return ClassSpec(f"knFree({k})", GRAPH_KIND, member, _graph_extensions(ok), ok,
                     _graph_free_extend, finite_language=True)


def linear_orders() -> ClassSpec:
    return ClassSpec("linearOrders", ORDER_KIND, _is_linear_order, _order_extensions,
                     _order_ext_ok, _order_free_extend, finite_language=True)


def _pos(c: int) -> bool:
    return c >= 1


def _any(c: int) -> bool:
    return True


def anti_metric() -> ClassSpec:
    def member(s: FinStructure) -> bool:
        return all(c >= 1 for row in s.colors for c in row) and \
            _all_triangles(s, _antimetric_triple)

    return ClassSpec("antiMetric", LABELED_KIND, member,
                     _labeled_extensions(_pos, _antimetric_triple),
                     _labeled_ext_ok(_pos, _antimetric_triple, mono=False),
                     _antimetric_free_extend, finite_language=False,
                     pair_ok=_pos, triple_ok=_antimetric_triple)


def tf_labeled() -> ClassSpec:
    return ClassSpec("tfLabeled", LABELED_KIND, _no_mono_triangle,
                     _labeled_extensions(_any, _mono_triple),
                     _labeled_ext_ok(_any, _mono_triple, mono=True),
                     _distinct_free_extend, finite_language=False,
                     pair_ok=_any, triple_ok=_mono_triple, color_symmetric=True)


def tf_labeled_ordered() -> ClassSpec:
    return ClassSpec("tfLabeledOrdered", ORDERED_LABELED_KIND, _no_mono_triangle,
                     _labeled_extensions(_any, _mono_triple),
                     _labeled_ext_ok(_any, _mono_triple, mono=True),
                     _distinct_free_extend, finite_language=False,
                     pair_ok=_any, triple_ok=_mono_triple, color_symmetric=True)


CATALOG_IDS = ("graphs", "knFree(k)", "linearOrders", "antiMetric", "tfLabeled",
               "tfLabeledOrdered")


def get_class(name: str) -> ClassSpec:
    """Look up a class by id; case and punctuation are ignored (``knfree3``,
    ``knFree(3)`` and ``kn-free:3`` all name the same class)."""
    key = re.sub(r"[^a-z0-9]", "", name.lower())
    fixed = {
        "graphs": graphs,
        "linearorders": linear_orders,
        "antimetric": anti_metric,
        "tflabeled": tf_labeled,
        "tflabeledordered": tf_labeled_ordered,
    }
    if key in fixed:
        return fixed[key]()
    m = re.fullmatch(r"knfree(\d+)", key)
    if m:
        return kn_free(int(m.group(1)))
    raise RejectedInput(f"unknown class {name!r}; known: {', '.join(CATALOG_IDS)}")


def catalog(k_values: Iterable[int] = (3,)) -> list[ClassSpec]:
    return [graphs(), *(kn_free(k) for k in k_values), linear_orders(), anti_metric(),
            tf_labeled(), tf_labeled_ordered()]


def validate(s: FinStructure, c: ClassSpec) -> bool:
    """Kind invariants hold by construction; this checks class membership."""
    c.check_kind(s)
    return c.member(s)


def members(c: ClassSpec, n: int, budget=DEFAULT_BUDGET) -> Iterator[FinStructure]:
    """All members on the universe ``0..n-1`` with colors from the budget,
    generated by extending members of size ``n-1`` (complete because the
    class is hereditary)."""
    from .structures import empty

    if n == 0:
        yield empty(c.kind)
        return
    for s in members(c, n - 1, budget):
        for ext in c.extensions(s, budget):
            yield ext.realize()
