"""Builders for four amalgamation failures, each with a bounded witness table.

* group: permutations of the naturals with finite support, extended by the
  involutions ``a`` (swapping ``2k`` and ``2k+1``) and ``b`` (fixing 0,
  swapping ``2k-1`` and ``2k``);
* anti-metric: two one-point extensions whose new points can be neither
  glued nor put at any distance;
* labeled: the same for triangle-free complete labeled graphs, with a point
  ``∞`` separating the extensions;
* ordered: the ordered variant, where the order forbids gluing.

Index conventions: in the labeled builder ``∞`` is index ``n``.  In every
structure handed to the amalgamation module the new points are ``a`` and
``b`` as described there.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping

from .classes import anti_metric, tf_labeled, tf_labeled_ordered
from .errors import ConstructionError, RejectedInput
from .structures import FinStructure, OnePointExtension, labeled

# -- permutations with finite support plus tails ----------------------------------


def _tail_eval(letter: str, i: int) -> int:
    if letter == "a":
        return i ^ 1
    if i == 0:
        return 0
    return i + 1 if i % 2 else i - 1


def _reduce_word(word: tuple[str, ...]) -> tuple[str, ...]:
    out: list[str] = []
    for ch in word:
        if out and out[-1] == ch:
            out.pop()  # a and b are involutions
        else:
            out.append(ch)
    return tuple(out)


@dataclass(frozen=True)
class FinSuppPerm:
    """``σ ∘ w`` where ``σ`` moves finitely many points (``moved`` lists them)
    and ``w`` is a reduced word in the involutions ``a`` and ``b``, applied
    right to left.  Every element of the groups generated this way has a
    unique such form, so equality is structural.
    """

    moved: tuple[tuple[int, int], ...] = ()
    tail: tuple[str, ...] = ()

    def __post_init__(self):
        dom = [i for i, _ in self.moved]
        img = sorted(j for _, j in self.moved)
        if sorted(dom) != img or any(i == j for i, j in self.moved) or len(set(dom)) != len(dom):
            raise RejectedInput("finite part must permute its support and move every listed point")
        if any(ch not in "ab" for ch in self.tail) or _reduce_word(self.tail) != self.tail:
            raise RejectedInput("tail must be a reduced word in a and b")

    @property
    def support(self) -> dict[int, int]:
        return dict(self.moved)

    @property
    def tail_kind(self) -> str:
        if not self.tail:
            return "identity"
        return "".join(self.tail)

    def __call__(self, i: int) -> int:
        if i < 0:
            raise RejectedInput("permutations act on natural numbers")
        for ch in reversed(self.tail):
            i = _tail_eval(ch, i)
        return self.support.get(i, i)

    def to_doc(self) -> dict:
        return {"moved": [list(p) for p in self.moved], "tail": "".join(self.tail)}


def finite_perm(mapping: Mapping[int, int]) -> FinSuppPerm:
    return FinSuppPerm(tuple(sorted((int(i), int(j)) for i, j in mapping.items() if i != j)))


def transposition(i: int, j: int) -> FinSuppPerm:
    return finite_perm({i: j, j: i})


IDENTITY = FinSuppPerm()
A = FinSuppPerm((), ("a",))
B = FinSuppPerm((), ("b",))


def _conjugate_finite(word: tuple[str, ...], sigma: dict[int, int]) -> dict[int, int]:
    """``w σ w⁻¹`` as a finite map (it sends ``w(i)`` to ``w(σ(i))``)."""
    w = FinSuppPerm((), word)
    return {w(i): w(j) for i, j in sigma.items()}


def perm_compose(p: FinSuppPerm, q: FinSuppPerm) -> FinSuppPerm:
    """``p ∘ q``: apply ``q`` first."""
    # σ1 w1 σ2 w2 = σ1 (w1 σ2 w1⁻¹) w1 w2
    conj = _conjugate_finite(p.tail, q.support)
    s1 = p.support
    keys = set(s1) | set(conj)
    sigma = {i: s1.get(conj.get(i, i), conj.get(i, i)) for i in keys}
    return FinSuppPerm(tuple(sorted((i, j) for i, j in sigma.items() if i != j)),
                       _reduce_word(p.tail + q.tail))


def perm_inverse(p: FinSuppPerm) -> FinSuppPerm:
    # (σ w)⁻¹ = w⁻¹ σ⁻¹ = (w⁻¹ σ⁻¹ w) w⁻¹
    inv_word = tuple(reversed(p.tail))
    sigma_inv = {j: i for i, j in p.moved}
    conj = _conjugate_finite(inv_word, sigma_inv)
    return FinSuppPerm(tuple(sorted((i, j) for i, j in conj.items() if i != j)), inv_word)


def perm_eval(p: FinSuppPerm, i: int) -> int:
    return p(i)


def perm_power(p: FinSuppPerm, m: int) -> FinSuppPerm:
    out, base = IDENTITY, p
    while m:
        if m & 1:
            out = perm_compose(out, base)
        base = perm_compose(base, base)
        m >>= 1
    return out


def _finite_order(sigma: dict[int, int]) -> int:
    seen, lengths = set(), []
    for start in sigma:
        if start in seen:
            continue
        length, i = 0, start
        while i not in seen:
            seen.add(i)
            i = sigma.get(i, i)
            length += 1
        lengths.append(length)
    return reduce(math.lcm, lengths, 1)


def perm_order(p: FinSuppPerm, cap: int = 10 ** 6) -> int | None:
    """Exact order, or ``None`` when it exceeds ``cap``.

    A nonempty even tail acts as a translation far out and has infinite
    order; an odd tail is a reflection, so ``p²`` has finite support and the
    order is twice that of ``p²``.
    """
    if not p.tail:
        order = _finite_order(p.support)
    elif len(p.tail) % 2:
        sq = perm_compose(p, p)
        order = 2 * _finite_order(sq.support)
    else:
        return None
    return order if order <= cap else None


@dataclass
class GroupReport:
    k_max: int
    m_max: int
    samples: int
    conjugation_ok: bool
    orbit_ok: bool
    sampled_orders: dict[str, list[int]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_doc(self) -> dict:
        return {"kMax": self.k_max, "mMax": self.m_max, "samples": self.samples,
                "conjugationOk": self.conjugation_ok, "orbitOk": self.orbit_ok,
                "maxSampledOrder": {g: max(v, default=0) for g, v in self.sampled_orders.items()},
                "failures": self.failures}


def _random_finite(rng: random.Random, span: int) -> FinSuppPerm:
    pts = list(range(span))
    img = pts[:]
    rng.shuffle(img)
    return finite_perm(dict(zip(pts, img)))


def group_counterexample_verify(k_max: int = 64, m_max: int = 1000, samples: int = 500,
                                seed: int = 0, span: int = 8, gens: int = 3,
                                word_len: int = 6) -> GroupReport:
    """Check the conjugation identity for ``k < k_max``, the orbit
    ``(b∘a)^m(0) = 2m`` for ``m <= m_max``, and that randomly sampled
    elements of finitely generated subgroups of ``G[a]`` and ``G[b]`` have
    finite order (confirmed by raising them to that power)."""
    if k_max < 1 or m_max < 1:
        raise RejectedInput("k_max and m_max must be positive")
    ba = perm_compose(B, A)
    ba_inv = perm_inverse(ba)
    failures = []
    conj_ok = True
    for k in range(k_max):
        lhs = perm_compose(perm_compose(ba, transposition(2 * k, 2 * k + 2)), ba_inv)
        if lhs != transposition(2 * k + 2, 2 * k + 4):
            conj_ok = False
            failures.append(f"conjugation fails at k={k}")
            break
    orbit_ok = True
    i = 0
    for m in range(1, m_max + 1):
        i = ba(i)
        if i != 2 * m:
            orbit_ok = False
            failures.append(f"(b∘a)^{m}(0) = {i}, expected {2 * m}")
            break
    rng = random.Random(seed)
    report = GroupReport(k_max, m_max, samples, conj_ok, orbit_ok, {}, failures)
    for name, tail in (("G[a]", A), ("G[b]", B)):
        orders = []
        generators = []
        for _ in range(gens):
            g = _random_finite(rng, span)
            generators.append(perm_compose(g, tail) if rng.random() < 0.5 else g)
        generators.append(tail)
        for _ in range(samples):
            word = [rng.choice(generators) for _ in range(rng.randint(1, word_len))]
            el = reduce(perm_compose, word, IDENTITY)
            order = perm_order(el)
            if order is None or perm_power(el, order) != IDENTITY:
                failures.append(f"sampled element of {name} without finite order: {el.to_doc()}")
                break
            orders.append(order)
        report.sampled_orders[name] = orders
    return report


# -- anti-metric ----------------------------------------------------------------------


def xor_space_distance(i: int, j: int) -> int:
    """``3**v`` where ``v`` is the position of the least differing binary digit."""
    d = i ^ j
    return 3 ** ((d & -d).bit_length() - 1)


def xor_space(n: int) -> FinStructure:
    return labeled(n, color_fn=xor_space_distance)


def _a_distances(n: int, slack: int) -> list[int]:
    rho = [1]
    for m in range(1, n):
        rho.append(1 + slack + max(rho[i] + xor_space_distance(i, m) for i in range(m)))
    return rho


@dataclass(frozen=True)
class CounterexampleInstance:
    x: FinStructure
    ext_a: OnePointExtension
    ext_b: OnePointExtension

    def to_doc(self) -> dict:
        from .structures import to_doc
        return {"x": to_doc(self.x), "extA": self.ext_a.to_doc(), "extB": self.ext_b.to_doc()}


def _validate(cls, inst: CounterexampleInstance) -> None:
    for what, ok in (("base", cls.member(inst.x)),
                     ("extA", cls.extension_ok(inst.ext_a)),
                     ("extB", cls.extension_ok(inst.ext_b))):
        if not ok:
            raise ConstructionError(f"{what} does not validate as {cls.id}")


def antimetric_counterexample_build(n: int, slack: int = 0) -> CounterexampleInstance:
    """Base: ``0..n-1`` with the XOR-valuation distances.  ``ρ(a, 0) = 1`` and
    ``ρ(a, m)`` exceeds every ``ρ(a, i) + ρ(i, m)`` (``i < m``) by ``1 + slack``;
    ``ρ(b, m) = ρ(a, m) + 1``."""
    if not 2 <= n <= 20:
        raise RejectedInput("truncation n must lie in 2..20")
    if slack < 0:
        raise RejectedInput("slack must be non-negative")
    x = xor_space(n)
    rho_a = _a_distances(n, slack)
    inst = CounterexampleInstance(x, OnePointExtension(x, tuple(rho_a)),
                                  OnePointExtension(x, tuple(r + 1 for r in rho_a)))
    _validate(anti_metric(), inst)
    return inst


@dataclass
class FailureTable:
    """Candidate value for the new edge ↦ blocking base point, plus the reason
    gluing fails as ``(kind, point)``."""

    candidates: dict[int, int]
    glue_block: tuple[str, int]
    instance: CounterexampleInstance

    def to_doc(self) -> dict:
        return {"glueBlock": {"reason": self.glue_block[0], "at": self.glue_block[1]},
                "blocked": [[k, m] for k, m in sorted(self.candidates.items())],
                **self.instance.to_doc()}


def antimetric_failure_witness(n: int, k_max: int, slack: int = 0) -> FailureTable:
    """For each distance ``1 <= k <= k_max`` the least ``m`` with
    ``min(ρ(a,m), ρ(b,m)) > k``; then ``{a, b, m}`` obeys the triangle
    inequality, which anti-metric spaces forbid."""
    if k_max < 1:
        raise RejectedInput("k_max must be positive")
    inst = antimetric_counterexample_build(n, slack)
    rho_a, rho_b = inst.ext_a.alpha, inst.ext_b.alpha
    if rho_a[-1] <= k_max:
        longer = _a_distances(20, slack)
        need = next((m + 1 for m, r in enumerate(longer) if r > k_max), None)
        hint = f"increase n to at least {need}" if need else "no n <= 20 suffices"
        raise RejectedInput(f"truncation too small for k_max={k_max}: {hint}")
    table = {}
    for k in range(1, k_max + 1):
        table[k] = next(m for m in range(n) if min(rho_a[m], rho_b[m]) > k)
    if rho_a[0] == rho_b[0]:
        raise ConstructionError("gluing should be blocked at point 0")
    return FailureTable(table, ("color", 0), inst)


# -- labeled and ordered -------------------------------------------------------------------


def _pairing(i: int, j: int) -> int:
    return (i + j) * (i + j + 1) // 2 + j


def labeled_counterexample_build(n: int) -> CounterexampleInstance:
    """Points ``0..n-1`` and ``∞ = n``; ``c(0,∞) = 1``, ``c(1,∞) = 0`` and the
    remaining base edges get distinct colors ``>= n+2``.  Both new points see
    ``k`` in color ``k``; ``a`` sees ``∞`` in color 0 and ``b`` in color 1."""
    if not 3 <= n <= 50:
        raise RejectedInput("n must lie in 3..50")
    inf = n

    def color(i: int, j: int) -> int:
        if (i, j) == (0, inf):
            return 1
        if (i, j) == (1, inf):
            return 0
        return _pairing(i, j) + n + 2

    x = labeled(n + 1, color_fn=color)
    alpha = tuple(range(n)) + (0,)
    beta = tuple(range(n)) + (1,)
    inst = CounterexampleInstance(x, OnePointExtension(x, alpha), OnePointExtension(x, beta))
    _validate(tf_labeled(), inst)
    # the only triangles with two equal colors pass through 0 or 1 and ∞
    for ext in (inst.ext_a, inst.ext_b):
        for z in (0, 1):
            cols = (ext.alpha[z], ext.alpha[inf], x.color(z, inf))
            if len(set(cols)) == 1:
                raise ConstructionError(f"monochromatic triangle through {z} and ∞")
    return inst


def labeled_failure_witness(n: int) -> FailureTable:
    inst = labeled_counterexample_build(n)
    table = {q: q for q in range(n)}  # c(a,q) = c(b,q) = q
    for q, z in table.items():
        if not inst.ext_a.alpha[z] == inst.ext_b.alpha[z] == q:
            raise ConstructionError(f"triangle {{a, b, {z}}} is not monochromatic in color {q}")
    if inst.ext_a.alpha[n] == inst.ext_b.alpha[n]:
        raise ConstructionError("gluing should be blocked at ∞")
    return FailureTable(table, ("color", n), inst)


def ordered_counterexample_build(n: int) -> CounterexampleInstance:
    """``n`` points in their natural order with distinct colors ``>= n+1``;
    both new points see ``i`` in color ``i``, ``a`` sits below point 0 and
    ``b`` between points 0 and 1."""
    if not 3 <= n <= 50:
        raise RejectedInput("n must lie in 3..50")
    x = labeled(n, color_fn=lambda i, j: _pairing(i, j) + n + 1, order=list(range(n)))
    alpha = tuple(range(n))
    inst = CounterexampleInstance(x, OnePointExtension(x, alpha, 0), OnePointExtension(x, alpha, 1))
    _validate(tf_labeled_ordered(), inst)
    return inst


def ordered_failure_witness(n: int) -> FailureTable:
    inst = ordered_counterexample_build(n)
    x = inst.x
    if not inst.ext_a.position <= x.order[0] < inst.ext_b.position:
        raise ConstructionError("point 0 should separate a and b")
    table = {q: q for q in range(n)}
    return FailureTable(table, ("order", 0), inst)
