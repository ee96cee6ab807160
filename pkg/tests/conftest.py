from __future__ import annotations

import itertools

from hypothesis import settings, strategies as st

from fraisse_bench.structures import graph, labeled

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def graphs_st(draw, min_n: int = 0, max_n: int = 6):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return graph(n, [p for p, b in zip(pairs, mask) if b])


@st.composite
def labeled_st(draw, min_n: int = 0, max_n: int = 5, colors=range(4), ordered: bool = False):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    cs = draw(st.lists(st.sampled_from(list(colors)), min_size=len(pairs), max_size=len(pairs)))
    order = draw(st.permutations(range(n))) if ordered else None
    return labeled(n, dict(zip(pairs, cs)), order=order)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
