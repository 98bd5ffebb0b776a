from __future__ import annotations

import itertools

from hypothesis import strategies as st

from optnet.graph_state import GraphState


@st.composite
def graph_states(draw, min_qubits: int = 1, max_qubits: int = 8, nodes: int | None = None):
    k = draw(st.integers(min_qubits, max_qubits))
    pairs = list(itertools.combinations(range(k), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    top = k if nodes is None else nodes
    owners = draw(st.lists(st.integers(0, max(0, top - 1)), min_size=k, max_size=k))
    return GraphState(dict(enumerate(owners)), [p for p, on in zip(pairs, mask) if on])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
