import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optnet.constructions import build
from optnet.graph_state import GraphState, line_graph, star_graph
from optnet.requests import Request, RequestSet
from optnet.resource import ResourceState, x, z
from optnet.verification import (
    NECESSARY_FAILED,
    RECIPE_FAILED,
    RECIPE_VERIFIED,
    SEARCH_EXHAUSTED,
    SEARCH_VERIFIED,
    VerificationError,
    bipartitions,
    certify,
    cut_rank,
    cut_rank_witnesses,
    necessary_condition,
    outcome_diff,
    search_fulfillment,
    verify_recipe,
    verify_resource,
)

from conftest import graph_states


def _line(n):
    return ResourceState([line_graph(list(range(n)), owners=list(range(n)))], meta={"n": n})


def test_recipe_verified_and_failed():
    res = _line(3)
    req = Request.of([(0, 2)])
    assert verify_recipe(res, req, [x(1)]).status == RECIPE_VERIFIED
    bad = verify_recipe(res, req, [z(1)])
    assert bad.status == RECIPE_FAILED and bad.detail


def test_missing_recipe_is_an_error():
    with pytest.raises(VerificationError):
        verify_recipe(_line(2), Request.of([(0, 1)]), request_id=3)


def test_cut_rank_bound_rejects_single_pair():
    res = ResourceState([GraphState({0: 0, 1: 1}, [(0, 1)])], meta={"n": 4})
    v = certify(res, Request.of([(2, 3)]))
    assert v.status == NECESSARY_FAILED and v.bipartition is not None


def test_search_finds_line_link():
    v = search_fulfillment(_line(4), Request.of([(0, 3)]))
    assert v.status == SEARCH_VERIFIED
    assert {s.action for s in v.witness} <= {"Z", "X", "LC"}


def test_search_exhausts_on_impossible_pair():
    # a product of Bell pairs 0-1 and 2-3 never yields 0-2 without a fresh pair
    g = GraphState({0: 0, 1: 1, 2: 2, 3: 3}, [(0, 1), (2, 3)])
    v = search_fulfillment(g, Request.of([(0, 2)]))
    assert v.status == SEARCH_EXHAUSTED


def test_outcome_diff_reports_extras():
    g = GraphState({0: 0, 1: 1, 2: 2}, [(0, 1), (1, 2)])
    assert outcome_diff(g, Request.of([(0, 1)]))
    assert not outcome_diff(GraphState({0: 0, 1: 1}, [(0, 1)]), Request.of([(0, 1)]))


def test_cut_rank_star():
    g = star_graph(0, [1, 2, 3], {0: 0, 1: 1, 2: 2, 3: 3})
    assert cut_rank(g, {0}) == 1
    assert cut_rank(g, {1, 2}) == 1


def test_switch_cut_ranks():
    g = build("Switch", 4).union()
    assert [cut_rank(g, {0, k}) for k in (1, 2, 3)] == [2, 2, 2]


def test_bipartitions_count():
    assert len(bipartitions([0, 1, 2, 3])) == 7
    assert len(bipartitions(list(range(20)), sample=5)) == 5


def test_verify_resource_statuses():
    rs = RequestSet.build(3, [[(0, 2)], [(0, 1)]])
    res = _line(3)
    res.recipes = {0: [x(1)]}
    verdicts = verify_resource(res, rs)
    assert [v.status for v in verdicts] == [RECIPE_VERIFIED, SEARCH_VERIFIED]


@settings(max_examples=60, deadline=None)
@given(graph_states(min_qubits=2, max_qubits=7, nodes=4), st.sampled_from([[(0, 1)], [(0, 2), (1, 3)], [(2, 3)]]))
def test_search_success_implies_bound(g, links):
    req = Request.of(links)
    ok, _ = necessary_condition(g, req, n=4)
    v = search_fulfillment(g, req, budget=5_000)
    if v.status == SEARCH_VERIFIED:
        assert ok
        out = g.copy()
        for step in v.witness:
            step.apply(out)
        assert not outcome_diff(out, req)


@settings(max_examples=30, deadline=None)
@given(graph_states(min_qubits=2, max_qubits=6, nodes=3), st.data())
def test_cut_rank_symmetric(g, data):
    side = data.draw(st.sets(st.integers(0, 2), min_size=1, max_size=2))
    assert cut_rank(g, side) == cut_rank(g, {0, 1, 2} - side)


def test_cut_rank_witnesses_agree_with_cut_rank():
    sides = [[0, 1], [0, 2], [0, 3]]
    found = cut_rank_witnesses(5, 4, sides, 2, limit=25)
    assert len(found) == 25
    for owners, edges in found:
        g = GraphState(dict(enumerate(owners)), edges)
        assert all(cut_rank(g, set(s)) >= 2 for s in sides)
    # four qubits, one per node, cannot reach rank 2 on every split
    assert cut_rank_witnesses(4, 4, sides, 2) == []
