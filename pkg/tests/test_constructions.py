import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optnet.constructions import (
    KINDS,
    UNIDIRECTIONAL,
    ConstructionError,
    build,
    build_on,
    family,
    family_size,
    ladder_assignment,
    recipe_for,
    storage_formula,
)
from optnet.requests import Request, RequestSet
from optnet.verification import all_verified, verify_recipe


def _count_oracle(kind, n):
    # qubits counted from the layout description, not the closed forms
    half = n // 2
    if kind == "BellFull":
        return 2 * math.comb(n, 2)
    if kind == "Switch":
        return 2 * (n - 1)
    if kind == "GhzLadder":
        return sum(n - t for t in range(half))
    if kind == "BellUnidirectional":
        return 2 * half * half
    if kind == "GhzUnidirectional":
        return half * (half + 1)
    if kind == "Butterfly4":
        return 6
    return 6 * (n // 4) ** 2


def _valid(kind, n):
    try:
        storage_formula(kind, n)
    except ConstructionError:
        return False
    return True


@pytest.mark.parametrize("kind", KINDS)
def test_formula_matches_layout_count(kind):
    for n in range(2, 65):
        if _valid(kind, n):
            assert storage_formula(kind, n) == _count_oracle(kind, n)


def test_small_table():
    assert [storage_formula(k, 4) for k in ("BellFull", "Switch", "GhzLadder")] == [12, 6, 7]
    assert storage_formula("BellUnidirectional", 4) == 8
    assert storage_formula("GhzUnidirectional", 4) == 6


@pytest.mark.parametrize("kind, n", [("GhzLadder", 5), ("Butterfly4", 8), ("ButterflyGeneral", 6), ("Nope", 4), ("Switch", 1)])
def test_incompatible_parameters(kind, n):
    with pytest.raises(ConstructionError):
        build(kind, n)


@pytest.mark.parametrize("kind", KINDS)
def test_family_sizes(kind):
    for n in (4, 6, 8):
        if _valid(kind, n):
            assert len(family(kind, n)) == family_size(kind, n)


@pytest.mark.parametrize("kind", KINDS)
def test_every_family_member_verified(kind):
    for n in (4, 6, 8):
        if not _valid(kind, n):
            continue
        res = build(kind, n)
        rs = RequestSet.build(n, family(kind, n))
        assert all_verified(res, rs), (kind, n)


def test_ladder_and_unidirectional_recipes_single_qubit():
    for kind in ("GhzLadder", "GhzUnidirectional", "BellFull", "BellUnidirectional"):
        assert build(kind, 6).single_qubit_only()


def test_switch_uses_hub_moves():
    res = build("Switch", 4)
    classes = {s.action for r in res.recipes.values() for s in r}
    assert "MERGE" in classes and "BELL" in classes


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([4, 6, 8, 10]), st.data())
def test_ladder_assignment_is_valid(n, data):
    nodes = list(range(n))
    perm = data.draw(st.permutations(nodes))
    req = Request.of(zip(perm[0::2], perm[1::2]))
    layers = ladder_assignment(n, req)
    assert sorted(layers.values()) == sorted(req.links)
    for t, (a, b) in layers.items():
        assert t <= min(a, b)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["BellFull", "Switch", "GhzLadder"]), st.sampled_from([4, 6, 8]), st.data())
def test_partial_matchings_served(kind, n, data):
    perm = data.draw(st.permutations(range(n)))
    pairs = data.draw(st.integers(1, n // 2))
    req = Request.of(zip(perm[0 : 2 * pairs : 2], perm[1 : 2 * pairs : 2]))
    res = build(kind, n, [req])
    assert verify_recipe(res, req, request_id=0).ok


def test_build_on_relabels_nodes_and_ids():
    req = Request.of([(3, 9), (5, 7)])
    res = build_on("GhzLadder", [3, 5, 7, 9], [req], id_offset=100)
    assert min(res.owner_of()) == 100
    assert set(res.owner_of().values()) == {3, 5, 7, 9}
    assert verify_recipe(res, req, request_id=0).ok


def test_recipe_for_matches_build():
    req = family("Switch", 6)[4]
    assert recipe_for("Switch", 6, req) == build("Switch", 6, [req]).recipes[0]


def test_unidirectional_family_is_sender_to_receiver():
    for r in family("BellUnidirectional", 6):
        for a, b in r.links:
            assert a < 3 <= b
    assert set(UNIDIRECTIONAL) < set(KINDS)
