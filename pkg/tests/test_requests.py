import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optnet.requests import (
    Request,
    RequestError,
    RequestSet,
    adjacency,
    all_matchings,
    all_requests,
    bipartite_matchings,
    cluster_requests_1d,
    cluster_requests_2d,
    cumulative,
    double_factorial,
    full_connectivity_requests,
    gen_grouped,
    gen_uniform,
    laplacian,
    matrix_to_csv,
    simultaneous,
    virtual_matrices,
)


def test_links_are_normalised_and_deduplicated():
    rs = RequestSet.build(4, [[(1, 0)], [(0, 1)], [(2, 3), (0, 1)]])
    assert rs.m == 2
    assert rs[0].key == ((0, 1),)


def test_probabilities_of_duplicates_add():
    rs = RequestSet.build(3, [[(0, 1)], [(1, 0)], [(1, 2)]], probabilities=[0.25, 0.25, 0.5])
    assert [r.probability for r in rs] == [0.5, 0.5]


@pytest.mark.parametrize(
    "reqs, probs",
    [
        ([[(0, 5)]], None),
        ([[(0, 1), (1, 2)]], None),
        ([[(0, 1)], [(1, 2)]], [0.5, 0.6]),
        ([[(0, 1)]], [0.0]),
    ],
)
def test_invalid_sets_rejected(reqs, probs):
    with pytest.raises(RequestError):
        RequestSet.build(4, reqs, probabilities=probs)


def test_relaxed_allows_shared_nodes():
    rs = RequestSet.build(3, [[(0, 1), (1, 2)]], relaxed=True)
    assert rs[0].max_degree() == 2


def test_matrices_small_case():
    rs = RequestSet.build(4, [[(0, 1), (2, 3)], [(0, 1)], [(1, 2)]])
    assert adjacency(rs)[0, 1] == 1 and adjacency(rs)[0, 2] == 0
    assert simultaneous(rs)[0, 1] == 2 and simultaneous(rs)[1, 2] == 1
    assert cumulative(rs)[0, 1] == 2
    lap = laplacian(rs)
    assert np.allclose(lap.sum(axis=1), 0)


def test_virtual_matrices_indexing():
    rs = RequestSet.build(3, [[(0, 2)]])
    cm = virtual_matrices(rs)
    p, q = cm.virtual_index(0, 2), cm.virtual_index(2, 0)
    assert cm.virtual_A[p, q] == 1 and cm.virtual_A.sum() == 2
    assert cm.mask.sum() == 2


def test_matrix_csv_has_labels():
    text = matrix_to_csv(np.eye(2, dtype=int), ["a", "b"])
    assert text.splitlines()[0] == ",a,b"


def test_enumerations_count():
    assert len(all_requests(4)) == 9
    assert len(full_connectivity_requests(6)) == double_factorial(5) == 15
    assert len(bipartite_matchings([0, 1, 2], [3, 4, 5])) == 6
    assert len(all_matchings(range(4))) == 3


def _induced_path_matchings(n):
    edges = [(i, i + 1) for i in range(n - 1)]
    count = 0
    for mask in range(1, 1 << len(edges)):
        chosen = [e for k, e in enumerate(edges) if mask >> k & 1]
        used = [v for e in chosen for v in e]
        # induced: no node of one pair adjacent to a node of another
        if all(abs(a - b) > 1 for i, e in enumerate(chosen) for f in chosen[i + 1:] for a in e for b in f):
            count += len(set(used)) == len(used)
    return count


def test_cluster_1d_nn_matches_brute_force():
    for n in range(2, 11):
        assert len(cluster_requests_1d(n, nn_only=True)) == _induced_path_matchings(n)


def test_cluster_2d_nn_links_are_grid_edges():
    rs = cluster_requests_2d(9, nn_only=True)
    for r in rs:
        for i, j in r.links:
            assert j - i in (1, 3)


def test_cluster_2d_needs_square():
    with pytest.raises(RequestError):
        cluster_requests_2d(10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 24), st.integers(1, 30), st.integers(0, 10_000))
def test_uniform_generator_is_valid_and_seeded(n, m, seed):
    a = gen_uniform(n, m, seed=seed)
    assert a == gen_uniform(n, m, seed=seed)
    assert 1 <= a.m <= m
    for r in a:
        assert r.links and r.max_degree() == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 24), st.integers(0, 10_000))
def test_grouped_generator_json_roundtrip(n, seed):
    rs = gen_grouped(n, 2 * n, group_size=4, bias=10, seed=seed)
    assert RequestSet.from_json(rs.to_json()) == rs


def test_grouped_bias_visible_on_average():
    inside = total = 0
    for seed in range(5):
        rs = gen_grouped(32, 64, 4, 10, seed=seed)
        for r in rs:
            for i, j in r.links:
                inside += i // 4 == j // 4
                total += 1
    # uniform proposals would keep well under a quarter inside groups
    assert inside / total > 0.4


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 999))
def test_cluster_1d_sampling_subset_of_enumeration(n, seed):
    full = {r.key for r in cluster_requests_1d(n)}
    sample = cluster_requests_1d(n, sample=5, seed=seed)
    assert {r.key for r in sample} <= full


def test_json_roundtrip_with_probabilities():
    rs = RequestSet.build(4, [[(0, 1)], [(2, 3)]], probabilities=[0.3, 0.7])
    assert RequestSet.from_json(rs.to_json()) == rs
    assert isinstance(rs[0], Request)
