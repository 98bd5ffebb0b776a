import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optnet.clustering import (
    ClusteringError,
    build_hierarchy,
    choose_k,
    induce_layer,
    kmeans,
    rand_index,
    spectral_cluster,
)
from optnet.requests import RequestSet, gen_grouped, gen_uniform


def _two_blocks(n_half=4):
    reqs = []
    for base in (0, n_half):
        for i in range(base, base + n_half):
            for j in range(i + 1, base + n_half):
                reqs.append([(i, j)])
    reqs.append([(0, n_half)])
    return RequestSet.build(2 * n_half, reqs)


def test_choose_k_picks_largest_gap():
    assert choose_k([0, 0, 0.1, 5, 5.2]) == 3
    assert choose_k([0, 1, 2, 3]) in (2, 3)


def test_choose_k_flat_and_short():
    assert choose_k([0.0, 0.0, 0.0]) == 1
    assert choose_k([0.0, 1.0]) == 1
    with pytest.raises(ClusteringError):
        choose_k([1.0])


def test_kmeans_separates_far_blobs():
    pts = np.array([[0, 0], [0.1, 0], [0, 0.1], [10, 10], [10.1, 10], [10, 10.1]])
    labels = kmeans(pts, 2)
    assert list(labels) == [0, 0, 0, 1, 1, 1]


def test_spectral_finds_two_blocks():
    part = spectral_cluster(_two_blocks())
    assert rand_index(part, [0] * 4 + [1] * 4) == 1.0


def test_induced_layer_keeps_cross_links():
    rs = _two_blocks()
    lay = induce_layer(rs, [0] * 4 + [1] * 4)
    assert lay.n == 2 and lay.links() == [(0, 1)]


def test_hierarchy_parts_cover_every_link_once():
    rs = gen_grouped(16, 32, 4, 10, seed=3)
    h = build_hierarchy(rs, rounds=2)
    owned = sorted((r, link) for p in h.parts for r, ls in p.links.items() for link in ls)
    expected = sorted((i, link) for i, r in enumerate(rs) for link in r.links)
    assert owned == expected


def test_hierarchy_json():
    h = build_hierarchy(_two_blocks(), rounds=1)
    d = h.to_dict()
    assert d["base_n"] == 8 and d["layers"][0]["partition"] == [0] * 4 + [1] * 4


def test_rand_index_bounds():
    assert rand_index([0, 0, 1], [1, 1, 0]) == 1.0
    assert 0.0 <= rand_index([0, 1, 2], [0, 0, 0]) < 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(0, 10_000))
def test_partition_is_deterministic_and_canonical(n, seed):
    rs = gen_uniform(n, 2 * n, seed=seed)
    a = spectral_cluster(rs)
    b = spectral_cluster(rs)
    assert np.array_equal(a, b)
    assert a[0] == 0
    # canonical labels appear in order of first use
    seen = []
    for lab in a:
        if lab not in seen:
            seen.append(lab)
    assert seen == list(range(len(seen)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_block_structure_recovered_under_relabelling(seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(8)
    rs = _two_blocks()
    moved = RequestSet.build(8, [[(int(perm[i]), int(perm[j])) for i, j in r.links] for r in rs])
    part = spectral_cluster(moved)
    truth = np.empty(8, dtype=int)
    truth[perm] = [0] * 4 + [1] * 4
    assert rand_index(part, truth) == 1.0
