import itertools

import numpy as np
import pytest

from prefelicit.bundles import (
    CapacityError,
    all_bundles,
    dominance_pair_count,
    format_bundle,
    free_disposal_edges,
    from_items,
    grand_bundle,
    is_subset,
    items_of,
    parse_bundle,
    popcounts,
    size,
    strict_subset_pair_count,
    subset_matrix,
)

A, B, AB = 1, 2, 3


def test_all_bundles_small():
    assert all_bundles(0) == [0]
    assert all_bundles(2) == [0, A, B, AB]
    assert len(all_bundles(10)) == 1024


def test_capacity_guard():
    assert len(all_bundles(16)) == 1 << 16
    with pytest.raises(CapacityError):
        all_bundles(17)
    with pytest.raises(ValueError):
        all_bundles(-1)


def test_is_subset_examples():
    assert is_subset(0, AB)
    assert is_subset(A, AB)
    assert not is_subset(A, B)
    assert not is_subset(AB, A)


def test_free_disposal_edges_k2():
    assert sorted(free_disposal_edges(2)) == sorted([(A, 0), (B, 0), (AB, A), (AB, B)])
    assert free_disposal_edges(0) == []
    assert len(free_disposal_edges(3)) == 12


@pytest.mark.parametrize("k", range(0, 13))
def test_edge_count_formula(k):
    assert len(free_disposal_edges(k)) == (k * 2 ** (k - 1) if k else 0)


def _closure(k):
    reach = set(free_disposal_edges(k))
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(reach), repeat=2):
            if b == c and (a, d) not in reach:
                reach.add((a, d))
                changed = True
    return reach


@pytest.mark.parametrize("k", range(0, 5))
def test_closure_is_strict_subset_order(k):
    closure = _closure(k)
    strict = {(a, b) for a in all_bundles(k) for b in all_bundles(k) if a != b and is_subset(b, a)}
    assert closure == strict
    assert len(closure) == strict_subset_pair_count(k)


@pytest.mark.parametrize("k", range(0, 7))
def test_subset_matrix_counts_pairs(k):
    M = subset_matrix(k)
    assert int(M.sum()) - (1 << k) == strict_subset_pair_count(k)


def test_dominance_pair_count_examples():
    assert [dominance_pair_count(k) for k in (1, 2, 3)] == [1, 4, 13]
    # the closed form and the subset-pair count part ways from k = 2
    assert [strict_subset_pair_count(k) for k in (1, 2, 3)] == [1, 5, 19]


@pytest.mark.parametrize("k", range(0, 7))
def test_dominance_pair_count_is_disjoint_pairs(k):
    pairs = sum(1 for a in all_bundles(k) for b in all_bundles(k) if a < b and not a & b)
    assert pairs == dominance_pair_count(k)


def test_mask_helpers_roundtrip():
    assert grand_bundle(3) == 7
    assert items_of(5) == [0, 2]
    assert from_items([0, 2]) == 5
    assert size(7) == 3
    assert format_bundle(0) == "{}"
    assert format_bundle(5) == "AC"
    for b in range(16):
        assert parse_bundle(format_bundle(b)) == b
    assert np.array_equal(popcounts(3), [0, 1, 1, 2, 1, 2, 2, 3])
