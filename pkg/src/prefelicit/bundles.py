"""Bundles as k-bit masks: enumeration, subset tests, free-disposal edges."""
from __future__ import annotations

import numpy as np

MAX_ITEMS = 16


class CapacityError(ValueError):
    """Raised when a problem size exceeds the explicit-table guard."""


def check_item_count(k: int) -> int:
    k = int(k)
    if k < 0:
        raise ValueError(f"item count must be nonnegative, got {k}")
    if k > MAX_ITEMS:
        raise CapacityError(f"k={k} exceeds the {MAX_ITEMS}-item cap")
    return k


def grand_bundle(k: int) -> int:
    return (1 << k) - 1


def all_bundles(k: int) -> list[int]:
    """Every bundle over ``k`` items, ascending by mask."""
    return list(range(1 << check_item_count(k)))


def bundle_masks(k: int) -> np.ndarray:
    return np.arange(1 << check_item_count(k), dtype=np.int64)


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def size(b: int) -> int:
    return bin(b).count("1")


def items_of(b: int) -> list[int]:
    return [i for i in range(b.bit_length()) if b >> i & 1]


def from_items(items) -> int:
    mask = 0
    for i in items:
        mask |= 1 << int(i)
    return mask


def format_bundle(b: int, k: int | None = None) -> str:
    """Render a bundle with letters A, B, C, ...; the empty bundle is ``{}``."""
    if b == 0:
        return "{}"
    return "".join(chr(ord("A") + i) for i in items_of(b))


def parse_bundle(text: str) -> int:
    text = text.strip()
    if text in ("{}", "", "0"):
        return 0
    return from_items(ord(ch) - ord("A") for ch in text.upper())


def free_disposal_edges(k: int) -> list[tuple[int, int]]:
    """Edges from each bundle to every bundle with exactly one item removed.

    There are ``k * 2**(k-1)`` of them; their transitive closure is the
    strict-subset order.
    """
    edges = []
    for a in all_bundles(k):
        rest = a
        while rest:
            low = rest & -rest
            edges.append((a, a ^ low))
            rest ^= low
    return edges


def dominance_pair_count(k: int) -> int:
    """The closed form ``(3**k - 1) / 2``.

    It equals :func:`strict_subset_pair_count` only for ``k <= 1``; beyond
    that it counts unordered pairs of distinct disjoint bundles instead.
    """
    return (3 ** k - 1) // 2


def strict_subset_pair_count(k: int) -> int:
    """Pairs ``(a, b)`` with ``b`` a proper subset of ``a``: ``3**k - 2**k``."""
    return 3 ** k - 2 ** k


def subset_matrix(k: int) -> np.ndarray:
    """``M[a, b]`` is True iff ``b`` is a subset of ``a`` (reflexive)."""
    masks = bundle_masks(k)
    return (masks[:, None] & masks[None, :]) == masks[None, :]


def popcounts(k: int) -> np.ndarray:
    masks = bundle_masks(k)
    counts = np.zeros_like(masks)
    for i in range(k):
        counts += (masks >> i) & 1
    return counts
