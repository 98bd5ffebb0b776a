"""Small GF(2) helpers on int bitsets."""

from __future__ import annotations

from typing import Iterable, Sequence


def gf2_rank(rows: Iterable[int]) -> int:
    """Rank over GF(2) of rows given as int bitmasks."""
    pivots: dict[int, int] = {}
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top not in pivots:
                pivots[top] = row
                break
            row ^= pivots[top]
    return len(pivots)


def submatrix_rank(adj: Sequence[int], rows: Iterable[int], cols: Iterable[int]) -> int:
    """Rank of the block adj[rows][cols] where adj holds bitmask rows."""
    mask = 0
    for c in cols:
        mask |= 1 << c
    return gf2_rank(adj[r] & mask for r in rows)


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


__all__ = ["gf2_rank", "submatrix_rank", "bits"]
