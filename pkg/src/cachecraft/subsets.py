"""Canonical enumeration of user subsets.

Every module that touches per-subset quantities (placements, transmissions,
contiguous file layouts) uses the same canonical order: subsets sorted by
(size, lexicographic member list), with users numbered 1..K.  Keeping one
order everywhere makes layouts and exports reproducible.
"""

from __future__ import annotations

from functools import lru_cache


@lru_cache(maxsize=None)
def canonical_subsets(num_users: int) -> tuple[frozenset, ...]:
    """All subsets of {1..num_users} (empty set included), canonical order."""
    subsets = []
    for mask in range(1 << num_users):
        members = tuple(k + 1 for k in range(num_users) if mask >> k & 1)
        subsets.append(members)
    subsets.sort(key=lambda members: (len(members), members))
    return tuple(frozenset(members) for members in subsets)


@lru_cache(maxsize=None)
def subset_index(num_users: int) -> dict:
    """Map subset -> position in canonical_subsets(num_users)."""
    return {s: i for i, s in enumerate(canonical_subsets(num_users))}


@lru_cache(maxsize=None)
def transmission_table(num_users: int) -> tuple:
    """Per nonempty subset S, the constituents of its coded transmission.

    Returns tuples (S, ((k, idx_of_S_minus_k), ...)) in canonical order,
    where idx is the canonical index of S \\ {k}.  The subfile sent for
    user k in S is the one cached exactly on S \\ {k}.
    """
    index = subset_index(num_users)
    table = []
    for s in canonical_subsets(num_users):
        if not s:
            continue
        members = tuple(sorted(s))
        table.append((s, tuple((k, index[s - {k}]) for k in members)))
    return tuple(table)


def parse_subset_key(key: str) -> frozenset:
    """Inverse of subset_key: '1,3,4' -> frozenset({1,3,4}), '' -> empty."""
    if not key:
        return frozenset()
    return frozenset(int(part) for part in key.split(","))


def subset_key(s: frozenset) -> str:
    """Encode a subset as sorted comma-joined user indices, '' for empty."""
    return ",".join(str(k) for k in sorted(s))
