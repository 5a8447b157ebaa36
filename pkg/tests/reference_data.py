"""Known optimal solutions for the bundled catalogs, rounded to 3 decimals.

These are the reference points the acceptance suite validates the LP stack
against.  Values are stored exactly as reported (3-decimal rounding), so
feasibility checks use a 5e-3 tolerance and objective comparisons go through
support-restricted re-solves rather than the rounded numbers themselves.
"""

from __future__ import annotations

from cachecraft import CacheClasses, SystemConfig, graded_catalog_config
from cachecraft.model import placement_from_sizes
from cachecraft.subsets import canonical_subsets

# --- graded catalog, uniform caches M = 1: optimal memory split and solution.
M1_MEMORY_ROW = (0.167, 0.188, 0.188, 0.167, 0.167, 0.125)
M1_UNCACHED_ROW = (0.833, 0.583, 0.417, 0.167, 0.0, 0.0)


def m1_reference_placement():
    cfg = graded_catalog_config(cache_size=1.0)
    sizes = {}
    for l in range(1, 7):
        sizes[(l, frozenset())] = M1_UNCACHED_ROW[l - 1]
        for k in range(1, 5):
            sizes[(l, frozenset({k}))] = M1_MEMORY_ROW[l - 1]
    return cfg, placement_from_sizes(4, 6, sizes)


# --- uniform files, cache classes (K_S=2, M_S=3.2, M_L=4.8): optimal solution.
TWO_CLASS_M4_PAIR = 0.056
TWO_CLASS_M4_TRIPLE_SMALLHEAVY = 0.033  # subsets with two small users
TWO_CLASS_M4_TRIPLE_LARGEHEAVY = 0.300  # subsets with two large users
TWO_CLASS_M4_MEMORY = {"large": 0.800, "small": 0.533}


def two_class_m4_config():
    classes = CacheClasses(2, 3.2, 4.8)
    return SystemConfig(
        num_users=4,
        num_files=6,
        file_lengths=(1.0,) * 6,
        popularities=(1 / 6,) * 6,
        cache_sizes=(3.2, 3.2, 4.8, 4.8),
        classes=classes,
    )


def two_class_m4_reference_placement():
    cfg = two_class_m4_config()
    sizes = {}
    for l in range(1, 7):
        for s in canonical_subsets(4):
            if len(s) == 2:
                sizes[(l, s)] = TWO_CLASS_M4_PAIR
            elif len(s) == 3:
                small = sum(1 for k in s if k <= 2)
                sizes[(l, s)] = (
                    TWO_CLASS_M4_TRIPLE_SMALLHEAVY if small == 2 else TWO_CLASS_M4_TRIPLE_LARGEHEAVY
                )
    return cfg, placement_from_sizes(4, 6, sizes)


# --- graded catalog with cache classes (K_S=2, M_S=1.6, M_L=2.4): optimal
# solution.  The reported table prints one row per singleton subset, but its
# own per-class memory rows (large users hold 0.165 of file 6, and nothing
# else of file 6 is nonzero for them) imply the large-user singletons of
# file 6 are 0.165, not the 0.085 printed; without that the file-6 column
# cannot reconstruct the file (0.34 vs 0.5).  SINGLETON_LARGE records the
# reconciled values.
TWO_CLASS_M2_SINGLETON_SMALL = (0.178, 0.178, 0.178, 0.178, 0.165, 0.085)
TWO_CLASS_M2_SINGLETON_LARGE = (0.178, 0.178, 0.178, 0.178, 0.165, 0.165)
TWO_CLASS_M2_PAIRS = {
    frozenset({1, 2}): (0.0, 0.077, 0.008, 0.0, 0.0, 0.0),
    frozenset({1, 3}): (0.090, 0.090, 0.090, 0.008, 0.0, 0.0),
    frozenset({1, 4}): (0.090, 0.090, 0.090, 0.008, 0.0, 0.0),
    frozenset({2, 3}): (0.090, 0.090, 0.090, 0.008, 0.0, 0.0),
    frozenset({2, 4}): (0.090, 0.090, 0.090, 0.008, 0.0, 0.0),
    frozenset({3, 4}): (0.431, 0.188, 0.090, 0.090, 0.008, 0.0),
}
TWO_CLASS_M2_MEMORY_LARGE = (0.788, 0.554, 0.446, 0.284, 0.173, 0.165)
TWO_CLASS_M2_MEMORY_SMALL = (0.357, 0.434, 0.365, 0.194, 0.165, 0.085)


def two_class_m2_config():
    return graded_catalog_config(classes=CacheClasses(2, 1.6, 2.4))


def two_class_m2_reference_placement():
    cfg = two_class_m2_config()
    sizes = {}
    for l in range(1, 7):
        for k in (1, 2):
            sizes[(l, frozenset({k}))] = TWO_CLASS_M2_SINGLETON_SMALL[l - 1]
        for k in (3, 4):
            sizes[(l, frozenset({k}))] = TWO_CLASS_M2_SINGLETON_LARGE[l - 1]
        for pair, row in TWO_CLASS_M2_PAIRS.items():
            sizes[(l, pair)] = row[l - 1]
    return cfg, placement_from_sizes(4, 6, sizes)


def support_of(placement, threshold: float = 1e-9):
    """(file, subset) pairs carrying mass, for support-restricted re-solves."""
    support = set()
    for l in range(1, placement.num_files + 1):
        for si, s in enumerate(canonical_subsets(placement.num_users)):
            if placement.w[l - 1, si] > threshold:
                support.add((l, s))
    return support


def restrict_general_to_support(built, support):
    """Fix every subfile variable outside `support` to zero (in place)."""
    for idx, label in enumerate(built.var_map.labels()):
        if label[0] == "w" and (label[1], label[2]) not in support:
            built.lp.fix(idx)
    return built
