"""Grouped caching schemes: closed forms, random baselines, and expansion.

A GroupedScheme stores one value per symmetry class of subsets instead of one
per subset.  ``expand_to_placement`` blows a grouped scheme up to a full
Placement; ``extract_grouped`` is its inverse and doubles as a consistency
check that a placement really is symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Placement, StructuralError, SystemConfig, placement_from_sizes
from .probability import binom
from .subsets import canonical_subsets

CLASS_SMALL, CLASS_LARGE, CLASS_MIXED = "S", "L", "M"
KINDS = ("homogeneous", "per_file", "two_tier", "full_het")


@dataclass(frozen=True)
class GroupedScheme:
    """Symmetric subfile sizes.

    kind/values layout:
      homogeneous  (K+1,)           values[j] = size for every |S| = j, every file
      per_file     (N, K+1)         values[l-1, j] = size for file l, |S| = j
      two_tier     (3, K+1)         rows S/L/M by class composition, every file
      full_het     (3, N, K+1)      class composition and file
    """

    kind: str
    values: np.ndarray
    num_users: int
    num_small: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructuralError(f"unknown scheme kind {self.kind!r}")
        values = np.asarray(self.values, dtype=float)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        k = self.num_users
        expected_last = k + 1
        if values.shape[-1] != expected_last:
            raise StructuralError(f"values last axis must be K+1 = {expected_last}")
        if np.any(values < 0.0):
            raise StructuralError("grouped values must be nonnegative")
        if self.kind in ("two_tier", "full_het"):
            self._check_class_structure()

    def _check_class_structure(self):
        k, ks = self.num_users, self.num_small
        kl = k - ks
        v = self.values if self.kind == "full_het" else self.values[:, None, :]
        vs, vl, vm = v[0], v[1], v[2]
        if np.any(vs[:, ks + 1 :] != 0.0):
            raise StructuralError(f"small-class values must vanish for j > K_S = {ks}")
        if np.any(vl[:, kl + 1 :] != 0.0):
            raise StructuralError(f"large-class values must vanish for j > K_L = {kl}")
        if np.any(vm[:, 1] != 0.0):
            raise StructuralError("mixed-class value must vanish for j = 1")
        if np.any(vs[:, 0] != vm[:, 0]) or np.any(vl[:, 0] != vm[:, 0]):
            raise StructuralError("j = 0 values must be shared across classes")

    @property
    def num_large(self) -> int:
        return self.num_users - self.num_small


def theorem1_scheme(num_users: int, num_files: int, cache_size: float) -> GroupedScheme:
    """Optimal homogeneous scheme for unit-length files.

    With t = K*M/N integer, all mass sits on subset size t; otherwise it is
    split between floor(t) and ceil(t) with weight s = ceil(t) - t on the
    floor.  Values are normalized so each file reconstructs to length 1.
    """
    k, n, m = int(num_users), int(num_files), float(cache_size)
    if not 0.0 <= m <= n:
        raise ValueError(f"cache size {m} outside [0, N={n}]")
    t = k * m / n
    v = np.zeros(k + 1)
    if abs(t - round(t)) < 1e-12:
        ti = int(round(t))
        v[ti] = 1.0 / binom(k, ti)
    else:
        lo, hi = math.floor(t), math.ceil(t)
        s = hi - t
        v[lo] = s / binom(k, lo)
        v[hi] = (1.0 - s) / binom(k, hi)
    return GroupedScheme(kind="homogeneous", values=v, num_users=k)


def decentralized_scheme(num_users: int, q: float) -> GroupedScheme:
    """Random-caching limit: v_j = q^j (1-q)^(K-j), q = M/N."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"caching probability {q} outside [0, 1]")
    k = int(num_users)
    j = np.arange(k + 1)
    v = q**j * (1.0 - q) ** (k - j)
    return GroupedScheme(kind="homogeneous", values=v, num_users=k)


def scaled(gs: GroupedScheme, factor: float) -> GroupedScheme:
    """Same scheme with every size multiplied by factor (unit conversion)."""
    if factor < 0:
        raise ValueError("scale factor must be nonnegative")
    return GroupedScheme(gs.kind, gs.values * factor, gs.num_users, gs.num_small)


def _topped_up_allocation(targets, caps, budget) -> np.ndarray:
    """min(target, cap) per file, then sequential top-up to cap in file order."""
    mu = np.minimum(np.asarray(targets, dtype=float), caps)
    remaining = budget - mu.sum()
    for i in range(mu.size):
        if remaining <= 1e-15:
            break
        room = caps[i] - mu[i]
        add = min(room, remaining)
        mu[i] += add
        remaining -= add
    return mu


def _product_placement(cfg: SystemConfig, q: np.ndarray) -> Placement:
    """Deterministic limit of independent caching: |W_S^(l)| = F_l * prod q/(1-q)."""
    sizes = {}
    for l in range(1, cfg.num_files + 1):
        for s in canonical_subsets(cfg.num_users):
            frac = 1.0
            for k in range(1, cfg.num_users + 1):
                frac *= q[k - 1, l - 1] if k in s else 1.0 - q[k - 1, l - 1]
            sizes[(l, s)] = cfg.file_lengths[l - 1] * frac
    return placement_from_sizes(cfg.num_users, cfg.num_files, sizes)


def random_popularity_baseline(cfg: SystemConfig) -> Placement:
    """Popularity-proportional random caching: mu_n = min(M p_n, 1), topped up.

    Requires unit-length files and a uniform cache budget.
    """
    if not cfg.uniform_caches:
        raise ValueError("popularity baseline needs a uniform cache size")
    if not cfg.uniform_lengths:
        raise ValueError("popularity baseline needs uniform file lengths")
    m = cfg.cache_sizes[0]
    f = cfg.file_lengths[0]
    caps = np.full(cfg.num_files, f)
    mu = _topped_up_allocation(np.array(cfg.popularities) * m, caps, m)
    q = np.tile(mu / f, (cfg.num_users, 1))
    return _product_placement(cfg, q)


def random_length_baseline(cfg: SystemConfig) -> Placement:
    """Length-proportional random caching: mu_l = M F_l / sum(F), capped, topped up."""
    if not cfg.uniform_caches:
        raise ValueError("length baseline needs a uniform cache size")
    m = cfg.cache_sizes[0]
    lengths = np.array(cfg.file_lengths)
    mu = _topped_up_allocation(m * lengths / lengths.sum(), lengths, m)
    q = np.tile(mu / lengths, (cfg.num_users, 1))
    return _product_placement(cfg, q)


def random_class_baseline(cfg: SystemConfig) -> Placement:
    """Per-user variant of the length baseline for class-heterogeneous budgets.

    Each user allocates its own budget proportionally to file length and
    caches independently with q_{k,l} = mu_{k,l} / F_l.  This is the naive
    random baseline used for the fully heterogeneous studies.
    """
    lengths = np.array(cfg.file_lengths)
    q = np.zeros((cfg.num_users, cfg.num_files))
    for k in range(cfg.num_users):
        m = cfg.cache_sizes[k]
        mu = _topped_up_allocation(m * lengths / lengths.sum(), lengths, m)
        q[k] = mu / lengths
    return _product_placement(cfg, q)


def _composition(s: frozenset, num_small: int) -> str:
    small = sum(1 for k in s if k <= num_small)
    if small == len(s):
        return CLASS_SMALL
    if small == 0:
        return CLASS_LARGE
    return CLASS_MIXED


def _group_value(gs: GroupedScheme, l: int, s: frozenset) -> float:
    j = len(s)
    if gs.kind == "homogeneous":
        return float(gs.values[j])
    if gs.kind == "per_file":
        return float(gs.values[l - 1, j])
    cls = _composition(s, gs.num_small) if j > 0 else CLASS_MIXED
    row = {CLASS_SMALL: 0, CLASS_LARGE: 1, CLASS_MIXED: 2}[cls]
    if gs.kind == "two_tier":
        return float(gs.values[row, j])
    return float(gs.values[row, l - 1, j])


def expand_to_placement(cfg: SystemConfig, gs: GroupedScheme) -> Placement:
    """Assign every subset its group value; mu is exactly the cached amount."""
    if gs.num_users != cfg.num_users:
        raise StructuralError(f"scheme is for K={gs.num_users}, config has K={cfg.num_users}")
    if gs.kind in ("per_file", "full_het") and gs.values.shape[-2] != cfg.num_files:
        raise StructuralError("scheme file axis does not match config")
    if gs.kind in ("two_tier", "full_het"):
        if cfg.classes is None or cfg.classes.num_small != gs.num_small:
            raise StructuralError("class scheme needs a matching class annotation")
    sizes = {}
    for l in range(1, cfg.num_files + 1):
        for s in canonical_subsets(cfg.num_users):
            sizes[(l, s)] = _group_value(gs, l, s)
    return placement_from_sizes(cfg.num_users, cfg.num_files, sizes)


def extract_grouped(cfg: SystemConfig, pl: Placement, kind: str, tol: float = 1e-12) -> GroupedScheme:
    """Read grouped values back off a symmetric placement.

    Raises StructuralError if two subsets in the same symmetry group carry
    different sizes (beyond tol), i.e. the placement is not of this kind.
    """
    num_small = cfg.classes.num_small if cfg.classes is not None else 0
    k, n = cfg.num_users, cfg.num_files
    groups: dict = {}
    for l in range(1, n + 1):
        for s in canonical_subsets(k):
            if kind == "homogeneous":
                key = (len(s),)
            elif kind == "per_file":
                key = (l, len(s))
            elif kind == "two_tier":
                key = (_composition(s, num_small) if s else CLASS_MIXED, len(s))
            else:
                key = (_composition(s, num_small) if s else CLASS_MIXED, l, len(s))
            value = pl.size(l, s)
            if key in groups and abs(groups[key] - value) > tol:
                raise StructuralError(f"placement is not {kind}-symmetric at group {key}")
            groups[key] = value

    if kind == "homogeneous":
        values = np.array([groups[(j,)] for j in range(k + 1)])
    elif kind == "per_file":
        values = np.array([[groups[(l, j)] for j in range(k + 1)] for l in range(1, n + 1)])
    elif kind == "two_tier":
        values = np.zeros((3, k + 1))
        for row, cls in enumerate((CLASS_SMALL, CLASS_LARGE, CLASS_MIXED)):
            for j in range(k + 1):
                values[row, j] = groups.get((cls, j) if j else (CLASS_MIXED, 0), 0.0)
    else:
        values = np.zeros((3, n, k + 1))
        for row, cls in enumerate((CLASS_SMALL, CLASS_LARGE, CLASS_MIXED)):
            for l in range(1, n + 1):
                for j in range(k + 1):
                    values[row, l - 1, j] = groups.get(
                        (cls, l, j) if j else (CLASS_MIXED, l, 0), 0.0
                    )
    return GroupedScheme(kind=kind, values=values, num_users=k, num_small=num_small)
