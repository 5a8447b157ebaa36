"""LP builders: from a SystemConfig to each placement-design problem.

Every builder returns a BuiltProblem carrying the LinearProgram plus a
bidirectional variable map, so solutions can be read back as grouped schemes
or full placements in the caller's original file order (builders relabel
files internally by popularity or length but never leak that ordering).

The general problem keeps one subfile variable per (file, subset) and
linearizes each payload max with epigraph variables.  Because a payload's
length depends on the demand vector only through the files requested by the
subset's own members, the epigraph variables are indexed by (subset,
restricted demand) and weighted by the marginal probability of that
restriction; this is the same LP with duplicate columns merged and keeps the
variable count at (N+1)^K - 1 instead of N^K (2^K - 1).

The polynomial formulations impose memory-inequality orderings, which let
the expected rate be priced per variable through the order statistics of the
demand vector (the probability module supplies those tables).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import lp_core
from .lp_core import LinearProgram, LpSolution, SimplexOptions
from .model import SystemConfig
from .probability import binom, enumeration_cap, group_order_stat_pmf, order_stat_pmf
from .schemes import GroupedScheme, expand_to_placement
from .subsets import canonical_subsets, subset_key

CLS_ROWS = {"S": 0, "L": 1, "M": 2}


class SizeGuardError(RuntimeError):
    """The instance is too large for the exponential general formulation."""


class VarMap:
    """Bijection between LP variable indices and semantic labels."""

    def __init__(self):
        self._labels: list = []
        self._index: dict = {}

    def add(self, label) -> int:
        if label in self._index:
            raise ValueError(f"duplicate variable label {label!r}")
        idx = len(self._labels)
        self._labels.append(label)
        self._index[label] = idx
        return idx

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def index(self, label) -> int:
        return self._index[label]

    def label(self, idx: int):
        return self._labels[idx]

    def labels(self) -> tuple:
        return tuple(self._labels)

    @staticmethod
    def label_str(label) -> str:
        kind = label[0]
        if kind == "w":
            return f"w[l={label[1]},S={{{subset_key(label[2])}}}]"
        if kind == "mu":
            return f"mu[k={label[1]},l={label[2]}]"
        if kind == "t":
            files = ",".join(str(f) for f in label[2])
            return f"t[S={{{subset_key(label[1])}}},d=({files})]"
        if kind == "v":
            if len(label) == 2:
                return f"v[j={label[1]}]"
            if len(label) == 3 and isinstance(label[1], str):
                return f"v[{label[1]},j={label[2]}]"
            if len(label) == 3:
                return f"v[l={label[1]},j={label[2]}]"
            return f"v[{label[1]},l={label[2]},j={label[3]}]"
        if kind == "a":
            return f"a[j={label[1]}]"
        if kind == "mu_file":
            return f"mu[l={label[1]}]"
        if kind == "mu_class":
            return f"mu_{label[1]}[l={label[2]}]"
        return repr(label)


@dataclass
class BuiltProblem:
    kind: str
    cfg: SystemConfig
    lp: LinearProgram
    var_map: VarMap
    file_order: tuple  # internal rank -> original 1-based file index
    notes: dict = field(default_factory=dict)

    def value_of(self, solution: LpSolution, label) -> float:
        return float(solution.x[self.var_map.index(label)])

    def objective_of(self, x) -> float:
        return self.lp.objective_value(x)

    def x_from_scheme(self, gs: GroupedScheme) -> np.ndarray:
        """Embed a grouped scheme into LP variable space (auxiliaries at 0)."""
        x = np.zeros(self.lp.num_vars)
        k = self.cfg.num_users
        for idx, label in enumerate(self.var_map.labels()):
            if label[0] == "v":
                if self.kind in ("homogeneous",):
                    x[idx] = gs.values[label[1]]
                elif self.kind in ("pop-first", "length-first"):
                    x[idx] = gs.values[label[1] - 1, label[2]]
                elif self.kind == "two-tier":
                    x[idx] = gs.values[CLS_ROWS[label[1]], label[2]]
                elif self.kind == "full-het":
                    x[idx] = gs.values[CLS_ROWS[label[1]], label[2] - 1, label[3]]
            elif label[0] == "a" and self.kind == "simplex":
                x[idx] = gs.values[label[1]] * binom(k, label[1])
        return x

    def scheme_from(self, solution: LpSolution) -> GroupedScheme | None:
        k = self.cfg.num_users
        n = self.cfg.num_files
        vm = self.var_map
        x = solution.x
        if self.kind == "homogeneous":
            values = np.array([x[vm.index(("v", j))] for j in range(k + 1)])
            return GroupedScheme("homogeneous", np.maximum(values, 0.0), k)
        if self.kind == "simplex":
            values = np.array(
                [x[vm.index(("a", j))] / binom(k, j) for j in range(k + 1)]
            )
            return GroupedScheme("homogeneous", np.maximum(values, 0.0), k)
        if self.kind in ("pop-first", "length-first"):
            values = np.zeros((n, k + 1))
            for l in range(1, n + 1):
                for j in range(k + 1):
                    values[l - 1, j] = x[vm.index(("v", l, j))]
            return GroupedScheme("per_file", np.maximum(values, 0.0), k)
        if self.kind == "two-tier":
            ks = self.cfg.classes.num_small
            values = np.zeros((3, k + 1))
            for cls, row in CLS_ROWS.items():
                for j in range(k + 1):
                    values[row, j] = x[vm.index(("v", cls, j))]
            values = np.maximum(values, 0.0)
            values[0, ks + 1 :] = 0.0  # snap solver noise off the fixed variables
            values[1, k - ks + 1 :] = 0.0
            values[2, 1] = 0.0
            values[:, 0] = values[2, 0]
            return GroupedScheme("two_tier", values, k, num_small=ks)
        if self.kind == "full-het":
            ks = self.cfg.classes.num_small
            values = np.zeros((3, n, k + 1))
            for cls, row in CLS_ROWS.items():
                for l in range(1, n + 1):
                    for j in range(k + 1):
                        values[row, l - 1, j] = x[vm.index(("v", cls, l, j))]
            values = np.maximum(values, 0.0)
            values[0, :, ks + 1 :] = 0.0
            values[1, :, k - ks + 1 :] = 0.0
            values[2, :, 1] = 0.0
            values[0, :, 0] = values[2, :, 0]
            values[1, :, 0] = values[2, :, 0]
            return GroupedScheme("full_het", values, k, num_small=ks)
        return None

    def placement_from(self, solution: LpSolution):
        from .model import placement_from_sizes

        if self.kind == "general":
            sizes = {}
            mu = np.zeros((self.cfg.num_users, self.cfg.num_files))
            for idx, label in enumerate(self.var_map.labels()):
                if label[0] == "w":
                    sizes[(label[1], label[2])] = max(float(solution.x[idx]), 0.0)
                elif label[0] == "mu":
                    mu[label[1] - 1, label[2] - 1] = float(solution.x[idx])
            return placement_from_sizes(self.cfg.num_users, self.cfg.num_files, sizes, mu)
        return expand_to_placement(self.cfg, self.scheme_from(solution))


def _new_lp(var_map: VarMap) -> LinearProgram:
    lp = LinearProgram(num_vars=len(var_map))
    lp.names = [VarMap.label_str(label) for label in var_map.labels()]
    return lp


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def build_homogeneous(cfg: SystemConfig) -> BuiltProblem:
    """Uniform instance reduced to one variable per subset size."""
    _require(cfg.uniform_lengths, "homogeneous formulation needs uniform file lengths")
    _require(cfg.uniform_popularities, "homogeneous formulation needs uniform popularities")
    _require(cfg.uniform_caches, "homogeneous formulation needs a uniform cache size")
    k, n = cfg.num_users, cfg.num_files
    f = cfg.file_lengths[0]
    m = cfg.cache_sizes[0]

    vm = VarMap()
    for j in range(k + 1):
        vm.add(("v", j))
    lp = _new_lp(vm)
    lp.set_objective({vm.index(("v", j)): binom(k, j + 1) for j in range(k)})
    lp.add_constraint(
        [(vm.index(("v", j)), binom(k, j)) for j in range(k + 1)], "=", f, "reconstruct"
    )
    lp.add_constraint(
        [(vm.index(("v", j)), binom(k - 1, j - 1)) for j in range(1, k + 1)],
        "<=",
        m / n,
        "cache",
    )
    return BuiltProblem("homogeneous", cfg, lp, vm, tuple(range(1, n + 1)))


def build_simplex_form(cfg: SystemConfig) -> BuiltProblem:
    """Change of variables a_j = C(K,j) v_j: mass on the probability simplex.

    Objective coefficients become (K-j)/(j+1) and the cache row sum(j a_j)
    <= K M / N, which makes the two-point structure of the optimum obvious.
    """
    _require(cfg.uniform_lengths, "simplex formulation needs uniform file lengths")
    _require(cfg.uniform_popularities, "simplex formulation needs uniform popularities")
    _require(cfg.uniform_caches, "simplex formulation needs a uniform cache size")
    k, n = cfg.num_users, cfg.num_files
    f = cfg.file_lengths[0]
    m = cfg.cache_sizes[0]

    vm = VarMap()
    for j in range(k + 1):
        vm.add(("a", j))
    lp = _new_lp(vm)
    lp.set_objective(
        {vm.index(("a", j)): (k - j) / (j + 1) for j in range(k + 1) if j < k}
    )
    lp.add_constraint([(vm.index(("a", j)), 1.0) for j in range(k + 1)], "=", f, "mass")
    lp.add_constraint(
        [(vm.index(("a", j)), float(j)) for j in range(1, k + 1)], "<=", k * m / n, "cache"
    )
    return BuiltProblem("simplex", cfg, lp, vm, tuple(range(1, n + 1)))


def _per_file_core(cfg: SystemConfig, vm: VarMap, lp: LinearProgram) -> None:
    """Shared constraints of the per-file formulations: reconstruction,
    per-file cache accounting, and the total cache budget."""
    k, n = cfg.num_users, cfg.num_files
    m = cfg.cache_sizes[0]
    for l in range(1, n + 1):
        lp.add_constraint(
            [(vm.index(("v", l, j)), binom(k, j)) for j in range(k + 1)],
            "=",
            cfg.file_lengths[l - 1],
            f"reconstruct[l={l}]",
        )
        coeffs = [(vm.index(("v", l, j)), binom(k - 1, j - 1)) for j in range(1, k + 1)]
        coeffs.append((vm.index(("mu_file", l)), -1.0))
        lp.add_constraint(coeffs, "<=", 0.0, f"cache[l={l}]")
    lp.add_constraint(
        [(vm.index(("mu_file", l)), 1.0) for l in range(1, n + 1)], "<=", m, "cache-total"
    )


def _ordering_rows(lp, vm, cfg, order, j_values, tag):
    """v[l1,j] >= v[l2,j] for consecutive-in-order file pairs, all j in j_values.

    Emitted for every ordered pair, as the source problems state them."""
    for r1 in range(len(order)):
        for r2 in range(r1 + 1, len(order)):
            l1, l2 = order[r1], order[r2]
            for j in j_values:
                lp.add_constraint(
                    [(vm.index(("v", l1, j)), 1.0), (vm.index(("v", l2, j)), -1.0)],
                    ">=",
                    0.0,
                    f"{tag}[l{l1}>=l{l2},j={j}]",
                )


def build_popularity_first(cfg: SystemConfig) -> BuiltProblem:
    """Per-file variables ordered by popularity (more popular, larger subfiles).

    The ordering removes the max from the objective: the member requesting
    the most popular file dominates its transmissions, so each variable is
    priced by order-statistic probabilities.  The j = 0 term runs through
    the order statistics in reversed index order (for equal-length files the
    uncached leftovers order the other way); summed over all positions it is
    the same total weight.
    """
    _require(cfg.uniform_lengths, "popularity-first formulation needs uniform file lengths")
    _require(cfg.uniform_caches, "popularity-first formulation needs a uniform cache size")
    k, n = cfg.num_users, cfg.num_files
    order = sorted(range(1, n + 1), key=lambda l: (-cfg.popularities[l - 1], l))
    p_internal = [cfg.popularities[l - 1] for l in order]
    table = order_stat_pmf(p_internal, k).probs

    vm = VarMap()
    for l in range(1, n + 1):
        for j in range(k + 1):
            vm.add(("v", l, j))
    for l in range(1, n + 1):
        vm.add(("mu_file", l))
    lp = _new_lp(vm)

    objective = {}
    for rank, l in enumerate(order):
        for j in range(1, k):
            coef = sum(binom(k - 1 - i, j) * table[i, rank] for i in range(k))
            if coef:
                objective[vm.index(("v", l, j))] = coef
        coef0 = sum(table[k - 1 - i, rank] for i in range(k))
        if coef0:
            objective[vm.index(("v", l, 0))] = coef0
    lp.set_objective(objective)

    _per_file_core(cfg, vm, lp)
    _ordering_rows(lp, vm, cfg, order, range(1, k + 1), "pop-order")
    return BuiltProblem("pop-first", cfg, lp, vm, tuple(order))


def build_length_first(cfg: SystemConfig) -> BuiltProblem:
    """Per-file variables ordered by length (longer files, larger subfiles).

    Handles non-uniform lengths and popularities together; ties in length
    break toward the more popular file.
    """
    _require(cfg.uniform_caches, "length-first formulation needs a uniform cache size")
    k, n = cfg.num_users, cfg.num_files
    order = sorted(
        range(1, n + 1),
        key=lambda l: (-cfg.file_lengths[l - 1], -cfg.popularities[l - 1], l),
    )
    p_internal = [cfg.popularities[l - 1] for l in order]
    table = order_stat_pmf(p_internal, k).probs

    vm = VarMap()
    for l in range(1, n + 1):
        for j in range(k + 1):
            vm.add(("v", l, j))
    for l in range(1, n + 1):
        vm.add(("mu_file", l))
    lp = _new_lp(vm)

    objective = {}
    for rank, l in enumerate(order):
        for j in range(k):
            coef = sum(binom(k - 1 - i, j) * table[i, rank] for i in range(k))
            if coef:
                objective[vm.index(("v", l, j))] = coef
    lp.set_objective(objective)

    _per_file_core(cfg, vm, lp)
    _ordering_rows(lp, vm, cfg, order, range(k), "length-order")
    return BuiltProblem("length-first", cfg, lp, vm, tuple(order))


def _declassed(cfg: SystemConfig) -> SystemConfig:
    return SystemConfig(
        num_users=cfg.num_users,
        num_files=cfg.num_files,
        file_lengths=cfg.file_lengths,
        popularities=cfg.popularities,
        cache_sizes=cfg.cache_sizes,
    )


def build_two_tier(cfg: SystemConfig) -> BuiltProblem:
    """Two cache classes, uniform files: variables split small/large/mixed.

    A class with no members collapses the problem back to the homogeneous
    formulation instead of emitting empty-class machinery.
    """
    if cfg.classes is None:
        raise ValueError("cache classes required")
    _require(cfg.uniform_lengths, "two-tier formulation needs uniform file lengths")
    _require(cfg.uniform_popularities, "two-tier formulation needs uniform popularities")
    k, n = cfg.num_users, cfg.num_files
    ks = cfg.classes.num_small
    kl = k - ks
    if ks == 0 or kl == 0:
        return build_homogeneous(_declassed(cfg))
    f = cfg.file_lengths[0]

    vm = VarMap()
    for cls in ("S", "L", "M"):
        for j in range(k + 1):
            vm.add(("v", cls, j))
    lp = _new_lp(vm)

    def v(cls, j):
        return vm.index(("v", cls, j))

    # Structural zeros and the shared j = 0 value.
    for j in range(ks + 1, k + 1):
        lp.fix(v("S", j))
    for j in range(kl + 1, k + 1):
        lp.fix(v("L", j))
    lp.fix(v("M", 1))
    lp.add_constraint([(v("S", 0), 1.0), (v("M", 0), -1.0)], "=", 0.0, "shared-v0[S]")
    lp.add_constraint([(v("L", 0), 1.0), (v("M", 0), -1.0)], "=", 0.0, "shared-v0[L]")

    objective = {}
    for j in range(k):
        c_small = binom(ks, j + 1)
        c_all = binom(k, j + 1)
        c_large = binom(kl, j + 1) + ks * binom(kl, j)
        for cls, coef in (("S", c_small), ("L", c_large), ("M", c_all - c_small - c_large)):
            if coef:
                objective[v(cls, j)] = objective.get(v(cls, j), 0.0) + coef
    lp.set_objective(objective)

    recon = []
    for j in range(k + 1):
        recon += [
            (v("L", j), float(binom(kl, j))),
            (v("S", j), float(binom(ks, j))),
            (v("M", j), float(binom(k, j) - binom(kl, j) - binom(ks, j))),
        ]
    lp.add_constraint(recon, "=", f, "reconstruct")

    small_cache = []
    large_cache = []
    for j in range(1, k + 1):
        small_cache += [
            (v("S", j), float(binom(ks - 1, j - 1))),
            (v("M", j), float(binom(k - 1, j - 1) - binom(ks - 1, j - 1))),
        ]
        large_cache += [
            (v("L", j), float(binom(kl - 1, j - 1))),
            (v("M", j), float(binom(k - 1, j - 1) - binom(kl - 1, j - 1))),
        ]
    # Written as equalities in the source problem; <= keeps every budget
    # (including M_L > N) feasible and binds at the optimum anyway.
    lp.add_constraint(small_cache, "<=", cfg.classes.small_size / n, "cache-small")
    lp.add_constraint(large_cache, "<=", cfg.classes.large_size / n, "cache-large")

    for j in range(2, kl + 1):
        lp.add_constraint([(v("L", j), 1.0), (v("M", j), -1.0)], ">=", 0.0, f"L>=M[j={j}]")
    for j in range(2, ks + 1):
        lp.add_constraint([(v("M", j), 1.0), (v("S", j), -1.0)], ">=", 0.0, f"M>=S[j={j}]")
    for j in range(1, kl + 1):
        lp.add_constraint([(v("L", j), 1.0), (v("S", j), -1.0)], ">=", 0.0, f"L>=S[j={j}]")

    return BuiltProblem("two-tier", cfg, lp, vm, tuple(range(1, n + 1)))


def _nu(ks: int, kl: int, n_pos: int, j: int) -> float:
    """Expected transmission count for the n-th largest request, doubly-mixed
    subsets of size j+1 (at least two members of each class)."""
    k = ks + kl
    total = 0.0
    denom_users = k - n_pos + 1
    for m in range(n_pos):
        weight = binom(ks, m) * binom(kl, n_pos - 1 - m) / binom(k, n_pos - 1)
        if weight == 0.0:
            continue
        small_requester = sum(
            binom(ks - m - 1, i) * binom(kl - n_pos + 1 + m, j - i)
            for i in range(1, j - 1)
        ) * ((ks - m) / denom_users)
        large_requester = sum(
            binom(ks - m, i) * binom(kl - n_pos + m, j - i) for i in range(2, j)
        ) * ((kl - n_pos + 1 + m) / denom_users)
        total += weight * (small_requester + large_requester)
    return total


def build_full_het(cfg: SystemConfig) -> BuiltProblem:
    """All three heterogeneities at once: class- and file-resolved variables.

    Files are relabeled longest first.  Cross-file class inequalities force
    any large-cache subfile to dominate any small-cache (and mixed) subfile
    of the same subset size, whatever the file, which is what lets the seven
    subset families in the objective be priced independently.
    """
    if cfg.classes is None:
        raise ValueError("cache classes required")
    k, n = cfg.num_users, cfg.num_files
    ks = cfg.classes.num_small
    kl = k - ks
    if ks == 0 or kl == 0:
        return build_length_first(_declassed(cfg))

    order = sorted(
        range(1, n + 1),
        key=lambda l: (-cfg.file_lengths[l - 1], -cfg.popularities[l - 1], l),
    )
    p_internal = [cfg.popularities[l - 1] for l in order]
    table = order_stat_pmf(p_internal, k).probs
    table_small = group_order_stat_pmf(p_internal, ks).probs
    table_large = group_order_stat_pmf(p_internal, kl).probs

    vm = VarMap()
    for cls in ("S", "L", "M"):
        for l in range(1, n + 1):
            for j in range(k + 1):
                vm.add(("v", cls, l, j))
    for cls in ("S", "L"):
        for l in range(1, n + 1):
            vm.add(("mu_class", cls, l))
    lp = _new_lp(vm)

    def v(cls, l, j):
        return vm.index(("v", cls, l, j))

    for l in range(1, n + 1):
        for j in range(ks + 1, k + 1):
            lp.fix(v("S", l, j))
        for j in range(kl + 1, k + 1):
            lp.fix(v("L", l, j))
        lp.fix(v("M", l, 1))
        lp.add_constraint(
            [(v("S", l, 0), 1.0), (v("M", l, 0), -1.0)], "=", 0.0, f"shared-v0[S,l={l}]"
        )
        lp.add_constraint(
            [(v("L", l, 0), 1.0), (v("M", l, 0), -1.0)], "=", 0.0, f"shared-v0[L,l={l}]"
        )

    # Objective: the seven subset families.  Singletons price the shared
    # j = 0 variable by the full order statistics; single-class families use
    # their group's own tables; families with exactly one small (one large)
    # member are dominated by that member's large-cache (mixed) subfile; the
    # oversized families are all doubly mixed; the remaining doubly-mixed
    # sizes need the composition-averaged count _nu.
    objective = {}

    def add(idx, coef):
        if coef:
            objective[idx] = objective.get(idx, 0.0) + coef

    jmax = max(ks, kl)
    for rank, l in enumerate(order):
        add(v("M", l, 0), sum(table[i, rank] for i in range(k)))
        for j in range(1, kl):
            add(
                v("L", l, j),
                sum(binom(kl - 1 - i, j) * table_large[i, rank] for i in range(kl)),
            )
        for j in range(1, ks):
            add(
                v("S", l, j),
                sum(binom(ks - 1 - i, j) * table_small[i, rank] for i in range(ks)),
            )
        for j in range(1, kl + 1):
            add(v("L", l, j), binom(kl, j) * sum(table_small[i, rank] for i in range(ks)))
        for j in range(2, ks + 1):
            add(
                v("M", l, j),
                kl * sum(binom(ks - 1 - i, j - 1) * table_small[i, rank] for i in range(ks - 1)),
            )
        for j in range(jmax + 1, k):
            add(v("M", l, j), sum(binom(k - 1 - i, j) * table[i, rank] for i in range(k)))
        for j in range(3, jmax + 1):
            add(
                v("M", l, j),
                sum(table[n_pos - 1, rank] * _nu(ks, kl, n_pos, j) for n_pos in range(1, k + 1)),
            )
    lp.set_objective(objective)

    for l in range(1, n + 1):
        recon = []
        for j in range(k + 1):
            recon += [
                (v("L", l, j), float(binom(kl, j))),
                (v("S", l, j), float(binom(ks, j))),
                (v("M", l, j), float(binom(k, j) - binom(kl, j) - binom(ks, j))),
            ]
        lp.add_constraint(recon, "=", cfg.file_lengths[l - 1], f"reconstruct[l={l}]")

        small = [(vm.index(("mu_class", "S", l)), -1.0)]
        large = [(vm.index(("mu_class", "L", l)), -1.0)]
        for j in range(1, k + 1):
            small += [
                (v("S", l, j), float(binom(ks - 1, j - 1))),
                (v("M", l, j), float(binom(k - 1, j - 1) - binom(ks - 1, j - 1))),
            ]
            large += [
                (v("L", l, j), float(binom(kl - 1, j - 1))),
                (v("M", l, j), float(binom(k - 1, j - 1) - binom(kl - 1, j - 1))),
            ]
        lp.add_constraint(small, "=", 0.0, f"mu-small[l={l}]")
        lp.add_constraint(large, "=", 0.0, f"mu-large[l={l}]")

    lp.add_constraint(
        [(vm.index(("mu_class", "S", l)), 1.0) for l in range(1, n + 1)],
        "<=",
        cfg.classes.small_size,
        "cache-small",
    )
    lp.add_constraint(
        [(vm.index(("mu_class", "L", l)), 1.0) for l in range(1, n + 1)],
        "<=",
        cfg.classes.large_size,
        "cache-large",
    )

    # Per-file class orderings.
    for l in range(1, n + 1):
        for j in range(2, kl + 1):
            lp.add_constraint(
                [(v("L", l, j), 1.0), (v("M", l, j), -1.0)], ">=", 0.0, f"L>=M[l={l},j={j}]"
            )
        for j in range(2, ks + 1):
            lp.add_constraint(
                [(v("M", l, j), 1.0), (v("S", l, j), -1.0)], ">=", 0.0, f"M>=S[l={l},j={j}]"
            )
        for j in range(1, kl + 1):
            lp.add_constraint(
                [(v("L", l, j), 1.0), (v("S", l, j), -1.0)], ">=", 0.0, f"L>=S[l={l},j={j}]"
            )

    # Length ordering within each class.
    for cls in ("S", "L", "M"):
        for r1 in range(n):
            for r2 in range(r1 + 1, n):
                l1, l2 = order[r1], order[r2]
                for j in range(k):
                    lp.add_constraint(
                        [(v(cls, l1, j), 1.0), (v(cls, l2, j), -1.0)],
                        ">=",
                        0.0,
                        f"len-order[{cls},l{l1}>=l{l2},j={j}]",
                    )

    # Cross-file class orderings: any large subfile beats any mixed/small one.
    for l1 in range(1, n + 1):
        for l2 in range(1, n + 1):
            for j in range(2, kl + 1):
                lp.add_constraint(
                    [(v("L", l1, j), 1.0), (v("M", l2, j), -1.0)],
                    ">=",
                    0.0,
                    f"xL>=M[l{l1},l{l2},j={j}]",
                )
            for j in range(2, ks + 1):
                lp.add_constraint(
                    [(v("M", l1, j), 1.0), (v("S", l2, j), -1.0)],
                    ">=",
                    0.0,
                    f"xM>=S[l{l1},l{l2},j={j}]",
                )
            for j in range(1, kl + 1):
                lp.add_constraint(
                    [(v("L", l1, j), 1.0), (v("S", l2, j), -1.0)],
                    ">=",
                    0.0,
                    f"xL>=S[l{l1},l{l2},j={j}]",
                )

    return BuiltProblem("full-het", cfg, lp, vm, tuple(order))


def build_general(cfg: SystemConfig) -> BuiltProblem:
    """The exact problem: one variable per (file, subset), epigraph payloads."""
    k, n = cfg.num_users, cfg.num_files
    guard = n**k * ((1 << k) - 1)
    cap = enumeration_cap()
    if guard > cap:
        raise SizeGuardError(
            f"general problem has N^K (2^K - 1) = {guard} payload terms, over the cap {cap}"
        )
    subsets = canonical_subsets(k)
    p = cfg.popularities

    vm = VarMap()
    for l in range(1, n + 1):
        for s in subsets:
            vm.add(("w", l, s))
    for user in range(1, k + 1):
        for l in range(1, n + 1):
            vm.add(("mu", user, l))
    t_specs = []
    for s in subsets:
        if not s:
            continue
        members = tuple(sorted(s))
        for demand in itertools.product(range(1, n + 1), repeat=len(members)):
            vm.add(("t", s, demand))
            t_specs.append((s, members, demand))
    lp = _new_lp(vm)

    objective = {}
    for s, members, demand in t_specs:
        weight = 1.0
        for file_index in demand:
            weight *= p[file_index - 1]
        objective[vm.index(("t", s, demand))] = weight
    lp.set_objective(objective)

    for l in range(1, n + 1):
        lp.add_constraint(
            [(vm.index(("w", l, s)), 1.0) for s in subsets],
            "=",
            cfg.file_lengths[l - 1],
            f"reconstruct[l={l}]",
        )
    for user in range(1, k + 1):
        for l in range(1, n + 1):
            coeffs = [
                (vm.index(("w", l, s)), 1.0) for s in subsets if user in s
            ]
            coeffs.append((vm.index(("mu", user, l)), -1.0))
            lp.add_constraint(coeffs, "<=", 0.0, f"cache[k={user},l={l}]")
        lp.add_constraint(
            [(vm.index(("mu", user, l)), 1.0) for l in range(1, n + 1)],
            "<=",
            cfg.cache_sizes[user - 1],
            f"cache-total[k={user}]",
        )
    for s, members, demand in t_specs:
        t_idx = vm.index(("t", s, demand))
        for pos, user in enumerate(members):
            lp.add_constraint(
                [(vm.index(("w", demand[pos], s - {user})), 1.0), (t_idx, -1.0)],
                "<=",
                0.0,
                f"payload[S={{{subset_key(s)}}},k={user}]",
            )
    return BuiltProblem("general", cfg, lp, vm, tuple(range(1, n + 1)))


_BUILDERS = {
    "general": build_general,
    "homogeneous": build_homogeneous,
    "simplex": build_simplex_form,
    "pop-first": build_popularity_first,
    "length-first": build_length_first,
    "two-tier": build_two_tier,
    "full-het": build_full_het,
}


def build(method: str, cfg: SystemConfig) -> BuiltProblem:
    try:
        builder = _BUILDERS[method]
    except KeyError:
        raise ValueError(f"unknown formulation {method!r}") from None
    return builder(cfg)


def solve_built(
    bp: BuiltProblem, solver=None, options: SimplexOptions | None = None
) -> LpSolution:
    """Solve with the bundled simplex, or HiGHS for the exponential general LP."""
    if solver is None:
        solver = lp_core.solve_with_scipy if bp.kind == "general" else lp_core.solve
    return solver(bp.lp, options)
