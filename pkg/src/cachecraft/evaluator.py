"""Exact expected-rate evaluation by demand enumeration.

The delivery rate of a placement under a demand vector is the sum over all
nonempty user subsets of the largest constituent subfile (zero-padding makes
the payload as long as its longest part).  The expectation is taken over the
full product distribution of demands, enumerated exhaustively up to the
configured cap; there is no sampling anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Placement, SystemConfig
from .probability import enumerate_demands, enumeration_cap
from .subsets import transmission_table


def check_demand(cfg: SystemConfig, demand) -> tuple:
    """Validate a 1-based demand vector against cfg and return it as a tuple."""
    d = tuple(int(x) for x in demand)
    if len(d) != cfg.num_users:
        raise ValueError(f"demand must list {cfg.num_users} file indices")
    if any(not 1 <= x <= cfg.num_files for x in d):
        raise ValueError(f"demand entries must lie in 1..{cfg.num_files}")
    return d


@dataclass(frozen=True)
class RateResult:
    expected_rate: float
    per_demand: dict | None = None


def rate_for_demand(pl: Placement, demand) -> float:
    """Exact delivery rate: sum over nonempty S of max_{k in S} |W_{S\\{k}}^{(d_k)}|."""
    d = tuple(int(x) for x in demand)
    if len(d) != pl.num_users:
        raise ValueError(f"demand must list {pl.num_users} file indices")
    w = pl.w
    total = 0.0
    for _, constituents in transmission_table(pl.num_users):
        total += max(w[d[k - 1] - 1, si] for k, si in constituents)
    return total


def expected_rate(
    cfg: SystemConfig,
    pl: Placement,
    include_per_demand: bool = False,
    cap: int | None = None,
) -> RateResult:
    """Demand-averaged rate over all N^K demand vectors (vectorized)."""
    if pl.num_users != cfg.num_users or pl.num_files != cfg.num_files:
        raise ValueError("placement dimensions do not match the config")
    cap = enumeration_cap() if cap is None else cap
    demands = enumerate_demands(cfg.num_files, cfg.num_users, cap)
    p = np.array(cfg.popularities)
    weights = np.prod(p[demands - 1], axis=1)

    rates = np.zeros(demands.shape[0])
    w = pl.w
    for _, constituents in transmission_table(cfg.num_users):
        k0, si0 = constituents[0]
        payload = w[demands[:, k0 - 1] - 1, si0]
        for k, si in constituents[1:]:
            payload = np.maximum(payload, w[demands[:, k - 1] - 1, si])
        rates += payload

    per_demand = None
    if include_per_demand:
        per_demand = {tuple(map(int, row)): float(r) for row, r in zip(demands, rates)}
    return RateResult(expected_rate=float(weights @ rates), per_demand=per_demand)


FORMULATION_METHODS = (
    "general",
    "homogeneous",
    "simplex",
    "pop-first",
    "length-first",
    "two-tier",
    "full-het",
)
SCHEME_METHODS = (
    "theorem1",
    "decentralized",
    "baseline-popularity",
    "baseline-length",
    "baseline-classes",
)


@dataclass(frozen=True)
class CurvePoint:
    memory: float
    method: str
    expected_rate: float


class CurvePointError(RuntimeError):
    def __init__(self, memory, method, cause):
        super().__init__(f"curve point M={memory}, method={method!r} failed: {cause}")
        self.memory = memory
        self.method = method


def _method_rate(cfg: SystemConfig, method: str, solver=None) -> float:
    # Imported here to keep evaluator importable from formulations.
    from . import formulations, schemes

    if method in FORMULATION_METHODS:
        built = formulations.build(method, cfg)
        solution = formulations.solve_built(built, solver=solver)
        if not solution.ok:
            raise RuntimeError(f"LP status {solution.status}")
        return solution.objective_value
    if method == "theorem1":
        if not (cfg.uniform_caches and cfg.uniform_lengths):
            raise ValueError("theorem1 needs uniform caches and lengths")
        f = cfg.file_lengths[0]
        gs = schemes.theorem1_scheme(cfg.num_users, cfg.num_files, cfg.cache_sizes[0] / f)
        pl = schemes.expand_to_placement(cfg, schemes.scaled(gs, f))
    elif method == "decentralized":
        if not (cfg.uniform_caches and cfg.uniform_lengths):
            raise ValueError("decentralized needs uniform caches and lengths")
        f = cfg.file_lengths[0]
        q = cfg.cache_sizes[0] / (cfg.num_files * f)
        gs = schemes.decentralized_scheme(cfg.num_users, min(q, 1.0))
        pl = schemes.expand_to_placement(cfg, schemes.scaled(gs, f))
    elif method == "baseline-popularity":
        pl = schemes.random_popularity_baseline(cfg)
    elif method == "baseline-length":
        pl = schemes.random_length_baseline(cfg)
    elif method == "baseline-classes":
        pl = schemes.random_class_baseline(cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    return expected_rate(cfg, pl).expected_rate


def sweep_curve(template: SystemConfig, memory_grid, methods, solver=None) -> list:
    """Rate-memory curve: scale the template's cache sizes by each grid value.

    The template's cache sizes act as per-user multipliers, so a template
    with M = (0.8, 0.8, 1.2, 1.2) swept over grid m yields budgets 0.8m and
    1.2m.  Points are emitted in (method, grid) order, deterministically.
    """
    grid = [float(m) for m in memory_grid]
    if not grid:
        raise ValueError("memory grid is empty")
    if isinstance(methods, str):
        methods = [methods]
    points = []
    for method in methods:
        for m in grid:
            cfg = template.scaled_caches(m)
            try:
                rate = _method_rate(cfg, method, solver=solver)
            except Exception as exc:
                raise CurvePointError(m, method, exc) from exc
            points.append(CurvePoint(memory=m, method=method, expected_rate=rate))
    return points
