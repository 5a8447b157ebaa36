import numpy as np
import pytest

import cachecraft as cc
from cachecraft import formulations as F
from cachecraft.evaluator import CurvePointError, check_demand, rate_for_demand, sweep_curve
from cachecraft.model import placement_from_sizes


def test_empty_caches_rate():
    cfg = cc.uniform_config(4, 6, 0.0)
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(4, 6, 0.0))
    assert rate_for_demand(pl, (1, 2, 3, 4)) == pytest.approx(4.0, abs=1e-12)


def test_pair_scheme_rate():
    cfg = cc.uniform_config(2, 2, 1.0)
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(2, 2, 1.0))
    for demand in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        assert rate_for_demand(pl, demand) == pytest.approx(0.5, abs=1e-12)


def test_full_caches_rate(uniform_k4n6m3):
    cfg = cc.uniform_config(4, 6, 6.0)
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(4, 6, 6.0))
    assert rate_for_demand(pl, (3, 3, 1, 2)) == 0.0


def test_expected_rate_matches_decentralized_closed_form():
    # (1-q)/q * (1 - (1-q)^K) for q = 1/2, K = 4
    cfg = cc.uniform_config(4, 2, 1.0)
    pl = cc.expand_to_placement(cfg, cc.decentralized_scheme(4, 0.5))
    got = cc.expected_rate(cfg, pl)
    assert got.expected_rate == pytest.approx(15 / 16, abs=1e-12)


def test_per_demand_consistency(graded_catalog):
    pl = cc.random_length_baseline(graded_catalog)
    result = cc.expected_rate(graded_catalog, pl, include_per_demand=True)
    p = np.array(graded_catalog.popularities)
    total = 0.0
    prob_mass = 0.0
    for demand, rate in result.per_demand.items():
        weight = float(np.prod(p[np.array(demand) - 1]))
        total += weight * rate
        prob_mass += weight
    assert prob_mass == pytest.approx(1.0, abs=1e-12)
    assert total == pytest.approx(result.expected_rate, abs=1e-9)


def test_file_symmetric_placement_needs_one_demand(uniform_k4n6m3):
    pl = cc.expand_to_placement(uniform_k4n6m3, cc.theorem1_scheme(4, 6, 3.0))
    single = rate_for_demand(pl, (1, 1, 1, 1))
    assert cc.expected_rate(uniform_k4n6m3, pl).expected_rate == pytest.approx(
        single, abs=1e-12
    )


def test_rate_never_increases_when_a_size_shrinks(rng):
    cfg = cc.graded_catalog_config(cache_size=2.0)
    pl = cc.random_length_baseline(cfg)
    demand = (2, 5, 1, 6)
    base = rate_for_demand(pl, demand)
    for _ in range(25):
        w = pl.w.copy()
        l = int(rng.integers(0, 6))
        si = int(rng.integers(0, 16))
        w[l, si] *= float(rng.random())
        smaller = cc.Placement(num_users=4, num_files=6, w=w, mu=pl.mu)
        assert rate_for_demand(smaller, demand) <= base + 1e-12


def test_lp_solutions_reproduce_their_objective_end_to_end():
    # expanding each solved formulation and re-evaluating by enumeration
    # must give back the LP objective: the end-to-end check of every
    # objective simplification
    zipf = cc.zipf_popularities(6, 0.56)
    cases = [
        ("homogeneous", cc.uniform_config(4, 6, 2.0)),
        ("simplex", cc.uniform_config(4, 6, 1.0)),
        ("pop-first", cc.SystemConfig(4, 6, (1.0,) * 6, zipf, (2.0,) * 4)),
        ("length-first", cc.graded_catalog_config(cache_size=2.0)),
        (
            "two-tier",
            cc.SystemConfig(
                4,
                6,
                (1.0,) * 6,
                (1 / 6,) * 6,
                (1.6, 1.6, 2.4, 2.4),
                cc.CacheClasses(2, 1.6, 2.4),
            ),
        ),
        ("full-het", cc.graded_catalog_config(classes=cc.CacheClasses(2, 1.6, 2.4))),
        ("general", cc.graded_catalog_config(cache_size=1.0)),
    ]
    for method, cfg in cases:
        bp = F.build(method, cfg)
        sol = F.solve_built(bp)
        assert sol.status == "optimal"
        pl = bp.placement_from(sol)
        rate = cc.expected_rate(cfg, pl).expected_rate
        assert rate == pytest.approx(sol.objective_value, abs=1e-9), method


def test_check_demand(uniform_k4n6m3):
    assert check_demand(uniform_k4n6m3, [1, 6, 3, 2]) == (1, 6, 3, 2)
    with pytest.raises(ValueError):
        check_demand(uniform_k4n6m3, [1, 2, 3])
    with pytest.raises(ValueError):
        check_demand(uniform_k4n6m3, [0, 2, 3, 4])


def test_sweep_scales_template_caches():
    template = cc.SystemConfig(
        4, 6, (1.0,) * 6, (1 / 6,) * 6, (0.8, 0.8, 1.2, 1.2), cc.CacheClasses(2, 0.8, 1.2)
    )
    points = sweep_curve(template, [0.0, 5.0], ["two-tier"])
    assert [p.memory for p in points] == [0.0, 5.0]
    assert points[0].expected_rate == pytest.approx(4.0, abs=1e-9)
    assert points[1].expected_rate < 0.5


def test_sweep_identifies_failing_point():
    template = cc.graded_catalog_config()  # non-uniform popularity
    with pytest.raises(CurvePointError) as err:
        sweep_curve(template, [0.0, 1.0], ["homogeneous"])
    assert err.value.memory == 0.0
    assert err.value.method == "homogeneous"


def test_sweep_handles_non_unit_file_length():
    # closed-form and LP routes agree in the file's own length units
    template = cc.uniform_config(4, 6, 1.0, file_length=2.0)
    points = {p.method: p.expected_rate for p in sweep_curve(template, [6.0], ["theorem1", "homogeneous"])}
    assert points["theorem1"] == pytest.approx(points["homogeneous"], abs=1e-9)
    assert points["homogeneous"] == pytest.approx(4 / 3, abs=1e-9)


def test_sweep_rejects_empty_grid(graded_catalog):
    with pytest.raises(ValueError, match="empty"):
        sweep_curve(graded_catalog, [], ["general"])


def test_expected_rate_cap():
    cfg = cc.uniform_config(4, 6, 1.0)
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(4, 6, 1.0))
    with pytest.raises(cc.EnumerationCapError):
        cc.expected_rate(cfg, pl, cap=100)


def test_placement_dimension_check(uniform_k4n6m3):
    other = placement_from_sizes(2, 1, {(1, frozenset()): 1.0})
    with pytest.raises(ValueError):
        cc.expected_rate(uniform_k4n6m3, other)
