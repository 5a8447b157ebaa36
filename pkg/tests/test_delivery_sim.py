import itertools

import numpy as np
import pytest

import cachecraft as cc
from cachecraft.delivery_sim import (
    decode_all,
    deliver,
    largest_remainder_split,
    materialize,
)
from cachecraft.evaluator import rate_for_demand


def _theorem1_setup(k, n, m, unit_bits=2400, seed=1):
    cfg = cc.uniform_config(k, n, float(m))
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(k, n, float(m)))
    return cfg, pl, materialize(cfg, pl, unit_bits, seed)


def test_largest_remainder_examples():
    assert largest_remainder_split([100 / 3] * 3, 100) == [34, 33, 33]
    assert largest_remainder_split([0.0, 0.0], 0) == [0, 0]
    assert sum(largest_remainder_split([1.9, 2.9, 0.2], 5)) == 5


def test_materialize_splits(uniform_k4n6m3):
    _, pl, cat = _theorem1_setup(4, 6, 3)
    # only the size-2 subsets carry mass: six 400-bit subfiles per file
    for l in range(1, 7):
        lengths = sorted(length for start, length in cat.layout[l - 1] if length)
        assert lengths == [400] * 6
        total = sum(length for _, length in cat.layout[l - 1])
        assert total == 2400
        assert cat.files[l - 1].size == 2400


def test_materialize_single_subfile():
    cfg = cc.uniform_config(3, 2, 0.0)
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(3, 2, 0.0))
    cat = materialize(cfg, pl, 1000, seed=3)
    assert cat.subfile_bits(1, frozenset()) == 1000


def test_materialize_deterministic():
    _, _, cat_a = _theorem1_setup(3, 3, 1, seed=9)
    _, _, cat_b = _theorem1_setup(3, 3, 1, seed=9)
    for fa, fb in zip(cat_a.files, cat_b.files):
        assert np.array_equal(fa, fb)
    _, _, cat_c = _theorem1_setup(3, 3, 1, seed=10)
    assert any(not np.array_equal(a, c) for a, c in zip(cat_a.files, cat_c.files))


def test_single_user_delivery():
    cfg = cc.uniform_config(1, 2, 0.0)
    pl = cc.expand_to_placement(cfg, cc.theorem1_scheme(1, 2, 0.0))
    cat = materialize(cfg, pl, 800, seed=0)
    log = deliver(cat, (2,))
    assert len(log.entries) == 1
    assert log.total_bits == 800
    assert decode_all(cat, log, (2,)).all_ok


def test_pair_transmission():
    cfg, pl, cat = _theorem1_setup(2, 2, 1)
    log = deliver(cat, (1, 2))
    assert len(log.entries) == 1
    entry = log.entries[0]
    assert entry.subset == frozenset({1, 2})
    assert entry.length_bits == 1200
    want = cat.subfile(1, frozenset({2})) ^ cat.subfile(2, frozenset({1}))
    assert np.array_equal(entry.payload, want)


def test_bit_accounting_against_evaluator():
    for k, n, m in [(2, 2, 1), (3, 3, 1.5), (4, 4, 2), (4, 3, 0.5)]:
        cfg, pl, cat = _theorem1_setup(k, n, m)
        for demand in itertools.islice(itertools.product(range(1, n + 1), repeat=k), 20):
            log = deliver(cat, demand)
            exact = rate_for_demand(pl, demand) * 2400
            assert abs(log.total_bits - exact) <= k * (1 << k)


def test_all_demands_decode(uniform_k4n6m3):
    cfg, pl, cat = _theorem1_setup(4, 4, 2)
    for demand in itertools.product(range(1, 5), repeat=4):
        log = deliver(cat, demand)
        report = decode_all(cat, log, demand)
        assert report.all_ok, (demand, str(report))


def test_repeated_demand_decodes():
    cfg, pl, cat = _theorem1_setup(4, 6, 3)
    log = deliver(cat, (1, 1, 1, 1))
    assert decode_all(cat, log, (1, 1, 1, 1)).all_ok


def test_heterogeneous_placement_decodes():
    cfg = cc.graded_catalog_config(cache_size=2.0)
    pl = cc.random_length_baseline(cfg)
    cat = materialize(cfg, pl, 2400, seed=5)
    rng = np.random.default_rng(6)
    for _ in range(25):
        demand = tuple(int(x) for x in rng.integers(1, 7, size=4))
        log = deliver(cat, demand)
        assert decode_all(cat, log, demand).all_ok


def test_corruption_hits_exactly_the_members():
    cfg, pl, cat = _theorem1_setup(4, 6, 3)
    demand = (1, 2, 3, 4)
    log = deliver(cat, demand)
    entry = log.entries[2]
    corrupted = entry.payload.copy()
    corrupted[0] ^= 1
    object.__setattr__(entry, "payload", corrupted)
    report = decode_all(cat, log, demand)
    failed = {r.user for r in report.results if not r.ok}
    assert failed == set(entry.subset)
    bad = [r for r in report.results if not r.ok][0]
    assert bad.first_mismatch_bit is not None


def test_log_export(tmp_path):
    cfg, pl, cat = _theorem1_setup(2, 2, 1)
    log = deliver(cat, (1, 2))
    data = log.to_json_dict()
    assert data["total_bits"] == 1200
    assert data["transmissions"][0]["S"] == "1,2"
    with_payload = log.to_json_dict(include_payloads=True)
    assert "payload_b64" in with_payload["transmissions"][0]


def test_demand_validation():
    cfg, pl, cat = _theorem1_setup(2, 2, 1)
    with pytest.raises(ValueError):
        deliver(cat, (1,))
    with pytest.raises(ValueError):
        deliver(cat, (1, 3))
    log = deliver(cat, (1, 2))
    with pytest.raises(ValueError):
        decode_all(cat, log, (2, 1))
