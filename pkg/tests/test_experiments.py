import json

import numpy as np

from opsystk import experiments, opsys, tensor
from opsystk.experiments import Catalog
from opsystk.opsys import MEMBER, NON_MEMBER


def test_builtin_catalog_validates():
    cat = Catalog.builtin(seed=3)
    assert cat.validate() == []
    for name in ("M1", "M4", "l8", "W4", "W6", "W8", "W23", "l6/J", "rand0", "M3/J0"):
        assert name in cat
    assert all(isinstance(q, opsys.QuotientSystem) for _, q in cat.quotients())


def test_instance_seeds_are_order_free():
    a = experiments.instance_rng(5, 3).standard_normal(4)
    experiments.instance_rng(5, 2).standard_normal(100)
    assert np.array_equal(a, experiments.instance_rng(5, 3).standard_normal(4))


def test_run_keeps_input_order(monkeypatch):
    monkeypatch.setenv("OPSYSTK_THREADS", "4")
    assert experiments._run(lambda i, x: x * x, list(range(20))) == [x * x for x in range(20)]


def test_canonical_rounding():
    c = experiments._canon({"b": 1e-7, "a": [0.1 + 2e-17, 1e-20, np.float64(3.14159265358979)], "n": np.inf})
    assert list(c) == ["a", "b", "n"]
    assert c["a"] == [0.1, 0.0, 3.1415927] and c["b"] == 1e-7 and c["n"] == "inf"


def test_report_schema_and_digest():
    m2 = opsys.full_algebra(2)
    q = experiments.random_quotients(3, 1, seed=0, k=2)
    r = experiments.wep_scan(m2, q, samples=3, seed=1)
    d = json.loads(r.to_json())
    assert set(d) == {"harness", "config", "instances", "summary"}
    for inst in d["instances"]:
        assert {"id", "verdict", "grounded", "certificate_digest", "time_ms"} <= set(inst)
    again = experiments.wep_scan(m2, q, samples=3, seed=1)
    assert r.to_json(canonical=True) == again.to_json(canonical=True)
    assert r.digest() == again.digest()
    other = experiments.wep_scan(m2, q, samples=3, seed=2)
    assert other.digest() != r.digest()


def test_ordering_scan_small():
    pairs = [("M2|l2", opsys.full_algebra(2), opsys.ell_inf(2)),
             ("W4|M3/J", opsys.make_W(4), opsys.random_quotient(np.random.default_rng(1), 3, 2))]
    r = experiments.ordering_scan(pairs, count=5, seed=0)
    assert r.summary["generators"] == 10 and r.summary["violations"] == 0


def test_wep_scan_scalars_vacuous():
    r = experiments.wep_scan(opsys.scalars(), experiments.random_quotients(3, 2, seed=0), samples=3)
    assert r.summary["agreement"] == 1.0 and r.summary["undecided"] == 0


def test_lift_scan_small():
    r = experiments.lift_scan(opsys.full_algebra(2), experiments.random_quotients(3, 1, seed=4, k=2), samples=3)
    assert r.summary["lifted"] == 3


def test_lift_scan_for_a_non_full_system():
    r = experiments.lift_scan(opsys.make_W(4), experiments.random_quotients(3, 1, seed=4, k=2), samples=2)
    assert r.summary["lifted"] == 2


def test_sample_ucp_map_is_ucp():
    rng = np.random.default_rng(0)
    for src, tgt in ((opsys.make_W(4), opsys.full_algebra(2)),
                     (opsys.full_algebra(2), opsys.make_matrix_system(2, [np.array([[0, 1], [1, 0]])]))):
        phi = experiments.sample_ucp_map(src, tgt, rng)
        assert tensor.cp_check(phi).status == MEMBER
        unit_img = np.tensordot(src.unit_coords(), phi.image_matrices(), axes=1)
        np.testing.assert_allclose(unit_img, np.eye(tgt.n), atol=1e-6)


def test_wri_trivial_cases():
    m2 = opsys.full_algebra(2)
    r = experiments.wri_scan(m2, m2, [("M2", m2)], samples=2)
    assert r.summary["fraction"] == 1.0
    scal = opsys.make_matrix_system(2, [])
    r = experiments.wri_scan(scal, m2, [("l2", opsys.ell_inf(2)), ("M2", m2)], samples=2)
    assert r.summary["fraction"] == 1.0


def test_lp_extreme_rays_examples():
    assert len(experiments.lp_extreme_rays(opsys.make_W(4))) == 4
    assert len(experiments.lp_extreme_rays(opsys.ell_inf(3))) == 3


def test_lp_cross_validate_l2_l2():
    l2 = opsys.ell_inf(2)
    r = experiments.lp_cross_validate(l2, l2, samples=15)
    assert r.summary["mismatches"] == 0
    assert r.summary["min_equals_generated"] is True
    assert r.instances[0]["lp_min"] == MEMBER and r.instances[0]["verdict"] == MEMBER


def test_lp_gap_w4_w4():
    w4 = opsys.make_W(4)
    gap = experiments.lp_cone_gap(w4, w4)
    assert gap is not None
    x, f = gap["x"], gap["f"]
    assert x.min() >= 0
    rays = experiments.product_rays(w4, w4)
    assert np.min(rays @ f) >= -1e-9 and f @ x < 0


def test_planted_witness():
    pair = experiments.planted_cone_pair(opsys.ell_inf(2), opsys.make_W(4), drop=1, seed=0)
    w = experiments.witness_search(cone_pair=pair, budget=20, seed=0)
    assert w.found
    assert w.f @ w.x < 0
    assert np.min(pair.inner_rays @ w.f) >= -1e-9
    assert w.report.summary["result"] == "FOUND"


def test_witness_budget_zero():
    m2 = opsys.full_algebra(2)
    w = experiments.witness_search(m2, m2, budget=0)
    assert not w.found and w.report.summary["result"] == "NONE_FOUND"


def test_witness_search_nuclear_pair():
    m2 = opsys.full_algebra(2)
    w = experiments.witness_search(m2, opsys.make_quotient(2, []), budget=3)
    assert not w.found and w.report.summary["separated"] == 0


def test_np_test_m2():
    r = experiments.np_test(opsys.full_algebra(2), "W6", samples=3)
    assert r.summary["witnesses"] == 0
    assert r.summary["agreement"] == 1.0


def test_quasi_scan_scalars():
    r = experiments.quasi_nuclear_scan(opsys.scalars(), [("W4", opsys.make_W(4))], samples=2)
    assert r.summary["witnesses"] == 0 and r.summary["agreement"] == 1.0


def test_verify_separation_rejects_bad_density():
    m2 = opsys.full_algebra(2)
    x = tensor.TensorElement.unit(m2, m2)
    fake = opsys.Verdict(NON_MEMBER, True, -1, -1, "spatial", {"density": -np.eye(4)})
    assert not experiments.verify_separation(x, fake, samples=10)
