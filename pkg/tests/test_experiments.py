import math

import numpy as np
import pytest

from thinfilm import experiments as ex
from thinfilm.field_energy import Magnetization2D
from thinfilm.geometry import DomainMask
from thinfilm.minimize import MinimizeConfig
from thinfilm.params import LOWER_BOUND_CONSTANT, derive


def test_inequality_record():
    rec = ex.inequality("x", "claim", 1.0, 2.0)
    assert rec.status == ex.PASS and rec.margin == 1.0
    assert ex.inequality("x", "claim", 2.0, 1.0).status == ex.FAIL
    assert ex.inequality("x", "claim", 2.0, 1.0, tol=1.5).status == ex.PASS
    assert ex.inequality("x", "claim", 2.0, 1.0, report=True).status == ex.REPORT
    assert set(rec.as_dict()) >= {"claim_id", "lhs", "rhs", "status", "margin"}


def test_result_failures():
    res = ex.ExperimentResult("e")
    res.records += [ex.inequality("a", "", 0, 1), ex.inequality("b", "", 0, -1, report=True)]
    assert res.passed
    res.records.append(ex.inequality("c", "", 2, 1))
    assert [r.claim_id for r in res.failures] == ["c"]
    assert res.as_dict()["provenance"]["code_version"]


@pytest.mark.parametrize("kind", ["disk", "square", "triangle"])
def test_shape_with_diameter(kind):
    assert ex.shape_with_diameter(kind, 0.7).diameter() == pytest.approx(0.7)


def test_grid_spacing():
    assert ex.grid_spacing(1.0, 0.1, cells=66, h_over_eps=None) == pytest.approx(1 / 64)
    assert ex.grid_spacing(1.0, 1e-3, cells=66) == 1e-3


def test_self_cell_constant():
    from scipy import integrate

    # mean of 1/|x - y| over the unit square, via the difference density (1-|u|)(1-|v|)
    val = 4 * integrate.dblquad(lambda v, u: (1 - u) * (1 - v) / math.hypot(u, v), 0, 1, 0, 1, epsabs=1e-11)[0]
    assert ex._SELF_CELL == pytest.approx(val, rel=1e-8)


def test_random_trig_field_gradient():
    mask = DomainMask.disk(1.0, 0.01)
    f, fx, fy = ex.random_trig_field(mask, np.random.default_rng(0))
    assert np.max(np.abs(f[mask.inside])) == pytest.approx(1.0)
    h = mask.h
    gx = (f[:, 2:] - f[:, :-2]) / (2 * h)
    inner = mask.inside[:, 2:] & mask.inside[:, :-2] & mask.inside[:, 1:-1]
    assert np.allclose(gx[inner], fx[:, 1:-1][inner], atol=1e-3 * np.abs(fx).max())


def test_interpolation_constant_field():
    mask = DomainMask.disk(1.0, 0.1)
    f = mask.inside * 1.0
    z = np.zeros_like(f)
    assert ex.interpolation_lhs(mask, f, z, z) == 0.0
    rec = ex.check_interpolation(mask, f, z, z, 0.1, 1.0)
    assert rec.status == ex.PASS
    with pytest.raises(ValueError):
        ex.check_interpolation(mask, f, z, z, 1.0, 0.1)


def test_interpolation_sweep_small():
    res = ex.interpolation_sweep(DomainMask.disk(1.0, 2 / 30), samples=5)
    assert res.passed and len(res.records) == 15
    assert max(row["ratio"] for row in res.table) < 1


def test_log_weighted_bv():
    A = 1.0
    X = math.pi**2 * math.e**2 / 4
    assert ex.log_weighted_bv(X, A) == pytest.approx(0.0, abs=1e-12)
    assert ex.log_weighted_bv(0.0, A) == 0.0


def test_bv_bounds_on_split_field():
    p = derive(1e-2)
    mask = DomainMask.rectangle(0.2, 0.2, 0.005)
    recs = ex.check_bv_bounds(ex.split_field(mask, p.epsilon), p)
    ids = {r.claim_id: r for r in recs}
    assert ids["bv-log"].status == ex.PASS and ids["lower-bound"].status == ex.PASS
    assert ids["bv-log-variant"].status == ex.REPORT


def test_fit_sandwich():
    assert ex.fit_sandwich([0.3, 0.1, 0.2]) == (0.1, 0.3)
    with pytest.raises(ValueError):
        ex.fit_sandwich([])


def test_split_field_is_off_centre():
    mask = DomainMask.rectangle(1.0, 1.0, 0.02)
    m = ex.split_field(mask, 0.05)
    assert m.m3[mask.inside].mean() < 0


@pytest.mark.parametrize("F,bv,kind", [(0.0, 0.0, "uniform"), (-1.0, 1.0, "patterned"), (0.0, 1.0, "mixed")])
def test_classify(F, bv, kind):
    assert ex.classify(F, bv, 1.0) == kind


def test_multistart_labels_and_threads():
    p = derive(1e-2)
    mask = DomainMask.disk(0.05, 0.005)
    cfg = MinimizeConfig(max_iter=20)
    a = ex.multistart(mask, p, cfg, ("uniform_up", "random_unit", "split"), seeds=(0, 1))
    b = ex.multistart(mask, p, cfg, ("uniform_up", "random_unit", "split"), seeds=(0, 1), threads=2)
    assert [t.init for t in a] == ["uniform_up", "random_unit:0", "random_unit:1", "split"]
    assert [t.final_energy for t in a] == [t.final_energy for t in b]


def test_onset_scan_small():
    cfg = MinimizeConfig(max_iter=400)
    res = ex.onset_scan("square", [1e-2], [0.5], cfg, cells=34, h_over_eps=None)
    assert res.passed
    row = res.table[0]
    assert row["class"] == "uniform"
    assert row["diam"] == pytest.approx(0.5 * row["threshold"])


def test_scaling_and_compactness_smoke():
    mask = DomainMask.disk(0.05, 0.005)
    cfg = MinimizeConfig(max_iter=30, init="random_unit")
    sc = ex.scaling_sweep(mask, [1e-2, 5e-3], cfg)
    assert len(sc.table) == 2 and sc.passed
    co = ex.compactness_diagnostic(mask, [1e-2, 5e-3], cfg)
    assert math.isnan(co.table[0]["l1_to_previous"]) and co.table[1]["l1_to_previous"] >= 0
    with pytest.raises(ValueError):
        ex.compactness_diagnostic(mask, [5e-3, 1e-2], cfg)


def test_kernel_checks_pass():
    res = ex.kernel_checks(n_alpha=10)
    assert res.passed, [r.as_dict() for r in res.failures]


def test_lower_bound_constant():
    assert LOWER_BOUND_CONSTANT == pytest.approx(math.pi**2 * math.e / 4)


def test_warn_large_epsilon():
    with pytest.warns(UserWarning):
        ex.warn_large_epsilon(0.1, 1e-2)
