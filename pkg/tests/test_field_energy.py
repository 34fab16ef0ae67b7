import math

import numpy as np
import pytest

from thinfilm import field_energy as fe
from thinfilm.field_energy import FieldError, Magnetization2D
from thinfilm.geometry import DomainMask
from thinfilm.params import derive
from thinfilm.profiles import profile_local_energy, xi_eps


def profile_wall(mask, eps, x0=0.5):
    X, _ = mask.centers()
    return Magnetization2D.from_m3(mask, np.where(mask.inside, xi_eps(eps, X - x0), 0.0), np.pi / 2)


def test_field_invariants():
    mask = DomainMask.disk(0.5, 0.05)
    m = Magnetization2D.random_unit(mask, np.random.default_rng(0))
    assert np.all(m.values[:, ~mask.inside] == 0)
    norm = np.linalg.norm(m.values, axis=0)[mask.inside]
    assert np.max(np.abs(norm - 1)) <= 1e-10
    with pytest.raises(FieldError):
        Magnetization2D(mask, 1.01 * m.values)
    with pytest.raises(ValueError):
        m.values[0, 0, 0] = 1.0


@pytest.mark.parametrize("direction", [(0, 0, 1), (0, 0, -1)])
def test_uniform_states_have_zero_energy(direction):
    mask = DomainMask.disk(1.0, 1 / 16)
    b = fe.F_eps(Magnetization2D.uniform(mask, direction), derive(1e-2))
    assert b.L_eps == 0.0 and b.N == 0.0 and b.F_eps == 0.0 and b.bv_norm == 0.0


def test_profile_wall_local_energy_per_length():
    eps = 1e-2
    p = derive(eps)
    mask = DomainMask.rectangle(1.0, 1.0, 1 / 512)
    L = fe.local_energy_L(profile_wall(mask, eps), p)
    assert L / p.log_eps == pytest.approx(2.0, rel=0.05)
    assert L / p.log_eps == pytest.approx(profile_local_energy(eps), rel=0.01)


def test_inplane_anisotropy_part():
    eps = 1e-2
    p = derive(eps)
    mask = DomainMask.disk(1.0, 1 / 32)
    m = Magnetization2D.from_function(mask, lambda X, Y: (-Y / np.hypot(X, Y), X / np.hypot(X, Y), 0 * X))
    expected = p.log_eps * mask.area() / (2 * eps)
    assert p.log_eps * fe.anisotropy_integral(m) / (2 * eps) == pytest.approx(expected, rel=1e-8)
    L = fe.local_energy_L(m, p)
    assert L == pytest.approx(expected + p.log_eps * eps / 2 * fe.exchange_sum(m), rel=1e-12)


def test_two_cell_nonlocal_energy():
    h = 0.1
    mask = DomainMask.rectangle(2 * h, h, h)
    assert mask.count == 2
    m = Magnetization2D.from_m3(mask, np.where(mask.xs[None, :] < h, 1.0, -1.0) * mask.inside)
    assert fe.nonlocal_energy_N(m) == pytest.approx(h, rel=1e-12)
    assert fe.nonlocal_energy_direct(m) == pytest.approx(h, rel=1e-12)


def test_constant_m3_has_no_nonlocal_energy():
    mask = DomainMask.disk(1.0, 1 / 16)
    m = Magnetization2D.from_m3(mask, 0.3 * mask.inside, 1.0)
    assert abs(fe.nonlocal_energy_N(m)) <= 1e-12


@pytest.mark.parametrize("R", [None, 0.317])
def test_fft_matches_direct_pair_sum(R):
    mask = DomainMask.polygon([(0, 0), (1, 0), (0.8, 0.9), (0.1, 0.7)], 1 / 30)
    m = Magnetization2D.random_unit(mask, np.random.default_rng(1))
    assert fe.nonlocal_energy_N(m, R=R) == pytest.approx(fe.nonlocal_energy_direct(m, R=R), rel=1e-12)


def test_half_plane_split_log_divergence():
    vals = {}
    for n in (32, 64):
        mask = DomainMask.rectangle(1.0, 1.0, 1 / n)
        m3 = np.where(mask.xs[None, :] > 0.5, 1.0, -1.0) * mask.inside
        m = Magnetization2D.from_m3(mask, m3)
        vals[n] = fe.nonlocal_energy_N(m)
        if n == 32:
            assert vals[n] == pytest.approx(fe.nonlocal_energy_direct(m), rel=1e-12)
    # interface of length 1, N ~ 2 ln(1/h) + const, so halving h adds 2 ln 2
    assert (vals[64] - vals[32]) / math.log(2) == pytest.approx(2.0, rel=0.1)


def test_finite_range_dominates():
    p = derive(1e-2)
    mask = DomainMask.disk(1.0, 1 / 16)
    rng = np.random.default_rng(2)
    for R in (0.1, 0.5, 5.0):
        m = Magnetization2D.random_unit(mask, rng)
        assert fe.F_eps(m, p).F_eps <= fe.F_eps_finite_range(m, p, R) + 1e-12
    b = fe.F_eps(m, p, R=0.5)
    assert b.F_eps <= b.F_eps_R


@pytest.mark.parametrize("R", [0.0, -1.0])
def test_finite_range_domain(R):
    mask = DomainMask.disk(1.0, 1 / 8)
    with pytest.raises(FieldError):
        fe.F_eps_finite_range(Magnetization2D.uniform(mask), derive(1e-2), R)


def test_breakdown_consistency():
    mask = DomainMask.disk(0.5, 1 / 32)
    b = fe.F_eps(Magnetization2D.random_unit(mask, np.random.default_rng(0)), derive(1e-2))
    assert b.F_eps == b.L_eps - b.N
    assert b.area == mask.area()


def test_e_eps_uniform():
    mask = DomainMask.disk(0.5, 1 / 16)
    b = fe.E_eps(Magnetization2D.uniform(mask), derive(1e-2))
    assert b.G_eps == 0.0 and b.E_eps == 0.0


def test_g_components_nonnegative():
    p = derive(1e-2)
    mask = DomainMask.disk(0.1, 0.01)
    rng = np.random.default_rng(5)
    for _ in range(10):
        b = fe.E_eps(Magnetization2D.random_unit(mask, rng), p)
        for part in (b.G_deficit, b.G_exterior, b.G_divergence):
            assert part >= -1e-10
        assert b.E_eps - b.F_eps == pytest.approx(b.G_eps, rel=1e-12)


def test_deficit_decreases_with_eps():
    mask = DomainMask.disk(0.5, 1 / 32)
    m = Magnetization2D.random_unit(mask, np.random.default_rng(7))
    deficits = [fe.E_eps(m, derive(eps)).G_deficit for eps in (1e-2, 1e-3, 1e-4)]
    assert deficits[0] > deficits[1] > deficits[2] >= 0


def test_bv_norm_sharp_split():
    h = 1 / 64
    mask = DomainMask.rectangle(1.0, 1.0, h)
    m = Magnetization2D.from_m3(mask, np.where(mask.xs[None, :] > 0.5, 1.0, -1.0) * mask.inside)
    assert 2 * (1 - 2 * h) <= fe.bv_norm(m) <= 2 * (1 + 2 * h)


def test_bv_norm_profile():
    eps = 1e-2
    mask = DomainMask.rectangle(1.0, 1.0, 1 / 256)
    assert fe.bv_norm(profile_wall(mask, eps)) == pytest.approx(2.0, rel=1e-2)


def test_modica_mortola_gap():
    eps = 1e-2
    p = derive(eps)
    mask = DomainMask.rectangle(1.0, 1.0, 1 / 512)
    assert fe.modica_mortola_gap(Magnetization2D.uniform(mask), p) == 0.0
    gap = fe.modica_mortola_gap(profile_wall(mask, eps), p)
    assert abs(gap) <= 2e-2
    sharp = Magnetization2D.from_m3(mask, np.where(mask.xs[None, :] > 0.5, 1.0, -1.0) * mask.inside)
    # a sharp jump on a grid finer than eps is dominated by the exchange spike
    assert fe.modica_mortola_gap(sharp, p) > 0


def test_mesh_refinement_consistency():
    p = derive(0.05)
    vals = []
    for n in (32, 64, 128):
        mask = DomainMask.rectangle(1.0, 1.0, 1 / n)
        X, Y = mask.centers()
        m = Magnetization2D.from_m3(mask, np.where(mask.inside, np.cos(np.pi * X) * np.sin(np.pi * Y), 0.0), 0.3)
        b = fe.F_eps(m, p)
        vals.append((b.N, b.L_eps))
    for k in range(2):
        coarse = 2 * vals[1][k] - vals[0][k]
        fine = 2 * vals[2][k] - vals[1][k]
        assert coarse == pytest.approx(fine, rel=0.02)


def test_uniform_is_strict_minimum_below_threshold():
    eps = 1e-2
    p = derive(eps)
    mask = DomainMask.disk(0.08, eps / 2)
    rng = np.random.default_rng(0)
    for k in range(1000):
        amp = 10 ** rng.uniform(-3, 0)
        v = np.array(Magnetization2D.uniform(mask, (0, 0, 1 - 2 * (k % 2))).values)
        v += amp * rng.standard_normal(v.shape)
        v /= np.linalg.norm(v, axis=0)
        assert fe.F_eps(Magnetization2D(mask, v), p).F_eps > 0
