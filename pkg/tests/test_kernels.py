import math

import numpy as np
import pytest

from thinfilm import kernels as k


@pytest.mark.parametrize("fn", [k.gamma, k.theta])
def test_zero_at_origin(fn):
    assert fn(0.0) == 0.0


def test_gamma_at_one():
    assert k.gamma(1.0) == pytest.approx(2 - math.sqrt(2), abs=1e-15)


def test_theta_at_one():
    assert k.theta(1.0) == pytest.approx(2 * (math.asinh(1.0) + 1 - math.sqrt(2)), abs=1e-15)


@pytest.mark.parametrize("fn, tol", [(k.gamma, 1e-6), (k.theta, 1e-5)])
def test_limit_at_infinity(fn, tol):
    assert abs(fn(1e6) - 1.0) <= tol


@pytest.mark.parametrize("fn", [k.gamma, k.theta])
def test_negative_alpha_rejected(fn):
    with pytest.raises(k.KernelDomainError):
        fn(-1e-3)


@pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
def test_oracles_match_closed_forms(alpha):
    assert abs(k.gamma_quadrature_oracle(alpha) - k.gamma(alpha)) <= 1e-6
    assert abs(k.theta_quadrature_oracle(alpha) - k.theta(alpha)) <= 1e-6


def test_oracles_near_zero():
    assert k.gamma_quadrature_oracle(1e-4) <= 1e-3
    # Theta decays only like 2 a ln(1/a); at 1e-4 it is 1.78e-3
    assert k.theta_quadrature_oracle(1e-4) == pytest.approx(k.theta(1e-4), abs=1e-9)
    assert k.theta_quadrature_oracle(1e-4) <= 2e-3
    assert k.theta(1e-6) <= 1e-3


def test_monotone_on_random_pairs():
    rng = np.random.default_rng(3)
    a = 10 ** rng.uniform(-6, 8, size=(1000, 2))
    lo, hi = a.min(axis=1), a.max(axis=1)
    for fn in (k.gamma, k.theta):
        assert np.all(fn(hi) >= fn(lo))


def test_bounds_on_wide_range():
    a = np.concatenate([[0.0], np.logspace(-12, 8, 4001)])
    for fn in (k.gamma, k.theta):
        v = fn(a)
        assert np.all((v >= 0) & (v <= 1))


def test_theta_small_alpha_expansion():
    a = 1e-10
    assert k.theta(a) == pytest.approx(2 * a * (math.log(2) - math.log(a)) - 2 * a, rel=1e-6)


def test_kernel_table_interpolation():
    table = k.KernelTable()
    a = np.exp(np.random.default_rng(0).uniform(math.log(1e-4), math.log(1e4), 500))
    assert np.max(np.abs(table.gamma(a) - k.gamma(a))) <= 1e-8
    assert np.max(np.abs(table.theta(a) - k.theta(a))) <= 1e-8
    assert table.gamma(1e6) == k.gamma(1e6)


def test_newton_kernel():
    assert k.newton_kernel([1.0, 0.0], 0.0) == pytest.approx(1 / (4 * math.pi))
    assert k.newton_kernel([3.0, 0.0], 4.0) == pytest.approx(1 / (20 * math.pi))
    with pytest.raises(k.KernelDomainError):
        k.newton_kernel([0.0, 0.0], 0.0)


def test_newton_kernel_fourier():
    assert k.newton_kernel_fourier(1.0, 0.0) == pytest.approx(1 / (4 * math.pi))
    assert k.newton_kernel_fourier(1.0, math.log(2)) == pytest.approx(1 / (8 * math.pi))
    assert k.newton_kernel_fourier(2.0, 0.0) == pytest.approx(1 / (8 * math.pi))
    with pytest.raises(k.KernelDomainError):
        k.newton_kernel_fourier(0.0, 1.0)


def test_slab_kernel_forms_agree():
    r, t = np.meshgrid([0.1, 1.0, 10.0], [0.1, 1.0, 10.0])
    assert np.allclose(k.slab_kernel_Gt(r, t), k.slab_kernel_Gt_direct(r, t), rtol=1e-12, atol=0)


def test_slab_kernel_far_field():
    r = 1e4
    assert k.slab_kernel_Gt(r, 1.0) * 4 * math.pi * r**3 == pytest.approx(1.0, abs=1e-7)
    with pytest.raises(k.KernelDomainError):
        k.slab_kernel_Gt(0.0, 1.0)


def test_slab_radial_integral():
    assert abs(k.gt_radial_integral(1.0) - 1.0) <= 1e-8


def test_multiplier_zero_frequency():
    assert k.thin_film_multiplier(1, 0.0, 0.03, 0.1) == 0.0
    assert k.thin_film_multiplier(2, 0.0, 0.03, 0.1) == 0.0
    assert k.thin_film_multiplier(3, 0.0, 0.03, 0.1) == 1.0


def test_multiplier_midplane_symmetry():
    xi = np.linspace(0, 100, 11)
    assert np.all(k.thin_film_multiplier(2, xi, 0.05, 0.1) == 0.0)


def test_multiplier_height_domain():
    with pytest.raises(k.KernelDomainError):
        k.thin_film_multiplier(1, 1.0, 0.1, 0.1)


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("xi, x3", [(0.5, 0.02), (7.0, 0.05), (40.0, 0.09)])
def test_multiplier_matches_defining_integral(i, xi, x3):
    raw = k.multiplier_quadrature_oracle(i, xi, x3, 0.1)
    assert k.MULTIPLIER_SCALE[i] * raw == pytest.approx(k.thin_film_multiplier(i, xi, x3, 0.1), abs=1e-10)
