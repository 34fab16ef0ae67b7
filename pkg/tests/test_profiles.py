import math

import numpy as np
import pytest

from thinfilm import field_energy as fe
from thinfilm import profiles as pr
from thinfilm.geometry import DomainMask, GeometryError
from thinfilm.params import derive

EPSILONS = [1e-2, 1e-3, 1e-4, 1e-6]


@pytest.mark.parametrize("eps", EPSILONS)
def test_profile_shape(eps):
    a = math.sqrt(eps)
    rho = np.linspace(-2 * a, 2 * a, 4001)
    xi = pr.xi_eps(eps, rho)
    assert np.all(np.abs(xi) <= 1)
    assert np.all(np.diff(xi) >= 0)
    assert np.allclose(pr.xi_eps(eps, -rho), -xi)
    assert np.all(xi[rho >= a] == 1) and np.all(xi[rho <= -a] == -1)
    assert pr.xi_eps(eps, 0.0) == 0.0
    assert pr.profile_total_variation(eps) == 2.0


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_profile_derivative_matches_difference(eps):
    rho = np.linspace(-0.9, 0.9, 37) * math.sqrt(eps)
    d = 1e-6 * eps
    fd = (pr.xi_eps(eps, rho + d) - pr.xi_eps(eps, rho - d)) / (2 * d)
    assert np.allclose(pr.xi_eps_derivative(eps, rho), fd, rtol=1e-6, atol=1e-6 / eps)


@pytest.mark.parametrize("eps", EPSILONS)
def test_profile_local_energy_near_two(eps):
    val = pr.profile_local_energy(eps)
    assert 2.0 - 1e-12 <= val <= 2.01
    assert pr.profile_modica_mortola_gap(eps) >= -1e-12


def test_profile_local_energy_matches_quadrature_in_rho():
    from scipy import integrate

    eps = 1e-2
    a = math.sqrt(eps)

    def f(r):
        xi = pr.xi_eps(eps, r)
        d = pr.xi_eps_derivative(eps, r)
        return 0.5 * (eps * d * d / (1 - xi * xi) + (1 - xi * xi) / eps)

    val = integrate.quad(f, -a, a, points=[0.0], epsabs=1e-12, epsrel=1e-10, limit=400)[0]
    assert val == pytest.approx(pr.profile_local_energy(eps), rel=1e-8)


@pytest.mark.parametrize("p", [2, 1, 0])
def test_nonlocal_profile_matches_oracle(p):
    fast = pr.profile_nonlocal_energy(1e-2, 0.5, (p,))[p]
    assert fast == pytest.approx(pr.profile_nonlocal_oracle(1e-2, 0.5, p), rel=1e-8)


def test_nonlocal_profile_sharp_interface_limits():
    # near the sharp-step limit p = 0 gives 2 H^2 and p = 1 gives 4 H ln 2
    eps, H = 1e-4, 1.0
    vals = pr.profile_nonlocal_energy(eps, H)
    assert vals[0] == pytest.approx(2 * H * H, rel=1e-3)
    assert vals[1] == pytest.approx(4 * H * math.log(2), rel=1e-2)


def test_nonlocal_logarithmic_slopes():
    ln = {e: pr.profile_nonlocal_energy(e, 1.0, (2,))[2] for e in (1e-2, 1e-3, 1e-4)}
    slopes = [(ln[b] - ln[a]) / math.log(a / b) for a, b in ((1e-2, 1e-3), (1e-3, 1e-4))]
    assert slopes == pytest.approx([2.0, 2.0], rel=0.05)
    lh = [pr.profile_nonlocal_energy(1e-3, H, (2,))[2] for H in (0.5, 1.0, 2.0)]
    assert np.diff(lh) / math.log(2) == pytest.approx([2.0, 2.0], rel=0.05)


def test_nonlocal_window_validation():
    with pytest.raises(pr.ProfileError):
        pr.profile_nonlocal_energy(1e-2, 0.01)
    with pytest.raises(pr.ProfileError):
        pr.profile_nonlocal_energy(1e-2, 1.0, (3,))
    with pytest.raises(pr.ProfileError):
        pr.xi_eps(1.5, 0.0)


@pytest.mark.parametrize("u,ell", [(0.1, 1.0), (2.0, 3.0), (1e-3, 40.0)])
def test_tangential_integrals(u, ell):
    from scipy import integrate

    rest = integrate.quad(lambda s: 1 / (s * s + u * u), -ell, ell, points=[0.0], epsrel=1e-12, limit=200)[0]
    cubic = integrate.quad(lambda s: (s * s + u * u) ** -1.5, -ell, ell, points=[0.0], epsrel=1e-12, limit=200)[0]
    assert pr.tangential_integral_rest(u, ell) == pytest.approx(rest, rel=1e-9)
    assert pr.tangential_integral_cubic(u, ell) == pytest.approx(cubic, rel=1e-9)


@pytest.mark.parametrize("r1,r2", [(1.0, 1.1), (200.0, 200.001), (199.5, 201.0), (50.0, 49.0)])
def test_sigma_integral_closed_form(r1, r2):
    R, ell = 200.0 if r1 > 100 else 5.0, 40.0 if r1 > 100 else 2.0
    assert pr.sigma_integral(r1, r2, R, ell) == pytest.approx(pr.sigma_integral_oracle(r1, r2, R, ell), rel=1e-9)


def test_disk_bubble_field():
    eps = 1e-2
    mask = DomainMask.disk(1.0, 1 / 64)
    m = pr.disk_bubble(mask, (0.0, 0.0), 0.5, eps)
    r = np.hypot(*mask.centers())
    a = math.sqrt(eps)
    ins = mask.inside
    assert np.all(m.m3[ins & (r < 0.5 - a)] == 1)
    assert np.all(m.m3[ins & (r > 0.5 + a)] == -1)
    assert fe.bv_norm(m) == pytest.approx(2 * 2 * math.pi * 0.5, rel=0.05)
    with pytest.raises(GeometryError):
        pr.disk_bubble(mask, (0.0, 0.0), 0.95, eps)
    with pytest.raises(pr.ProfileError):
        pr.disk_bubble(mask, (0.0, 0.0), 0.05, eps)


def test_bubble_local_energy_matches_grid():
    eps = 1e-2
    mask = DomainMask.disk(0.8, 1 / 400)
    m = pr.disk_bubble(mask, (0.0, 0.0), 0.5, eps)
    grid = fe.local_energy_L(m, derive(eps))
    assert grid == pytest.approx(pr.bubble_local_energy(0.5, eps), rel=0.02)


def test_bubble_gap_certificate():
    gap = pr.bubble_energy_gap(None)
    assert gap.gap > 0
    assert gap.F_upper == pytest.approx(-gap.gap)
    assert gap.L_eps == pytest.approx(2 * math.pi * 200 * 2 * abs(math.log(1e-3)), rel=1e-3)
    with pytest.raises(pr.ProfileError):
        pr.bubble_energy_gap(None, R=100.0, H=8.0, ell=40.0)


def test_pack_bubbles_spacing_and_containment():
    mask = DomainMask.rectangle(1.0, 1.0, 1 / 64)
    layout = pr.pack_bubbles(mask, 0.05)
    assert layout.count >= 4
    c = np.array(layout.centers)
    d = np.hypot(*(c[:, None, :] - c[None, :, :]).transpose(2, 0, 1))
    assert d[~np.eye(len(c), dtype=bool)].min() >= 0.2 - 1e-12
    for x, y in layout.centers:
        assert mask.shape.distance_inside(np.array(x), np.array(y)) >= 0.1
    with pytest.warns(UserWarning):
        assert pr.pack_bubbles(mask, 0.4).count == 0


def test_multi_bubble_local_energy_decouples():
    eps = 1e-3
    p = derive(eps)
    mask = DomainMask.rectangle(1.0, 1.0, 1 / 256)
    layout = pr.pack_bubbles(mask, 0.1)
    many = fe.local_energy_L(pr.multi_bubble_field(layout, eps), p)
    one = fe.local_energy_L(pr.disk_bubble(mask, layout.centers[0], 0.1, eps), p)
    assert many == pytest.approx(layout.count * one, rel=1e-9)
