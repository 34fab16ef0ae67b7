"""Explicit low-energy constructions: the transition profile, disk bubbles and packings.

In the stretched variable ``y = rho / eps`` the profile reads
``xi = sin(theta)`` with ``theta(y) = (pi/2) gd(y) / gd(Y)``, where ``gd`` is
the Gudermannian function and ``Y = eps^(-1/2)``; all one-dimensional
integrals below are evaluated in that variable.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import elliprd, elliprf

from .field_energy import Magnetization2D
from .geometry import DomainMask, GeometryError


class ProfileError(ValueError):
    pass


# -- the profile ---------------------------------------------------------------


def _gd(y):
    return 2.0 * np.arctan(np.tanh(0.5 * np.asarray(y, dtype=float)))


def _gd_complement(y):
    """pi/2 - gd(y) for y >= 0, without cancellation."""
    return 2.0 * np.arctan(np.exp(-np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class Profile1D:
    epsilon: float
    rho: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def half_width(self) -> float:
        return math.sqrt(self.epsilon)

    @property
    def inner_constant(self) -> float:
        return float(_gd(self.epsilon**-0.5))

    @classmethod
    def sample(cls, epsilon: float, n: int = 2001, margin: float = 0.5) -> Profile1D:
        a = math.sqrt(epsilon)
        rho = np.linspace(-a * (1 + margin), a * (1 + margin), n)
        return cls(epsilon, rho, xi_eps(epsilon, rho))


def _check_eps(epsilon):
    if not 0.0 < epsilon < 1.0:
        raise ProfileError("epsilon must lie in (0, 1)")


def _theta_y(epsilon, y):
    """Angle theta and pi/2 - |theta| as functions of the stretched variable."""
    Y = epsilon**-0.5
    u0 = _gd(Y)
    ya = np.minimum(np.abs(y), Y)
    theta = 0.5 * math.pi * _gd(ya) / u0
    comp = 0.5 * math.pi / u0 * (_gd_complement(ya) - _gd_complement(Y))
    return np.sign(y) * theta, comp


def xi_eps(epsilon: float, rho):
    """Transition profile, odd, equal to sign(rho) for |rho| >= sqrt(eps)."""
    _check_eps(epsilon)
    rho = np.asarray(rho, dtype=float)
    theta, _ = _theta_y(epsilon, rho / epsilon)
    val = np.where(np.abs(rho) >= math.sqrt(epsilon), np.sign(rho), np.sin(theta))
    return float(val) if val.ndim == 0 else val


def _one_minus_xi(epsilon, y):
    """1 - |xi| evaluated as 2 sin^2((pi/2 - |theta|)/2)."""
    _, comp = _theta_y(epsilon, y)
    return 2.0 * np.sin(0.5 * comp) ** 2


def xi_eps_derivative(epsilon: float, rho):
    _check_eps(epsilon)
    rho = np.asarray(rho, dtype=float)
    Y = epsilon**-0.5
    y = rho / epsilon
    theta, _ = _theta_y(epsilon, y)
    dtheta = 0.5 * math.pi / _gd(Y) / np.cosh(np.minimum(np.abs(y), 700.0))
    val = np.where(np.abs(y) >= Y, 0.0, np.cos(theta) * dtheta / epsilon)
    return float(val) if val.ndim == 0 else val


def profile_total_variation(epsilon: float) -> float:
    return float(xi_eps(epsilon, math.sqrt(epsilon)) - xi_eps(epsilon, -math.sqrt(epsilon)))


def profile_local_energy(epsilon: float) -> float:
    """(1/2) int eps |xi'|^2 / (1 - xi^2) + (1 - xi^2) / eps, in closed stretched form."""
    _check_eps(epsilon)
    Y = epsilon**-0.5
    u0 = float(_gd(Y))
    c = 0.5 * math.pi / u0

    def integrand(y):
        _, comp = _theta_y(epsilon, y)
        # |theta_y|^2 + cos^2(theta), with cos(theta) = sin(pi/2 - theta)
        e = math.exp(-y)
        return (2 * c * e / (1 + e * e)) ** 2 + math.sin(float(comp)) ** 2

    pts = [p for p in (1.0, 4.0, 16.0) if p < Y]
    val, err = integrate.quad(integrand, 0.0, Y, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=400)
    if err > 1e-8:
        raise ProfileError("profile local energy quadrature did not converge")
    return val  # (1/2) * 2 * int_0^Y by symmetry


def profile_modica_mortola_gap(epsilon: float) -> float:
    return profile_local_energy(epsilon) - profile_total_variation(epsilon)


# -- nonlocal profile energies ----------------------------------------------------


def _breakpoints(Y: float) -> np.ndarray:
    fine = np.arange(0.0, min(Y, 24.0), 0.5)
    coarse = np.geomspace(24.0, Y, max(2, int(math.log2(Y / 24.0) * 4) + 2)) if Y > 24.0 else np.array([])
    return np.unique(np.concatenate([fine, coarse, [Y]]))


def _composite_nodes(breaks: np.ndarray, n: int = 12):
    x, w = np.polynomial.legendre.leggauss(n)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _core_core(epsilon: float, b: float, p: int) -> float:
    """iint over [-b, b]^2 of |xi(r) - xi(r')|^2 / |r - r'|^p, for b <= sqrt(eps)."""
    Yb = b / epsilon
    half = _breakpoints(Yb)
    # outer variable w = y' - y in (0, 2 Yb), graded near the origin
    wn, ww = _composite_nodes(np.unique(np.concatenate([half, half[half > 0] + Yb, [2 * Yb]])))
    wn, ww = wn[wn < 2 * Yb], ww[wn < 2 * Yb]
    ybreak = np.concatenate([-half[::-1], half[1:]])
    total = 0.0
    for w, wt in zip(wn, ww):
        # inner variable y over (-Yb, Yb - w); the profile bends near y = 0 and y = -w
        br = np.unique(np.concatenate([ybreak, ybreak - w]))
        br = br[(br >= -Yb) & (br <= Yb - w)]
        br = np.unique(np.concatenate([[-Yb, Yb - w], br]))
        yn, yw = _composite_nodes(br, 8)
        d = np.asarray(xi_eps(epsilon, epsilon * (yn + w))) - np.asarray(xi_eps(epsilon, epsilon * yn))
        total += wt * w ** (-p) * np.dot(yw, d * d)
    return 2.0 * epsilon ** (2 - p) * total


def _core_outer(epsilon: float, H: float, p: int) -> float:
    """int_{-a}^{a} (1 - xi(r))^2 int_a^H (r' - r)^(-p) dr' dr with a = sqrt(eps)."""
    a = math.sqrt(epsilon)
    Y = a / epsilon
    half = _breakpoints(Y)
    yn, yw = _composite_nodes(np.concatenate([-half[::-1], half[1:]]))
    rho = epsilon * yn
    one_minus = np.where(yn >= 0, _one_minus_xi(epsilon, yn), 2.0 - _one_minus_xi(epsilon, yn))
    if p == 2:
        J = 1.0 / (a - rho) - 1.0 / (H - rho)
    elif p == 1:
        J = np.log((H - rho) / (a - rho))
    else:
        J = np.full_like(rho, H - a)
    return epsilon * float(np.dot(yw, one_minus**2 * J))


def _outer_outer(epsilon: float, H: float, p: int) -> float:
    """int_a^H int_a^H (u + v)^(-p) du dv."""
    a = math.sqrt(epsilon)
    if p == 2:
        return math.log((H + a) ** 2 / (4 * a * H))
    if p == 1:
        F = lambda x: x * math.log(x) - x  # noqa: E731
        return F(2 * H) - 2 * F(H + a) + F(2 * a)
    return (H - a) ** 2


def profile_nonlocal_energy(epsilon: float, H: float, powers=(2, 1, 0)) -> dict:
    """(1/4) iint_{[-H, H]^2} |xi(r) - xi(r')|^2 / |r - r'|^p for each requested p."""
    _check_eps(epsilon)
    if H < 2 * epsilon:
        raise ProfileError("window half-width must satisfy H >= 2 eps")
    a = math.sqrt(epsilon)
    out = {}
    for p in powers:
        if p not in (0, 1, 2):
            raise ProfileError("kernel power must be 0, 1 or 2")
        if H <= a:
            out[p] = 0.25 * _core_core(epsilon, H, p)
        else:
            out[p] = 0.25 * (_core_core(epsilon, a, p) + 4 * _core_outer(epsilon, H, p) + 8 * _outer_outer(epsilon, H, p))
    return out


def profile_nonlocal_oracle(epsilon: float, H: float, p: int) -> float:
    """Nested adaptive quadrature of the same double integral (slow; for tests)."""
    a = math.sqrt(epsilon)

    def inner(r):
        pts = sorted({q for q in (r, -a, 0.0, a) if -H < q < H})
        f = lambda s: (xi_eps(epsilon, r) - xi_eps(epsilon, s)) ** 2 / abs(r - s) ** p if s != r else 0.0  # noqa: E731
        return integrate.quad(f, -H, H, points=pts, epsabs=1e-13, epsrel=1e-10, limit=500)[0]

    pts = sorted({q for q in (-a, -epsilon, 0.0, epsilon, a) if -H < q < H})
    val = integrate.quad(inner, -H, H, points=pts, epsabs=1e-12, epsrel=1e-9, limit=500)[0]
    return 0.25 * val


def tangential_integral_rest(u: float, ell: float) -> float:
    """int_{-l}^{l} ds / (s^2 + u^2) = (2/u) arctan(l/u)."""
    return 2.0 / u * math.atan(ell / u)


def tangential_integral_cubic(u: float, ell: float) -> float:
    """int_{-l}^{l} ds / (s^2 + u^2)^(3/2) = (2/u^2) (1 + u^2/l^2)^(-1/2)."""
    return 2.0 / u**2 / math.sqrt(1.0 + u * u / (ell * ell))


# -- disk bubble -----------------------------------------------------------------


def disk_bubble(mask: DomainMask, center, R: float, epsilon: float, outside: float = -1.0) -> Magnetization2D:
    """Reversed-domain bubble: m3 = xi(R - |x - c|), in-plane part along the tangent."""
    _check_eps(epsilon)
    a = math.sqrt(epsilon)
    if R <= a:
        raise ProfileError("bubble radius must exceed sqrt(eps)")
    cx, cy = center
    if float(mask.shape.distance_inside(np.array(cx), np.array(cy))) < R + a:
        raise GeometryError("bubble and its transition collar must lie inside the domain")
    X, Y = mask.centers()
    dx, dy = X - cx, Y - cy
    r = np.hypot(dx, dy)
    m3 = np.asarray(xi_eps(epsilon, R - r))
    if outside != -1.0:
        m3 = np.where(r >= R + a, outside, m3)
    inplane = np.sqrt(np.clip(1.0 - m3 * m3, 0.0, None))
    # inplane vanishes wherever r < R - sqrt(eps), so the tangent is never needed at r = 0
    with np.errstate(invalid="ignore", divide="ignore"):
        tx = np.where(inplane > 0, -dy / r, 0.0)
        ty = np.where(inplane > 0, dx / r, 0.0)
    return Magnetization2D(mask, np.stack([inplane * tx, inplane * ty, m3]))


def _sigma_integral_scaled(r1, r2, R, ell):
    """d^2 * int_{-l}^{l} ds / |r1 e(0) - r2 e(s/R)|^3 with d = r1 - r2.

    Closed form via Carlson's symmetric integrals; the scaled form stays
    finite on the diagonal, where it tends to 2 R / sqrt(r1 r2).
    """
    d = np.asarray(r1 - r2, dtype=float)
    k = 4.0 * r1 * r2
    phi0 = 0.5 * ell / R
    s, c = math.sin(phi0), math.cos(phi0)
    d2 = np.maximum(d * d, 1e-300)
    m = -k / d2
    D = 1.0 - m * s * s
    E = s * elliprf(c * c, D, 1.0) - m / 3.0 * s**3 * elliprd(c * c, D, 1.0)
    J = (E - m * s * c / np.sqrt(D)) / (1.0 - m)
    # d^2 * R * 4 J / |d|^3 written without dividing by d
    scaled = 4.0 * R * J / np.sqrt(d2)
    diag = 2.0 * R / np.sqrt(r1 * r2)
    return np.where(np.abs(d) < 1e-14 * R, diag, scaled)


def sigma_integral(r1: float, r2: float, R: float, ell: float) -> float:
    d = r1 - r2
    return float(_sigma_integral_scaled(np.float64(r1), np.float64(r2), R, ell)) / (d * d)


def sigma_integral_oracle(r1: float, r2: float, R: float, ell: float) -> float:
    f = lambda s: ((r1 - r2) ** 2 + 4 * r1 * r2 * math.sin(0.5 * s / R) ** 2) ** -1.5  # noqa: E731
    d = abs(r1 - r2)
    pts = [q for q in d * np.geomspace(1.0, 1e6, 13) if 0 < q < ell] or None
    return 2.0 * integrate.quad(f, 0.0, ell, points=pts, epsabs=0, epsrel=1e-12, limit=800)[0]


@dataclass(frozen=True)
class BubbleGap:
    L_eps: float
    N_lower: float
    gap: float
    perimeter: float

    @property
    def F_upper(self) -> float:
        """Upper bound for the finite-range energy of the construction."""
        return self.L_eps - self.N_lower


def _check_ordering(R, H, ell):
    if not (H >= 2 and ell >= 4 * H and R >= 4 * ell):
        raise ProfileError("require H >= 2, ell >= 4 H and R >= 4 ell")
    if ell >= math.pi * R:
        raise ProfileError("tangential window must satisfy ell < pi R")


def bubble_local_energy(R: float, epsilon: float) -> float:
    """Exact local energy of the disk bubble via the coarea formula.

    Includes the in-plane rotation term (1 - xi^2)/r^2 of the tangential field.
    """
    _check_eps(epsilon)
    a = math.sqrt(epsilon)
    Y = a / epsilon
    half = _breakpoints(Y)
    yn, yw = _composite_nodes(np.concatenate([-half[::-1], half[1:]]), 16)
    rho = epsilon * yn
    theta, comp = _theta_y(epsilon, yn)
    c = 0.5 * math.pi / float(_gd(Y))
    cos2 = np.sin(comp) ** 2  # 1 - xi^2
    # per unit length, in the stretched variable: (1/2)(theta_y^2 + cos^2 theta)
    line = 0.5 * ((c / np.cosh(np.minimum(np.abs(yn), 700.0))) ** 2 + cos2)
    r = R - rho
    rotation = 0.5 * epsilon * cos2 / r**2 * epsilon  # (eps/2)(1 - xi^2)/r^2 d rho, d rho = eps dy
    log_eps = abs(math.log(epsilon))
    return log_eps * float(np.dot(yw, (line + rotation) * 2 * math.pi * r))


def bubble_nonlocal_lower(R: float, epsilon: float, H: float, ell: float, n: int = 12) -> float:
    """Lower bound for N of the bubble from pairs in a tube around the circle.

    Only pairs (x, y) with |d(x)|, |d(y)| < H and tangential separation at most
    ell along the circle are kept; the angular integral is done in closed form
    and the remaining (rho, rho') integral by graded Gauss-Legendre panels.
    """
    a = math.sqrt(epsilon)
    Y = a / epsilon
    half = _breakpoints(Y) * epsilon
    tail = np.geomspace(a, H, 24)
    br = np.unique(np.concatenate([-tail[::-1], -half[::-1], half, tail]))
    nodes, weights = _composite_nodes(br, n)
    xi = np.asarray(xi_eps(epsilon, nodes))
    P, Pp = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.outer(weights, weights)
    dxi2 = (xi[:, None] - xi[None, :]) ** 2
    r1, r2 = R + P, R + Pp
    d = P - Pp
    # |xi - xi'|^2 / d^2 is bounded on the diagonal; use the scaled sigma integral
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(d) > 0, dxi2 / np.maximum(d * d, 1e-300), 0.0)
    diag = np.abs(d) == 0
    if np.any(diag):
        dxi = np.asarray(xi_eps_derivative(epsilon, nodes))
        ratio[diag] = (dxi[:, None] * np.ones_like(P))[diag] ** 2
    I = _sigma_integral_scaled(r1, r2, R, ell)
    integrand = r1 * (r2 / R) * ratio * I
    return 2 * math.pi / 8.0 * float(np.sum(W * integrand))


def bubble_energy_gap(mask: DomainMask | None, R: float = 200.0, epsilon: float = 1e-3, H: float = 8.0, ell: float = 40.0) -> BubbleGap:
    """Local energy, nonlocal lower bound and their difference for the disk bubble."""
    _check_eps(epsilon)
    _check_ordering(R, H, ell)
    if mask is not None:
        x0, y0, x1, y1 = mask.shape.bounds()
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        if float(mask.shape.distance_inside(np.array(cx), np.array(cy))) < R + H:
            raise GeometryError("domain too small for the bubble tube")
    L = bubble_local_energy(R, epsilon)
    N = bubble_nonlocal_lower(R, epsilon, H, ell)
    return BubbleGap(L_eps=L, N_lower=N, gap=N - L, perimeter=2 * math.pi * R)


# -- packing ----------------------------------------------------------------------


@dataclass(frozen=True)
class BubbleLayout:
    mask: DomainMask
    R: float
    centers: tuple[tuple[float, float], ...]
    min_center_distance: float

    @property
    def count(self) -> int:
        return len(self.centers)

    def as_dict(self) -> dict:
        return {
            "R": self.R,
            "centers": [list(c) for c in self.centers],
            "min_center_distance": self.min_center_distance,
            "mask": self.mask.descriptor(),
        }


def pack_bubbles(mask: DomainMask, R: float) -> BubbleLayout:
    """Hexagonal lattice of bubble centres, spacing 4R, filtered by containment.

    Each bubble of radius R is kept when the ball of radius 2R around its
    centre lies in the domain, so collars stay inside and distinct bubbles
    are at least 2R apart.
    """
    if not R > 0:
        raise ProfileError("bubble radius must be positive")
    spacing = 4.0 * R
    x0, y0, x1, y1 = mask.shape.bounds()
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    dy = spacing * math.sqrt(3) / 2
    nrow = int(math.ceil((y1 - y0) / dy)) + 1
    ncol = int(math.ceil((x1 - x0) / spacing)) + 1
    centers = []
    for j in range(-nrow, nrow + 1):
        shift = 0.5 * spacing if j % 2 else 0.0
        for i in range(-ncol, ncol + 1):
            px, py = cx + i * spacing + shift, cy + j * dy
            if float(mask.shape.distance_inside(np.array(px), np.array(py))) >= 2 * R:
                centers.append((px, py))
    if not centers:
        warnings.warn("no bubble fits into the domain", stacklevel=2)
    return BubbleLayout(mask, float(R), tuple(centers), spacing if len(centers) > 1 else math.inf)


def multi_bubble_field(layout: BubbleLayout, epsilon: float) -> Magnetization2D:
    """Bubbles in every layout disk, m = -e3 elsewhere."""
    mask = layout.mask
    vals = np.zeros((3, mask.ny, mask.nx))
    vals[2] = -1.0
    for c in layout.centers:
        b = disk_bubble(mask, c, layout.R, epsilon)
        r = np.hypot(*(np.stack(mask.centers()) - np.asarray(c)[:, None, None]))
        near = r < layout.R + math.sqrt(epsilon)
        vals[:, near] = b.values[:, near]
    return Magnetization2D(mask, vals)
