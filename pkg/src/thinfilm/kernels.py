"""Stray-field kernels of a film of finite thickness.

All functions accept scalars or numpy arrays.  Every closed form has a
companion ``*_quadrature_oracle`` that evaluates the defining integral
numerically and shares no algebra with the closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

FOUR_PI = 4.0 * math.pi


class KernelDomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def _nonneg(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise KernelDomainError("kernel argument must be non-negative")
    return a


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


# above this argument Gamma and Theta are evaluated as 1 minus a series tail
_TAIL = 1e3


def gamma(alpha):
    """Vertical attenuation kernel, 2a^2 (1 - a/sqrt(1+a^2))."""
    a = _nonneg(alpha)
    s = np.sqrt(1.0 + a * a)
    # 1 - a/s rewritten as 1/(s(s+a)) to avoid cancellation for large a
    val = 2.0 * a * a / (s * (s + a))
    # far tail: 1 - (accurate small remainder) keeps rounding monotone
    val = np.where(a > _TAIL, 1.0 - np.asarray(one_minus_gamma(a)), val)
    return _out(val, alpha)


def one_minus_gamma(alpha):
    a = _nonneg(alpha)
    s = np.sqrt(1.0 + a * a)
    return _out((1.0 + a / (s + a)) / (s * (s + a)), alpha)


def theta(alpha):
    """Tangential attenuation kernel, 2(a arsinh(1/a) + a^2 - a sqrt(1+a^2))."""
    a = _nonneg(alpha)
    s = np.sqrt(1.0 + a * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = 1.0 / a
        # a^2 - a s = -a / (a + s); both terms are O(1/a) for large a
        val = 2.0 * a * (np.arcsinh(u) - u / (1.0 + np.sqrt(1.0 + u * u)))
    val = np.where(a == 0.0, 0.0, val)
    with np.errstate(divide="ignore"):
        u2 = np.where(a > _TAIL, 1.0 / (a * a), 0.0)
    val = np.where(a > _TAIL, 1.0 - u2 * (1 / 12 - u2 * (1 / 40 - u2 * 5 / 448)), val)
    return _out(val, alpha)


def newton_kernel(x, x3):
    """K(x, x3) = 1 / (4 pi |(x, x3)|) for a planar offset ``x``."""
    r2 = np.sum(np.square(np.asarray(x, dtype=float)), axis=-1) + np.square(x3)
    if np.any(r2 == 0):
        raise KernelDomainError("Newton kernel is singular at the origin")
    return _out(1.0 / (FOUR_PI * np.sqrt(r2)), r2)


def newton_kernel_fourier(xi, x3):
    """Planar Fourier transform of K: exp(-|x3||xi|) / (4 pi |xi|)."""
    k = np.abs(np.asarray(xi, dtype=float))
    if k.ndim and k.shape[-1] == 2:
        k = np.hypot(k[..., 0], k[..., 1])
    if np.any(k == 0):
        raise KernelDomainError("Fourier kernel is singular at xi = 0")
    return _out(np.exp(-np.abs(x3) * k) / (FOUR_PI * k), k)


def _check_rt(r, t):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise KernelDomainError("slab kernel is singular at r = 0")
    if np.any(np.asarray(t) <= 0):
        raise KernelDomainError("thickness must be positive")
    return r


def slab_kernel_Gt(r, t):
    """G_t(r) = t^2 Gamma(r/t) / (4 pi r^3)."""
    r = _check_rt(r, t)
    return _out(t * t * np.asarray(gamma(r / t)) / (FOUR_PI * r**3), r)


def slab_kernel_Gt_direct(r, t):
    """Same kernel in the form (1 - 1/sqrt(1 + (t/r)^2)) / (2 pi r)."""
    r = _check_rt(r, t)
    q = (t / r) ** 2
    s = np.sqrt(1.0 + q)
    # 1 - 1/s written as q / (s (s + 1)) to avoid cancellation for small t/r
    return _out(q / (s * (s + 1.0)) / (2 * math.pi * r), r)


def thin_film_multiplier(i: int, xi_mag, x3, t):
    """Closed-form Fourier multipliers of the reduced stray field inside the film."""
    if i not in (1, 2, 3):
        raise KernelDomainError("multiplier index must be 1, 2 or 3")
    x3 = np.asarray(x3, dtype=float)
    if np.any(x3 <= 0) or np.any(x3 >= t):
        raise KernelDomainError("height must lie strictly inside (0, t)")
    k = np.abs(np.asarray(xi_mag, dtype=float))
    lo = np.exp(-k * x3)
    hi = np.exp(-k * (t - x3))
    if i == 1:
        val = 0.5 * (hi + lo - 2.0)
    elif i == 2:
        val = 0.5 * (hi - lo)
    else:
        val = 0.5 * (hi + lo)
    return _out(val, np.broadcast_to(k, np.broadcast(k, x3).shape))


# closed form = MULTIPLIER_SCALE[i] * (defining integral evaluated with K-hat)
MULTIPLIER_SCALE = {1: -0.5, 2: 0.5, 3: -0.5}


def multiplier_quadrature_oracle(i: int, xi_mag: float, x3: float, t: float) -> float:
    """Evaluate the defining x3'-integral of multiplier ``i`` by quadrature.

    The return value is the raw integral; multiply by ``MULTIPLIER_SCALE[i]``
    to compare with :func:`thin_film_multiplier`.  For ``i = 3`` the
    second derivative of K-hat carries a point mass at x3' = x3, added
    analytically.
    """
    k = abs(float(xi_mag))
    if k == 0:
        return {1: 0.0, 2: 0.0, 3: -2.0}[i]

    def khat(z):
        return math.exp(-k * abs(z)) / (FOUR_PI * k)

    def d_khat(z):
        return math.copysign(1.0, z) * math.exp(-k * abs(z)) / FOUR_PI

    def d2_khat(z):
        return k * math.exp(-k * abs(z)) / FOUR_PI

    f, pref, delta = {
        1: (khat, FOUR_PI * k * k, 0.0),
        2: (d_khat, FOUR_PI * k, 0.0),
        3: (d2_khat, FOUR_PI, -2.0),
    }[i]
    val, err = integrate.quad(lambda s: f(x3 - s), 0.0, t, points=[x3], epsabs=1e-14, epsrel=1e-12)
    return pref * val + delta


def gamma_quadrature_oracle(alpha: float, tol: float = 1e-13) -> float:
    """Gamma from 4 pi r^3 / t^2 * 2 (K(r,0) - K(r,t)) with r = alpha, t = 1.

    The difference K(r,0) - K(r,1) is obtained by integrating -d/dz K(r,z)
    over z in [0, 1].
    """
    r = float(alpha)
    if r <= 0:
        raise KernelDomainError("oracle requires alpha > 0")
    val, err = integrate.quad(
        lambda z: z / (FOUR_PI * (r * r + z * z) ** 1.5), 0.0, 1.0, epsabs=tol, epsrel=1e-12, limit=200
    )
    if err > 1e-9 * max(abs(val), 1e-300) and err > tol * 10:
        raise QuadratureError(f"gamma oracle did not converge at alpha={alpha}")
    return FOUR_PI * r**3 * 2.0 * val


def theta_quadrature_oracle(alpha: float, tol: float = 1e-12) -> float:
    """Theta from (4 pi r / t^2) times the double integral of K(r, u - v) over [0,1]^2."""
    r = float(alpha)
    if r <= 0:
        raise KernelDomainError("oracle requires alpha > 0")

    def K(u, v):
        return 1.0 / (FOUR_PI * math.sqrt(r * r + (u - v) ** 2))

    def inner(u):
        a, ea = integrate.quad(lambda v: K(u, v), 0.0, u, epsabs=tol, epsrel=1e-12, limit=200)
        b, eb = integrate.quad(lambda v: K(u, v), u, 1.0, epsabs=tol, epsrel=1e-12, limit=200)
        return a + b

    val, err = integrate.quad(inner, 0.0, 1.0, epsabs=tol, epsrel=1e-11, limit=200)
    if err > 1e-8:
        raise QuadratureError(f"theta oracle did not converge at alpha={alpha}")
    return FOUR_PI * r * val


def gt_radial_integral(t: float = 1.0) -> float:
    """Integral over rho in (0, inf) of 1 - rho/sqrt(t^2 + rho^2); equals t."""
    val, err = integrate.quad(
        lambda p: 1.0 - p / math.sqrt(t * t + p * p), 0.0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=500
    )
    return val


@dataclass(frozen=True)
class KernelTable:
    """Cubic splines of Gamma and Theta in log(alpha).

    Outside ``[alpha_min, alpha_max]`` the closed forms are used directly.
    """

    alpha_min: float = 1e-4
    alpha_max: float = 1e4
    n: int = 4001
    _gamma: CubicSpline = field(init=False, repr=False)
    _theta: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        x = np.linspace(math.log(self.alpha_min), math.log(self.alpha_max), self.n)
        a = np.exp(x)
        object.__setattr__(self, "_gamma", CubicSpline(x, gamma(a)))
        object.__setattr__(self, "_theta", CubicSpline(x, theta(a)))

    def _eval(self, spline, exact, alpha):
        a = _nonneg(alpha)
        flat = np.atleast_1d(a).astype(float)
        out = np.empty_like(flat)
        inside = (flat >= self.alpha_min) & (flat <= self.alpha_max)
        out[inside] = spline(np.log(flat[inside]))
        out[~inside] = exact(flat[~inside])
        return _out(out.reshape(np.shape(a)), alpha)

    def gamma(self, alpha):
        return self._eval(self._gamma, gamma, alpha)

    def theta(self, alpha):
        return self._eval(self._theta, theta, alpha)
