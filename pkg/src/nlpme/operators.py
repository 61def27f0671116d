"""Discrete nonlocal operators on periodic grids.

Two families of operators live here:

* Spectral Fourier-multiplier operators: the fractional Laplacian
  (-Delta)^alpha with symbol |k|^(2*alpha), the Riesz-potential gradient
  d/dx (-Delta)^(-s) with symbol i*k*|k|^(-2s), plain spectral derivatives,
  and the Parseval energies built from the same symbols.

* The mollified singular-integral operator

      L_eps u(x) = C(1-s) * int (u(x) - u(y)) / (|x-y|^2 + eps^2)^((3-2s)/2) dy

  discretized as a direct O(n^2) quadrature with the kernel periodized over
  the box images.  As eps -> 0 it converges to the spectral (-Delta)^(1-s),
  which is what the convergence tests check.

All spectral operators annihilate the zero mode: on a periodic box the
Riesz potential of the mean is not defined, and the pressure is only
determined up to a constant anyway.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma, zeta

from .grid import Field, FracOrder

__all__ = [
    "spectral_derivative",
    "spectral_laplacian",
    "frac_laplacian",
    "riesz_gradient",
    "inv_laplacian_gradient",
    "half_order_energy",
    "neg_half_order_norm",
    "frac_constant",
    "mollified_frac_laplacian",
    "mollified_symbol",
    "mollified_half_apply",
    "line_frac_laplacian",
    "line_frac_laplacian_outside",
]


def _check_finite(f: Field):
    if not np.all(np.isfinite(f.values)):
        raise ValueError("operator input contains NaN or Inf")


def _apply_multiplier(f: Field, mult: np.ndarray) -> Field:
    out = np.fft.ifft(mult * np.fft.fft(f.values)).real
    return f.with_values(out)


def spectral_derivative(f: Field) -> Field:
    """First derivative with the Fourier multiplier i*k."""
    _check_finite(f)
    return _apply_multiplier(f, 1j * f.grid.wavenumbers)


def spectral_laplacian(f: Field) -> Field:
    """Second derivative with the multiplier -k^2."""
    _check_finite(f)
    return _apply_multiplier(f, -f.grid.wavenumbers**2)


def frac_laplacian(f: Field, order: FracOrder) -> Field:
    """Fractional Laplacian (-Delta)^alpha, multiplier |k|^(2*alpha).

    The zero mode maps to zero; constants are annihilated exactly.
    """
    _check_finite(f)
    k = f.grid.wavenumbers
    return _apply_multiplier(f, np.abs(k) ** (2.0 * order.alpha))


def riesz_gradient(f: Field, s: float) -> Field:
    """Gradient of the Riesz potential, d/dx (-Delta)^(-s).

    Fourier multiplier i*k*|k|^(-2s) with the zero mode projected out:
    the potential of the mean diverges on a periodic box, but the mean
    contributes no gradient, so the result is unambiguous.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    _check_finite(f)
    k = f.grid.wavenumbers
    absk = np.abs(k)
    absk[0] = 1.0  # guard; multiplier at k=0 set to 0 below
    mult = 1j * k * absk ** (-2.0 * s)
    mult[0] = 0.0
    return _apply_multiplier(f, mult)


def inv_laplacian_gradient(f: Field) -> Field:
    """Gradient of the inverse Laplacian, d/dx (-Delta)^(-1); multiplier i/k."""
    _check_finite(f)
    k = f.grid.wavenumbers.copy()
    k[0] = 1.0
    mult = 1j / k
    mult[0] = 0.0
    return _apply_multiplier(f, mult)


def half_order_energy(f: Field, order: FracOrder) -> float:
    """Squared seminorm int |(-Delta)^(alpha/2) f|^2 dx via Parseval."""
    _check_finite(f)
    grid = f.grid
    fhat = np.fft.fft(f.values)
    w = np.abs(grid.wavenumbers) ** (2.0 * order.alpha)
    return float(
        2.0 * grid.half_length / grid.n**2 * np.sum(w * np.abs(fhat) ** 2)
    )


def neg_half_order_norm(f: Field, s: float) -> float:
    """Squared seminorm int |(-Delta)^(-s/2) f|^2 dx, zero mode excluded.

    On the periodic box the negative-order energy diverges on the mean, so
    the mean is projected out and the result is a monitoring surrogate for
    the whole-space quantity.  Adding a constant to f does not change it.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    _check_finite(f)
    grid = f.grid
    fhat = np.fft.fft(f.values)
    absk = np.abs(grid.wavenumbers)
    absk[0] = 1.0
    w = absk ** (-2.0 * s)
    w[0] = 0.0
    return float(
        2.0 * grid.half_length / grid.n**2 * np.sum(w * np.abs(fhat) ** 2)
    )


def frac_constant(alpha: float) -> float:
    """Normalizing constant of the 1D fractional Laplacian of order alpha.

    C(alpha) = 4^alpha * Gamma(1/2 + alpha) / (sqrt(pi) * |Gamma(-alpha)|),
    the convention that makes the singular integral match the Fourier
    multiplier |k|^(2*alpha).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(
        4.0**alpha * gamma(0.5 + alpha) / (math.sqrt(math.pi) * abs(gamma(-alpha)))
    )


# --- mollified operator -------------------------------------------------

_kernel_cache: dict = {}


def _periodized_weights(grid, s: float, eps: float, images: int) -> np.ndarray:
    """Quadrature weights w_d = h * C * sum_j K_eps(d*h + 2*L*j).

    The kernel K_eps(z) = (z^2 + eps^2)^(-(3-2s)/2) is summed explicitly
    over |j| <= images; the remaining tail decays like |z|^(-(3-2s)) and is
    completed analytically with Hurwitz zeta values (the eps^2 shift is
    negligible that far out).  Without the tail the operator misses a slow
    |z|^(2s-3) contribution that the spectral comparison tests can see.
    """
    key = (grid.half_length, grid.n, s, eps, images)
    cached = _kernel_cache.get(key)
    if cached is not None:
        return cached
    p = 3.0 - 2.0 * s
    L2 = 2.0 * grid.half_length
    z = grid.spacing * np.arange(grid.n)
    ksum = np.zeros(grid.n)
    for j in range(-images, images + 1):
        ksum += ((z + L2 * j) ** 2 + eps**2) ** (-p / 2.0)
    frac = z / L2
    tail = L2 ** (-p) * (zeta(p, images + 1 + frac) + zeta(p, images + 1 - frac))
    weights = frac_constant(1.0 - s) * grid.spacing * (ksum + tail)
    # the periodized kernel is even in the offset; symmetrizing removes the
    # tiny eps^2 asymmetry the analytic tail introduces at the window edge
    weights = 0.5 * (weights + weights[(-np.arange(grid.n)) % grid.n])
    _kernel_cache[key] = weights
    return weights


def _kernel_matrix(grid, s: float, eps: float, images: int) -> np.ndarray:
    key = ("matrix", grid.half_length, grid.n, s, eps, images)
    cached = _kernel_cache.get(key)
    if cached is not None:
        return cached
    w = _periodized_weights(grid, s, eps, images)
    idx = np.arange(grid.n)
    mat = w[(idx[:, None] - idx[None, :]) % grid.n]
    _kernel_cache[key] = mat
    return mat


def mollified_frac_laplacian(
    f: Field, s: float, eps: float, images: int = 3
) -> Field:
    """Mollified fractional Laplacian of order 1-s by direct quadrature.

    Computes C(1-s) * sum_y (f(x) - f(y)) / (|x-y|^2 + eps^2)^((3-2s)/2) * h
    with the kernel periodized over box images.  Symmetric and positive
    semidefinite; constants map to zero for any eps.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    _check_finite(f)
    mat = _kernel_matrix(f.grid, s, eps, images)
    u = f.values
    total = mat.sum(axis=1)
    return f.with_values(total * u - mat @ u)


def mollified_symbol(grid, s: float, eps: float, images: int = 3) -> np.ndarray:
    """Fourier eigenvalues of the mollified operator, in FFT ordering.

    The discrete operator is a circulant difference operator, hence
    diagonal in the Fourier basis with nonnegative eigenvalues
    lambda_j = sum_d w_d (1 - cos(k_j d h)).
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    w = _periodized_weights(grid, s, eps, images)
    lam = w.sum() - np.fft.fft(w).real
    return np.maximum(lam, 0.0)  # clip roundoff at the zero mode


def mollified_half_apply(f: Field, s: float, eps: float, images: int = 3) -> Field:
    """Apply the operator square root L_eps^(1/2), evaluated spectrally."""
    lam = mollified_symbol(f.grid, s, eps, images)
    return _apply_multiplier(f, np.sqrt(lam))


# --- whole-line quadrature (barrier verification) -----------------------


def line_frac_laplacian(
    fn, x: np.ndarray, alpha: float, split: float = 1.0
) -> np.ndarray:
    """(-Delta)^alpha of a callable on the whole real line, pointwise.

    Uses the symmetric second-difference form

        C(alpha) * int_0^inf (2 f(x) - f(x+z) - f(x-z)) z^(-1-2*alpha) dz

    with adaptive quadrature on (0, split) and (split, inf).  Intended for
    smooth barrier profiles evaluated at a moderate number of points; not a
    grid operator.
    """
    from scipy.integrate import quad

    C = frac_constant(alpha)
    out = np.empty(len(x))
    for i, xi in enumerate(np.asarray(x, dtype=float)):
        fxi = fn(xi)

        def integrand(z, xi=xi, fxi=fxi):
            return (2.0 * fxi - fn(xi + z) - fn(xi - z)) * z ** (-1.0 - 2.0 * alpha)

        near, _ = quad(integrand, 0.0, split, limit=200)
        far, _ = quad(integrand, split, np.inf, limit=200)
        out[i] = C * (near + far)
    return out


def line_frac_laplacian_outside(
    fn, support: tuple, x: np.ndarray, alpha: float
) -> np.ndarray:
    """(-Delta)^alpha at points strictly outside the support of fn.

    There the singular integral reduces to the smooth convolution
    -C(alpha) * int fn(y) |x-y|^(-1-2*alpha) dy over the support, which is
    both cheap and strictly negative for nonnegative fn.
    """
    from scipy.integrate import quad

    a, b = support
    C = frac_constant(alpha)
    out = np.empty(len(x))
    for i, xi in enumerate(np.asarray(x, dtype=float)):
        if a <= xi <= b:
            raise ValueError(f"point {xi} lies inside the support [{a}, {b}]")
        val, _ = quad(
            lambda y: fn(y) * abs(xi - y) ** (-1.0 - 2.0 * alpha), a, b, limit=200
        )
        out[i] = -C * val
    return out
