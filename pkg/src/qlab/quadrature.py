"""Fixed-order tensor quadratures over balls and boxes (deterministic)."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def ball_integral(f, radius, n_r=128, n_theta=64, n_phi=64):
    """Integrate f(points) over the ball |x| <= radius centred at the origin.

    ``f`` receives an array of Cartesian points with shape (..., 3).  Radial
    and polar directions use Gauss-Legendre, the azimuth the trapezoid rule.
    """
    r, wr = gauss_legendre(n_r, 0.0, radius)
    ct, wt = _leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wp = np.full(n_phi, 2.0 * np.pi / n_phi)
    R, CT, PH = np.meshgrid(r, ct, phi, indexing="ij")
    ST = np.sqrt(1.0 - CT**2)
    pts = np.stack([R * ST * np.cos(PH), R * ST * np.sin(PH), R * CT], axis=-1)
    weights = (wr * r**2)[:, None, None] * wt[None, :, None] * wp[None, None, :]
    return np.sum(f(pts) * weights)


def box_integral(f, half_width, n=64):
    """Integrate f(points) over the cube [-half_width, half_width]^3."""
    x, w = gauss_legendre(n, -half_width, half_width)
    X1, X2, X3 = np.meshgrid(x, x, x, indexing="ij")
    pts = np.stack([X1, X2, X3], axis=-1)
    weights = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return np.sum(f(pts) * weights)
