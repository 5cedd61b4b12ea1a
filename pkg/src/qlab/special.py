"""Spherical Bessel functions, associated Laguerre polynomials, spherical
harmonics, and the zeros that quantize the eigenmode families.

Everything here is self-contained (numpy only for arrays, brentq for root
polishing).  Root tables are cached; ``functools.lru_cache`` is thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from qlab.errors import ConvergenceError

L_MAX = 50
P_MAX = 100
ROOT_XTOL = 1e-12

_RESCALE = 1e200


@dataclass(frozen=True)
class RootTable:
    """Ordered positive zeros of one function family member."""

    family: str
    params: tuple
    roots: tuple[float, ...]
    tolerance: float = ROOT_XTOL

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


# -- spherical Bessel --------------------------------------------------------


def _check_order(l, l_max):
    if not isinstance(l, (int, np.integer)) or l < 0 or l > l_max:
        raise ValueError(f"order l must be an integer in [0, {l_max}], got {l}")


def _jl_series(l, x):
    # x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    lead = np.ones_like(x)
    for k in range(1, l + 1):
        lead = lead * x / (2 * k + 1)
    x2 = x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 30):
        term = term * (-x2) / (2 * k * (2 * l + 2 * k + 1))
        total = total + term
    return lead * total


def _jl_upward(l, x):
    s, c = np.sin(x), np.cos(x)
    j0 = s / x
    if l == 0:
        return j0
    j1 = s / x**2 - c / x
    for k in range(1, l):
        j0, j1 = j1, (2 * k + 1) / x * j1 - j0
    return j1


def _jl_downward(l, x):
    # Miller recurrence from well above l, normalized against j_0 or j_1.
    start = l + 30 + int(math.sqrt(60 * l))
    f_next = np.zeros_like(x)
    f = np.full_like(x, 1e-30)
    f_l = np.zeros_like(x)
    for k in range(start, 0, -1):
        f_prev = (2 * k + 1) / x * f - f_next
        f_next, f = f, f_prev
        if k - 1 == l:
            f_l = f.copy()
        big = np.abs(f) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            f, f_next, f_l = f * scale, f_next * scale, f_l * scale
    f0, f1 = f, f_next
    if l == 0:
        f_l = f0
    s, c = np.sin(x), np.cos(x)
    j0 = s / x
    j1 = s / x**2 - c / x
    use0 = np.abs(j0) >= np.abs(j1)
    norm = np.where(use0, j0 / np.where(use0, f0, 1.0), j1 / np.where(use0, 1.0, f1))
    return f_l * norm


def spherical_jn(l: int, x, l_max: int = L_MAX):
    """Spherical Bessel function of the first kind, j_l(x), for x >= 0.

    Power series for x < 1, downward (Miller) recurrence for 1 <= x < l and
    upward recurrence from sin/cos closed forms otherwise.
    """
    _check_order(l, l_max)
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(~np.isfinite(x_arr)):
        raise ValueError("spherical_jn needs finite x >= 0")
    xs = np.atleast_1d(x_arr)
    out = np.empty_like(xs)
    small = xs < 1.0
    up = ~small & (xs >= l)
    down = ~small & ~up
    if np.any(small):
        out[small] = _jl_series(l, xs[small])
    if np.any(up):
        out[up] = _jl_upward(l, xs[up])
    if np.any(down):
        out[down] = _jl_downward(l, xs[down])
    return float(out[0]) if x_arr.ndim == 0 else out


@lru_cache(maxsize=None)
def _bessel_zero_row(l: int, count: int) -> tuple[float, ...]:
    # Zeros of j_l interlace those of j_{l-1}: each bracket between
    # neighbouring zeros of the lower order holds exactly one zero.
    if l == 0:
        return tuple(n * math.pi for n in range(1, count + 1))
    below = _bessel_zero_row(l - 1, count + 1)
    f = lambda z: spherical_jn(l, z, l_max=max(L_MAX, l))  # noqa: E731
    return tuple(_polish(f, lo, hi) for lo, hi in zip(below[:-1], below[1:]))


def _polish(f, lo, hi):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if np.sign(flo) == np.sign(fhi):
        raise ConvergenceError(f"no sign change on [{lo}, {hi}]")
    root, info = brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps,
                        maxiter=200, full_output=True)
    if not info.converged:
        raise ConvergenceError(f"root refinement did not converge on [{lo}, {hi}]")
    return float(root)


def spherical_bessel_zeros(l: int, count: int, l_max: int = L_MAX) -> RootTable:
    """First ``count`` positive zeros of j_l."""
    _check_order(l, l_max)
    if count < 1:
        raise ValueError("count must be >= 1")
    # round the count up so nearby requests share one cached ladder
    bucket = 8 * ((int(count) + 7) // 8)
    roots = _bessel_zero_row(int(l), bucket)[: int(count)]
    return RootTable("bessel", (int(l),), roots)


def spherical_bessel_zero(l: int, n: int, l_max: int = L_MAX) -> float:
    """The n-th positive zero k_nl of j_l (n counts from 1)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"zero index n must be an integer >= 1, got {n}")
    return spherical_bessel_zeros(l, n, l_max).roots[n - 1]


# -- associated Laguerre -----------------------------------------------------


def _check_laguerre(p, alpha, p_max):
    if not isinstance(p, (int, np.integer)) or p < 0 or p > p_max:
        raise ValueError(f"degree p must be an integer in [0, {p_max}], got {p}")
    if not alpha > -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")


def assoc_laguerre(p: int, alpha: float, x, p_max: int = P_MAX):
    """Generalized Laguerre polynomial L_p^alpha(x) by three-term recurrence."""
    _check_laguerre(p, alpha, p_max)
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if p == 0:
        return prev if x.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, p):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if x.ndim else float(cur)


@lru_cache(maxsize=None)
def _laguerre_roots(p: int, alpha: float) -> tuple[float, ...]:
    # Zeros of L_{k-1} interlace those of L_k; the bracket set is closed by 0
    # and by the bound 4k + 2 alpha + 2 on the largest zero.
    roots: tuple[float, ...] = ()
    for k in range(1, p + 1):
        edges = (0.0,) + roots + (4.0 * k + 2.0 * alpha + 2.0,)
        f = lambda z, k=k: assoc_laguerre(k, alpha, z, p_max=max(P_MAX, p))  # noqa: E731
        found = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if np.sign(f(lo)) == np.sign(f(hi)):
                continue
            found.append(_polish(f, lo, hi))
        if len(found) != k:
            raise ConvergenceError(
                f"found {len(found)} sign changes for L_{k}^{alpha}, expected {k}"
            )
        roots = tuple(found)
    return roots


def assoc_laguerre_zeros(p: int, alpha: float, p_max: int = P_MAX) -> RootTable:
    """All p positive zeros of L_p^alpha in increasing order."""
    _check_laguerre(p, alpha, p_max)
    if p < 1:
        raise ValueError("a degree-0 Laguerre polynomial has no zeros")
    return RootTable("laguerre", (int(p), float(alpha)), _laguerre_roots(int(p), float(alpha)))


def assoc_laguerre_zero(p: int, alpha: float, s: int, p_max: int = P_MAX) -> float:
    """The s-th smallest zero of L_p^alpha, 1 <= s <= p."""
    table = assoc_laguerre_zeros(p, alpha, p_max)
    if not isinstance(s, (int, np.integer)) or not 1 <= s <= p:
        raise ValueError(f"zero index s must be in [1, {p}], got {s}")
    return table.roots[s - 1]


# -- spherical harmonics -----------------------------------------------------


def _legendre_normalized(l, m, x):
    # sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m(x), Condon-Shortley phase, m >= 0.
    sin_t = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.full_like(x, 1.0 / math.sqrt(4.0 * math.pi))
    for k in range(1, m + 1):
        pmm = -math.sqrt((2 * k + 1) / (2.0 * k)) * sin_t * pmm
    if l == m:
        return pmm
    p_lo, p_hi = pmm, x * math.sqrt(2 * m + 3) * pmm
    for k in range(m + 2, l + 1):
        a_k = math.sqrt((4 * k * k - 1) / (k * k - m * m))
        a_km1 = math.sqrt((4 * (k - 1) ** 2 - 1) / ((k - 1) ** 2 - m * m))
        p_lo, p_hi = p_hi, a_k * (x * p_hi - p_lo / a_km1)
    return p_hi


def spherical_harmonic(l: int, m: int, theta, phi):
    """Orthonormal complex Y_lm(theta, phi) with the Condon-Shortley phase.

    ``theta`` is the polar angle, ``phi`` the azimuth.
    """
    if not isinstance(l, (int, np.integer)) or l < 0:
        raise ValueError(f"l must be a non-negative integer, got {l}")
    if not isinstance(m, (int, np.integer)) or abs(m) > l:
        raise ValueError(f"|m| must not exceed l={l}, got m={m}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    mm = abs(m)
    y = _legendre_normalized(l, mm, np.cos(theta)) * np.exp(1j * mm * phi)
    if m < 0:
        y = (-1) ** mm * np.conj(y)
    return y if y.ndim else complex(y)
