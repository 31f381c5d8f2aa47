"""Lattice constants and Riesz weight tables for pair sums on a cubic grid.

Two lattice sums over Z^3 \\ {0} enter the quadrature:

* ``epstein_zeta(3 + 2s)``: the full far-field sum of the Riesz kernel, used to
  account for interactions with nodes outside the box;
* ``epstein_zeta(1 + 2s)`` (analytically continued): the mismatch between the
  lattice sum and the integral of ``|z|^{-1-2s}``, which is what the excluded
  self-cell costs on quadratic fields. Folding it into the six nearest-neighbour
  weights removes the O(h^{2-2s}) leading error.
"""
from __future__ import annotations

import functools
import math

import mpmath as mp
import numpy as np
from scipy import integrate

from .params import cs_constant


@functools.lru_cache(maxsize=64)
def epstein_zeta(sigma: float, cutoff: int = 5) -> float:
    """Epstein zeta of the cubic lattice, sum' |k|^{-sigma}, analytically continued.

    Uses the theta-function splitting; terms decay like exp(-pi |k|^2), so
    ``cutoff = 5`` is far below double precision.
    """
    if sigma in (0.0, 3.0):
        raise ValueError("Epstein zeta has poles at sigma = 0 and 3")
    with mp.workdps(30):
        sg = mp.mpf(sigma)
        a1, a2 = sg / 2, (3 - sg) / 2
        total = mp.mpf(0)
        # group lattice points by |k|^2 with their multiplicities
        counts: dict[int, int] = {}
        r = range(-cutoff, cutoff + 1)
        for i in r:
            for j in r:
                for k in r:
                    q = i * i + j * j + k * k
                    if q:
                        counts[q] = counts.get(q, 0) + 1
        for q, mult in counts.items():
            x = mp.pi * q
            total += mult * (mp.gammainc(a1, x) * x ** (-a1) + mp.gammainc(a2, x) * x ** (-a2))
        total += -1 / a1 - 1 / a2
        return float(total * mp.pi ** a1 / mp.gamma(a1))


@functools.lru_cache(maxsize=64)
def cube_exterior_integral(alpha: float) -> float:
    """Integral of |z|^{-3-2 alpha} over R^3 minus the cube [-1, 1]^3."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    val, _ = integrate.dblquad(
        lambda a, b: (1.0 + a * a + b * b) ** (-alpha - 1.5), -1, 1, -1, 1,
        epsabs=1e-14, epsrel=1e-13,
    )
    return 6.0 * val / (2.0 * alpha)


def self_cell_boost(s: float) -> float:
    """Relative extra weight on each of the 6 nearest-neighbour displacements."""
    return -epstein_zeta(1.0 + 2.0 * s) / 6.0


def riesz_table(n: int, h: float, s: float, self_cell: bool = True,
                r_cut: float = math.inf, r_min: float = 0.0) -> np.ndarray:
    """Pair weights K(d) = c_s |h d|^{-3-2s} indexed by |d| componentwise, shape (n, n, n).

    Entry ``[0, 0, 0]`` is zero. Displacements with ``|h d| > r_cut`` or
    ``|h d| <= r_min`` are zeroed. With ``self_cell`` the nearest-neighbour weights
    carry the lattice correction (only meaningful when ``r_min < h``).
    """
    k = np.arange(n, dtype=float)
    r2 = k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2
    with np.errstate(divide="ignore"):
        w = np.where(r2 > 0, r2 ** (-(3.0 + 2.0 * s) / 2.0), 0.0)
    if self_cell and r_min < h and n > 1:
        b = self_cell_boost(s)
        w[1, 0, 0] += b
        w[0, 1, 0] += b
        w[0, 0, 1] += b
    dist = h * np.sqrt(r2)
    w[dist > r_cut] = 0.0
    w[(dist <= r_min) & (r2 > 0)] = 0.0
    return w * (cs_constant(s) * h ** (-3.0 - 2.0 * s))


def lattice_total(h: float, s: float, self_cell: bool = True) -> float:
    """h^3 times the sum of K(d) over all nonzero lattice displacements (whole Z^3)."""
    z = epstein_zeta(3.0 + 2.0 * s)
    if self_cell:
        z += 6.0 * self_cell_boost(s)
    return cs_constant(s) * h ** (-2.0 * s) * z


def box_window_sums(table: np.ndarray, h: float) -> np.ndarray:
    """S(x) = h^3 sum_{y in box, y != x} K(x - y) for every node, via a summed-area table."""
    n = table.shape[0]
    # full signed displacement table, index d + (n - 1)
    full = table[np.abs(np.arange(-(n - 1), n))][:, np.abs(np.arange(-(n - 1), n))][
        :, :, np.abs(np.arange(-(n - 1), n))
    ]
    sat = np.zeros((2 * n,) * 3)
    sat[1:, 1:, 1:] = full.cumsum(0).cumsum(1).cumsum(2)
    # node i sees displacements d in [-i, n-1-i] -> table indices [n-1-i, 2n-2-i]
    lo = (n - 1) - np.arange(n)
    hi = lo + n
    a0, a1 = lo[:, None, None], hi[:, None, None]
    b0, b1 = lo[None, :, None], hi[None, :, None]
    c0, c1 = lo[None, None, :], hi[None, None, :]
    s = (
        sat[a1, b1, c1] - sat[a0, b1, c1] - sat[a1, b0, c1] - sat[a1, b1, c0]
        + sat[a0, b0, c1] + sat[a0, b1, c0] + sat[a1, b0, c0] - sat[a0, b0, c0]
    )
    return s * h ** 3


def exterior_weights(n: int, h: float, s: float, self_cell: bool = True) -> np.ndarray:
    """kappa(x) = h^3 sum_{y on the lattice, outside the box} K(x - y), shape (n, n, n)."""
    table = riesz_table(n, h, s, self_cell=self_cell)
    kappa = lattice_total(h, s, self_cell) - box_window_sums(table, h)
    return np.maximum(kappa, 0.0)
