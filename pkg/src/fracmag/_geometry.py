"""Shared plumbing between the public modules and the numba engine."""
from __future__ import annotations

import functools
import math

import numpy as np
from scipy import fft as sfft

from . import _engine
from .grid import Field, Grid
from .lattice import box_window_sums, exterior_weights, lattice_total, riesz_table
from .potential import MagneticPotential, eval_potential


class PolicyError(ValueError):
    """Quadrature or operator policy incompatible with the grid."""


class GridMismatch(ValueError):
    """Two fields live on different grids."""


def same_grid(u: Field, v: Field):
    if u.grid != v.grid:
        raise GridMismatch(f"fields live on different grids: {u.grid} vs {v.grid}")


@functools.lru_cache(maxsize=16)
def weight_table(n: int, h: float, s: float, self_cell: bool = True,
                 r_min: float = 0.0, r_cut: float = math.inf) -> np.ndarray:
    t = riesz_table(n, h, s, self_cell=self_cell, r_min=r_min, r_cut=r_cut)
    t.setflags(write=False)
    return t


@functools.lru_cache(maxsize=16)
def kappa(n: int, h: float, s: float, self_cell: bool = True) -> np.ndarray:
    k = exterior_weights(n, h, s, self_cell)
    k.setflags(write=False)
    return k


@functools.lru_cache(maxsize=16)
def in_box_weight(n: int, h: float, s: float, self_cell: bool = True) -> np.ndarray:
    w = box_window_sums(weight_table(n, h, s, self_cell), h)
    w.setflags(write=False)
    return w


class Phase:
    """Engine arguments describing the pair phase on one grid."""

    def __init__(self, grid: Grid, A: MagneticPotential):
        self.grid = grid
        lf = A.linear_form()
        self.mat = np.zeros((3, 3))
        self.off = np.zeros(3)
        self.ahalf = np.zeros((1, 1, 1, 3))
        if A.is_zero:
            self.kind = 0
        elif lf is not None:
            self.kind = 1
            self.mat = np.ascontiguousarray(lf[0], dtype=float)
            self.off = np.ascontiguousarray(lf[1], dtype=float)
        else:
            self.kind = 2
            self.ahalf = np.ascontiguousarray(eval_potential(A, grid.half_coords()))
        self.cen = np.asarray(grid.center, dtype=float)

    @property
    def args(self):
        return (self.kind, self.mat, self.off, self.cen, self.grid.h, self.ahalf)


def sup_norm(grid: Grid, A: MagneticPotential) -> float:
    """max |A| over the bounding box (corners suffice for affine potentials)."""
    if A.is_zero:
        return 0.0
    if A.linear_form() is not None:
        ax = grid.axes()
        corners = np.array([[x, y, z] for x in (ax[0][0], ax[0][-1])
                            for y in (ax[1][0], ax[1][-1]) for z in (ax[2][0], ax[2][-1])])
        return float(np.max(np.linalg.norm(eval_potential(A, corners), axis=-1)))
    return float(np.max(np.linalg.norm(eval_potential(A, grid.half_coords()), axis=-1)))


def full_table(table: np.ndarray) -> np.ndarray:
    """Signed-displacement weights, index d + (n - 1), shape (2n-1)^3."""
    n = table.shape[0]
    idx = np.abs(np.arange(-(n - 1), n))
    return table[np.ix_(idx, idx, idx)]


@functools.lru_cache(maxsize=4)
def _kernel_spectrum(n: int, h: float, s: float, self_cell: bool):
    m = sfft.next_fast_len(3 * n - 2)
    kf = sfft.fftn(full_table(weight_table(n, h, s, self_cell)), s=(m,) * 3, workers=1)
    kf.setflags(write=False)
    return m, kf


def convolve_kernel(u: np.ndarray, h: float, s: float, self_cell: bool) -> np.ndarray:
    """(K * u)(x) = sum_{y in box, y != x} K(x - y) u(y), by zero-padded FFT."""
    n = u.shape[0]
    m, kf = _kernel_spectrum(n, h, s, self_cell)
    uf = sfft.fftn(u, s=(m,) * 3, workers=1)
    out = sfft.ifftn(kf * uf, workers=1)
    sl = slice(n - 1, 2 * n - 1)
    return out[sl, sl, sl]


def zero_potential_apply(u: np.ndarray, h: float, s: float, self_cell: bool,
                         exterior: bool) -> np.ndarray:
    """Lattice operator for A = 0 (without h^3 factor folded into K * u)."""
    n = u.shape[0]
    conv = convolve_kernel(u, h, s, self_cell) * h ** 3
    if exterior:
        return u * lattice_total(h, s, self_cell) - conv
    return u * in_box_weight(n, h, s, self_cell) - conv


def engine_apply(u: np.ndarray, table: np.ndarray, phase: Phase) -> np.ndarray:
    return _engine.apply_sum(np.ascontiguousarray(u, dtype=np.complex128), table, *phase.args)
