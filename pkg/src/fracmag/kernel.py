"""Pointwise pieces of the magnetic kernel and the functional Upsilon_u^A."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _engine
from ._geometry import Phase, weight_table
from .grid import Field, Grid
from .params import FractionalParams
from .potential import MagneticPotential, eval_potential


class SingularityError(ValueError):
    """The kernel was evaluated on the diagonal x = y."""


@dataclass(frozen=True)
class KernelSample:
    phase: complex
    weight: float


def _phase(A: MagneticPotential, x: np.ndarray, y: np.ndarray) -> complex:
    theta = float(np.dot(x - y, eval_potential(A, 0.5 * (x + y))))
    return complex(math.cos(theta), -math.sin(theta))


def kernel_sample(params: FractionalParams, A: MagneticPotential, x, y) -> KernelSample:
    """phase = exp(-i (x - y) . A((x + y)/2)), weight = c_s |x - y|^{-3-2s}."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        raise SingularityError("kernel is singular at x = y")
    return KernelSample(_phase(A, x, y), params.c_s * r ** (-3.0 - 2.0 * params.s))


def upsilon(params: FractionalParams, A: MagneticPotential, u: Field, ix, iy) -> float:
    """2 Re(|u(x)||u(y)| - e^{-i(x-y).A(mid)} u(x) conj(u(y))) at grid nodes ix, iy."""
    ix = tuple(int(i) for i in ix)
    iy = tuple(int(i) for i in iy)
    if ix == iy:
        raise SingularityError("Upsilon is evaluated off the diagonal only")
    c = u.grid.coords()
    ux, uy = u.values[ix], u.values[iy]
    ph = _phase(A, c[ix], c[iy])
    return 2.0 * (abs(ux) * abs(uy) - (ph * ux * np.conj(uy)).real)


@dataclass(frozen=True)
class PairStats:
    """One sweep over all unordered node pairs of a (possibly strided) grid."""

    upsilon_weighted: float    # sum over pairs of Upsilon * c_s |x-y|^{-3-2s} h^6
    upsilon_min_rel: float     # min Upsilon / (|u(x)| |u(y)|)
    diamagnetic_violation: float  # max (||u(x)|-|u(y)|| - |P u(x) - u(y)|) / (|u(x)|+|u(y)|)
    positive: int              # pairs with Upsilon > threshold
    pairs: int
    stride: int
    threshold: float

    @property
    def positive_fraction(self) -> float:
        return self.positive / self.pairs if self.pairs else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["positive_fraction"] = self.positive_fraction
        return d


def _subgrid(grid: Grid, stride: int) -> Grid:
    m = (grid.n - 1) // stride + 1
    shift = grid.h * (stride * (m - 1) / 2.0 - (grid.n - 1) / 2.0)
    return Grid(m, grid.h * stride, tuple(c + shift for c in grid.center))


def pair_stats(params: FractionalParams, A: MagneticPotential, u: Field,
               threshold: float = 0.0, stride: int = 1) -> PairStats:
    """Upsilon integral, positivity and the pointwise diamagnetic inequality over all
    pairs of nodes ``stride`` cells apart on each axis (deterministic plan)."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    g = u.grid
    sub = _subgrid(g, stride) if stride > 1 else g
    vals = np.ascontiguousarray(u.values[::stride, ::stride, ::stride])
    table = weight_table(sub.n, sub.h, params.s, False)
    ups, umin, viol, npos, npairs = _engine.pair_stats(
        vals, table, *Phase(sub, A).args, float(threshold))
    return PairStats(ups * sub.dv ** 2, umin, viol, int(npos), int(npairs), stride,
                     float(threshold))


def upsilon_positive_measure(params: FractionalParams, A: MagneticPotential, u: Field,
                             threshold: float, stride: int = 1) -> PairStats:
    """Fraction of strided node pairs with Upsilon > threshold (see ``positive_fraction``)."""
    return pair_stats(params, A, u, threshold, stride)


def upsilon_integral(params: FractionalParams, A: MagneticPotential, u: Field) -> float:
    """(c_s/2) double integral of Upsilon |x-y|^{-3-2s} over distinct node pairs, with the
    same lattice weights as the energy engine (self-cell correction included)."""
    g = u.grid
    table = weight_table(g.n, g.h, params.s, True)
    ups, *_ = _engine.pair_stats(np.ascontiguousarray(u.values), table,
                                 *Phase(g, A).args, 0.0)
    return ups * g.dv ** 2
