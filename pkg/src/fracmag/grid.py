"""Uniform cubic grids, complex fields sampled on them, and field generators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Cubic lattice with ``n`` nodes per axis, spacing ``h`` and a center point.

    Node ``i`` along an axis sits at ``center + h * (i - (n - 1) / 2)``.
    """

    n: int
    h: float
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"grid needs n >= 4 points per axis, got {self.n!r}")
        if not (self.h > 0) or not math.isfinite(self.h):
            raise ValueError(f"grid spacing must be positive, got {self.h!r}")
        c = tuple(float(v) for v in self.center)
        if len(c) != 3:
            raise ValueError("center must be a 3-vector")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "center", c)

    @classmethod
    def from_extent(cls, n: int, L: float, center=(0.0, 0.0, 0.0)) -> "Grid":
        return cls(n, L / n, center)

    @property
    def L(self) -> float:
        return self.n * self.h

    @property
    def shape(self) -> tuple:
        return (self.n,) * 3

    @property
    def size(self) -> int:
        return self.n ** 3

    @property
    def dv(self) -> float:
        return self.h ** 3

    @property
    def diameter(self) -> float:
        return math.sqrt(3.0) * (self.n - 1) * self.h

    def axes(self):
        off = self.h * (np.arange(self.n) - (self.n - 1) / 2.0)
        return [c + off for c in self.center]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (n, n, n, 3)."""
        ax = self.axes()
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)

    def half_coords(self) -> np.ndarray:
        """Midpoints (x_i + x_j)/2 of node pairs: a (2n-1)^3 lattice of spacing h/2."""
        off = 0.5 * self.h * (np.arange(2 * self.n - 1) - (self.n - 1))
        ax = [c + off for c in self.center]
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)

    def radii(self, about=None) -> np.ndarray:
        c = np.asarray(self.center if about is None else about, dtype=float)
        return np.linalg.norm(self.coords() - c, axis=-1)

    def index_of(self, x) -> tuple:
        """Nearest node index to a point; raises if outside the box."""
        x = np.asarray(x, dtype=float)
        t = (x - np.asarray(self.center)) / self.h + (self.n - 1) / 2.0
        idx = np.rint(t).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.n):
            raise ValueError(f"point {x.tolist()} outside the grid")
        return tuple(int(i) for i in idx)

    def scaled(self, sigma: float) -> "Grid":
        """Grid with spacing sigma*h and center sigma*center (same n)."""
        return Grid(self.n, sigma * self.h, tuple(sigma * c for c in self.center))

    def to_dict(self) -> dict:
        return {"n": self.n, "h": self.h, "center": list(self.center), "L": self.L}


@dataclass(frozen=True, eq=False)
class Field:
    """Complex field sampled on a grid; ``values`` has shape (n, n, n), C order (x, y, z)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.size != self.grid.size:
            raise ValueError(f"field has {v.size} values, grid has {self.grid.size} nodes")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def abs(self) -> "Field":
        return Field(self.grid, np.abs(self.values))

    def l2_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dv)

    def lp_pow(self, p: float) -> float:
        """Discrete integral of |u|^p with weight h^3."""
        return float(np.sum(np.abs(self.values) ** p) * self.grid.dv)

    def lp_norm(self, p: float) -> float:
        return self.lp_pow(p) ** (1.0 / p)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, a) -> "Field":
        if isinstance(a, Field):
            _same_grid(self, a)
            return Field(self.grid, self.values * a.values)
        return Field(self.grid, self.values * a)

    __rmul__ = __mul__


def _same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# -- generators ---------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    """exp(-|x - center|^2 / (2 width^2)), peak value 1."""
    width: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported bump exp(1 - 1/(1 - r^2/R^2)), peak 1, support radius R."""
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0


@dataclass(frozen=True)
class TalentiBubble:
    """d_s (eps / (eps^2 + |x - z|^2))^{(3-2s)/2}."""
    s: float
    z: tuple = (0.0, 0.0, 0.0)
    eps: float = 1.0
    d_s: float = 1.0


@dataclass(frozen=True)
class TwoBumps:
    """Two unit bumps centered at center -/+ (separation/2) along ``axis``.

    ``radius`` defaults to separation/4, leaving a support gap of separation/2.
    """
    separation: float
    radius: float = 0.0
    center: tuple = (0.0, 0.0, 0.0)
    axis: int = 0
    weights: tuple = (1.0, 1.0)


@dataclass(frozen=True)
class PlaneWavePhase:
    """exp(i eta . x) times a base generator."""
    eta: tuple
    base: object = field(default_factory=Gaussian)


Generator = Union[Gaussian, Bump, TalentiBubble, TwoBumps, PlaneWavePhase]


def _bump(x: np.ndarray, center, radius: float) -> np.ndarray:
    r2 = np.sum((x - np.asarray(center, dtype=float)) ** 2, axis=-1) / radius ** 2
    out = np.zeros(r2.shape)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def _sample(grid: Grid, gen, x: np.ndarray) -> np.ndarray:
    if isinstance(gen, Gaussian):
        if gen.width <= 0:
            raise ValueError("Gaussian width must be positive")
        r2 = np.sum((x - np.asarray(gen.center, dtype=float)) ** 2, axis=-1)
        return np.exp(-r2 / (2.0 * gen.width ** 2)).astype(complex)
    if isinstance(gen, Bump):
        if gen.radius <= 0:
            raise ValueError("bump radius must be positive")
        return _bump(x, gen.center, gen.radius).astype(complex)
    if isinstance(gen, TalentiBubble):
        if gen.eps <= 0 or gen.d_s <= 0 or not (0 < gen.s < 1):
            raise ValueError("Talenti bubble needs eps > 0, d_s > 0, 0 < s < 1")
        r2 = np.sum((x - np.asarray(gen.z, dtype=float)) ** 2, axis=-1)
        base = gen.eps / (gen.eps ** 2 + r2)
        return (gen.d_s * base ** ((3.0 - 2.0 * gen.s) / 2.0)).astype(complex)
    if isinstance(gen, TwoBumps):
        if gen.separation <= 0:
            raise ValueError("separation must be positive")
        radius = gen.radius or gen.separation / 4.0
        if 2 * radius >= gen.separation:
            raise ValueError("bumps overlap: need 2*radius < separation")
        e = np.zeros(3)
        e[gen.axis] = gen.separation / 2.0
        c = np.asarray(gen.center, dtype=float)
        w1, w2 = gen.weights
        return (w1 * _bump(x, c - e, radius) + w2 * _bump(x, c + e, radius)).astype(complex)
    if isinstance(gen, PlaneWavePhase):
        eta = np.asarray(gen.eta, dtype=float)
        return np.exp(1j * (x @ eta)) * _sample(grid, gen.base, x)
    raise TypeError(f"unknown generator {gen!r}")


def make_field(grid: Grid, generator) -> Field:
    return Field(grid, _sample(grid, generator, grid.coords()))


def translate(u: Field, shift) -> Field:
    """Periodic lattice translation: result(x) = u(x - shift*h) with wrap-around."""
    shift = tuple(int(k) for k in shift)
    return Field(u.grid, np.roll(u.values, shift, axis=(0, 1, 2)))
