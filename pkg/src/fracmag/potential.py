"""Magnetic vector potentials A: R^3 -> R^3 in closed form or tabulated."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

KINDS = ("zero", "linear", "constant-field", "tabulated")


class UnsupportedPotential(ValueError):
    pass


class OutOfBox(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MagneticPotential:
    """Vector potential.

    Use the constructors :meth:`zero`, :meth:`linear`, :meth:`constant_field` and
    :meth:`tabulated` rather than the raw initializer.
    """

    kind: str
    matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    strength: float = 0.0
    table: Optional[np.ndarray] = None
    table_grid: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    # -- constructors
    @classmethod
    def zero(cls) -> "MagneticPotential":
        return cls("zero")

    @classmethod
    def linear(cls, matrix, offset=(0.0, 0.0, 0.0)) -> "MagneticPotential":
        m = _frozen(matrix)
        b = _frozen(offset)
        if m.shape != (3, 3) or b.shape != (3,):
            raise ValueError("linear potential needs a 3x3 matrix and a 3-vector offset")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(b))):
            raise ValueError("linear potential must be finite")
        return cls("linear", matrix=m, offset=b)

    @classmethod
    def constant_field(cls, strength: float) -> "MagneticPotential":
        """Uniform field along x3: A(x) = (b/2)(-x2, x1, 0)."""
        strength = float(strength)
        if not np.isfinite(strength):
            raise ValueError("field strength must be finite")
        return cls("constant-field", strength=strength)

    @classmethod
    def tabulated(cls, grid, values) -> "MagneticPotential":
        v = _frozen(values)
        if v.shape != (grid.n, grid.n, grid.n, 3):
            raise ValueError(f"tabulated values must have shape {(grid.n,) * 3 + (3,)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated values must be finite")
        return cls("tabulated", table=v, table_grid=grid)

    # -- structure
    def linear_form(self):
        """Return (M, b) with A(x) = M x + b, or None for tabulated potentials."""
        if self.kind == "zero":
            return np.zeros((3, 3)), np.zeros(3)
        if self.kind == "linear":
            return np.array(self.matrix), np.array(self.offset)
        if self.kind == "constant-field":
            half = 0.5 * self.strength
            m = np.array([[0.0, -half, 0.0], [half, 0.0, 0.0], [0.0, 0.0, 0.0]])
            return m, np.zeros(3)
        return None

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        lf = self.linear_form()
        return lf is not None and not np.any(lf[0]) and not np.any(lf[1])

    def __call__(self, x) -> np.ndarray:
        return eval_potential(self, x)

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "linear":
            out["matrix"] = self.matrix.tolist()
            out["offset"] = self.offset.tolist()
        elif self.kind == "constant-field":
            out["strength"] = self.strength
        elif self.kind == "tabulated":
            g = self.table_grid
            out["table_grid"] = {"n": g.n, "h": g.h, "center": list(g.center)}
        return out


def eval_potential(A: MagneticPotential, x) -> np.ndarray:
    """Evaluate A at points ``x`` of shape (..., 3)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of 3")
    lf = A.linear_form()
    if lf is not None:
        m, b = lf
        return x @ m.T + b
    g = A.table_grid
    axes = g.axes()
    lo = np.array([a[0] for a in axes])
    hi = np.array([a[-1] for a in axes])
    tol = 1e-12 * g.h
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise OutOfBox("point outside the tabulation box")
    xc = np.clip(x, lo, hi)
    # trilinear interpolation on the uniform table
    t = (xc - lo) / g.h
    i0 = np.clip(np.floor(t).astype(int), 0, g.n - 2)
    f = t - i0
    out = np.zeros(x.shape[:-1] + (3,))
    tab = A.table
    for cx in (0, 1):
        wx = f[..., 0] if cx else 1.0 - f[..., 0]
        for cy in (0, 1):
            wy = f[..., 1] if cy else 1.0 - f[..., 1]
            for cz in (0, 1):
                wz = f[..., 2] if cz else 1.0 - f[..., 2]
                vals = tab[i0[..., 0] + cx, i0[..., 1] + cy, i0[..., 2] + cz]
                out += (wx * wy * wz)[..., None] * vals
    return out


def shift_potential(A: MagneticPotential, xi, eta) -> MagneticPotential:
    """Closed form of x -> A(x + xi) + eta."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if A.kind == "tabulated":
        raise UnsupportedPotential("shift_potential needs a closed-form potential")
    m, b = A.linear_form()
    new_b = m @ xi + b + eta
    if A.kind == "zero":
        return A if not np.any(new_b) else MagneticPotential.linear(m, new_b)
    if A.kind == "constant-field":
        if not np.any(new_b):
            return A
        return MagneticPotential.linear(m, new_b)
    return MagneticPotential.linear(m, new_b)
