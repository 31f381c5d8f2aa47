"""Pointwise fractional magnetic Laplacian, its weak form, and the A = 0 Fourier oracle."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft

from . import _engine
from ._geometry import (
    Phase, PolicyError, kappa, same_grid, weight_table, zero_potential_apply,
)
from .gagliardo import QuadPolicy, pair_sum
from .grid import Field, Grid
from .lattice import box_window_sums, cube_exterior_integral, lattice_total, riesz_table
from .params import FractionalParams
from .potential import MagneticPotential

FORMS = ("principal-value", "symmetric-difference")


class NonInteriorNode(ValueError):
    """Symmetric-difference value requested on the boundary ring."""


class CalibrationError(RuntimeError):
    """Talenti fit residual too large for the chosen box."""


@dataclass(frozen=True)
class OperatorPolicy:
    """form: "principal-value" or "symmetric-difference".
    epsilon: inner exclusion radius (None = h/2, only the self-pair).
    r_cut: outer cutoff (None = no cutoff).
    exterior: include nodes outside the box (where u = 0).
    """

    form: str = "principal-value"
    epsilon: Optional[float] = None
    r_cut: Optional[float] = None
    exterior: bool = True
    self_cell: bool = True

    def __post_init__(self):
        if self.form not in FORMS:
            raise PolicyError(f"form must be one of {FORMS}, got {self.form!r}")

    def radii(self, grid: Grid):
        eps = 0.5 * grid.h if self.epsilon is None else float(self.epsilon)
        rc = math.inf if self.r_cut is None else float(self.r_cut)
        if eps < 0.5 * grid.h * (1 - 1e-12):
            raise PolicyError(f"epsilon = {eps} is below h/2 = {grid.h / 2}")
        if not eps <= rc:
            raise PolicyError(f"epsilon = {eps} exceeds r_cut = {rc}")
        return eps, rc

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class OperatorResult:
    """Operator output with a validity mask (False on the symmetric-form boundary ring)."""

    field: Field
    valid: np.ndarray
    policy: OperatorPolicy
    metadata: dict = field(default_factory=dict)

    def at(self, index) -> complex:
        index = tuple(int(i) for i in index)
        if not self.valid[index]:
            raise NonInteriorNode(f"node {index} lies on the boundary ring")
        return complex(self.field.values[index])


def _shell_total(h: float, s: float, self_cell: bool, eps: float, rc: float) -> float:
    """h^3 times the sum of K(d) over lattice d with eps < |h d| <= rc."""
    if math.isinf(rc):
        total = lattice_total(h, s, self_cell)
        k = int(math.floor(eps / h + 1e-9))
        if k == 0:
            return total
        inner = riesz_table(k + 1, h, s, self_cell)
        mult = _octant_multiplicity(k + 1)
        d = h * np.sqrt(_r2(k + 1))
        return total - float(np.sum(np.where(d <= eps, inner * mult, 0.0))) * h ** 3
    k = int(math.floor(rc / h + 1e-9)) + 1
    t = riesz_table(k + 1, h, s, self_cell, r_min=eps, r_cut=rc)
    return float(np.sum(t * _octant_multiplicity(k + 1))) * h ** 3


def _r2(m: int) -> np.ndarray:
    k = np.arange(m, dtype=float)
    return k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2


def _octant_multiplicity(m: int) -> np.ndarray:
    f = 2.0 - (np.arange(m) == 0)
    return f[:, None, None] * f[None, :, None] * f[None, None, :]


def _table(grid: Grid, s: float, policy: OperatorPolicy):
    eps, rc = policy.radii(grid)
    if eps <= 0.5 * grid.h * (1 + 1e-12) and math.isinf(rc):
        return weight_table(grid.n, grid.h, s, policy.self_cell), eps, rc
    return weight_table(grid.n, grid.h, s, policy.self_cell, r_min=eps, r_cut=rc), eps, rc


def _ring_mask(grid: Grid, width: int) -> np.ndarray:
    valid = np.zeros(grid.shape, bool)
    if 2 * width < grid.n:
        valid[width:-width, width:-width, width:-width] = True
    return valid


def apply_operator(params: FractionalParams, A: MagneticPotential, u: Field,
                   policy: OperatorPolicy = OperatorPolicy()) -> OperatorResult:
    """(-Delta)^s_A u at every node.

    principal-value: c_s sum_{eps < |x-y| <= R} (u(x) - e^{i(x-y).A(mid)} u(y)) |x-y|^{-3-2s} h^3
    symmetric-difference: -(c_s/2) sum_{eps < |y| <= R} (u_x(x+y) + u_x(x-y) - 2 u_x(x)) |y|^{-3-2s} h^3
    """
    g = u.grid
    s = params.s
    table, eps, rc = _table(g, s, policy)
    dv = g.dv
    default = table is weight_table(g.n, g.h, s, policy.self_cell)
    if policy.form == "principal-value":
        if A.is_zero and default:
            out = zero_potential_apply(u.values, g.h, s, policy.self_cell, policy.exterior)
        else:
            out = dv * _engine.apply_sum(u.values, table, *Phase(g, A).args)
            if policy.exterior:
                out = out + u.values * (_shell_total(g.h, s, policy.self_cell, eps, rc)
                                        - box_window_sums(table, g.h))
        valid = np.ones(g.shape, bool)
        ring = 0
    else:
        out = dv * _engine.symmetric_sum(u.values, table, *Phase(g, A).args)
        if policy.exterior:
            # displacements beyond the (2n-1)^3 window see zero on both sides
            window = float(np.sum(table * _octant_multiplicity(g.n))) * dv
            out = out + u.values * (_shell_total(g.h, s, policy.self_cell, eps, rc) - window)
        ring = 1 if math.isinf(rc) else max(1, int(math.ceil(rc / g.h)))
        valid = _ring_mask(g, ring)
    meta = {"form": policy.form, "epsilon": eps, "r_cut": None if math.isinf(rc) else rc,
            "exterior_included": policy.exterior, "ring_width": ring}
    return OperatorResult(Field(g, out), valid, policy, meta)


def bilinear_form(params: FractionalParams, A: MagneticPotential, u: Field, v: Field,
                  policy: QuadPolicy = QuadPolicy()) -> float:
    """Re <(-Delta)^s_A u, v> = (c_s/2) Re double integral of
    (e^{-i(x-y).A} u(x) - u(y)) conj(e^{-i(x-y).A} v(x) - v(y)) |x-y|^{-3-2s}."""
    same_grid(u, v)
    g = u.grid
    policy.cutoff(g)
    if A.is_zero and policy.far == "exact" and policy.method != "direct":
        lu = zero_potential_apply(u.values, g.h, params.s, policy.self_cell, exterior=False)
        val = float(np.real(np.vdot(v.values, lu))) * g.dv
    else:
        tot, _ = pair_sum(params, A, u, v, policy)
        val = 0.5 * tot
    if policy.exterior:
        k = kappa(g.n, g.h, params.s, policy.self_cell)
        val += float(np.real(np.sum(u.values * np.conj(v.values) * k))) * g.dv
    return val


def wavenumbers(grid: Grid) -> np.ndarray:
    """|xi|^2 on the periodic box, xi_k = 2 pi k / L."""
    k = 2.0 * np.pi * sfft.fftfreq(grid.n, d=grid.h)
    return k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2


def fourier_apply_s(params: FractionalParams, u: Field) -> Field:
    """Periodic Fourier multiplier |xi|^{2s}; the zero mode maps to 0."""
    xi2 = wavenumbers(u.grid)
    mult = np.where(xi2 > 0, xi2 ** params.s, 0.0)
    out = sfft.ifftn(mult * sfft.fftn(u.values, workers=1), workers=1)
    return Field(u.grid, out)


def fourier_seminorm_sq(params: FractionalParams, u: Field) -> float:
    """[u]_{s,0}^2 = (2 pi)^{-3} int |xi|^{2s} |u^|^2, periodic box quadrature."""
    g = u.grid
    xi2 = wavenumbers(g)
    uf = sfft.fftn(u.values, workers=1)
    return float(np.sum(xi2 ** params.s * np.abs(uf) ** 2)) * g.dv / g.size


@dataclass(frozen=True)
class TalentiCalibration:
    d_s: float
    residual: float
    ratio_min: float
    ratio_max: float
    n: int
    L: float
    nodes: int
    method: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def talenti_profile(s: float, x2: np.ndarray) -> np.ndarray:
    return (1.0 + x2) ** (-(3.0 - 2.0 * s) / 2.0)


def _lattice_bubble_operator(s: float, n: int, h: float, pad: int):
    """Lattice operator applied to the unit bubble on a (pad*n)^3 box; returns (grid, w, Lw).

    The bubble decays like |y|^{-(3-2s)}, so the part of the kernel integral beyond
    the padded box behaves like c_s |y|^{-6} and is subtracted in closed form.
    """
    N = pad * n
    g = Grid(N, h, (0.5 * h * (N % 2 == 0),) * 3)
    x = g.coords()
    w = talenti_profile(s, np.sum(x ** 2, axis=-1))
    lw = zero_potential_apply(w, h, s, True, exterior=True)
    lw = lw.real - cube_exterior_integral(1.5) * FractionalParams(s, 2.5).c_s * (0.5 * N * h) ** -3
    return g, w, lw


def calibrate_talenti(params: FractionalParams, n: int = 48, L: float = 16.0,
                      method: str = "lattice", pad: int = 2,
                      max_residual: float = 0.10) -> TalentiCalibration:
    """Fit d_s so that (-Delta)^s (d_s w) = (d_s w)^{(3+2s)/(3-2s)} on |x| <= L/4,
    w = (1 + |x|^2)^{-(3-2s)/2}; log-space least squares.

    method "lattice": the corrected real-space lattice operator on a zero-padded
    box (pad * n nodes at spacing L/n) plus a closed-form far tail.
    method "fourier": periodic multiplier on the n^3 box (cheap, biased by wrap).
    """
    s = params.s
    q = (3.0 + 2.0 * s) / (3.0 - 2.0 * s)
    h = L / n
    if method == "lattice":
        g, w, lw = _lattice_bubble_operator(s, n, h, pad)
    elif method == "fourier":
        g = Grid(n, h, (0.5 * h,) * 3)
        w = talenti_profile(s, np.sum(g.coords() ** 2, axis=-1))
        lw = fourier_apply_s(params, Field(g, w)).values.real
    else:
        raise ValueError(f"unknown calibration method {method!r}")
    r = g.radii(about=(0.0, 0.0, 0.0))
    mask = r <= L / 4
    if not np.all(lw[mask] > 0):
        raise CalibrationError("operator of the bubble is not positive on the fit region")
    # (-Delta)^s (d w) = d^q w^q  <=>  log Lw - q log w = (q - 1) log d
    resid = np.log(lw[mask]) - q * np.log(w[mask])
    log_d = float(np.mean(resid)) / (q - 1.0)
    d = math.exp(log_d)
    ratio = d * lw[mask] / (d * w[mask]) ** q
    rel = float(np.sqrt(np.mean((ratio - 1.0) ** 2)))
    out = TalentiCalibration(d, rel, float(ratio.min()), float(ratio.max()), n, L,
                             int(mask.sum()), method)
    if rel > max_residual:
        raise CalibrationError(f"relative fit residual {rel:.3g} exceeds {max_residual}")
    return out
