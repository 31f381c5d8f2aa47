"""Concentration-compactness diagnostics: cut-offs, dichotomy splitting, gauge moves."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .gagliardo import (
    DensityField, QuadPolicy, ball_sums, concentration_function, pair_sum,
    _masks, seminorm_sq,
)
from .grid import Field, Grid, translate
from .lattice import lattice_total, riesz_table
from .params import FractionalParams
from .potential import MagneticPotential

# max of the quintic smoothstep derivative 30 t^2 (1 - t)^2, at t = 1/2
_RAMP_SLOPE = 30.0 / 16.0


class SupportOverlap(ValueError):
    """Dichotomy radii do not separate the two pieces."""


class NonLatticeShift(ValueError):
    """Translation is not a whole number of cells."""


@dataclass(frozen=True, eq=False)
class Cutoff:
    """phi_r: 1 on B_r(center), 0 outside B_2r(center), quintic ramp in between."""

    field: Field
    radius: float
    center: tuple
    lipschitz: float


def quintic_ramp(t: np.ndarray) -> np.ndarray:
    """1 at t <= 0, 0 at t >= 1; zero first and second derivatives at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def cutoff(r: float, center, grid: Grid) -> Cutoff:
    if not r >= 2 * grid.h:
        raise ValueError(f"cut-off radius {r} is below 2h = {2 * grid.h}")
    center = tuple(float(c) for c in center)
    rho = grid.radii(about=center)
    phi = quintic_ramp((rho - r) / r)
    return Cutoff(Field(grid, phi), float(r), center, _RAMP_SLOPE / r)


@dataclass(frozen=True, eq=False)
class SplitReport:
    u1: Field
    u2: Field
    support_gap: float
    e1: float
    e2: float
    remainder: float
    mass_defect: float
    total: float
    cross: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("support_gap", "e1", "e2", "remainder", "mass_defect", "total", "cross")}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def dichotomy_split(params: FractionalParams, A: MagneticPotential, u: Field, xi,
                    R_bar: float, R_n: float, p: Optional[float] = None,
                    policy: QuadPolicy = QuadPolicy()) -> SplitReport:
    """u1 = phi_{R_bar}(. - xi) u,  u2 = (1 - phi_{R_n/2}(. - xi)) u.

    mass_defect is |int|u|^p - int|u1|^p - int|u2|^p| (the unit-mass form when u is
    normalized); cross = |u|^2 - e1 - e2 in the full norm.
    """
    p = params.p if p is None else p
    if R_n < 4 * R_bar:
        raise SupportOverlap(f"need R_n >= 4 R_bar, got R_n = {R_n}, R_bar = {R_bar}")
    g = u.grid
    phi1 = cutoff(R_bar, xi, g).field.values.real
    phi2 = cutoff(R_n / 2.0, xi, g).field.values.real
    u1 = Field(g, phi1 * u.values)
    u2 = Field(g, (1.0 - phi2) * u.values)
    rho = g.radii(about=xi)
    s1 = u1.values != 0
    s2 = u2.values != 0
    if s1.any() and s2.any():
        gap = float(rho[s2].min() - rho[s1].max())
    else:
        gap = R_n / 2.0 - 2.0 * R_bar
    if s1.any() and s2.any() and gap <= 0:
        raise SupportOverlap("pieces are not separated on this grid")
    e1 = seminorm_sq(params, A, u1, policy).total
    e2 = seminorm_sq(params, A, u2, policy).total
    tot = seminorm_sq(params, A, u, policy).total
    rest = u - u1 - u2
    rem = math.sqrt(seminorm_sq(params, A, rest, policy).total) if np.any(rest.values) else 0.0
    defect = abs(u.lp_pow(p) - u1.lp_pow(p) - u2.lp_pow(p))
    return SplitReport(u1, u2, gap, e1, e2, rem, defect, tot, tot - e1 - e2)


def _discrete_lipschitz(phi: Field) -> float:
    """max |phi(x) - phi(y)| / |x - y| over axis and diagonal neighbours."""
    v = phi.values.real
    h = phi.grid.h
    best = 0.0
    for d in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1),
              (1, -1, 0), (1, 0, -1), (0, 1, -1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)]:
        sl_a = tuple(slice(max(0, -k), v.shape[0] - max(0, k)) for k in d)
        sl_b = tuple(slice(max(0, k), v.shape[0] - max(0, -k)) for k in d)
        diff = np.abs(v[sl_b] - v[sl_a]).max() / (h * math.sqrt(sum(k * k for k in d)))
        best = max(best, float(diff))
    return best


def cutoff_constant(params: FractionalParams, grid: Grid, lipschitz: float) -> float:
    """C = max(2, W), W = h^3 sum over lattice d != 0 of min(Lip^2 |h d|^2, 1) K(d).

    From |phi(x) P u(x) - phi(y) u(y)|^2 <= 2 |phi(x) - phi(y)|^2 |u|^2 + 2 |P u(x) - u(y)|^2
    with |phi(x) - phi(y)| <= min(Lip |x - y|, 1): the pairs closer than 1/Lip get the
    quadratic bound, the rest the bound 1.
    """
    if lipschitz <= 0:
        return 2.0
    h = grid.h
    rho = 1.0 / lipschitz
    k = int(math.floor(rho / h + 1e-9)) + 1
    t = riesz_table(k + 1, h, params.s, True)
    kk = np.arange(k + 1, dtype=float)
    r2 = kk[:, None, None] ** 2 + kk[None, :, None] ** 2 + kk[None, None, :] ** 2
    mult = (2.0 - (kk == 0))[:, None, None] * (2.0 - (kk == 0))[None, :, None] * (2.0 - (kk == 0))[None, None, :]
    dist2 = h * h * r2
    near = dist2 <= rho * rho
    near_sum = float(np.sum(np.where(near, t * mult * lipschitz ** 2 * dist2, 0.0))) * h ** 3
    near_plain = float(np.sum(np.where(near, t * mult, 0.0))) * h ** 3
    far = lattice_total(h, params.s, True) - near_plain
    return max(2.0, near_sum + far)


def verify_cutoff_estimate(params: FractionalParams, A: MagneticPotential, u: Field, phi,
                           E1=None, E2=None, lipschitz: Optional[float] = None,
                           policy: QuadPolicy = QuadPolicy(exterior=False)) -> dict:
    """lhs = localized Gagliardo part of phi u over E1 x E2;
    rhs = C min(int_{E1} |u|^2, int_{E2} |u|^2) + C * localized Gagliardo part of u."""
    if isinstance(phi, Cutoff):
        lipschitz = phi.lipschitz if lipschitz is None else lipschitz
        phi = phi.field
    vals = phi.values.real
    if np.any(vals < -1e-15) or np.any(vals > 1 + 1e-15):
        raise ValueError("phi must take values in [0, 1]")
    if lipschitz is None:
        lipschitz = _discrete_lipschitz(phi)
    g = u.grid
    m1 = _masks(g, E1).astype(bool)
    m2 = _masks(g, E2).astype(bool)
    pu = Field(g, vals * u.values)
    lhs = 0.5 * pair_sum(params, A, pu, pu, policy, m1, m2)[0] if m1.any() and m2.any() else 0.0
    gag_u = 0.5 * pair_sum(params, A, u, u, policy, m1, m2)[0] if m1.any() and m2.any() else 0.0
    ab2 = np.abs(u.values) ** 2
    mass = min(float(np.sum(ab2[m1])), float(np.sum(ab2[m2]))) * g.dv
    C = cutoff_constant(params, g, lipschitz)
    rhs = C * mass + C * gag_u
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0, "C": C,
            "lipschitz": lipschitz, "mass": mass, "gagliardo_u": gag_u}


@dataclass(frozen=True)
class GaugeShift:
    """Pairs v(x) = e^{i eta . x} u(x + xi) with A_eta = A(. + xi) + eta."""

    cells: tuple
    xi: tuple
    eta: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def gauge_transform(params: FractionalParams, u: Field, xi, eta):
    """v(x) = exp(i eta . x) u(x + xi), translation by whole cells with periodic wrap.

    ``xi`` is a physical vector that must be a multiple of h on each axis.
    """
    g = u.grid
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    cells = xi / g.h
    k = np.rint(cells)
    if np.any(np.abs(cells - k) > 1e-9):
        raise NonLatticeShift(f"xi = {xi.tolist()} is not a lattice vector (h = {g.h})")
    k = tuple(int(c) for c in k)
    shifted = translate(u, tuple(-c for c in k))
    phase = np.exp(1j * (g.coords() @ eta))
    v = Field(g, phase * shifted.values)
    return v, GaugeShift(k, tuple(float(c) for c in xi), tuple(float(c) for c in eta))


def vanishing_diagnostic(mu: DensityField, R: float, p: float, u: Field) -> dict:
    """Q(R) from the density and sup over nodes xi of int_{B_R(xi)} |u|^p."""
    g = u.grid
    if not R >= g.h:
        raise ValueError("R must be at least one grid spacing")
    q = concentration_function(mu, [R])[0][1]
    lp = float(np.max(ball_sums(np.abs(u.values) ** p, g.h, R))) * g.dv
    return {"R": R, "Q": q, "lp_mass_sup": max(lp, 0.0)}
