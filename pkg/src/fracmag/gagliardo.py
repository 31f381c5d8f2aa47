"""Magnetic Gagliardo energy on a grid: seminorm, localized norms, density, concentration.

Pair sums run over distinct nodes of the box with weights ``c_s |x - y|^{-3-2s}``
(nearest-neighbour weights carry the lattice self-cell correction). The field is
zero outside the box, so pairs with one node outside contribute
``|u(x)|^2 kappa(x)``; that exterior term is always reported as ``tail_bound`` and
is part of ``gagliardo`` only when the policy asks for it (the default).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import signal

from . import _engine
from ._geometry import (
    Phase, PolicyError, convolve_kernel, in_box_weight, kappa, same_grid, sup_norm,
    weight_table, zero_potential_apply,
)
from .grid import Field, Grid
from .params import FractionalParams
from .potential import MagneticPotential

FAR_MODES = ("exact", "drop", "fast")
_FAR_CODE = {"exact": 0, "drop": 1, "fast": 2}


@dataclass(frozen=True)
class QuadPolicy:
    """How pair sums are truncated.

    r_cut: pairs farther apart than this are handled by ``far``
        (``None`` means the box half-width).
    far: "exact" keeps the full integrand, "drop" discards far pairs, "fast" replaces
        the far-pair phase by 1 and reports an error bound.
    exterior: include pairs with one node outside the box (field zero there).
    self_cell: apply the nearest-neighbour lattice correction.
    method: "auto" uses FFT convolution when it is exact (A = 0, far = "exact").
    """

    r_cut: Optional[float] = None
    far: str = "exact"
    exterior: bool = True
    self_cell: bool = True
    method: str = "auto"

    def __post_init__(self):
        if self.far not in FAR_MODES:
            raise PolicyError(f"far must be one of {FAR_MODES}, got {self.far!r}")
        if self.method not in ("auto", "direct", "fft"):
            raise PolicyError(f"unknown method {self.method!r}")
        if self.r_cut is not None and not self.r_cut > 0:
            raise PolicyError("r_cut must be positive")

    def cutoff(self, grid: Grid) -> float:
        r = 0.5 * grid.L if self.r_cut is None else float(self.r_cut)
        if r < 2 * grid.h:
            raise PolicyError(f"r_cut = {r} is below 2h = {2 * grid.h}")
        return r

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EnergyBreakdown:
    l2: float
    gagliardo: float
    tail_bound: float
    total: float
    exterior_included: bool = False
    far_bound: float = 0.0

    @property
    def in_box(self) -> float:
        """Gagliardo part restricted to pairs with both nodes in the box."""
        return self.gagliardo - (self.tail_bound if self.exterior_included else 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["in_box"] = self.in_box
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True, eq=False)
class DensityField:
    """Per-node energy density, without the c_s/2 prefactor."""

    grid: Grid
    mu: np.ndarray
    exterior_included: bool = False

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(self.grid.shape)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    def total(self) -> float:
        return float(np.sum(self.mu) * self.grid.dv)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "exterior_included": self.exterior_included,
                "total": self.total()}


def _masks(grid: Grid, E) -> np.ndarray:
    """Index set -> uint8 mask. Accepts a boolean (n,n,n) array, an iterable of
    index triples, or None for the full grid."""
    if E is None:
        return np.ones(grid.shape, np.uint8)
    arr = np.asarray(E)
    if arr.shape == grid.shape and arr.dtype == bool:
        return arr.astype(np.uint8)
    m = np.zeros(grid.shape, np.uint8)
    idx = np.asarray(list(E) if not isinstance(E, np.ndarray) else E, dtype=int)
    if idx.size == 0:
        return m
    idx = idx.reshape(-1, 3)
    if np.any(idx < 0) or np.any(idx >= grid.n):
        raise IndexError("index set reaches outside the grid")
    m[idx[:, 0], idx[:, 1], idx[:, 2]] = 1
    return m


def _use_fft(A: MagneticPotential, policy: QuadPolicy) -> bool:
    if policy.method == "direct":
        return False
    ok = A.is_zero and policy.far == "exact"
    if policy.method == "fft" and not ok:
        raise PolicyError("the FFT path needs A = 0 and far = 'exact'")
    return ok


def pair_sum(params: FractionalParams, A: MagneticPotential, u: Field, v: Field,
             policy: QuadPolicy, E1=None, E2=None, half: bool = True):
    """Ordered-pair sum over E1 x E2 of Re[(P u_x - u_y) conj(P v_x - v_y)] K, times h^6.

    Returns (value, far part). Masks of None mean the full grid.
    """
    same_grid(u, v)
    g = u.grid
    rc = policy.cutoff(g)
    table = weight_table(g.n, g.h, params.s, policy.self_cell)
    use_masks = E1 is not None or E2 is not None
    m1 = _masks(g, E1)
    m2 = _masks(g, E2)
    r2cut = (rc / g.h) ** 2 if policy.far != "exact" else math.inf
    phase = Phase(g, A)
    tot, far = _engine.form_sum(
        u.values, v.values, m1, m2, use_masks, table, *phase.args,
        r2cut, _FAR_CODE[policy.far], half,
    )
    return tot * g.dv ** 2, far * g.dv ** 2


def _far_phase_bound(params, A, u: Field, policy: QuadPolicy) -> float:
    """Error bound for replacing far-pair phases by 1 (only for far = 'fast').

    | |P a - b|^2 - |a - b|^2 | <= |P - 1| |a| (|P a - b| + |a - b|) and
    |P - 1| <= |x - y| sup|A|, summed with Cauchy-Schwarz over each displacement.
    """
    if policy.far != "fast":
        return 0.0
    g = u.grid
    a_sup = sup_norm(g, A)
    if a_sup == 0.0:
        return 0.0
    rc = policy.cutoff(g)
    table = weight_table(g.n, g.h, params.s, policy.self_cell)
    k = np.arange(g.n, dtype=float)
    dist = g.h * np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2)
    mult = (2.0 - (k[:, None, None] == 0)) * (2.0 - (k[None, :, None] == 0)) * (2.0 - (k[None, None, :] == 0))
    far_moment = float(np.sum(np.where(dist > rc, table * dist * mult, 0.0))) * g.dv
    # unordered pairs: half of the ordered sum; each term <= 4|a|^2-type product
    return 2.0 * a_sup * far_moment * u.l2_sq()


def seminorm_sq(params: FractionalParams, A: MagneticPotential, u: Field,
                policy: QuadPolicy = QuadPolicy()) -> EnergyBreakdown:
    """[u]_{s,A}^2 = (c_s/2) * double integral of |e^{-i(x-y).A(mid)} u(x) - u(y)|^2 |x-y|^{-3-2s}."""
    g = u.grid
    policy.cutoff(g)  # validates r_cut
    l2 = u.l2_sq()
    tail = float(np.sum(np.abs(u.values) ** 2 * kappa(g.n, g.h, params.s, policy.self_cell)) * g.dv)
    if _use_fft(A, policy):
        lu = zero_potential_apply(u.values, g.h, params.s, policy.self_cell, exterior=False)
        inbox = float(np.real(np.vdot(u.values, lu))) * g.dv
    else:
        tot, _ = pair_sum(params, A, u, u, policy)
        inbox = 0.5 * tot
    inbox = max(inbox, 0.0)
    gag = inbox + tail if policy.exterior else inbox
    return EnergyBreakdown(
        l2=l2, gagliardo=gag, tail_bound=tail, total=l2 + gag,
        exterior_included=policy.exterior, far_bound=_far_phase_bound(params, A, u, policy),
    )


def localized_norm(params: FractionalParams, A: MagneticPotential, u: Field, E1, E2,
                   policy: QuadPolicy = QuadPolicy(exterior=False)) -> float:
    """int_{E1} |u|^2 + (c_s/2) * double integral over E1 x E2 (pairs inside the box)."""
    g = u.grid
    m1 = _masks(g, E1)
    m2 = _masks(g, E2)
    if not m1.any() or not m2.any():
        return 0.0
    l2 = float(np.sum(np.abs(u.values) ** 2 * m1) * g.dv)
    tot, _ = pair_sum(params, A, u, u, policy, m1.astype(bool), m2.astype(bool))
    return l2 + 0.5 * tot


def density(params: FractionalParams, A: MagneticPotential, u: Field,
            policy: QuadPolicy = QuadPolicy()) -> DensityField:
    """mu(x) = |u(x)|^2 + sum_y |e^{-i(x-y).A} u(x) - u(y)|^2 |x-y|^{-3-2s} h^3 (no c_s)."""
    g = u.grid
    rc = policy.cutoff(g)
    ab2 = np.abs(u.values) ** 2
    if policy.far == "drop" and policy.r_cut is not None:
        table = weight_table(g.n, g.h, params.s, policy.self_cell, r_cut=rc)
    else:
        table = weight_table(g.n, g.h, params.s, policy.self_cell)
    if A.is_zero and policy.method != "direct" and not (policy.far == "drop" and policy.r_cut is not None):
        # |u(x) - u(y)|^2 expanded into three convolutions with K
        conv_u = convolve_kernel(u.values, g.h, params.s, policy.self_cell)
        conv_a = convolve_kernel(ab2.astype(complex), g.h, params.s, policy.self_cell).real
        acc = (ab2 * in_box_weight(g.n, g.h, params.s, policy.self_cell)
               + g.dv * (conv_a - 2.0 * np.real(np.conj(u.values) * conv_u)))
        acc = np.maximum(acc, 0.0)
    else:
        acc = g.dv * _engine.density_sum(u.values, table, *Phase(g, A).args)
    if policy.exterior:
        acc = acc + ab2 * kappa(g.n, g.h, params.s, policy.self_cell)
    mu = ab2 + acc / params.c_s
    return DensityField(g, mu, policy.exterior)


def _ball(r_cells: float) -> np.ndarray:
    k = int(math.floor(r_cells + 1e-12))
    ax = np.arange(-k, k + 1)
    r2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    return (r2 <= r_cells ** 2 * (1 + 1e-12)).astype(float)


def ball_sums(values: np.ndarray, h: float, R: float) -> np.ndarray:
    """sum over |x - xi| <= R of values, for every node xi."""
    ball = _ball(R / h)
    if ball.shape[0] == 1:
        return values.astype(float)
    return signal.fftconvolve(values, ball, mode="same")


def concentration_function(mu: DensityField, radii: Iterable[float]):
    """Q(R) = max over nodes xi of sum_{|x - xi| <= R} mu h^3, for each R (ascending)."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b < a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and ascending")
    g = mu.grid
    total = mu.total()
    out = []
    best = 0.0
    for R in radii:
        if R >= g.diameter:
            q = total
        else:
            q = float(np.max(ball_sums(mu.mu, g.h, R))) * g.dv
            q = min(q, total) if total > 0 else max(q, 0.0)
        # FFT rounding must not break the monotonicity of an exact max of nested sums
        best = max(best, q)
        out.append((R, best))
    return out
