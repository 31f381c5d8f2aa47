"""Ground states on the L^p sphere by projected gradient flow.

Energy is ``E(u) = [u]_{s,A}^2 + |u|_2^2`` (critical problem: no L^2 term), gradient
``2((-Delta)^s_A u + u)``, projection rescales to ``int |u|^p = lambda``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._geometry import kappa, weight_table, zero_potential_apply, Phase
from . import _engine
from .gagliardo import QuadPolicy, concentration_function, density, seminorm_sq
from .grid import Field, Grid
from .lattice import lattice_total
from .params import FractionalParams
from .potential import MagneticPotential


class ZeroFieldError(ArithmeticError):
    """The iterate collapsed to zero and cannot be projected."""


@dataclass(frozen=True)
class Constraint:
    p: float
    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("constraint mass must be positive")


@dataclass(frozen=True)
class MinimizeOptions:
    step: Optional[float] = None      # None: 1 / (2 * lattice total weight + 2)
    max_iter: int = 500
    tol: float = 1e-10
    radial: bool = False
    policy: QuadPolicy = QuadPolicy()
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = self.policy.to_dict()
        return d


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    level: float
    minimizer: Field
    lagrange: float
    iterations: int
    energy_trace: List[float]
    constraint_residual: float
    grad_norm: float
    converged: bool = True
    message: str = ""
    residual_trace: List[float] = field(default_factory=list)
    grad_trace: List[float] = field(default_factory=list)
    critical: bool = False
    warning: Optional[str] = None
    concentration: Optional[list] = None
    mass: float = 1.0
    p: float = 0.0

    def summary(self) -> dict:
        return {
            "level": self.level, "lagrange": self.lagrange, "iterations": self.iterations,
            "constraint_residual": self.constraint_residual, "grad_norm": self.grad_norm,
            "converged": self.converged, "message": self.message, "critical": self.critical,
            "warning": self.warning, "concentration": self.concentration,
            "mass": self.mass, "p": self.p, "grid": self.minimizer.grid.to_dict(),
        }

    def trace_rows(self):
        for k, e in enumerate(self.energy_trace):
            yield k, e, self.residual_trace[k], self.grad_trace[k]


class _Energy:
    """Evaluates (E(u), gradient) with one operator application."""

    def __init__(self, params, A, grid: Grid, policy: QuadPolicy, with_l2: bool):
        self.params = params
        self.grid = grid
        self.policy = policy
        self.with_l2 = with_l2
        self.fft = A.is_zero and policy.method != "direct"
        if not self.fft:
            self.table = weight_table(grid.n, grid.h, params.s, policy.self_cell)
            self.phase = Phase(grid, A)
            self.kap = kappa(grid.n, grid.h, params.s, policy.self_cell) if policy.exterior else 0.0

    def apply(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        if self.fft:
            return zero_potential_apply(u, g.h, self.params.s, self.policy.self_cell,
                                        self.policy.exterior)
        return g.dv * _engine.apply_sum(u, self.table, *self.phase.args) + u * self.kap

    def __call__(self, u: np.ndarray):
        lu = self.apply(u)
        dv = self.grid.dv
        e = float(np.real(np.vdot(u, lu))) * dv
        grad = 2.0 * lu
        if self.with_l2:
            e += float(np.vdot(u, u).real) * dv
            grad = grad + 2.0 * u
        return e, grad


def shell_keys(grid: Grid) -> np.ndarray:
    """Exact integer |x - center|^2 in units of (h/2)^2."""
    k = 2 * np.arange(grid.n) - (grid.n - 1)
    return (k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2).ravel()


def radial_projection(u: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Average over spherical shells about the grid center (L^2-orthogonal projection)."""
    _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    flat = u.ravel()
    re = np.bincount(inv, weights=flat.real) / counts
    im = np.bincount(inv, weights=flat.imag) / counts
    return (re + 1j * im)[inv].reshape(u.shape)


def _project(u: np.ndarray, p: float, mass: float, dv: float) -> np.ndarray:
    cur = float(np.sum(np.abs(u) ** p)) * dv
    if not cur > 0 or not math.isfinite(cur):
        raise ZeroFieldError("iterate collapsed to zero")
    return u * (mass / cur) ** (1.0 / p)


def _tangent(u: np.ndarray, grad: np.ndarray, e: float, p: float, mass: float) -> np.ndarray:
    """Gradient of the scale-invariant quotient E(u) / (int |u|^p)^{2/p}, up to a positive
    factor: grad - (2 E / mass) |u|^{p-2} u. Re<., u> = 0, so the rescaling retraction
    keeps it a descent direction; it vanishes exactly at the Euler-Lagrange equation."""
    return grad - (2.0 * e / mass) * np.abs(u) ** (p - 2.0) * u


def _norm(v: np.ndarray, dv: float) -> float:
    return float(np.sqrt(np.vdot(v, v).real * dv))


def _flow(params: FractionalParams, A: MagneticPotential, u0: Field, constraint: Constraint,
          options: MinimizeOptions, with_l2: bool, stop_on_tol: bool = True) -> MinimizationResult:
    g = u0.grid
    p, mass, dv = constraint.p, constraint.mass, g.dv
    if not np.any(u0.values):
        raise ZeroFieldError("initial field is identically zero")
    if options.step is not None and not options.step > 0:
        raise ValueError("step must be positive")
    tau0 = options.step or 1.0 / (2.0 * lattice_total(g.h, params.s, options.policy.self_cell) + 2.0)
    keys = shell_keys(g) if options.radial else None
    energy = _Energy(params, A, g, options.policy, with_l2)

    u = np.array(u0.values, dtype=np.complex128)
    if keys is not None:
        u = radial_projection(u, keys)
    u = _project(u, p, mass, dv)
    e, grad = energy(u)
    grad = _tangent(u, grad, e, p, mass)
    resid = abs(float(np.sum(np.abs(u) ** p)) * dv - mass) / mass
    trace, rtrace, gtrace = [e], [resid], [_norm(grad, dv)]
    tau = tau0
    converged = False
    message = "max_iter reached"
    it = 0
    while it < options.max_iter:
        it += 1
        accepted = False
        while tau > 1e-12 * tau0:
            cand = u - tau * grad
            if keys is not None:
                cand = radial_projection(cand, keys)
            cand = _project(cand, p, mass, dv)
            e_new, g_new = energy(cand)
            if e_new <= e:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            converged = True
            message = "step collapsed: no further decrease at rounding level"
            break
        decrease = (e - e_new) / max(abs(e), 1e-300)
        u, e = cand, e_new
        grad = _tangent(u, g_new, e, p, mass)
        resid = abs(float(np.sum(np.abs(u) ** p)) * dv - mass) / mass
        trace.append(e)
        rtrace.append(resid)
        gtrace.append(_norm(grad, dv))
        if stop_on_tol and decrease < options.tol:
            converged = True
            message = "relative energy decrease below tol"
            break
    if not stop_on_tol:
        converged = True
        message = "fixed iteration count"
    return MinimizationResult(
        level=e, minimizer=Field(g, u), lagrange=e / mass, iterations=it,
        energy_trace=trace, constraint_residual=rtrace[-1], grad_norm=gtrace[-1],
        converged=converged, message=message, residual_trace=rtrace, grad_trace=gtrace,
        mass=mass, p=p,
    )


def default_initial(grid: Grid) -> Field:
    """Gaussian of width L/6 about the grid center."""
    from .grid import Gaussian, make_field
    return make_field(grid, Gaussian(grid.L / 6.0, grid.center))


def minimize(params: FractionalParams, A: MagneticPotential, u0: Field,
             constraint: Optional[Constraint] = None,
             options: MinimizeOptions = MinimizeOptions()) -> MinimizationResult:
    """Estimate M_A(lambda) = inf { |u|_{s,A}^2 : int |u|^p = lambda }."""
    constraint = constraint or Constraint(params.p, 1.0)
    if constraint.p != params.p:
        raise ValueError("constraint exponent differs from params.p")
    return _flow(params, A, u0, constraint, options, with_l2=True)


def remove_multiplier(result: MinimizationResult, params: FractionalParams) -> Field:
    """w = lambda^{1/(p-2)} u solves (-Delta)^s_A w + w = |w|^{p-2} w weakly."""
    p = result.p or params.p
    if not p > 2:
        raise ValueError("p must exceed 2")
    if not result.lagrange > 0:
        raise ValueError("Lagrange multiplier must be positive")
    return result.minimizer * (result.lagrange ** (1.0 / (p - 2.0)))


def pde_residual(params: FractionalParams, A: MagneticPotential, w: Field,
                 policy: QuadPolicy = QuadPolicy(), critical: bool = False,
                 interior: float = 0.5) -> float:
    """Relative L^2 residual of (-Delta)^s_A w + w - |w|^{p-2} w on |x - center| <= interior * L/2."""
    g = w.grid
    en = _Energy(params, A, g, policy, with_l2=False)
    lw = en.apply(np.asarray(w.values))
    lhs = lw if critical else lw + w.values
    rhs = np.abs(w.values) ** (params.p - 2.0) * w.values
    mask = g.radii() <= interior * 0.5 * g.L
    num = np.sqrt(np.sum(np.abs(lhs - rhs)[mask] ** 2))
    den = np.sqrt(np.sum(np.abs(rhs)[mask] ** 2))
    return float(num / den)


def critical_level(params: FractionalParams, A: MagneticPotential, u0: Field,
                   options: MinimizeOptions = MinimizeOptions(),
                   radii: Optional[Sequence[float]] = None,
                   fixed_iterations: bool = False) -> MinimizationResult:
    """Estimate M_A^c = inf { [u]_{s,A}^2 : |u|_{L^{6/(3-2s)}} = 1 }.

    The infimum is in general not attained, so the result carries a warning and the
    concentration function of the final iterate instead of a claim of convergence.
    """
    if not params.is_critical:
        raise ValueError("critical_level needs p = 6/(3-2s)")
    res = _flow(params, A, u0, Constraint(params.p, 1.0), options, with_l2=False,
                stop_on_tol=not fixed_iterations)
    g = u0.grid
    radii = list(radii) if radii is not None else [g.h * k for k in (1, 2, 4, 8) if g.h * k < g.diameter]
    mu = density(params, A, res.minimizer, options.policy)
    conc = [[r, q] for r, q in concentration_function(mu, radii)]
    warning = ("critical level: infimum not attained in general; iterates may concentrate "
               "(see concentration)")
    return MinimizationResult(
        **{**res.__dict__, "critical": True, "warning": warning, "concentration": conc},
    )


def scale_field(u: Field, sigma: float, s: float) -> Field:
    """u_sigma(x) = sigma^{-(3-2s)/2} u(x / sigma), sampled on the grid scaled by sigma."""
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    return Field(u.grid.scaled(sigma), u.values * sigma ** (-(3.0 - 2.0 * s) / 2.0))


def sigma_scaling_curve(params: FractionalParams, A: MagneticPotential, u: Field,
                        sigmas: Sequence[float], policy: QuadPolicy = QuadPolicy()):
    """[(sigma, [u_sigma]^2_{s,A}, [u]^2_{s,0})] for each sigma."""
    ref = seminorm_sq(params, MagneticPotential.zero(), u, policy).gagliardo
    out = []
    for sg in sigmas:
        us = scale_field(u, float(sg), params.s)
        out.append((float(sg), seminorm_sq(params, A, us, policy).gagliardo, ref))
    return out
