import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracmag import (
    Field, FractionalParams, Gaussian, Grid, MagneticPotential, OperatorPolicy, QuadPolicy,
    apply_operator, bilinear_form, calibrate_talenti, make_field, seminorm_sq,
)
from fracmag._geometry import PolicyError
from fracmag.operator import NonInteriorNode, fourier_apply_s, fourier_seminorm_sq
from fracmag.lattice import riesz_table

from conftest import random_field, random_linear

from oracles import talenti_exact

SD = OperatorPolicy(form="symmetric-difference")


def brute_apply(params, A, u, exterior_kappa=None):
    g = u.grid
    table = riesz_table(g.n, g.h, params.s)
    x = g.coords().reshape(-1, 3)
    idx = np.array(np.unravel_index(np.arange(g.size), g.shape)).T
    v = u.flat
    out = np.empty(g.size, complex)
    for a in range(g.size):
        d = np.abs(idx - idx[a])
        w = table[d[:, 0], d[:, 1], d[:, 2]]
        theta = np.einsum("ij,ij->i", x[a] - x, A(0.5 * (x[a] + x)))
        out[a] = np.sum((v[a] - np.exp(1j * theta) * v) * w) * g.dv
    return out.reshape(g.shape)


def test_zero_field(half):
    g = Grid.from_extent(8, 4.0)
    z = Field(g, np.zeros(g.shape))
    for form in ("principal-value", "symmetric-difference"):
        r = apply_operator(half, MagneticPotential.constant_field(1), z, OperatorPolicy(form=form))
        assert not np.any(r.field.values)


def test_pv_matches_brute_force(half, rng):
    g = Grid.from_extent(6, 3.0, (0.1, 0.2, -0.3))
    u = random_field(g, rng)
    for A in (MagneticPotential.zero(), MagneticPotential.constant_field(1.1), random_linear(rng)):
        ref = brute_apply(half, A, u)
        got = apply_operator(half, A, u, OperatorPolicy(exterior=False)).field.values
        np.testing.assert_allclose(got, ref, rtol=1e-11, atol=1e-12 * np.abs(ref).max())


def test_linearity(half, rng):
    g = Grid.from_extent(8, 4.0)
    u, v = random_field(g, rng), random_field(g, rng)
    A = random_linear(rng)
    a, b = 0.7 - 0.2j, -1.3 + 0.4j
    lhs = apply_operator(half, A, a * u + b * v).field.values
    rhs = a * apply_operator(half, A, u).field.values + b * apply_operator(half, A, v).field.values
    np.testing.assert_allclose(lhs, rhs, atol=1e-11 * np.abs(rhs).max())


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_bilinear_symmetry_and_weak_strong(seed, exterior):
    params = FractionalParams(0.35, 2.5)
    rng = np.random.default_rng(seed)
    g = Grid.from_extent(6, 3.0)
    u, v = random_field(g, rng), random_field(g, rng)
    A = random_linear(rng)
    pol = QuadPolicy(exterior=exterior)
    buv = bilinear_form(params, A, u, v, pol)
    assert buv == pytest.approx(bilinear_form(params, A, v, u, pol), rel=1e-10, abs=1e-12)
    assert bilinear_form(params, A, u, u, pol) == pytest.approx(
        seminorm_sq(params, A, u, pol).gagliardo, rel=1e-10)
    lu = apply_operator(params, A, u, OperatorPolicy(exterior=exterior)).field.values
    strong = float(np.real(np.vdot(v.values, lu))) * g.dv
    assert strong == pytest.approx(buv, rel=1e-10, abs=1e-12)


def test_bilinear_zero_potential_fft(half, rng):
    g = Grid.from_extent(10, 5.0)
    u, v = random_field(g, rng), random_field(g, rng)
    A = MagneticPotential.zero()
    a = bilinear_form(half, A, u, v)
    b = bilinear_form(half, A, u, v, QuadPolicy(method="direct"))
    assert a == pytest.approx(b, rel=1e-11)


def test_pv_and_sd_agree(half, rng):
    g = Grid.from_extent(12, 6.0)
    u = make_field(g, Gaussian(1.0))
    for A in (MagneticPotential.zero(), MagneticPotential.constant_field(0.8), random_linear(rng)):
        pv = apply_operator(half, A, u).field.values
        sd = apply_operator(half, A, u, SD)
        m = sd.valid
        assert not m[0].any() and m[1:-1, 1:-1, 1:-1].all()
        np.testing.assert_allclose(sd.field.values[m], pv[m], atol=1e-11 * np.abs(pv).max())


def test_ring_and_policy_errors(half):
    g = Grid.from_extent(8, 4.0)
    u = make_field(g, Gaussian(1.0))
    sd = apply_operator(half, MagneticPotential.zero(), u, SD)
    with pytest.raises(NonInteriorNode):
        sd.at((0, 3, 3))
    assert isinstance(sd.at((3, 3, 3)), complex)
    cut = apply_operator(half, MagneticPotential.zero(), u,
                         OperatorPolicy(form="symmetric-difference", r_cut=2.2 * g.h))
    assert cut.metadata["ring_width"] == 3
    with pytest.raises(PolicyError):
        OperatorPolicy(form="central")
    with pytest.raises(PolicyError):
        apply_operator(half, MagneticPotential.zero(), u, OperatorPolicy(epsilon=0.1 * g.h))
    with pytest.raises(PolicyError):
        apply_operator(half, MagneticPotential.zero(), u, OperatorPolicy(epsilon=2.0, r_cut=1.0))


def test_fourier_oracle_basics(half):
    g = Grid.from_extent(16, 2 * np.pi)
    const = Field(g, np.full(g.shape, 3.0 + 1j))
    assert np.abs(fourier_apply_s(half, const).values).max() < 1e-13
    x = g.coords()
    k = np.array([2.0, -1.0, 3.0])
    mode = Field(g, np.exp(1j * x @ k))
    out = fourier_apply_s(FractionalParams(0.3, 2.5), mode)
    np.testing.assert_allclose(out.values, np.dot(k, k) ** 0.3 * mode.values, atol=1e-11)
    assert fourier_seminorm_sq(half, mode) == pytest.approx(np.linalg.norm(k) * g.L ** 3, rel=1e-12)


def test_gaussian_origin_value(half):
    from oracles import GAUSS_OP_ORIGIN_HALF
    g = Grid.from_extent(24, 12.0, (0.25,) * 3)
    u = make_field(g, Gaussian(1.0))
    idx = g.index_of((0, 0, 0))
    pv = apply_operator(half, MagneticPotential.zero(), u).at(idx)
    assert pv.real == pytest.approx(GAUSS_OP_ORIGIN_HALF, rel=0.02)
    assert abs(pv.imag) < 1e-12


def test_calibration_lattice():
    params = FractionalParams(0.5, 3.0)
    small = calibrate_talenti(params, n=24, L=8.0)
    big = calibrate_talenti(params, n=48, L=16.0)
    assert small.d_s > 0 and big.d_s > 0
    assert big.residual < small.residual
    assert 0.9 <= big.ratio_min <= big.ratio_max <= 1.1
    assert big.d_s == pytest.approx(talenti_exact(0.5), rel=0.01)


def test_calibration_fourier_and_errors():
    params = FractionalParams(0.5, 3.0)
    f = calibrate_talenti(params, n=32, L=16.0, method="fourier", max_residual=1.0)
    assert f.d_s > 0 and f.method == "fourier"
    with pytest.raises(ValueError):
        calibrate_talenti(params, n=16, L=8.0, method="spline")
