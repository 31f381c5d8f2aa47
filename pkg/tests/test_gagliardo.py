import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracmag import (
    Field, FractionalParams, Gaussian, Grid, MagneticPotential, QuadPolicy, TwoBumps,
    concentration_function, density, localized_norm, make_field, seminorm_sq, translate,
)
from fracmag._geometry import PolicyError
from fracmag.gagliardo import DensityField, pair_sum
from fracmag.lattice import riesz_table

from conftest import random_field, random_linear


def brute_energy(params, A, u, table):
    """Direct double loop over distinct node pairs (ordered), halved."""
    g = u.grid
    x = g.coords().reshape(-1, 3)
    v = u.flat
    idx = np.array(np.unravel_index(np.arange(g.size), g.shape)).T
    tot = 0.0
    for a in range(g.size):
        d = np.abs(idx - idx[a])
        w = table[d[:, 0], d[:, 1], d[:, 2]]
        mid = 0.5 * (x[a] + x)
        theta = np.einsum("ij,ij->i", x[a] - x, A(mid))
        tot += np.sum(np.abs(np.exp(-1j * theta) * v[a] - v) ** 2 * w)
    return 0.5 * tot * g.dv ** 2


def test_zero_and_constant(half):
    g = Grid.from_extent(8, 4.0)
    z = seminorm_sq(half, MagneticPotential.zero(), Field(g, np.zeros(g.shape)))
    assert z.l2 == z.gagliardo == z.tail_bound == z.total == 0
    c = Field(g, np.ones(g.shape))
    e = seminorm_sq(half, MagneticPotential.zero(), c, QuadPolicy(exterior=False))
    assert abs(e.gagliardo) < 1e-12 * e.tail_bound
    assert e.tail_bound > 0 and not e.exterior_included
    assert e.total == e.l2 + e.gagliardo


def test_engine_matches_brute_force(half, rng):
    g = Grid.from_extent(6, 3.0, (0.2, -0.1, 0.3))
    u = random_field(g, rng)
    table = riesz_table(6, g.h, 0.5)
    for A in (MagneticPotential.zero(), MagneticPotential.constant_field(1.3), random_linear(rng)):
        ref = brute_energy(half, A, u, table)
        for method in ("auto", "direct"):
            e = seminorm_sq(half, A, u, QuadPolicy(exterior=False, method=method))
            assert e.gagliardo == pytest.approx(ref, rel=1e-12)
    T = MagneticPotential.tabulated(g, random_linear(rng)(g.coords()))
    assert seminorm_sq(half, T, u, QuadPolicy(exterior=False)).gagliardo == pytest.approx(
        brute_energy(half, T, u, table), rel=1e-12)


def test_half_pair_symmetry(half, rng):
    g = Grid.from_extent(10, 5.0)
    u = random_field(g, rng)
    A = random_linear(rng)
    a, _ = pair_sum(half, A, u, u, QuadPolicy())
    b, _ = pair_sum(half, A, u, u, QuadPolicy(), half=False)
    assert a == pytest.approx(b, rel=1e-12)


def test_exterior_term_reported(half):
    g = Grid.from_extent(12, 6.0)
    u = make_field(g, Gaussian(1.0))
    inc = seminorm_sq(half, MagneticPotential.zero(), u)
    exc = seminorm_sq(half, MagneticPotential.zero(), u, QuadPolicy(exterior=False))
    assert inc.exterior_included and inc.tail_bound == exc.tail_bound > 0
    assert inc.gagliardo == pytest.approx(exc.gagliardo + exc.tail_bound, rel=1e-14)
    assert inc.in_box == pytest.approx(exc.gagliardo, rel=1e-14)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_diamagnetic_energy(seed, b):
    params = FractionalParams(0.6, 3.0)
    rng = np.random.default_rng(seed)
    g = Grid.from_extent(6, 4.0)
    u = random_field(g, rng, envelope=1.0)
    for A in (MagneticPotential.constant_field(b), random_linear(rng)):
        ea = seminorm_sq(params, A, u).total
        e0 = seminorm_sq(params, MagneticPotential.zero(), u.abs()).total
        assert ea >= e0 - 1e-10 * e0


def test_monotone_in_cutoff(half, rng):
    g = Grid.from_extent(10, 5.0)
    u = random_field(g, rng)
    A = MagneticPotential.constant_field(1.0)
    vals = [seminorm_sq(half, A, u, QuadPolicy(r_cut=r, far="drop", exterior=False)).gagliardo
            for r in (2 * g.h, 3 * g.h, 5 * g.h, 8 * g.h, 20 * g.h)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    full = seminorm_sq(half, A, u, QuadPolicy(exterior=False)).gagliardo
    assert vals[-1] == pytest.approx(full, rel=1e-12)


def test_fast_far_bound(half, rng):
    g = Grid.from_extent(10, 5.0)
    u = random_field(g, rng)
    A = MagneticPotential.constant_field(0.4)
    exact = seminorm_sq(half, A, u, QuadPolicy(exterior=False)).gagliardo
    fast = seminorm_sq(half, A, u, QuadPolicy(r_cut=3 * g.h, far="fast", exterior=False))
    assert fast.far_bound > 0
    assert abs(fast.gagliardo - exact) <= fast.far_bound


def test_policy_errors(half):
    g = Grid.from_extent(8, 4.0)
    u = make_field(g, Gaussian(1.0))
    with pytest.raises(PolicyError):
        seminorm_sq(half, MagneticPotential.zero(), u, QuadPolicy(r_cut=g.h))
    with pytest.raises(PolicyError):
        QuadPolicy(far="approx")
    with pytest.raises(PolicyError):
        seminorm_sq(half, MagneticPotential.constant_field(1), u, QuadPolicy(method="fft"))


def test_localized_norm(half, rng):
    g = Grid.from_extent(12, 6.0)
    u = random_field(g, rng)
    A = MagneticPotential.constant_field(1.0)
    full = np.ones(g.shape, bool)
    ex = seminorm_sq(half, A, u, QuadPolicy(exterior=False)).total
    assert localized_norm(half, A, u, full, full) == pytest.approx(ex, rel=1e-12)
    assert localized_norm(half, A, u, [], full) == 0
    bump = make_field(g, TwoBumps(5.0, 1.0, weights=(1.0, 0.0)))
    far = g.radii(about=(2.5, 0, 0)) < 1.0
    assert localized_norm(half, A, bump, far, far) == 0
    left = g.coords()[..., 0] < 0
    two = make_field(g, TwoBumps(4.0, 1.0))
    cross = localized_norm(half, A, two, left, ~left) - float(np.sum(np.abs(two.values[left]) ** 2)) * g.dv
    assert cross > 0
    # each bump talks to the other across the gap 2, so the cross term stays below
    # c_s |gap|^{-3-2s} (int |u|)^2 times a modest factor
    assert cross <= half.c_s * 2.0 ** -4 * two.l2_sq() * 50


def test_index_list_equals_mask(half, rng):
    g = Grid.from_extent(8, 4.0)
    u = random_field(g, rng)
    mask = g.radii() < 1.2
    lst = np.argwhere(mask)
    A = MagneticPotential.constant_field(0.7)
    assert localized_norm(half, A, u, mask, ~mask) == pytest.approx(
        localized_norm(half, A, u, lst, np.argwhere(~mask)), rel=1e-14)


def test_density_consistency(half, rng):
    g = Grid.from_extent(10, 5.0)
    u = random_field(g, rng)
    for A in (MagneticPotential.zero(), random_linear(rng)):
        pol = QuadPolicy(exterior=False)
        mu = density(half, A, u, pol)
        e = seminorm_sq(half, A, u, pol)
        assert np.all(mu.mu >= 0)
        assert mu.total() == pytest.approx(e.l2 + 2 * e.gagliardo / half.c_s, rel=1e-10)
        inc = density(half, A, u)
        ei = seminorm_sq(half, A, u)
        assert inc.total() == pytest.approx(ei.l2 + (2 * ei.in_box + ei.tail_bound) / half.c_s, rel=1e-10)


def test_density_fft_matches_engine(half, rng):
    g = Grid.from_extent(10, 5.0)
    u = random_field(g, rng)
    a = density(half, MagneticPotential.zero(), u)
    b = density(half, MagneticPotential.zero(), u, QuadPolicy(method="direct"))
    np.testing.assert_allclose(a.mu, b.mu, rtol=1e-10, atol=1e-12 * b.mu.max())


def test_density_translation(half):
    g = Grid.from_extent(16, 8.0)
    u = make_field(g, TwoBumps(2.4, 1.0, center=(-1.0, 0.0, 0.5)))
    A = MagneticPotential.zero()
    mu = density(half, A, u)
    t = translate(u, (3, -2, 1))
    mt = density(half, A, t)
    # zero extension plus exterior weights is the whole-lattice sum: exact up to rounding
    np.testing.assert_allclose(mt.mu[3:, :-2, 1:], mu.mu[:-3, 2:, :-1], rtol=1e-9, atol=1e-12)


def test_density_zero_and_radial_monotone(half):
    g = Grid.from_extent(12, 6.0, (0.25, 0.25, 0.25))
    z = density(half, MagneticPotential.zero(), Field(g, np.zeros(g.shape)))
    assert not np.any(z.mu)
    u = make_field(g, Gaussian(1.0, (0.0, 0.0, 0.0)))
    mu = density(half, MagneticPotential.zero(), u, QuadPolicy(method="direct"))
    c = g.index_of((0, 0, 0))
    for axis in range(3):
        line = np.moveaxis(mu.mu, axis, 0)[c[axis]:, c[(axis + 1) % 3], c[(axis + 2) % 3]]
        assert np.all(np.diff(line) < 0)


def test_concentration_function(half):
    g = Grid.from_extent(8, 4.0)
    zero = DensityField(g, np.zeros(g.shape))
    assert all(q == 0 for _, q in concentration_function(zero, [0.5, 1, 2]))
    pm = np.zeros(g.shape)
    pm[3, 4, 2] = 7.0
    q = concentration_function(DensityField(g, pm), [g.h, 2 * g.h, 3.0])
    for _, v in q:
        assert v == pytest.approx(7.0 * g.dv, rel=1e-12)
    with pytest.raises(ValueError):
        concentration_function(zero, [2.0, 1.0])


def test_concentration_two_bumps_brute(half):
    g = Grid.from_extent(16, 8.0)
    D, r = 5.0, 1.0
    u = make_field(g, TwoBumps(D, r))
    mu = DensityField(g, np.abs(u.values) ** 2)
    radii = [0.5, 1.0, 1.4, D / 2 - r - 0.1, g.diameter]
    got = dict(concentration_function(mu, radii))
    x = g.coords().reshape(-1, 3)
    m = mu.mu.ravel()
    for R in radii[:-1]:
        best = max(float(np.sum(m[np.sum((x - xi) ** 2, 1) <= R * R])) for xi in x) * g.dv
        assert got[R] == pytest.approx(best, rel=1e-10)
    assert got[radii[3]] == pytest.approx(0.5 * mu.total(), rel=1e-6)
    assert got[g.diameter] == pytest.approx(mu.total())
    vals = [got[R] for R in radii]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_energy_json(half):
    g = Grid.from_extent(8, 4.0)
    e = seminorm_sq(half, MagneticPotential.zero(), make_field(g, Gaussian(1.0)))
    import json
    d = json.loads(e.to_json())
    assert d["total"] == e.total and d["in_box"] == e.in_box
