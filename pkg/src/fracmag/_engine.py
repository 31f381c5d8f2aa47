"""Numba pair-sum kernels on a cubic lattice.

Every kernel walks displacements d (half space unless stated otherwise) and, for
each d, all node pairs (x, y = x + d) inside the box. The magnetic phase of a pair
is ``P = exp(-i (x - y) . A((x + y) / 2)) = exp(i h d . A(m))``:

* kind 0: A = 0, P = 1;
* kind 1: A(m) = M m + b; for fixed d the angle is affine in the node index, so P
  factors into a per-d constant times three per-axis rows (exact trig, no recurrences);
* kind 2: A tabulated on the half-step lattice of pair midpoints (``ahalf``).

Reductions are compensated (Neumaier) and combined in a fixed order, so results
do not depend on the numba thread count.
"""
import os

import numba as nb
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; workqueue is always available
    nb.config.THREADING_LAYER = "workqueue"

_JIT = dict(cache=True)


@nb.njit(**_JIT)
def _phase_rows(dx, dy, dz, mat, off, cen, h, n, px, py, pz):
    """Fill per-axis phase rows for displacement d; return the constant factor."""
    g0 = h * h * (mat[0, 0] * dx + mat[1, 0] * dy + mat[2, 0] * dz)
    g1 = h * h * (mat[0, 1] * dx + mat[1, 1] * dy + mat[2, 1] * dz)
    g2 = h * h * (mat[0, 2] * dx + mat[1, 2] * dy + mat[2, 2] * dz)
    mc0 = mat[0, 0] * cen[0] + mat[0, 1] * cen[1] + mat[0, 2] * cen[2] + off[0]
    mc1 = mat[1, 0] * cen[0] + mat[1, 1] * cen[1] + mat[1, 2] * cen[2] + off[1]
    mc2 = mat[2, 0] * cen[0] + mat[2, 1] * cen[1] + mat[2, 2] * cen[2] + off[2]
    dmd = (dx * (mat[0, 0] * dx + mat[0, 1] * dy + mat[0, 2] * dz)
           + dy * (mat[1, 0] * dx + mat[1, 1] * dy + mat[1, 2] * dz)
           + dz * (mat[2, 0] * dx + mat[2, 1] * dy + mat[2, 2] * dz))
    half = 0.5 * (n - 1)
    phi0 = (h * (dx * mc0 + dy * mc1 + dz * mc2)
            - half * (g0 + g1 + g2) + 0.5 * h * h * dmd)
    for i in range(n):
        px[i] = complex(np.cos(g0 * i), np.sin(g0 * i))
        py[i] = complex(np.cos(g1 * i), np.sin(g1 * i))
        pz[i] = complex(np.cos(g2 * i), np.sin(g2 * i))
    return complex(np.cos(phi0), np.sin(phi0))


@nb.njit(**_JIT)
def _tab_phase(ahalf, i, j, k, dx, dy, dz, h):
    ang = h * (dx * ahalf[i, j, k, 0] + dy * ahalf[i, j, k, 1] + dz * ahalf[i, j, k, 2])
    return complex(np.cos(ang), np.sin(ang))


@nb.njit(**_JIT)
def _neumaier(vals):
    s = 0.0
    c = 0.0
    for v in vals:
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@nb.njit(**_JIT)
def _in_half_space(dx, dy, dz):
    if dx > 0:
        return True
    if dx < 0:
        return False
    if dy > 0:
        return True
    if dy < 0:
        return False
    return dz > 0


@nb.njit(parallel=True, **_JIT)
def form_sum(u, v, m1, m2, use_masks, table, kind, mat, off, cen, h, ahalf,
             r2cut, far_mode, half):
    """Ordered-pair sum over x != y with x in E1, y in E2 of
    Re[(P u(x) - u(y)) conj(P v(x) - v(y))] K(y - x).

    ``far_mode`` for |d|^2 > r2cut: 0 exact, 1 drop, 2 phase replaced by 1.
    Returns (total, far part).
    """
    n = u.shape[0]
    lo = 0 if half else -(n - 1)
    na = n - lo
    parts = np.zeros(na)
    comps = np.zeros(na)
    fparts = np.zeros(na)
    for a in nb.prange(na):
        dx = a + lo
        px = np.empty(n, np.complex128)
        py = np.empty(n, np.complex128)
        pz = np.empty(n, np.complex128)
        s = 0.0
        c = 0.0
        fs = 0.0
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                if dx == 0 and dy == 0 and dz == 0:
                    continue
                if half and not _in_half_space(dx, dy, dz):
                    continue
                w = table[abs(dx), abs(dy), abs(dz)]
                if w == 0.0:
                    continue
                r2 = dx * dx + dy * dy + dz * dz
                far = r2 > r2cut
                if far and far_mode == 1:
                    continue
                k_eff = kind
                if far and far_mode == 2:
                    k_eff = 0
                base = 1.0 + 0.0j
                if k_eff == 1:
                    base = _phase_rows(dx, dy, dz, mat, off, cen, h, n, px, py, pz)
                acc = 0.0
                for ix in range(max(0, -dx), min(n, n - dx)):
                    jx = ix + dx
                    for iy in range(max(0, -dy), min(n, n - dy)):
                        jy = iy + dy
                        pxy = base
                        if k_eff == 1:
                            pxy = base * px[ix] * py[iy]
                        for iz in range(max(0, -dz), min(n, n - dz)):
                            jz = iz + dz
                            if k_eff == 0:
                                ph = 1.0 + 0.0j
                            elif k_eff == 1:
                                ph = pxy * pz[iz]
                            else:
                                ph = _tab_phase(ahalf, ix + jx, iy + jy, iz + jz, dx, dy, dz, h)
                            if use_masks:
                                f = int(m1[ix, iy, iz]) * int(m2[jx, jy, jz])
                                if half:
                                    f += int(m1[jx, jy, jz]) * int(m2[ix, iy, iz])
                                if f == 0:
                                    continue
                            else:
                                f = 2 if half else 1
                            du = ph * u[ix, iy, iz] - u[jx, jy, jz]
                            dv = ph * v[ix, iy, iz] - v[jx, jy, jz]
                            acc += f * (du.real * dv.real + du.imag * dv.imag)
                term = w * acc
                t = s + term
                if abs(s) >= abs(term):
                    c += (s - t) + term
                else:
                    c += (term - t) + s
                s = t
                if far:
                    fs += term
        parts[a] = s
        comps[a] = c
        fparts[a] = fs
    return _neumaier(parts) + _neumaier(comps), _neumaier(fparts)


@nb.njit(**_JIT)
def apply_sum(u, table, kind, mat, off, cen, h, ahalf):
    """out(x) = sum_{y != x} K(y - x) (u(x) - conj(P) u(y)), P the pair phase of (x, y)."""
    n = u.shape[0]
    out = np.zeros((n, n, n), np.complex128)
    px = np.empty(n, np.complex128)
    py = np.empty(n, np.complex128)
    pz = np.empty(n, np.complex128)
    for dx in range(0, n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                if not _in_half_space(dx, dy, dz):
                    continue
                w = table[abs(dx), abs(dy), abs(dz)]
                if w == 0.0:
                    continue
                base = 1.0 + 0.0j
                if kind == 1:
                    base = _phase_rows(dx, dy, dz, mat, off, cen, h, n, px, py, pz)
                for ix in range(max(0, -dx), min(n, n - dx)):
                    jx = ix + dx
                    for iy in range(max(0, -dy), min(n, n - dy)):
                        jy = iy + dy
                        pxy = base
                        if kind == 1:
                            pxy = base * px[ix] * py[iy]
                        for iz in range(max(0, -dz), min(n, n - dz)):
                            jz = iz + dz
                            if kind == 0:
                                ph = 1.0 + 0.0j
                            elif kind == 1:
                                ph = pxy * pz[iz]
                            else:
                                ph = _tab_phase(ahalf, ix + jx, iy + jy, iz + jz, dx, dy, dz, h)
                            ux = u[ix, iy, iz]
                            uy = u[jx, jy, jz]
                            out[ix, iy, iz] += w * (ux - ph.conjugate() * uy)
                            out[jx, jy, jz] += w * (uy - ph * ux)
    return out


@nb.njit(**_JIT)
def density_sum(u, table, kind, mat, off, cen, h, ahalf):
    """mu(x) = sum_{y != x} K(y - x) |P u(x) - u(y)|^2 (weights as given)."""
    n = u.shape[0]
    out = np.zeros((n, n, n))
    px = np.empty(n, np.complex128)
    py = np.empty(n, np.complex128)
    pz = np.empty(n, np.complex128)
    for dx in range(0, n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                if not _in_half_space(dx, dy, dz):
                    continue
                w = table[abs(dx), abs(dy), abs(dz)]
                if w == 0.0:
                    continue
                base = 1.0 + 0.0j
                if kind == 1:
                    base = _phase_rows(dx, dy, dz, mat, off, cen, h, n, px, py, pz)
                for ix in range(max(0, -dx), min(n, n - dx)):
                    jx = ix + dx
                    for iy in range(max(0, -dy), min(n, n - dy)):
                        jy = iy + dy
                        pxy = base
                        if kind == 1:
                            pxy = base * px[ix] * py[iy]
                        for iz in range(max(0, -dz), min(n, n - dz)):
                            jz = iz + dz
                            if kind == 0:
                                ph = 1.0 + 0.0j
                            elif kind == 1:
                                ph = pxy * pz[iz]
                            else:
                                ph = _tab_phase(ahalf, ix + jx, iy + jy, iz + jz, dx, dy, dz, h)
                            d = ph * u[ix, iy, iz] - u[jx, jy, jz]
                            t = w * (d.real * d.real + d.imag * d.imag)
                            out[ix, iy, iz] += t
                            out[jx, jy, jz] += t
    return out


@nb.njit(**_JIT)
def pair_stats(u, table, kind, mat, off, cen, h, ahalf, threshold):
    """Single sweep over unordered pairs (x != y).

    Returns (sum of K*Upsilon, min Upsilon / (|u(x)||u(y)|), max relative diamagnetic
    violation, count of pairs with Upsilon > threshold, pair count). ``table`` only
    weights the Upsilon sum; all pairs are visited for the pointwise statistics.
    """
    n = u.shape[0]
    px = np.empty(n, np.complex128)
    py = np.empty(n, np.complex128)
    pz = np.empty(n, np.complex128)
    s = 0.0
    c = 0.0
    ups_min = np.inf
    viol = 0.0
    npos = 0
    npairs = 0
    for dx in range(0, n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                if not _in_half_space(dx, dy, dz):
                    continue
                w = table[abs(dx), abs(dy), abs(dz)]
                base = 1.0 + 0.0j
                if kind == 1:
                    base = _phase_rows(dx, dy, dz, mat, off, cen, h, n, px, py, pz)
                acc = 0.0
                for ix in range(max(0, -dx), min(n, n - dx)):
                    jx = ix + dx
                    for iy in range(max(0, -dy), min(n, n - dy)):
                        jy = iy + dy
                        pxy = base
                        if kind == 1:
                            pxy = base * px[ix] * py[iy]
                        for iz in range(max(0, -dz), min(n, n - dz)):
                            jz = iz + dz
                            if kind == 0:
                                ph = 1.0 + 0.0j
                            elif kind == 1:
                                ph = pxy * pz[iz]
                            else:
                                ph = _tab_phase(ahalf, ix + jx, iy + jy, iz + jz, dx, dy, dz, h)
                            ux = u[ix, iy, iz]
                            uy = u[jx, jy, jz]
                            ax = abs(ux)
                            ay = abs(uy)
                            z = ph * ux * uy.conjugate()
                            ups = 2.0 * (ax * ay - z.real)
                            acc += ups
                            npairs += 1
                            prod = ax * ay
                            if prod > 0.0:
                                r = ups / prod
                                if r < ups_min:
                                    ups_min = r
                            if ups > threshold:
                                npos += 1
                            scale = ax + ay
                            if scale > 0.0:
                                v = (abs(ax - ay) - abs(ph * ux - uy)) / scale
                                if v > viol:
                                    viol = v
                term = w * acc
                t = s + term
                if abs(s) >= abs(term):
                    c += (s - t) + term
                else:
                    c += (term - t) + s
                s = t
    if ups_min == np.inf:
        ups_min = 0.0
    return s + c, ups_min, viol, npos, npairs


@nb.njit(**_JIT)
def symmetric_sum(u, table, kind, mat, off, cen, h, ahalf):
    """out(x) = sum over half-space d of K(d) (2 u(x) - u_x(x + d) - u_x(x - d)),
    u_x(z) = exp(i (x - z) . A((x + z)/2)) u(z), zero outside the box."""
    n = u.shape[0]
    out = np.zeros((n, n, n), np.complex128)
    px = np.empty(n, np.complex128)
    py = np.empty(n, np.complex128)
    pz = np.empty(n, np.complex128)
    for dx in range(0, n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                if not _in_half_space(dx, dy, dz):
                    continue
                w = table[abs(dx), abs(dy), abs(dz)]
                if w == 0.0:
                    continue
                base = 1.0 + 0.0j
                if kind == 1:
                    base = _phase_rows(dx, dy, dz, mat, off, cen, h, n, px, py, pz)
                for ix in range(n):
                    for iy in range(n):
                        for iz in range(n):
                            acc = 2.0 * u[ix, iy, iz]
                            jx = ix + dx
                            jy = iy + dy
                            jz = iz + dz
                            if 0 <= jx < n and 0 <= jy < n and 0 <= jz < n:
                                # pair (x, x + d): u_x(x + d) = conj(P(x, x + d)) u(x + d)
                                if kind == 0:
                                    ph = 1.0 + 0.0j
                                elif kind == 1:
                                    ph = base * px[ix] * py[iy] * pz[iz]
                                else:
                                    ph = _tab_phase(ahalf, ix + jx, iy + jy, iz + jz, dx, dy, dz, h)
                                acc -= ph.conjugate() * u[jx, jy, jz]
                            kx = ix - dx
                            ky = iy - dy
                            kz = iz - dz
                            if 0 <= kx < n and 0 <= ky < n and 0 <= kz < n:
                                # pair (x - d, x): u_x(x - d) = P(x - d, x) u(x - d)
                                if kind == 0:
                                    ph = 1.0 + 0.0j
                                elif kind == 1:
                                    ph = base * px[kx] * py[ky] * pz[kz]
                                else:
                                    ph = _tab_phase(ahalf, ix + kx, iy + ky, iz + kz, dx, dy, dz, h)
                                acc -= ph * u[kx, ky, kz]
                            out[ix, iy, iz] += w * acc
    return out
