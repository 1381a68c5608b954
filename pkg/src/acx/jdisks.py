"""J-holomorphic disks by Picard iteration, cylinder families and J-flat fields.

A map ``gamma`` from the unit disk (``zeta = t + i s``) into C^n is
J-holomorphic when ``d_s gamma = J(gamma) d_t gamma``.  With
``q_J = (J_0 + J)^{-1} (J_0 - J)`` this is

    dbar gamma = q_J(gamma) d_z gamma,

and ``gamma`` solves the fixed-point problem ``gamma = H + P(q_J(gamma) d_z gamma)``
for the seed ``H(zeta) = x + rho zeta v``, ``P`` the normalised Cauchy-Green
transform.  Since ``P`` vanishes at 0, ``gamma(0) = x``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from . import cauchy_green as cg
from .acstruct import DomainError, standard_matrix, to_complex, to_real

RING_CELLS = 3


class RadiusTooLarge(RuntimeError):
    """Picard iteration failed to contract; the caller should shrink the radius."""


class NotConverged(RuntimeError):
    """Picard iteration stopped before reaching the residual tolerance."""


def report_mask(grid, ring=RING_CELLS):
    """Interior cells outside the boundary ring ``|zeta| > 1 - ring h``."""
    return grid.interior(1.0 - ring * grid.h)


def _field(grid, vals):
    v = np.where(grid.inside[..., None], vals, np.nan)
    return cg.DiskField(grid, v)


def _q_apply(J, gam, vec):
    """Complex components of ``q_J(gam) vec`` for arrays of shape (m, n)."""
    q = J.q(to_real(gam))
    return to_complex(np.einsum("pij,pj->pi", q, to_real(vec)))


def equation_defect(J, gam_field):
    """``dbar gamma - q_J(gamma) d_z gamma`` on interior cells (NaN elsewhere)."""
    grid = gam_field.grid
    db = cg.dbar(gam_field).values
    d = cg.dz(gam_field).values
    m = grid.interior()
    out = np.full(db.shape, np.nan, dtype=complex)
    out[m] = db[m] - _q_apply(J, gam_field.values[m], d[m])
    return out


@dataclass
class JHolDisk:
    """Sampled J-holomorphic disk ``gamma(zeta)`` on the unit disk.

    ``samples`` holds complex components of ``gamma`` at cell centres; ``rhs``
    the field ``q_J(gamma) d_z gamma`` of the last iteration, so that
    ``gamma = H + P(rhs)``.
    """

    center: np.ndarray
    direction: np.ndarray
    radius: float
    samples: cg.DiskField
    rhs: cg.DiskField
    residual: float
    iterations: int
    diffs: list = field(default_factory=list)
    offset: Optional[np.ndarray] = None
    halvings: int = 0

    @property
    def grid(self):
        return self.samples.grid

    @property
    def n(self):
        return self.samples.n

    def seed(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        x = to_complex(self.center)
        if self.offset is not None:
            x = x + self.offset
        return x + self.radius * zeta[..., None] * to_complex(self.direction)

    def gamma0(self):
        """``gamma(0) = H(0) + P(rhs)(0)``; the transform vanishes at 0."""
        return to_real(self.seed(0.0) + cg.cauchy_p(self.rhs, 0.0))

    def decay_ratios(self, floor=1e-13):
        d = [x for x in self.diffs if x > floor]
        return [b / a for a, b in zip(d[:-1], d[1:])]

    def evaluate(self, zeta):
        """``gamma(zeta)`` off the grid by local bicubic Lagrange interpolation.

        Points whose 4x4 stencil leaves the disk get NaN.
        """
        return interpolate(self.samples, zeta)

    def tangents(self):
        """``(d_t gamma, d_s gamma)`` as real vectors on every kept cell."""
        return (to_real(cg.d_t(self.samples).values),
                to_real(cg.d_s(self.samples).values))


def _lagrange(u):
    return np.stack([-u * (u - 1) * (u - 2) / 6, (u + 1) * (u - 1) * (u - 2) / 2,
                     -(u + 1) * u * (u - 2) / 2, (u + 1) * u * (u - 1) / 6], axis=-1)


def interpolate(f, zeta):
    """Bicubic Lagrange interpolation of a :class:`DiskField` at points ``zeta``."""
    grid = f.grid
    zeta = np.asarray(zeta, dtype=complex)
    t, s = zeta.real.ravel(), zeta.imag.ravel()
    ft = (t + 1) / grid.h - 0.5
    fs = (s + 1) / grid.h - 0.5
    i0 = np.floor(ft).astype(int)
    j0 = np.floor(fs).astype(int)
    wt, ws = _lagrange(ft - i0), _lagrange(fs - j0)
    out = np.zeros(t.shape + (f.n,), dtype=complex)
    N = grid.N
    for a in range(4):
        ii = np.clip(i0 - 1 + a, 0, N - 1)
        bad_i = (i0 - 1 + a < 0) | (i0 - 1 + a >= N)
        for b in range(4):
            jj = np.clip(j0 - 1 + b, 0, N - 1)
            bad = bad_i | (j0 - 1 + b < 0) | (j0 - 1 + b >= N) | ~grid.inside[ii, jj]
            v = f.values[ii, jj]
            v = np.where(bad[:, None], np.nan, v)
            out += (wt[:, a] * ws[:, b])[:, None] * v
    return out.reshape(zeta.shape + (f.n,))


def q_bound(J, x, reach, samples=256, seed=0):
    """Largest ``|q_J|_2`` over seeded points of the ball of radius ``reach`` about ``x``."""
    rng = np.random.default_rng(seed)
    m = len(x)
    d = rng.standard_normal((samples, m))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = reach * rng.random(samples) ** (1.0 / m)
    pts = np.vstack([x, x + r[:, None] * d])
    try:
        q = J.q(pts)
    except DomainError:
        return np.inf
    return float(np.max(np.linalg.norm(q, ord=2, axis=(1, 2))))


def _picard(J, grid, H, gam, tol, max_iter):
    m = grid.inside
    mask = report_mask(grid)
    diffs = []
    grew = 0
    res = np.inf
    rhs = None
    for it in range(1, max_iter + 1):
        G = _field(grid, gam)
        d = cg.dz(G).values
        r = np.full_like(gam, np.nan)
        r[m] = _q_apply(J, gam[m], d[m])
        rhs = cg.DiskField(grid, r)
        new = H + cg.cauchy_p(rhs).values
        new[~m] = np.nan
        diffs.append(float(np.max(np.abs(new[m] - gam[m]))))
        gam = new
        if diffs[-1] <= 1e-3 * tol or diffs[-1] <= 1e-14 or it == max_iter:
            defect = equation_defect(J, _field(grid, gam))
            res = float(np.max(np.abs(defect[mask])))
        if len(diffs) >= 2 and diffs[-1] > diffs[-2] and diffs[-1] > 1e-13:
            grew += 1
            if grew >= 2:
                raise RadiusTooLarge(f"iterate distance grew twice (iteration {it})")
        else:
            grew = 0
        if res <= tol and (diffs[-1] <= 1e-3 * tol or diffs[-1] <= 1e-14):
            return gam, rhs, res, it, diffs
    raise NotConverged(f"no convergence after {max_iter} iterations: residual {res:.3e}, "
                       f"last step {diffs[-1]:.3e} (tolerance {tol:.1e})")


def solve_disk(J, x, v, rho, tol=1e-6, max_iter=50, N=128, max_halvings=6,
               offset=None, init=None):
    """Solve for the J-holomorphic disk through ``x`` with ``d_t gamma(0) ~ rho v``.

    ``J(x)`` must equal ``J_0`` (see :func:`acx.acstruct.normalize_chart`).  On
    non-contraction the radius is halved, at most ``max_halvings`` times.
    ``offset`` shifts the seed by a constant complex vector (cylinder slices);
    ``init`` is an optional starting iterate on the grid.
    """
    n = J.n
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if offset is None and np.max(np.abs(J(x) - standard_matrix(n))) > 1e-10:
        raise ValueError("J(x) differs from J_0; normalise the chart first")
    grid = cg.DiskGrid.build(N)
    zeta = grid.zeta
    for halving in range(max_halvings + 1):
        base = to_complex(x) + (0 if offset is None else offset)
        reach = rho * np.linalg.norm(v) * 1.25 + np.linalg.norm(base - to_complex(x))
        if q_bound(J, x, reach) < 0.5:
            H = base + rho * zeta[..., None] * to_complex(v)
            H[~grid.inside] = np.nan
            gam = H.copy() if init is None or halving else np.array(init, dtype=complex)
            try:
                gam, rhs, res, it, diffs = _picard(J, grid, H, gam, tol, max_iter)
                return JHolDisk(x.copy(), v.copy(), float(rho), _field(grid, gam), rhs,
                                res, it, diffs, offset, halving)
            except RadiusTooLarge:
                pass
        rho *= 0.5
    raise RadiusTooLarge(f"no contraction after {max_halvings} halvings")


def residual(J, disk, N=None):
    """Sup of ``|dbar gamma - q_J(gamma) d_z gamma|`` outside the boundary ring.

    With ``N`` different from the disk's own resolution the samples are
    resampled by bicubic splines onto a fresh grid first.
    """
    f = disk.samples
    if N is not None and N != f.grid.N:
        grid = cg.DiskGrid.build(N)
        vals = disk.evaluate(grid.zeta)
        # cells whose stencil leaves the disk lie in the excluded ring
        vals = np.where(np.isfinite(vals), vals, 0.0)
        f = _field(grid, vals)
    mask = report_mask(f.grid)
    if N is not None and N != disk.grid.N:
        # keep the coarse boundary ring out as well
        mask &= np.abs(f.grid.zeta) < 1.0 - RING_CELLS * disk.grid.h
    pts = to_real(f.values[f.grid.inside])
    if np.isfinite(J.radius):
        out = np.linalg.norm(pts, axis=-1) >= J.radius
        if out.any():
            raise DomainError(f"{int(out.sum())} cells leave the patch")
    e = np.abs(equation_defect(J, f)[mask])
    return float(np.max(e[np.isfinite(e)]))


def holomorphy_defect(J, disk):
    """Independent check: sup ``|d_s gamma - J(gamma) d_t gamma|`` outside the ring."""
    gt, gs = disk.tangents()
    mask = report_mask(disk.grid)
    pts = to_real(disk.samples.values[mask])
    Jm = J(pts)
    d = gs[mask] - np.einsum("pij,pj->pi", Jm, gt[mask])
    return float(np.max(np.abs(d)))


# ---------------------------------------------------------------------------
# cylinders and J-flat fields

@dataclass
class CylinderFamily:
    """Slices ``sigma(., z2)`` over a square grid of transverse parameters.

    ``nodes`` has shape (S, n-1) (complex), ``slices`` the matching disks and
    ``shape`` the grid shape ``(m,) * 2(n-1)`` in real transverse coordinates.
    """

    base: JHolDisk
    frame: np.ndarray
    rho2: float
    m: int
    nodes: np.ndarray
    slices: list
    shape: tuple
    injectivity: float = np.nan

    @property
    def residuals(self):
        return [d.residual for d in self.slices]

    def sigma(self):
        """Samples with shape ``shape + (N, N, n)``."""
        return np.stack([d.samples.values for d in self.slices]).reshape(
            self.shape + self.slices[0].samples.values.shape)


def _complex_independent(vectors, tol=1e-8):
    M = np.array([to_complex(v) for v in vectors]).T
    s = np.linalg.svd(M, compute_uv=False)
    return s[-1] > tol * s[0]


def solve_cylinder(J, base, frame, rho2, m, tol=1e-6, max_iter=50):
    """Family of disks with seeds ``H(z1) + sum_j z2_j xi_j`` over ``|Re|, |Im| <= rho2``."""
    n = J.n
    frame = np.atleast_2d(np.asarray(frame, dtype=float)).reshape(n - 1, 2 * n)
    if n > 1 and not _complex_independent([base.direction] + list(frame)):
        raise ValueError("transverse frame does not complete the disk direction to a complex basis")
    axis = np.linspace(-rho2, rho2, m)
    shape = (m,) * (2 * (n - 1))
    fc = np.array([to_complex(f) for f in frame]) if n > 1 else np.zeros((0, n))
    nodes, slices, failed = [], [], []
    for idx in product(range(m), repeat=2 * (n - 1)):
        r = axis[list(idx)]
        z2 = r[0::2] + 1j * r[1::2]
        nodes.append(z2)
        if not np.any(z2):
            slices.append(base)
            continue
        off = z2 @ fc
        init = base.samples.values + off
        try:
            d = solve_disk(J, base.center, base.direction, base.radius, tol=tol,
                           max_iter=max_iter, N=base.grid.N, max_halvings=0,
                           offset=off, init=init)
        except (RadiusTooLarge, NotConverged) as exc:
            failed.append((tuple(idx), str(exc)))
            continue
        slices.append(d)
    if failed:
        raise NotConverged(f"{len(failed)} slices failed, first at node {failed[0][0]}: "
                           f"{failed[0][1]}")
    fam = CylinderFamily(base, frame, float(rho2), m, np.array(nodes), slices, shape)
    fam.injectivity = injectivity_ratio(fam)
    return fam


def injectivity_ratio(fam, per_slice=9, seed=0):
    """``min |sigma(a) - sigma(b)| / |a - b|`` over sampled parameter pairs."""
    rng = np.random.default_rng(seed)
    grid = fam.base.grid
    ii, jj = np.nonzero(report_mask(grid))
    pick = rng.choice(len(ii), size=min(per_slice, len(ii)), replace=False)
    P, X = [], []
    for node, d in zip(fam.nodes, fam.slices):
        for k in pick:
            zeta = grid.x[ii[k]] + 1j * grid.x[jj[k]]
            P.append(np.concatenate([[zeta.real, zeta.imag], to_real(node)]))
            X.append(to_real(d.samples.values[ii[k], jj[k]]))
    P, X = np.array(P), np.array(X)
    dp = np.linalg.norm(P[:, None] - P[None], axis=-1)
    dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
    off = dp > 0
    return float(np.min(dx[off] / dp[off]))


def _diff(a, h, axis):
    """Second-order differences along ``axis`` (one-sided at the ends)."""
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    if a.shape[0] == 1:
        out[:] = 0.0
    elif a.shape[0] == 2:
        out[:] = (a[1] - a[0]) / h
    else:
        out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
        out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
        out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


@dataclass
class JFlatField:
    """Field ``xi = (d_t sigma) o sigma^{-1}`` sampled at ``points``."""

    points: np.ndarray
    vectors: np.ndarray
    defect: float
    defect_bracket: float
    jacobian_cond: float


def _grid_partials(arr, grid, k):
    """``(d_t, d_s)`` of real arrays shaped ``lead + (N, N, c)`` with ``len(lead) = k``."""
    lead, tail = arr.shape[:k], arr.shape[k + 2:]
    N = grid.N
    flat = np.moveaxis(arr.reshape((-1, N, N) + tail), 0, 2).reshape(N, N, -1)
    out = []
    for axis in (0, 1):
        d = cg._partial(flat.astype(complex), grid.inside, grid.h, axis).real
        d = np.moveaxis(d.reshape((N, N, -1) + tail), 2, 0).reshape(arr.shape)
        out.append(d)
    return out


def _mv(A, x):
    return np.einsum("...ij,...j->...i", A, x)


def j_flat_field(J, fam, kappa_max=1e8):
    """Flatness defect ``|[xi, J xi]|`` of the field generated by a cylinder family.

    Two routes are reported.  ``defect`` pulls ``J xi`` back to the parameter
    domain, ``Y = dsigma^{-1} J d_t sigma``, where ``[xi, J xi] = dsigma d_t Y``.
    ``defect_bracket`` evaluates ``(D_xi J) xi + J Dxi xi - Dxi J xi`` with
    ``Dxi = d(d_t sigma) dsigma^{-1}`` and the structure's own derivative.
    """
    n = J.n
    grid = fam.base.grid
    k = len(fam.shape)
    step = 2 * fam.rho2 / (fam.m - 1) if k else 1.0
    S = to_real(fam.sigma())  # shape + (N, N, 2n)
    St, Ss = _grid_partials(S, grid, k)
    D = np.stack([St, Ss] + [_diff(S, step, a) for a in range(k)], axis=-1)
    ok = grid.inside
    mask = report_mask(grid)
    cond = np.linalg.cond(D[..., mask, :, :].reshape(-1, 2 * n, 2 * n))
    if np.max(cond) > kappa_max:
        raise np.linalg.LinAlgError(f"Jacobian of sigma near singular at sample {int(np.argmax(cond))}")
    # pullback route
    Jok = J(S[..., ok, :].reshape(-1, 2 * n)).reshape(S[..., ok, :].shape + (2 * n,))
    Y = np.zeros(S.shape)
    Y[..., ok, :] = np.linalg.solve(D[..., ok, :, :], _mv(Jok, St[..., ok, :])[..., None])[..., 0]
    Yt, _ = _grid_partials(Y, grid, k)
    br1 = _mv(D[..., mask, :, :], Yt[..., mask, :])
    # bracket route
    Stt, Sts = _grid_partials(St, grid, k)
    dSt = np.stack([Stt, Sts] + [_diff(St, step, a) for a in range(k)], axis=-1)[..., mask, :, :]
    Dm = D[..., mask, :, :]
    Dxi = np.swapaxes(np.linalg.solve(np.swapaxes(Dm, -1, -2), np.swapaxes(dSt, -1, -2)), -1, -2)
    pts = S[..., mask, :].reshape(-1, 2 * n)
    xi = St[..., mask, :].reshape(-1, 2 * n)
    Dxi = Dxi.reshape(-1, 2 * n, 2 * n)
    Jm = J(pts)
    dJ = J.d(pts)
    br2 = (np.einsum("pa,paij,pj->pi", xi, dJ, xi) + _mv(Jm, _mv(Dxi, xi)) - _mv(Dxi, _mv(Jm, xi)))
    return JFlatField(pts, xi, float(np.max(np.linalg.norm(br1, axis=-1))),
                      float(np.max(np.linalg.norm(br2, axis=-1))), float(np.max(cond)))


def constant_field_defect(J, xi, points, h=None):
    """``|[xi, J xi]|`` for a constant field: ``(D_xi J) xi`` at each point.

    With ``h`` the derivative of ``J`` is a Richardson-extrapolated difference.
    """
    from .acstruct import richardson_derivative
    xi = np.asarray(xi, dtype=float)
    pts = np.atleast_2d(points)
    out = []
    for p in pts:
        dJ = J.d(p) if h is None else richardson_derivative(J, p, h)
        out.append(np.linalg.norm(np.einsum("a,aij,j->i", xi, dJ, xi)))
    return float(np.max(out))


# ---------------------------------------------------------------------------
# dumps

def dump_disk(disk, path):
    """Write a JSON header line followed by the complex128 samples on kept cells."""
    vals = np.ascontiguousarray(disk.samples.values[disk.grid.inside], dtype="<c16")
    rhs = np.ascontiguousarray(disk.rhs.values[disk.grid.inside], dtype="<c16")
    header = {"format": "acx-disk", "version": 1, "N": disk.grid.N, "n": disk.n,
              "center": [float(v) for v in disk.center],
              "direction": [float(v) for v in disk.direction],
              "radius": float(disk.radius), "residual": float(disk.residual),
              "iterations": int(disk.iterations), "count": int(vals.shape[0]),
              "offset": None if disk.offset is None else [[float(v.real), float(v.imag)]
                                                          for v in disk.offset],
              "blocks": ["samples", "rhs"], "dtype": "<c16"}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(vals.tobytes())
        fh.write(rhs.tobytes())


def load_disk(path):
    """Inverse of :func:`dump_disk`."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != "acx-disk":
            raise ValueError("not a disk dump")
        raw = np.frombuffer(fh.read(), dtype=header["dtype"])
    grid = cg.DiskGrid.build(header["N"])
    n, m = header["n"], header["count"]
    blocks = raw.reshape(2, m, n)
    fields = []
    for b in blocks:
        v = np.full((grid.N, grid.N, n), np.nan, dtype=complex)
        v[grid.inside] = b
        fields.append(cg.DiskField(grid, v))
    off = header["offset"]
    return JHolDisk(np.array(header["center"]), np.array(header["direction"]), header["radius"],
                    fields[0], fields[1], header["residual"], header["iterations"],
                    offset=None if off is None else np.array([a + 1j * b for a, b in off]))
