"""Cauchy-Green transform on the unit disk.

The disk is covered by a uniform Cartesian grid of ``N`` cells per diameter.
A cell is kept when its centre lies inside the disk; its weight is the exact
area of the square clipped to the disk, and the sliver area of discarded
boundary squares is handed to the nearest kept cell so that the weights sum
to ``pi``.

For ``zeta = t + i s`` the transform is

    P'f(z) = -(1/pi) iint f(zeta) / (zeta - z) dA(zeta),

evaluated with the splitting ``f = (f - f(z*)) + f(z*)`` at the nearest cell
``z*`` and the closed form ``P'1(z) = conj(z)``.  At cell centres the sum is a
discrete convolution and is evaluated with zero-padded FFTs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import functools

import numpy as np
from scipy import fft as sp_fft


def _S(u):
    """Antiderivative of ``sqrt(1 - u^2)``."""
    u = np.clip(u, -1.0, 1.0)
    return 0.5 * (u * np.sqrt(1 - u * u) + np.arcsin(u))


def _corner_area(x, y):
    """Area of ``{u <= x, v <= y}`` inside the unit disk."""
    X = min(max(x, -1.0), 1.0)
    if y >= 1.0:
        return 2 * (_S(X) - _S(-1.0))
    if y <= -1.0:
        return 0.0
    a = np.sqrt(1 - y * y)
    total = 0.0
    if y >= 0:
        # |u| > a: full chord 2 s(u); |u| <= a: y + s(u)
        lo = min(X, -a)
        total += 2 * (_S(lo) - _S(-1.0))
        if X > -a:
            m = min(X, a)
            total += y * (m + a) + _S(m) - _S(-a)
        if X > a:
            total += 2 * (_S(X) - _S(a))
    else:
        if X > -a:
            m = min(X, a)
            total += y * (m + a) + _S(m) - _S(-a)
    return float(total)


def clipped_area(x0, x1, y0, y1):
    """Exact area of the rectangle ``[x0, x1] x [y0, y1]`` inside the unit disk."""
    return (_corner_area(x1, y1) - _corner_area(x0, y1)
            - _corner_area(x1, y0) + _corner_area(x0, y0))


@dataclass(frozen=True)
class DiskGrid:
    """Cells of the unit disk.  ``inside`` masks an ``N x N`` array of centres."""

    N: int
    h: float
    x: np.ndarray
    inside: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, N):
        """Grid with ``N`` cells per diameter; cached, treat as read-only."""
        if N < 4:
            raise ValueError("need at least 4 cells per diameter")
        return _build_grid(cls, int(N))

    @classmethod
    def _construct(cls, N):
        if N < 4:
            raise ValueError("need at least 4 cells per diameter")
        h = 2.0 / N
        x = -1 + (np.arange(N) + 0.5) * h
        T, S = np.meshgrid(x, x, indexing="ij")
        inside = T * T + S * S < 1.0
        # squares touching the circle need clipping
        far = (np.abs(T) + h / 2) ** 2 + (np.abs(S) + h / 2) ** 2
        near = (np.maximum(np.abs(T) - h / 2, 0)) ** 2 + (np.maximum(np.abs(S) - h / 2, 0)) ** 2
        W = np.where(far <= 1.0, h * h, 0.0)
        cut = (far > 1.0) & (near < 1.0)
        for i, j in zip(*np.nonzero(cut)):
            W[i, j] = clipped_area(T[i, j] - h / 2, T[i, j] + h / 2,
                                   S[i, j] - h / 2, S[i, j] + h / 2)
        orphan = (~inside) & (W > 0)
        if orphan.any():
            ii, jj = np.nonzero(inside)
            for i, j in zip(*np.nonzero(orphan)):
                k = np.argmin((ii - i) ** 2 + (jj - j) ** 2)
                W[ii[k], jj[k]] += W[i, j]
                W[i, j] = 0.0
        W[~inside] = 0.0
        for a in (x, inside, W):
            a.setflags(write=False)
        return cls(N, h, x, inside, W)

    @property
    def zeta(self):
        T, S = np.meshgrid(self.x, self.x, indexing="ij")
        return T + 1j * S

    def nearest(self, z):
        """Index of the kept cell nearest to ``z``."""
        i = int(np.clip(np.floor((z.real + 1) / self.h), 0, self.N - 1))
        j = int(np.clip(np.floor((z.imag + 1) / self.h), 0, self.N - 1))
        if self.inside[i, j]:
            return i, j
        ii, jj = np.nonzero(self.inside)
        k = np.argmin(np.abs(self.x[ii] + 1j * self.x[jj] - z))
        return int(ii[k]), int(jj[k])

    def interior(self, radius=1.0):
        """Cells whose four neighbours are kept and whose centre has ``|zeta| < radius``."""
        m = self.inside.copy()
        core = np.zeros_like(m)
        core[1:-1, 1:-1] = (m[1:-1, 1:-1] & m[2:, 1:-1] & m[:-2, 1:-1]
                            & m[1:-1, 2:] & m[1:-1, :-2])
        return core & (np.abs(self.zeta) < radius)


@dataclass
class DiskField:
    """Complex ``n``-vector per cell, ``values`` of shape (N, N, n); NaN off the disk."""

    grid: DiskGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 2:
            v = v[..., None]
        self.values = v
        if not np.all(np.isfinite(v[self.grid.inside])):
            raise ValueError("disk field has non-finite values on the disk")

    @property
    def n(self):
        return self.values.shape[-1]

    @classmethod
    def from_function(cls, grid, f):
        """Sample ``f(zeta)`` (returning (..., n) or scalar) at kept centres."""
        z = grid.zeta
        v = np.asarray(f(z), dtype=complex)
        if v.ndim == 2:
            v = v[..., None]
        v = v.copy()
        v[~grid.inside] = np.nan
        return cls(grid, v)

    def __add__(self, other):
        return DiskField(self.grid, self.values + other.values)

    def scale(self, c):
        return DiskField(self.grid, c * self.values)

    def to_json(self):
        vals = self.values[self.grid.inside]
        return {"N": self.grid.N, "n": self.n,
                "values": [[[float(v.real), float(v.imag)] for v in row] for row in vals]}

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        grid = DiskGrid.build(int(obj["N"]))
        a = np.asarray(obj["values"], dtype=float)
        v = np.full((grid.N, grid.N, int(obj["n"])), np.nan, dtype=complex)
        v[grid.inside] = a[..., 0] + 1j * a[..., 1]
        return cls(grid, v)


# ---------------------------------------------------------------------------
# transforms

_SPECTRA = {}


@functools.lru_cache(maxsize=8)
def _build_grid(cls, N):
    return cls._construct(N)



def _kernel_spectrum(grid):
    """FFT of ``1/(zeta_j - zeta_i)`` on the offset lattice (zero at offset 0), cached per N."""
    N, h = grid.N, grid.h
    if N not in _SPECTRA:
        d = np.arange(-(N - 1), N) * h
        D = d[:, None] + 1j * d[None, :]
        K = np.zeros_like(D)
        nz = D != 0
        K[nz] = 1.0 / D[nz]
        L = sp_fft.next_fast_len(3 * N - 2)
        _SPECTRA[N] = (L, sp_fft.fft2(K[::-1, ::-1], s=(L, L)))
    return _SPECTRA[N]


def _conv(grid, a, spec=None):
    """``sum_j a_j / (zeta_j - zeta_i)`` over kept cells, for every centre ``i``.

    ``a`` has shape (N, N) or (N, N, c).
    """
    N = grid.N
    L, KF = _kernel_spectrum(grid) if spec is None else spec
    a = np.asarray(a, dtype=complex)
    if a.ndim == 2:
        return _conv(grid, a[..., None], (L, KF))[..., 0]
    AF = sp_fft.fft2(a, s=(L, L), axes=(0, 1))
    full = sp_fft.ifft2(AF * KF[..., None], axes=(0, 1))
    return full[N - 1:2 * N - 1, N - 1:2 * N - 1]


def cauchy_grid(f):
    """``P'f`` at every kept cell centre, as a :class:`DiskField`."""
    grid = f.grid
    w = grid.weights
    vals = np.where(grid.inside[..., None], f.values, 0.0)
    zb = np.conj(grid.zeta)[..., None]
    sw = _conv(grid, w)[..., None]
    s = _conv(grid, w[..., None] * vals)
    out = -(s - vals * sw) / np.pi + vals * zb
    out[~grid.inside] = np.nan
    return DiskField(grid, out)


def cauchy_raw(f, z):
    """``P'f(z)`` at a single point ``|z| <= 1`` by direct summation."""
    grid = f.grid
    z = complex(z)
    if abs(z) > 1 + 1e-12:
        raise ValueError("point outside the closed unit disk")
    i, j = grid.nearest(z)
    fs = f.values[i, j]
    m = grid.inside
    zeta = grid.zeta[m]
    w = grid.weights[m]
    vals = f.values[m]
    d = zeta - z
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(d != 0, 1.0 / d, 0.0)
    s = (w * k) @ (vals - fs)
    return -s / np.pi + fs * np.conj(z)


def cauchy_p(f, z=None):
    """``Pf = P'f - P'f(0)``; on the grid when ``z`` is None, else at ``z``."""
    at0 = cauchy_raw(f, 0.0)
    if z is None:
        g = cauchy_grid(f)
        return DiskField(g.grid, g.values - at0)
    if complex(z) == 0:
        return np.zeros(f.n, dtype=complex)
    return cauchy_raw(f, z) - at0


# ---------------------------------------------------------------------------
# differences

def _partial(v, mask, h, axis):
    """Second-order differences along ``axis``; one-sided where a neighbour is missing."""
    v = np.where(mask[..., None], v, 0.0)
    m = mask
    out = np.full(v.shape, np.nan, dtype=complex)

    def sh(a, k):
        return np.roll(a, -k, axis=axis)

    idx = np.arange(mask.shape[axis])
    shape = [1, 1]
    shape[axis] = -1
    idx = idx.reshape(shape)
    n = mask.shape[axis]

    def ok(k):
        valid = (idx + k >= 0) & (idx + k < n)
        return sh(m, k) & valid

    c = m & ok(1) & ok(-1)
    f2 = m & ok(1) & ok(2) & ~c
    b2 = m & ok(-1) & ok(-2) & ~c & ~f2
    f1 = m & ok(1) & ~c & ~f2 & ~b2
    b1 = m & ok(-1) & ~c & ~f2 & ~b2 & ~f1
    out[c] = ((sh(v, 1) - sh(v, -1)) / (2 * h))[c]
    out[f2] = ((-3 * v + 4 * sh(v, 1) - sh(v, 2)) / (2 * h))[f2]
    out[b2] = ((3 * v - 4 * sh(v, -1) + sh(v, -2)) / (2 * h))[b2]
    out[f1] = ((sh(v, 1) - v) / h)[f1]
    out[b1] = ((v - sh(v, -1)) / h)[b1]
    return out


def d_t(f):
    return _wrap(f, _partial(f.values, f.grid.inside, f.grid.h, 0))


def d_s(f):
    return _wrap(f, _partial(f.values, f.grid.inside, f.grid.h, 1))


def _wrap(f, v):
    out = DiskField.__new__(DiskField)
    out.grid = f.grid
    out.values = v
    return out


def dz(f):
    """``1/2 (d_t - i d_s) f`` with one-sided differences at the boundary ring."""
    return _wrap(f, 0.5 * (d_t(f).values - 1j * d_s(f).values))


def dzbar_all(f):
    """``1/2 (d_t + i d_s) f`` on every kept cell."""
    return _wrap(f, 0.5 * (d_t(f).values + 1j * d_s(f).values))


def dbar(f):
    """Central-difference ``dbar f`` on interior cells; NaN marks excluded cells."""
    grid = f.grid
    if grid.N < 16:
        raise ValueError("dbar needs N >= 16")
    v = dzbar_all(f).values
    v = v.copy()
    v[~grid.interior()] = np.nan
    return _wrap(f, v)


def sup_error(a, b, radius=0.8):
    """``max |a - b|`` over interior cells with ``|zeta| < radius``."""
    m = a.grid.interior(radius)
    return float(np.max(np.abs(a.values[m] - b.values[m])))


# ---------------------------------------------------------------------------
# Holder seminorm

def holder_seminorm(f, mu, seed=0, max_cells=1500):
    """Discrete ``sup |f(x) - f(y)| / |x - y|^mu`` over sampled pairs of cells.

    All pairs are used when the disk has at most ``max_cells`` cells; otherwise
    the boundary ring plus a seeded random subset of cells.
    """
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    grid = f.grid
    ii, jj = np.nonzero(grid.inside)
    if len(ii) < 2:
        raise ValueError("need at least two cells")
    if len(ii) > max_cells:
        ring = ~grid.interior() & grid.inside
        sel = set(np.flatnonzero(ring[ii, jj]).tolist())
        rng = np.random.default_rng(seed)
        extra = rng.choice(len(ii), size=max(0, max_cells - len(sel)), replace=False)
        sel = np.array(sorted(sel | set(extra.tolist())))
        ii, jj = ii[sel], jj[sel]
    z = grid.x[ii] + 1j * grid.x[jj]
    v = f.values[ii, jj]
    best = 0.0
    for a in range(0, len(z), 256):
        dzs = np.abs(z[a:a + 256, None] - z[None, :])
        dv = np.linalg.norm(v[a:a + 256, None, :] - v[None, :, :], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(dzs > 0, dv / dzs ** mu, 0.0)
        best = max(best, float(r.max()))
    return best
