"""Almost complex structures on a coordinate patch of R^{2n}.

Real coordinates are interleaved ``(x_1, y_1, ..., x_n, y_n)`` with complex
coordinates ``z_k = x_k + i y_k``.  The standard structure ``J_0`` maps
``d/dx_k`` to ``d/dy_k``.  A real tangent vector ``v`` corresponds to the complex
vector ``v_k = v_{x_k} + i v_{y_k}``.

The complex split of an endomorphism ``J`` is the pair ``(A, B)`` defined by
``J(d/dz_l) = sum_k A_{kl} d/dz_k + B_{kl} d/dzbar_k``.  For ``J_0`` it is
``(iI, 0)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

import numpy as np

from ._poly import MatPoly


class DomainError(ValueError):
    """Raised when a point lies outside the patch of a structure."""


class NotAComplexStructure(ValueError):
    """Raised when J^2 + I exceeds the tolerance."""


class InvalidJet(ValueError):
    """Raised when jet coefficients violate symmetry or vanishing rules."""


# ---------------------------------------------------------------------------
# coordinates

def to_complex(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0::2] + 1j * p[..., 1::2]


def to_real(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def standard_matrix(n):
    """Matrix of J_0 in interleaved real coordinates."""
    J = np.zeros((2 * n, 2 * n))
    for k in range(n):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


def wirtinger_basis(n):
    """Columns d/dz_1..d/dz_n, d/dzbar_1..d/dzbar_n in real coordinates."""
    P = np.zeros((2 * n, 2 * n), dtype=complex)
    for k in range(n):
        P[2 * k, k] = 0.5
        P[2 * k + 1, k] = -0.5j
        P[2 * k, n + k] = 0.5
        P[2 * k + 1, n + k] = 0.5j
    return P


def wirtinger_cobasis(n):
    """Rows dz_1..dz_n, dzbar_1..dzbar_n; the inverse of :func:`wirtinger_basis`."""
    Q = np.zeros((2 * n, 2 * n), dtype=complex)
    for k in range(n):
        Q[k, 2 * k] = 1.0
        Q[k, 2 * k + 1] = 1.0j
        Q[n + k, 2 * k] = 1.0
        Q[n + k, 2 * k + 1] = -1.0j
    return Q


def split(J):
    """Complex split ``(A, B)`` of real endomorphisms ``J`` of shape (..., 2n, 2n)."""
    J = np.asarray(J, dtype=float)
    n = J.shape[-1] // 2
    M = wirtinger_cobasis(n) @ J @ wirtinger_basis(n)
    return M[..., :n, :n], M[..., n:, :n]


def merge(A, B):
    """Real endomorphism with complex split ``(A, B)``.

    Block (k, l) is the real matrix of ``w -> A_kl w + conj(B_kl) conj(w)``.
    """
    A = np.asarray(A, dtype=complex)
    B = np.conj(np.asarray(B, dtype=complex))
    n = A.shape[-1]
    out = np.empty(A.shape[:-2] + (n, 2, n, 2))
    out[..., :, 0, :, 0] = A.real + B.real
    out[..., :, 0, :, 1] = B.imag - A.imag
    out[..., :, 1, :, 0] = A.imag + B.imag
    out[..., :, 1, :, 1] = A.real - B.real
    return out.reshape(A.shape[:-2] + (2 * n, 2 * n))


def q_from_J(J, kappa_max=1e8):
    """Return ``q_J = (J_0 + J)^{-1} (J_0 - J)``.

    Raises ``numpy.linalg.LinAlgError`` when ``J_0 + J`` is singular or its
    1-norm condition number exceeds ``kappa_max`` (structure too far from J_0).
    """
    J = np.asarray(J, dtype=float)
    n = J.shape[-1] // 2
    J0 = standard_matrix(n)
    S = J0 + J
    try:
        Si = np.linalg.inv(S)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("J_0 + J is singular: structure too far from standard") from None
    cond = np.max(np.abs(S).sum(-2), axis=-1) * np.max(np.abs(Si).sum(-2), axis=-1)
    if not np.all(np.isfinite(cond)) or np.any(cond > kappa_max):
        raise np.linalg.LinAlgError("J_0 + J is ill-conditioned: structure too far from standard")
    return Si @ (J0 - J)


# ---------------------------------------------------------------------------
# structure fields

@dataclass
class AlmostComplexStructure:
    """A field of endomorphisms ``J(p)`` on the ball ``|p| < radius``.

    ``matrix`` maps points of shape (..., 2n) to matrices (..., 2n, 2n).
    ``derivative``, when given, returns ``dJ[..., a, i, j] = d_a J_ij``;
    otherwise central differences with step ``h`` are used.
    """

    n: int
    matrix: Callable
    derivative: Optional[Callable] = None
    radius: float = np.inf
    h: float = 1e-5
    name: str = ""
    tol: float = 1e-9

    def _check(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != 2 * self.n:
            raise ValueError(f"expected points in R^{2 * self.n}, got shape {p.shape}")
        if np.isfinite(self.radius) and np.any(np.linalg.norm(p, axis=-1) >= self.radius):
            raise DomainError(f"point outside the patch of radius {self.radius}")
        return p

    def __call__(self, p):
        return self.matrix(self._check(p))

    def d(self, p, h=None):
        p = self._check(p)
        if self.derivative is not None and h is None:
            return self.derivative(p)
        return fd_derivative(self.matrix, p, self.h if h is None else h)

    def split(self, p):
        return split(self(p))

    def q(self, p):
        return q_from_J(self(p))


def fd_derivative(fn, p, h):
    """Central-difference partials ``out[..., a, ...] = d_a fn(p)``."""
    p = np.asarray(p, dtype=float)
    m = p.shape[-1]
    cols = []
    for a in range(m):
        e = np.zeros(m)
        e[a] = h
        cols.append((fn(p + e) - fn(p - e)) / (2 * h))
    return np.stack(cols, axis=p.ndim - 1)


def richardson_derivative(fn, p, h):
    """Fourth-order Richardson combination of central differences."""
    d1 = fd_derivative(fn, p, h)
    d2 = fd_derivative(fn, p, h / 2)
    return (4 * d2 - d1) / 3


def standard(n):
    """The standard structure J_0 on C^n."""
    J0 = standard_matrix(n)

    def mat(p):
        return np.broadcast_to(J0, p.shape[:-1] + J0.shape).copy()

    def der(p):
        return np.zeros(p.shape[:-1] + (2 * n, 2 * n, 2 * n))

    return AlmostComplexStructure(n, mat, der, name="standard")


def pullback_standard(phi, dphi, d2phi, n, radius=np.inf):
    """Integrable structure ``dphi^{-1} J_0 dphi`` pulled back by a diffeomorphism.

    ``dphi(p)`` is the Jacobian (..., 2n, 2n) and ``d2phi(p)[..., a, i, j]`` its
    partial along coordinate ``a``.
    """
    J0 = standard_matrix(n)

    def mat(p):
        D = dphi(p)
        return np.linalg.solve(D, J0 @ D)

    def der(p):
        D = dphi(p)
        Di = np.linalg.inv(D)
        J = Di @ J0 @ D
        dD = d2phi(p)
        # d(D^{-1} J0 D) = -D^{-1} dD J + D^{-1} J0 dD
        Di_ = Di[..., None, :, :]
        return -Di_ @ dD @ J[..., None, :, :] + Di_ @ J0 @ dD

    return AlmostComplexStructure(n, mat, der, radius=radius, name="pullback")


def validate_acs(J, points, tol=1e-9):
    """Return ``max |J^2 + I|`` over ``points``; raise if it exceeds ``tol``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    M = J(points)
    I = np.eye(M.shape[-1])
    res = float(np.max(np.abs(M @ M + I)))
    if res > tol:
        raise NotAComplexStructure(f"|J^2 + I| = {res:.3e} exceeds {tol:.1e}")
    return res


# ---------------------------------------------------------------------------
# jets in normal coordinates

_KINDS = {
    # name: (number of holomorphic slots, number of antiholomorphic slots)
    "B1": (1, 0),
    "B2": (2, 0),
    "B2bar": (1, 1),
    "B3": (3, 0),
    "B3bar1": (2, 1),
    "B3bar2": (1, 2),
}


@dataclass
class JetACS:
    """Order-3 normal-form jet of an almost complex structure at a point.

    Coefficient arrays are indexed ``[slot indices..., k, l]`` with zero-based
    indices.  ``B1[r]`` is ``B^r``; ``B2[r, s]`` is ``B^{r,s}``; ``B2bar[r, s]``
    is ``B^{r,sbar}``; ``B3[r, s, t]``, ``B3bar1[r, s, t]`` (``B^{r,s,tbar}``) and
    ``B3bar2[r, s, t]`` (``B^{r,sbar,tbar}``).
    """

    n: int
    B1: np.ndarray = None
    B2: np.ndarray = None
    B2bar: np.ndarray = None
    B3: np.ndarray = None
    B3bar1: np.ndarray = None
    B3bar2: np.ndarray = None
    _polys: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.n
        for name, (h, a) in _KINDS.items():
            arr = getattr(self, name)
            shape = (n,) * (h + a) + (n, n)
            if arr is None:
                arr = np.zeros(shape, dtype=complex)
            arr = np.asarray(arr, dtype=complex)
            if arr.shape != shape:
                raise InvalidJet(f"{name} must have shape {shape}, got {arr.shape}")
            setattr(self, name, arr)

    @classmethod
    def zero(cls, n):
        return cls(n)

    def coefficients(self):
        return {name: getattr(self, name) for name in _KINDS}

    def is_zero(self):
        return all(not np.any(c) for c in self.coefficients().values())

    # -- invariants --------------------------------------------------------
    def check(self, tol=1e-12):
        """Raise :class:`InvalidJet` naming the first violated rule."""
        n = self.n
        sym_pairs = {
            "B2": [(0, 1)],
            "B3": [(0, 1), (1, 2), (0, 2)],
            "B3bar1": [(0, 1)],
            "B3bar2": [(1, 2)],
        }
        for name, pairs in sym_pairs.items():
            arr = getattr(self, name)
            for i, j in pairs:
                d = np.max(np.abs(arr - np.swapaxes(arr, i, j)))
                if d > tol:
                    raise InvalidJet(f"{name} is not symmetric in slots ({i + 1},{j + 1}); "
                                     f"defect {d:.2e}")
        # slots that must all be <= l (one-based) for the entry to vanish
        rules = {
            "B1": (0,),
            "B2": (0, 1),
            "B2bar": (0,),
            "B3": (0, 1, 2),
            "B3bar1": (0, 1),
            "B3bar2": (0,),
        }
        for name, slots in rules.items():
            arr = getattr(self, name)
            nslot = arr.ndim - 2
            for idx in product(range(n), repeat=nslot):
                for k in range(n):
                    for l in range(n):
                        if all(idx[s] <= l for s in slots) and abs(arr[idx + (k, l)]) > tol:
                            one = ",".join(str(i + 1) for i in idx)
                            raise InvalidJet(
                                f"{name}[{one}]_({k + 1},{l + 1}) = {arr[idx + (k, l)]} "
                                f"must vanish")
        return True

    # -- serialization -----------------------------------------------------
    def to_json(self):
        out = {"n": self.n}
        out["B1"] = [_mat_to_json(self.B1[r]) for r in range(self.n)]
        for name in ("B2", "B2bar", "B3", "B3bar1", "B3bar2"):
            arr = getattr(self, name)
            d = {}
            for idx in product(range(self.n), repeat=arr.ndim - 2):
                if np.any(arr[idx]):
                    key = "(" + ",".join(str(i + 1) for i in idx) + ")"
                    d[key] = _mat_to_json(arr[idx])
            out[name] = d
        return out

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        kw = {}
        if "B1" in obj:
            kw["B1"] = np.array([_mat_from_json(m) for m in obj["B1"]]).reshape(n, n, n)
        for name in ("B2", "B2bar", "B3", "B3bar1", "B3bar2"):
            h, a = _KINDS[name]
            arr = np.zeros((n,) * (h + a) + (n, n), dtype=complex)
            for key, m in obj.get(name, {}).items():
                idx = tuple(int(s) - 1 for s in key.strip("()").split(","))
                if len(idx) != h + a or any(i < 0 or i >= n for i in idx):
                    raise InvalidJet(f"bad index {key} for {name}")
                arr[idx] = _mat_from_json(m)
            kw[name] = arr
        unknown = set(obj) - {"n"} - set(_KINDS)
        if unknown:
            raise InvalidJet(f"unknown jet keys {sorted(unknown)}")
        jet = cls(n, **kw)
        jet.check()
        return jet

    # -- polynomials ---------------------------------------------------------
    def polynomials(self):
        """Return the truncated polynomials ``(A, B)`` as :class:`MatPoly`."""
        if self._polys is None:
            self._polys = _jet_polynomials(self)
        return self._polys


def _mat_to_json(m):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]


def _mat_from_json(m):
    a = np.asarray(m, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _jet_polynomials(jet):
    n = jet.n
    B = MatPoly(n, (n, n))
    for r in range(n):
        B.add_term(jet.B1[r], (r,), ())
    for r, s in product(range(n), repeat=2):
        B.add_term(jet.B2[r, s], (r, s), ())
        B.add_term(jet.B2bar[r, s], (r,), (s,))
    for r, s, t in product(range(n), repeat=3):
        B.add_term(jet.B3[r, s, t], (r, s, t), ())
        B.add_term(jet.B3bar1[r, s, t], (r, s), (t,))
        B.add_term(jet.B3bar2[r, s, t], (r,), (s, t))
    B = B.prune()

    B1, B2, B2b = jet.B1, jet.B2, jet.B2bar
    cB1, cB2, cB2b = np.conj(B1), np.conj(B2), np.conj(B2b)
    A = MatPoly.constant(1j * np.eye(n), n)
    for r, s in product(range(n), repeat=2):
        A.add_term(0.5j * cB1[r] @ B1[s], (s,), (r,))
    for r, s, t in product(range(n), repeat=3):
        c = cB2b[t, r] @ B1[s] + cB2b[t, s] @ B1[r] + 2 * cB1[t] @ B2[r, s]
        A.add_term(0.25j * c, (r, s), (t,))
        c = cB1[t] @ B2b[r, s] + cB1[s] @ B2b[r, t] + 2 * cB2[s, t] @ B1[r]
        A.add_term(0.25j * c, (r,), (s, t))
    return A.prune(), B


def jet_to_J(jet, exact=False, radius=1.0):
    """Almost complex structure whose split is the truncated jet ``(A, B)``.

    The raw polynomial field satisfies ``J^2 + I = O(|z|^4)``.  With
    ``exact=True`` it is corrected to ``J (-J^2)^{-1/2}``, an honest almost
    complex structure with the same order-3 jet.
    """
    n = jet.n
    A, B = jet.polynomials()
    dA = [A.dx(k) if i == 0 else A.dy(k) for k in range(n) for i in (0, 1)]
    dB = [B.dx(k) if i == 0 else B.dy(k) for k in range(n) for i in (0, 1)]

    def raw(p):
        z = to_complex(p)
        return merge(A(z), B(z))

    def raw_d(p):
        z = to_complex(p)
        return np.stack([merge(a(z), b(z)) for a, b in zip(dA, dB)], axis=p.ndim - 1)

    if not exact:
        return AlmostComplexStructure(n, raw, raw_d, radius=radius, name="jet")

    def corr(p):
        return _sign_correct(raw(p), None)[0]

    def corr_d(p):
        return _sign_correct(raw(p), raw_d(p))[1]

    return AlmostComplexStructure(n, corr, corr_d, radius=radius, name="jet-exact")


def _sign_correct(Jt, dJt, eps=1e-17, max_terms=40):
    """``J = Jt (I + E)^{-1/2}`` with ``E = -Jt^2 - I``, plus its derivative.

    The binomial series is truncated once ``|E|^k`` drops below ``eps``.
    """
    I = np.eye(Jt.shape[-1])
    E = -Jt @ Jt - I
    fro = np.sqrt(np.sum(np.abs(E) ** 2, axis=(-2, -1)))
    e = float(np.max(fro[np.isfinite(fro)], initial=0.0))
    if e >= 0.5:
        raise NotAComplexStructure(f"|J^2 + I| = {e:.2e} too large to correct")
    terms = 2 if e == 0 else int(min(max_terms, max(2, np.ceil(np.log(eps) / np.log(e)) + 1)))
    coef = [1.0]
    for k in range(1, terms):
        coef.append(coef[-1] * (-0.5 - (k - 1)) / k)
    pw = [np.broadcast_to(I, E.shape)]
    for _ in range(1, terms):
        pw.append(pw[-1] @ E)
    S = sum(c * P for c, P in zip(coef, pw))
    J = Jt @ S
    if dJt is None:
        return J, None
    Jt_ = Jt[..., None, :, :]
    dE = -(dJt @ Jt_ + Jt_ @ dJt)
    dS = np.zeros_like(dJt)
    for k in range(1, terms):
        for j in range(k):
            dS = dS + coef[k] * (pw[j][..., None, :, :] @ dE @ pw[k - 1 - j][..., None, :, :])
    dJ = dJt @ S[..., None, :, :] + Jt_ @ dS
    return J, dJ


def single_entry_jet(n=2, c=0.1):
    """Jet whose only nonzero coefficient is ``B^2_{1,1} = c``."""
    jet = JetACS(n)
    jet.B1[1, 0, 0] = c
    jet.check()
    return jet


def _vanish_mask(shape, slots):
    """Mask of entries ``[idx..., k, l]`` with ``idx[s] <= l`` for all ``s`` in slots."""
    grids = np.indices(shape)
    l = grids[-1]
    m = np.ones(shape, dtype=bool)
    for s in slots:
        m &= grids[s] <= l
    return m


def _symmetrize(arr, axes):
    """Average over all permutations of the given slot axes."""
    from itertools import permutations
    perms = list(permutations(axes))
    out = np.zeros_like(arr)
    for p in perms:
        order = list(range(arr.ndim))
        for src, dst in zip(axes, p):
            order[src] = dst
        out = out + arr.transpose(order)
    return out / len(perms)


def random_jet(n, rng, scale=0.3, orders=(1, 2, 3)):
    """Random jet obeying all symmetry and vanishing rules."""
    spec = {
        # name: (order, symmetric slots, vanishing slots)
        "B1": (1, (), (0,)),
        "B2": (2, (0, 1), (0, 1)),
        "B2bar": (2, (), (0,)),
        "B3": (3, (0, 1, 2), (0, 1, 2)),
        "B3bar1": (3, (0, 1), (0, 1)),
        "B3bar2": (3, (1, 2), (0,)),
    }
    jet = JetACS(n)
    for name, (order, sym, van) in spec.items():
        if order not in orders:
            continue
        h, a = _KINDS[name]
        shape = (n,) * (h + a) + (n, n)
        arr = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        if sym:
            arr = _symmetrize(arr, sym)
        arr[_vanish_mask(shape, van)] = 0
        setattr(jet, name, arr)
    jet.check()
    return jet


# ---------------------------------------------------------------------------
# torsion

def torsion_jet(jet, z):
    """Torsion coefficients ``N[r, k, l]`` (zero-based) from the jet.

    Entries with ``k < l`` follow the order-1 expansion; the tensor is filled
    antisymmetrically in ``(k, l)``.
    """
    n = jet.n
    z = np.asarray(z, dtype=complex).reshape(n)
    N = np.zeros((n, n, n), dtype=complex)
    for r in range(n):
        for k in range(n):
            for l in range(k + 1, n):
                v = 0.5j * jet.B1[l, r, k]
                for s in range(n):
                    v += 0.5j * (2 * (jet.B2[l, s, r, k] - jet.B2[k, s, r, l]) * z[s]
                                 + jet.B2bar[l, s, r, k] * np.conj(z[s]))
                N[r, k, l] = v
                N[r, l, k] = -v
    return N


def holomorphic_frame(J, p):
    """Frame ``zeta_l = (1/2)(I - iJ) d/dz_l`` as columns, shape (2n, n)."""
    n = J.n
    M = J(p)
    P = wirtinger_basis(n)[:, :n]
    return 0.5 * (P - 1j * M @ P)


def torsion_bracket(J, p, h=None):
    """Torsion coefficients from Lie brackets of the (1,0) frame.

    ``[zeta_k, zeta_l]^{0,1}`` is expanded in the conjugate frame; ``h`` selects
    central differences for the derivative of ``J`` (default: the structure's
    own derivative).
    """
    n = J.n
    p = np.asarray(p, dtype=float)
    if h is None:
        dJ = J.d(p)
    else:
        dJ = richardson_derivative(J, p, h)
    M = J(p)
    P = wirtinger_basis(n)[:, :n]
    Z = 0.5 * (P - 1j * M @ P)
    # derivative of zeta_l along a: -(i/2) d_a J d/dz_l
    dZ = -0.5j * dJ @ P  # [a, i, l]
    proj01 = 0.5 * (np.eye(2 * n) + 1j * M)
    Zbar = np.conj(Z)
    N = np.zeros((n, n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            if k == l:
                continue
            br = np.einsum("a,aj->j", Z[:, k], dZ[:, :, l]) - np.einsum("a,aj->j", Z[:, l], dZ[:, :, k])
            v = proj01 @ br
            coef = np.linalg.lstsq(Zbar, v, rcond=None)[0]
            N[:, k, l] = coef
    return N


# ---------------------------------------------------------------------------
# charts

def normalize_chart(J, x):
    """Affine chart centred at ``x`` in which the structure equals J_0 at 0.

    Returns ``(J', L, x)`` where ``J'(w) = L J(x + L^{-1} w) L^{-1}``.
    """
    n = J.n
    x = np.asarray(x, dtype=float)
    M = J(x)
    cols = []
    for k in range(n):
        b = np.zeros(2 * n)
        b[2 * k] = 1.0
        cols.extend([b, M @ b])
    Linv = np.array(cols).T
    if abs(np.linalg.det(Linv)) < 1e-12:
        raise np.linalg.LinAlgError("coordinate axes do not give a J-complex basis at x")
    L = np.linalg.inv(Linv)

    def mat(w):
        return L @ J(x + w @ Linv.T) @ Linv

    def der(w):
        dJ = J.d(x + w @ Linv.T)  # [..., a, i, j]
        dJw = np.einsum("...aij,ab->...bij", dJ, Linv)
        return L @ dJw @ Linv

    rad = J.radius - np.linalg.norm(x)
    rad = rad / np.linalg.norm(Linv, 2) if np.isfinite(rad) else np.inf
    return AlmostComplexStructure(n, mat, der, radius=rad, name=J.name + "-chart"), L, x
