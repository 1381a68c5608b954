"""(p,p)-forms over a complex frame, Hermitian metrics, positivity and masses.

A real tangent vector ``xi`` is described by its (1,0) coefficients ``lam`` in
a frame ``zeta_k``: ``xi = 2 Re sum lam_k zeta_k``.  A (p,p)-form is

    u = i^{p^2} sum_{K,H} u_{K,H} zeta*_K ^ conj(zeta*_H)

over increasing multi-indices ``|K| = |H| = p``.  With these conventions
``u(xi_1, J xi_1, ..., xi_p, J xi_p) = 2^p sum u_{K,H} det lam_K conj(det lam_H)``.

A Hermitian metric is stored as its Riemannian part ``g`` on R^{2n}.  For a
structure ``J`` its frame matrix ``h`` satisfies ``|xi|_g^2 = sum h_kl lam_k
conj(lam_l)``; the Kahler form ``omega(u, v) = g(Ju, v)`` then has (1,1)
coefficients ``h / 2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh

from .acstruct import fd_derivative, to_complex, wirtinger_basis

TOL_PSD = 1e-9


class NotPositive(ValueError):
    """Raised when a decomposition requires a positive form."""


# ---------------------------------------------------------------------------
# (p,p)-forms

def multi_indices(n, p):
    return list(combinations(range(n), p))


@dataclass
class PQForm:
    """Coefficients ``u_{K,H}`` of a (p,p)-form; ``coeffs[i, j]`` pairs the
    ``i``-th and ``j``-th increasing multi-index of :func:`multi_indices`."""

    n: int
    p: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        m = len(multi_indices(self.n, self.p))
        if self.coeffs.shape != (m, m):
            raise ValueError(f"a ({self.p},{self.p})-form on C^{self.n} needs {m}x{m} coefficients")

    @classmethod
    def from_matrix(cls, M):
        """(1,1)-form ``i sum M_kl zeta*_k ^ conj(zeta*_l)``."""
        M = np.asarray(M, dtype=complex)
        return cls(M.shape[0], 1, M)

    @property
    def indices(self):
        return multi_indices(self.n, self.p)

    def is_real(self, tol=1e-12):
        c = self.coeffs
        return bool(np.max(np.abs(c - c.conj().T), initial=0.0) <= tol * max(1.0, np.max(np.abs(c))))

    def to_json(self):
        out = {}
        for i, K in enumerate(self.indices):
            for j, H in enumerate(self.indices):
                v = self.coeffs[i, j]
                if v != 0:
                    key = ",".join(str(k + 1) for k in K) + "|" + ",".join(str(h + 1) for h in H)
                    out[key] = [float(v.real), float(v.imag)]
        return {"n": self.n, "p": self.p, "coeffs": out}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        n, p = int(obj["n"]), int(obj["p"])
        idx = {K: i for i, K in enumerate(multi_indices(n, p))}
        c = np.zeros((len(idx), len(idx)), dtype=complex)
        for key, (re, im) in obj["coeffs"].items():
            K, H = key.split("|")
            K = tuple(int(s) - 1 for s in K.split(",")) if K else ()
            H = tuple(int(s) - 1 for s in H.split(",")) if H else ()
            if K not in idx or H not in idx:
                raise ValueError(f"bad multi-index pair {key!r}")
            c[idx[K], idx[H]] = re + 1j * im
        return cls(n, p, c)


def _minors(lam, p):
    """``det lam_K`` for every increasing ``K``; ``lam`` has shape (n, p)."""
    n = lam.shape[0]
    return np.array([np.linalg.det(lam[list(K), :]) if p else 1.0 for K in multi_indices(n, p)])


def eval_pp(u, lam, tol=1e-10):
    """``u(xi_1, J xi_1, ..., xi_p, J xi_p)`` for vectors with (1,0) coefficients ``lam``.

    ``lam`` has shape (n, p) (or (n,) when p = 1).
    """
    if not u.is_real():
        raise ValueError("form is not real")
    lam = np.asarray(lam, dtype=complex)
    if lam.ndim == 1:
        lam = lam[:, None]
    d = _minors(lam, u.p)
    val = 2 ** u.p * (d @ u.coeffs @ np.conj(d))
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise ValueError(f"evaluation is not real: {val}")
    return float(val.real)


@dataclass
class PositivityReport:
    positive: bool
    min_eigenvalue: float
    witness: Optional[np.ndarray] = None


def _hermitian(M, tol=1e-10):
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    if np.max(np.abs(M - M.conj().T), initial=0.0) > tol * scale:
        raise ValueError("coefficient matrix is not Hermitian")
    return 0.5 * (M + M.conj().T)


def is_positive_11(u, h=None, tol=None):
    """Positivity of a (1,1)-form from its coefficient matrix.

    With a frame matrix ``h`` the eigenvalues are taken relative to the metric,
    ``M v = mu (h/2) v``, so that ``u(xi, J xi) >= mu |xi|^2``.  The witness is
    the (1,0) coefficient vector of the least eigenvalue.
    """
    M = u.coeffs if isinstance(u, PQForm) else u
    M = _hermitian(M)
    if h is None:
        w, V = np.linalg.eigh(M)
    else:
        w, V = eigh(M, 0.5 * _hermitian(h))
    if tol is None:
        tol = TOL_PSD * max(1.0, float(np.abs(np.trace(M))))
    mu = float(w[0])
    ok = mu >= -tol
    # eigenvectors of M solve conj pairing lam^T M conj(lam); return lam
    return PositivityReport(ok, mu, None if ok else np.conj(V[:, 0]))


def strong_decomp_11(u, tol=None):
    """Covectors ``alpha_t`` (coefficient vectors) with ``u = sum i alpha_t ^ conj(alpha_t)``."""
    M = _hermitian(u.coeffs if isinstance(u, PQForm) else u)
    rep = is_positive_11(M, tol=tol)
    if not rep.positive:
        raise NotPositive(f"form is not positive (least eigenvalue {rep.min_eigenvalue:.3e})")
    w, V = np.linalg.eigh(M)
    cut = TOL_PSD * max(1.0, float(np.max(np.abs(w))))
    return [np.sqrt(wi) * V[:, i] for i, wi in enumerate(w) if wi > cut]


def dual_11(u):
    """Hermitian matrix whose positivity decides that of an (n-1,n-1)-form."""
    n = u.n
    idx = {K: i for i, K in enumerate(u.indices)}
    D = np.zeros((n, n), dtype=complex)
    for k in range(n):
        Kk = tuple(i for i in range(n) if i != k)
        for l in range(n):
            Kl = tuple(i for i in range(n) if i != l)
            D[k, l] = (-1) ** (k + l) * u.coeffs[idx[Kk], idx[Kl]]
    return D


def positivity_verdict(u, rng=None, samples=2000, tol=None):
    """``"positive"``, ``"not_positive"`` or ``"undetermined"`` for a (p,p)-form.

    Bidegrees (1,1), (n-1,n-1) and (n,n) are decided exactly; otherwise
    seeded decomposable evaluations can only refute positivity.
    """
    if tol is None:
        tol = TOL_PSD * max(1.0, float(np.max(np.abs(u.coeffs), initial=0.0)))
    if u.p == 0 or u.p == u.n:
        return "positive" if u.coeffs[0, 0].real >= -tol else "not_positive"
    if u.p == 1:
        return "positive" if is_positive_11(u, tol=tol).positive else "not_positive"
    if u.p == u.n - 1:
        return "positive" if is_positive_11(dual_11(u), tol=tol).positive else "not_positive"
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(samples):
        lam = rng.standard_normal((u.n, u.p)) + 1j * rng.standard_normal((u.n, u.p))
        if eval_pp(u, lam) < -tol:
            return "not_positive"
    return "undetermined"


# ---------------------------------------------------------------------------
# exterior identities

def _two_form(a, b):
    """Antisymmetric matrix of ``a ^ b`` for covectors on R^{2n}."""
    return np.outer(a, b) - np.outer(b, a)


def polarization_check(zj, zk):
    """Residual of ``4 a ^ conj(b) = sum_q i^q (a + i^q b) ^ conj(a + i^q b)``.

    ``zj``, ``zk`` are complex covectors on R^{2n} (rows of the coframe).
    """
    zj = np.asarray(zj, dtype=complex)
    zk = np.asarray(zk, dtype=complex)
    lhs = 4 * _two_form(zj, np.conj(zk))
    rhs = np.zeros_like(lhs)
    for q in range(4):
        c = 1j ** q
        v = zj + c * zk
        rhs += c * _two_form(v, np.conj(v))
    scale = max(1.0, float(np.max(np.abs(lhs))))
    return float(np.max(np.abs(lhs - rhs)) / scale)


# ---------------------------------------------------------------------------
# metrics

def _complex_components(n):
    """``C`` with ``v = C xi`` the complex components of a real vector."""
    C = np.zeros((n, 2 * n), dtype=complex)
    for k in range(n):
        C[k, 2 * k] = 1.0
        C[k, 2 * k + 1] = 1.0j
    return C


@dataclass
class HermitianMetric:
    """Riemannian metric ``G(p)`` on R^{2n}; Hermitian data are taken from its
    ``J``-invariant part ``g_J = (G + J^T G J) / 2``.

    ``dG``, when given, returns ``dG[..., a, i, j] = d_a G_ij``.
    """

    n: int
    G: Callable
    dG: Optional[Callable] = None
    h_step: float = 1e-5
    name: str = ""

    def __call__(self, p):
        return self.G(np.asarray(p, dtype=float))

    def d(self, p):
        p = np.asarray(p, dtype=float)
        if self.dG is not None:
            return self.dG(p)
        return fd_derivative(self.G, p, self.h_step)

    def g_J(self, J, p):
        G = self(p)
        M = J(p)
        return 0.5 * (G + np.swapaxes(M, -1, -2) @ G @ M)

    def frame_matrix(self, J, p):
        """``h_kl = 2 g(zeta_k, conj(zeta_l))`` in the frame ``zeta = 1/2 (I - iJ) d/dz``."""
        n = self.n
        g = self.g_J(J, p)
        P = wirtinger_basis(n)[:, :n]
        Z = 0.5 * (P - 1j * J(p) @ P)
        h = 2 * Z.T @ g @ np.conj(Z)
        h = 0.5 * (h + h.conj().T)
        if np.linalg.eigvalsh(h)[0] <= 0:
            raise ValueError("metric is not positive at the point")
        return h

    def orthonormal_frame(self, J, p):
        """Real vectors ``xi_k`` such that ``{xi_k, J xi_k}`` is ``g_J``-orthonormal.

        Obtained from the Cholesky factor of ``conj(h)``, a deterministic
        Gram-Schmidt in the frame order.
        """
        n = self.n
        h = self.frame_matrix(J, p)
        L = np.linalg.cholesky(np.conj(h))
        Lam = np.linalg.inv(L).conj().T
        P = wirtinger_basis(n)[:, :n]
        Z = 0.5 * (P - 1j * J(p) @ P)
        return [2 * np.real(Z @ Lam[:, k]) for k in range(n)]

    # constructors ---------------------------------------------------------
    @classmethod
    def standard(cls, n):
        I = np.eye(2 * n)

        def G(p):
            return np.broadcast_to(I, p.shape[:-1] + I.shape).copy()

        def dG(p):
            return np.zeros(p.shape[:-1] + (2 * n,) + I.shape)

        return cls(n, G, dG, name="standard")

    @classmethod
    def conformal(cls, n, phi, dphi, name="conformal"):
        """``G = exp(phi) I`` with scalar ``phi`` and its real gradient ``dphi``."""
        I = np.eye(2 * n)

        def G(p):
            return np.exp(phi(p))[..., None, None] * I

        def dG(p):
            e = np.exp(phi(p))[..., None]
            return (e * dphi(p))[..., :, None, None] * I

        return cls(n, G, dG, name=name)

    @classmethod
    def from_coefficients(cls, h, n):
        """Metric with ``|xi|^2 = sum h_kl v_k conj(v_l)``, ``v`` the complex components."""
        C = _complex_components(n)

        def G(p):
            H = np.asarray(h(p), dtype=complex)
            return np.real(C.T @ H @ np.conj(C))

        return cls(n, G, name="coefficients")


def mass_density(theta, metric, J, p):
    """Density of ``theta ^ omega_{n-q}`` against ``omega_n`` for a (q,q)-form.

    In an omega-orthonormal frame this is ``2^q sum_{|L|=q} theta_{L,L}``; in
    the frame ``zeta`` it equals ``2^q sum_{K,H} theta_{K,H} det(conj(h)^{-1})_{K,H}``
    by Cauchy-Binet.  ``theta`` is a :class:`PQForm` or a callable returning one.
    """
    if callable(theta) and not isinstance(theta, PQForm):
        theta = theta(p)
    h = metric.frame_matrix(J, p)
    G = np.linalg.inv(np.conj(h))
    q = theta.p
    idx = theta.indices
    D = np.array([[np.linalg.det(G[np.ix_(K, H)]) if q else 1.0 for H in idx] for K in idx])
    val = 2 ** q * np.sum(theta.coeffs * D)
    return float(val.real)


def wirtinger_ratio(ds_t, ds_s, J, metric, p, rank_tol=1e-12):
    """``alpha`` with ``omega|_Y = alpha dV_Y`` at sampled surface nodes.

    ``ds_t``, ``ds_s`` are the partials of the parametrisation at nodes ``p``
    (all of shape (m, 2n)).  Rank-deficient nodes give ``nan``.
    """
    ds_t = np.atleast_2d(ds_t)
    ds_s = np.atleast_2d(ds_s)
    p = np.atleast_2d(p)
    out = np.empty(len(p))
    for i in range(len(p)):
        g = metric.g_J(J, p[i])
        a, b = ds_t[i], ds_s[i]
        gram = np.array([[a @ g @ a, a @ g @ b], [b @ g @ a, b @ g @ b]])
        area2 = np.linalg.det(gram)
        if area2 <= rank_tol * max(gram[0, 0], gram[1, 1], 1e-300) ** 2:
            out[i] = np.nan
            continue
        omega = (J(p[i]) @ a) @ g @ b
        out[i] = omega / np.sqrt(area2)
    return out

