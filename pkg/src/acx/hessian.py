"""Almost-complex Hessian, the (1,1) coefficient matrix of i d'd''u, and the
order-2 expansion of the Hessian in normal coordinates.

Conventions
-----------
The Hessian of ``u`` along a constant-coefficient real vector ``xi`` is

    H_J u(xi) = 1/2 (xi.xi.u + Jxi.Jxi.u + J[xi, Jxi].u).

The coefficient matrix ``M`` of ``i d'd''u`` in the frame ``zeta_k`` satisfies
``H_J u(xi) = 2 sum M_kl lam_k conj(lam_l)`` where ``xi = 2 Re sum lam_k zeta_k``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .acstruct import (AlmostComplexStructure, InvalidJet, JetACS, fd_derivative,
                       jet_to_J, richardson_derivative, to_complex, to_real,
                       wirtinger_basis)


def _as_real_vector(xi, n):
    xi = np.asarray(xi)
    if np.iscomplexobj(xi) and xi.shape[-1] == n:
        return to_real(xi)
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 2 * n:
        raise ValueError(f"direction must have {n} complex or {2 * n} real components")
    return xi


def _as_complex_vector(xi, n):
    xi = np.asarray(xi)
    if np.iscomplexobj(xi) and xi.shape[-1] == n:
        return xi.astype(complex)
    return to_complex(_as_real_vector(xi, n))


# ---------------------------------------------------------------------------
# direct evaluation

def hessian_direct(J, u, xi, p):
    """``H_J u(xi)`` at the real point ``p`` from first derivatives of ``J``.

    For constant ``xi`` one has ``Jxi.Jxi.u = V^T D^2u V + du((D_V J) xi)``
    with ``V = J xi`` and ``[xi, Jxi] = (D_xi J) xi``.
    """
    n = J.n
    p = np.asarray(p, dtype=float)
    xi = _as_real_vector(xi, n)
    M = J(p)
    dJ = J.d(p)
    g = u.gradient(p)
    Hs = u.hessian(p)
    V = M @ xi
    DVJ = np.einsum("a,aij->ij", V, dJ)
    DxJ = np.einsum("a,aij->ij", xi, dJ)
    return 0.5 * (xi @ Hs @ xi + V @ Hs @ V + g @ (DVJ @ xi) + g @ (M @ (DxJ @ xi)))


def frame(J, p):
    """Frame ``zeta_k`` (columns) and its partials ``dzeta[a, :, k]``."""
    n = J.n
    P = wirtinger_basis(n)[:, :n]
    M = J(p)
    dJ = J.d(p)
    Z = 0.5 * (P - 1j * M @ P)
    dZ = -0.5j * dJ @ P
    return Z, dZ


def frame_coordinates(J, p, xi):
    """Coefficients ``lam`` with ``xi = 2 Re sum lam_k zeta_k``."""
    n = J.n
    xi = _as_real_vector(xi, n)
    P = wirtinger_basis(n)[:, :n]
    Z = 0.5 * (P - 1j * J(p) @ P)
    basis = np.concatenate([Z, np.conj(Z)], axis=1)
    c = np.linalg.solve(basis, xi.astype(complex))
    return c[:n]


def current_11(J, u, p):
    """Coefficients ``zeta_k.zetabar_l.u - [zeta_k, zetabar_l]^{0,1}.u``."""
    n = J.n
    p = np.asarray(p, dtype=float)
    Z, dZ = frame(J, p)
    Zb, dZb = np.conj(Z), np.conj(dZ)
    g = u.gradient(p)
    Hs = u.hessian(p)
    M = J(p)
    pi01 = 0.5 * (np.eye(2 * n) + 1j * M)
    out = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            second = Z[:, k] @ Hs @ Zb[:, l] + g @ np.einsum("a,aj->j", Z[:, k], dZb[:, :, l])
            br = np.einsum("a,aj->j", Z[:, k], dZb[:, :, l]) - np.einsum("a,aj->j", Zb[:, l], dZ[:, :, k])
            out[k, l] = second - g @ (pi01 @ br)
    return out


def pairing(M, lam):
    """``2 sum M_kl lam_k conj(lam_l)``."""
    lam = np.asarray(lam, dtype=complex)
    return float(2 * np.real(lam @ M @ np.conj(lam)))


# ---------------------------------------------------------------------------
# expansion tables

@dataclass(frozen=True)
class HessianExpansionTerms:
    """Coefficient tables of the order-2 expansion for one jet.

    Each ``R_*`` array is indexed ``[s, r, h, k, l]`` (zero-based).  ``raw``
    keeps the values exactly as evaluated from the printed expressions; the
    public arrays are symmetrized in ``(r, h)`` for the tables contracted with
    ``z_r z_h`` or ``zbar_r zbar_h``.
    """

    jet: JetACS
    tables: str
    R_kl_rh: np.ndarray
    R_kl_rhb: np.ndarray
    R_kl_rbhb: np.ndarray
    R_klb_rh: np.ndarray
    R_klb_rhb: np.ndarray
    R_klb_rbhb: np.ndarray
    R_kblb_rhb: np.ndarray
    R_kblb_rbhb: np.ndarray
    raw: dict


def expansion_terms(jet, tables="audited"):
    """Evaluate every coefficient table of the Hessian expansion for ``jet``.

    ``tables="printed"`` uses the tables as originally stated.
    ``tables="audited"`` (default) removes three groups of terms that the
    direct Hessian shows to be absent from the exact order-2 coefficients:

    * ``-1/2 Bb^{h,rbar}_{s,t} (B^k_{t,l} + B^l_{t,k})`` in ``R^{s,r,hbar}_{k,l}``;
    * all of ``R^{s,rbar,hbar}_{k,l} = -1/2 Bb^{r,h}_{s,t} (B^k_{t,l} + B^l_{t,k})``;
    * ``i/2 sum_j Bb^h_{t,j} B^r_{j,k} B^t_{s,l}`` in ``R^{s,r,hbar}_{k,lbar}``.

    The first two are the products ``conj(B_2(z)) B^k`` cancelled by the
    ``Bbar (D_xi B) xi`` part of ``J (D_xi J) xi``.
    """
    if tables not in ("printed", "audited"):
        raise ValueError("tables must be 'printed' or 'audited'")
    jet.check()
    B1, B2, B2b = jet.B1, jet.B2, jet.B2bar
    B31, B32 = jet.B3bar1, jet.B3bar2
    c1, c2, c2b = np.conj(B1), np.conj(B2), np.conj(B2b)
    c31, c32 = np.conj(B31), np.conj(B32)
    ein = np.einsum
    raw = {}
    # index names: s r h k l, summed t j

    # R^{s,r,h}_{k,l} = i/8 sum_{t,j} Bb^t_{s,j} (B^r_{t,k} B^h_{j,l} + B^h_{t,k} B^r_{j,l}
    #                                            + B^r_{t,l} B^h_{j,k} + B^h_{t,l} B^r_{j,k})
    T = (ein("tsj,rtk,hjl->srhkl", c1, B1, B1) + ein("tsj,htk,rjl->srhkl", c1, B1, B1)
         + ein("tsj,rtl,hjk->srhkl", c1, B1, B1) + ein("tsj,htl,rjk->srhkl", c1, B1, B1))
    raw["R_kl_rh"] = 1j / 8 * T

    # R^{s,r,hb}_{k,l} = -1/2 sum_t [Bb^{h,kb}_{s,t} B^r_{t,l} + Bb^{h,lb}_{s,t} B^r_{t,k}
    #                               + Bb^{h,rb}_{s,t} (B^k_{t,l} + B^l_{t,k})]
    T = ein("hkst,rtl->srhkl", c2b, B1) + ein("hlst,rtk->srhkl", c2b, B1)
    extra = ein("hrst,ktl->srhkl", c2b, B1) + ein("hrst,ltk->srhkl", c2b, B1)
    raw["R_kl_rhb"] = -0.5 * (T + extra)
    audited = {"R_kl_rhb": -0.5 * T}

    # R^{s,rb,hb}_{k,l} = -1/2 sum_t Bb^{r,h}_{s,t} (B^k_{t,l} + B^l_{t,k})
    T = ein("rhst,ktl->srhkl", c2, B1) + ein("rhst,ltk->srhkl", c2, B1)
    raw["R_kl_rbhb"] = -0.5 * T
    audited["R_kl_rbhb"] = np.zeros_like(T)

    # R^{s,r,h}_{k,lb} = 1/2 sum_t (B^r_{t,k} Bb^{t,hb}_{s,l} + B^h_{t,k} Bb^{t,rb}_{s,l}
    #                              + 2 B^{r,h}_{t,k} Bb^t_{s,l})
    T = (ein("rtk,thsl->srhkl", B1, c2b) + ein("htk,trsl->srhkl", B1, c2b)
         + 2 * ein("rhtk,tsl->srhkl", B2, c1))
    raw["R_klb_rh"] = 0.5 * T

    # R^{s,r,hb}_{k,lb} = 4i Bb^{h,rb,kb}_{s,l} + sum_t (2 B^r_{t,k} Bb^{t,h}_{s,l}
    #     + B^{r,hb}_{t,k} Bb^t_{s,l} + B^{r,lb}_{t,k} Bb^h_{s,t}
    #     + i/2 sum_j Bb^h_{t,j} B^r_{j,k} B^t_{s,l})
    T = (4j * ein("hrksl->srhkl", c32)
         + 2 * ein("rtk,thsl->srhkl", B1, c2)
         + ein("rhtk,tsl->srhkl", B2b, c1)
         + ein("rltk,hst->srhkl", B2b, c1))
    cubic = 0.5j * ein("htj,rjk,tsl->srhkl", c1, B1, B1)
    audited["R_klb_rhb"] = T
    raw["R_klb_rhb"] = T + cubic

    # R^{s,rb,hb}_{k,lb} = 2i Bb^{r,h,kb}_{s,l}
    #     + i/4 sum_{t,j} (Bb^r_{t,l} Bb^h_{s,j} + Bb^h_{t,l} Bb^r_{s,j}) (B^t_{j,k} - B^k_{j,t})
    D = ein("tjk->tjk", B1) - ein("kjt->tjk", B1)  # D[t, j, k] = B^t_{j,k} - B^k_{j,t}
    T = (2j * ein("rhksl->srhkl", c31)
         + 0.25j * (ein("rtl,hsj,tjk->srhkl", c1, c1, D) + ein("htl,rsj,tjk->srhkl", c1, c1, D)))
    raw["R_klb_rbhb"] = T

    # R^{s,r,hb}_{kb,lb} = -i/4 sum_{t,j} B^r_{t,j} (Bb^h_{j,k} Bb^t_{s,l} + Bb^h_{j,l} Bb^t_{s,k})
    T = ein("rtj,hjk,tsl->srhkl", B1, c1, c1) + ein("rtj,hjl,tsk->srhkl", B1, c1, c1)
    raw["R_kblb_rhb"] = -0.25j * T

    # R^{s,rb,hb}_{kb,lb} = 1/4 sum_t (Bb^r_{t,k} Bb^{h,tb}_{s,l} + Bb^h_{t,k} Bb^{r,tb}_{s,l}
    #                                 + Bb^r_{t,l} Bb^{h,tb}_{s,k} + Bb^h_{t,l} Bb^{r,tb}_{s,k})
    T = (ein("rtk,htsl->srhkl", c1, c2b) + ein("htk,rtsl->srhkl", c1, c2b)
         + ein("rtl,htsk->srhkl", c1, c2b) + ein("htl,rtsk->srhkl", c1, c2b))
    raw["R_kblb_rbhb"] = 0.25 * T

    def sym_rh(a):
        return 0.5 * (a + a.transpose(0, 2, 1, 3, 4))

    sym = dict(raw)
    if tables == "audited":
        sym.update(audited)
    for key in ("R_kl_rh", "R_kl_rbhb", "R_klb_rh", "R_klb_rbhb", "R_kblb_rbhb"):
        sym[key] = sym_rh(sym[key])
    return HessianExpansionTerms(jet=jet, tables=tables, raw=raw, **sym)


def _jet2B(jet, z):
    A, B = jet.polynomials()
    return B.degree_filter(2)(z)


def expansion_coefficients(terms, z, xi):
    """Return ``(Q_klb, Q_kl, R_kl, R_klb, R_kblb)`` at ``z`` for direction ``xi``."""
    jet = terms.jet
    n = jet.n
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    xi = np.asarray(xi, dtype=complex)
    xb = np.conj(xi)
    j2 = _jet2B(jet, z)
    Bz = np.einsum("r,rkl->kl", z, jet.B1)
    cBz = np.conj(Bz)
    # Q_{k,lb}
    Q_klb = (2j * np.outer(xi, j2 @ xi)
             + np.outer(cBz @ Bz @ xi, xb) + np.outer(cBz @ xb, Bz @ xi))
    cj2 = np.conj(j2)
    a = cj2 @ xb
    b = cBz @ Bz @ xi
    c = cBz @ xb
    Q_kl = (1j * (np.outer(a, xi) + np.outer(xi, a))
            - 0.5 * (np.outer(b, xi) + np.outer(xi, b)) + np.outer(c, c))
    ein = np.einsum
    R_kl = (ein("srhkl,r,h->skl", terms.R_kl_rh, z, z)
            + ein("srhkl,r,h->skl", terms.R_kl_rhb, z, zb)
            + ein("srhkl,r,h->skl", terms.R_kl_rbhb, zb, zb))
    c1 = np.conj(jet.B1)
    c2b = np.conj(jet.B2bar)
    R_klb = (ein("rtk,tsl,r->skl", jet.B1, c1, z)
             + 2j * ein("rksl,r->skl", c2b, zb)
             + ein("srhkl,r,h->skl", terms.R_klb_rh, z, z)
             + ein("srhkl,r,h->skl", terms.R_klb_rhb, z, zb)
             + ein("srhkl,r,h->skl", terms.R_klb_rbhb, zb, zb))
    R_kblb = (ein("srhkl,r,h->skl", terms.R_kblb_rhb, z, zb)
              + ein("srhkl,r,h->skl", terms.R_kblb_rbhb, zb, zb))
    return Q_klb, Q_kl, R_kl, R_klb, R_kblb


def hessian_expansion(jet, u, xi, z, terms=None):
    """Order-2 normal-coordinate expansion of ``H_J u(xi)`` at complex point ``z``.

    ``terms`` may carry precomputed tables from :func:`expansion_terms`.
    """
    n = jet.n
    if terms is None:
        terms = expansion_terms(jet)
    z = np.asarray(z, dtype=complex).reshape(n)
    xi = _as_complex_vector(xi, n)
    us, ukl, uklb = u.complex_derivatives(to_real(z))
    Q_klb, Q_kl, R_kl, R_klb, R_kblb = expansion_coefficients(terms, z, xi)
    xb = np.conj(xi)
    val = 2 * np.real(xi @ uklb @ xb)
    val += np.sum(np.real(Q_klb * uklb + Q_kl * ukl))
    poly = (np.einsum("skl,k,l->s", R_kl, xi, xi) + np.einsum("skl,k,l->s", R_klb, xi, xb)
            + np.einsum("skl,k,l->s", R_kblb, xb, xb))
    val += np.sum(np.real(poly * us))
    return float(val)


def order1_torsion_coefficients(jet):
    """Coefficients of the order-0 and order-1 torsion jet, as ``(name, index, value)``."""
    n = jet.n
    out = []
    for r in range(n):
        for k in range(n):
            for l in range(k + 1, n):
                out.append(("B^l_{r,k}", (l, r, k), jet.B1[l, r, k]))
                for s in range(n):
                    out.append(("2(B^{l,s}_{r,k} - B^{k,s}_{r,l})", (r, k, l, s),
                                2 * (jet.B2[l, s, r, k] - jet.B2[k, s, r, l])))
                    out.append(("B^{l,sbar}_{r,k}", (l, s, r, k), jet.B2bar[l, s, r, k]))
    return out


def hessian_expansion_reduced(jet, u, xi, z, tol=1e-14):
    """Reduced expansion, valid when the order-1 torsion jet vanishes."""
    n = jet.n
    if np.any(np.abs(jet.B1) > tol):
        idx = np.argwhere(np.abs(jet.B1) > tol)[0]
        raise InvalidJet("order-1 torsion jet does not vanish: B^{%d}_{%d,%d} = %s"
                         % (idx[0] + 1, idx[1] + 1, idx[2] + 1, jet.B1[tuple(idx)]))
    for name, idx, val in order1_torsion_coefficients(jet):
        if abs(val) > tol:
            one = ",".join(str(i + 1) for i in idx)
            raise InvalidJet(f"order-1 torsion coefficient {name} at ({one}) = {val}")
    z = np.asarray(z, dtype=complex).reshape(n)
    zb = np.conj(z)
    xi = _as_complex_vector(xi, n)
    us, ukl, uklb = u.complex_derivatives(to_real(z))
    c32 = np.conj(jet.B3bar2)  # [h, r, k, s, l] -> Bb^{h, rb, kb}_{s,l}
    c31 = np.conj(jet.B3bar1)  # [r, h, k, s, l] -> Bb^{r, h, kb}_{s,l}
    T = (2 * np.einsum("hrksl,r,h->skl", c32, z, zb)
         + np.einsum("rhksl,r,h->skl", c31, zb, zb))
    corr = np.einsum("skl,s,k,l->", T, us, xi, np.conj(xi))
    return float(2 * np.real(xi @ uklb @ np.conj(xi)) - 2 * np.imag(corr))


def expansion_audit_csv(rows):
    """CSV text with columns ``|z|, direct, expansion, abs_diff``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["|z|", "direct", "expansion", "abs_diff"])
    for r, d, e in rows:
        w.writerow([repr(float(r)), repr(float(d)), repr(float(e)), repr(abs(float(d) - float(e)))])
    return buf.getvalue()


def fit_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.maximum(np.asarray(y, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# metric-dependent quantities

def laplacian_J(J, metric, u, p):
    """``1/2 sum_k H_J u(xi_k)`` over an omega-orthonormal complex frame."""
    xis = metric.orthonormal_frame(J, p)
    return 0.5 * sum(hessian_direct(J, u, x, p) for x in xis)


def grad_form(J, u, xi, p):
    """``i d'u ^ d''u (xi, J xi) = 1/2 (du(xi)^2 + du(J xi)^2)``."""
    xi = _as_real_vector(xi, J.n)
    g = u.gradient(p)
    return 0.5 * (float(g @ xi) ** 2 + float(g @ (J(p) @ xi)) ** 2)


def ddc_check(J, u, xi, p, h=1e-4):
    """``|i d'd''u(xi, J xi) - dd^c u(xi, J xi)|`` with ``d^c u = -1/2 du o J``.

    The exterior derivative of the 1-form ``alpha = d^c u`` is taken by
    Richardson-extrapolated central differences:
    ``d alpha(X, Y) = X.alpha(Y) - Y.alpha(X) - alpha([X, Y])`` for the constant
    field ``X = xi`` and ``Y = J xi`` extended by the structure.
    """
    n = J.n
    p = np.asarray(p, dtype=float)
    xi = _as_real_vector(xi, n)

    def alpha(q):
        return -0.5 * u.gradient(q) @ J(q)

    dalpha = richardson_derivative(alpha, p, h)  # [a, j] = d_a alpha_j
    # d alpha(X, Y) for constant vectors X, Y
    X = xi
    Y = J(p) @ xi
    dd = X @ dalpha @ Y - Y @ dalpha @ X
    return abs(hessian_direct(J, u, xi, p) - dd)


def strictly_psh_margin(J, u, metric, points):
    """Minimum over ``points`` of the least eigenvalue of ``i d'd''u`` relative to ``omega``.

    Relative eigenvalues solve ``M v = mu (h/2) v`` so that ``H_J u(xi) >= mu |xi|^2``.
    """
    from scipy.linalg import eigh
    best = np.inf
    for p in np.atleast_2d(points):
        M = current_11(J, u, p)
        M = 0.5 * (M + M.conj().T)
        hm = metric.frame_matrix(J, p)
        mu = eigh(M, 0.5 * hm, eigvals_only=True)
        best = min(best, float(mu[0]))
    return best
