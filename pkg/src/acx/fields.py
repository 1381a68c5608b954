"""Real scalar fields with analytic derivatives in interleaved real coordinates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._poly import MatPoly
from .acstruct import fd_derivative, to_complex, wirtinger_basis


@dataclass
class ScalarField:
    """Real function ``u`` on R^{2n} with optional analytic derivatives.

    ``value``, ``grad`` and ``hess`` accept points of shape (..., 2n).  Missing
    derivatives fall back to central differences with step ``h``.
    """

    n: int
    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    h: float = 1e-4
    name: str = ""

    def __call__(self, p):
        return self.value(np.asarray(p, dtype=float))

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        if self.grad is not None:
            return self.grad(p)
        return fd_derivative(self.value, p, self.h)

    def hessian(self, p):
        p = np.asarray(p, dtype=float)
        if self.hess is not None:
            return self.hess(p)
        if self.grad is not None:
            H = fd_derivative(self.grad, p, self.h)
        else:
            H = fd_derivative(lambda q: fd_derivative(self.value, q, self.h), p, self.h)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def complex_derivatives(self, p):
        """Return ``(u_s, u_{kl}, u_{k lbar})`` with respect to ``z``."""
        W = wirtinger_basis(self.n)[:, :self.n]
        g = self.gradient(p)
        H = self.hessian(p)
        us = g @ W
        ukl = W.T @ H @ W
        uklb = W.T @ H @ np.conj(W)
        return us, ukl, uklb

    def __neg__(self):
        return self.scaled(-1.0)

    def scaled(self, c):
        f, g, H = self.value, self.gradient, self.hessian
        return ScalarField(self.n, lambda p: c * f(p), lambda p: c * g(p),
                           lambda p: c * H(p), self.h, f"{c}*{self.name}")

    def __add__(self, other):
        return ScalarField(self.n, lambda p: self.value(p) + other.value(p),
                           lambda p: self.gradient(p) + other.gradient(p),
                           lambda p: self.hessian(p) + other.hessian(p),
                           self.h, f"{self.name}+{other.name}")


def poly_field(poly, name="poly"):
    """Field ``u = Re P(z, zbar)`` for a scalar :class:`MatPoly` ``P``."""
    n = poly.n
    d1 = poly.real_gradient()
    d2 = [[a.dx(k) if i == 0 else a.dy(k) for k in range(n) for i in (0, 1)] for a in d1]

    def value(p):
        return poly(to_complex(p))[..., 0, 0].real

    def grad(p):
        z = to_complex(p)
        return np.stack([d(z)[..., 0, 0].real for d in d1], axis=-1)

    def hess(p):
        z = to_complex(p)
        rows = [np.stack([d(z)[..., 0, 0].real for d in row], axis=-1) for row in d2]
        return np.stack(rows, axis=-2)

    return ScalarField(n, value, grad, hess, name=name)


def monomial_field(n, terms, name="poly"):
    """Field ``Re sum c * z^hol * zbar^anti`` from ``[(c, hol, anti), ...]`` (zero-based)."""
    P = MatPoly(n, (1, 1))
    for c, hol, anti in terms:
        P.add_term(np.array([[c]]), tuple(hol), tuple(anti))
    return poly_field(P, name)


def abs2(n):
    """``|z|^2``."""
    return monomial_field(n, [(1.0, (k,), (k,)) for k in range(n)], "abs2")


def neg_abs2(n):
    f = monomial_field(n, [(-1.0, (k,), (k,)) for k in range(n)], "neg_abs2")
    return f


def re_z1(n):
    """``Re z_1``."""
    return monomial_field(n, [(1.0, (0,), ())], "re_z1")


def mixed_poly(n):
    """``|z|^2 + Re(z_1^2 zbar_2)`` (for n = 1 the cubic uses z_1 only)."""
    k2 = 1 if n > 1 else 0
    terms = [(1.0, (k,), (k,)) for k in range(n)] + [(1.0, (0, 0), (k2,))]
    return monomial_field(n, terms, "mixed_poly")


def quadratic(M, S=None, name="quadratic"):
    """``u = sum M_{kl} z_k zbar_l + Re sum S_{kl} z_k z_l`` with ``M`` Hermitian.

    Under J_0 the Levi form of ``u`` is ``M``.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    terms = []
    for k in range(n):
        for l in range(n):
            terms.append((M[k, l], (k,), (l,)))
            if S is not None:
                terms.append((S[k, l], (k, l), ()))
    return monomial_field(n, terms, name)


def exp_re(n, c, name="exp_re"):
    """``exp(Re <c, z>)`` with ``<c, z> = sum c_k z_k``; plurisubharmonic under J_0."""
    c = np.asarray(c, dtype=complex)

    def lin(p):
        return (to_complex(p) @ c).real

    # d/dx_k Re(c.z) = Re c_k, d/dy_k = -Im c_k
    g0 = np.empty(2 * n)
    g0[0::2] = c.real
    g0[1::2] = -c.imag

    def value(p):
        return np.exp(lin(p))

    def grad(p):
        return np.exp(lin(p))[..., None] * g0

    def hess(p):
        return np.exp(lin(p))[..., None, None] * np.outer(g0, g0)

    return ScalarField(n, value, grad, hess, name=name)


LIBRARY = {
    "abs2": abs2,
    "neg_abs2": neg_abs2,
    "re_z1": re_z1,
    "mixed_poly": mixed_poly,
}


def from_name(name, n):
    try:
        return LIBRARY[name](n)
    except KeyError:
        raise ValueError(f"unknown field {name!r}; known: {sorted(LIBRARY)}") from None
