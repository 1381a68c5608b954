"""Matrix-valued polynomials in z and conj(z).

A polynomial is a list of monomials ``coef * z_{h1}...z_{hp} * zbar_{a1}...zbar_{aq}``
with an ``(n, n)`` complex coefficient.  This is enough to represent the truncated
jets of an almost complex structure exactly, together with their Wirtinger
derivatives.
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np


class MatPoly:
    """Sum of matrix monomials in the variables ``z`` and ``conj(z)``.

    Parameters
    ----------
    n : int
        Number of complex variables.
    shape : tuple
        Shape of each coefficient.
    terms : dict, optional
        Maps ``(hol, anti)`` (sorted index tuples) to coefficient arrays.
    """

    def __init__(self, n, shape, terms=None):
        self.n = n
        self.shape = tuple(shape)
        self.terms = {}
        if terms:
            for key, c in terms.items():
                self._add(key, c)

    def _add(self, key, c):
        key = (tuple(sorted(key[0])), tuple(sorted(key[1])))
        c = np.asarray(c, dtype=complex)
        if key in self.terms:
            self.terms[key] = self.terms[key] + c
        else:
            self.terms[key] = c.copy()

    @classmethod
    def constant(cls, c, n):
        c = np.asarray(c, dtype=complex)
        return cls(n, c.shape, {((), ()): c})

    def copy(self):
        return MatPoly(self.n, self.shape, self.terms)

    def add_term(self, c, hol=(), anti=()):
        self._add((hol, anti), c)
        return self

    def __add__(self, other):
        out = self.copy()
        for key, c in other.terms.items():
            out._add(key, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return MatPoly(self.n, self.shape, {k: s * c for k, c in self.terms.items()})

    def conj(self):
        return MatPoly(self.n, self.shape,
                       {(a, h): np.conj(c) for (h, a), c in self.terms.items()})

    def __matmul__(self, other):
        out = MatPoly(self.n, (self.shape[0], other.shape[1]))
        for (h1, a1), c1 in self.terms.items():
            for (h2, a2), c2 in other.terms.items():
                out._add((h1 + h2, a1 + a2), c1 @ c2)
        return out

    def degree_filter(self, max_degree):
        """Keep only monomials of total degree at most ``max_degree``."""
        return MatPoly(self.n, self.shape,
                       {k: c for k, c in self.terms.items()
                        if len(k[0]) + len(k[1]) <= max_degree})

    def homogeneous(self, degree):
        return MatPoly(self.n, self.shape,
                       {k: c for k, c in self.terms.items()
                        if len(k[0]) + len(k[1]) == degree})

    def dz(self, k):
        """Derivative with respect to ``z_k``."""
        out = MatPoly(self.n, self.shape)
        for (h, a), c in self.terms.items():
            m = h.count(k)
            if m:
                hh = list(h)
                hh.remove(k)
                out._add((tuple(hh), a), m * c)
        return out

    def dzbar(self, k):
        """Derivative with respect to ``conj(z_k)``."""
        out = MatPoly(self.n, self.shape)
        for (h, a), c in self.terms.items():
            m = a.count(k)
            if m:
                aa = list(a)
                aa.remove(k)
                out._add((h, tuple(aa)), m * c)
        return out

    def dx(self, k):
        return self.dz(k) + self.dzbar(k)

    def dy(self, k):
        return (self.dz(k) - self.dzbar(k)).scale(1j)

    def real_gradient(self):
        """List of derivatives along the interleaved real coordinates."""
        out = []
        for k in range(self.n):
            out.append(self.dx(k))
            out.append(self.dy(k))
        return out

    def prune(self, tol=0.0):
        return MatPoly(self.n, self.shape,
                       {k: c for k, c in self.terms.items() if np.max(np.abs(c)) > tol})

    def __call__(self, z):
        """Evaluate at complex points ``z`` of shape ``(..., n)``."""
        z = np.asarray(z, dtype=complex)
        lead = z.shape[:-1]
        zc = np.conj(z)
        out = np.zeros(lead + self.shape, dtype=complex)
        # group monomials by their scalar factor to avoid repeated products
        groups = defaultdict(list)
        for key, c in self.terms.items():
            groups[key].append(c)
        for (h, a), cs in groups.items():
            w = np.ones(lead, dtype=complex)
            for i in h:
                w = w * z[..., i]
            for i in a:
                w = w * zc[..., i]
            c = sum(cs)
            out += w[(...,) + (None,) * len(self.shape)] * c
        return out
