"""Real Clifford algebra Cl(7) on 8-component spinors.

The generators are left-multiplication matrices of the imaginary octonion
units, built by Cayley-Dickson doubling, then globally negated if needed so
that the fundamental 3-form acts with eigenvalue -7 on a one-dimensional
eigenspace (the canonical spinor convention used throughout).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .alg7 import Form, standard_omega3
from .errors import NotG2FormError
from .jets import jet_value


def _cayley_dickson_table(levels):
    """Structure constants of R, C, H, O, ... as {(i, j): (sign, k)}."""
    table = {(0, 0): (1, 0)}
    dim = 1
    for _ in range(levels):
        new = {}
        for (i, j), (s, k) in table.items():
            pass
        def conj(idx, sign):
            return (sign, idx) if idx == 0 else (-sign, idx)
        for i in range(dim):
            for j in range(dim):
                s, k = table[(i, j)]
                # (a,0)(b,0) = (ab, 0)
                new[(i, j)] = (s, k)
                # (a,0)(0,b) = (0, b a)
                s2, k2 = table[(j, i)]
                new[(i, j + dim)] = (s2, k2 + dim)
                # (0,a)(b,0) = (0, a conj(b))
                cs, cj = conj(j, 1)
                s3, k3 = table[(i, cj)]
                new[(i + dim, j)] = (cs * s3, k3 + dim)
                # (0,a)(0,b) = (-conj(b) a, 0)
                cs, cj = conj(j, 1)
                s4, k4 = table[(cj, i)]
                new[(i + dim, j + dim)] = (-cs * s4, k4)
        table = new
        dim *= 2
    return table


class Spinor:
    """Real 8-component spinor with the Euclidean inner product."""

    __slots__ = ("components",)

    def __init__(self, components):
        self.components = np.asarray(components, dtype=float)
        if self.components.shape != (8,):
            raise ValueError("spinor needs 8 real components")

    def inner(self, other):
        return float(self.components @ other.components)

    def norm(self):
        return float(np.linalg.norm(self.components))

    def __add__(self, other):
        return Spinor(self.components + other.components)

    def __sub__(self, other):
        return Spinor(self.components - other.components)

    def __neg__(self):
        return Spinor(-self.components)

    def scale(self, c):
        return Spinor(self.components * c)

    def __rmul__(self, c):
        return self.scale(c)

    def approx_eq(self, other, tol=1e-12):
        return (self - other).norm() <= tol * (1.0 + self.norm() + other.norm())

    def __repr__(self):
        return f"Spinor({np.array2string(self.components, precision=6)})"


class GammaRep:
    """Seven 8x8 generators with gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij."""

    __slots__ = ("gamma",)

    def __init__(self, gamma):
        self.gamma = [np.asarray(g, dtype=float) for g in gamma]

    def monomial_matrix(self, index):
        """Matrix of gamma_{i1} ... gamma_{ik} for an increasing multi-index."""
        out = np.eye(8)
        for i in index:
            out = out @ self.gamma[i - 1]
        return out


def build_gamma():
    """Deterministic Cl(7) generators from octonion left multiplication.

    Negates all generators once if the fundamental form's action spectrum
    comes out as {+7, -1} instead of the pinned {-7, +1}.
    """
    table = _cayley_dickson_table(3)
    gamma = []
    for i in range(1, 8):
        m = np.zeros((8, 8))
        for j in range(8):
            s, k = table[(i, j)]
            m[k, j] = s
        gamma.append(m)
    rep = GammaRep(gamma)
    m = action_matrix(standard_omega3(), rep)
    if np.linalg.eigvalsh(m).max() > 6.0:
        rep = GammaRep([-g for g in rep.gamma])
    return rep


@lru_cache(maxsize=1)
def gamma_rep():
    return build_gamma()


def action_matrix(a, rep=None):
    """8x8 matrix of the Clifford action of a k-form in an orthonormal frame."""
    rep = rep or gamma_rep()
    out = np.zeros((8, 8))
    for index, coeff in a.coeffs.items():
        out += jet_value(coeff) * rep.monomial_matrix(index)
    return out


def act(a, psi, rep=None):
    """Clifford action of a form on a spinor (orthonormal frame assumed)."""
    return Spinor(action_matrix(a, rep) @ psi.components)


def canonical_spinor(omega, rep=None, eig_tol=1e-8):
    """Unit eigenspinor of the omega-action with eigenvalue -7.

    Raises NotG2FormError when -7 is absent or not simple, which happens
    exactly when ``omega`` is not a G2 form expressed in an orthonormal
    frame of its own metric.
    """
    m = action_matrix(omega, rep)
    vals, vecs = np.linalg.eigh(m)
    if abs(vals[0] + 7.0) > eig_tol * 7.0:
        raise NotG2FormError(f"omega action has lowest eigenvalue {vals[0]:.6f}, expected -7")
    if vals[1] - vals[0] < eig_tol:
        raise NotG2FormError("eigenvalue -7 of the omega action is not simple")
    v = vecs[:, 0]
    lead = int(np.argmax(np.abs(v)))
    if v[lead] < 0:
        v = -v
    return Spinor(v / np.linalg.norm(v))
