"""Packed-array linear algebra for jet-valued symmetric matrices.

A symmetric 7x7 matrix of Jet2 entries is unpacked into value (7,7),
gradient (7,7,7) and Hessian (7,7,7,7) arrays (derivative directions
first), processed with einsum-based matrix calculus, and repacked. Used
for the metric square root that defines the adapted orthonormal frame and
its derivatives.
"""

from __future__ import annotations

import numpy as np

from .errors import FrameError
from .jets import Jet2

N = 7


def pack(mat):
    """(values, grads, hess, order) arrays from a matrix of Jet2/number entries."""
    v = np.zeros((N, N))
    g = np.zeros((N, N, N))
    h = np.zeros((N, N, N, N))
    order = 2
    for i in range(N):
        for j in range(N):
            e = mat[i][j]
            if isinstance(e, Jet2):
                v[i, j] = e.value
                g[:, i, j] = e.grad
                h[:, :, i, j] = e.hess
                order = min(order, e.order)
            else:
                v[i, j] = float(e)
    return v, g, h, order


def unpack(v, g, h, order=2):
    return [[Jet2(v[i, j], g[:, i, j].copy(), h[:, :, i, j].copy(), order)
             for j in range(N)] for i in range(N)]


def _sylvester_factory(s_val):
    """Solver for S X + X S = B given the symmetric positive-definite value S."""
    lam, q = np.linalg.eigh(s_val)
    if lam.min() <= 0:
        raise FrameError("metric square root degenerated (non-positive eigenvalue)")
    denom = lam[:, None] + lam[None, :]

    def solve(b):
        # b may carry leading batch axes.
        tb = np.einsum("ia,...ij,jb->...ab", q, b, q)
        return np.einsum("ia,...ab,jb->...ij", q, tb / denom, q)

    return solve


def sqrt_jets(v, g, h):
    """Jets of S = v^{1/2} for a positive-definite symmetric jet matrix."""
    lam, q = np.linalg.eigh(v)
    if lam.min() <= 0:
        raise FrameError("matrix square root of a non positive-definite matrix")
    s_val = (q * np.sqrt(lam)) @ q.T
    solve = _sylvester_factory(s_val)
    s_g = solve(g)
    rhs = h - np.einsum("kij,ljm->klim", s_g, s_g) - np.einsum("lij,kjm->klim", s_g, s_g)
    s_h = solve(rhs)
    return s_val, s_g, s_h


def inv_jets(v, g, h):
    """Jets of the matrix inverse."""
    iv = np.linalg.inv(v)
    ig = -np.einsum("ia,kab,bj->kij", iv, g, iv)
    ih = (-np.einsum("ia,klab,bj->klij", iv, h, iv)
          + np.einsum("ia,kab,bc,lcd,dj->klij", iv, g, iv, g, iv)
          + np.einsum("ia,lab,bc,kcd,dj->klij", iv, g, iv, g, iv))
    return iv, ig, ih


def inv_sqrt_jets(v, g, h):
    """Jets of F = v^{-1/2}; F is the adapted-frame matrix for metric v."""
    s_val, s_g, s_h = sqrt_jets(v, g, h)
    return inv_jets(s_val, s_g, s_h)


def det_jets(v, g, h):
    """Jets of det(v) via Jacobi's formula."""
    iv = np.linalg.inv(v)
    d = float(np.linalg.det(v))
    tr_k = np.einsum("ij,kji->k", iv, g)
    d_g = d * tr_k
    term = (np.einsum("k,l->kl", tr_k, tr_k)
            - np.einsum("ij,kjm,mn,lni->kl", iv, g, iv, g)
            + np.einsum("ij,klji->kl", iv, h))
    d_h = d * term
    return d, d_g, d_h
