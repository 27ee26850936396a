"""Forward-mode jets on chart domains of R^7.

``Jet2`` records value / gradient / Hessian of a scalar quantity at a point
and propagates them exactly through ring arithmetic and smooth univariate
primitives. The ``order`` tag tracks how many derivative slots are still
trustworthy: taking a coefficient-wise exterior derivative consumes one
order, and any request past order 0 raises :class:`JetOrderError` instead
of silently truncating.

``Jet3`` adds the third-derivative slot. It is only used to evaluate
hypersurface immersions, whose first derivatives seed the Jet2 pipeline.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real

import numpy as np

from . import kernels
from .errors import JetOrderError

N = 7

_Z7 = np.zeros(N)
_Z77 = np.zeros((N, N))


def _as_float(x):
    if isinstance(x, Fraction):
        return float(x)
    return float(x)


class Jet2:
    """Second-order jet of a scalar function at a fixed point of R^7."""

    __slots__ = ("value", "grad", "hess", "order")

    def __init__(self, value, grad=None, hess=None, order=2):
        self.value = float(value)
        self.grad = _Z7 if grad is None else grad
        self.hess = _Z77 if hess is None else hess
        self.order = order

    # -- constructors -------------------------------------------------

    @staticmethod
    def constant(c):
        return Jet2(_as_float(c))

    @staticmethod
    def coordinate(p, i):
        """Jet of the coordinate function x_{i+1} at point p (i is 0-based)."""
        g = np.zeros(N)
        g[i] = 1.0
        return Jet2(float(p[i]), g)

    @staticmethod
    def variables(p):
        return [Jet2.coordinate(p, i) for i in range(N)]

    # -- ring arithmetic ----------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet2):
            order = min(self.order, other.order)
            return _trim(Jet2(self.value + other.value, self.grad + other.grad,
                              self.hess + other.hess, order))
        if isinstance(other, (Real, Fraction)):
            return Jet2(self.value + _as_float(other), self.grad, self.hess, self.order)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            order = min(self.order, other.order)
            return _trim(Jet2(self.value - other.value, self.grad - other.grad,
                              self.hess - other.hess, order))
        if isinstance(other, (Real, Fraction)):
            return Jet2(self.value - _as_float(other), self.grad, self.hess, self.order)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (Real, Fraction)):
            return Jet2(_as_float(other) - self.value, -self.grad, -self.hess, self.order)
        return NotImplemented

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess, self.order)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            v, g, h = kernels.jet_mul(self.value, self.grad, self.hess,
                                      other.value, other.grad, other.hess)
            return _trim(Jet2(v, g, h, min(self.order, other.order)))
        if isinstance(other, (Real, Fraction)):
            c = _as_float(other)
            return Jet2(self.value * c, self.grad * c, self.hess * c, self.order)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        if isinstance(other, (Real, Fraction)):
            return self * (1.0 / _as_float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (Real, Fraction)):
            return self.reciprocal() * _as_float(other)
        return NotImplemented

    def __pow__(self, exponent):
        if exponent == 0:
            return Jet2(1.0)
        if exponent == 1:
            return self
        if exponent == 2:
            return self * self
        u = self.value
        return self._compose(u ** exponent,
                             exponent * u ** (exponent - 1),
                             exponent * (exponent - 1) * u ** (exponent - 2))

    # -- univariate primitives ----------------------------------------

    def _compose(self, f0, f1, f2):
        v, g, h = kernels.jet_compose(self.value, self.grad, self.hess, f0, f1, f2)
        return _trim(Jet2(v, g, h, self.order))

    def reciprocal(self):
        u = self.value
        return self._compose(1.0 / u, -1.0 / u ** 2, 2.0 / u ** 3)

    def sqrt(self):
        r = math.sqrt(self.value)
        return self._compose(r, 0.5 / r, -0.25 / (r * self.value))

    def exp(self):
        e = math.exp(self.value)
        return self._compose(e, e, e)

    def log(self):
        u = self.value
        return self._compose(math.log(u), 1.0 / u, -1.0 / u ** 2)

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(c, -s, -c)

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._compose(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._compose(c, s, c)

    # -- differentiation ----------------------------------------------

    def partial(self, i):
        """Jet of the i-th partial derivative; costs one order."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        if self.order == 1:
            return Jet2(self.grad[i], order=0)
        return Jet2(self.grad[i], self.hess[:, i].copy(), order=1)

    # -- utilities -----------------------------------------------------

    def magnitude(self):
        m = abs(self.value)
        if self.order >= 1:
            m = max(m, float(np.max(np.abs(self.grad))))
        if self.order >= 2:
            m = max(m, float(np.max(np.abs(self.hess))))
        return m

    def __repr__(self):
        return f"Jet2({self.value:.6g}, order={self.order})"


def _trim(j):
    # Slots past the order carry no information; keep them zero so later
    # arithmetic never manufactures plausible-looking garbage.
    if j.order < 2 and j.hess is not _Z77:
        j.hess = _Z77
    if j.order < 1 and j.grad is not _Z7:
        j.grad = _Z7
    return j


def jet_value(x):
    """Value part of a ring scalar (Jet2, float, int, Fraction)."""
    if isinstance(x, Jet2):
        return x.value
    return float(x)


def jet_sqrt(x):
    if isinstance(x, Jet2):
        return x.sqrt()
    if isinstance(x, Fraction):
        from fractions import Fraction as F
        num, den = x.numerator, x.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return F(rn, rd)
        raise ValueError(f"no exact rational square root of {x}")
    return math.sqrt(x)


def jet_magnitude(x):
    if isinstance(x, Jet2):
        return x.magnitude()
    return abs(float(x))


_Z777 = np.zeros((N, N, N))


class Jet3:
    """Third-order jet; only needed to seed immersion pipelines.

    ``third[i, j, k]`` is the mixed partial d_i d_j d_k of the scalar.
    """

    __slots__ = ("value", "grad", "hess", "third")

    def __init__(self, value, grad=None, hess=None, third=None):
        self.value = float(value)
        self.grad = _Z7 if grad is None else grad
        self.hess = _Z77 if hess is None else hess
        self.third = _Z777 if third is None else third

    @staticmethod
    def constant(c):
        return Jet3(_as_float(c))

    @staticmethod
    def coordinate(p, i):
        g = np.zeros(N)
        g[i] = 1.0
        return Jet3(float(p[i]), g)

    def __add__(self, other):
        if isinstance(other, Jet3):
            return Jet3(self.value + other.value, self.grad + other.grad,
                        self.hess + other.hess, self.third + other.third)
        if isinstance(other, (Real, Fraction)):
            return Jet3(self.value + _as_float(other), self.grad, self.hess, self.third)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet3):
            return Jet3(self.value - other.value, self.grad - other.grad,
                        self.hess - other.hess, self.third - other.third)
        if isinstance(other, (Real, Fraction)):
            return Jet3(self.value - _as_float(other), self.grad, self.hess, self.third)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Jet3(-self.value, -self.grad, -self.hess, -self.third)

    def __mul__(self, other):
        if isinstance(other, (Real, Fraction)):
            c = _as_float(other)
            return Jet3(self.value * c, self.grad * c, self.hess * c, self.third * c)
        if not isinstance(other, Jet3):
            return NotImplemented
        a, b = self, other
        v = a.value * b.value
        g = a.value * b.grad + b.value * a.grad
        h = (a.value * b.hess + b.value * a.hess
             + np.outer(a.grad, b.grad) + np.outer(b.grad, a.grad))
        t = (a.value * b.third + b.value * a.third
             + np.einsum("ij,k->ijk", a.hess, b.grad)
             + np.einsum("ik,j->ijk", a.hess, b.grad)
             + np.einsum("jk,i->ijk", a.hess, b.grad)
             + np.einsum("ij,k->ijk", b.hess, a.grad)
             + np.einsum("ik,j->ijk", b.hess, a.grad)
             + np.einsum("jk,i->ijk", b.hess, a.grad))
        return Jet3(v, g, h, t)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Real, Fraction)):
            return self * (1.0 / _as_float(other))
        if isinstance(other, Jet3):
            return self * other.reciprocal()
        return NotImplemented

    def _compose(self, f0, f1, f2, f3):
        g, h = self.grad, self.hess
        sym = (np.einsum("i,jk->ijk", g, h)
               + np.einsum("j,ik->ijk", g, h)
               + np.einsum("k,ij->ijk", g, h))
        return Jet3(f0, f1 * g, f1 * h + f2 * np.outer(g, g),
                    f1 * self.third + f2 * sym + f3 * np.einsum("i,j,k->ijk", g, g, g))

    def reciprocal(self):
        u = self.value
        return self._compose(1 / u, -1 / u ** 2, 2 / u ** 3, -6 / u ** 4)

    def sqrt(self):
        u = self.value
        r = math.sqrt(u)
        return self._compose(r, 0.5 / r, -0.25 / (r * u), 0.375 / (r * u * u))

    def __pow__(self, n):
        u = self.value
        return self._compose(u ** n, n * u ** (n - 1),
                             n * (n - 1) * u ** (n - 2),
                             n * (n - 1) * (n - 2) * u ** (n - 3))

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(s, c, -s, -c)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(c, -s, -c, s)

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._compose(s, c, s, c)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._compose(c, s, c, s)

    def partial(self, i):
        """Jet2 of the i-th partial derivative."""
        return Jet2(self.grad[i], self.hess[:, i].copy(), self.third[:, :, i].copy())

    def to_jet2(self):
        return Jet2(self.value, self.grad.copy(), self.hess.copy())

    def __repr__(self):
        return f"Jet3({self.value:.6g})"
