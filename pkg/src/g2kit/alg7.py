"""Exact multilinear algebra on an oriented 7-dimensional inner-product space.

Forms are stored sparsely over strictly increasing multi-indices with
1-based entries. All coefficient arithmetic is generic over a commutative
scalar ring: exact ints and Fractions for the pointwise identity suite,
floats and :class:`~g2kit.jets.Jet2` jets for field evaluation flow through
the same code paths.

Convention notes (pinned by the test suite):
  * ``pairing`` sums over increasing multi-indices only.
  * ``norm_sq_full`` is k! times the pairing - the all-index-tuples sum
    used by the curvature formulas.
  * the Hodge star satisfies a ^ *b = <a, b> vol and is an involution in
    dimension 7.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DegreeError, MetricError
from .jets import Jet2, jet_magnitude, jet_sqrt, jet_value

DIM = 7

#: all strictly increasing index tuples, by degree
SUBSETS = tuple(tuple(combinations(range(1, DIM + 1), k)) for k in range(DIM + 1))
SUBSET_INDEX = tuple({s: i for i, s in enumerate(level)} for level in SUBSETS)

_PRUNE_REL = 1e-14


@lru_cache(maxsize=None)
def merge_sign(left, right):
    """(sign, merged) for e_left ^ e_right; sign 0 when indices repeat."""
    if set(left) & set(right):
        return 0, ()
    inversions = sum(1 for a in left for b in right if a > b)
    merged = tuple(sorted(left + right))
    return (-1) ** inversions, merged


@lru_cache(maxsize=None)
def complement(index):
    """(sign, complement) with sign the parity of (index, complement) vs (1..7)."""
    comp = tuple(i for i in range(1, DIM + 1) if i not in index)
    sign, _ = merge_sign(index, comp)
    return sign, comp


def _is_exact(x):
    return isinstance(x, (int, Fraction))


def validate_multi_index(index, degree):
    if len(index) != degree:
        raise DegreeError(f"multi-index {index} has length {len(index)}, expected {degree}")
    if any(not (1 <= i <= DIM) for i in index):
        raise DegreeError(f"multi-index {index} has entries outside 1..{DIM}")
    if any(index[i] >= index[i + 1] for i in range(len(index) - 1)):
        raise DegreeError(f"multi-index {index} is not strictly increasing")
    return tuple(index)


def _prune(coeffs):
    if not coeffs:
        return coeffs
    if all(_is_exact(c) for c in coeffs.values()):
        return {k: c for k, c in coeffs.items() if c != 0}
    top = max(jet_magnitude(c) for c in coeffs.values())
    if top == 0.0:
        return {}
    cut = _PRUNE_REL * top
    return {k: c for k, c in coeffs.items() if jet_magnitude(c) > cut}


class Form:
    """Alternating k-form, sparse over increasing multi-indices."""

    __slots__ = ("degree", "coeffs")

    def __init__(self, degree, coeffs=None, validate=True):
        if not 0 <= degree <= DIM:
            raise DegreeError(f"degree {degree} outside 0..{DIM}")
        self.degree = degree
        coeffs = dict(coeffs or {})
        if validate:
            coeffs = {validate_multi_index(k, degree): v for k, v in coeffs.items()}
        self.coeffs = _prune(coeffs)

    @classmethod
    def zero(cls, degree):
        return cls(degree, {}, validate=False)

    @classmethod
    def monomial(cls, index, coeff=1):
        return cls(len(index), {tuple(index): coeff})

    @classmethod
    def scalar(cls, value):
        return cls(0, {(): value}, validate=False)

    def __getitem__(self, index):
        return self.coeffs.get(tuple(index), 0)

    def terms(self):
        return sorted(self.coeffs.items())

    def __add__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if other.degree != self.degree:
            raise DegreeError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return Form(self.degree, out, validate=False)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Form(self.degree, {k: -v for k, v in self.coeffs.items()}, validate=False)

    def scale(self, c):
        return Form(self.degree, {k: c * v for k, v in self.coeffs.items()}, validate=False)

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.degree, tuple(self.terms())))

    def is_zero(self):
        return not self.coeffs

    def value_form(self):
        """Copy with every coefficient replaced by its float value part."""
        return Form(self.degree, {k: jet_value(v) for k, v in self.coeffs.items()},
                    validate=False)

    def value_array(self):
        """Dense float vector over SUBSETS[degree] (value parts)."""
        out = np.zeros(len(SUBSETS[self.degree]))
        pos = SUBSET_INDEX[self.degree]
        for k, v in self.coeffs.items():
            out[pos[k]] = jet_value(v)
        return out

    def norm_values(self):
        """Euclidean pairing norm of the value parts; used for residual reporting."""
        return float(np.sqrt(sum(jet_value(v) ** 2 for v in self.coeffs.values())))

    def approx_eq(self, other, tol=1e-12):
        return (self - other).norm_values() <= tol * (1.0 + self.norm_values() + other.norm_values())

    def map_coeffs(self, fn):
        return Form(self.degree, {k: fn(v) for k, v in self.coeffs.items()}, validate=False)

    # -- text record (CLI interchange format) -------------------------

    def to_text(self):
        lines = [f"degree {self.degree}"]
        for k, v in self.terms():
            idx = " ".join(str(i) for i in k)
            val = jet_value(v) if isinstance(v, Jet2) else v
            if isinstance(val, float):
                sval = repr(val)
            elif isinstance(val, Fraction):
                sval = f"{val.numerator}/{val.denominator}"
            else:
                sval = str(val)
            lines.append(f"{idx} {sval}".strip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("degree"):
            raise ValueError("form record must start with 'degree k'")
        degree = int(lines[0].split()[1])
        coeffs = {}
        for ln in lines[1:]:
            parts = ln.split()
            idx = tuple(int(t) for t in parts[:degree])
            coeffs[idx] = _parse_scalar(parts[degree])
        return cls(degree, coeffs)

    def to_record(self):
        return {"degree": self.degree,
                "terms": [[list(k), jet_value(v)] for k, v in self.terms()]}

    def __repr__(self):
        if self.is_zero():
            return f"Form({self.degree}, 0)"
        parts = []
        for k, v in self.terms()[:6]:
            parts.append(f"{v!r}*e{''.join(map(str, k))}")
        tail = " + ..." if len(self.coeffs) > 6 else ""
        return f"Form({self.degree}, {' + '.join(parts)}{tail})"


def _parse_scalar(token):
    try:
        return int(token)
    except ValueError:
        pass
    if "/" in token:
        return Fraction(token)
    return float(token)


def standard_omega3(scalar=int):
    """The fundamental 3-form of the standard G2-structure on R^7."""
    one = scalar(1)
    return Form(3, {
        (1, 2, 7): one, (1, 3, 5): one, (1, 4, 6): -one,
        (2, 3, 6): -one, (2, 4, 5): -one, (3, 4, 7): one, (5, 6, 7): one,
    })


# ---------------------------------------------------------------------------
# metric


def _ring_inv_det(mat):
    """Inverse and determinant of a square ring matrix via Gaussian elimination.

    Exact integer input is promoted to Fraction so the elimination divisions
    stay exact.
    """
    n = len(mat)
    a = [list(row) for row in mat]
    if all(isinstance(a[i][j], int) for i in range(n) for j in range(n)):
        a = [[Fraction(x) for x in row] for row in a]
    inv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    det = 1
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: jet_magnitude(a[r][col]))
        if jet_magnitude(a[pivot][col]) == 0.0:
            raise MetricError("singular metric")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            inv[col], inv[pivot] = inv[pivot], inv[col]
            det = -det
        p = a[col][col]
        det = det * p
        for r in range(n):
            if r == col:
                continue
            f = a[r][col] / p
            for c in range(col, n):
                a[r][c] = a[r][c] - f * a[col][c]
            for c in range(n):
                inv[r][c] = inv[r][c] - f * inv[col][c]
    for r in range(n):
        p = a[r][r]
        for c in range(n):
            inv[r][c] = inv[r][c] / p
    return inv, det


def ring_det(mat):
    """Division-free determinant over the scalar ring (zero-safe).

    Dynamic programming over row subsets: dp[S] is the minor on rows S and
    the first |S| columns.
    """
    n = len(mat)
    dp = {0: 1}
    for col in range(n):
        new = {}
        for subset, minor in dp.items():
            for i in range(n):
                if subset >> i & 1:
                    continue
                entry = mat[i][col]
                sign = 1 if (_popcount_below(subset, i) + col) % 2 == 0 else -1
                term = entry * minor if sign > 0 else -(entry * minor)
                key = subset | (1 << i)
                new[key] = new[key] + term if key in new else term
        dp = new
    return dp[(1 << n) - 1]


def _popcount_below(mask, i):
    return bin(mask & ((1 << i) - 1)).count("1")


class Metric:
    """Symmetric positive-definite 7x7 metric with a chart orientation sign.

    Entries live in the same scalar ring as form coefficients. Derived data
    (inverse, determinant, exterior-power Gram matrices) is cached, so reuse
    one instance for all Hodge stars at a point.
    """

    __slots__ = ("mat", "orientation", "_inv", "_det", "_sqrt_det", "_gram", "_euclidean")

    def __init__(self, mat, orientation=1, check=True):
        self.mat = [list(row) for row in mat]
        if orientation not in (1, -1):
            raise MetricError("orientation must be +1 or -1")
        self.orientation = orientation
        self._inv = None
        self._det = None
        self._sqrt_det = None
        self._gram = {}
        self._euclidean = all(
            _is_exact(self.mat[i][j]) and self.mat[i][j] == (1 if i == j else 0)
            for i in range(DIM) for j in range(DIM))
        if check and not self._euclidean:
            self._validate()

    def _validate(self):
        vals = np.array([[jet_value(self.mat[i][j]) for j in range(DIM)] for i in range(DIM)])
        if not np.allclose(vals, vals.T, rtol=0, atol=1e-9 * (1 + np.abs(vals).max())):
            raise MetricError("metric is not symmetric")
        eig = np.linalg.eigvalsh(0.5 * (vals + vals.T))
        if eig.min() <= 0:
            raise MetricError(f"metric not positive-definite (min eigenvalue {eig.min():.3e})")

    @classmethod
    def euclidean(cls):
        return cls([[1 if i == j else 0 for j in range(DIM)] for i in range(DIM)],
                   check=False)

    @property
    def is_euclidean(self):
        return self._euclidean

    def values(self):
        return np.array([[jet_value(self.mat[i][j]) for j in range(DIM)] for i in range(DIM)])

    def inverse(self):
        if self._inv is None:
            self._inv, self._det = _ring_inv_det(self.mat)
        return self._inv

    def det(self):
        if self._det is None:
            self.inverse()
        return self._det

    def sqrt_det(self):
        if self._sqrt_det is None:
            self._sqrt_det = jet_sqrt(self.det())
        return self._sqrt_det

    def gram_inverse(self, k):
        """Gram matrix of the induced inner product on raised k-forms.

        Entry (I, J) is det(g^{-1}[I, J]); built by Laplace expansion so the
        (k-1)-minors are shared across the whole level.
        """
        if k in self._gram:
            return self._gram[k]
        subs = SUBSETS[k]
        if k == 0:
            gram = [[1]]
        elif k == 1:
            inv = self.inverse()
            gram = [[inv[i - 1][j - 1] for (j,) in subs] for (i,) in subs]
        else:
            prev = self.gram_inverse(k - 1)
            prev_pos = SUBSET_INDEX[k - 1]
            inv = self.inverse()
            gram = []
            for I in subs:
                head = prev_pos[I[:-1]]
                last = I[-1] - 1
                row = []
                for J in subs:
                    acc = None
                    for t in range(k):
                        minor = prev[head][prev_pos[J[:t] + J[t + 1:]]]
                        term = ((-1) ** (k - 1 + t)) * (inv[last][J[t] - 1] * minor)
                        acc = term if acc is None else acc + term
                    row.append(acc)
                gram.append(row)
        self._gram[k] = gram
        return gram


def volume_form(m):
    """vol_g = orientation * sqrt(det g) e_1...e_7."""
    if m.is_euclidean:
        return Form.monomial(tuple(range(1, DIM + 1)), m.orientation)
    return Form(DIM, {tuple(range(1, DIM + 1)): m.orientation * m.sqrt_det()},
                validate=False)


# ---------------------------------------------------------------------------
# operations


def wedge(a, b):
    """Exterior product a ^ b."""
    k, l = a.degree, b.degree
    if k + l > DIM:
        raise DegreeError(f"wedge degree {k}+{l} exceeds {DIM}")
    out = {}
    for ka, va in a.coeffs.items():
        for kb, vb in b.coeffs.items():
            sign, merged = merge_sign(ka, kb)
            if sign == 0:
                continue
            term = va * vb if sign > 0 else -(va * vb)
            out[merged] = out[merged] + term if merged in out else term
    return Form(k + l, out, validate=False)


def interior(v, a):
    """Interior product v -| a of a vector (7 scalar components) into a k-form."""
    if a.degree < 1:
        raise DegreeError("interior product needs degree >= 1")
    out = {}
    for idx, coeff in a.coeffs.items():
        for t, i in enumerate(idx):
            vi = v[i - 1]
            if jet_magnitude(vi) == 0.0:
                continue
            key = idx[:t] + idx[t + 1:]
            term = vi * coeff if t % 2 == 0 else -(vi * coeff)
            out[key] = out[key] + term if key in out else term
    return Form(a.degree - 1, out, validate=False)


def hodge_star(a, m):
    """Hodge star (*a)_(comp I) = orientation sqrt(det g) eps(I) (gram a)_I."""
    k = a.degree
    if m.is_euclidean:
        out = {}
        for idx, coeff in a.coeffs.items():
            sign, comp = complement(idx)
            s = sign * m.orientation
            out[comp] = coeff if s > 0 else -coeff
        return Form(DIM - k, out, validate=False)
    gram = m.gram_inverse(k)
    pos = SUBSET_INDEX[k]
    scale = m.sqrt_det()
    out = {}
    for I in SUBSETS[k]:
        row = gram[pos[I]]
        acc = None
        for J, cJ in a.coeffs.items():
            term = row[pos[J]] * cJ
            acc = term if acc is None else acc + term
        if acc is None:
            continue
        sign, comp = complement(I)
        acc = scale * acc
        if sign * m.orientation < 0:
            acc = -acc
        out[comp] = acc
    return Form(DIM - k, out, validate=False)


def pairing(a, b, m=None):
    """Increasing-multi-index inner product (a, b)_g of equal-degree forms."""
    if a.degree != b.degree:
        raise DegreeError("pairing needs equal degrees")
    if m is None or m.is_euclidean:
        acc = None
        for k, va in a.coeffs.items():
            if k in b.coeffs:
                term = va * b.coeffs[k]
                acc = term if acc is None else acc + term
        return 0 if acc is None else acc
    gram = m.gram_inverse(a.degree)
    pos = SUBSET_INDEX[a.degree]
    acc = None
    for I, va in a.coeffs.items():
        row = gram[pos[I]]
        for J, vb in b.coeffs.items():
            term = va * (row[pos[J]] * vb)
            acc = term if acc is None else acc + term
    return 0 if acc is None else acc


def norm_sq_full(a, m=None):
    """Full index-tuple sum norm: k! times the increasing-index pairing."""
    return math.factorial(a.degree) * pairing(a, a, m)


def transform(a, mat):
    """Pullback of a under the linear map with matrix ``mat``.

    The result a' satisfies a'(v_1,...,v_k) = a(mat v_1, ..., mat v_k); its
    coefficients are minor determinants of ``mat`` against the old ones.
    """
    k = a.degree
    if k == 0:
        return a
    out = {}
    for J in SUBSETS[k]:
        acc = None
        for I, coeff in a.coeffs.items():
            minor = _subdet(mat, I, J)
            if minor is None:
                continue
            term = minor * coeff
            acc = term if acc is None else acc + term
        if acc is not None:
            out[J] = acc
    return Form(k, out, validate=False)


def _subdet(mat, rows, cols):
    """det of mat[rows, cols] (1-based index tuples) over the scalar ring."""
    k = len(rows)
    if k == 1:
        return mat[rows[0] - 1][cols[0] - 1]
    if k == 2:
        a, b = rows[0] - 1, rows[1] - 1
        c, d = cols[0] - 1, cols[1] - 1
        return mat[a][c] * mat[b][d] - mat[a][d] * mat[b][c]
    acc = None
    for t in range(k):
        entry = mat[rows[0] - 1][cols[t] - 1]
        minor = _subdet(mat, rows[1:], cols[:t] + cols[t + 1:])
        term = entry * minor if t % 2 == 0 else -(entry * minor)
        acc = term if acc is None else acc + term
    return acc


def form_to_dense(a):
    """Fully antisymmetric dense value array of shape (7,)*k."""
    k = a.degree
    out = np.zeros((DIM,) * k)
    if k == 0:
        return np.array(jet_value(a.coeffs.get((), 0)))
    from itertools import permutations
    for idx, coeff in a.coeffs.items():
        val = jet_value(coeff)
        for perm in permutations(range(k)):
            sign = _perm_sign(perm)
            pos = tuple(idx[perm[t]] - 1 for t in range(k))
            out[pos] = sign * val
    return out


@lru_cache(maxsize=None)
def _perm_sign(perm):
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign
