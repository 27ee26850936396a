"""Jet-arithmetic scalar and form fields on chart domains of R^7.

Fields evaluate to second-order jets at a point; the exterior derivative,
codifferential and Laplacian then read derivative slots instead of finite
differencing, so every identity check downstream is exact up to rounding.
``StructureJet`` bundles the whole per-point pipeline of a G2-structure
field (metric, Lee form, torsion, classification, canonical spinor) with
shared caching.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import cached_property

import numpy as np

from .alg7 import DIM, Form, Metric, hodge_star, pairing, standard_omega3, wedge
from .errors import DomainError, JetOrderError, NotIntegrableError
from .g2point import (G2PointStructure, classify, lee_form, metric_from_form,
                      structure_invariants, w2_residual)
from .jets import Jet2, Jet3, jet_value

_PRIMES = (2, 3, 5, 7, 11, 13, 17)


class Box:
    """Axis-aligned chart domain."""

    def __init__(self, lows, highs):
        self.lows = np.asarray(lows, dtype=float)
        self.highs = np.asarray(highs, dtype=float)
        if self.lows.shape != (DIM,) or self.highs.shape != (DIM,):
            raise ValueError("chart box needs 7 bounds per side")
        if np.any(self.lows >= self.highs):
            raise ValueError("chart box is empty")

    @classmethod
    def centered(cls, half_width):
        return cls([-half_width] * DIM, [half_width] * DIM)

    def contains(self, p, slack=1e-12):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lows - slack) and np.all(p <= self.highs + slack))

    def require(self, p):
        if not self.contains(p):
            raise DomainError(f"point {np.asarray(p)} outside chart box")

    def center(self):
        return 0.5 * (self.lows + self.highs)

    def to_record(self):
        return {"lows": self.lows.tolist(), "highs": self.highs.tolist()}


def _radical_inverse(i, base):
    out, f = 0.0, 1.0 / base
    while i > 0:
        out += f * (i % base)
        i //= base
        f /= base
    return out


def halton_points(box, n, seed=0):
    """Deterministic low-discrepancy points in the (slightly shrunk) box.

    The seed offsets the start index of the Halton sequence, so different
    seeds give different but reproducible point sets.
    """
    start = 23 + 101 * int(seed)
    span = box.highs - box.lows
    pts = np.empty((n, DIM))
    for row in range(n):
        u = np.array([_radical_inverse(start + row, b) for b in _PRIMES])
        pts[row] = box.lows + span * (0.05 + 0.9 * u)
    return pts


# ---------------------------------------------------------------------------
# scalar fields


class ScalarField:
    """Scalar function on a chart, evaluated as a jet."""

    def __init__(self, fn, chart, fn3=None, label=None):
        self._fn = fn
        self._fn3 = fn3
        self.chart = chart
        self.label = label

    def jet(self, p):
        self.chart.require(p)
        return self._fn(np.asarray(p, dtype=float))

    def jet3(self, p):
        if self._fn3 is None:
            raise JetOrderError(f"field {self.label or self} has no third-order rule")
        self.chart.require(p)
        return self._fn3(np.asarray(p, dtype=float))

    def value(self, p):
        return self.jet(p).value

    def __add__(self, other):
        if isinstance(other, ScalarField):
            f3 = None
            if self._fn3 is not None and other._fn3 is not None:
                f3 = lambda p: self._fn3(p) + other._fn3(p)
            return ScalarField(lambda p: self._fn(p) + other._fn(p), self.chart, f3)
        return ScalarField(lambda p: self._fn(p) + other, self.chart,
                           None if self._fn3 is None else (lambda p: self._fn3(p) + other))

    def scale(self, c):
        return ScalarField(lambda p: self._fn(p) * c, self.chart,
                           None if self._fn3 is None else (lambda p: self._fn3(p) * c),
                           label=self.label)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    @classmethod
    def constant(cls, c, chart):
        return cls(lambda p: Jet2.constant(c), chart, lambda p: Jet3.constant(c),
                   label=f"const {c}")

    def gradient_form(self, p):
        """dPhi at p as a 1-form of order-1 jets."""
        j = self.jet(p)
        return Form(1, {(i + 1,): j.partial(i) for i in range(DIM)}, validate=False)


class PolynomialField(ScalarField):
    """Polynomial in x1..x7 with rational or float coefficients.

    Jets of any order are analytic, so this is the workhorse for example
    structures and custom CLI input.
    """

    def __init__(self, monomials, chart):
        self.monomials = {tuple(k): float(v) for k, v in monomials.items() if float(v) != 0.0}
        super().__init__(self._jet2, chart, self._jet3,
                         label=self.to_text() or "0")

    def _partial_products(self, p, top_order):
        # per-monomial value plus derivative tables up to top_order
        yield from ()

    def _eval(self, p, order):
        value = 0.0
        grad = np.zeros(DIM)
        hess = np.zeros((DIM, DIM))
        third = np.zeros((DIM, DIM, DIM)) if order >= 3 else None
        for exps, coeff in self.monomials.items():
            value += coeff * _mono(p, exps)
            for i in range(DIM):
                di = _mono_d(p, exps, (i,))
                if di is None:
                    continue
                grad[i] += coeff * di
                for j in range(i, DIM):
                    dij = _mono_d(p, exps, (i, j))
                    if dij is None:
                        continue
                    hess[i, j] += coeff * dij
                    if order >= 3:
                        for k in range(j, DIM):
                            dijk = _mono_d(p, exps, (i, j, k))
                            if dijk is not None:
                                third[i, j, k] += coeff * dijk
        hess = hess + np.triu(hess, 1).T
        if order >= 3:
            full = np.zeros((DIM, DIM, DIM))
            for i in range(DIM):
                for j in range(i, DIM):
                    for k in range(j, DIM):
                        v = third[i, j, k]
                        for perm in ((i, j, k), (i, k, j), (j, i, k),
                                     (j, k, i), (k, i, j), (k, j, i)):
                            full[perm] = v
            third = full
        return value, grad, hess, third

    def _jet2(self, p):
        v, g, h, _ = self._eval(p, 2)
        return Jet2(v, g, h)

    def _jet3(self, p):
        v, g, h, t = self._eval(p, 3)
        return Jet3(v, g, h, t)

    def to_text(self):
        parts = []
        for exps, coeff in sorted(self.monomials.items()):
            factors = " ".join(
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}"
                for i, e in enumerate(exps) if e)
            c = f"{coeff:g}"
            parts.append(f"{c} {factors}".strip())
        return " + ".join(parts).replace("+ -", "- ")

    @classmethod
    def parse(cls, text, chart):
        """Parse 'monomial list' syntax, e.g. ``3/2 x1^2 x3 - 2 x2 + 1/4``."""
        text = text.strip()
        if not text:
            return cls({}, chart)
        chunks = re.findall(r"[+-]?[^+-]+", text.replace("**", "^"))
        monomials = {}
        for chunk in chunks:
            chunk = chunk.strip().replace("*", " ")
            if not chunk:
                continue
            sign = 1.0
            if chunk[0] in "+-":
                sign = -1.0 if chunk[0] == "-" else 1.0
                chunk = chunk[1:].strip()
            coeff = sign
            exps = [0] * DIM
            for tok in chunk.split():
                m = re.fullmatch(r"x([1-7])(?:\^(\d+))?", tok)
                if m:
                    exps[int(m.group(1)) - 1] += int(m.group(2) or 1)
                else:
                    coeff *= float(Fraction(tok))
            key = tuple(exps)
            monomials[key] = monomials.get(key, 0.0) + coeff
        return cls(monomials, chart)

    @classmethod
    def random_cubic(cls, chart, seed=0, amplitude=0.12, n_terms=10):
        """Sparse random cubic used by the conformally parallel family."""
        rng = np.random.default_rng(seed)
        monomials = {}
        for _ in range(n_terms):
            deg = int(rng.integers(1, 4))
            exps = [0] * DIM
            for _ in range(deg):
                exps[int(rng.integers(0, DIM))] += 1
            coeff = float(rng.uniform(-amplitude, amplitude))
            key = tuple(exps)
            monomials[key] = monomials.get(key, 0.0) + coeff
        return cls(monomials, chart)


def _mono(p, exps):
    out = 1.0
    for x, e in zip(p, exps):
        if e:
            out *= x ** e
    return out


def _mono_d(p, exps, dirs):
    """Monomial derivative along ``dirs``; None when it vanishes identically."""
    exps = list(exps)
    factor = 1.0
    for d in dirs:
        if exps[d] == 0:
            return None
        factor *= exps[d]
        exps[d] -= 1
    return factor * _mono(p, exps)


def exp_field(base, scale=1.0):
    """e^{scale * base} as a ScalarField (second-order jets)."""
    def fn(p):
        return (base._fn(p) * scale).exp()
    return ScalarField(fn, base.chart, label=f"exp({scale}*{base.label})")


# ---------------------------------------------------------------------------
# form fields


class FormField:
    """k-form with jet-evaluable coefficients, via a joint per-point evaluator."""

    def __init__(self, degree, chart, jets_fn, label=None):
        self.degree = degree
        self.chart = chart
        self._jets_fn = jets_fn
        self.label = label

    @classmethod
    def from_scalar_fields(cls, degree, coeff_fields, chart, label=None):
        def fn(p):
            return Form(degree, {idx: f.jet(p) for idx, f in coeff_fields.items()},
                        validate=False)
        return cls(degree, chart, fn, label=label)

    @classmethod
    def constant(cls, form, chart, label=None):
        jets = form.map_coeffs(lambda c: Jet2.constant(jet_value(c)))
        return cls(form.degree, chart, lambda p: jets, label=label)

    def jets_at(self, p):
        self.chart.require(p)
        return self._jets_fn(np.asarray(p, dtype=float))

    def values_at(self, p):
        return self.jets_at(p).value_form()


def form_d_jets(form):
    """Exterior derivative of a jet-coefficient form at a point; costs one order."""
    from .alg7 import merge_sign
    out = {}
    for idx, coeff in form.coeffs.items():
        if not isinstance(coeff, Jet2):
            continue  # exact constants differentiate to zero
        for i in range(1, DIM + 1):
            if i in idx:
                continue
            sign, merged = merge_sign((i,), idx)
            term = coeff.partial(i - 1)
            if sign < 0:
                term = -term
            out[merged] = out[merged] + term if merged in out else term
    return Form(form.degree + 1, out, validate=False)


def d(field):
    """Exterior derivative of a FormField."""
    if field.degree >= DIM:
        from .errors import DegreeError
        raise DegreeError("cannot take d of a top-degree form")
    return FormField(field.degree + 1, field.chart,
                     lambda p: form_d_jets(field.jets_at(p)),
                     label=f"d({field.label})" if field.label else None)


def star_field(field, metric_field):
    return FormField(DIM - field.degree, field.chart,
                     lambda p: hodge_star(field.jets_at(p), metric_field(p)))


def codifferential(field, metric_field):
    """delta = (-1)^k * d * on k-forms in dimension 7."""
    if field.degree < 1:
        from .errors import DegreeError
        raise DegreeError("codifferential needs degree >= 1")
    d_star = d(star_field(field, metric_field))
    sign = (-1) ** field.degree

    def fn(p):
        out = hodge_star(d_star.jets_at(p), metric_field(p))
        return out.scale(sign) if sign < 0 else out

    return FormField(field.degree - 1, field.chart, fn,
                     label=f"delta({field.label})" if field.label else None)


def laplacian(phi, metric_field):
    """Geometer's Laplacian delta d phi (positive on R^7 means -trace Hess)."""
    grad = FormField(1, phi.chart,
                     lambda p: phi.gradient_form(p), label="dPhi")
    delta_grad = codifferential(grad, metric_field)

    def fn(p):
        f = delta_grad.jets_at(p)
        c = f.coeffs.get((), 0)
        return c if isinstance(c, Jet2) else Jet2.constant(c)

    return ScalarField(fn, phi.chart, label=f"laplacian({phi.label})")


def euclidean_metric_field(p=None):
    return Metric.euclidean()


# ---------------------------------------------------------------------------
# G2-structure fields


class G2StructureField:
    """Fundamental 3-form field with lazily derived pointwise data."""

    def __init__(self, omega_field, name="custom", params=None, conformal_exponent=None):
        self.omega_field = omega_field
        self.chart = omega_field.chart
        self.name = name
        self.params = dict(params or {})
        #: ScalarField f when the structure is e^{3f} (flat or other base)
        self.conformal_exponent = conformal_exponent

    def at(self, p):
        return StructureJet(self, np.asarray(p, dtype=float))

    def conformal(self, f):
        """Conformal transform omega -> e^{3f} omega of this field."""
        base = self.omega_field

        def fn(p):
            scale = (f._fn(p) * 3.0).exp()
            return base.jets_at(p).map_coeffs(lambda c: scale * c if isinstance(c, Jet2)
                                              else scale * jet_value(c))

        new_exp = f if self.conformal_exponent is None else (self.conformal_exponent + f)
        return G2StructureField(
            FormField(3, self.chart, fn, label=f"e^(3f) {base.label}"),
            name=f"conformal({self.name})",
            params={**self.params, "f": getattr(f, "label", "f")},
            conformal_exponent=new_exp)

    def sample_points(self, n, seed=0):
        return halton_points(self.chart, n, seed)


class StructureJet:
    """All pointwise derived data of a G2-structure field at one point.

    Properties are cached, so one instance per report point shares the
    metric, frame and star computations across every identity check.
    """

    def __init__(self, field, p):
        self.field = field
        self.p = p

    @cached_property
    def omega(self):
        return self.field.omega_field.jets_at(self.p)

    @cached_property
    def metric(self):
        return metric_from_form(self.omega)

    @cached_property
    def structure(self):
        return G2PointStructure(self.omega, self.metric)

    @cached_property
    def d_omega(self):
        return form_d_jets(self.omega)

    @cached_property
    def star_omega(self):
        return hodge_star(self.omega, self.metric)

    @cached_property
    def d_star_omega(self):
        return form_d_jets(self.star_omega)

    @cached_property
    def w1_pairing(self):
        return pairing(self.d_omega, self.star_omega, self.metric)

    @cached_property
    def theta(self):
        # c2 convention check (both Lee-form expressions) runs every time
        return lee_form(self.structure, self.d_omega, self.d_star_omega)

    @cached_property
    def w2(self):
        return w2_residual(self.structure, self.d_star_omega, self.theta)

    @cached_property
    def torsion(self):
        return self.invariants.torsion

    @cached_property
    def invariants(self):
        return structure_invariants(self.structure, self.d_omega, self.d_star_omega)

    @cached_property
    def d_torsion(self):
        return form_d_jets(self.torsion)

    @cached_property
    def d_theta(self):
        return form_d_jets(self.theta)

    @cached_property
    def delta_theta(self):
        """delta theta = -*d*theta (value; theta only carries one more order)."""
        star_theta = hodge_star(self.theta, self.metric)
        val = hodge_star(form_d_jets(star_theta), self.metric)
        return -jet_value(val.coeffs.get((), 0))

    @cached_property
    def classification(self):
        return classify(self.structure, self.d_omega, self.d_star_omega,
                        d_theta=self.d_theta)

    @cached_property
    def psi0(self):
        return self.structure.canonical_spinor()

    def require_integrable(self, tol=1e-7):
        if self.w2 > tol:
            raise NotIntegrableError(
                f"structure not integrable at {self.p} (W2 residual {self.w2:.3e})",
                residual=self.w2)


def structure_invariant_fields(struct_field, p, tol=1e-7):
    """G2Invariants plus the jet context at p (torsion and Lee jets included)."""
    sj = struct_field.at(p)
    sj.require_integrable(tol)
    return sj.invariants, sj


# ---------------------------------------------------------------------------
# example constructors


def default_chart():
    return Box.centered(0.45)


def make_parallel(chart=None):
    """Constant fundamental form: d omega = 0, d * omega = 0."""
    chart = chart or default_chart()
    return G2StructureField(
        FormField.constant(standard_omega3(float), chart, label="omega0"),
        name="parallel")


def make_conformally_parallel(f, chart=None):
    """omega = e^{3f} omega_0; integrable with Lee form 4 df."""
    if chart is None:
        chart = f.chart
    base = make_parallel(chart)
    out = base.conformal(f)
    out.name = "conformal"
    out.conformal_exponent = f
    return out


def conformal_torsion_weight_check(base_field, f, p):
    """Evaluate the conformal-torsion law under both plausible weights.

    The torsion of the transformed structure is recomputed from scratch and
    compared against e^{w f} (T + *(df ^ omega)) for w in {2, 4} (star and
    wedge of the base structure). Returns the relative residual per weight;
    nothing is assumed, callers record which (if either) matches.
    """
    sj = base_field.at(p)
    sj_bar = base_field.conformal(f).at(p)
    t_bar = sj_bar.torsion.value_form()
    df = f.gradient_form(p).value_form()
    candidate_core = (sj.torsion.value_form()
                      + hodge_star(wedge(df, sj.omega.value_form()),
                                   _value_metric_of(sj.metric)))
    fval = f.value(p)
    out = {}
    scale = 1.0 + t_bar.norm_values()
    for w in (2, 4):
        cand = candidate_core.scale(float(np.exp(w * fval)))
        out[f"e^{w}f"] = (t_bar - cand).norm_values() / scale
    return out


def delta_omega_ratio(sj):
    """Fitted constants of ||delta omega||^2 = c ||theta||^2 at a point.

    Returns (pairing-convention c, full-sum c). delta omega is computed as
    *d*omega; the ratio is insensitive to the codifferential sign.
    """
    import math
    m = _value_metric_of(sj.metric)
    delta_omega = hodge_star(sj.d_star_omega, sj.metric).value_form()
    num = jet_value(pairing(delta_omega, delta_omega, m))
    th = sj.theta.value_form()
    den = jet_value(pairing(th, th, m))
    if den == 0:
        return None, None
    return num / den, math.factorial(2) * num / den


def _value_metric_of(m):
    return m if m.is_euclidean else Metric(m.values(), m.orientation, check=False)


def make_w2_contaminated(chart=None, strength=0.35):
    """omega_0 plus a perturbation with a nonzero W2 component (negative tests)."""
    chart = chart or default_chart()
    w0 = standard_omega3(float)

    def fn(p):
        x = Jet2.variables(p)
        pert = Form(3, {(1, 2, 4): strength * x[1], (1, 3, 6): strength * x[4]},
                    validate=False)
        return w0.map_coeffs(lambda c: Jet2.constant(c)) + pert

    return G2StructureField(FormField(3, chart, fn, label="omega0 + W2 bump"),
                            name="w2-contaminated")
