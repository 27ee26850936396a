"""Immersed hypersurfaces of R^8 and their induced G2-structures.

The constant Cayley 4-form on R^8 is built as e_8 ^ omega_0 + *omega_0 in
the split basis, which makes the flat-hyperplane calibration exact: the
unit normal's contraction pulled back to the chart is the standard
fundamental form. Shape-operator data feeds the Gauss-equation scalar
curvature, the package's independent curvature oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alg7 import DIM, Form, Metric, hodge_star, ring_det, standard_omega3, _subdet
from .errors import ImmersionError
from .fields import Box, FormField, G2StructureField, PolynomialField
from .g2point import G2PointStructure, metric_from_form
from .jets import Jet2, Jet3, jet_value


def cayley_form():
    """Coefficients of the Cayley 4-form over increasing 4-tuples of 1..8."""
    w = standard_omega3(float)
    table = {}
    for (i, j, k), c in w.coeffs.items():
        table[(i, j, k, 8)] = -float(c)  # e_8 ^ e_ijk = -e_ijk8
    for key, c in hodge_star(w, Metric.euclidean()).coeffs.items():
        table[key] = float(c)
    return table


_CAYLEY = cayley_form()


class Immersion:
    """Chart map U \\subset R^7 -> R^8 with third-order jet evaluation."""

    def __init__(self, components, chart, name="immersion", params=None):
        if len(components) != 8:
            raise ImmersionError("immersion needs 8 component functions")
        self.components = list(components)
        self.chart = chart
        self.name = name
        self.params = dict(params or {})
        self.order = 3

    def jets3(self, p):
        self.chart.require(p)
        p = np.asarray(p, dtype=float)
        return [c(p) for c in self.components]

    def differential(self, p):
        """(8 x 7 Jet2 Jacobian, Jet3 components) at p."""
        comps = self.jets3(p)
        jac = [[comps[a].partial(i) for i in range(DIM)] for a in range(8)]
        return jac, comps


def _normal_jets(jac):
    """Unit normal with det(dF(e_1),...,dF(e_7), N) > 0, as Jet2 entries."""
    minors = []
    for a in range(8):
        rows = [jac[b] for b in range(8) if b != a]
        minors.append(ring_det(rows))
    # sign (-1)^a (1-based) makes det([J | N]) = sum minors^2 > 0
    raw = [minors[a] if (a + 1) % 2 == 0 else -minors[a] for a in range(8)]
    norm_sq = None
    for x in raw:
        term = x * x
        norm_sq = term if norm_sq is None else norm_sq + term
    scale = np.array([[jet_value(jac[a][i]) for i in range(DIM)] for a in range(8)])
    col_scale = float(np.prod(np.linalg.norm(scale, axis=0))) or 1.0
    if jet_value(norm_sq) <= (1e-9 * col_scale) ** 2:
        raise ImmersionError("immersion differential is rank-deficient")
    inv_norm = norm_sq.sqrt().reciprocal() if isinstance(norm_sq, Jet2) \
        else 1.0 / np.sqrt(norm_sq)
    return [x * inv_norm for x in raw]


@dataclass
class ShapeData:
    """First and second fundamental data of the immersion at a point."""

    normal: np.ndarray        # unit normal values (8,)
    metric: np.ndarray        # pullback metric values (7,7)
    shape: np.ndarray         # shape operator S^j_i = dN convention, (7,7)
    trace: float
    traceless: np.ndarray

    @property
    def mean_curvature(self):
        return self.trace / DIM

    def gauss_scalar(self):
        """Scalar curvature from the Gauss equation: (tr S)^2 - tr(S^2)."""
        return self.trace ** 2 - float(np.trace(self.shape @ self.shape))


def shape_data(imm, p):
    """Normal, pullback metric and shape operator at p.

    The shape operator follows the dN convention (S = +Id on the unit
    sphere's outward-oriented graph chart); the Gauss-equation scalar is
    insensitive to this sign.
    """
    jac, _ = imm.differential(p)
    n_jets = _normal_jets(jac)
    jv = np.array([[jet_value(jac[a][i]) for i in range(DIM)] for a in range(8)])
    g = jv.T @ jv
    dn = np.zeros((8, DIM))
    for a in range(8):
        e = n_jets[a]
        if isinstance(e, Jet2):
            dn[a] = e.grad
    rhs = jv.T @ dn    # <J_k, d_i N>, indexed [k, i]
    s = np.linalg.solve(g, rhs)
    tr = float(np.trace(s))
    return ShapeData(normal=np.array([jet_value(x) for x in n_jets]),
                     metric=g, shape=s, trace=tr,
                     traceless=s - (tr / DIM) * np.eye(DIM))


def _omega_jets(imm, p):
    jac, _ = imm.differential(p)
    n_jets = _normal_jets(jac)
    cols = [n_jets] + [[jac[a][i] for a in range(8)] for i in range(DIM)]

    def det4(rows, col_ids):
        mat = [[cols[c][a] for c in col_ids] for a in range(8)]
        return _subdet(mat, rows, (1, 2, 3, 4))

    out = {}
    from itertools import combinations
    for (i, j, k) in combinations(range(1, DIM + 1), 3):
        acc = None
        for key, c in _CAYLEY.items():
            term = c * det4(key, (0, i, j, k))
            acc = term if acc is None else acc + term
        out[(i, j, k)] = acc
    return Form(3, out, validate=False)


def induced_g2(imm, p):
    """Pointwise induced structure: pullback of N -| Cayley to the chart frame."""
    omega = _omega_jets(imm, p)
    return G2PointStructure(omega)


def induced_structure_field(imm):
    """The induced fundamental form as a jet-evaluable G2-structure field."""
    ff = FormField(3, imm.chart, lambda p: _omega_jets(imm, p),
                   label=f"induced({imm.name})")
    return G2StructureField(ff, name=imm.name, params=imm.params)


def metric_consistency_residual(imm, p):
    """max |metric_from_form(induced omega) - pullback metric| at p."""
    sd = shape_data(imm, p)
    m = metric_from_form(_omega_jets(imm, p))
    return float(np.abs(m.values() - sd.metric).max())


def verify_sur(imm, p, field=None):
    """Diagnostic comparison of the hypersurface scalar-curvature formula.

    The Gauss-equation value is authoritative. Candidate conventions for
    the mean-curvature norm and the traceless-part norm are fitted and
    reported rather than asserted (the paper's constants do not match any
    standard convention a priori); for minimal points the pure-type check
    Scal = -(1/12)||T||^2_full is evaluated against the induced field.
    """
    sd = shape_data(imm, p)
    scal = sd.gauss_scalar()
    s0_sq = float(np.trace(sd.traceless @ sd.traceless))
    tr = sd.trace
    report = {
        "scal_gauss": scal,
        "trace_S": tr,
        "S0_norm_sq": s0_sq,
        "candidates_H_sq": {
            "trace_sq": tr ** 2,
            "mean_sq": (tr / DIM) ** 2,
        },
    }
    fitted = {}
    if abs(tr) > 1e-8 and s0_sq < 1e-12 * (1 + tr ** 2):
        # umbilic: Scal = (49/18)||H||^2 alone fixes the H convention
        fitted["H_sq"] = scal * 18.0 / 49.0
        fitted["H_sq_over_trace_sq"] = scal * 18.0 / 49.0 / tr ** 2
    if abs(tr) < 1e-8 and s0_sq > 1e-12:
        # minimal: Scal = -(1/12)||S_0||^2 fixes the isomorphism constant
        fitted["S0_iso_sq"] = -12.0 * scal
        fitted["S0_iso_over_frobenius"] = -12.0 * scal / s0_sq
    report["fitted"] = fitted
    if abs(tr) < 1e-8:
        field = field or induced_structure_field(imm)
        sj = field.at(p)
        star_d_omega = hodge_star(sj.d_omega, sj.metric)
        import math
        from .alg7 import pairing
        t_full = math.factorial(3) * jet_value(
            pairing(star_d_omega.value_form(), star_d_omega.value_form(),
                    Metric(sj.metric.values(), check=False)))
        rhs = -t_full / 12.0
        report["pure_type"] = {
            "rhs": rhs,
            "residual": abs(scal - rhs) / (abs(scal) + abs(rhs) + 1.0),
        }
    return report


# ---------------------------------------------------------------------------
# example catalog


def hyperplane(chart=None):
    chart = chart or Box.centered(0.45)

    def coord(i):
        return lambda p: Jet3.coordinate(p, i)

    comps = [coord(i) for i in range(DIM)] + [lambda p: Jet3.constant(0.0)]
    return Immersion(comps, chart, name="hyperplane")


def sphere(radius=1.0, chart=None):
    """Graph chart x_8 = sqrt(r^2 - |x|^2) of the upper cap."""
    chart = chart or Box.centered(0.25 * radius)

    def coord(i):
        return lambda p: Jet3.coordinate(p, i)

    def height(p):
        acc = Jet3.constant(radius * radius)
        for i in range(DIM):
            x = Jet3.coordinate(p, i)
            acc = acc - x * x
        return acc.sqrt()

    comps = [coord(i) for i in range(DIM)] + [height]
    return Immersion(comps, chart, name="sphere", params={"r": radius})


def catenoid_r5(a=1.0, chart=None):
    """catenoid(a) x R^5: (x1, x2) parametrize the catenoid, minimal in R^8."""
    chart = chart or Box.centered(0.45)

    def c1(p):
        u, v = Jet3.coordinate(p, 0), Jet3.coordinate(p, 1)
        return (v * (1.0 / a)).cosh() * (u * (1.0 / a)).cos() * a

    def c2(p):
        u, v = Jet3.coordinate(p, 0), Jet3.coordinate(p, 1)
        return (v * (1.0 / a)).cosh() * (u * (1.0 / a)).sin() * a

    def c3(p):
        return Jet3.coordinate(p, 1)

    def passthrough(i):
        return lambda p: Jet3.coordinate(p, i)

    comps = [c1, c2, c3] + [passthrough(i) for i in range(2, DIM)]
    return Immersion(comps, chart, name="catenoid", params={"a": a})


def polynomial_graph(poly, chart=None, name="graph"):
    """Graph x_8 = p(x_1..x_7) for a polynomial scalar field."""
    chart = chart or poly.chart

    def coord(i):
        return lambda p: Jet3.coordinate(p, i)

    comps = [coord(i) for i in range(DIM)] + [poly.jet3]
    return Immersion(comps, chart, name=name)


def quartic_graph(seed=0, amplitude=0.08, chart=None):
    chart = chart or Box.centered(0.4)
    rng = np.random.default_rng(seed)
    monomials = {}
    for _ in range(8):
        deg = int(rng.integers(2, 5))
        exps = [0] * DIM
        for _ in range(deg):
            exps[int(rng.integers(0, DIM))] += 1
        monomials[tuple(exps)] = float(rng.uniform(-amplitude, amplitude))
    poly = PolynomialField(monomials, chart)
    return polynomial_graph(poly, chart, name="quartic")
