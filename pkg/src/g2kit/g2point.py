"""Pointwise G2-structure operations.

Everything here works on a single tangent space: metric reconstruction from
the fundamental 3-form, the representation-theoretic projections of 2-, 3-
and 4-forms, the Lee form, the torsion of the unique compatible connection
with skew torsion, Fernandez-Gray type flags, and the Clifford-action
identities that tie the torsion to the canonical spinor.

Coefficients are generic ring scalars, so the same code serves the exact
rational identity suite and the jet-valued field pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import jetlin
from .alg7 import (DIM, Form, Metric, hodge_star, interior, pairing, standard_omega3,
                   transform, wedge, _ring_inv_det)
from .cl7 import Spinor, act, canonical_spinor
from .errors import IdentityViolation, NotG2FormError, NotIntegrableError
from .jets import Jet2, jet_value

#: B(omega_0) = 6 Id for the fundamental form, so this constant makes
#: metric_from_form(omega_0) the identity.
METRIC_CALIBRATION = 6.0 ** (-2.0 / 9.0)

_THIRD = Fraction(1, 3)
_SIXTH = Fraction(1, 6)


def _basis_vector(i):
    return [1 if t == i else 0 for t in range(DIM)]


def _coordinate_one_forms():
    return [Form.monomial((i,)) for i in range(1, DIM + 1)]


def b_matrix(omega):
    """B_ij = coefficient of e_1..7 in (e_i -| omega)^(e_j -| omega)^omega."""
    contracted = [interior(_basis_vector(i), omega) for i in range(DIM)]
    top = tuple(range(1, DIM + 1))
    B = [[None] * DIM for _ in range(DIM)]
    for i in range(DIM):
        for j in range(i, DIM):
            val = wedge(wedge(contracted[i], contracted[j]), omega)[top]
            B[i][j] = val
            B[j][i] = val
    return B


def metric_from_form(omega):
    """Reconstruct the metric from a nondegenerate G2 3-form.

    g = c B (det B)^{-1/9}, calibrated so the standard form gives the
    identity. Raises NotG2FormError for degenerate or wrongly oriented
    input (det B <= 0 or indefinite B).
    """
    exact = not any(isinstance(c, Jet2) for c in omega.coeffs.values())
    work = omega.value_form() if exact else omega
    B = b_matrix(work)
    b_vals = np.array([[jet_value(B[i][j]) for j in range(DIM)] for i in range(DIM)])
    eig = np.linalg.eigvalsh(0.5 * (b_vals + b_vals.T))
    if eig.min() <= 0:
        raise NotG2FormError(
            f"form does not define a G2-structure (B eigenvalues in [{eig.min():.3e}, {eig.max():.3e}])")
    _, det = _ring_inv_det(B)
    if jet_value(det) <= 0:
        raise NotG2FormError("B has non-positive determinant")
    scale = METRIC_CALIBRATION * det ** (-1.0 / 9.0)
    g = [[scale * B[i][j] for j in range(DIM)] for i in range(DIM)]
    return Metric(g, orientation=1, check=False)


def adapted_frame(metric):
    """Columns of F = g^{-1/2} form a g-orthonormal frame (symmetric square root)."""
    jet_entries = any(isinstance(metric.mat[i][j], Jet2)
                      for i in range(DIM) for j in range(DIM))
    if jet_entries:
        v, g, h, order = jetlin.pack(metric.mat)
        fv, fg, fh = jetlin.inv_sqrt_jets(v, g, h)
        return jetlin.unpack(fv, fg, fh, order)
    vals = metric.values()
    lam, q = np.linalg.eigh(vals)
    if lam.min() <= 0:
        raise NotG2FormError("metric not positive-definite")
    f = (q / np.sqrt(lam)) @ q.T
    return [[f[i, j] for j in range(DIM)] for i in range(DIM)]


class G2PointStructure:
    """Fundamental 3-form with its derived metric and adapted frame at a point."""

    __slots__ = ("omega", "metric", "_frame", "_omega_frame", "_psi0")

    def __init__(self, omega, metric=None, frame=None):
        if omega.degree != 3:
            raise NotG2FormError("fundamental form must have degree 3")
        self.omega = omega
        self.metric = metric if metric is not None else metric_from_form(omega)
        self._frame = frame
        self._omega_frame = None
        self._psi0 = None

    @classmethod
    def standard(cls, scalar=int):
        """The flat structure: omega_0 with the exact Euclidean metric."""
        return cls(standard_omega3(scalar), Metric.euclidean(),
                   frame=[[scalar(1) if i == j else scalar(0) for j in range(DIM)]
                          for i in range(DIM)])

    @property
    def orientation(self):
        return self.metric.orientation

    @property
    def frame(self):
        if self._frame is None:
            self._frame = adapted_frame(self.metric)
        return self._frame

    def frame_values(self):
        return np.array([[jet_value(self.frame[i][j]) for j in range(DIM)]
                         for i in range(DIM)])

    def to_frame(self, a):
        """Components of a form in the adapted orthonormal frame."""
        return transform(a, self.frame)

    @property
    def omega_frame(self):
        if self._omega_frame is None:
            self._omega_frame = self.to_frame(self.omega)
        return self._omega_frame

    def canonical_spinor(self):
        if self._psi0 is None:
            self._psi0 = canonical_spinor(self.omega_frame.value_form())
        return self._psi0


@dataclass
class G2Invariants:
    """First-order invariants of an integrable structure at a point."""

    w1_pairing: object
    lam: object
    lee: Form
    torsion: Form


@dataclass
class FGClass:
    """Fernandez-Gray component flags plus the derived named classes."""

    w1: bool
    w2: bool
    w3: bool
    w4: bool
    labels: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    tol: float = 1e-9

    def to_record(self):
        return {
            "flags": {"W1": self.w1, "W2": self.w2, "W3": self.w3, "W4": self.w4},
            "labels": list(self.labels),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "tolerances": {"relative": self.tol},
        }


def _vnorm(a, m):
    vals = a.value_form()
    mv = m if m.is_euclidean else Metric(m.values(), m.orientation, check=False)
    return float(np.sqrt(max(jet_value(pairing(vals, vals, mv)), 0.0)))


# ---------------------------------------------------------------------------
# projections


def project2(alpha, s):
    """Split a 2-form into its 7- and 14-dimensional components.

    alpha_7 satisfies *(alpha_7 ^ omega) = 2 alpha_7, alpha_14 the -1
    eigenspace of the same operator.
    """
    l_alpha = hodge_star(wedge(alpha, s.omega), s.metric)
    a7 = _THIRD * (l_alpha + alpha)
    return a7, alpha - a7


def project3(gamma, s):
    """Split a 3-form into (gamma_1, gamma_7, gamma_27)."""
    m = s.metric
    w = s.omega
    g1 = (pairing(gamma, w, m) / pairing(w, w, m)) * w
    basis = [hodge_star(wedge(dx, w), m) for dx in _coordinate_one_forms()]
    g7 = _project_onto_span(gamma - g1, basis, m)
    return g1, g7, gamma - g1 - g7


def project4_1_7(phi, s):
    """Projections of a 4-form onto the 1- and 7-dimensional summands."""
    m = s.metric
    sw = hodge_star(s.omega, m)
    p1 = (pairing(phi, sw, m) / pairing(sw, sw, m)) * sw
    basis = [wedge(dx, s.omega) for dx in _coordinate_one_forms()]
    p7 = _project_onto_span(phi - p1, basis, m)
    return p1, p7


def _project_onto_span(gamma, basis, m):
    gram = [[pairing(bi, bj, m) for bj in basis] for bi in basis]
    rhs = [pairing(bi, gamma, m) for bi in basis]
    inv, _ = _ring_inv_det(gram)
    out = Form.zero(gamma.degree)
    for i, bi in enumerate(basis):
        coeff = None
        for j in range(len(basis)):
            term = inv[i][j] * rhs[j]
            coeff = term if coeff is None else coeff + term
        out = out + coeff * bi
    return out


# ---------------------------------------------------------------------------
# Lee form, torsion, classification


def lee_form(s, d_omega, d_star_omega=None, tol=1e-9):
    """Lee form theta = -(1/3) * (*d omega ^ omega).

    When d*omega is supplied, the codifferential expression
    (1/3) * (delta omega ^ *omega) with delta omega = -*d*omega is evaluated
    too and a disagreement raises ConventionError (it would mean a star or
    codifferential sign bug upstream).
    """
    m = s.metric
    theta = (-_THIRD) * hodge_star(wedge(hodge_star(d_omega, m), s.omega), m)
    if d_star_omega is not None:
        # The cross-check identity holds with delta omega = +*d*omega, the
        # sign OPPOSITE to the adjoint codifferential on 3-forms; this pin
        # is what the agreement test fixes (see the convention ledger).
        delta_omega = hodge_star(d_star_omega, m)
        theta2 = _THIRD * hodge_star(wedge(delta_omega, hodge_star(s.omega, m)), m)
        res = _vnorm(theta - theta2, m)
        scale = 1.0 + _vnorm(theta, m)
        if res > tol * scale:
            from .errors import ConventionError
            raise ConventionError(
                f"two Lee-form expressions disagree (residual {res:.3e})")
    return theta


def w2_residual(s, d_star_omega, theta):
    """Relative size of d*omega - theta ^ *omega, the integrability defect."""
    m = s.metric
    defect = d_star_omega - wedge(theta, hodge_star(s.omega, m))
    scale = _vnorm(d_star_omega, m) + _vnorm(s.omega, m)
    return _vnorm(defect, m) / max(scale, 1e-300)


def torsion_form(s, d_omega, theta, d_star_omega=None, tol=1e-7):
    """Torsion of the unique G2-connection with skew torsion.

    T = -*d omega + (1/6)(d omega, *omega) omega + *(theta ^ omega).
    Raises NotIntegrableError when d*omega is supplied and the structure
    fails d*omega = theta ^ *omega.
    """
    m = s.metric
    if d_star_omega is not None:
        res = w2_residual(s, d_star_omega, theta)
        if res > tol:
            raise NotIntegrableError(
                f"structure not integrable (W2 residual {res:.3e})", residual=res)
    w1 = pairing(d_omega, hodge_star(s.omega, m), m)
    return (-hodge_star(d_omega, m)
            + (_SIXTH * w1) * s.omega
            + hodge_star(wedge(theta, s.omega), m))


def structure_invariants(s, d_omega, d_star_omega, tol=1e-7):
    """G2Invariants bundle; lam follows the spinor convention -(1/7)(d omega, *omega)."""
    m = s.metric
    theta = lee_form(s, d_omega, d_star_omega)
    torsion = torsion_form(s, d_omega, theta, d_star_omega, tol)
    w1 = pairing(d_omega, hodge_star(s.omega, m), m)
    return G2Invariants(w1_pairing=w1, lam=(-Fraction(1, 7)) * w1,
                        lee=theta, torsion=torsion)


def classify(s, d_omega, d_star_omega, tol=1e-9, d_theta=None):
    """Fernandez-Gray flags and named classes from first-derivative data.

    All component residuals are measured relative to |d omega| + |d*omega|,
    so the flags are scale-invariant.
    """
    m = s.metric
    w = s.omega
    theta = lee_form(s, d_omega)
    denom = _vnorm(d_omega, m) + _vnorm(d_star_omega, m)
    if denom < 1e-300:
        fg = FGClass(False, False, False, False, tol=tol)
        fg.labels = ["parallel", "integrable", "cocalibrated", "balanced"]
        fg.residuals = {"W1": 0.0, "W2": 0.0, "W3": 0.0, "W4": 0.0}
        return fg

    w1_val = abs(jet_value(pairing(d_omega, hodge_star(w, m), m)))
    w4_val = _vnorm(theta, m)
    w2_val = _vnorm(d_star_omega - wedge(theta, hodge_star(w, m)), m)
    tau = hodge_star(d_omega, m)
    _, _, tau27 = project3(tau.value_form() if any(isinstance(c, Jet2) for c in tau.coeffs.values()) else tau,
                           _value_structure(s))
    w3_val = _vnorm(tau27, m)

    residuals = {"W1": w1_val / denom, "W2": w2_val / denom,
                 "W3": w3_val / denom, "W4": w4_val / denom}
    flags = {k: residuals[k] > tol for k in residuals}
    fg = FGClass(flags["W1"], flags["W2"], flags["W3"], flags["W4"],
                 residuals=residuals, tol=tol)

    labels = []
    if not any(flags.values()):
        labels.append("parallel")
    if not flags["W2"]:
        labels.append("integrable")
    if not flags["W2"] and not flags["W4"]:
        labels.append("cocalibrated")
    if not flags["W4"]:
        labels.append("balanced")
    if flags["W3"] and not flags["W1"] and not flags["W2"] and not flags["W4"]:
        labels.append("pure-type-W3")
    if flags["W1"] and not (flags["W2"] or flags["W3"] or flags["W4"]):
        lam_np = pairing(d_omega, hodge_star(w, m), m) / pairing(w, w, m)
        prop = _vnorm(d_omega - lam_np * hodge_star(w, m), m) / denom
        residuals["nearly_parallel_defect"] = prop
        if prop <= tol:
            labels.append("nearly-parallel")
    if flags["W4"] and not (flags["W1"] or flags["W2"] or flags["W3"]):
        closed = d_theta is None or _vnorm(d_theta, m) / denom <= tol
        if closed:
            labels.append("locally-conformally-parallel")
            if d_theta is not None:
                residuals["lee_closedness"] = _vnorm(d_theta, m) / denom
    fg.labels = labels
    return fg


def _value_structure(s):
    """Float-valued copy of a structure (for projector work inside classify)."""
    mv = Metric(s.metric.values(), s.metric.orientation, check=False)
    return G2PointStructure(s.omega.value_form(), mv,
                            frame=[list(r) for r in s.frame_values()])


# ---------------------------------------------------------------------------
# conformal transformation


def _ring_exp(x):
    if isinstance(x, Jet2):
        return x.exp()
    import math
    return math.exp(float(x))


def conformal_transform(s, f, df, d_omega=None, d_star_omega=None):
    """Conformal change omega -> e^{3f} omega, g -> e^{2f} g.

    Returns the transformed structure and, when derivative data is
    supplied, a dict with the transformed Lee form, the d(e^{3f} omega)
    4-form and the conformally invariant pairing (both sides), so callers
    can check theta_bar = theta + 4 df.
    """
    e_f = _ring_exp(f)
    e2f, e3f = e_f * e_f, e_f * e_f * e_f
    omega_bar = e3f * s.omega
    g_bar = Metric([[e2f * s.metric.mat[i][j] for j in range(DIM)] for i in range(DIM)],
                   s.metric.orientation, check=False)
    s_bar = G2PointStructure(omega_bar, g_bar)
    if d_omega is None:
        return s_bar, {}
    d_omega_bar = e3f * (3 * wedge(df, s.omega) + d_omega)
    data = {"d_omega_bar": d_omega_bar}
    theta_bar = lee_form(s_bar, d_omega_bar)
    data["theta_bar"] = theta_bar
    data["w1_bar"] = pairing(d_omega_bar, hodge_star(omega_bar, g_bar), g_bar)
    data["w1"] = pairing(d_omega, hodge_star(s.omega, s.metric), s.metric)
    if d_star_omega is not None:
        # d(*_bar omega_bar) = d(e^{4f} * omega) = e^{4f}(4 df ^ *omega + d*omega)
        e4f = e2f * e2f
        star_omega = hodge_star(s.omega, s.metric)
        data["d_star_omega_bar"] = e4f * (4 * wedge(df, star_omega) + d_star_omega)
    return s_bar, data


# ---------------------------------------------------------------------------
# Clifford-action identities


def torsion_clifford_action(s, invariants, psi0=None, tol=1e-9):
    """act(T, psi0) checked against (7/6) lam psi0 - act(theta, psi0).

    Both sides are evaluated in the adapted frame; a violation indicates a
    convention bug upstream, hence IdentityViolation rather than a residual
    return.
    """
    psi0 = psi0 if psi0 is not None else s.canonical_spinor()
    t_frame = s.to_frame(invariants.torsion).value_form()
    theta_frame = s.to_frame(invariants.lee).value_form()
    got = act(t_frame, psi0)
    lam = jet_value(invariants.lam)
    expected = psi0.scale(7.0 * lam / 6.0) - act(theta_frame, psi0)
    res = (got - expected).norm()
    if res > tol * (1.0 + got.norm() + expected.norm()):
        raise IdentityViolation(
            f"torsion Clifford action violates the spinor identity (residual {res:.3e})")
    return got


def killing_residual(s, invariants, d_phi):
    """Residuals of the two Killing-spinor equations at a point.

    Returns (spinor residual act(dPhi - T/2, psi0), the scalar condition
    (d omega, *omega), and the 1-form condition theta + 2 dPhi). The spinor
    residual vanishes iff the other two do.
    """
    psi0 = s.canonical_spinor()
    d_phi_frame = s.to_frame(d_phi).value_form()
    t_frame = s.to_frame(invariants.torsion).value_form()
    spinor_res = act(d_phi_frame, psi0) - act(t_frame, psi0).scale(0.5)
    one_form_cond = invariants.lee + 2 * d_phi
    return spinor_res, invariants.w1_pairing, one_form_cond
