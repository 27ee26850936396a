"""Curvature of the Levi-Civita and torsion connections, spinor derivatives,
and end-to-end verification of the scalar-curvature identities.

All tensor work happens on dense value/partial arrays extracted from the
jet pipeline; the curvature convention is pinned by Scal(unit round sphere)
= +42 and cross-checked against the Gauss equation and the closed-form
conformal-change law in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import jetlin
from .alg7 import DIM, Form, form_to_dense, hodge_star, interior, pairing, wedge
from .cl7 import Spinor, act, action_matrix, gamma_rep
from .errors import JetOrderError, KillingViolation, NotIntegrableError
from .fields import StructureJet, form_d_jets
from .g2point import killing_residual
from .jets import Jet2, jet_value


def _as_jet_context(struct_or_jet, p=None):
    if isinstance(struct_or_jet, StructureJet):
        return struct_or_jet
    return struct_or_jet.at(p)


def form_dense_partials(form):
    """Dense values (7,)*k and coordinate partials (7, (7,)*k) of a jet form."""
    k = form.degree
    vals = np.zeros((DIM,) * k)
    parts = np.zeros((DIM,) + (DIM,) * k)
    from itertools import permutations
    for idx, coeff in form.coeffs.items():
        if isinstance(coeff, Jet2):
            if coeff.order < 1:
                raise JetOrderError("coefficient carries no derivative slot")
            v, g = coeff.value, coeff.grad
        else:
            v, g = float(coeff), np.zeros(DIM)
        for perm in permutations(range(k)):
            sign = 1
            for a in range(k):
                for b in range(a + 1, k):
                    if perm[a] > perm[b]:
                        sign = -sign
            pos = tuple(idx[perm[t]] - 1 for t in range(k))
            vals[pos] = sign * v
            parts[(slice(None),) + pos] = sign * g
    return vals, parts


@dataclass
class ConnectionCoeffs:
    """Connection data at a point: Gamma^k_ij plus the lowered (1/2)T term."""

    gamma: np.ndarray            # gamma[k, i, j] = Gamma^k_ij (Levi-Civita part)
    half_torsion: np.ndarray     # (1/2) T_ijk, fully lowered, skew
    metric: np.ndarray

    def full_lowered(self):
        """g(nabla_i d_j, d_k) of the assembled connection."""
        lc = np.einsum("kl,lij->ijk", self.metric, self.gamma)
        return lc + self.half_torsion

    def torsion_of_connection(self):
        """Lowered torsion tensor of the assembled connection (should equal T)."""
        low = self.full_lowered()
        return low - np.swapaxes(low, 0, 1)


class CurvatureData:
    """Dense per-point curvature pipeline over a StructureJet."""

    def __init__(self, sj):
        self.sj = sj
        sj.require_integrable()

    # -- metric jets ----------------------------------------------------

    @cached_property
    def metric_jets(self):
        v, g, h, order = jetlin.pack(self.sj.metric.mat)
        if order < 2:
            raise JetOrderError("curvature needs order-2 metric jets")
        return v, g, h

    @cached_property
    def gv(self):
        return self.metric_jets[0]

    @cached_property
    def giv(self):
        return np.linalg.inv(self.gv)

    # -- Levi-Civita ----------------------------------------------------

    @cached_property
    def gamma_lowered(self):
        # Gamma_ijk = g(nabla_i d_j, d_k) = (1/2)(d_i g_jk + d_j g_ik - d_k g_ij)
        _, gg, _ = self.metric_jets
        return 0.5 * (np.einsum("ijk->ijk", gg)
                      + np.einsum("jik->ijk", gg)
                      - np.einsum("kij->ijk", gg))

    @cached_property
    def gamma(self):
        # gamma[k, i, j] = Gamma^k_ij
        return np.einsum("kl,ijl->kij", self.giv, self.gamma_lowered)

    @cached_property
    def gamma_partial(self):
        # dgamma[m, k, i, j] = d_m Gamma^k_ij
        _, gg, gh = self.metric_jets
        dlow = 0.5 * (np.einsum("mijk->mijk", gh)
                      + np.einsum("mjik->mijk", gh)
                      - np.einsum("mkij->mijk", gh))
        dgi = -np.einsum("ka,mab,bl->mkl", self.giv, gg, self.giv)
        return (np.einsum("mkl,ijl->mkij", dgi, self.gamma_lowered)
                + np.einsum("kl,mijl->mkij", self.giv, dlow))

    @cached_property
    def scal_lc(self):
        return _scalar_from_gamma(self.gv, self.giv, self.gamma, self.gamma_partial)

    def levi_civita(self):
        return ConnectionCoeffs(self.gamma, np.zeros((DIM,) * 3), self.gv)

    # -- torsion connection ----------------------------------------------

    @cached_property
    def torsion_dense(self):
        return form_dense_partials(self.sj.torsion)

    @cached_property
    def gamma_torsion(self):
        tv, _ = self.torsion_dense
        low = self.gamma_lowered + 0.5 * tv
        return np.einsum("kl,ijl->kij", self.giv, low)

    @cached_property
    def gamma_torsion_partial(self):
        _, gg, _ = self.metric_jets
        tv, tp = self.torsion_dense
        low = self.gamma_lowered + 0.5 * tv
        dgi = -np.einsum("ka,mab,bl->mkl", self.giv, gg, self.giv)
        dlow = (0.5 * (np.einsum("mijk->mijk", self.metric_jets[2])
                       + np.einsum("mjik->mijk", self.metric_jets[2])
                       - np.einsum("mkij->mijk", self.metric_jets[2]))
                + 0.5 * tp)
        return (np.einsum("mkl,ijl->mkij", dgi, low)
                + np.einsum("kl,mijl->mkij", self.giv, dlow))

    @cached_property
    def scal_torsion(self):
        return _scalar_from_gamma(self.gv, self.giv, self.gamma_torsion,
                                  self.gamma_torsion_partial)

    def torsion_connection(self):
        tv, _ = self.torsion_dense
        return ConnectionCoeffs(self.gamma, 0.5 * tv, self.gv)

    # -- parallelism checks ----------------------------------------------

    @cached_property
    def metricity_residual(self):
        # nabla^g g = d_m g_ij - Gamma^l_mi g_lj - Gamma^l_mj g_il
        _, gg, _ = self.metric_jets
        nab = (gg - np.einsum("lmi,lj->mij", self.gamma, self.gv)
               - np.einsum("lmj,il->mij", self.gamma, self.gv))
        return float(np.abs(nab).max())

    @cached_property
    def nabla_omega_residual(self):
        """Componentwise max of nabla omega for the torsion connection."""
        wv, wp = form_dense_partials(self.sj.omega)
        g = self.gamma_torsion
        nab = (wp - np.einsum("lmi,ljk->mijk", g, wv)
               - np.einsum("lmj,ilk->mijk", g, wv)
               - np.einsum("lmk,ijl->mijk", g, wv))
        return float(np.abs(nab).max())

    # -- adapted frame and spinor field ----------------------------------

    @cached_property
    def frame_jets(self):
        fv = np.zeros((DIM, DIM))
        fg = np.zeros((DIM, DIM, DIM))
        frame = self.sj.structure.frame
        for i in range(DIM):
            for a in range(DIM):
                e = frame[i][a]
                if isinstance(e, Jet2):
                    fv[i, a] = e.value
                    fg[:, i, a] = e.grad
                else:
                    fv[i, a] = float(e)
        return fv, fg

    @cached_property
    def spin_connection_lc(self):
        """omega[i, a, b] = g(nabla^g_{d_i} E_a, E_b); skew in (a, b)."""
        fv, fg = self.frame_jets
        cov = fg + np.einsum("kil,la->ika", self.gamma, fv)
        return np.einsum("ika,km,mb->iab", cov, self.gv, fv)

    @cached_property
    def psi_field(self):
        """Canonical spinor and its coordinate derivatives at the point.

        d psi from first-order perturbation of the -7 eigenvector of the
        omega action matrix in the adapted frame, with <psi, d psi> = 0.
        """
        omega_frame = self.sj.structure.omega_frame
        rep = gamma_rep()
        m = np.zeros((8, 8))
        dm = np.zeros((DIM, 8, 8))
        for idx, coeff in omega_frame.coeffs.items():
            mono = rep.monomial_matrix(idx)
            if isinstance(coeff, Jet2):
                m += coeff.value * mono
                dm += coeff.grad[:, None, None] * mono[None, :, :]
            else:
                m += float(coeff) * mono
        psi = self.sj.psi0.components
        shifted = m + 7.0 * np.eye(8)
        vals, vecs = np.linalg.eigh(shifted)
        inv_vals = np.where(np.abs(vals) > 1e-6, 1.0 / np.where(vals == 0, 1.0, vals), 0.0)
        pinv = (vecs * inv_vals) @ vecs.T
        dpsi = -np.einsum("ab,kbc,c->ka", pinv, dm, psi)
        return psi, dpsi

    def _spinor_derivative(self, spin_conn, q, dq):
        """nabla_{d_i} of a spinor field q with coordinate derivative dq."""
        rep = gamma_rep()
        out = dq.copy()
        for a in range(DIM):
            for b in range(a + 1, DIM):
                gam = rep.gamma[a] @ rep.gamma[b]
                out += 0.5 * spin_conn[:, a, b, None] * (gam @ q)[None, :]
        return out

    @cached_property
    def nabla_g_psi(self):
        """(7, 8): Levi-Civita derivative of the canonical spinor field."""
        psi, dpsi = self.psi_field
        return self._spinor_derivative(self.spin_connection_lc, psi, dpsi)

    @cached_property
    def spin_connection_torsion(self):
        fv, _ = self.frame_jets
        tv, _ = self.torsion_dense
        t_frame2 = np.einsum("imn,ma,nb->iab", tv, fv, fv)
        return self.spin_connection_lc + 0.5 * t_frame2

    @cached_property
    def nabla_psi(self):
        """(7, 8): torsion-connection derivative of the canonical spinor field."""
        psi, dpsi = self.psi_field
        return self._spinor_derivative(self.spin_connection_torsion, psi, dpsi)


def _scalar_from_gamma(gv, giv, gamma, dgamma):
    """Scal = g^{im} g^{jk} R_{ijkm} for R of a (possibly torsion) connection."""
    # R^l_{ijk} = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk
    #           - Gamma^l_jm Gamma^m_ik         (coordinate frame)
    riem = (np.einsum("iljk->ijkl", dgamma) - np.einsum("jlik->ijkl", dgamma)
            + np.einsum("lim,mjk->ijkl", gamma, gamma)
            - np.einsum("ljm,mik->ijkl", gamma, gamma))
    low = np.einsum("ijkl,lm->ijkm", riem, gv)
    return float(np.einsum("im,jk,ijkm->", giv, giv, low))


# ---------------------------------------------------------------------------
# public operations


def levi_civita(struct_or_jet, p=None):
    return CurvatureData(_as_jet_context(struct_or_jet, p)).levi_civita()


def scalar_curvature_lc(struct_or_jet, p=None):
    return CurvatureData(_as_jet_context(struct_or_jet, p)).scal_lc


def torsion_connection_scalar(struct_or_jet, p=None):
    """(Scal of the torsion connection, residual of Scal^g = Scal + ||T||^2/4)."""
    cd = CurvatureData(_as_jet_context(struct_or_jet, p))
    t_full = _norm_full(cd.sj.torsion, cd.sj.metric)
    lhs = cd.scal_lc
    rhs = cd.scal_torsion + 0.25 * t_full
    return cd.scal_torsion, abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1.0)


def sigma_t(torsion):
    """sigma^T = (1/2) sum_i (e_i -| T)^(e_i -| T), orthonormal-frame components."""
    out = Form.zero(4)
    for i in range(DIM):
        e = [1.0 if t == i else 0.0 for t in range(DIM)]
        c = interior(e, torsion)
        out = out + wedge(c, c)
    return out.scale(0.5)


def _norm_full(form, metric):
    vals = form.value_form()
    import math
    from .alg7 import Metric
    mv = metric if metric.is_euclidean else Metric(metric.values(), metric.orientation,
                                                   check=False)
    return math.factorial(form.degree) * jet_value(pairing(vals, vals, mv))


@dataclass
class CurvatureReport:
    """Scalar curvatures plus every right-hand side and residual at one point."""

    scal_lc: float
    scal_torsion: float
    torsion_norm_full: float
    theta_norm_full: float
    delta_theta: float
    w1_pairing: float
    rhs_sc1: float
    rhs_as: float | None = None
    rhs_pure_type: float | None = None
    rhs_lsc: float | None = None
    residuals: dict = field(default_factory=dict)

    def to_record(self):
        rec = {k: v for k, v in self.__dict__.items() if k != "residuals" and v is not None}
        rec["residuals"] = {k: float(v) for k, v in self.residuals.items()}
        return rec


def verify_th2(struct_or_jet, p=None):
    """Scalar-curvature formula of the torsion-connection theorem at a point.

    Residuals are relative to |lhs| + |rhs| + 1. The 'as' right side is
    attached for locally conformally parallel points and the pure-type
    right side when only the W3 component is present.
    """
    sj = _as_jet_context(struct_or_jet, p)
    cd = CurvatureData(sj)
    m = sj.metric
    w1 = jet_value(sj.w1_pairing)
    theta_full = _norm_full(sj.theta, m)
    t_full = _norm_full(sj.torsion, m)
    dth = sj.delta_theta
    rhs = w1 ** 2 / 18.0 + 2.0 * theta_full - t_full / 12.0 + 3.0 * dth
    report = CurvatureReport(
        scal_lc=cd.scal_lc, scal_torsion=cd.scal_torsion,
        torsion_norm_full=t_full, theta_norm_full=theta_full,
        delta_theta=dth, w1_pairing=w1, rhs_sc1=rhs)
    report.residuals["sc1"] = _rel(cd.scal_lc, rhs)
    report.residuals["c5"] = _rel(cd.scal_lc, cd.scal_torsion + 0.25 * t_full)

    cls = sj.classification
    if "locally-conformally-parallel" in cls.labels:
        rhs_as = 15.0 / 8.0 * theta_full + 3.0 * dth
        report.rhs_as = rhs_as
        report.residuals["as"] = _rel(cd.scal_lc, rhs_as)
    if "pure-type-W3" in cls.labels:
        star_d_omega = hodge_star(sj.d_omega, m)
        rhs_pt = -_norm_full(star_d_omega, m) / 12.0
        report.rhs_pure_type = rhs_pt
        report.residuals["pure_type"] = _rel(cd.scal_lc, rhs_pt)
    return report


def verify_th3(struct_or_jet, phi, p=None, tol=1e-6):
    """Dilation form of the scalar curvature for Killing-spinor solutions.

    ``phi`` is the dilation ScalarField. Raises KillingViolation unless the
    Killing residuals vanish at the point (theta = -2 dPhi and zero
    (d omega, *omega) pairing).
    """
    sj = _as_jet_context(struct_or_jet, p)
    d_phi = phi.gradient_form(sj.p)
    spin_res, w1, one_form = killing_residual(sj.structure, sj.invariants, d_phi)
    scale = 1.0 + sj.theta.norm_values()
    if (spin_res.norm() > tol * scale or abs(jet_value(w1)) > tol * scale
            or one_form.norm_values() > tol * scale):
        raise KillingViolation(
            f"Killing conditions fail at {sj.p}: |spinor residual| {spin_res.norm():.3e}, "
            f"(d omega, *omega) {jet_value(w1):.3e}, |theta + 2 dPhi| {one_form.norm_values():.3e}")
    report = verify_th2(sj)
    m = sj.metric
    d_phi_norm = jet_value(pairing(d_phi.value_form(), d_phi.value_form(),
                                   _value_metric(m)))
    lap = _laplacian_at(sj, d_phi)
    rhs_lsc = 8.0 * d_phi_norm - report.torsion_norm_full / 12.0 - 6.0 * lap
    report.rhs_lsc = rhs_lsc
    report.residuals["lsc"] = _rel(report.scal_lc, rhs_lsc)
    report.residuals["lsc_vs_sc1"] = _rel(report.rhs_sc1, rhs_lsc)
    return report


def _value_metric(m):
    from .alg7 import Metric
    return m if m.is_euclidean else Metric(m.values(), m.orientation, check=False)


def _laplacian_at(sj, d_phi):
    """delta d phi at the point with the structure's metric (geometer sign)."""
    star = hodge_star(d_phi, sj.metric)
    val = hodge_star(form_d_jets(star), sj.metric)
    return -jet_value(val.coeffs.get((), 0))


def verify_tb(struct_or_jet, p=None, with_dirac=True):
    """Residuals of the two parallel-spinor integrability identities.

    First: 3 dT . psi - 2 sigma^T . psi + Scal psi = 0. Second (when spinor
    derivatives are enabled): D(T . psi) = dT . psi + delta T . psi
    - 2 sigma^T . psi with D the torsion-connection Dirac operator.
    """
    sj = _as_jet_context(struct_or_jet, p)
    cd = CurvatureData(sj)
    psi = sj.psi0
    s = sj.structure
    d_t_frame = s.to_frame(sj.d_torsion).value_form()
    t_frame = s.to_frame(sj.torsion).value_form()
    sigma = sigma_t(t_frame)
    lhs = (act(d_t_frame, psi).scale(3.0) - act(sigma, psi).scale(2.0)
           + psi.scale(cd.scal_torsion))
    res1 = lhs.norm() / (abs(cd.scal_torsion) + 1.0)
    if not with_dirac:
        return res1, None

    rep = gamma_rep()
    fv, _ = cd.frame_jets
    psi_v, dpsi = cd.psi_field
    # spinor field q = T_frame . psi and its coordinate derivatives
    mq = action_matrix(t_frame)
    dmq = np.zeros((DIM, 8, 8))
    for idx, coeff in s.to_frame(sj.torsion).coeffs.items():
        if isinstance(coeff, Jet2):
            dmq += coeff.grad[:, None, None] * rep.monomial_matrix(idx)[None, :, :]
    q = mq @ psi_v
    dq = np.einsum("kab,b->ka", dmq, psi_v) + np.einsum("ab,kb->ka", mq, dpsi)
    nabla_q = cd._spinor_derivative(cd.spin_connection_torsion, q, dq)
    dirac = np.zeros(8)
    for a in range(DIM):
        dirac += rep.gamma[a] @ np.einsum("i,ib->b", fv[:, a], nabla_q)
    delta_t = _codifferential_form(sj, sj.torsion)
    delta_t_frame = s.to_frame(delta_t).value_form()
    rhs = (act(d_t_frame, psi) + act(delta_t_frame, psi) - act(sigma, psi).scale(2.0))
    res2 = float(np.linalg.norm(dirac - rhs.components)) / (1.0 + np.linalg.norm(dirac))
    return res1, res2


def _codifferential_form(sj, form):
    """delta form = (-1)^k * d * form at the point (adjoint convention)."""
    star = hodge_star(form, sj.metric)
    out = hodge_star(form_d_jets(star), sj.metric)
    return out.scale((-1) ** form.degree)


def spinor_cov_deriv(struct_or_jet, direction, p=None):
    """Covariant derivatives of the canonical spinor field along ``direction``.

    Returns a dict with the Levi-Civita derivative, its expected value
    -(1/4)(X -| T).psi, the torsion-connection derivative (expected zero),
    and both residuals. ``direction`` is a coordinate vector.
    """
    sj = _as_jet_context(struct_or_jet, p)
    cd = CurvatureData(sj)
    x = np.asarray(direction, dtype=float)
    nab_g = Spinor(np.einsum("i,ib->b", x, cd.nabla_g_psi))
    nab_t = Spinor(np.einsum("i,ib->b", x, cd.nabla_psi))
    contraction = interior(list(x), sj.torsion)
    expected = act(sj.structure.to_frame(contraction).value_form(), sj.psi0).scale(-0.25)
    return {
        "nabla_g_psi": nab_g,
        "expected": expected,
        "nabla_torsion_psi": nab_t,
        "dir1_residual": (nab_g - expected).norm(),
        "parallel_residual": nab_t.norm(),
    }


def dirac_identity_residuals(struct_or_jet, p=None):
    """Residuals of D^g psi = -(3/4) T.psi = -(7/8) lam psi + (3/4) theta.psi."""
    sj = _as_jet_context(struct_or_jet, p)
    cd = CurvatureData(sj)
    rep = gamma_rep()
    fv, _ = cd.frame_jets
    dirac = np.zeros(8)
    for a in range(DIM):
        dirac += rep.gamma[a] @ np.einsum("i,ib->b", fv[:, a], cd.nabla_g_psi)
    psi = sj.psi0
    t_frame = sj.structure.to_frame(sj.torsion).value_form()
    expected1 = act(t_frame, psi).scale(-0.75)
    lam = jet_value(sj.invariants.lam)
    theta_frame = sj.structure.to_frame(sj.theta).value_form()
    expected2 = psi.scale(-7.0 / 8.0 * lam) + act(theta_frame, psi).scale(0.75)
    d = Spinor(dirac)
    return ((d - expected1).norm() / (1.0 + d.norm()),
            (d - expected2).norm() / (1.0 + d.norm()))


def _rel(lhs, rhs):
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1.0)
