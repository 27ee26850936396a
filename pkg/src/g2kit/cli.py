"""Command-line interface: example catalog, verification suites, JSON reports.

Commands::

    g2kit classify  --example conformal --points 20 --seed 3
    g2kit verify    --suite th2 --example sphere --tol 1e-6
    g2kit verify    --suite th3 --example conformal --dilation "-2f"
    g2kit curvature --example catenoid --params a=0.8 --json out.json

Exit codes: 0 all residuals below tolerance, 1 identity failure,
2 configuration error, 3 computation error. Reports are byte-stable for a
fixed seed and carry the convention ledger so numbers are self-describing.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, kernels
from .alg7 import Form, Metric, hodge_star, pairing, standard_omega3, wedge
from .cl7 import act, canonical_spinor
from .curvature import (dirac_identity_residuals, spinor_cov_deriv, verify_tb,
                        verify_th2, verify_th3)
from .errors import G2KitError, KillingViolation
from .fields import (Box, PolynomialField, ScalarField, conformal_torsion_weight_check,
                     delta_omega_ratio, halton_points, make_conformally_parallel,
                     make_parallel, make_w2_contaminated)
from .g2point import G2PointStructure, project2, project3
from .hypersurface import (catenoid_r5, hyperplane, induced_structure_field,
                           quartic_graph, shape_data, sphere, verify_sur)
from .jets import jet_value

SCHEMA = "g2kit-report/1"

CONVENTIONS = {
    "orientation": "chart orientation +1; vol = sqrt(det g) e1^...^e7",
    "hodge_star": "a ^ *b = (a,b) vol; involution in dimension 7",
    "pairing_norm": "increasing multi-index sum",
    "curvature_norms": "full index sum = k! * pairing, used in all scalar-curvature formulas",
    "codifferential": "delta = (-1)^k * d * (delta of df = -trace Hess)",
    "c2_delta_sign": "+*d*: the Lee-form cross identity holds with delta omega = +*d*omega",
    "co2_order": "T^omega: *(T ^ omega) = -theta (two 3-forms anticommute)",
    "spinor": "omega . psi0 = -7 psi0, unit norm, leading component positive",
    "metric_calibration": 6.0 ** (-2.0 / 9.0),
    "lambda": "lam = -(1/7)(d omega, *omega); nearly parallel means d omega = +(1/7)(d omega,*omega) *omega",
    "scal_sign": "Scal = g^{im} g^{jk} R_{ijkm}; unit round 7-sphere gives +42",
    "conformal_torsion_weight": "e^{2f}(T + *(df ^ omega)) matches; weight e^{4f} does not",
    "delta_omega_theta_ratio": "||delta omega||^2 = 3 ||theta||^2 (pairing) = 6 ||theta||^2 (full sum)",
    "kernel_backend": None,  # filled per run
}

EXAMPLES = ("parallel", "conformal", "sphere", "catenoid", "hyperplane",
            "quartic", "w2")
SUITES = ("pointwise", "th2", "th3", "tB", "conventions", "all")


class ConfigError(Exception):
    pass


def _parse_params(text):
    out = {}
    if not text:
        return out
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"malformed --params entry {chunk!r} (expected key=value)")
        key, val = chunk.split("=", 1)
        key, val = key.strip(), val.strip()
        try:
            out[key] = int(val)
        except ValueError:
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out


def build_example(name, params, seed):
    """Example catalog: returns dict with field / immersion / conformal f."""
    if name == "parallel":
        return {"field": make_parallel(), "immersion": None, "f": None}
    if name == "conformal":
        chart = Box.centered(float(params.get("halfwidth", 0.45)))
        if "poly" in params:
            f = PolynomialField.parse(str(params["poly"]), chart)
        else:
            f = PolynomialField.random_cubic(
                chart, seed=int(params.get("fseed", seed)),
                amplitude=float(params.get("amp", 0.12)))
        return {"field": make_conformally_parallel(f), "immersion": None, "f": f}
    if name == "sphere":
        imm = sphere(float(params.get("r", 1.0)))
        return {"field": induced_structure_field(imm), "immersion": imm, "f": None}
    if name == "catenoid":
        imm = catenoid_r5(float(params.get("a", 1.0)))
        return {"field": induced_structure_field(imm), "immersion": imm, "f": None}
    if name == "hyperplane":
        imm = hyperplane()
        return {"field": induced_structure_field(imm), "immersion": imm, "f": None}
    if name == "quartic":
        imm = quartic_graph(seed=int(params.get("gseed", seed)),
                            amplitude=float(params.get("amp", 0.08)))
        return {"field": induced_structure_field(imm), "immersion": imm, "f": None}
    if name == "w2":
        return {"field": make_w2_contaminated(), "immersion": None, "f": None}
    raise ConfigError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


def parse_dilation(expr, example, chart):
    """Dilation Phi from '--dilation': 'c f' multiples of the example's f,
    a polynomial in x1..x7, or a constant."""
    expr = (expr or "0").strip()
    import re
    m = re.fullmatch(r"([+-]?\s*[\d/.]*)\s*\*?\s*f", expr)
    if m:
        coeff_text = m.group(1).replace(" ", "") or "1"
        if coeff_text in ("+", "-"):
            coeff_text += "1"
        from fractions import Fraction
        coeff = float(Fraction(coeff_text))
        if example.get("f") is None:
            raise ConfigError("dilation references f but the example has no conformal exponent")
        return example["f"].scale(coeff)
    try:
        return ScalarField.constant(float(expr), chart)
    except ValueError:
        return PolynomialField.parse(expr, chart)


# ---------------------------------------------------------------------------
# suites


def run_pointwise_suite(rng_seed=0, n_random=100):
    """Exact pointwise algebra identities; residuals should be ~1e-12."""
    m = Metric.euclidean()
    w = standard_omega3(float)
    sw = hodge_star(w, m)
    s = G2PointStructure.standard(float)
    psi0 = s.canonical_spinor()
    rng = np.random.default_rng(rng_seed)
    res = {}

    vol_term = wedge(w, sw)
    res["omega_wedge_star_omega_7vol"] = abs(vol_term[(1, 2, 3, 4, 5, 6, 7)] - 7.0)

    worst = 0.0
    for _ in range(n_random):
        g1 = Form(1, {(i,): float(c) for i, c in zip(range(1, 8), rng.uniform(-1, 1, 7))})
        lhs = wedge(hodge_star(wedge(w, g1), m), w)
        rhs = hodge_star(g1, m).scale(4.0)
        worst = max(worst, (lhs - rhs).norm_values())
    res["star_identity_4gamma"] = worst

    from itertools import combinations
    tr7 = tr14 = 0.0
    for idx in combinations(range(1, 8), 2):
        a = Form.monomial(idx, 1.0)
        a7, a14 = project2(a, s)
        tr7 += a7[idx]
        tr14 += a14[idx]
    res["projector_traces_2forms"] = abs(tr7 - 7.0) + abs(tr14 - 14.0)

    t1 = t7 = t27 = 0.0
    for idx in combinations(range(1, 8), 3):
        a = Form.monomial(idx, 1.0)
        g1_, g7_, g27_ = project3(a, s)
        t1 += g1_[idx]
        t7 += g7_[idx]
        t27 += g27_[idx]
    res["projector_traces_3forms"] = abs(t1 - 1.0) + abs(t7 - 7.0) + abs(t27 - 27.0)

    res["omega_action_eigen"] = (act(w, psi0) - psi0.scale(-7.0)).norm()

    worst = 0.0
    for _ in range(max(20, n_random // 5)):
        g1 = Form(1, {(i,): float(c) for i, c in zip(range(1, 8), rng.uniform(-1, 1, 7))})
        lhs = act(hodge_star(wedge(g1, w), m), psi0)
        worst = max(worst, (lhs - act(g1, psi0).scale(-4.0)).norm())
    res["star_gamma_omega_action"] = worst

    worst = 0.0
    for idx in combinations(range(1, 8), 2):
        a = Form.monomial(idx, 1.0)
        _, a14 = project2(a, s)
        worst = max(worst, act(a14, psi0).norm())
    res["lambda2_14_annihilates_psi0"] = worst
    return res


def _killing_record(sj, d_phi):
    from .g2point import killing_residual
    spin_res, w1, one_form = killing_residual(sj.structure, sj.invariants, d_phi)
    return {
        "spinor_residual": spin_res.norm(),
        "pairing_condition": abs(jet_value(w1)),
        "one_form_condition": one_form.norm_values(),
    }


def run_point(example, sj, suites, phi, tol):
    """All requested residuals at one sample point."""
    rec = {"point": [float(x) for x in sj.p]}
    residuals = {}
    if "classify" in suites or "all" in suites:
        rec["classification"] = sj.classification.to_record()
    if "th2" in suites or "all" in suites:
        report = verify_th2(sj)
        rec["curvature"] = report.to_record()
        residuals.update({f"th2_{k}": v for k, v in report.residuals.items()})
    if "tB" in suites or "all" in suites:
        r1, r2 = verify_tb(sj)
        residuals["tB_first"] = r1
        residuals["tB_dirac"] = r2
        d1, d2 = dirac_identity_residuals(sj)
        residuals["dirac_torsion"] = d1
        residuals["dirac_lee"] = d2
        sc = spinor_cov_deriv(sj, [1.0] + [0.0] * 6)
        residuals["dir1"] = sc["dir1_residual"]
        residuals["nabla_psi"] = sc["parallel_residual"]
    if "th3" in suites or "all" in suites:
        d_phi = phi.gradient_form(sj.p)
        rec["killing"] = _killing_record(sj, d_phi)
        try:
            report = verify_th3(sj, phi, tol=max(tol, 1e-8))
            residuals["th3_lsc"] = report.residuals["lsc"]
            residuals["th3_lsc_vs_sc1"] = report.residuals["lsc_vs_sc1"]
            if "curvature" not in rec:
                rec["curvature"] = report.to_record()
        except KillingViolation as exc:
            rec["killing"]["violation"] = str(exc)
            residuals["th3_preconditions"] = max(rec["killing"]["spinor_residual"],
                                                 rec["killing"]["pairing_condition"],
                                                 rec["killing"]["one_form_condition"])
    if "conventions" in suites or "all" in suites:
        inv = sj.invariants
        t_frame = sj.structure.to_frame(inv.torsion).value_form()
        theta_frame = sj.structure.to_frame(inv.lee).value_form()
        psi0 = sj.psi0
        got = act(t_frame, psi0)
        expected = psi0.scale(7.0 * jet_value(inv.lam) / 6.0) - act(theta_frame, psi0)
        residuals["b2_torsion_action"] = (got - expected).norm()
        co2 = hodge_star(wedge(inv.torsion, sj.omega), sj.metric).value_form()
        residuals["co2_lee_from_torsion"] = (co2 + inv.lee.value_form()).norm_values() \
            / (1.0 + inv.lee.norm_values())
        ratio_pair, ratio_full = delta_omega_ratio(sj)
        if ratio_pair is not None:
            rec["delta_omega_theta_ratio"] = {"pairing": ratio_pair, "full_sum": ratio_full}
    rec["lee_form"] = sj.theta.value_form().to_text()
    rec["torsion"] = sj.invariants.torsion.value_form().to_text() \
        if sj.w2 <= 1e-7 else None
    rec["residuals"] = {k: (float(v) if v is not None else None)
                        for k, v in residuals.items()}
    return rec


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args, example, points):
    records = []
    for p in points:
        sj = example["field"].at(p)
        records.append({
            "point": [float(x) for x in p],
            "classification": sj.classification.to_record(),
            "lee_form": sj.theta.value_form().to_text(),
        })
    label_sets = {tuple(r["classification"]["labels"]) for r in records}
    summary = {
        "labels": sorted(label_sets.pop()) if len(label_sets) == 1 else "mixed",
        "pass": True,
    }
    return records, summary


def cmd_verify(args, example, points):
    suites = ["all"] if args.suite == "all" else [args.suite]
    records = []
    summary_max = {}
    if args.suite in ("pointwise",):
        res = run_pointwise_suite(args.seed)
        records.append({"pointwise": {k: float(v) for k, v in res.items()}})
        summary_max.update(res)
    else:
        phi = None
        if args.suite in ("th3", "all"):
            phi = parse_dilation(args.dilation, example, example["field"].chart)
        for p in points:
            sj = example["field"].at(p)
            rec = run_point(example, sj, suites, phi, args.tol)
            records.append(rec)
            for k, v in rec["residuals"].items():
                if v is not None:
                    summary_max[k] = max(summary_max.get(k, 0.0), v)
        if args.suite in ("conventions", "all") and example.get("f") is not None:
            base = make_parallel()
            weights = conformal_torsion_weight_check(base, example["f"], points[0])
            records.append({"conformal_torsion_weights": weights})
            summary_max["conformal_torsion_e2f"] = weights["e^2f"]
    ok = all(v <= args.tol for v in summary_max.values())
    summary = {"max_residuals": {k: float(v) for k, v in sorted(summary_max.items())},
               "pass": bool(ok)}
    return records, summary


def cmd_curvature(args, example, points):
    records = []
    summary_max = {}
    for p in points:
        sj = example["field"].at(p)
        report = verify_th2(sj)
        rec = {"point": [float(x) for x in p], "curvature": report.to_record()}
        if example["immersion"] is not None:
            sd = shape_data(example["immersion"], p)
            rec["gauss"] = {
                "scal": sd.gauss_scalar(),
                "trace_S": sd.trace,
                "residual_vs_lc": abs(sd.gauss_scalar() - report.scal_lc)
                / (abs(report.scal_lc) + abs(sd.gauss_scalar()) + 1.0),
            }
            rec["sur"] = verify_sur(example["immersion"], p, field=example["field"])
            summary_max["gauss_vs_lc"] = max(summary_max.get("gauss_vs_lc", 0.0),
                                             rec["gauss"]["residual_vs_lc"])
        records.append(rec)
        for k, v in report.residuals.items():
            summary_max[k] = max(summary_max.get(k, 0.0), float(v))
    ok = all(v <= args.tol for v in summary_max.values())
    return records, {"max_residuals": {k: float(v) for k, v in sorted(summary_max.items())},
                     "pass": bool(ok)}


def _load_config_file(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"malformed config line {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def make_parser():
    parser = argparse.ArgumentParser(
        prog="g2kit",
        description="Verification toolkit for G2-structures with skew-torsion connections")
    parser.add_argument("--version", action="version", version=f"g2kit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("classify", "Fernandez-Gray classification at sample points"),
                       ("verify", "run an identity suite"),
                       ("curvature", "per-point curvature reports")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--example", default=None, choices=EXAMPLES)
        p.add_argument("--params", default=None,
                       help="comma-separated key=value example parameters")
        p.add_argument("--points", type=int, default=None, help="sample point count")
        p.add_argument("--seed", type=int, default=None, help="sampling seed")
        p.add_argument("--tol", type=float, default=None, help="pass/fail tolerance")
        p.add_argument("--json", default=None, help="write the report to this path")
        p.add_argument("--config", default=None, help="key=value config file (flags win)")
        if name == "verify":
            p.add_argument("--suite", default=None, choices=SUITES)
            p.add_argument("--dilation", default=None,
                           help="dilation Phi: multiples of f like '-2f', a polynomial, or a constant")
    return parser


_DEFAULTS = {"example": "parallel", "points": 5, "seed": 0, "tol": 1e-6,
             "suite": "th2", "dilation": "0", "params": ""}


def _merge_config(args):
    cfg = _load_config_file(args.config) if args.config else {}
    for key, default in _DEFAULTS.items():
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None:
            raw = cfg.get(key, default)
            caster = type(default)
            setattr(args, key, caster(raw) if raw is not None else None)
    return args


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    # let values like "-2f" follow --dilation without argparse eating them
    for i in range(len(argv) - 1):
        if argv[i] == "--dilation" and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"--dilation={argv[i + 1]}"]
            break
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        params = _parse_params(args.params)
        example = build_example(args.example, params, args.seed)
        if args.tol <= 0:
            raise ConfigError("tolerance must be positive")
    except (ConfigError, OSError, ValueError) as exc:
        print(f"g2kit: configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        points = halton_points(example["field"].chart, args.points, args.seed)
        if args.command == "classify":
            records, summary = cmd_classify(args, example, points)
        elif args.command == "verify":
            records, summary = cmd_verify(args, example, points)
        else:
            records, summary = cmd_curvature(args, example, points)
    except ConfigError as exc:
        print(f"g2kit: configuration error: {exc}", file=sys.stderr)
        return 2
    except G2KitError as exc:
        print(f"g2kit: computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    conventions = dict(CONVENTIONS)
    conventions["kernel_backend"] = kernels.backend_name
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "config": {
            "example": args.example,
            "params": params,
            "points": args.points,
            "seed": args.seed,
            "tol": args.tol,
            **({"suite": args.suite, "dilation": args.dilation}
               if args.command == "verify" else {}),
        },
        "conventions": conventions,
        "points": records,
        "summary": {**summary, "tolerance": args.tol},
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if report["summary"]["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
