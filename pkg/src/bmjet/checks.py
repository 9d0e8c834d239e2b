"""Invariant suites run by ``verify``.

Every check reduces to a non-negative deviation per sample point; the report
keeps the maximum over points and compares it with the check's tolerance.
Deviations are relative to ``max(1, max|reference|)`` unless the check is an
absolute one (conservation residuals, structural zeros).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .connection import cartan, nonlinear_connection, nonlinear_y_defect, spray, torsions
from .curvature import (
    conservation_residuals,
    covariant_C_derivative,
    curvature_tensors,
    einstein_blocks,
    em_tensor,
    stress_energy,
)
from .errors import DomainError, ExpressionError
from .jet_geometry import GeometryConfig, JetPoint, fstar, metric, temporal_data
from .oracle import TOLERANCES, JetDiffeo, Tolerances, deviation


@dataclass(frozen=True)
class CheckSpec:
    name: str
    anchor: str
    tolerance_key: str
    suite: str


@dataclass
class CheckResult:
    name: str
    anchor: str
    max_dev: float
    tol: float
    passed: bool

    def as_dict(self):
        dev = self.max_dev if math.isfinite(self.max_dev) else None
        return {"name": self.name, "anchor": self.anchor, "max_dev": dev, "tol": self.tol, "pass": self.passed}


def _spec(suite, name, anchor, key):
    return CheckSpec(f"{suite}.{name}", anchor, key, suite)


CHECKS = [
    _spec("metric", "inverse", "metric-inverse-product", "identity"),
    _spec("metric", "euler", "metric-euler-contraction", "identity"),
    _spec("metric", "homogeneity", "metric-zero-homogeneity", "homogeneity"),
    _spec("connection", "C_symmetry", "cartan-C-identities", "identity"),
    _spec("connection", "C_y_contraction", "cartan-C-identities", "identity"),
    _spec("connection", "C_trace", "cartan-C-identities", "identity"),
    _spec("connection", "C_covariant_trace", "cartan-C-identities", "identity"),
    _spec("connection", "G_j1_zero", "cartan-temporal-component-zero", "structural_zero"),
    _spec("connection", "torsion_antisymmetry", "torsion-R-antisymmetry", "structural_zero"),
    _spec("connection", "nonlinear_y_defect_zero", "curvature-P-nonlinear-zero", "structural_zero"),
    _spec("curvature", "ricci_R_contraction", "ricci-R-contraction", "contraction"),
    _spec("curvature", "ricci_S_contraction", "ricci-S-contraction", "contraction"),
    _spec("curvature", "ricci_R_zero_diagonal", "ricci-R-diagonal", "structural_zero"),
    _spec("curvature", "scalar_contraction", "scalar-curvature-contraction", "contraction"),
    _spec("curvature", "einstein_tt", "einstein-tt-scalar-identity", "identity"),
    _spec("curvature", "P_covariant_C", "curvature-P-covariant-C", "p_curv_match"),
    _spec("curvature", "antisymmetry", "curvature-R-S-antisymmetry", "identity"),
    _spec("curvature", "stress_energy_zero_blocks", "einstein-zero-blocks", "structural_zero"),
    _spec("curvature", "stress_energy_einstein", "einstein-blocks-stress-energy", "identity"),
    _spec("oracle", "metric", "oracle-metric-hessian", "metric"),
    _spec("oracle", "metric_inverse", "oracle-metric-inverse", "metric"),
    _spec("oracle", "spray", "oracle-spray-bracket", "spray"),
    _spec("oracle", "nonlinear", "oracle-nonlinear-dG-dy", "nonlinear"),
    _spec("oracle", "cartan_L", "oracle-cartan-L", "cartan_L"),
    _spec("oracle", "cartan_C", "oracle-cartan-C", "cartan_C"),
    _spec("oracle", "cartan_G", "oracle-cartan-temporal", "cartan_G"),
    _spec("oracle", "torsion", "oracle-torsion-R", "torsion"),
    _spec("oracle", "R_curv", "oracle-curvature-R", "curvature"),
    _spec("oracle", "P_curv", "oracle-curvature-P", "curvature"),
    _spec("oracle", "S_curv", "oracle-curvature-S", "curvature"),
    _spec("oracle", "ricci_R", "oracle-ricci-R", "ricci"),
    _spec("oracle", "ricci_S", "oracle-ricci-S", "ricci"),
    _spec("oracle", "scalar", "oracle-scalar-curvature", "scalar"),
    _spec("conservation", "law_t", "conservation-law-temporal", "conservation"),
    _spec("conservation", "law_x", "conservation-law-horizontal", "conservation"),
    _spec("conservation", "law_y", "conservation-law-vertical", "conservation"),
    _spec("em", "nullity", "em-form-null", "structural_zero"),
    _spec("tensoriality", "metric", "jet-coordinate-change-metric", "tensoriality"),
]

CHECK_NAMES = [c.name for c in CHECKS]
SUITES = sorted({c.suite for c in CHECKS})

HOMOGENEITY_FACTORS = (0.5, 2.0, 10.0)


def default_diffeos(n):
    """The diagonal maps used by the tensoriality suite, padded with ones to length n."""
    out = []
    for a in ((2.0, 1.0, 1.0), (1.0, 3.0, 2.0)):
        scale = (tuple(a) + (1.0,) * n)[:n]
        for c in (1.0, 2.0):
            out.append(JetDiffeo(c=c, a=scale))
    return out


def _zero(value, scale=1.0):
    """Absolute size of something that should vanish, relative to max(1, scale)."""
    value = np.asarray(value, dtype=float)
    return float(np.max(np.abs(value))) / max(1.0, float(scale)) if value.size else 0.0


def _metric_suite(cfg, p):
    met = metric(cfg, p)
    n = cfg.n
    h11 = temporal_data(cfg, p.t).h11
    euler = float(p.y @ met.g @ p.y)
    target = h11 * fstar(cfg, p) ** 2
    homog = 0.0
    for lam in HOMOGENEITY_FACTORS:
        scaled = metric(cfg, JetPoint(p.t, p.x, lam * p.y)).g
        homog = max(homog, deviation(scaled, met.g))
    return {
        "inverse": deviation(met.g @ met.g_inv, np.eye(n)),
        "euler": deviation(euler, target),
        "homogeneity": homog,
    }


def _connection_suite(cfg, p):
    conn = cartan(cfg, p)
    C = conn.C
    y = p.y
    scale_c = np.max(np.abs(C))
    # contraction with y: every term C^i_{j(m)} y^m is of the size below
    scale_cy = np.max(np.abs(C * y[None, None, :]))
    cov = covariant_C_derivative(cfg, p)  # [l, i, k, j]
    cov_trace = np.einsum("mikm->ik", cov)
    R_tor, _ = torsions(cfg, p)
    return {
        "C_symmetry": _zero(C - C.transpose(0, 2, 1), scale_c),
        "C_y_contraction": _zero(np.einsum("ijm,m->ij", C, y), scale_cy),
        "C_trace": _zero(np.einsum("mjm->j", C), scale_c),
        "C_covariant_trace": _zero(cov_trace, np.max(np.abs(cov))),
        "G_j1_zero": _zero(conn.G_j1),
        "torsion_antisymmetry": _zero(R_tor + R_tor.transpose(0, 2, 1)),
        "nonlinear_y_defect_zero": _zero(nonlinear_y_defect(cfg, p)),
    }


def _curvature_suite(cfg, p):
    bundle = curvature_tensors(cfg, p)
    met = metric(cfg, p)
    h11 = temporal_data(cfg, p.t).h11
    blocks = einstein_blocks(cfg, p)
    se = stress_energy(cfg, p)
    K = cfg.einstein_K
    cov = covariant_C_derivative(cfg, p)
    sc_contracted = np.sum(met.g_inv * bundle.ricci_R) + h11 * np.sum(met.g_inv * bundle.ricci_S)
    antisym = max(
        deviation(bundle.R_curv, -bundle.R_curv.transpose(0, 1, 3, 2)),
        deviation(bundle.S_curv, -bundle.S_curv.transpose(0, 1, 3, 2)),
    )
    zeros = max(_zero(v) for v in se.zero_blocks.values())
    zeros = max(zeros, _zero(se.mixed_xt), _zero(se.mixed_vt), _zero(se.mixed_tx))
    zeros = max(zeros, _zero(se.mixed_vx), _zero(se.mixed_tv), _zero(se.mixed_xv))
    einstein = max(
        deviation(K * se.T11, blocks.lhs_tt),
        deviation(K * se.T_ij, blocks.lhs_xx),
        deviation(K * se.T_vv, blocks.lhs_vv),
    )
    return {
        "ricci_R_contraction": deviation(np.einsum("mijm->ij", bundle.R_curv), bundle.ricci_R),
        "ricci_S_contraction": deviation(np.einsum("mijm->ij", bundle.S_curv), bundle.ricci_S),
        "ricci_R_zero_diagonal": _zero(np.diag(bundle.ricci_R)),
        "scalar_contraction": deviation(sc_contracted, bundle.scalar_curvature),
        "einstein_tt": deviation(blocks.lhs_tt, -0.5 * bundle.scalar_curvature * h11),
        "P_covariant_C": deviation(bundle.P_curv, -cov.transpose(0, 1, 3, 2)),
        "antisymmetry": antisym,
        "stress_energy_zero_blocks": zeros,
        "stress_energy_einstein": einstein,
    }


def _oracle_suite(cfg, p):
    met = metric(cfg, p)
    H, Gs = spray(cfg, p)
    _, N = nonlinear_connection(cfg, p)
    conn = cartan(cfg, p)
    R_tor, _ = torsions(cfg, p)
    bundle = curvature_tensors(cfg, p)
    g_or = oracle.oracle_metric(cfg, p)
    oc = oracle.oracle_cartan(cfg, p)
    ocurv = oracle.oracle_curvatures(cfg, p)
    return {
        "metric": deviation(g_or, met.g),
        "metric_inverse": deviation(g_or @ met.g_inv, np.eye(cfg.n)),
        "spray": deviation(oracle.oracle_spray(cfg, p), Gs),
        "nonlinear": deviation(oracle.oracle_nonlinear(cfg, p), N),
        "cartan_L": deviation(oc.L, conn.L),
        "cartan_C": deviation(oc.C, conn.C),
        "cartan_G": deviation(oc.G_j1, conn.G_j1),
        "torsion": deviation(ocurv.R_tor, R_tor),
        "R_curv": deviation(ocurv.R_curv, bundle.R_curv),
        "P_curv": deviation(ocurv.P_curv, bundle.P_curv),
        "S_curv": deviation(ocurv.S_curv, bundle.S_curv),
        "ricci_R": deviation(ocurv.ricci_R, bundle.ricci_R),
        "ricci_S": deviation(ocurv.ricci_S, bundle.ricci_S),
        "scalar": deviation(ocurv.scalar_curvature, bundle.scalar_curvature),
    }


def _conservation_suite(cfg, p):
    r1, r2, r3 = conservation_residuals(cfg, p)
    return {"law_t": r1, "law_x": r2, "law_y": r3}


def _em_suite(cfg, p):
    return {"nullity": _zero(em_tensor(cfg, p))}


def _tensoriality_suite(cfg, p):
    worst = 0.0
    for d in default_diffeos(cfg.n):
        worst = max(worst, oracle.tensoriality_residual(cfg, d, p))
    return {"metric": worst}


SUITE_FUNCTIONS = {
    "metric": _metric_suite,
    "connection": _connection_suite,
    "curvature": _curvature_suite,
    "oracle": _oracle_suite,
    "conservation": _conservation_suite,
    "em": _em_suite,
    "tensoriality": _tensoriality_suite,
}


def resolve_tolerances(overrides=None, base: Tolerances = TOLERANCES):
    """Tolerance per check name; ``overrides`` maps check names to numbers."""
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(CHECK_NAMES)
    if unknown:
        raise KeyError(f"unknown check names in tolerance overrides: {sorted(unknown)}")
    out = {}
    for spec in CHECKS:
        out[spec.name] = float(overrides.get(spec.name, getattr(base, spec.tolerance_key)))
    return out


def run_checks(cfg: GeometryConfig, points, overrides=None, suites=None):
    """Run the selected suites over ``points``; returns (results, errors, observations)."""
    tols = resolve_tolerances(overrides)
    suites = SUITES if suites is None else list(suites)
    worst = {spec.name: 0.0 for spec in CHECKS if spec.suite in suites}
    errors = []
    asym = 0.0
    for idx, p in enumerate(points):
        for suite in suites:
            try:
                devs = SUITE_FUNCTIONS[suite](cfg, p)
            except (DomainError, ExpressionError) as exc:
                errors.append({"point": idx, "suite": suite, "error": str(exc)})
                for spec in CHECKS:
                    if spec.suite == suite:
                        worst[spec.name] = math.inf
                continue
            for key, dev in devs.items():
                name = f"{suite}.{key}"
                dev = float(dev)
                if not math.isfinite(dev):
                    dev = math.inf
                worst[name] = max(worst[name], dev)
        try:
            R = curvature_tensors(cfg, p).ricci_R
            asym = max(asym, float(np.max(np.abs(R - R.T))))
        except DomainError:
            pass
    results = []
    for spec in CHECKS:
        if spec.name not in worst:
            continue
        dev = worst[spec.name]
        tol = tols[spec.name]
        results.append(CheckResult(spec.name, spec.anchor, dev, tol, bool(dev <= tol)))
    observations = {"ricci_R_max_asymmetry": asym}
    return results, errors, observations
