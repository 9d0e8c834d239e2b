"""Definitional evaluation of the geometric objects by numerical differentiation.

Nothing here uses the closed forms for the quantity being checked.  The metric
and spray are built from the scalar field F*^2 alone (sigma and h11 are only
*evaluated*, never differentiated exactly); connection and curvature objects
are built by differentiating the lower-level closed-form components, which
are checked separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import expr as _expr
from . import finite_diff as fd
from .connection import cartan, horizontal_cartan, nonlinear_connection, vertical_cartan
from .errors import DomainError, ExpressionError
from .finite_diff import DiffScheme
from .jet_geometry import GeometryConfig, JetPoint, check_point, metric, sigma_data, x_names


@dataclass(frozen=True)
class Tolerances:
    """Per-check tolerances (relative to max(1, max|reference|) unless noted)."""

    metric: float = 1e-5
    spray: float = 1e-5
    nonlinear: float = 1e-3
    cartan_L: float = 1e-5
    cartan_C: float = 1e-5
    cartan_G: float = 1e-6
    torsion: float = 1e-5
    curvature: float = 1e-5
    ricci: float = 1e-5
    scalar: float = 1e-5
    metric_oracle_source: float = 1e-3
    identity: float = 1e-10
    contraction: float = 1e-9
    structural_zero: float = 1e-10
    p_curv_match: float = 1e-12
    conservation: float = 1e-5  # absolute
    tensoriality: float = 1e-4
    homogeneity: float = 1e-12


TOLERANCES = Tolerances()

# one Richardson level keeps the curvature-level oracles well inside 1e-5
ORACLE_SCHEME = DiffScheme(richardson=True)


def deviation(a, b) -> float:
    """max |a - b| scaled by max(1, max |b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0


# ---------------------------------------------------------------------------
# Scalar fields evaluated from values only


def _h11_value(cfg, t):
    h = float(_expr.evaluate(cfg.h11, {"t": float(t)}))
    if not h > 0:
        raise DomainError(f"h11(t={t}) = {h} is not positive")
    return h


def _h11_values(cfg, t):
    t = np.asarray(t, dtype=float)
    h = np.broadcast_to(np.asarray(_expr.evaluate(cfg.h11, {"t": t}), dtype=float), t.shape)
    return h


def energy_lagrangian(cfg: GeometryConfig, z):
    """F*^2 at flat coordinates z = (t, x, y); z may be a batch of shape (M, 2n+1)."""
    n = cfg.n
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zb = np.atleast_2d(z)
    G = np.prod(zb[:, n + 1 :], axis=1)
    if np.any(G <= 0):
        raise DomainError("y-product is not positive")
    h = _h11_values(cfg, zb[:, 0])
    if np.any(h <= 0):
        raise DomainError("h11 is not positive")
    env = {name: zb[:, i + 1] for i, name in enumerate(x_names(n))}
    sig = np.broadcast_to(np.asarray(_expr.evaluate(cfg.sigma, env), dtype=float), G.shape)
    out = np.exp(2.0 * sig) / h * np.exp(2.0 / n * np.log(G))
    return float(out[0]) if single else out


def _valid_batch(cfg):
    n = cfg.n

    def ok(pts):
        good = np.all(pts[:, n + 1 :] != 0, axis=1) & (np.prod(pts[:, n + 1 :], axis=1) > 0)
        with np.errstate(all="ignore"):
            try:
                good &= _h11_values(cfg, pts[:, 0]) > 0
            except DomainError:
                return np.zeros(len(pts), dtype=bool)
        return good

    return ok


def _valid(cfg):
    batch = _valid_batch(cfg)
    return lambda z: bool(batch(np.atleast_2d(z))[0])


def oracle_kappa(cfg, t, scheme=ORACLE_SCHEME):
    """Christoffel symbol of h11 from a central difference of h11."""
    f = lambda pts: _h11_values(cfg, pts[:, 0])
    valid = lambda pts: np.isfinite(_safe_h11(cfg, pts[:, 0])) & (_safe_h11(cfg, pts[:, 0]) > 0)
    grad, _ = fd.stencil_derivatives(f, np.array([float(t)]), [0], [], scheme, valid)
    return 0.5 / _h11_value(cfg, t) * float(grad[0])


def _safe_h11(cfg, t):
    try:
        with np.errstate(all="ignore"):
            return _h11_values(cfg, t)
    except DomainError:
        return np.full(np.shape(t), -1.0)


# ---------------------------------------------------------------------------
# Metric, spray, nonlinear connection


def oracle_metric(cfg: GeometryConfig, p: JetPoint, scheme: DiffScheme = ORACLE_SCHEME) -> np.ndarray:
    """(h11 / 2) d^2 F*^2 / dy^i dy^j by central differences."""
    check_point(cfg, p)
    n = cfg.n
    ys = fd.y_axes(n)
    pairs = [(ys[a], ys[b]) for a in range(n) for b in range(a, n)]
    f = lambda pts: energy_lagrangian(cfg, pts)
    _, hess = fd.stencil_derivatives(f, p.as_vector(), [], pairs, scheme, _valid_batch(cfg))
    g = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            g[a, b] = g[b, a] = hess[ys[a], ys[b]]
    return 0.5 * _h11_value(cfg, p.t) * g


def oracle_spray(cfg: GeometryConfig, p: JetPoint, scheme: DiffScheme = ORACLE_SCHEME) -> np.ndarray:
    """Spatial spray G^{(i)}_{(1)1} from its defining five-term bracket."""
    check_point(cfg, p)
    n = cfg.n
    y = p.y
    xs, ys = fd.x_axes(n), fd.y_axes(n)
    h11 = _h11_value(cfg, p.t)
    kappa = oracle_kappa(cfg, p.t, scheme)

    pairs = [(ys[a], ys[b]) for a in range(n) for b in range(a, n)]
    pairs += [(xa, yb) for xa in xs for yb in ys] + [(0, yb) for yb in ys]
    f = lambda pts: energy_lagrangian(cfg, pts)
    grad, hess = fd.stencil_derivatives(f, p.as_vector(), xs + ys, pairs, scheme, _valid_batch(cfg))

    g = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            g[a, b] = g[b, a] = 0.5 * h11 * hess[ys[a], ys[b]]
    g_inv = np.linalg.inv(g)

    bracket = np.empty(n)
    for q in range(n):
        acc = -grad[xs[q]] + hess[0, ys[q]] + grad[ys[q]] * kappa
        for r in range(n):
            acc += hess[xs[r], ys[q]] * y[r] + 2.0 / h11 * kappa * g[q, r] * y[r]
        bracket[q] = acc
    return 0.25 * h11 * g_inv @ bracket


def oracle_nonlinear(cfg: GeometryConfig, p: JetPoint, scheme: DiffScheme = ORACLE_SCHEME) -> np.ndarray:
    """N^{(i)}_{(1)j} = dG^{(i)}/dy^j, differentiating the oracle spray.

    The outer difference uses ``scheme.eps_nested``: its integrand carries the
    rounding noise of a second-derivative estimate, which a first-derivative
    step would amplify.  Richardson extrapolation is switched off at both
    levels for the same reason.
    """
    check_point(cfg, p)
    plain = replace(scheme, richardson=False)
    f = lambda zz: oracle_spray(cfg, JetPoint.from_vector(zz), plain)
    return fd.jacobian(f, p.as_vector(), fd.y_axes(cfg.n), plain, eps=scheme.eps_nested, valid=_valid(cfg))


# ---------------------------------------------------------------------------
# Cartan connection


@dataclass(frozen=True)
class OracleCartan:
    L: np.ndarray
    C: np.ndarray
    G_j1: np.ndarray


def oracle_cartan(
    cfg: GeometryConfig, p: JetPoint, scheme: DiffScheme = ORACLE_SCHEME, metric_source: str = "closed"
) -> OracleCartan:
    """Cartan components from adapted derivatives of the metric.

    ``metric_source`` selects whether the differentiated metric is the closed
    form ("closed") or :func:`oracle_metric` ("oracle", nested differences).
    """
    check_point(cfg, p)
    n = cfg.n
    y = p.y
    z = p.as_vector()
    valid = _valid(cfg)
    if metric_source == "closed":
        g_fn = lambda zz: metric(cfg, JetPoint.from_vector(zz)).g
        eps = None
    elif metric_source == "oracle":
        g_fn = lambda zz: oracle_metric(cfg, JetPoint.from_vector(zz), scheme)
        eps = scheme.eps_nested
    else:
        raise ValueError(f"unknown metric source {metric_source!r}")

    g = g_fn(z)
    g_inv = np.linalg.inv(g)
    _, N = nonlinear_connection(cfg, p)
    kappa = oracle_kappa(cfg, p.t, scheme)

    dg_dt = fd.partial(g_fn, z, 0, scheme, eps=eps, valid=valid)
    dg_dx = fd.jacobian(g_fn, z, fd.x_axes(n), scheme, eps=eps, valid=valid)  # [i, j, k]
    dg_dy = fd.jacobian(g_fn, z, fd.y_axes(n), scheme, eps=eps, valid=valid)

    # delta g_ij / delta x^k = dg/dx^k - N^{(p)}_k dg/dy^p
    dg_adapted = dg_dx - np.einsum("pk,ijp->ijk", N, dg_dy)
    # delta g_ij / delta t = dg/dt + kappa y^p dg/dy^p
    dg_t = dg_dt + kappa * np.einsum("p,ijp->ij", y, dg_dy)

    L = np.empty((n, n, n))
    C = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc_l = 0.0
                acc_c = 0.0
                for m in range(n):
                    acc_l += g_inv[i, m] * (dg_adapted[j, m, k] + dg_adapted[k, m, j] - dg_adapted[j, k, m])
                    acc_c += g_inv[i, m] * (dg_dy[j, m, k] + dg_dy[k, m, j] - dg_dy[j, k, m])
                L[i, j, k] = 0.5 * acc_l
                C[i, j, k] = 0.5 * acc_c
    G_j1 = 0.5 * g_inv @ dg_t  # [k, j]
    return OracleCartan(L=L, C=C, G_j1=G_j1)


# ---------------------------------------------------------------------------
# Torsion and curvature


@dataclass(frozen=True)
class OracleCurvatures:
    R_tor: np.ndarray
    P_nl: np.ndarray
    R_curv: np.ndarray
    P_curv: np.ndarray
    S_curv: np.ndarray
    ricci_R: np.ndarray
    ricci_S: np.ndarray
    scalar_curvature: float


def oracle_curvatures(cfg: GeometryConfig, p: JetPoint, scheme: DiffScheme = ORACLE_SCHEME) -> OracleCurvatures:
    """Torsion and curvature d-tensors from their definitional displays.

    Derivatives of the closed-form N, L and C are taken by central differences
    along the adapted frame delta/delta x^k = d/dx^k - N^{(p)}_k d/dy^p.
    """
    check_point(cfg, p)
    n = cfg.n
    z = p.as_vector()
    valid = _valid(cfg)
    xs, ys = fd.x_axes(n), fd.y_axes(n)

    conn = cartan(cfg, p)
    N, L, C = conn.N, conn.L, conn.C

    N_fn = lambda zz: nonlinear_connection(cfg, JetPoint.from_vector(zz))[1]
    L_fn = lambda zz: horizontal_cartan(n, sigma_data(cfg, zz[1 : n + 1]).grad)
    C_fn = lambda zz: vertical_cartan(n, zz[n + 1 :])

    def adapted(fn):
        dx = fd.jacobian(fn, z, xs, scheme, valid=valid)
        dy = fd.jacobian(fn, z, ys, scheme, valid=valid)
        return dx - np.einsum("pk,...p->...k", N, dy), dy

    dN, dN_dy = adapted(N_fn)  # [r, i, j] = delta N^r_i / delta x^j
    dL, dL_dy = adapted(L_fn)  # [l, i, j, k] = delta L^l_ij / delta x^k
    dC, dC_dy = adapted(C_fn)  # [l, i, k, j] = delta C^l_{i(k)} / delta x^j

    R_tor = dN - dN.transpose(0, 2, 1)
    P_nl = dN_dy - L

    # every contraction below sums over r only
    R_curv = (
        dL
        - dL.transpose(0, 1, 3, 2)
        + np.einsum("rij,lrk->lijk", L, L)
        - np.einsum("rik,lrj->lijk", L, L)
        + np.einsum("lir,rjk->lijk", C, R_tor)
    )
    S_curv = (
        dC_dy
        - dC_dy.transpose(0, 1, 3, 2)
        + np.einsum("rij,lrk->lijk", C, C)
        - np.einsum("rik,lrj->lijk", C, C)
    )
    C_cov = (  # [l, i, k, j]
        dC
        + np.einsum("rik,lrj->likj", C, L)
        - np.einsum("lrk,rij->likj", C, L)
        - np.einsum("lir,rkj->likj", C, L)
    )
    P_curv = dL_dy - C_cov.transpose(0, 1, 3, 2) + np.einsum("lir,rjk->lijk", C, P_nl)

    ricci_R = np.einsum("mijm->ij", R_curv)
    ricci_S = np.einsum("mijm->ij", S_curv)
    met = metric(cfg, p)
    h11 = _h11_value(cfg, p.t)
    Sc = float(np.sum(met.g_inv * ricci_R) + h11 * np.sum(met.g_inv * ricci_S))
    return OracleCurvatures(R_tor, P_nl, R_curv, P_curv, S_curv, ricci_R, ricci_S, Sc)


# ---------------------------------------------------------------------------
# Coordinate changes


@dataclass(frozen=True)
class JetDiffeo:
    """Diagonal affine change t~ = c t + d, x~^i = a_i x^i."""

    c: float = 1.0
    d: float = 0.0
    a: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if self.c == 0 or any(v == 0 for v in self.a):
            raise ValueError("JetDiffeo requires c != 0 and every a_i != 0")


def transform_point(p: JetPoint, d: JetDiffeo) -> JetPoint:
    a = np.asarray(d.a, dtype=float) if d.a else np.ones(p.n)
    return JetPoint(d.c * p.t + d.d, a * p.x, a / d.c * p.y)


def pullback_geometry(cfg: GeometryConfig, d: JetDiffeo) -> GeometryConfig:
    """Geometry in the transformed coordinates, written in the same grammar.

    sigma~(x~) = sigma(x~ / a) - (1/n) log|prod a_i|
    h11~(t~)  = h11((t~ - d) / c) / c^2

    The constant shift keeps F* a scalar: the Berwald-Moor factor picks up
    |prod a_i|^(1/n) / |c| and sqrt(h^11) picks up |c|.
    """
    n = cfg.n
    a = list(d.a) if d.a else [1.0] * n
    if len(a) != n:
        raise ExpressionError(f"diffeomorphism has {len(a)} scale factors, geometry has n={n}")
    jac_det = float(np.prod(a)) / d.c**n
    if not jac_det > 0:
        raise ExpressionError("map reverses the sign of the y-product; the pulled-back domain is empty")
    names = x_names(n)
    x_sub = {name: _expr.BinOp("/", _expr.Var(name), _expr.Num(ai)) for name, ai in zip(names, a)}
    shifted = _expr.substitute(cfg.sigma, x_sub, names)
    shift = math.log(abs(float(np.prod(a)))) / n
    sigma_src = f"{shifted} - {repr(shift)}" if shift >= 0 else f"{shifted} + {repr(-shift)}"
    t_sub = {
        "t": _expr.BinOp("/", _expr.BinOp("-", _expr.Var("t"), _expr.Num(d.d)), _expr.Num(d.c))
    }
    h_src = f"{_expr.substitute(cfg.h11, t_sub, ['t'])} / {repr(d.c * d.c)}"
    # re-parse: the pulled-back geometry must be expressible as text
    return GeometryConfig.from_sources(n, sigma_src, h_src, cfg.einstein_K)


def tensoriality_residual(
    cfg: GeometryConfig, d: JetDiffeo, p: JetPoint, scheme: DiffScheme = ORACLE_SCHEME
) -> float:
    """Deviation between g at p and the pull-back of g~ at the image point."""
    tilde_cfg = pullback_geometry(cfg, d)
    tilde_p = transform_point(p, d)
    g_tilde = oracle_metric(tilde_cfg, tilde_p, scheme)
    a = np.asarray(d.a, dtype=float) if d.a else np.ones(cfg.n)
    # g_ij = (dx~^k/dx^i)(dx~^l/dx^j) g~_kl with a diagonal Jacobian
    pulled = np.empty_like(g_tilde)
    for i in range(cfg.n):
        for j in range(cfg.n):
            pulled[i, j] = a[i] * a[j] * g_tilde[i, j]
    return deviation(pulled, oracle_metric(cfg, p, scheme))
