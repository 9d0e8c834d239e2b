"""Curvature d-tensors, Ricci pair, scalar curvature and Einstein-like blocks.

Rank-4 layouts: ``R_curv[l, i, j, k]`` is R^l_ijk, ``P_curv[l, i, j, k]`` is
P^{l (1)}_{ij(k)}, ``S_curv[l, i, j, k]`` is S^{l(1)(1)}_{i(j)(k)}, and the
h-covariant derivative of the vertical Cartan component is stored as
``[l, i, k, j]`` for C^{l(1)}_{i(k)|j}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import finite_diff as fd
from .connection import cartan, horizontal_cartan, nonlinear_y_defect, torsions, vertical_cartan
from .jet_geometry import (
    GeometryConfig,
    JetPoint,
    check_point,
    conformal_factor,
    metric,
    sigma_data,
    temporal_data,
)


@dataclass(frozen=True)
class CurvatureBundle:
    R_curv: np.ndarray
    P_curv: np.ndarray
    S_curv: np.ndarray
    ricci_R: np.ndarray
    ricci_S: np.ndarray
    Y11: float
    scalar_curvature: float


@dataclass(frozen=True)
class EinsteinBlocks:
    lhs_tt: float
    lhs_xx: np.ndarray
    lhs_vv: np.ndarray
    zero_list: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StressEnergy:
    """Stress-energy components.

    ``T11``, ``T_ij`` and ``T_vv`` are the covariant blocks on dt, dx and
    delta-y.  The mixed forms are, in order: ``mixed_tt`` T^1_1,
    ``mixed_xt`` T^m_1, ``mixed_vt`` T^{(m)}_{(1)1}, ``mixed_tx`` T^1_i,
    ``E`` E^m_i (stored [m, i]), ``mixed_vx`` T^{(m)}_{(1)i},
    ``mixed_tv`` T^{1(1)}_{(i)}, ``mixed_xv`` T^{m(1)}_{(i)} and
    ``mixed_vv`` T^{(m)(1)}_{(1)(i)}; two-index ones are stored [m, i].
    """

    T11: float
    T_ij: np.ndarray
    T_vv: np.ndarray
    zero_blocks: dict
    mixed_tt: float
    mixed_xt: np.ndarray
    mixed_vt: np.ndarray
    mixed_tx: np.ndarray
    E: np.ndarray
    mixed_vx: np.ndarray
    mixed_tv: np.ndarray
    mixed_xv: np.ndarray
    mixed_vv: np.ndarray


def vertical_cartan_dy(n, y) -> np.ndarray:
    """dC^{l(1)}_{i(j)}/dy^k, layout [l, i, j, k]."""
    C = vertical_cartan(n, y)
    out = np.empty((n, n, n, n))
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    expo = (l == k) - (i == k) - (j == k)
                    out[l, i, j, k] = C[l, i, j] * expo / y[k]
    return out


def covariant_C_derivative(cfg: GeometryConfig, p: JetPoint) -> np.ndarray:
    """C^{l(1)}_{i(k)|j}, layout [l, i, k, j]."""
    check_point(cfg, p)
    n = cfg.n
    sig = sigma_data(cfg, p.x)
    C = vertical_cartan(n, p.y)
    dC = vertical_cartan_dy(n, p.y)
    L = horizontal_cartan(n, sig.grad)
    out = np.zeros((n, n, n, n))
    for l in range(n):
        for i in range(n):
            for k in range(n):
                for j in range(n):
                    # C has no x dependence, so dC/dx^j drops out of the adapted derivative
                    val = -n * sig.grad[j] * p.y[j] * dC[l, i, k, j]
                    for r in range(n):
                        val += C[r, i, k] * L[l, r, j]
                        val -= C[l, r, k] * L[r, i, j]
                        val -= C[l, i, r] * L[r, k, j]
                    out[l, i, k, j] = val
    return out


def _dL_dx(n, sigma_hess):
    """dL^l_ij/dx^k, layout [l, i, j, k]."""
    out = np.zeros((n, n, n, n))
    for l in range(n):
        for k in range(n):
            out[l, l, l, k] = n * sigma_hess[l, k]
    return out


def curvature_tensors(cfg: GeometryConfig, p: JetPoint) -> CurvatureBundle:
    check_point(cfg, p)
    n = cfg.n
    y = p.y
    sig = sigma_data(cfg, p.x)
    L = horizontal_cartan(n, sig.grad)
    C = vertical_cartan(n, y)
    R_tor, _ = torsions(cfg, p)

    dL = _dL_dx(n, sig.hess)
    R = (
        dL
        - dL.transpose(0, 1, 3, 2)
        + np.einsum("rij,lrk->lijk", L, L)
        - np.einsum("rik,lrj->lijk", L, L)
        + np.einsum("lir,rjk->lijk", C, R_tor)
    )

    # P^{l (1)}_{ij(k)} = dL/dy - C_{i(k)|j} + C^l_{i(r)} P^{(r) (1)}_{(1)j(k)}
    P_nl = nonlinear_y_defect(cfg, p)
    dC = vertical_cartan_dy(n, y)
    adapted = -n * (sig.grad * y)[None, None, None, :] * dC  # delta C^l_ik / delta x^j, [l,i,k,j]
    cov = (
        adapted
        + np.einsum("rik,lrj->likj", C, L)
        - np.einsum("lrk,rij->likj", C, L)
        - np.einsum("lir,rkj->likj", C, L)
    )
    P = -cov.transpose(0, 1, 3, 2) + np.einsum("lir,rjk->lijk", C, P_nl)

    S = (
        dC
        - dC.transpose(0, 1, 3, 2)
        + np.einsum("rij,lrk->lijk", C, C)
        - np.einsum("rik,lrj->lijk", C, C)
    )
    ricci_R, ricci_S = ricci(cfg, p)
    Sc, Y11 = scalar_curvature(cfg, p)
    return CurvatureBundle(R, P, S, ricci_R, ricci_S, Y11, Sc)


def ricci(cfg: GeometryConfig, p: JetPoint):
    """The two effective Ricci d-tensors (R_ij, S^{(1)(1)}_{(i)(j)})."""
    check_point(cfg, p)
    n = cfg.n
    y = p.y
    hess = sigma_data(cfg, p.x).hess
    R = np.zeros((n, n))
    S = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                acc = -hess[i, j]
                for m in range(n):
                    if m != j:
                        acc -= hess[j, m] * y[m] / y[i]
                R[i, j] = acc
            delta = 1.0 if i == j else 0.0
            S[i, j] = (2.0 / n**2 - 1.0 / n + (1.0 - 2.0 / n) * delta) / (y[i] * y[j])
    return R, S


def y11(cfg: GeometryConfig, p: JetPoint) -> float:
    """Y_11 = sum over p < q of sigma_pq y^p y^q."""
    hess = sigma_data(cfg, p.x).hess
    total = 0.0
    for a in range(cfg.n):
        for b in range(a + 1, cfg.n):
            total += hess[a, b] * p.y[a] * p.y[b]
    return total


def scalar_curvature(cfg: GeometryConfig, p: JetPoint):
    """Return (Sc, Y11)."""
    check_point(cfg, p)
    n = cfg.n
    Y = y11(cfg, p)
    h11 = temporal_data(cfg, p.t).h11
    Sc = -conformal_factor(cfg, p) * (4 * n * Y + (n * n - 3 * n + 2) * h11)
    return Sc, Y


def einstein_bracket(cfg: GeometryConfig, p: JetPoint) -> float:
    """exp(-2 sigma) G^(-2/n) [2n Y11 + (n^2 - 3n + 2)/2 h11], shared by all Einstein blocks."""
    n = cfg.n
    h11 = temporal_data(cfg, p.t).h11
    return conformal_factor(cfg, p) * (2 * n * y11(cfg, p) + 0.5 * (n * n - 3 * n + 2) * h11)


def _zero_blocks(n):
    return {
        "T_1i": np.zeros(n),
        "T_i1": np.zeros(n),
        "T^(1)_(i)1": np.zeros(n),
        "T^(1)_1(i)": np.zeros(n),
        "T^(1)_i(j)": np.zeros((n, n)),
        "T^(1)_(i)j": np.zeros((n, n)),
    }


def einstein_blocks(cfg: GeometryConfig, p: JetPoint) -> EinsteinBlocks:
    check_point(cfg, p)
    temp = temporal_data(cfg, p.t)
    bracket = einstein_bracket(cfg, p)
    g = metric(cfg, p).g
    R, S = ricci(cfg, p)
    return EinsteinBlocks(
        lhs_tt=bracket * temp.h11,
        lhs_xx=R + bracket * g,
        lhs_vv=S + bracket * temp.h11_inv * g,
        zero_list=_zero_blocks(cfg.n),
    )


def stress_energy(cfg: GeometryConfig, p: JetPoint) -> StressEnergy:
    check_point(cfg, p)
    n = cfg.n
    K = cfg.einstein_K
    y = p.y
    blocks = einstein_blocks(cfg, p)
    temp = temporal_data(cfg, p.t)
    met = metric(cfg, p)
    bracket = einstein_bracket(cfg, p)
    phi = conformal_factor(cfg, p)
    Y = y11(cfg, p)
    R, _ = ricci(cfg, p)

    E = np.empty((n, n))
    vv = np.empty((n, n))
    for m in range(n):
        for i in range(n):
            delta = 1.0 if m == i else 0.0
            acc = 0.0
            for r in range(n):
                acc += met.g_inv[m, r] * R[r, i]
            E[m, i] = (acc + bracket * delta) / K
            vv[m, i] = phi / K * (
                (n - 2) / n * temp.h11 * y[m] / y[i]
                + (2 * n * Y + 0.5 * (n * n - 5 * n + 6) * temp.h11) * delta
            )
    return StressEnergy(
        T11=blocks.lhs_tt / K,
        T_ij=blocks.lhs_xx / K,
        T_vv=blocks.lhs_vv / K,
        zero_blocks=blocks.zero_list,
        mixed_tt=bracket / K,
        mixed_xt=np.zeros(n),
        mixed_vt=np.zeros(n),
        mixed_tx=np.zeros(n),
        E=E,
        mixed_vx=np.zeros((n, n)),
        mixed_tv=np.zeros(n),
        mixed_xv=np.zeros((n, n)),
        mixed_vv=vv,
    )


CONSERVATION_SCHEME = fd.DiffScheme(richardson=True)


def _stress_vector(cfg, z):
    se = stress_energy(cfg, JetPoint.from_vector(z))
    return np.concatenate(
        [
            [se.mixed_tt],
            se.mixed_xt,
            se.mixed_vt,
            se.mixed_tx,
            se.E.ravel(),
            se.mixed_vx.ravel(),
            se.mixed_tv,
            se.mixed_xv.ravel(),
            se.mixed_vv.ravel(),
        ]
    )


def _unpack(vec, n):
    sizes = [1, n, n, n, n * n, n * n, n, n * n, n * n]
    parts = np.split(vec, np.cumsum(sizes)[:-1], axis=0)
    names = ["tt", "xt", "vt", "tx", "E", "vx", "tv", "xv", "vv"]
    out = dict(zip(names, parts))
    out["tt"] = out["tt"][0]
    for key in ("E", "vx", "xv", "vv"):
        out[key] = out[key].reshape((n, n) + out[key].shape[1:])
    return out


def vertical_law_rhs(cfg: GeometryConfig, p: JetPoint) -> np.ndarray:
    """Right-hand side of the third conservation law, (2 Phi / K)[n dY11/dy^i - 2 Y11 / y^i]."""
    n = cfg.n
    y = p.y
    hess = sigma_data(cfg, p.x).hess
    phi = conformal_factor(cfg, p)
    Y = y11(cfg, p)
    out = np.empty(n)
    for i in range(n):
        dY = sum(hess[i, q] * y[q] for q in range(n) if q != i)
        out[i] = 2.0 * phi / cfg.einstein_K * (n * dY - 2.0 * Y / y[i])
    return out


def conservation_residuals(cfg: GeometryConfig, p: JetPoint, scheme=CONSERVATION_SCHEME):
    """Absolute residuals (LHS - RHS) of the three geometrical conservation laws.

    The laws are evaluated from their defining covariant-derivative displays;
    t-, x- and y-derivatives of the stress-energy components are taken by
    central differences, sigma and h11 derivatives are exact.
    """
    check_point(cfg, p)
    n = cfg.n
    y = p.y
    K = cfg.einstein_K
    z = p.as_vector()
    sig = sigma_data(cfg, p.x)
    kappa = temporal_data(cfg, p.t).kappa
    conn = cartan(cfg, p)
    L, C, G_j1 = conn.L, conn.C, conn.G_j1

    def field_fn(zz):
        return _stress_vector(cfg, zz)

    T = _unpack(field_fn(z), n)
    dt = _unpack(fd.partial(field_fn, z, fd.t_axis(), scheme), n)
    dx = _unpack(fd.jacobian(field_fn, z, fd.x_axes(n), scheme), n)
    dy = _unpack(fd.jacobian(field_fn, z, fd.y_axes(n), scheme), n)

    def delta_t(key):
        # delta/delta t = d/dt + kappa y^p d/dy^p
        return dt[key] + kappa * (dy[key] @ y)

    def delta_x(key, m):
        # delta/delta x^m = d/dx^m - n sigma_m y^m d/dy^m   (no sum by m)
        return dx[key][..., m] - n * sig.grad[m] * y[m] * dy[key][..., m]

    trace_L = np.einsum("rmm->r", L)  # L^m_rm
    trace_C = np.einsum("mrm->r", C)  # C^m_{r(m)}

    # first law
    law1 = delta_t("tt")
    law1 += sum(delta_x("xt", m)[m] for m in range(n)) + T["xt"] @ trace_L
    law1 += sum(dy["vt"][m, m] for m in range(n)) + T["vt"] @ trace_C

    # second law
    res2 = np.empty(n)
    for i in range(n):
        lhs = delta_t("tx")[i] + T["tx"][i] * kappa - T["tx"] @ G_j1[:, i]
        div_E = sum(delta_x("E", m)[m, i] for m in range(n))
        lhs += div_E + sum(T["E"][r, i] * trace_L[r] for r in range(n))
        lhs -= sum(T["E"][m, r] * L[r, i, m] for m in range(n) for r in range(n))
        lhs += sum(dy["vx"][m, i, m] for m in range(n))
        lhs += sum(T["vx"][r, i] * trace_C[r] for r in range(n))
        lhs -= sum(T["vx"][m, r] * C[r, i, m] for m in range(n) for r in range(n))
        rhs = div_E + n * sum(T["E"][m, i] * sig.grad[m] for m in range(n))
        rhs -= n * T["E"][i, i] * sig.grad[i]
        res2[i] = lhs - rhs

    # third law
    rhs3 = vertical_law_rhs(cfg, p)
    res3 = np.empty(n)
    for i in range(n):
        lhs = delta_t("tv")[i] + 2.0 * T["tv"][i] * kappa
        lhs += sum(delta_x("xv", m)[m, i] for m in range(n))
        lhs += sum(T["xv"][r, i] * trace_L[r] for r in range(n))
        lhs -= sum(T["xv"][m, r] * L[r, i, m] for m in range(n) for r in range(n))
        lhs += sum(dy["vv"][m, i, m] for m in range(n))
        lhs += sum(T["vv"][r, i] * trace_C[r] for r in range(n))
        lhs -= sum(T["vv"][m, r] * C[r, i, m] for m in range(n) for r in range(n))
        res3[i] = lhs - rhs3[i]

    return abs(float(law1)), float(np.max(np.abs(res2))), float(np.max(np.abs(res3)))


def em_tensor(cfg: GeometryConfig, p: JetPoint) -> np.ndarray:
    """Electromagnetic d-form components F^{(1)}_{(i)j}, full summations."""
    check_point(cfg, p)
    n = cfg.n
    y = p.y
    g = metric(cfg, p).g
    conn = cartan(cfg, p)
    N, L = conn.N, conn.L
    h_inv = temporal_data(cfg, p.t).h11_inv
    F = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for m in range(n):
                acc += g[j, m] * N[m, i] - g[i, m] * N[m, j]
                for r in range(n):
                    acc += (g[i, r] * L[r, j, m] - g[j, r] * L[r, i, m]) * y[m]
            F[i, j] = 0.5 * h_inv * acc
    return F
