"""Spray, canonical nonlinear connection, Cartan canonical connection, torsions.

Index layout used throughout the package: rank-3 arrays are stored as
``[upper, lower1, lower2]``, so ``L[i, j, k]`` is L^i_jk and ``C[i, j, k]`` is
C^{i(1)}_{j(k)}.  Torsion ``R_tor[r, i, j]`` is R^{(r)}_{(1)ij}.  Formulas
written "no sum" are evaluated as explicit component loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .jet_geometry import GeometryConfig, JetPoint, check_point, sigma_data, temporal_data


@dataclass(frozen=True)
class ConnectionBundle:
    H: np.ndarray
    Gs: np.ndarray
    M: np.ndarray
    N: np.ndarray
    kappa: float
    G_j1: np.ndarray
    L: np.ndarray
    C: np.ndarray


def spray(cfg: GeometryConfig, p: JetPoint):
    """Temporal and spatial spray components (H^{(i)}_{(1)1}, G^{(i)}_{(1)1})."""
    check_point(cfg, p)
    n = cfg.n
    kappa = temporal_data(cfg, p.t).kappa
    sig = sigma_data(cfg, p.x)
    H = np.empty(n)
    Gs = np.empty(n)
    for i in range(n):
        H[i] = -0.5 * kappa * p.y[i]
        Gs[i] = 0.5 * n * sig.grad[i] * p.y[i] ** 2
    return H, Gs


def nonlinear_connection(cfg: GeometryConfig, p: JetPoint):
    """Canonical nonlinear connection (M^{(i)}_{(1)1}, N^{(i)}_{(1)j})."""
    check_point(cfg, p)
    n = cfg.n
    kappa = temporal_data(cfg, p.t).kappa
    sig = sigma_data(cfg, p.x)
    M = np.empty(n)
    N = np.zeros((n, n))
    for i in range(n):
        M[i] = -kappa * p.y[i]
        N[i, i] = n * sig.grad[i] * p.y[i]
    return M, N


@lru_cache(maxsize=None)
def _c_constants(n):
    out = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                d_ij = 1.0 if i == j else 0.0
                d_ik = 1.0 if i == k else 0.0
                d_jk = 1.0 if j == k else 0.0
                out[i, j, k] = -2.0 / n**2 + (d_ij + d_ik + d_jk) / n - d_ij * d_ik
    out.setflags(write=False)
    return out


def c_constants(n: int) -> np.ndarray:
    """Numerical coefficients of the vertical Cartan component, layout [i, j, k]."""
    return _c_constants(int(n)).copy()


def vertical_cartan(n, y) -> np.ndarray:
    """C^{i(1)}_{j(k)} = const^i_jk * y^i / (y^j y^k), no sum."""
    y = np.asarray(y, dtype=float)
    # elementwise in (i, j, k); nothing is summed
    return _c_constants(n) * y[:, None, None] / (y[None, :, None] * y[None, None, :])


def horizontal_cartan(n, sigma_grad) -> np.ndarray:
    """L^i_jk = n delta^i_j delta^i_k sigma_i."""
    L = np.zeros((n, n, n))
    for i in range(n):
        L[i, i, i] = n * sigma_grad[i]
    return L


def cartan(cfg: GeometryConfig, p: JetPoint) -> ConnectionBundle:
    check_point(cfg, p)
    n = cfg.n
    H, Gs = spray(cfg, p)
    M, N = nonlinear_connection(cfg, p)
    sig = sigma_data(cfg, p.x)
    return ConnectionBundle(
        H=H,
        Gs=Gs,
        M=M,
        N=N,
        kappa=temporal_data(cfg, p.t).kappa,
        G_j1=np.zeros((n, n)),
        L=horizontal_cartan(n, sig.grad),
        C=vertical_cartan(n, p.y),
    )


def torsions(cfg: GeometryConfig, p: JetPoint):
    """The two non-vanishing torsion d-tensors (R^{(r)}_{(1)ij}, P^{r(1)}_{i(j)})."""
    check_point(cfg, p)
    n = cfg.n
    hess = sigma_data(cfg, p.x).hess
    R = np.zeros((n, n, n))
    for r in range(n):
        for i in range(n):
            for j in range(n):
                d_ri = 1.0 if r == i else 0.0
                d_rj = 1.0 if r == j else 0.0
                R[r, i, j] = n * (d_ri * hess[r, j] - d_rj * hess[r, i]) * p.y[r]
    P = vertical_cartan(n, p.y)
    return R, P


def nonlinear_y_defect(cfg: GeometryConfig, p: JetPoint) -> np.ndarray:
    """dN^{(r)}_{(1)j}/dy^k - L^r_jk, layout [r, j, k]; vanishes for this metric."""
    check_point(cfg, p)
    n = cfg.n
    grad = sigma_data(cfg, p.x).grad
    dN_dy = np.zeros((n, n, n))
    for r in range(n):
        dN_dy[r, r, r] = n * grad[r]
    return dN_dy - horizontal_cartan(n, grad)
