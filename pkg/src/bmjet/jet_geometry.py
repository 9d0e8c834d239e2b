"""Points of the 1-jet space and the conformally deformed Berwald-Moor metric.

The Finsler-like function on J^1(R, M^n) is

    F*(t, x, y) = exp(sigma(x)) * sqrt(1 / h11(t)) * (y^1 y^2 ... y^n)^(1/n)

defined where the product of the y components is positive.  Everything in
this module is a pure function of a :class:`GeometryConfig` and a
:class:`JetPoint`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from .errors import ConfigError, DomainError


def x_names(n):
    return [f"x{i + 1}" for i in range(n)]


@dataclass(frozen=True)
class GeometryConfig:
    n: int
    sigma: _expr.Expression
    h11: _expr.Expression
    einstein_K: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"dimension must be an integer >= 2, got {self.n!r}")
        if not self.einstein_K > 0:
            raise ConfigError(f"Einstein constant must be positive, got {self.einstein_K!r}")
        stray = set(self.sigma.variables) - set(x_names(self.n))
        if stray:
            raise ConfigError(f"sigma declared over non-spatial variables {sorted(stray)}")
        if set(self.h11.variables) - {"t"}:
            raise ConfigError("h11 must be declared over t only")

    @classmethod
    def from_sources(cls, n, sigma="0", h11="1", einstein_K=1.0):
        """Build a config from expression source text."""
        if int(n) != n or n < 2:
            raise ConfigError(f"dimension must be an integer >= 2, got {n!r}")
        return cls(
            n=int(n),
            sigma=_expr.parse(sigma, x_names(int(n))),
            h11=_expr.parse(h11, ["t"]),
            einstein_K=float(einstein_K),
        )


@dataclass(frozen=True)
class JetPoint:
    t: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have the same length")

    @property
    def n(self):
        return self.x.size

    def as_vector(self):
        """Flat coordinates (t, x^1..x^n, y^1..y^n)."""
        return np.concatenate(([self.t], self.x, self.y))

    @classmethod
    def from_vector(cls, z):
        z = np.asarray(z, dtype=float)
        n = (z.size - 1) // 2
        return cls(z[0], z[1 : n + 1], z[n + 1 :])

    def in_domain(self):
        return bool(np.all(self.y != 0) and np.prod(self.y) > 0)


@dataclass(frozen=True)
class SpatialMetric:
    g: np.ndarray
    g_inv: np.ndarray
    G_product: float
    fstar: float


@dataclass(frozen=True)
class TemporalData:
    h11: float
    h11_inv: float
    dh11_dt: float
    kappa: float


@dataclass(frozen=True)
class SigmaData:
    """sigma(x) with its exact gradient sigma_i and Hessian sigma_pq."""

    value: float
    grad: np.ndarray
    hess: np.ndarray


def check_point(cfg: GeometryConfig, p: JetPoint):
    if p.n != cfg.n:
        raise DomainError(f"point has dimension {p.n}, geometry has n={cfg.n}")
    if not p.in_domain():
        raise DomainError(f"y={p.y.tolist()} is outside the domain y^1...y^n > 0")


def sigma_data(cfg: GeometryConfig, x) -> SigmaData:
    names = x_names(cfg.n)
    res = _expr.derivatives(cfg.sigma, dict(zip(names, map(float, x))), names)
    return SigmaData(res.value, res.gradient, res.hessian)


def temporal_data(cfg: GeometryConfig, t: float) -> TemporalData:
    res = _expr.derivatives(cfg.h11, {"t": float(t)}, ["t"])
    h = res.value
    if not h > 0:
        raise DomainError(f"h11(t={t}) = {h} is not positive")
    dh = float(res.gradient[0])
    inv = 1.0 / h
    return TemporalData(h11=h, h11_inv=inv, dh11_dt=dh, kappa=0.5 * inv * dh)


def product_G(y) -> float:
    """G_{1[n]}(y) = y^1 y^2 ... y^n.  Note dG/dy^i = G / y^i."""
    return float(np.prod(np.asarray(y, dtype=float)))


def product_G_gradient(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return product_G(y) / y


def _G_power(G, n, k=2.0):
    # G^(k/n) as exp((k/n) log G); callers guarantee G > 0
    return math.exp(k / n * math.log(G))


def fstar(cfg: GeometryConfig, p: JetPoint) -> float:
    check_point(cfg, p)
    sig = sigma_data(cfg, p.x).value
    temp = temporal_data(cfg, p.t)
    return math.exp(sig) * math.sqrt(temp.h11_inv) * _G_power(product_G(p.y), cfg.n, 1.0)


def metric(cfg: GeometryConfig, p: JetPoint) -> SpatialMetric:
    """Fundamental metrical d-tensor g_ij and its inverse g^jk."""
    check_point(cfg, p)
    n = cfg.n
    sig = sigma_data(cfg, p.x).value
    G = product_G(p.y)
    G2n = _G_power(G, n)
    e2s = math.exp(2.0 * sig)
    y = p.y
    g = np.empty((n, n))
    g_inv = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            g[i, j] = e2s / n * (2.0 / n - delta) * G2n / (y[i] * y[j])
            g_inv[i, j] = (2.0 - n * delta) * y[i] * y[j] / (e2s * G2n)
    temp = temporal_data(cfg, p.t)
    fs = math.exp(sig) * math.sqrt(temp.h11_inv) * _G_power(G, n, 1.0)
    return SpatialMetric(g=g, g_inv=g_inv, G_product=G, fstar=fs)


def conformal_factor(cfg: GeometryConfig, p: JetPoint) -> float:
    """exp(-2 sigma) G^(-2/n), the common prefactor of the curvature formulas."""
    sig = sigma_data(cfg, p.x).value
    return math.exp(-2.0 * sig) / _G_power(product_G(p.y), cfg.n)


def energy_density(cfg: GeometryConfig, p: JetPoint) -> float:
    """Integrand F*^2 sqrt(h11) of the energy action functional."""
    check_point(cfg, p)
    sig = sigma_data(cfg, p.x).value
    temp = temporal_data(cfg, p.t)
    return math.exp(2.0 * sig) * _G_power(product_G(p.y), cfg.n) * temp.h11_inv * math.sqrt(temp.h11)
