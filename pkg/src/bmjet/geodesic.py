"""Fixed-step integration of the Euler-Lagrange curves of the energy functional.

The second-order system x'' + 2H(t, x, x') + 2G(t, x, x') = 0 is integrated as
the first-order system dx/dt = y, dy/dt = -2H - 2G with classical RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connection import spray
from .errors import ConfigError, DomainError
from .jet_geometry import GeometryConfig, JetPoint


@dataclass(frozen=True)
class GeodesicProblem:
    cfg: GeometryConfig
    t0: float
    t1: float
    x0: np.ndarray
    y0: np.ndarray
    steps: int

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(-1))
        object.__setattr__(self, "y0", np.asarray(self.y0, dtype=float).reshape(-1))
        n = self.cfg.n
        if self.x0.shape != (n,) or self.y0.shape != (n,):
            raise ConfigError(f"x0 and y0 must have {n} components")
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))
        if not float(self.t1) > float(self.t0):
            raise ConfigError(f"need t1 > t0, got t0={self.t0}, t1={self.t1}")
        if not np.prod(self.y0) > 0:
            raise ConfigError("initial velocity y0 must have a positive component product")

    @property
    def step(self) -> float:
        return (float(self.t1) - float(self.t0)) / self.steps


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)  # (t, x, y) tuples
    step: float = 0.0

    @property
    def t(self):
        return np.array([s[0] for s in self.samples])

    @property
    def x(self):
        return np.array([s[1] for s in self.samples])

    @property
    def y(self):
        return np.array([s[2] for s in self.samples])


class GeodesicDomainError(DomainError):
    """Integration left the positive-product domain; carries the valid prefix."""

    def __init__(self, message, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def acceleration(cfg: GeometryConfig, t, x, y) -> np.ndarray:
    """Right-hand side dy/dt = -2H - 2G."""
    H, Gs = spray(cfg, JetPoint(t, x, y))
    return -2.0 * H - 2.0 * Gs


def _rk4_step(cfg, t, x, y, h):
    k1x, k1y = y, acceleration(cfg, t, x, y)
    x2, y2 = x + 0.5 * h * k1x, y + 0.5 * h * k1y
    k2x, k2y = y2, acceleration(cfg, t + 0.5 * h, x2, y2)
    x3, y3 = x + 0.5 * h * k2x, y + 0.5 * h * k2y
    k3x, k3y = y3, acceleration(cfg, t + 0.5 * h, x3, y3)
    x4, y4 = x + h * k3x, y + h * k3y
    k4x, k4y = y4, acceleration(cfg, t + h, x4, y4)
    x_new = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    y_new = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
    return x_new, y_new


def integrate(prob: GeodesicProblem) -> Trajectory:
    """Classical RK4 with ``prob.steps`` equal steps on [t0, t1].

    Raises GeodesicDomainError (with the samples computed so far) when a stage
    or a new sample has a non-positive y-product.
    """
    h = prob.step
    t0 = float(prob.t0)
    x, y = prob.x0.copy(), prob.y0.copy()
    traj = Trajectory(samples=[(t0, x.copy(), y.copy())], step=h)
    for k in range(prob.steps):
        t = t0 + k * h
        try:
            # blow-up shows up as inf/nan and is caught by the domain test below
            with np.errstate(over="ignore", invalid="ignore"):
                x, y = _rk4_step(prob.cfg, t, x, y, h)
        except DomainError as exc:
            raise GeodesicDomainError(f"domain exit in step {k} from t={t}: {exc}", traj) from exc
        if not (np.all(np.isfinite(y)) and np.prod(y) > 0):
            raise GeodesicDomainError(f"y left the domain (non-positive product or overflow) at t={t + h}", traj)
        traj.samples.append((t0 + (k + 1) * h, x.copy(), y.copy()))
    return traj


def el_residual(prob: GeodesicProblem, traj: Trajectory) -> float:
    """max over interior samples of |x'' + 2H + 2G|, x'' by the three-point stencil."""
    if len(traj.samples) < 3:
        raise ValueError("need at least three samples for the residual")
    h = traj.step
    xs = traj.x
    worst = 0.0
    for k in range(1, len(traj.samples) - 1):
        t, x, y = traj.samples[k]
        xdd = (xs[k + 1] - 2.0 * xs[k] + xs[k - 1]) / (h * h)
        H, Gs = spray(prob.cfg, JetPoint(t, x, y))
        worst = max(worst, float(np.max(np.abs(xdd + 2.0 * H + 2.0 * Gs))))
    return worst
