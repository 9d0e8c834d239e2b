"""Run configurations and machine-readable reports.

Config files are JSON objects::

    {
      "geometry": {"n": 3, "sigma": "x1*x2", "h11": "exp(2*t)", "K": 1.0},
      "points": [{"t": 0.0, "x": [0, 0, 0], "y": [1, 1, 1]}],
      "verify": {"samples": 100, "seed": 42, "tolerances": {"oracle.metric": 1e-5}},
      "geodesic": {"t0": 0.0, "t1": 1.0, "steps": 1000, "x0": [0, 0, 0], "y0": [1, 1, 1]},
      "output": "report.json"
    }

Every key is optional; missing ones take the defaults below.  Reports are
serialized with sorted keys and carry no timestamps, so a fixed config and
seed give byte-identical output.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import metadata

import numpy as np

from . import checks
from .connection import cartan, nonlinear_connection, spray, torsions
from .curvature import curvature_tensors, einstein_blocks, em_tensor, stress_energy
from .errors import ConfigError, DomainError
from .geodesic import GeodesicDomainError, GeodesicProblem, el_residual, integrate
from .jet_geometry import GeometryConfig, JetPoint, check_point, metric
from .sampling import random_points

DEFAULT_CONFIG = {
    "geometry": {"n": 3, "sigma": "x1*x2", "h11": "exp(2*t)", "K": 1.0},
    "points": [],
    "verify": {"samples": 100, "seed": 42, "tolerances": {}},
    "geodesic": None,
    "output": None,
}

_TOP_KEYS = set(DEFAULT_CONFIG)


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunConfig:
    geometry: dict
    points: list
    verify: dict
    geodesic: dict | None = None
    output: str | None = None

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULT_CONFIG)
        for key in ("geometry", "verify"):
            part = raw.get(key, {})
            if not isinstance(part, dict):
                raise ConfigError(f"'{key}' must be an object")
            merged[key].update(part)
        for key in ("points", "geodesic", "output"):
            if key in raw:
                merged[key] = raw[key]
        rc = cls(**merged)
        rc.validate()
        return rc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def geometry_config(self) -> GeometryConfig:
        g = self.geometry
        unknown = set(g) - {"n", "sigma", "h11", "K"}
        if unknown:
            raise ConfigError(f"unknown geometry keys: {sorted(unknown)}")
        n = g["n"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"geometry.n must be an integer, got {n!r}")
        return GeometryConfig.from_sources(n, str(g["sigma"]), str(g["h11"]), float(g["K"]))

    def jet_points(self):
        out = []
        for idx, raw in enumerate(self.points or []):
            try:
                out.append(JetPoint(float(raw.get("t", 0.0)), raw["x"], raw["y"]))
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                raise ConfigError(f"point {idx} is malformed: {exc}") from exc
        return out

    def validate(self):
        cfg = self.geometry_config()
        v = self.verify
        for key in ("samples", "seed"):
            val = v.get(key)
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"verify.{key} must be an integer, got {val!r}")
        if v["samples"] < 1:
            raise ConfigError("verify.samples must be positive")
        tols = v.get("tolerances") or {}
        try:
            checks.resolve_tolerances(tols)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(self.points, list):
            raise ConfigError("'points' must be a list")
        for idx, p in enumerate(self.jet_points()):
            if p.n != cfg.n:
                raise ConfigError(f"point {idx} has dimension {p.n}, geometry has n={cfg.n}")
        # domain membership is checked per point by run_eval, which keeps going
        if self.geodesic is not None:
            self.geodesic_problem(cfg)

    def geodesic_problem(self, cfg=None) -> GeodesicProblem:
        if self.geodesic is None:
            raise ConfigError("config has no 'geodesic' block")
        cfg = cfg or self.geometry_config()
        g = self.geodesic
        try:
            return GeodesicProblem(
                cfg,
                float(g.get("t0", 0.0)),
                float(g.get("t1", 1.0)),
                g.get("x0", [0.0] * cfg.n),
                g["y0"],
                g.get("steps", 100),
            )
        except KeyError as exc:
            raise ConfigError(f"geodesic block is missing {exc}") from exc

    def as_dict(self):
        return {
            "geometry": dict(self.geometry),
            "points": list(self.points or []),
            "verify": dict(self.verify),
            "geodesic": None if self.geodesic is None else dict(self.geodesic),
            "output": self.output,
        }


@dataclass
class Report:
    meta: dict
    points: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def as_dict(self):
        return {
            "meta": self.meta,
            "points": self.points,
            "checks": self.checks,
            "trajectory": self.trajectory,
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.as_dict()), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    """Nested numpy/python data to JSON-safe lists, floats and None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _meta(rc: RunConfig, command: str, **extra):
    meta = {"command": command, "version": _version(), "config": rc.as_dict(), "seed": rc.verify["seed"]}
    meta.update(extra)
    return meta


def point_payload(cfg: GeometryConfig, p: JetPoint) -> dict:
    """Every closed-form object at one point."""
    check_point(cfg, p)
    met = metric(cfg, p)
    H, Gs = spray(cfg, p)
    M, N = nonlinear_connection(cfg, p)
    conn = cartan(cfg, p)
    R_tor, P_tor = torsions(cfg, p)
    curv = curvature_tensors(cfg, p)
    blocks = einstein_blocks(cfg, p)
    se = stress_energy(cfg, p)
    return {
        "t": p.t,
        "x": p.x,
        "y": p.y,
        "fstar": met.fstar,
        "g": met.g,
        "g_inv": met.g_inv,
        "spray": {"H": H, "G": Gs},
        "nonlinear": {"M": M, "N": N},
        "cartan": {"kappa": conn.kappa, "G_j1": conn.G_j1, "L": conn.L, "C": conn.C},
        "torsion": {"R": R_tor, "P": P_tor},
        "curvature": {"R": curv.R_curv, "P": curv.P_curv, "S": curv.S_curv},
        "ricci_R": curv.ricci_R,
        # R_ij is not symmetric in general; keep the transpose next to it
        "ricci_R_transpose": curv.ricci_R.T,
        "ricci_S": curv.ricci_S,
        "Y11": curv.Y11,
        "Sc": curv.scalar_curvature,
        "einstein": {"lhs_tt": blocks.lhs_tt, "lhs_xx": blocks.lhs_xx, "lhs_vv": blocks.lhs_vv},
        "stress_energy": {
            "T11": se.T11,
            "T_ij": se.T_ij,
            "T_vv": se.T_vv,
            "zero_blocks": se.zero_blocks,
            "T^1_1": se.mixed_tt,
            "T^m_1": se.mixed_xt,
            "T^(m)_(1)1": se.mixed_vt,
            "T^1_i": se.mixed_tx,
            "E^m_i": se.E,
            "T^(m)_(1)i": se.mixed_vx,
            "T^1(1)_(i)": se.mixed_tv,
            "T^m(1)_(i)": se.mixed_xv,
            "T^(m)(1)_(1)(i)": se.mixed_vv,
        },
        "em_tensor": em_tensor(cfg, p),
    }


def run_eval(rc: RunConfig) -> Report:
    """Closed-form objects at each configured point (or at t=0, x=0, y=1 when none)."""
    cfg = rc.geometry_config()
    pts = rc.jet_points() or [JetPoint(0.0, np.zeros(cfg.n), np.ones(cfg.n))]
    report = Report(meta=_meta(rc, "eval"))
    for idx, p in enumerate(pts):
        try:
            payload = point_payload(cfg, p)
        except DomainError as exc:
            report.errors.append({"point": idx, "error": str(exc)})
            report.points.append({"index": idx, "error": str(exc)})
            continue
        payload["index"] = idx
        report.points.append(payload)
    return report


def run_verify(rc: RunConfig, suites=None) -> Report:
    """Every invariant suite over seeded random points."""
    cfg = rc.geometry_config()
    v = rc.verify
    pts = random_points(cfg.n, v["samples"], v["seed"])
    results, errors, observations = checks.run_checks(cfg, pts, v.get("tolerances") or {}, suites)
    report = Report(meta=_meta(rc, "verify", samples=v["samples"], observations=observations))
    report.checks = [r.as_dict() for r in results]
    report.errors = errors
    return report


def _sample_dict(sample):
    t, x, y = sample
    return {"t": t, "x": x, "y": y}


def run_geodesic(rc: RunConfig) -> Report:
    """Integrate the configured geodesic and record its Euler-Lagrange residual."""
    prob = rc.geodesic_problem()
    report = Report(meta=_meta(rc, "geodesic", step=prob.step))
    try:
        traj = integrate(prob)
    except GeodesicDomainError as exc:
        report.trajectory = [_sample_dict(s) for s in exc.trajectory.samples]
        report.errors.append({"error": str(exc), "last_valid": _sample_dict(exc.trajectory.samples[-1])})
        return report
    report.trajectory = [_sample_dict(s) for s in traj.samples]
    if len(traj.samples) >= 3:
        report.meta["el_residual"] = el_residual(prob, traj)
    return report

