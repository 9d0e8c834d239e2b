import numpy as np
import pytest

from bmjet import finite_diff as fd
from bmjet.connection import cartan, nonlinear_connection, spray, torsions
from bmjet.curvature import curvature_tensors
from bmjet.errors import ExpressionError, StencilError
from bmjet.jet_geometry import metric
from bmjet.oracle import (
    TOLERANCES,
    JetDiffeo,
    deviation,
    energy_lagrangian,
    oracle_cartan,
    oracle_curvatures,
    oracle_metric,
    oracle_nonlinear,
    oracle_spray,
    pullback_geometry,
    tensoriality_residual,
    transform_point,
)
from bmjet.sampling import random_points

from conftest import make_cfg, point


def test_metric_unit_point():
    cfg = make_cfg(3)
    p = point((1, 1, 1))
    assert deviation(oracle_metric(cfg, p), metric(cfg, p).g) <= 1e-5


def test_metric_n2():
    np.testing.assert_allclose(oracle_metric(make_cfg(2), point((1, 1))), [[0, 0.5], [0.5, 0]], atol=1e-5)


def test_metric_scaling():
    cfg = make_cfg(3, "x1*x2")
    y = np.array([0.7, 1.3, 2.0])
    assert deviation(oracle_metric(cfg, point(2 * y)), oracle_metric(cfg, point(y))) <= 1e-4


def test_spray_values():
    assert np.max(np.abs(oracle_spray(make_cfg(3), point((2, 1, 1))))) <= 1e-6
    np.testing.assert_allclose(oracle_spray(make_cfg(3, "x1"), point((2, 1, 1))), [6, 0, 0], atol=1e-4)
    got = oracle_spray(make_cfg(3, h11="exp(2*t)"), point((2, 1, 1), t=0.3))
    assert np.max(np.abs(got)) <= 1e-4


def test_nonlinear_values():
    assert np.max(np.abs(oracle_nonlinear(make_cfg(3), point((2, 1, 1))))) <= 1e-4
    N = oracle_nonlinear(make_cfg(3, "x1"), point((2, 1, 1)))
    np.testing.assert_allclose(N, np.diag([6, 0, 0]), atol=1e-3)


def test_nonlinear_off_diagonal_vanishes():
    cfg = make_cfg(4, "x1*x2 + x3")
    for p in random_points(4, 5, seed=4):
        N = oracle_nonlinear(cfg, p)
        off = N - np.diag(np.diag(N))
        assert np.max(np.abs(off)) <= 1e-3 * max(1, np.abs(N).max())


def test_cartan_values():
    oc = oracle_cartan(make_cfg(3, "x1"), point((1, 1, 1)))
    assert oc.L[0, 0, 0] == pytest.approx(3.0, abs=1e-4)
    assert oc.C[0, 1, 1] == pytest.approx(1 / 9, abs=1e-5)
    oc = oracle_cartan(make_cfg(3, "x1*x2", "exp(2*t)"), point((1.5, 0.5, 2.0), t=0.4))
    assert np.max(np.abs(oc.G_j1)) <= 1e-6


def test_cartan_from_oracle_metric():
    cfg = make_cfg(3, "x1*x2", "exp(2*t)")
    for p in random_points(3, 5, seed=6):
        conn = cartan(cfg, p)
        oc = oracle_cartan(cfg, p, metric_source="oracle")
        assert deviation(oc.L, conn.L) <= TOLERANCES.metric_oracle_source
        assert deviation(oc.C, conn.C) <= TOLERANCES.metric_oracle_source


def test_cartan_rejects_unknown_source():
    with pytest.raises(ValueError):
        oracle_cartan(make_cfg(3), point((1, 1, 1)), metric_source="nope")


def test_curvatures_flat():
    oc = oracle_curvatures(make_cfg(3), point((1.2, 0.8, 3.0)))
    for arr in (oc.R_tor, oc.R_curv, oc.P_curv, oc.P_nl):
        assert np.max(np.abs(arr)) <= 1e-5


def test_curvatures_product_sigma():
    cfg = make_cfg(3, "x1*x2")
    p = point((1, 1, 1))
    oc = oracle_curvatures(cfg, p)
    assert oc.R_tor[0, 0, 1] == pytest.approx(3.0, abs=1e-4)
    assert deviation(oc.S_curv, curvature_tensors(cfg, p).S_curv) <= 1e-4


@pytest.mark.parametrize("n, sigma", [(2, "x1*x2"), (3, "x1+2*x2*x3"), (5, "x1*x2")])
@pytest.mark.parametrize("h11", ["1", "exp(2*t)"])
def test_closed_forms_match_oracle(n, sigma, h11):
    cfg = make_cfg(n, sigma, h11)
    tol = TOLERANCES
    for p in random_points(n, 10, seed=n):
        _, Gs = spray(cfg, p)
        _, N = nonlinear_connection(cfg, p)
        conn = cartan(cfg, p)
        R_tor, _ = torsions(cfg, p)
        b = curvature_tensors(cfg, p)
        oc = oracle_cartan(cfg, p)
        ocurv = oracle_curvatures(cfg, p)
        assert deviation(oracle_metric(cfg, p), metric(cfg, p).g) <= tol.metric
        assert deviation(oracle_spray(cfg, p), Gs) <= tol.spray
        assert deviation(oracle_nonlinear(cfg, p), N) <= tol.nonlinear
        assert deviation(oc.L, conn.L) <= tol.cartan_L
        assert deviation(oc.C, conn.C) <= tol.cartan_C
        assert deviation(oc.G_j1, conn.G_j1) <= tol.cartan_G
        assert deviation(ocurv.R_tor, R_tor) <= tol.torsion
        assert deviation(ocurv.R_curv, b.R_curv) <= tol.curvature
        assert deviation(ocurv.P_curv, b.P_curv) <= tol.curvature
        assert deviation(ocurv.S_curv, b.S_curv) <= tol.curvature
        assert deviation(ocurv.ricci_R, b.ricci_R) <= tol.ricci
        assert deviation(ocurv.ricci_S, b.ricci_S) <= tol.ricci
        assert deviation(ocurv.scalar_curvature, b.scalar_curvature) <= tol.scalar


def test_difference_order():
    # first y-derivative of F*^2; successive halvings shrink the change by ~4
    cfg = make_cfg(3, "sin(x1)*x2", "exp(t)")
    z = point((0.8, 1.7, 1.1), x=(0.2, -0.5, 0.4), t=0.3).as_vector()
    f = lambda zz: energy_lagrangian(cfg, zz)
    eps = [4e-2, 2e-2, 1e-2]
    d = [fd.partial(f, z, 4, eps=e) for e in eps]
    order = np.log2(abs(d[0] - d[1]) / abs(d[1] - d[2]))
    assert order >= 1.8


@pytest.mark.parametrize("richardson_second", [False, True])
def test_batched_stencil_matches_single_stencils(richardson_second):
    scheme = fd.DiffScheme(eps_first=1e-3, eps_second=1e-2, richardson=True, richardson_second=richardson_second)
    f = lambda zz: np.sin(zz[..., 0]) * np.exp(zz[..., 1])
    z = np.array([0.3, 0.2, 1.0])
    grad, hess = fd.stencil_derivatives(f, z, [0, 1], [(0, 0), (0, 1)], scheme, lambda pts: np.ones(len(pts), bool))
    always = lambda zz: True
    assert grad[0] == pytest.approx(fd.partial(f, z, 0, scheme, valid=always), abs=1e-14)
    assert hess[0, 1] == pytest.approx(fd.second_partial(f, z, 0, 1, scheme, valid=always), abs=1e-12)
    # one extrapolation level lifts the second difference from O(h^2) to O(h^4)
    err = abs(hess[0, 0] + np.sin(0.3) * np.exp(0.2))
    assert err < (1e-9 if richardson_second else 1e-4)
    assert richardson_second or err > 1e-7


def test_stencil_shrinks_near_boundary():
    cfg = make_cfg(3)
    p = point((2e-6, 1.0, 1.0))
    g = oracle_metric(cfg, p)
    assert np.all(np.isfinite(g))


def test_stencil_error_when_shrinking_is_exhausted():
    f = lambda zz: energy_lagrangian(make_cfg(3), zz)
    z = point((2e-6, 1.0, 1.0)).as_vector()
    with pytest.raises(StencilError):
        fd.partial(f, z, 4, fd.DiffScheme(max_halvings=0))


def test_transform_point():
    p = point((1, 1, 1), x=(0.5, 0.2, -1.0), t=0.3)
    same = transform_point(p, JetDiffeo(a=(1, 1, 1)))
    np.testing.assert_array_equal(same.as_vector(), p.as_vector())
    np.testing.assert_allclose(transform_point(p, JetDiffeo(c=2.0, a=(1, 1, 1))).y, [0.5, 0.5, 0.5])
    np.testing.assert_allclose(transform_point(p, JetDiffeo(a=(2, 3, 1))).y, [2, 3, 1])


def test_tensoriality_identity():
    cfg = make_cfg(3, "x1*x2", "exp(2*t)")
    assert tensoriality_residual(cfg, JetDiffeo(a=(1, 1, 1)), point((1.2, 0.5, 2.0))) == 0.0


@pytest.mark.parametrize(
    "sigma, h11, d",
    [
        ("x1", "1", JetDiffeo(c=1.0, a=(2, 1, 1))),
        ("0", "1", JetDiffeo(c=2.0, a=(1, 1, 1))),
        ("x1*x2", "exp(2*t)", JetDiffeo(c=2.0, d=0.5, a=(1, 3, 2))),
        ("sin(x1) + x3^2", "1 + t^2", JetDiffeo(c=-1.5, d=0.2, a=(-2, 1, 1))),
    ],
)
def test_tensoriality(sigma, h11, d):
    cfg = make_cfg(3, sigma, h11)
    for p in random_points(3, 5, seed=8):
        assert tensoriality_residual(cfg, d, p) <= 1e-4


def test_pullback_rejects_sign_flip():
    with pytest.raises(ExpressionError):
        pullback_geometry(make_cfg(3), JetDiffeo(c=1.0, a=(-1, 1, 1)))


def test_jet_diffeo_requires_nonzero_scales():
    with pytest.raises(ValueError):
        JetDiffeo(c=0.0)
    with pytest.raises(ValueError):
        JetDiffeo(a=(1, 0, 1))
