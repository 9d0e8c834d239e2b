import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmjet.errors import DomainError, ParseError, UnknownIdentifierError
from bmjet.expr import derivatives, evaluate, parse

XS = ["x1", "x2", "x3"]


def test_product_parses():
    e = parse("x1*x2", XS)
    assert evaluate(e, {"x1": 2.0, "x2": 3.0, "x3": 0.0}) == 6.0


def test_exponential_parses():
    e = parse("exp(2*t)", ["t"])
    assert evaluate(e, {"t": 0.5}) == pytest.approx(math.e)


def test_trailing_operator_reports_offset():
    with pytest.raises(ParseError) as info:
        parse("x1*", ["x1"])
    assert info.value.offset == 3


@pytest.mark.parametrize("src, offset", [("", 0), ("(x1", 3), ("x1 + + ", 5), ("x1 - ", 5), ("2 $ x1", 2)])
def test_syntax_errors_carry_offsets(src, offset):
    with pytest.raises(ParseError) as info:
        parse(src, ["x1"])
    assert info.value.offset == offset


def test_unknown_identifier_is_named():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("x1 + x4", XS)
    assert info.value.name == "x4"


@pytest.mark.parametrize(
    "src, expected",
    [
        ("2^3^2", 64.0),  # left-associative
        ("-2^2", -4.0),  # ^ binds tighter than unary minus
        ("1 - 2 - 3", -4.0),
        ("8 / 4 / 2", 1.0),
        ("2 + 3 * 4", 14.0),
        ("4^(1/2)", 2.0),
        ("8^(-1/3)", 0.5),
    ],
)
def test_precedence(src, expected):
    assert evaluate(parse(src, []), {}) == pytest.approx(expected)


def test_polynomial_derivatives():
    res = derivatives(parse("x1*x2", XS), {"x1": 1.0, "x2": 2.0, "x3": 0.0}, ["x1", "x2"])
    assert res.value == 2.0
    np.testing.assert_array_equal(res.gradient, [2.0, 1.0])
    np.testing.assert_array_equal(res.hessian, [[0.0, 1.0], [1.0, 0.0]])


def test_exponential_derivative():
    res = derivatives(parse("exp(2*t)", ["t"]), {"t": 0.0}, ["t"])
    assert res.value == 1.0
    assert res.gradient[0] == 2.0
    assert res.hessian[0, 0] == 4.0


def test_constant_has_zero_derivatives():
    res = derivatives(parse("3", XS), {"x1": 0.3, "x2": -1.0, "x3": 2.0}, XS)
    assert res.value == 3.0
    assert not res.gradient.any()
    assert not res.hessian.any()


@pytest.mark.parametrize(
    "src, bindings",
    [("log(x1)", {"x1": 0.0}), ("log(x1)", {"x1": -1.0}), ("1/x1", {"x1": 0.0}), ("sqrt(x1)", {"x1": -2.0})],
)
def test_domain_errors(src, bindings):
    e = parse(src, ["x1"])
    with pytest.raises(DomainError):
        evaluate(e, bindings)
    with pytest.raises(DomainError):
        derivatives(e, bindings, ["x1"])


@pytest.mark.parametrize(
    "src",
    ["sin(x1)*cos(x2) + x3", "exp(x1 - x2)*sqrt(x3 + 3)", "log(2 + x1*x1)/(1 + x2^2)", "(x1 + 2)^(3/2)*x2"],
)
def test_transcendental_derivatives_match_differences(src):
    e = parse(src, XS)
    z = np.array([0.3, -0.4, 0.7])
    exact = derivatives(e, dict(zip(XS, z)), XS)
    f = lambda v: float(evaluate(e, dict(zip(XS, v))))
    h = 1e-5
    for a in range(3):
        d = np.zeros(3)
        d[a] = h
        assert (f(z + d) - f(z - d)) / (2 * h) == pytest.approx(exact.gradient[a], rel=1e-6, abs=1e-8)


# random polynomials in x1..x3 with small integer coefficients
_monomial = st.tuples(
    st.integers(-5, 5), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)
)


def _poly_source(terms):
    parts = [f"({c})*x1^{a}*x2^{b}*x3^{d}" for c, a, b, d in terms]
    return " + ".join(parts)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(_monomial, min_size=1, max_size=5),
    st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=3, max_size=3),
)
def test_random_polynomials_against_central_differences(terms, z):
    e = parse(_poly_source(terms), XS)
    z = np.asarray(z)
    exact = derivatives(e, dict(zip(XS, z)), XS)
    f = lambda v: float(evaluate(e, dict(zip(XS, v))))
    h1, h2 = 1e-5, 1e-4
    scale = max(1.0, float(np.max(np.abs(exact.hessian))), float(np.max(np.abs(exact.gradient))))
    for a in range(3):
        da = np.zeros(3)
        da[a] = h1
        fd = (f(z + da) - f(z - da)) / (2 * h1)
        assert abs(fd - exact.gradient[a]) <= 1e-6 * scale
        for b in range(3):
            ea, eb = np.zeros(3), np.zeros(3)
            ea[a], eb[b] = h2, h2
            fd2 = (f(z + ea + eb) - f(z + ea - eb) - f(z - ea + eb) + f(z - ea - eb)) / (4 * h2 * h2)
            assert abs(fd2 - exact.hessian[a, b]) <= 1e-6 * scale
    np.testing.assert_array_equal(exact.hessian, exact.hessian.T)


@pytest.mark.parametrize(
    "src",
    ["x1*x2", "-x1^2 + 3.25*x2/(1 + x3^2)", "sin(-x1)^(2/3)*2 - -x2", "exp(x1)*log(x2 + 5) - sqrt(x3 + 2)", "x1 - (x2 - x3)"],
)
def test_printed_form_round_trips(src):
    e = parse(src, XS)
    again = parse(str(e), XS)
    rng = np.random.default_rng(1)
    for _ in range(20):
        b = dict(zip(XS, rng.uniform(-1, 1, 3)))
        try:
            v = evaluate(e, b)
        except DomainError:
            with pytest.raises(DomainError):
                evaluate(again, b)
            continue
        assert evaluate(again, b) == pytest.approx(v, rel=1e-15, abs=1e-15)


def test_vectorized_evaluation():
    e = parse("x1*x2 + 1", ["x1", "x2"])
    out = evaluate(e, {"x1": np.array([1.0, 2.0]), "x2": np.array([3.0, 4.0])})
    np.testing.assert_array_equal(out, [4.0, 9.0])
