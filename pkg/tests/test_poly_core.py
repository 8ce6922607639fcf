import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germflow.errors import InputError, ParseError
from germflow.poly_core import (
    Field,
    Polynomial,
    chart_at_infinity,
    evaluate,
    finite_diff_grad,
    format_polynomial,
    grad,
    homogenize,
    parse_polynomial,
    variable_names,
)

XY = ["x", "y"]


def P(text, names=XY):
    return parse_polynomial(text, names)


def test_eval_examples():
    assert evaluate(P("x^2 + y^2"), [1, 2]) == 5
    assert evaluate(Polynomial.zero(2), [0.3, -7]) == 0
    assert evaluate(P("x^2*y - x"), [3, 1]) == 6


def test_eval_arity_mismatch():
    with pytest.raises(InputError):
        evaluate(P("x + y"), [1.0])


def test_grad_examples():
    np.testing.assert_array_equal(grad(P("x^2 + y^2"), [1, 2], Field.REAL), [2, 4])
    np.testing.assert_array_equal(grad(parse_polynomial("z"), [1j], Field.COMPLEX), [1])
    np.testing.assert_array_equal(grad(P("x^2*y - x"), [1, 0.5], Field.REAL), [0, 1])


def test_complex_grad_is_conjugated():
    p = parse_polynomial("(0, 1)*z^2")
    # d/dz (i z^2) = 2 i z; at z = 1 that is 2i, stored conjugated as -2i
    assert grad(p, [1.0 + 0j], Field.COMPLEX)[0] == pytest.approx(-2j)


def test_finite_diff_examples():
    assert finite_diff_grad(parse_polynomial("x^2"), [1.0], 1e-5)[0] == pytest.approx(2, abs=1e-8)
    assert finite_diff_grad(parse_polynomial("x^3"), [2.0], 1e-4)[0] == pytest.approx(12, abs=1e-6)
    np.testing.assert_array_equal(finite_diff_grad(Polynomial.constant(3.0, 2), [0.4, 0.1], 1e-3), [0, 0])


def test_finite_diff_rejects_bad_step():
    with pytest.raises(InputError):
        finite_diff_grad(parse_polynomial("x"), [1.0], 0.0)


def test_homogenize_examples():
    f = P("x^2*y - x")
    # x0 first: x0, x, y
    expected = parse_polynomial("x^2*y - x*x0^2", ["x0", "x", "y"])
    assert homogenize(f, 3) == expected
    h = P("x^2*y + y^3")
    assert homogenize(h, 3) == h.insert_variables(0)
    assert homogenize(Polynomial.constant(1.0, 2), 2) == Polynomial.monomial((2, 0, 0))


def test_homogenize_degree_too_small():
    with pytest.raises(InputError):
        homogenize(P("x^3"), 2)


def test_chart_at_infinity_examples():
    f = P("x^2*y - x")
    # chart in the y direction: variables (y0, y1) with y1 = x / y
    expected = parse_polynomial("y1^2 - y1*y0^2", ["y0", "y1"])
    assert chart_at_infinity(f) == expected
    assert chart_at_infinity(P("y")) == Polynomial.constant(1.0, 2)
    assert chart_at_infinity(P("y^4")) == Polynomial.constant(1.0, 2)


def test_parse_error_location():
    with pytest.raises(ParseError) as exc:
        parse_polynomial("x^^2")
    assert (exc.value.line, exc.value.column) == (1, 3)
    assert "column 3" in str(exc.value)


def test_parse_complex_and_format():
    p = parse_polynomial("(1, 2)*x*y - 3.5*y^3 + 2", XY)
    text = format_polynomial(p, XY)
    assert parse_polynomial(text, XY) == p
    assert evaluate(p, [1, 1]) == pytest.approx(complex(-0.5, 2))


def test_variable_names_sort_indexed_numerically():
    assert variable_names("x10 + x2*x1") == ["x1", "x2", "x10"]


def test_unknown_variable_rejected():
    with pytest.raises(ParseError):
        parse_polynomial("x + z", XY)


def test_compensated_sum_is_order_independent():
    # large cancelling terms: naive summation in insertion order loses the 1
    p = Polynomial(1, {(0,): 1.0, (1,): 1e16, (2,): -1e16})
    assert evaluate(p, [1.0]) == 1.0


# -- properties --------------------------------------------------------------------

coef = st.floats(-10, 10, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
terms = st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4)), coef, min_size=1, max_size=8)
points = st.tuples(st.floats(-2, 2), st.floats(-2, 2))


@settings(max_examples=150, deadline=None)
@given(terms, points)
def test_grad_matches_finite_difference(t, pt):
    p = Polynomial(2, t)
    g = grad(p, pt, Field.REAL)
    fd = finite_diff_grad(p, pt, 1e-5)
    scale = 1.0 + float(np.max(np.abs(g)))
    # central differences carry roundoff ~ eps |p| / h on top of h^2 truncation
    mag = float(p.magnitude_many(np.array([pt]))[0])
    assert np.max(np.abs(g - fd)) <= 1e-6 * scale + 1e-10 * mag / 1e-5


@settings(max_examples=80, deadline=None)
@given(terms, st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)))
def test_complex_grad_matches_conjugated_finite_difference(t, pt):
    p = Polynomial(2, {k: complex(v, v / 3) for k, v in t.items()})
    z = np.array([complex(pt[0], pt[1]), complex(pt[2], pt[3])])
    g = grad(p, z, Field.COMPLEX)
    fd = np.conj(finite_diff_grad(p, z, 1e-5))
    mag = float(p.magnitude_many(z.reshape(1, -1))[0])
    assert np.max(np.abs(g - fd)) <= 1e-6 * (1 + np.max(np.abs(g))) + 1e-10 * mag / 1e-5


@settings(max_examples=100, deadline=None)
@given(terms, st.floats(0.1, 3), st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)))
def test_homogenize_is_homogeneous(t, lam, pt):
    f = Polynomial(2, t)
    d = f.degree
    h = homogenize(f, d)
    assert h.is_homogeneous()
    x = np.array(pt)
    lhs = evaluate(h, lam * x)
    rhs = lam ** d * evaluate(h, x)
    mag = float(h.magnitude_many((lam * x).reshape(1, -1))[0])
    assert abs(lhs - rhs) <= 1e-12 * (mag + 1e-300) * 10


@settings(max_examples=100, deadline=None)
@given(terms)
def test_dehomogenize_round_trip(t):
    f = Polynomial(2, t)
    assert homogenize(f, f.degree).fix_variable(0, 1.0) == f


@settings(max_examples=100, deadline=None)
@given(terms, st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)))
def test_euler_identity(t, pt):
    f = Polynomial(2, t)
    h = homogenize(f, f.degree)
    x = np.array(pt)
    lhs = sum(x[i] * evaluate(h.diff(i), x) for i in range(3))
    rhs = f.degree * evaluate(h, x)
    mag = f.degree * float(h.magnitude_many(x.reshape(1, -1))[0])
    assert abs(lhs - rhs) <= 1e-12 * (mag + 1e-300) * 10


@settings(max_examples=150, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)),
                       st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=0, max_size=6))
def test_parser_round_trips_printer(t):
    p = Polynomial(2, {k: complex(a, b) for k, (a, b) in t.items()})
    assert parse_polynomial(format_polynomial(p, XY), XY) == p


@settings(max_examples=60, deadline=None)
@given(terms, terms, points)
def test_arithmetic_agrees_with_evaluation(a, b, pt):
    p, q = Polynomial(2, a), Polynomial(2, b)
    x = np.array(pt)
    for r, expect in ((p + q, evaluate(p, x) + evaluate(q, x)),
                      (p * q, evaluate(p, x) * evaluate(q, x)),
                      (p - q, evaluate(p, x) - evaluate(q, x))):
        mag = float((p * q).magnitude_many(x.reshape(1, -1))[0]) + float(p.magnitude_many(x.reshape(1, -1))[0]) \
            + float(q.magnitude_many(x.reshape(1, -1))[0])
        assert abs(evaluate(r, x) - expect) <= 1e-12 * mag + 1e-300
