import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germflow.conditions import (
    ConditionKind,
    GermFamily,
    condition_point_values,
    condition_values_many,
    delta,
    hermitian,
    lift_to_zero_set,
    line_distance,
    phi_ratio,
    split_bound_values,
)
from germflow.errors import InputError, NotLiftableError
from germflow.infinity import build_infinity_family
from germflow.poly_core import Field, Polynomial, parse_polynomial
from germflow.sampling import random_family, random_point

from oracles import numeric_line_distance

XY = ["x", "y"]


def fam(f, g, field=Field.REAL, names=XY):
    return GermFamily(parse_polynomial(f, names), parse_polynomial(g, names), field)


QUAD = fam("x^2 + y^2", "x*y")


def test_line_distance_example():
    r = line_distance(np.array([2.0, 4.0]), np.array([2.0, 1.0]))
    assert r.value == pytest.approx(6 / math.sqrt(5), rel=1e-14)
    assert r.minimizer == pytest.approx(-8 / 5, rel=1e-14)
    ref, _ = numeric_line_distance(np.array([2.0, 4.0]), np.array([2.0, 1.0]))
    assert abs(r.value - ref) <= 1e-9


def test_line_distance_exact_cancellation_and_degenerate():
    u = np.array([1.5, -2.0, 0.25])
    r = line_distance(u, u)
    assert r.value == 0.0 and r.minimizer == pytest.approx(-1.0)
    d = line_distance(u, np.zeros(3))
    assert d.degenerate and d.value == pytest.approx(np.linalg.norm(u)) and d.minimizer == 0


def test_line_distance_length_mismatch():
    with pytest.raises(InputError):
        line_distance(np.ones(2), np.ones(3))


def test_delta_examples():
    assert delta(QUAD, [1.0, 2.0]) == pytest.approx(36.0, rel=1e-14)
    assert delta(fam("x^2 + y^3", "2*x^2 + 2*y^3"), [0.7, -0.3]) == pytest.approx(0.0, abs=1e-12)
    assert delta(fam("x", "y"), [0.0, 0.0]) == 1.0


def test_phi_ratio_examples():
    assert phi_ratio(QUAD, [1.0, 2.0]) == pytest.approx(math.sqrt(5) / 3, rel=1e-13)
    assert phi_ratio(QUAD, [0.0, 2.0]) == 0.0
    same = fam("x^2 + y", "x^2 + y")
    assert phi_ratio(same, [0.5, 0.5]) == math.inf
    assert math.isnan(phi_ratio(same, [0.0, 0.0]))


def test_condition_values_examples():
    line = GermFamily(parse_polynomial("x^2"), parse_polynomial("x"))
    s = 1e-3
    num, den = condition_point_values(line, "C0_1", (np.array([s]), -2 * s))
    assert num == pytest.approx(1e-3) and den == 0.0
    mu = fam("x^3 + y^6", "x*y^4")
    assert condition_point_values(mu, "C2_6", (np.zeros(2), 0.1)) == (0.0, 0.0)
    assert condition_point_values(QUAD, "C2_7", (np.zeros(2), 0.3)) == (0.0, 0.0)


def test_condition_values_at_a_generic_point():
    x, t = np.array([1.0, 2.0]), 0.5
    dF = np.array([2 + t * 2, 4 + t * 1])
    assert condition_point_values(QUAD, "C0_1", (x, t)) == pytest.approx((2.0, np.linalg.norm(dF)))
    assert condition_point_values(QUAD, "C2_7", (x, t))[1] == pytest.approx(np.linalg.norm(x) * np.linalg.norm(dF))
    # C1_2: inf over eta of |eta (dF, g) + (grad g, 0)|
    full = np.append(dF, 2.0)
    gext = np.array([2.0, 1.0, 0.0])
    ref, _ = numeric_line_distance(gext, full)
    assert condition_point_values(QUAD, "C1_2", (x, t))[1] == pytest.approx(ref, rel=1e-8)
    assert condition_point_values(QUAD, "C1_1", (x, t))[1] == pytest.approx(math.hypot(np.linalg.norm(x), t) * ref,
                                                                             rel=1e-8)
    ref2, _ = numeric_line_distance(full, gext)
    assert condition_point_values(QUAD, "CorAg_ii", (x, t))[1] == pytest.approx(ref2, rel=1e-8)


def test_malgrange_values():
    f = parse_polynomial("x^2*y - x", XY)
    probe = GermFamily(f, Polynomial.zero(2), Field.COMPLEX, germ=False)
    s = 1e-2
    x = np.array([s, 1 / (2 * s)])
    num, den = condition_point_values(probe, "C3_1", x)
    assert num == 1.0
    # grad f = (2xy - 1, x^2) = (0, s^2)
    assert den == pytest.approx(np.linalg.norm(x) * s ** 2, rel=1e-12)


def test_infinity_kinds_need_chart_family():
    with pytest.raises(InputError):
        condition_point_values(QUAD, "C3_2", (np.ones(2), 0.0))
    inf = build_infinity_family(parse_polynomial("x^2*y - x", XY), 1)
    y = np.array([0.1 + 0j, 0.2 + 0j])
    t = inf.local_f(*y) / y[0] ** 3
    num, den = condition_point_values(inf.family, "C3_3", (y, t))
    assert num == pytest.approx(abs(y[0]) ** 3)
    assert den >= condition_point_values(inf.family, "C3_2", (y, t))[1]


def test_lift_to_zero_set():
    for s in (0.5, 1e-3, 1e-6):
        p, t = lift_to_zero_set(QUAD, [s, s])
        assert t == pytest.approx(-2.0, rel=1e-14)
    _, t = lift_to_zero_set(fam("x^2 - y^2", "x*y"), [1.0, 1.0])
    assert t == 0.0
    with pytest.raises(NotLiftableError):
        lift_to_zero_set(QUAD, [0.0, 0.0])


def test_split_bound_never_exceeds_the_c11_bound_from_either_side():
    x, t = np.array([0.3, 0.2]), 0.1
    num, bound = split_bound_values(QUAD, (x, t))
    # the split bound dominates |p| inf_eta |eta grad F + grad g| by the triangle inequality
    _, c11 = condition_point_values(QUAD, "C1_1", (x, t))
    assert num == pytest.approx(0.06)
    assert bound >= c11 / math.sqrt(2) - 1e-12


def test_condition_kind_aliases():
    assert ConditionKind.parse("C2_6") is ConditionKind.C2_6_LeSaito
    assert ConditionKind.parse("c3_1") is ConditionKind.C3_1_Malgrange
    with pytest.raises((InputError, ValueError)):
        ConditionKind.parse("C9_9")


def test_family_validation():
    with pytest.raises(InputError):
        fam("x + 1", "y")
    with pytest.raises(InputError):
        GermFamily(parse_polynomial("x"), parse_polynomial("x*y", XY))
    with pytest.raises(InputError):
        GermFamily(parse_polynomial("(0, 1)*x"), parse_polynomial("x"), Field.REAL)


# -- properties --------------------------------------------------------------------

vec_entries = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(vec_entries, min_size=6, max_size=6), st.lists(vec_entries, min_size=6, max_size=6))
def test_line_distance_pythagoras(a, b):
    u, w = np.array(a[:3]) + 1j * np.array(a[3:]), np.array(b[:3]) + 1j * np.array(b[3:])
    r = line_distance(u, w)
    if r.degenerate:
        return
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    lhs = r.value ** 2 * nw ** 2 + abs(hermitian(u, w)) ** 2
    assert lhs == pytest.approx(nu ** 2 * nw ** 2, rel=1e-10, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Field.REAL, Field.COMPLEX]))
def test_delta_nonnegative_and_zero_for_parallel_gradients(seed, field):
    rng = np.random.default_rng(seed)
    fm = random_family(rng, 2, 3, field)
    x = random_point(rng, 2, field)
    assert delta(fm, x) >= 0.0
    c = complex(rng.normal(), rng.normal()) if field is Field.COMPLEX else rng.normal()
    par = GermFamily(fm.f, fm.f * c, field)
    j = par.jet(x)
    scale = np.linalg.norm(j.grad_f) ** 2 * np.linalg.norm(j.grad_g) ** 2
    assert delta(par, x) <= 1e-9 * scale + 1e-300


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Field.REAL, Field.COMPLEX]),
       st.sampled_from(["C0_1", "C1_1", "C1_2", "CorAg_ii", "C2_6", "C2_7"]))
def test_vectorised_values_match_pointwise(seed, field, kind):
    rng = np.random.default_rng(seed)
    fm = random_family(rng, 2, 3, field)
    X = np.array([random_point(rng, 2, field) for _ in range(5)])
    T = rng.normal(size=5) if field is Field.REAL else rng.normal(size=5) + 1j * rng.normal(size=5)
    num, den = condition_values_many(fm, kind, X, T)
    for k in range(5):
        n1, d1 = condition_point_values(fm, kind, (X[k], T[k]))
        assert num[k] == pytest.approx(n1, rel=1e-12, abs=1e-300)
        assert den[k] == pytest.approx(d1, rel=1e-9, abs=1e-12 * (1 + d1))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_lift_lands_on_zero_set(seed):
    rng = np.random.default_rng(seed)
    fm = random_family(rng, 2, 3, Field.COMPLEX)
    x = random_point(rng, 2, Field.COMPLEX)
    p, t = lift_to_zero_set(fm, x)
    F = fm.value(x, t)
    scale = float(fm.f.magnitude_many(x.reshape(1, -1))[0])
    assert abs(F) <= 1e-12 * scale * 10
