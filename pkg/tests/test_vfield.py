from fractions import Fraction

import pytest
from hypothesis import given

from conftest import fields, small_polys
from martinetkit.poly import Poly, divmod_poly, parse
from martinetkit.vfield import (VecField, divergence_euclidean, evaluate, jacobian, lie_bracket,
                                lie_derivative)

H = parse("y^2 - x^2*(x+z)")
X = VecField.parse(["0", "1", "0"])
Y = VecField.parse(["1", "0", "y^3/3 - x^2*y*(x+z)"])


def test_lie_derivative_examples():
    assert lie_derivative(X, H) == parse("2*y")
    assert lie_derivative(Y, Poly.const(3)).is_zero()
    expected = parse("-3*x^2 - 2*x*z + (y^3/3 - x^2*y*(x+z))*(-x^2)")
    assert lie_derivative(Y, H) == expected


def test_printed_coefficient_differs_modulo_surface():
    # the printed dy coefficient of Z, 3x^2 + 2x(x+z), is not -(Y.h) modulo h
    printed = parse("3*x^2 + 2*x*(x+z)")
    _, rem = divmod_poly(-lie_derivative(Y, H) - printed, H)
    assert not rem.is_zero()


def test_bracket_examples():
    assert lie_bracket(X, Y) == VecField([Poly.zero(), Poly.zero(), H])
    assert lie_bracket(Y, Y).is_zero()
    flat = VecField.parse(["0", "1", "x^2"])
    assert lie_bracket(VecField.coordinate(1), flat) == VecField.parse(["0", "0", "2*x"])


def test_divergence_examples():
    assert divergence_euclidean(VecField.parse(["x", "y", "0"])) == Poly.const(2)
    assert divergence_euclidean(VecField.parse(["1", "0", "y^3/3 - 5"])).is_zero()
    assert divergence_euclidean(VecField.parse(["-2*x*y", "-(3*x^3 + 2*y^2)", "0"])) == parse("-6*y")


def test_jacobian_examples():
    J = jacobian(VecField.parse(["1", "-2", "1/3"]))
    assert all(J[i][j].is_zero() for i in range(3) for j in range(3))
    J = jacobian(VecField.parse(["0", "x", "0"]))
    nonzero = [(i, j) for i in range(3) for j in range(3) if not J[i][j].is_zero()]
    assert nonzero == [(1, 0)] and J[1][0] == Poly.one()


def test_evaluate_examples():
    assert evaluate(VecField.coordinate(2), (5, -1, 2)) == (0.0, 1.0, 0.0)
    assert evaluate(VecField([Poly.zero(), Poly.zero(), H]), (1, 1, 0)) == (0.0, 0.0, 0.0)
    assert evaluate(VecField.parse(["x", "0", "0"]), (2, 0, 0)) == (2.0, 0.0, 0.0)
    assert evaluate(VecField.parse(["x/3", "0", "0"]), (1, 0, 0), exact=True) == (1 / 3, 0.0, 0.0)


def test_laurent_field_pole():
    V = VecField([parse("x^-1", laurent_var=1), Poly.zero(1), Poly.zero(1)])
    assert V.laurent_var == 1
    with pytest.raises(ZeroDivisionError):
        V((0.0, 1.0, 1.0))


@given(fields(), fields(), fields())
def test_jacobi_identity(U, V, W):
    s = lie_bracket(U, lie_bracket(V, W)) + lie_bracket(V, lie_bracket(W, U)) + lie_bracket(W, lie_bracket(U, V))
    assert s.is_zero()


@given(fields(), fields(), small_polys())
def test_bracket_leibniz(V, W, f):
    assert lie_bracket(V, W.scale(f)) == W.scale(lie_derivative(V, f)) + lie_bracket(V, W).scale(f)


@given(fields(), fields())
def test_divergence_of_bracket(V, W):
    lhs = divergence_euclidean(lie_bracket(V, W))
    rhs = lie_derivative(V, divergence_euclidean(W)) - lie_derivative(W, divergence_euclidean(V))
    assert lhs == rhs


@given(fields())
def test_trace_of_jacobian_is_divergence(V):
    J = jacobian(V)
    assert J[0][0] + J[1][1] + J[2][2] == divergence_euclidean(V)


@given(fields(), fields())
def test_evaluation_commutes_with_sum(V, W):
    p = (Fraction(3, 7), Fraction(-5, 4), Fraction(2, 3))
    exact = tuple(c.evaluate_exact(p) for c in (V + W).comps)
    assert exact == tuple(a.evaluate_exact(p) + b.evaluate_exact(p) for a, b in zip(V.comps, W.comps))
    num = evaluate(V + W, tuple(float(c) for c in p))
    for a, b in zip(num, exact):
        assert abs(a - float(b)) <= 1e-12 * max(1.0, abs(float(b)))
