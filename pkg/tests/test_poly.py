from fractions import Fraction

import pytest
import sympy
from hypothesis import given

from conftest import polys
from martinetkit.poly import (NegativeExponentError, NotDivisibleError, ParseError, Poly,
                              UnknownVariableError, divide_exact, divides, divmod_poly, gcd,
                              gcd_many, parse, squarefree_part, substitute)

X, Y, Z = sympy.symbols("x y z")


def to_sympy(p: Poly):
    return sympy.expand(sum(sympy.Rational(c.numerator, c.denominator) * X ** e[0] * Y ** e[1] * Z ** e[2]
                            for e, c in p.terms.items()))


def from_sympy(expr) -> Poly:
    P = sympy.Poly(sympy.expand(expr), X, Y, Z)
    return Poly({m: Fraction(int(c.p), int(c.q)) for m, c in P.terms()})


def normalized(p: Poly) -> Poly:
    return p.primitive()


# ----------------------------------------------------------------- parsing

def test_parse_loop_surface():
    p = parse("y^2 - x^2*(x+z)")
    assert p.terms == {(0, 2, 0): 1, (3, 0, 0): -1, (2, 0, 1): -1}


def test_parse_zero_and_cancellation():
    assert parse("0").terms == {}
    assert parse("(x+y)^2 - x^2 - 2*x*y - y^2").is_zero()


def test_parse_aliases_rationals_and_whitespace():
    assert parse(" x1 *x2 ^2 + 1/3 * x3 ") == parse("x*y^2+1/3*z")
    assert parse("-(x - 2/4)") == parse("1/2 - x")


@pytest.mark.parametrize("text, offset", [("x + * y", 4), ("x^^2", 2), ("(x + y", 6), ("x y", 2)])
def test_syntax_errors_report_offset(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset


def test_unknown_variable():
    with pytest.raises(UnknownVariableError) as info:
        parse("x + w")
    assert info.value.offset == 4


def test_negative_exponent_needs_laurent_variable():
    with pytest.raises(NegativeExponentError):
        parse("x^-1")
    p = parse("x^-1*y", laurent_var=1)
    assert p.terms == {(-1, 1, 0): 1}
    with pytest.raises(NegativeExponentError):
        parse("y^-1", laurent_var=1)


def test_printing_is_graded_lex():
    assert str(parse("y^2 - x^2*(x+z)")) == "-x^3 - x^2*z + y^2"
    assert str(parse("1/3*y^3 - 2")) == "1/3*y^3 - 2"
    assert str(parse("x^-2*z", laurent_var=1)) == "x^-2*z"


@given(polys())
def test_parse_print_roundtrip(p):
    assert parse(str(p)) == p


# -------------------------------------------------------------- arithmetic

def test_arith_examples():
    x, y = Poly.var(1), Poly.var(2)
    assert (x + (-x)).is_zero()
    assert (x + y) * (x - y) == parse("x^2 - y^2")
    u, v, w = Poly.var(1), Poly.var(2), Poly.var(3)
    assert w ** 2 * (1 - u ** 2 - v ** 2) == parse("z^2 - x^2*z^2 - y^2*z^2")


@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert (p - p).is_zero()


@given(polys(3), polys(3))
def test_multiplication_matches_sympy(p, q):
    assert to_sympy(p * q) == sympy.expand(to_sympy(p) * to_sympy(q))


# ---------------------------------------------------------- differentiation

def test_diff_examples():
    assert parse("y^2 - x^3 - x^2*z").diff(1) == parse("-3*x^2 - 2*x*z")
    assert Poly.const(7).diff(2).is_zero()
    assert parse("z^2 - x^2 - y^2").diff(3) == parse("2*z")
    assert parse("x^-2*y", laurent_var=1).diff("x") == parse("-2*x^-3*y", laurent_var=1)


@given(polys(), polys())
def test_leibniz(p, q):
    for v in (1, 2, 3):
        assert (p * q).diff(v) == p.diff(v) * q + p * q.diff(v)


# ------------------------------------------------------------- substitution

SIGMA = (parse("x*z"), parse("y*z"), parse("z"))


def test_substitute_conical_chart():
    assert substitute(parse("z^2 - x^2 - y^2"), SIGMA) == parse("z^2*(1 - x^2 - y^2)")


def test_substitute_identity():
    p = parse("x^3*y - 2*z + 1/5")
    assert substitute(p, (Poly.var(1), Poly.var(2), Poly.var(3))) == p


def test_substitute_loop_surface_against_sympy():
    got = substitute(parse("y^2 - x^2*(x+z)"), SIGMA)
    oracle = sympy.expand((Y * Z) ** 2 - (X * Z) ** 2 * (X * Z + Z))
    assert to_sympy(got) == oracle
    assert got == parse("y^2*z^2 - x^3*z^3 - x^2*z^3")


@given(polys(3), polys(3))
def test_substitute_is_ring_homomorphism(p, q):
    imgs = (parse("x + y"), parse("y*z"), parse("1 - x"))
    assert substitute(p + q, imgs) == substitute(p, imgs) + substitute(q, imgs)
    assert substitute(p * q, imgs) == substitute(p, imgs) * substitute(q, imgs)


# ----------------------------------------------------------------- division

def test_divide_exact_examples():
    assert divide_exact(parse("z^2*(1 - x^2 - y^2)"), parse("z^2")) == parse("1 - x^2 - y^2")
    p = parse("x^2 + 3*y*z")
    assert divide_exact(p, Poly.one()) == p
    with pytest.raises(NotDivisibleError):
        divide_exact(parse("x^2 - y^2"), parse("x + z"))
    with pytest.raises(ZeroDivisionError):
        divide_exact(p, Poly.zero())


def test_laurent_division():
    p = parse("x^-1*y + x", laurent_var=1)
    assert divide_exact(p, parse("x")) == parse("x^-2*y + 1", laurent_var=1)


@given(polys(), polys())
def test_divide_exact_inverts_multiplication(p, q):
    if q.is_zero():
        return
    assert divide_exact(p * q, q) == p
    assert divides(q, p * q)


@given(polys(3), polys(3))
def test_divmod_normal_form(p, q):
    if q.is_zero():
        return
    quo, rem = divmod_poly(p, q)
    assert quo * q + rem == p
    lead = q.leading_term()[0]
    for e in rem.terms:
        assert not all(a >= b for a, b in zip(e, lead))


# ---------------------------------------------------------------------- gcd

def test_gcd_examples():
    assert gcd(parse("x^2*y"), parse("x*y^2")) == parse("x*y")
    assert gcd(parse("-2*x - 4*y"), Poly.zero()) == parse("x + 2*y")
    assert gcd(parse("(x+y)^2"), parse("(x+y)*(x-y)")) == parse("x + y")
    assert gcd_many([parse("x*y*z"), parse("x^2*z"), parse("x*z^3")]) == parse("x*z")


@given(polys(3), polys(3), polys(2))
def test_gcd_matches_sympy(a, b, c):
    p, q = a * c, b * c
    if p.is_zero() or q.is_zero():
        return
    g = gcd(p, q)
    assert g == normalized(from_sympy(sympy.gcd(to_sympy(p), to_sympy(q))))
    assert divides(g, p) and divides(g, q)


# ---------------------------------------------------------------- squarefree

def test_squarefree_examples():
    assert squarefree_part(parse("z^2*(1 - x^2 - y^2)")) == normalized(parse("z*(1 - x^2 - y^2)"))
    assert squarefree_part(parse("x + y")) == parse("x + y")
    assert squarefree_part(parse("(2*x)^2")) == parse("x")
    assert squarefree_part(parse("x^2*(1 - y)")) == normalized(parse("x*(1 - y)"))
    with pytest.raises(ValueError):
        squarefree_part(Poly.zero())


@given(polys(3), polys(2))
def test_squarefree_matches_sympy_and_is_idempotent(a, b):
    p = a * b * b
    if p.is_zero() or p.is_constant():
        return
    s = squarefree_part(p)
    assert s == normalized(from_sympy(sympy.sqf_part(to_sympy(p), X, Y, Z)))
    assert squarefree_part(s) == s
    assert divides(s, p)


# ---------------------------------------------------------------- evaluation

def test_evaluate_and_poles():
    p = parse("x^2*y - 1/4")
    assert p.evaluate((2, 3, 0)) == 11.75
    assert p.evaluate_exact((Fraction(1, 2), 1, 0)) == 0
    q = parse("x^-1", laurent_var=1)
    assert q.evaluate((0.5, 0, 0)) == 2.0
    with pytest.raises(ZeroDivisionError):
        q.evaluate((0.0, 1.0, 1.0))
