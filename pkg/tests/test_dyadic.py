from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ratproofs.dyadic import Dyadic, DyadicPolynomial, dyadic_arith, poly_eval, HALF, ONE, ZERO

dyadics = st.builds(Dyadic, st.integers(-(10**12), 10**12), st.integers(0, 80))
polys = st.lists(dyadics, max_size=5).map(DyadicPolynomial)


def test_add_example():
    assert dyadic_arith("add", Dyadic(1, 1), Dyadic(1, 2)) == Dyadic(3, 2)


def test_mul_normalises():
    r = dyadic_arith("mul", Dyadic(3, 3), Dyadic(2))
    assert (r.num, r.exp) == (3, 2)


def test_cmp_equal():
    assert dyadic_arith("cmp", Dyadic(5, 3), Dyadic(5, 3)) == 0
    assert dyadic_arith("cmp", Dyadic(1, 1), Dyadic(5, 3)) == -1
    assert dyadic_arith("cmp", ONE, Dyadic(5, 3)) == 1


def test_unknown_op():
    with pytest.raises(ValueError):
        dyadic_arith("div", ONE, ONE)


def test_poly_eval_examples():
    assert poly_eval(DyadicPolynomial([0, 1]), Dyadic(3, 3)) == Dyadic(3, 3)
    q = DyadicPolynomial([1, -2, 2])
    assert poly_eval(q, HALF) == HALF
    assert poly_eval(q, Dyadic(1, 2)) == Dyadic(5, 3)


def test_text_format():
    assert str(Dyadic(5, 3)) == "5/2^3"
    assert Dyadic.parse("5/2^3") == Dyadic(5, 3)
    assert Dyadic.parse(" 12 / 2 ^ 4 ") == Dyadic(3, 2)
    assert Dyadic.parse("-7") == Dyadic(-7)
    assert Dyadic("3/2^1") == Dyadic(3, 1)
    with pytest.raises(ValueError):
        Dyadic.parse("1/3")


def test_zero_and_negative_exponent():
    assert Dyadic(0, 9) == ZERO and ZERO.exp == 0
    assert Dyadic(3, -2) == Dyadic(12)


def test_fraction_round_trip():
    assert Dyadic.from_fraction(Fraction(3, 8)) == Dyadic(3, 3)
    assert Dyadic(3, 3).to_fraction() == Fraction(3, 8)
    with pytest.raises(ValueError):
        Dyadic.from_fraction(Fraction(1, 3))


def test_immutable_and_hash():
    d = Dyadic(1, 1)
    with pytest.raises(AttributeError):
        d.num = 3
    assert hash(Dyadic(4)) == hash(4)
    assert len({Dyadic(2, 2), Dyadic(1, 1), HALF}) == 1


def test_numerator_at():
    assert Dyadic(3, 2).numerator_at(5) == 24
    with pytest.raises(ValueError):
        Dyadic(3, 6).numerator_at(5)


def test_rejects_floats():
    with pytest.raises(TypeError):
        Dyadic(0.5)
    with pytest.raises(TypeError):
        Dyadic(True)


@given(dyadics, dyadics)
def test_cmp_matches_cross_multiplication(a, b):
    lhs = a.num << b.exp
    rhs = b.num << a.exp
    assert dyadic_arith("cmp", a, b) == (lhs > rhs) - (lhs < rhs)


@given(dyadics, dyadics)
def test_field_ops_match_fractions(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb


@given(st.integers(-(10**9), 10**9), st.integers(0, 60))
def test_normalisation_canonical_and_idempotent(num, exp):
    d = Dyadic(num, exp)
    assert d.exp == 0 or d.num % 2 == 1
    again = Dyadic(d.num, d.exp)
    assert (again.num, again.exp) == (d.num, d.exp)
    assert d.to_fraction() == Fraction(num, 2**exp)


@given(polys, polys, dyadics)
def test_poly_product_evaluates_to_product(p, q, x):
    assert poly_eval(p * q, x) == poly_eval(p, x) * poly_eval(q, x)
    assert (p + q)(x) == p(x) + q(x)


def test_poly_stripping_and_degree():
    assert DyadicPolynomial([1, 0, 0]).coeffs == (Dyadic(1),)
    assert DyadicPolynomial([0, 0]).degree == -1
    assert (DyadicPolynomial([1, -1]) ** 2) == DyadicPolynomial([1, -2, 1])
    assert DyadicPolynomial([0, 1]) - DyadicPolynomial([0, 1]) == DyadicPolynomial()
