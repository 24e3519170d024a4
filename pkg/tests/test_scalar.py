from fractions import Fraction

import pytest

from oridt.exceptions import DivisionByZeroError, EvenPrimeError, NotSymmetricError, OutOfRangeError, PoleAtPointError
from oridt.presets import a2
from oridt.scalar import (
    ONE,
    ZERO,
    ScalarV,
    pochhammer,
    pochhammer_sigma,
    q_binomial,
    q_integer,
    specialize,
)

v = ScalarV.v_power(1)


def test_arithmetic_is_canonical():
    """Products and quotients reduce to the same canonical form."""
    assert (v + 1) * (v - 1) == v * v - 1
    assert (v * v - 1) / (v - 1) == v + 1
    assert ScalarV.from_coeffs([-1, 0, 1]) == v**2 - 1
    assert v**-2 * v**2 == ONE
    assert ScalarV.from_int(3) == 3
    assert not ZERO
    assert hash((v + 1) * (v - 1)) == hash(v * v - 1)


def test_rendering():
    assert str(v / (v**2 - 1)) == "v/(v^2-1)"
    assert str(ScalarV.from_coeffs([-1, 1, 0, 1], [1], offset=-2)) == "(v^3+v-1)/v^2"
    assert str(-v) == "-v"
    assert str(ZERO) == "0"
    assert str(2 * v**3 - 1) == "2*v^3-1"


def test_division_by_zero():
    with pytest.raises(DivisionByZeroError):
        v / ZERO
    with pytest.raises(ZeroDivisionError):
        ONE / (v - v)


def test_specialize_splits_sqrt_part():
    assert specialize(v, 3) == (Fraction(0), Fraction(1))
    assert specialize(v**2 + 1, 3) == (Fraction(4), Fraction(0))
    assert specialize(1 / (v - 1), 3) == (Fraction(1, 2), Fraction(1, 2))


def test_specialize_errors():
    with pytest.raises(EvenPrimeError):
        specialize(v, 2)
    with pytest.raises(EvenPrimeError):
        specialize(v, 9)
    with pytest.raises(PoleAtPointError):
        specialize(1 / (v**2 - 3), 3)


def test_q_combinatorics():
    q = v**2
    assert pochhammer(2) == (1 - 1 / q) * (1 - 1 / q**2)
    assert q_integer(3) == 1 + q + q**2
    assert specialize(q_binomial(4, 2), 3) == (Fraction(130), Fraction(0))
    with pytest.raises(OutOfRangeError):
        q_binomial(2, 3)


def test_pochhammer_sigma_needs_symmetric_vector():
    quiver = a2()
    assert pochhammer_sigma(quiver, (1, 1)) == pochhammer(1)
    with pytest.raises(NotSymmetricError):
        pochhammer_sigma(quiver, (1, 0))


def test_half_integer_powers_and_reflection():
    assert ScalarV.q_power(Fraction(1, 2)) == v
    with pytest.raises(OutOfRangeError):
        ScalarV.q_power(Fraction(1, 3))
    assert (v + 1).reflect() == 1 - v
    assert (v**2 + 1).is_q_rational()
    assert not v.is_q_rational()


def test_integer_extraction_and_json():
    assert ScalarV.from_int(5).as_integer() == 5
    assert ZERO.as_integer() == 0
    assert v.as_integer() is None
    x = (v**3 + v - 1) / (v**2 - 1) * v**-3
    assert ScalarV.from_json(x.to_json()) == x


SAMPLES = [
    v,
    v + 1,
    1 / (v - 1),
    (v**3 + v - 1) / (v**2 - 1) * v**-3,
    ScalarV.from_int(Fraction(2, 3)),
    v / (v**2 + v + 1),
    -v**-2 + 3,
]


def test_field_axioms():
    for x in SAMPLES:
        assert x + ZERO == x
        assert x * ONE == x
        assert x - x == ZERO
        assert x * (1 / x) == ONE
        for y in SAMPLES:
            assert x + y == y + x
            assert x * y == y * x
            assert (x + y) - y == x
            assert (x / y) * y == x
            for z in SAMPLES[:4]:
                assert (x + y) + z == x + (y + z)
                assert (x * y) * z == x * (y * z)
                assert x * (y + z) == x * y + x * z


def test_canonical_form_is_a_fixed_point():
    for x in SAMPLES:
        again = ScalarV(x.numerator, x.denominator, x.offset)
        assert again == x
        assert (again.numerator, again.denominator, again.offset) == (x.numerator, x.denominator, x.offset)
    assert ScalarV.from_coeffs([-1, 0, 1], [-1, 0, 0, 0, 1]) == 1 / (v**2 + 1)
    assert ScalarV.from_coeffs([1, -1], [-1, 1]) == -1
    assert ScalarV.from_coeffs([0, 0, 2], [0, 4]) == v / 2
    assert ScalarV.from_coeffs([0, 0, 2], [0, 4]).offset == 1


@pytest.mark.parametrize("p", [3, 5, 7])
def test_specialize_is_multiplicative(p):
    for x in SAMPLES:
        a, b = specialize(x, p)
        for y in SAMPLES:
            c, d = specialize(y, p)
            assert specialize(x * y, p) == (a * c + p * b * d, a * d + b * c)
            assert specialize(x + y, p) == (a + c, b + d)


def test_constants_hash_like_numbers():
    assert hash(ScalarV.from_int(3)) == hash(3)
    assert hash(ScalarV.from_int(Fraction(1, 2))) == hash(Fraction(1, 2))
    assert hash(ZERO) == hash(0)
    assert len({ScalarV.from_int(3), 3}) == 1
    assert {3: "three"}[ScalarV.from_int(3)] == "three"
    assert ScalarV.from_int(Fraction(-2, 3)).as_rational() == Fraction(-2, 3)
    assert ScalarV.from_int(Fraction(1, 2)).as_integer() is None
    assert v.as_rational() is None
    assert (v / v).as_rational() == 1
