"""Exact scalars in Q(v) with v^2 = q.

A ScalarV is stored as ``v**offset * numerator / denominator`` with
numerator and denominator in ZZ[v], coprime, the denominator's leading
coefficient positive and neither polynomial divisible by v.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Iterable, Sequence, Union

from sympy import isprime
from sympy.polys.domains import ZZ
from sympy.polys.rings import PolyElement, ring

from .exceptions import (
    DivisionByZeroError,
    EvenPrimeError,
    NotSymmetricError,
    OutOfRangeError,
    PoleAtPointError,
)

if TYPE_CHECKING:
    from .quiver import DimVector, QuiverWithDuality

RING, V = ring("v", ZZ)

VARIABLE_NOTE = "v = q^(1/2)"

Number = Union[int, "ScalarV"]


def _low_degree(poly: PolyElement) -> int:
    return min(monom[0] for monom in poly.monoms())


def _shift(poly: PolyElement, k: int) -> PolyElement:
    if not k:
        return poly
    return RING.from_dict({(monom[0] + k,): coeff for monom, coeff in poly.terms()})


def _from_coeffs(coeffs: Iterable[int]) -> PolyElement:
    return RING.from_dict({(k,): ZZ(c) for k, c in enumerate(coeffs) if c})


def _coeffs(poly: PolyElement) -> list[int]:
    if not poly:
        return [0]
    out = [0] * (poly.degree() + 1)
    for monom, coeff in poly.terms():
        out[monom[0]] = int(coeff)
    return out


def _canonical(num: PolyElement, den: PolyElement, offset: int) -> tuple[PolyElement, PolyElement, int]:
    if not den:
        raise DivisionByZeroError("denominator is zero")
    if not num:
        return RING.zero, RING.one, 0
    num, den = num.cancel(den)
    k = _low_degree(num)
    if k:
        num = _shift(num, -k)
        offset += k
    k = _low_degree(den)
    if k:
        den = _shift(den, -k)
        offset -= k
    return num, den, offset


def _poly_text(poly: PolyElement) -> str:
    parts: list[str] = []
    for monom, coeff in sorted(poly.terms(), key=lambda t: -t[0][0]):
        e, c = monom[0], int(coeff)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if e == 0:
            body = str(c)
        else:
            var = "v" if e == 1 else f"v^{e}"
            body = var if c == 1 else f"{c}*{var}"
        if not parts:
            parts.append(body if sign == "+" else "-" + body)
        else:
            parts.append(sign + body)
    return "".join(parts)


def _wrap(poly: PolyElement) -> str:
    text = _poly_text(poly)
    return f"({text})" if len(poly.terms()) > 1 else text


class ScalarV:
    """Exact element of Q(v), immutable and in canonical form."""

    __slots__ = ("_num", "_den", "_offset", "_hash")

    def __init__(self, numerator: PolyElement = RING.zero, denominator: PolyElement = RING.one, offset: int = 0) -> None:
        self._num, self._den, self._offset = _canonical(numerator, denominator, offset)
        self._hash = None

    # construction

    @classmethod
    def from_int(cls, n: Union[int, Fraction]) -> "ScalarV":
        n = Fraction(n)
        return cls(RING(n.numerator), RING(n.denominator))

    @classmethod
    def from_coeffs(cls, numerator: Sequence[int], denominator: Sequence[int] = (1,), offset: int = 0) -> "ScalarV":
        """Build from ascending coefficient lists."""
        return cls(_from_coeffs(numerator), _from_coeffs(denominator), offset)

    @classmethod
    def v_power(cls, k: int) -> "ScalarV":
        return cls(RING.one, RING.one, k)

    @classmethod
    def q_power(cls, k: Union[int, Fraction]) -> "ScalarV":
        """q**k for a half-integer k, i.e. v**(2k)."""
        twice = Fraction(k) * 2
        if twice.denominator != 1:
            raise OutOfRangeError(f"q-exponent {k} is not a half-integer")
        return cls.v_power(int(twice))

    @classmethod
    def coerce(cls, value: Number) -> "ScalarV":
        if isinstance(value, ScalarV):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.from_int(value)
        raise TypeError(f"cannot coerce {type(value).__name__} to ScalarV")

    # accessors

    @property
    def numerator(self) -> PolyElement:
        return self._num

    @property
    def denominator(self) -> PolyElement:
        return self._den

    @property
    def offset(self) -> int:
        return self._offset

    def is_zero(self) -> bool:
        return not self._num

    def __bool__(self) -> bool:
        return bool(self._num)

    def as_rational(self) -> Union[Fraction, None]:
        """The value as a Fraction if it is a constant, else None."""
        if not self._num:
            return Fraction(0)
        if self._offset == 0 and self._num.degree() == 0 and self._den.degree() == 0:
            return Fraction(int(self._num.LC), int(self._den.LC))
        return None

    def as_integer(self) -> Union[int, None]:
        """The value as an int if it is an integer constant, else None."""
        value = self.as_rational()
        if value is None or value.denominator != 1:
            return None
        return value.numerator

    def reflect(self) -> "ScalarV":
        """Substitute v -> -v."""
        def flip(poly: PolyElement) -> PolyElement:
            return RING.from_dict({m: (-c if m[0] % 2 else c) for m, c in poly.terms()})

        sign = -1 if self._offset % 2 else 1
        return ScalarV(flip(self._num) * sign, flip(self._den), self._offset)

    def is_q_rational(self) -> bool:
        """True when the value is a rational function of q = v^2 alone."""
        return self == self.reflect()

    # arithmetic

    def __add__(self, other: Number) -> "ScalarV":
        try:
            other = ScalarV.coerce(other)
        except TypeError:
            return NotImplemented
        if not other._num:
            return self
        if not self._num:
            return other
        low = min(self._offset, other._offset)
        left = _shift(self._num, self._offset - low)
        right = _shift(other._num, other._offset - low)
        if self._den == other._den:
            return ScalarV(left + right, self._den, low)
        return ScalarV(left * other._den + right * self._den, self._den * other._den, low)

    __radd__ = __add__

    def __neg__(self) -> "ScalarV":
        return ScalarV(-self._num, self._den, self._offset)

    def __sub__(self, other: Number) -> "ScalarV":
        try:
            other = ScalarV.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Number) -> "ScalarV":
        return ScalarV.coerce(other) - self

    def __mul__(self, other: Number) -> "ScalarV":
        try:
            other = ScalarV.coerce(other)
        except TypeError:
            return NotImplemented
        if not self._num or not other._num:
            return ZERO
        return ScalarV(self._num * other._num, self._den * other._den, self._offset + other._offset)

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "ScalarV":
        try:
            other = ScalarV.coerce(other)
        except TypeError:
            return NotImplemented
        if not other._num:
            raise DivisionByZeroError(f"division of {self} by zero")
        return ScalarV(self._num * other._den, self._den * other._num, self._offset - other._offset)

    def __rtruediv__(self, other: Number) -> "ScalarV":
        return ScalarV.coerce(other) / self

    def __pow__(self, n: int) -> "ScalarV":
        if n < 0:
            return ONE / (self ** -n)
        result = ONE
        for _ in range(n):
            result = result * self
        return result

    # comparison

    def _key(self) -> tuple:
        return (self._offset, tuple(_coeffs(self._num)), tuple(_coeffs(self._den)))

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ScalarV.from_int(other)
        if not isinstance(other, ScalarV):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            # constants compare equal to int and Fraction, so they hash alike
            constant = self.as_rational()
            self._hash = hash(constant) if constant is not None else hash(self._key())
        return self._hash

    # rendering

    def __str__(self) -> str:
        if not self._num:
            return "0"
        if self._offset >= 0:
            top, bottom = _shift(self._num, self._offset), self._den
        else:
            top, bottom = self._num, _shift(self._den, -self._offset)
        if bottom == RING.one:
            return _poly_text(top)
        return f"{_wrap(top)}/{_wrap(bottom)}"

    def __repr__(self) -> str:
        return f"ScalarV('{self}')"

    def to_json(self) -> dict[str, Any]:
        return {"num": _coeffs(self._num), "den": _coeffs(self._den), "offset": self._offset}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ScalarV":
        return cls.from_coeffs(data["num"], data["den"], data["offset"])


ZERO = ScalarV()
ONE = ScalarV(RING.one)


def _check_odd_prime(p: int) -> None:
    if p % 2 == 0 or not isprime(p):
        raise EvenPrimeError(f"{p} is not an odd prime")


def _split(poly: PolyElement, shift: int, p: int) -> tuple[Fraction, Fraction]:
    even, odd = Fraction(0), Fraction(0)
    base = Fraction(p)
    for monom, coeff in poly.terms():
        k = monom[0] + shift
        if k % 2 == 0:
            even += int(coeff) * base ** (k // 2)
        else:
            odd += int(coeff) * base ** ((k - 1) // 2)
    return even, odd


def specialize(f: ScalarV, p: int) -> tuple[Fraction, Fraction]:
    """Return (A, B) with f(sqrt(p)) = A + B*sqrt(p)."""
    _check_odd_prime(p)
    if f.is_zero():
        return Fraction(0), Fraction(0)
    a, b = _split(f.numerator, f.offset, p)
    c, d = _split(f.denominator, 0, p)
    norm = c * c - p * d * d
    if norm == 0:
        raise PoleAtPointError(f"{f} has a pole at v = sqrt({p})")
    return (a * c - p * b * d) / norm, (b * c - a * d) / norm


# q-combinatorics

@lru_cache(maxsize=None)
def pochhammer(n: int, step: int = 1) -> ScalarV:
    """(q^-step)_n = prod_{i=1..n} (1 - q^(-step*i))."""
    if n < 0:
        raise OutOfRangeError(f"Pochhammer length {n} < 0")
    result = ONE
    for i in range(1, n + 1):
        result = result * (ONE - ScalarV.v_power(-2 * step * i))
    return result


def pochhammer_dim(quiver: "QuiverWithDuality", d: "DimVector") -> ScalarV:
    result = ONE
    for n in d:
        result = result * pochhammer(n)
    return result


def pochhammer_sigma(quiver: "QuiverWithDuality", e: "DimVector") -> ScalarV:
    """(q^-1)^sigma_e: (q^-2)_{floor(e_i/2)} on fixed nodes, (q^-1)_{e_i} on Q0+."""
    if quiver.sigma(e) != tuple(e):
        raise NotSymmetricError(f"{quiver.format_dim(e)} is not sigma-symmetric")
    result = ONE
    for i in quiver.node_fixed:
        result = result * pochhammer(e[i] // 2, step=2)
    for i in quiver.node_plus:
        result = result * pochhammer(e[i])
    return result


def q_integer(n: int) -> ScalarV:
    """[n]_q = (q^n - 1)/(q - 1)."""
    if n < 0:
        raise OutOfRangeError(f"q-integer of {n} < 0")
    return ScalarV(sum((V ** (2 * k) for k in range(n)), RING.zero))


def q_binomial(n: int, k: int) -> ScalarV:
    """Gaussian binomial in q."""
    if not 0 <= k <= n:
        raise OutOfRangeError(f"q-binomial({n}, {k}) needs 0 <= k <= n")
    return pochhammer(n, step=-1) / (pochhammer(k, step=-1) * pochhammer(n - k, step=-1))
