"""Truncated quantum torus and its module of self-dual symbols.

x_d * x_e = q^(<d,e>/2) x_(d+e) and x_d . xi_e = q^((<d,e> - Et(d))/2) xi_(H(d)+e),
with Et the antisymmetrized self-dual Euler form. Everything is truncated
at a total dimension bound and coefficients are ScalarV.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .exceptions import BoundMismatchError, InadmissibleError, InvalidBaseError, OutOfRangeError, ZeroVectorError
from .quiver import DimVector, QuiverWithDuality, e_tilde, hyperbolic_sum, is_admissible_selfdual, skew_form
from .scalar import ONE, ZERO, Number, ScalarV

DILOG_BASES = (1, 2)  # q and q^2


class _GradedSeries:
    __slots__ = ("quiver", "bound", "_terms")

    def __init__(self, quiver: QuiverWithDuality, bound: int,
                 terms: Union[Mapping[DimVector, ScalarV], Iterable[tuple[DimVector, ScalarV]]] = ()) -> None:
        self.quiver = quiver
        self.bound = bound
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[DimVector, ScalarV] = {}
        for d, c in items:
            d = tuple(d)
            c = ScalarV.coerce(c)
            if c.is_zero():
                continue
            if sum(d) > bound:
                raise OutOfRangeError(f"{quiver.format_dim(d)} exceeds bound {bound}")
            self._check_key(d)
            clean[d] = c
        self._terms = dict(sorted(clean.items()))

    def _check_key(self, d: DimVector) -> None:
        pass

    def _new(self, terms) -> "_GradedSeries":
        return type(self)(self.quiver, self.bound, terms)

    def _same_shape(self, other: "_GradedSeries") -> None:
        if self.bound != other.bound:
            raise BoundMismatchError(f"bounds {self.bound} and {other.bound} differ")
        if self.quiver != other.quiver:
            raise ValueError("series over different quivers")

    @property
    def terms(self) -> dict[DimVector, ScalarV]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[DimVector, ScalarV]]:
        return iter(self._terms.items())

    def coefficient(self, d: Sequence[int]) -> ScalarV:
        return self._terms.get(tuple(d), ZERO)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: "_GradedSeries") -> "_GradedSeries":
        self._same_shape(other)
        out = dict(self._terms)
        for d, c in other._terms.items():
            out[d] = out.get(d, ZERO) + c
        return self._new(out)

    def __neg__(self) -> "_GradedSeries":
        return self._new({d: -c for d, c in self._terms.items()})

    def __sub__(self, other: "_GradedSeries") -> "_GradedSeries":
        return self + (-other)

    def scale(self, c: Number) -> "_GradedSeries":
        c = ScalarV.coerce(c)
        return self._new({d: c * x for d, x in self._terms.items()})

    def restrict(self, bound: int) -> "_GradedSeries":
        if bound > self.bound:
            raise OutOfRangeError(f"cannot extend bound {self.bound} to {bound}")
        return type(self)(self.quiver, bound, {d: c for d, c in self._terms.items() if sum(d) <= bound})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, _GradedSeries) or type(other) is not type(self):
            return NotImplemented
        return self.bound == other.bound and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def first_difference(self, other: "_GradedSeries") -> Optional[tuple[DimVector, ScalarV, ScalarV]]:
        """Smallest key (total dimension, then lexicographic) where the series differ."""
        self._same_shape(other)
        keys = sorted(set(self._terms) | set(other._terms), key=lambda d: (sum(d), d))
        for d in keys:
            left, right = self.coefficient(d), other.coefficient(d)
            if left != right:
                return d, left, right
        return None

    def render(self) -> list[tuple[list[int], str]]:
        return [(list(d), str(c)) for d, c in self._terms.items()]

    def __repr__(self) -> str:
        body = ", ".join(f"{self.quiver.format_dim(d)}: {c}" for d, c in self._terms.items())
        return f"{type(self).__name__}(bound={self.bound}, {{{body}}})"


class TorusSeries(_GradedSeries):
    """Truncated element of the quantum torus, keyed by dimension vectors."""

    __slots__ = ()

    @classmethod
    def unit(cls, quiver: QuiverWithDuality, bound: int) -> "TorusSeries":
        return cls(quiver, bound, {quiver.zero(): ONE})

    @classmethod
    def monomial(cls, quiver: QuiverWithDuality, d: Sequence[int], coeff: Number, bound: int) -> "TorusSeries":
        return cls(quiver, bound, {tuple(d): ScalarV.coerce(coeff)} if sum(d) <= bound else {})

    def __mul__(self, other):
        if isinstance(other, ModuleSeries):
            return module_act(self, other)
        if isinstance(other, TorusSeries):
            return torus_mul(self, other)
        return NotImplemented

    def inverse(self) -> "TorusSeries":
        """Inverse of a series with constant term 1."""
        zero = self.quiver.zero()
        if self.coefficient(zero) != ONE:
            raise OutOfRangeError("only series with constant term 1 are inverted here")
        unit = TorusSeries.unit(self.quiver, self.bound)
        tail = self - unit
        result = unit
        for _ in range(self.bound):
            result = unit - torus_mul(tail, result)
        return result


class ModuleSeries(_GradedSeries):
    """Truncated element of the module, keyed by admissible sigma-symmetric vectors."""

    __slots__ = ()

    def _check_key(self, d: DimVector) -> None:
        if not is_admissible_selfdual(self.quiver, d):
            raise InadmissibleError(f"{self.quiver.format_dim(d)} is not an admissible self-dual dimension vector")

    @classmethod
    def vacuum(cls, quiver: QuiverWithDuality, bound: int) -> "ModuleSeries":
        return cls(quiver, bound, {quiver.zero(): ONE})

    @classmethod
    def basis(cls, quiver: QuiverWithDuality, e: Sequence[int], bound: int, coeff: Number = 1) -> "ModuleSeries":
        return cls(quiver, bound, {tuple(e): ScalarV.coerce(coeff)} if sum(e) <= bound else {})


def torus_mul(a: TorusSeries, b: TorusSeries) -> TorusSeries:
    """Twisted product truncated at the common bound."""
    a._same_shape(b)
    q, bound = a.quiver, a.bound
    out: dict[DimVector, ScalarV] = {}
    for d, x in a.items():
        room = bound - sum(d)
        for e, y in b.items():
            if sum(e) > room:
                continue
            key = tuple(i + j for i, j in zip(d, e))
            term = x * y * ScalarV.v_power(skew_form(q, d, e))
            out[key] = out.get(key, ZERO) + term
    return TorusSeries(q, bound, out)


def module_act(a: TorusSeries, xi: ModuleSeries) -> ModuleSeries:
    """Action of the torus on the module, truncated at the common bound."""
    a._same_shape(xi)
    q, bound = a.quiver, a.bound
    out: dict[DimVector, ScalarV] = {}
    for d, x in a.items():
        h = hyperbolic_sum(q, d)
        room = bound - sum(h)
        if room < 0:
            continue
        twist = e_tilde(q, d)
        for e, y in xi.items():
            if sum(e) > room:
                continue
            key = tuple(i + j for i, j in zip(h, e))
            term = x * y * ScalarV.v_power(skew_form(q, d, e) - twist)
            out[key] = out.get(key, ZERO) + term
    return ModuleSeries(q, bound, out)


# dilogarithms

def dilog_coefficient(n: int, base: int, shift: int) -> ScalarV:
    """Coefficient of y^n in E_b(q^(shift/2) y) for b = q^base."""
    coeff = ScalarV.v_power(base * n * n + n * shift)
    for k in range(n):
        coeff = coeff / (ScalarV.v_power(2 * base * n) - ScalarV.v_power(2 * base * k))
    return coeff


def qdilog(quiver: QuiverWithDuality, d: Sequence[int], base: int, shift: int, bound: int) -> TorusSeries:
    """E_base(v^shift x_d) truncated at ``bound``; ``base`` 1 means q, 2 means q^2."""
    d = tuple(d)
    if not any(d):
        raise ZeroVectorError("dilogarithm of x_0")
    if base not in DILOG_BASES:
        raise InvalidBaseError(f"base q^{base} is not supported")
    terms = {}
    n = 0
    while n * sum(d) <= bound:
        terms[tuple(n * x for x in d)] = dilog_coefficient(n, base, shift)
        n += 1
    return TorusSeries(quiver, bound, terms)


@dataclass(frozen=True)
class DilogFactor:
    d: DimVector
    base: int = 1
    shift: int = 0
    exponent: int = 1


def qdilog_power(quiver: QuiverWithDuality, factor: DilogFactor, bound: int) -> TorusSeries:
    series = qdilog(quiver, factor.d, factor.base, factor.shift, bound)
    power = TorusSeries.unit(quiver, bound)
    for _ in range(abs(factor.exponent)):
        power = torus_mul(power, series)
    return power if factor.exponent >= 0 else power.inverse()


def rescale_dilog_product(
    quiver: QuiverWithDuality,
    factors: Sequence[DilogFactor],
    scale_rule: Callable[[DimVector], int],
    bound: int,
) -> TorusSeries:
    """Ordered product of dilogarithm powers, each argument shifted by ``scale_rule(d)`` (v-exponent)."""
    result = TorusSeries.unit(quiver, bound)
    for factor in factors:
        shifted = DilogFactor(factor.d, factor.base, factor.shift + scale_rule(factor.d), factor.exponent)
        result = torus_mul(result, qdilog_power(quiver, shifted, bound))
    return result
