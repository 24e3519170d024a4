"""Stack generating functions, HN recursions and DT invariant extraction.

The recursions are the source of truth: a_semistable solves the ordinary
Harder-Narasimhan recursion and a_sigma_semistable_rec the self-dual one.
a_sigma_semistable_closed evaluates the alternating closed-form sum
independently so the two can be cross-checked.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from .exceptions import InadmissibleError, NonIntegralInvariantError, NotFiniteTypeWarning, NotSigmaCompatibleError, ZeroDimVectorError
from .quiver import (
    DimVector,
    FiniteTypeVerdict,
    GenericityVerdict,
    QuiverWithDuality,
    Stability,
    dim_leq,
    e_tilde,
    enumerate_dimvectors,
    enumerate_selfdual,
    euler_form,
    hyperbolic_sum,
    is_admissible_selfdual,
    is_finite_type,
    is_sigma_compatible,
    is_sigma_generic,
    is_symmetric,
    sd_euler,
    skew_form,
    slope,
    sub_vectors,
)
from .scalar import ONE, ZERO, ScalarV, pochhammer_dim, pochhammer_sigma
from .torus import DilogFactor, ModuleSeries, TorusSeries, dilog_coefficient, qdilog_power, rescale_dilog_product

log = logging.getLogger(__name__)

CACHE_ENV = "ORIDT_CACHE"

_DILOG_LEAD = dilog_coefficient(1, 1, 0)


def _minus(d: Sequence[int], e: Sequence[int]) -> DimVector:
    return tuple(x - y for x, y in zip(d, e))


def _plus(d: Sequence[int], e: Sequence[int]) -> DimVector:
    return tuple(x + y for x, y in zip(d, e))


def _dump(table: dict) -> list[dict[str, Any]]:
    return [{"theta": list(theta), "dim": list(d), "value": value.to_json()}
            for (theta, d), value in sorted(table.items())]


def _load(entries: list[dict[str, Any]]) -> dict:
    return {(tuple(e["theta"]), tuple(e["dim"])): ScalarV.from_json(e["value"]) for e in entries}


class SeriesCache:
    """Memo tables for A_d, A^sigma_e, A^theta_d and A^{sigma,theta}_e of one quiver.

    Entries are pure function values, so concurrent callers may race to
    insert the same key; the first value stored wins and all are equal.
    """

    def __init__(self, quiver: QuiverWithDuality, directory: Optional[Union[str, Path]] = None) -> None:
        self.quiver = quiver
        self.directory = Path(directory) if directory else None
        self._lock = threading.RLock()
        self._total: dict[DimVector, ScalarV] = {}
        self._sigma_total: dict[DimVector, ScalarV] = {}
        self._semistable: dict[tuple[Stability, DimVector], ScalarV] = {}
        self._sigma_semistable: dict[tuple[Stability, DimVector], ScalarV] = {}
        self._hn_tails: dict[tuple, ScalarV] = {}
        self._sigma_tails: dict[tuple, ScalarV] = {}
        if self.directory is not None:
            self.load()

    @classmethod
    def from_env(cls, quiver: QuiverWithDuality) -> "SeriesCache":
        return cls(quiver, os.environ.get(CACHE_ENV) or None)

    # persistence

    @property
    def path(self) -> Optional[Path]:
        if self.directory is None:
            return None
        return self.directory / f"{self.quiver.fingerprint()}.json"

    def load(self) -> None:
        path = self.path
        if path is None or not path.exists():
            return
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            log.warning("Ignoring unreadable cache %s: %s", path, exc)
            return
        with self._lock:
            self._semistable.update(_load(data.get("semistable", [])))
            self._sigma_semistable.update(_load(data.get("sigma_semistable", [])))
        log.debug("Loaded %d cached coefficients from %s",
                  len(self._semistable) + len(self._sigma_semistable), path)

    def save(self) -> None:
        path = self.path
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            data = {
                "fingerprint": self.quiver.fingerprint(),
                "semistable": _dump(self._semistable),
                "sigma_semistable": _dump(self._sigma_semistable),
            }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, sort_keys=True), encoding="utf-8")
        tmp.replace(path)
        log.debug("Saved cache to %s", path)

    def _store(self, table: dict, key, value: ScalarV) -> ScalarV:
        with self._lock:
            return table.setdefault(key, value)

    # closed formulas

    def a_total(self, d: DimVector) -> ScalarV:
        d = tuple(d)
        if d not in self._total:
            value = ScalarV.v_power(-euler_form(self.quiver, d, d)) / pochhammer_dim(self.quiver, d)
            self._store(self._total, d, value)
        return self._total[d]

    def a_sigma_total(self, e: DimVector) -> ScalarV:
        e = tuple(e)
        if e not in self._sigma_total:
            if not is_admissible_selfdual(self.quiver, e):
                value = ZERO
            else:
                value = ScalarV.v_power(-sd_euler(self.quiver, e)) / pochhammer_sigma(self.quiver, e)
            self._store(self._sigma_total, e, value)
        return self._sigma_total[e]

    # ordinary HN recursion

    def _hn_tail(self, theta: Stability, d: DimVector, cap: Optional[Fraction]) -> ScalarV:
        """Coefficient of x_d in the ordered product of semistable series of slope < cap."""
        if not any(d):
            return ONE
        if cap is not None and slope(theta, d) >= cap:
            return ZERO
        key = (theta, d, cap)
        if key in self._hn_tails:
            return self._hn_tails[key]
        total = ZERO
        for d1 in sub_vectors(d):
            if not any(d1):
                continue
            mu = slope(theta, d1)
            if cap is not None and mu >= cap:
                continue
            rest = _minus(d, d1)
            if not any(rest):
                total = total + self.a_semistable(theta, d1)
                continue
            tail = self._hn_tail(theta, rest, mu)
            if tail:
                total = total + self.a_semistable(theta, d1) * ScalarV.v_power(skew_form(self.quiver, d1, rest)) * tail
        return self._store(self._hn_tails, key, total)

    def a_semistable(self, theta: Sequence[int], d: Sequence[int]) -> ScalarV:
        theta, d = tuple(theta), tuple(d)
        if not any(d):
            raise ZeroDimVectorError("semistable coefficient of the zero dimension vector")
        key = (theta, d)
        if key in self._semistable:
            return self._semistable[key]
        value = self.a_total(d)
        for d1 in sub_vectors(d):
            rest = _minus(d, d1)
            if not any(d1) or not any(rest):
                continue
            mu = slope(theta, d1)
            tail = self._hn_tail(theta, rest, mu)
            if tail:
                value = value - self.a_semistable(theta, d1) * ScalarV.v_power(skew_form(self.quiver, d1, rest)) * tail
        return self._store(self._semistable, key, value)

    # self-dual HN recursion

    def _check_sigma(self, theta: Stability, e: DimVector) -> None:
        if not is_sigma_compatible(self.quiver, theta):
            raise NotSigmaCompatibleError(f"stability {list(theta)} is not sigma-compatible")
        if not is_admissible_selfdual(self.quiver, e):
            raise InadmissibleError(f"{self.quiver.format_dim(e)} is not an admissible self-dual dimension vector")

    def _sigma_steps(self, theta: Stability, e: DimVector, cap: Optional[Fraction]):
        """(d, weight) for the first isotropic step d of positive slope below cap inside e."""
        q = self.quiver
        for d in sub_vectors(e):
            if not any(d):
                continue
            mu = slope(theta, d)
            if mu <= 0 or (cap is not None and mu >= cap):
                continue
            h = hyperbolic_sum(q, d)
            if not dim_leq(h, e):
                continue
            rest = _minus(e, h)
            weight = self.a_semistable(theta, d) * ScalarV.v_power(skew_form(q, d, rest) - e_tilde(q, d))
            yield d, mu, rest, weight

    def _sigma_tail(self, theta: Stability, e: DimVector, cap: Fraction) -> ScalarV:
        key = (theta, e, cap)
        if key in self._sigma_tails:
            return self._sigma_tails[key]
        total = self.a_sigma_semistable_rec(theta, e)
        for d, mu, rest, weight in self._sigma_steps(theta, e, cap):
            if weight:
                total = total + weight * self._sigma_tail(theta, rest, mu)
        return self._store(self._sigma_tails, key, total)

    def a_sigma_semistable_rec(self, theta: Sequence[int], e: Sequence[int]) -> ScalarV:
        theta, e = tuple(theta), tuple(e)
        self._check_sigma(theta, e)
        key = (theta, e)
        if key in self._sigma_semistable:
            return self._sigma_semistable[key]
        value = self.a_sigma_total(e)
        if any(e):
            for d, mu, rest, weight in self._sigma_steps(theta, e, None):
                if weight:
                    value = value - weight * self._sigma_tail(theta, rest, mu)
        return self._store(self._sigma_semistable, key, value)

    def a_sigma_semistable_closed(self, theta: Sequence[int], e: Sequence[int]) -> ScalarV:
        """Alternating sum over chains (d^1, ..., d^l; d^inf) with positive partial-sum slopes."""
        theta, e = tuple(theta), tuple(e)
        self._check_sigma(theta, e)
        q = self.quiver
        memo: dict[tuple[DimVector, DimVector], ScalarV] = {}

        def chains(partial: DimVector, rest: DimVector) -> ScalarV:
            key = (partial, rest)
            if key in memo:
                return memo[key]
            value = ScalarV.q_power(-euler_form(q, rest, partial) - sd_euler(q, partial) - sd_euler(q, rest))
            value = value / pochhammer_sigma(q, rest)
            for d in sub_vectors(rest):
                if not any(d):
                    continue
                h = hyperbolic_sum(q, d)
                if not dim_leq(h, rest):
                    continue
                grown = _plus(partial, d)
                if slope(theta, grown) <= 0:
                    continue
                step = ScalarV.q_power(-euler_form(q, d, partial) - euler_form(q, d, d)) / pochhammer_dim(q, d)
                value = value - step * chains(grown, _minus(rest, h))
            memo[key] = value
            return value

        return ScalarV.v_power(sd_euler(q, e)) * chains(q.zero(), e)

    def warm(self, theta: Sequence[int], bound: int, workers: int = 1) -> None:
        """Fill the semistable table level by level, optionally on a thread pool."""
        theta = tuple(theta)
        dims = enumerate_dimvectors(self.quiver, bound)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for total in range(1, bound + 1):
                level = [d for d in dims if sum(d) == total]
                list(pool.map(lambda d: self.a_semistable(theta, d), level))


DEFAULT_CACHE_SIZE = 32


@lru_cache(maxsize=DEFAULT_CACHE_SIZE)
def default_cache(quiver: QuiverWithDuality) -> SeriesCache:
    """In-memory cache shared by calls that pass no cache, least recently used quivers dropped first."""
    return SeriesCache(quiver)


def _cache(q: QuiverWithDuality, cache: Optional[SeriesCache]) -> SeriesCache:
    return cache if cache is not None else default_cache(q)


# coefficient API

def a_total(q: QuiverWithDuality, d: Sequence[int], cache: Optional[SeriesCache] = None) -> ScalarV:
    """A_d = q^(-chi(d,d)/2) / (q^-1)_d."""
    return _cache(q, cache).a_total(tuple(d))


def a_sigma_total(q: QuiverWithDuality, e: Sequence[int], cache: Optional[SeriesCache] = None) -> ScalarV:
    """A^sigma_e = q^(-E(e)/2) / (q^-1)^sigma_e, zero for inadmissible e."""
    return _cache(q, cache).a_sigma_total(tuple(e))


def a_semistable(q: QuiverWithDuality, theta: Sequence[int], d: Sequence[int],
                 cache: Optional[SeriesCache] = None) -> ScalarV:
    return _cache(q, cache).a_semistable(theta, d)


def a_sigma_semistable_rec(q: QuiverWithDuality, theta: Sequence[int], e: Sequence[int],
                           cache: Optional[SeriesCache] = None) -> ScalarV:
    return _cache(q, cache).a_sigma_semistable_rec(theta, e)


def a_sigma_semistable_closed(q: QuiverWithDuality, theta: Sequence[int], e: Sequence[int],
                              cache: Optional[SeriesCache] = None) -> ScalarV:
    return _cache(q, cache).a_sigma_semistable_closed(theta, e)


# series API

def total_series(q: QuiverWithDuality, bound: int, cache: Optional[SeriesCache] = None) -> TorusSeries:
    c = _cache(q, cache)
    terms = {q.zero(): ONE}
    terms.update({d: c.a_total(d) for d in enumerate_dimvectors(q, bound)})
    return TorusSeries(q, bound, terms)


def sigma_total_series(q: QuiverWithDuality, bound: int, cache: Optional[SeriesCache] = None) -> ModuleSeries:
    c = _cache(q, cache)
    return ModuleSeries(q, bound, {e: c.a_sigma_total(e) for e in enumerate_selfdual(q, bound)})


def semistable_series(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                      cache: Optional[SeriesCache] = None) -> TorusSeries:
    """1 + sum over all d of A^theta_d x_d (all slopes at once)."""
    c = _cache(q, cache)
    terms = {q.zero(): ONE}
    terms.update({d: c.a_semistable(theta, d) for d in enumerate_dimvectors(q, bound)})
    return TorusSeries(q, bound, terms)


def realized_slopes(q: QuiverWithDuality, theta: Sequence[int], bound: int) -> list[Fraction]:
    return sorted({slope(theta, d) for d in enumerate_dimvectors(q, bound)})


def a_slope(q: QuiverWithDuality, theta: Sequence[int], mu: Fraction, bound: int,
            cache: Optional[SeriesCache] = None) -> TorusSeries:
    """A^theta_mu = 1 + sum_{slope(d) = mu} A^theta_d x_d."""
    c = _cache(q, cache)
    terms = {q.zero(): ONE}
    for d in enumerate_dimvectors(q, bound):
        if slope(theta, d) == mu:
            terms[d] = c.a_semistable(theta, d)
    return TorusSeries(q, bound, terms)


def positive_slope_product(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                           cache: Optional[SeriesCache] = None) -> TorusSeries:
    """Product of A^theta_mu over realizable mu > 0, strictly decreasing left to right."""
    result = TorusSeries.unit(q, bound)
    for mu in reversed(realized_slopes(q, theta, bound)):
        if mu > 0:
            result = result * a_slope(q, theta, mu, bound, cache)
    return result


def _require_compatible(q: QuiverWithDuality, theta: Sequence[int]) -> None:
    if not is_sigma_compatible(q, theta):
        raise NotSigmaCompatibleError(f"stability {list(theta)} is not sigma-compatible")


def orientifold_series(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                       cache: Optional[SeriesCache] = None) -> ModuleSeries:
    """A^{sigma,theta}: sum of A^{sigma,theta}_e xi_e over admissible e."""
    _require_compatible(q, theta)
    c = _cache(q, cache)
    return ModuleSeries(q, bound, {e: c.a_sigma_semistable_rec(theta, e) for e in enumerate_selfdual(q, bound)})


def wallcrossed(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                cache: Optional[SeriesCache] = None) -> ModuleSeries:
    """positive_slope_product(theta) acting on A^{sigma,theta}."""
    return positive_slope_product(q, theta, bound, cache) * orientifold_series(q, theta, bound, cache)


def reconstruct_sigma_total(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                            cache: Optional[SeriesCache] = None) -> bool:
    """True when the self-dual HN decomposition reproduces A^sigma up to ``bound``."""
    return wallcrossed(q, theta, bound, cache) == sigma_total_series(q, bound, cache)


@dataclass(frozen=True)
class WallCrossResult:
    equal: bool
    bound: int
    first_difference: Optional[tuple[DimVector, ScalarV, ScalarV]] = None


def wallcross_check(q: QuiverWithDuality, theta: Sequence[int], theta_prime: Sequence[int], bound: int,
                    cache: Optional[SeriesCache] = None) -> WallCrossResult:
    _require_compatible(q, theta)
    _require_compatible(q, theta_prime)
    left = wallcrossed(q, theta, bound, cache)
    right = wallcrossed(q, theta_prime, bound, cache)
    diff = left.first_difference(right)
    return WallCrossResult(diff is None, bound, diff)


# invariants

@dataclass
class OmegaTable:
    quiver: QuiverWithDuality
    theta: Stability
    bound: int
    omega: dict[DimVector, int] = field(default_factory=dict)
    sigma_omega: dict[DimVector, int] = field(default_factory=dict)
    finite_type: Optional[FiniteTypeVerdict] = None
    genericity: Optional[GenericityVerdict] = None
    warnings: list[str] = field(default_factory=list)
    negative: list[DimVector] = field(default_factory=list)

    @property
    def nonnegative(self) -> bool:
        """False when some extracted Omega^sigma_e is negative."""
        return not self.negative

    def slope_factors(self, mu: Fraction) -> list[DilogFactor]:
        return [DilogFactor(d, 1, 0, n) for d, n in sorted(self.omega.items(), key=lambda t: (sum(t[0]), t[0]))
                if n and slope(self.theta, d) == mu]

    def expand_slope(self, mu: Fraction) -> TorusSeries:
        result = TorusSeries.unit(self.quiver, self.bound)
        for factor in self.slope_factors(mu):
            result = result * qdilog_power(self.quiver, factor, self.bound)
        return result

    def zero_slope_factors(self) -> list[DilogFactor]:
        """Slope-zero factors with base q^2, as they enter the orientifold factorization."""
        return [DilogFactor(f.d, 2, 0, f.exponent) for f in self.slope_factors(Fraction(0))]

    def orientifold_term(self, e: DimVector) -> ModuleSeries:
        q = self.quiver

        def rule(d: DimVector) -> int:
            return 1 - 2 * euler_form(q, e, d) - 2 * sd_euler(q, d)

        product = rescale_dilog_product(q, self.zero_slope_factors(), rule, self.bound)
        return product * ModuleSeries.basis(q, e, self.bound)

    def expand_orientifold(self) -> ModuleSeries:
        result = ModuleSeries(self.quiver, self.bound)
        for e, n in sorted(self.sigma_omega.items(), key=lambda t: (sum(t[0]), t[0])):
            if n:
                result = result + self.orientifold_term(e).scale(n)
        return result


def _integer(value: ScalarV, what: str, d: DimVector, q: QuiverWithDuality) -> int:
    n = value.as_integer()
    if n is None:
        raise NonIntegralInvariantError(
            f"{what} at {q.format_dim(d)} is not an integer: {value}",
            residual={q.format_dim(d): str(value)},
        )
    return n


def _verdicts(q: QuiverWithDuality, theta: Stability, bound: int, cache: SeriesCache, table: OmegaTable) -> None:
    table.finite_type = is_finite_type(q)
    if is_sigma_compatible(q, theta):
        table.genericity = is_sigma_generic(q, theta, bound, lambda d: cache.a_semistable(theta, d))
    generic = table.genericity is not None and table.genericity.generic
    if not table.finite_type.finite or not generic:
        message = (f"factorizing outside finite type and sigma-genericity "
                   f"(finite={table.finite_type.finite}, generic={generic})")
        warnings.warn(message, NotFiniteTypeWarning, stacklevel=3)
        log.warning(message)
        table.warnings.append(message)


def dt_factorize(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                 cache: Optional[SeriesCache] = None, check: bool = True) -> OmegaTable:
    """Peel E_q(x_d)^Omega_d off each slope series in increasing total dimension."""
    theta = tuple(theta)
    c = _cache(q, cache)
    table = OmegaTable(q, theta, bound)
    if check:
        _verdicts(q, theta, bound, c, table)
    for mu in realized_slopes(q, theta, bound):
        residual = a_slope(q, theta, mu, bound, c)
        for d in enumerate_dimvectors(q, bound):
            if slope(theta, d) != mu:
                continue
            n = _integer(residual.coefficient(d) / _DILOG_LEAD, "Omega", d, q)
            if n:
                table.omega[d] = n
                residual = qdilog_power(q, DilogFactor(d, 1, 0, -n), bound) * residual
    log.debug("dt_factorize: %d nonzero invariants", len(table.omega))
    return table


def oridt_factorize(q: QuiverWithDuality, theta: Sequence[int], bound: int,
                    cache: Optional[SeriesCache] = None) -> OmegaTable:
    """Solve A^{sigma,theta} = sum_e (rescaled slope-zero product) . Omega^sigma_e xi_e."""
    theta = tuple(theta)
    _require_compatible(q, theta)
    c = _cache(q, cache)
    table = dt_factorize(q, theta, bound, c)
    residual = orientifold_series(q, theta, bound, c)
    for e in enumerate_selfdual(q, bound):
        n = _integer(residual.coefficient(e), "Omega^sigma", e, q)
        if n < 0:
            message = f"negative orientifold invariant {n} at {q.format_dim(e)}"
            log.warning(message)
            table.warnings.append(message)
            table.negative.append(e)
        if n:
            table.sigma_omega[e] = n
            residual = residual - table.orientifold_term(e).scale(n)
    if table.sigma_omega.get(q.zero()) != 1:
        log.warning("Omega^sigma_0 = %s, expected 1", table.sigma_omega.get(q.zero(), 0))
    return table


def round_trip(table: OmegaTable, cache: Optional[SeriesCache] = None, orientifold: bool = False) -> bool:
    """Re-expand the table and compare with the series it came from."""
    q, theta, bound = table.quiver, table.theta, table.bound
    for mu in realized_slopes(q, theta, bound):
        if table.expand_slope(mu) != a_slope(q, theta, mu, bound, cache):
            return False
    if orientifold:
        return table.expand_orientifold() == orientifold_series(q, theta, bound, cache)
    return True


def predicted_oridt(table: OmegaTable) -> dict[DimVector, int]:
    """Orientifold invariants predicted by the finite-type classification.

    Hyperbolic dualities give delta at 0; otherwise Omega^sigma_e = 1 exactly
    when e is zero or a sum of distinct sigma-symmetric d with Omega_d = 1.
    """
    q = table.quiver
    verdict = table.finite_type or is_finite_type(q)
    predicted = {q.zero(): 1}
    if verdict.hyperbolic:
        return predicted
    roots = sorted(d for d, n in table.omega.items() if n == 1 and is_symmetric(q, d))
    sums = {q.zero()}
    for d in roots:
        sums |= {_plus(s, d) for s in sums if sum(s) + sum(d) <= table.bound}
    return {s: 1 for s in sorted(sums, key=lambda d: (sum(d), d))}


def primitive_wcf(q: QuiverWithDuality, d: Sequence[int], e: Sequence[int],
                  omega_d: int, sigma_omega_e: int) -> tuple[int, int]:
    """(I, Delta Omega) with I = <e,d> + Et(d) and Delta = (-1)^(I-1) I Omega_d Omega^sigma_e."""
    d, e = tuple(d), tuple(e)
    if not is_admissible_selfdual(q, e):
        log.warning("%s is not an admissible self-dual dimension vector", q.format_dim(e))
    sd = q.sigma(d)
    if len({d, sd, e}) < 3:
        log.warning("d, sigma(d) and e are not distinct: %s, %s, %s", d, sd, e)
    if gcd(*d) != 1 or (any(e) and gcd(*e) != 1):
        log.warning("d or e is not primitive: %s, %s", d, e)
    index = skew_form(q, e, d) + e_tilde(q, d)
    sign = 1 if (index - 1) % 2 == 0 else -1
    return index, sign * index * omega_d * sigma_omega_e


def expand_dt(table: OmegaTable) -> dict[Fraction, TorusSeries]:
    """Slope series rebuilt from the ordinary invariants."""
    return {mu: table.expand_slope(mu) for mu in realized_slopes(table.quiver, table.theta, table.bound)}


def expand_oridt(table: OmegaTable) -> ModuleSeries:
    """Orientifold series rebuilt from both invariant tables."""
    return table.expand_orientifold()
