import json
import warnings
from fractions import Fraction

import pytest

from oridt import engine
from oridt.engine import (
    CACHE_ENV,
    DEFAULT_CACHE_SIZE,
    SeriesCache,
    a_semistable,
    a_sigma_semistable_closed,
    a_sigma_semistable_rec,
    a_sigma_total,
    a_slope,
    a_total,
    default_cache,
    dt_factorize,
    expand_dt,
    expand_oridt,
    orientifold_series,
    oridt_factorize,
    predicted_oridt,
    primitive_wcf,
    realized_slopes,
    reconstruct_sigma_total,
    round_trip,
    wallcross_check,
)
from oridt.exceptions import (
    InadmissibleError,
    NonIntegralInvariantError,
    NotFiniteTypeWarning,
    NotSigmaCompatibleError,
    ZeroDimVectorError,
)
from oridt.presets import a2, a3_fixed, a4_flip, kronecker, kronecker_doubled, loop
from oridt.quiver import enumerate_dimvectors, enumerate_selfdual, euler_form, sd_euler
from oridt.scalar import ONE, ZERO, ScalarV, q_integer
from oridt.torus import ModuleSeries

v = ScalarV.v_power(1)

PLUS = (1, -1)
MINUS = (-1, 1)

A4_THETAS = [(1, 2, -2, -1), (2, 1, -1, -2), (0, 0, 0, 0), (-1, -2, 2, 1)]
A3_THETAS = [(1, 0, -1), (-1, 0, 1), (0, 0, 0)]
TWO_NODE_THETAS = [PLUS, MINUS, (0, 0)]

QUIVERS = [
    (a2("symplectic"), [PLUS, MINUS, (0, 0), (2, -2)]),
    (a2("orthogonal"), [PLUS, MINUS, (0, 0), (2, -2)]),
    (kronecker(2, "symplectic"), TWO_NODE_THETAS),
    (kronecker(2, "orthogonal"), TWO_NODE_THETAS),
    (kronecker(3, "symplectic"), TWO_NODE_THETAS),
    (a4_flip("symplectic"), A4_THETAS),
    (a4_flip("orthogonal"), A4_THETAS),
    (a3_fixed("orthogonal"), A3_THETAS),
    (a3_fixed("symplectic"), A3_THETAS),
    (kronecker_doubled(1, 1), [(2, 1, -1, -2), (1, 2, -2, -1), (0, 0, 0, 0)]),
]

CASES = [(quiver, theta) for quiver, thetas in QUIVERS for theta in thetas]

FINITE_TYPE = [
    (a3_fixed("symplectic"), (1, 0, -1)),
    (a3_fixed("orthogonal"), (1, 0, -1)),
    (a4_flip("symplectic"), (1, 2, -2, -1)),
    (a4_flip("symplectic"), (2, 1, -1, -2)),
    (a4_flip("orthogonal"), (1, 2, -2, -1)),
    (a4_flip("orthogonal"), (2, 1, -1, -2)),
]


def test_total_coefficients():
    q = a2()
    assert a_total(q, (1, 0)) == v / (v**2 - 1)
    assert a_sigma_total(a2("symplectic"), (1, 1)) == v**2 / (v**2 - 1)
    assert a_sigma_total(q, (1, 0)) == ZERO
    assert a_sigma_total(loop(s=-1), (1,)) == ZERO


def test_a2_semistable_coefficient():
    q = a2()
    assert a_semistable(q, PLUS, (1, 1)) == v / (v**2 - 1)
    assert a_semistable(q, MINUS, (1, 1)) == ZERO
    with pytest.raises(ZeroDimVectorError):
        a_semistable(q, PLUS, (0, 0))


def test_selfdual_argument_checks():
    q = a2()
    with pytest.raises(NotSigmaCompatibleError):
        a_sigma_semistable_rec(q, (1, 1), (1, 1))
    with pytest.raises(InadmissibleError):
        a_sigma_semistable_rec(q, PLUS, (1, 0))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_kronecker_first_selfdual_coefficient(n):
    q = kronecker(n, "symplectic")
    expected = v ** (1 - n) * q_integer(n)
    assert a_sigma_semistable_rec(q, PLUS, (1, 1)) == expected
    assert a_sigma_semistable_closed(q, PLUS, (1, 1)) == expected


@pytest.mark.parametrize("n", [2, 3])
def test_kronecker_second_selfdual_coefficient(n):
    q = kronecker(n, "symplectic")
    t = v**2
    numerator = t ** (n - 1) * q_integer(2 * n) - q_integer(n)
    expected = v ** sd_euler(q, (2, 2)) * numerator / (t**2 - 1)
    assert a_sigma_semistable_rec(q, PLUS, (2, 2)) == expected


def test_kronecker_two_in_closed_form():
    q = kronecker(2, "symplectic")
    expected = ScalarV.from_coeffs([-1, 0, 1, 0, 0, 0, 1], [-1, 0, 1], offset=-2)
    assert a_sigma_semistable_rec(q, PLUS, (2, 2)) == expected


@pytest.mark.parametrize("quiver,theta", CASES)
def test_recursion_matches_closed_form(quiver, theta):
    for e in enumerate_selfdual(quiver, 4):
        assert a_sigma_semistable_rec(quiver, theta, e) == a_sigma_semistable_closed(quiver, theta, e), e


@pytest.mark.slow
@pytest.mark.parametrize("quiver,theta", CASES)
def test_recursion_matches_closed_form_through_six(quiver, theta):
    for e in enumerate_selfdual(quiver, 6):
        assert a_sigma_semistable_rec(quiver, theta, e) == a_sigma_semistable_closed(quiver, theta, e), e


@pytest.mark.parametrize("quiver,theta", CASES)
def test_selfdual_hn_decomposition(quiver, theta):
    assert reconstruct_sigma_total(quiver, theta, 4)


@pytest.mark.parametrize("quiver,theta", CASES[::3])
def test_normalized_coefficients_are_rational_in_q(quiver, theta):
    for d in enumerate_dimvectors(quiver, 3):
        assert (v ** -euler_form(quiver, d, d) * a_total(quiver, d)).is_q_rational(), d
        assert (v ** -euler_form(quiver, d, d) * a_semistable(quiver, theta, d)).is_q_rational(), d
    for e in enumerate_selfdual(quiver, 4):
        assert (v ** -sd_euler(quiver, e) * a_sigma_total(quiver, e)).is_q_rational(), e
        assert (v ** -sd_euler(quiver, e) * a_sigma_semistable_rec(quiver, theta, e)).is_q_rational(), e
    assert not v.is_q_rational()


@pytest.mark.parametrize("quiver,thetas", [case for case in QUIVERS if case[0].size <= 3])
def test_wall_crossing_invariance(quiver, thetas):
    for theta in thetas[1:]:
        result = wallcross_check(quiver, thetas[0], theta, 5)
        assert result.equal and result.first_difference is None, (thetas[0], theta)


@pytest.mark.parametrize("quiver,thetas", [case for case in QUIVERS if case[0].size > 3])
def test_wall_crossing_invariance_on_four_nodes(quiver, thetas):
    for theta in thetas[1:]:
        assert wallcross_check(quiver, thetas[0], theta, 4).equal, (thetas[0], theta)


@pytest.mark.slow
@pytest.mark.parametrize("quiver,thetas", [case for case in QUIVERS if case[0].size > 3])
def test_wall_crossing_invariance_on_four_nodes_through_five(quiver, thetas):
    for theta in thetas[1:]:
        assert wallcross_check(quiver, thetas[0], theta, 5).equal, (thetas[0], theta)


def test_a2_dt_invariants():
    table = dt_factorize(a2(), PLUS, 4)
    assert table.omega == {(0, 1): 1, (1, 0): 1, (1, 1): 1}
    assert dt_factorize(a2(), MINUS, 4).omega == {(0, 1): 1, (1, 0): 1}
    assert round_trip(table)
    rebuilt = expand_dt(table)
    assert set(rebuilt) == set(realized_slopes(a2(), PLUS, 4))
    assert rebuilt[Fraction(0)] == a_slope(a2(), PLUS, Fraction(0), 4)


def test_a2_orientifold_invariants():
    sym = oridt_factorize(a2("symplectic"), PLUS, 4)
    assert sym.sigma_omega == {(0, 0): 1, (1, 1): 1}
    assert not sym.warnings
    orth = oridt_factorize(a2("orthogonal"), PLUS, 4)
    assert orth.sigma_omega == {(0, 0): 1}
    assert oridt_factorize(a2("symplectic"), MINUS, 4).sigma_omega == {(0, 0): 1}
    for table in (sym, orth):
        assert round_trip(table, orientifold=True)
        assert expand_oridt(table) == orientifold_series(table.quiver, PLUS, 4)
        assert predicted_oridt(table) == table.sigma_omega


@pytest.mark.parametrize("quiver,theta", FINITE_TYPE)
def test_finite_type_orientifold_invariants(quiver, theta):
    table = oridt_factorize(quiver, theta, 4)
    assert table.sigma_omega[quiver.zero()] == 1
    assert table.nonnegative
    assert round_trip(table, orientifold=True)
    assert predicted_oridt(table) == table.sigma_omega


@pytest.mark.slow
@pytest.mark.parametrize("quiver,theta", FINITE_TYPE)
def test_finite_type_orientifold_invariants_through_six(quiver, theta):
    table = oridt_factorize(quiver, theta, 6)
    assert round_trip(table, orientifold=True)
    assert predicted_oridt(table) == table.sigma_omega


def test_negative_orientifold_invariant_is_flagged(monkeypatch):
    q = a2("symplectic")
    flipped = ModuleSeries(q, 2, {(0, 0): 1, (1, 1): -1})
    monkeypatch.setattr(engine, "orientifold_series", lambda *args, **kwargs: flipped)
    table = oridt_factorize(q, PLUS, 2, SeriesCache(q))
    assert table.sigma_omega == {(0, 0): 1, (1, 1): -1}
    assert table.negative == [(1, 1)]
    assert not table.nonnegative
    assert any("negative" in w for w in table.warnings)


def test_orientifold_series_of_symplectic_a2():
    series = orientifold_series(a2("symplectic"), PLUS, 2)
    assert series.terms == {(0, 0): ONE, (1, 1): ONE}


def test_primitive_wall_crossing_jump():
    q = a2("symplectic")
    before = oridt_factorize(q, MINUS, 2).sigma_omega.get((1, 1), 0)
    after = oridt_factorize(q, PLUS, 2).sigma_omega.get((1, 1), 0)
    index, delta = primitive_wcf(q, (1, 0), (0, 0), 1, 1)
    assert index == 1
    assert after - before == delta == 1
    assert primitive_wcf(a2("orthogonal"), (1, 0), (0, 0), 1, 1) == (0, 0)
    assert primitive_wcf(q, (0, 1), (0, 0), 1, 1) == (-1, -1)


def test_non_integral_invariant_outside_finite_type():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with pytest.raises(NonIntegralInvariantError) as info:
            dt_factorize(kronecker(2), PLUS, 2)
    assert any(issubclass(w.category, NotFiniteTypeWarning) for w in caught)
    assert "(1,1)" in info.value.residual


def test_cache_persists_between_instances(tmp_path):
    q = a2("symplectic")
    cache = SeriesCache(q, tmp_path)
    value = cache.a_sigma_semistable_rec(PLUS, (2, 2))
    cache.save()
    data = json.loads(cache.path.read_text(encoding="utf-8"))
    assert data["fingerprint"] == q.fingerprint()
    assert data["sigma_semistable"]
    reloaded = SeriesCache(q, tmp_path)
    assert reloaded.a_sigma_semistable_rec(PLUS, (2, 2)) == value


def test_cache_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    assert SeriesCache.from_env(a2()).directory == tmp_path
    monkeypatch.delenv(CACHE_ENV)
    assert SeriesCache.from_env(a2()).path is None


def test_threaded_warm_matches_serial():
    q = a4_flip("symplectic")
    theta = (1, 2, -2, -1)
    threaded = SeriesCache(q)
    threaded.warm(theta, 4, workers=4)
    serial = SeriesCache(q)
    for d in [(1, 0, 0, 0), (1, 1, 0, 0), (0, 1, 1, 0), (1, 1, 1, 1), (0, 2, 2, 0)]:
        assert threaded.a_semistable(theta, d) == serial.a_semistable(theta, d)


def test_default_caches_are_shared_and_bounded():
    q = a2("symplectic")
    assert default_cache(q) is default_cache(a2("symplectic"))
    assert default_cache.cache_info().maxsize == DEFAULT_CACHE_SIZE
    for n in range(1, DEFAULT_CACHE_SIZE + 2):
        default_cache(kronecker(n, "orthogonal"))
    assert default_cache.cache_info().currsize == DEFAULT_CACHE_SIZE
