"""Brute-force counts of (self-dual) quiver representations over GF(p).

Conventions: every node i carries the pairing matrix J_i of V_i x V_sigma(i),
with J_i = I on Q0+, J_sigma(i) = s_i J_i^T on Q0-, and on a fixed node the
identity (epsilon = +1), diag(nu, 1, ..., 1) (epsilon = -1) or the standard
symplectic matrix. A self-dual point satisfies

    m_a^T J_j = tau_a J_i m_sigma(a)      for every arrow a: i -> j,

so Q1+ arrows are free, Q1- arrows are determined, and a fixed arrow
i -> sigma(i) is J_i^-1 S with S^T = s_i tau_a S.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Iterator, Optional, Sequence

import numpy as np
from sympy import isprime

from . import linalg as la
from .config import OracleSettings
from .engine import SeriesCache, default_cache
from .exceptions import (
    CapExceededError,
    EvenPrimeError,
    InadmissibleError,
    NotSigmaCompatibleError,
    OddSymplecticDimensionError,
    OridtError,
    OutOfRangeError,
)
from .quiver import (
    DimVector,
    QuiverWithDuality,
    euler_form,
    hyperbolic_sum,
    is_admissible_selfdual,
    is_sigma_compatible,
    sd_euler,
    slope,
    sub_vectors,
)
from .scalar import ScalarV, specialize

log = logging.getLogger(__name__)

Point = tuple[np.ndarray, ...]
GroupElement = tuple[np.ndarray, ...]


@dataclass(frozen=True)
class PrimeFieldCtx:
    p: int
    nu: int

    @classmethod
    def create(cls, p: int, max_prime: int = 13) -> "PrimeFieldCtx":
        if p % 2 == 0 or not isprime(p):
            raise EvenPrimeError(f"{p} is not an odd prime")
        if p > max_prime:
            raise OutOfRangeError(f"prime {p} exceeds the cap {max_prime}")
        return cls(p, la.nonresidue(p))


# forms and groups

@dataclass(frozen=True, eq=False)
class GramChoice:
    """Pairing matrices per node for one epsilon-sector."""

    label: str
    epsilons: tuple[tuple[str, int], ...]
    grams: tuple[np.ndarray, ...]


def _sector_label(epsilons: Sequence[tuple[str, int]]) -> str:
    if not epsilons:
        return "sigma"
    return ",".join(f"eps({node})={'+' if eps > 0 else '-'}1" for node, eps in epsilons)


def gram_choices(q: QuiverWithDuality, e: Sequence[int], ctx: PrimeFieldCtx,
                 alternate: bool = False) -> list[GramChoice]:
    """All epsilon-sectors for the self-dual dimension vector e.

    ``alternate`` scales every pairing by the non-residue; counts summed over
    sectors do not depend on it.
    """
    p = ctx.p
    scale = ctx.nu if alternate else 1
    free = [i for i in q.node_fixed if q.s[i] == 1 and e[i] > 0]
    for i in q.node_fixed:
        if q.s[i] == -1 and e[i] % 2:
            raise OddSymplecticDimensionError(f"symplectic node {q.nodes[i]} has odd dimension {e[i]}")
    choices = []
    for signs in itertools.product((1, -1), repeat=len(free)):
        eps = dict(zip(free, signs))
        grams = []
        for i, n in enumerate(e):
            if i in q.node_fixed:
                if q.s[i] == -1:
                    J = la.omega_matrix(n // 2, p)
                else:
                    J = la.identity(n)
                    if eps.get(i) == -1:
                        J[0, 0] = ctx.nu
            elif i in q.node_plus:
                J = la.identity(n)
            else:
                J = q.s[i] * la.identity(n)
            grams.append(la.mod_p(scale * J, p))
        epsilons = tuple((q.nodes[i], eps[i]) for i in free)
        choices.append(GramChoice(_sector_label(epsilons), epsilons, tuple(grams)))
    return choices


def gl_order(n: int, p: int) -> int:
    return prod(p**n - p**k for k in range(n))


def symplectic_order(n: int, p: int) -> int:
    if n % 2:
        raise OddSymplecticDimensionError(f"Sp_{n} needs an even dimension")
    m = n // 2
    return p ** (m * m) * prod(p ** (2 * i) - 1 for i in range(1, m + 1))


def orthogonal_order(n: int, p: int, split: bool = True) -> int:
    """Order of O(V) for an n-dimensional quadratic space; ``split`` matters for even n."""
    if n == 0:
        return 1
    m = n // 2
    if n % 2:
        return 2 * p ** (m * m) * prod(p ** (2 * i) - 1 for i in range(1, m + 1))
    witt = p**m - 1 if split else p**m + 1
    return 2 * p ** (m * (m - 1)) * witt * prod(p ** (2 * i) - 1 for i in range(1, m))


def is_split(J: np.ndarray, p: int) -> bool:
    """Witt type of an even-dimensional symmetric form: (-1)^m det is a square."""
    m = J.shape[0] // 2
    return la.is_square_mod((-1) ** m * la.det_mod(J, p), p)


def group_order(q: QuiverWithDuality, dim: Sequence[int], p: int, gram: Optional[GramChoice] = None) -> int:
    """#GL_d(F_p), or #G^{sigma,eps}_e(F_p) when a GramChoice is given."""
    if gram is None:
        return prod(gl_order(n, p) for n in dim)
    order = prod(gl_order(dim[i], p) for i in q.node_plus)
    for i in q.node_fixed:
        n = dim[i]
        if q.s[i] == -1:
            order *= symplectic_order(n, p)
        else:
            order *= orthogonal_order(n, p, split=n % 2 == 1 or is_split(gram.grams[i], p))
    return order


# points

class PointSpace:
    """All (self-dual) points of a dimension vector, indexed by integers in base p."""

    def __init__(self, q: QuiverWithDuality, dim: Sequence[int], ctx: PrimeFieldCtx,
                 gram: Optional[GramChoice] = None) -> None:
        self.q = q
        self.dim = tuple(dim)
        self.ctx = ctx
        self.gram = gram
        self._blocks: list[tuple[int, str, int, int]] = []
        if gram is None:
            for k, a in enumerate(q.arrows):
                self._blocks.append((k, "free", self.dim[a.target], self.dim[a.source]))
        else:
            for k in q.arrow_plus:
                a = q.arrows[k]
                self._blocks.append((k, "free", self.dim[a.target], self.dim[a.source]))
            for k in q.arrow_fixed:
                a = q.arrows[k]
                kind = "sym" if q.s[a.source] * q.tau[k] == 1 else "skew"
                self._blocks.append((k, kind, self.dim[a.source], self.dim[a.source]))
            self._inverse = [la.inv_mod_mat(J, ctx.p) for J in gram.grams]
        self.free = sum(_block_size(kind, m, n) for _, kind, m, n in self._blocks)
        self.count = ctx.p ** self.free

    def check_cap(self, cap: int) -> None:
        if self.count > cap:
            raise CapExceededError(f"points of dimension {list(self.dim)}", self.count, cap)

    def point(self, index: int) -> Point:
        p = self.ctx.p
        digits = []
        for _ in range(self.free):
            index, r = divmod(index, p)
            digits.append(r)
        it = iter(digits)
        q = self.q
        mats: list[Optional[np.ndarray]] = [None] * len(q.arrows)
        for k, kind, m, n in self._blocks:
            block = la.zeros(m, n)
            if kind == "free":
                for r, c in itertools.product(range(m), range(n)):
                    block[r, c] = next(it)
            else:
                for r in range(n):
                    for c in range(r + 1 if kind == "skew" else r, n):
                        x = next(it)
                        block[r, c] = x
                        block[c, r] = x if kind == "sym" else (-x) % p
            if kind != "free":
                block = la.matmul_mod(self._inverse[q.arrows[k].source], block, p)
            mats[k] = block
        if self.gram is not None:
            for k in q.arrow_minus:
                partner = q.arrow_sigma[k]
                a = q.arrows[partner]
                J = self.gram.grams
                m = self._inverse[a.source] @ mats[partner].T @ J[a.target]
                mats[k] = la.mod_p(q.tau[partner] * m, p)
        return tuple(mats)  # type: ignore[arg-type]

    def __iter__(self) -> Iterator[Point]:
        return (self.point(i) for i in range(self.count))

    def is_selfdual(self, point: Point) -> bool:
        if self.gram is None:
            return False
        p, J, q = self.ctx.p, self.gram.grams, self.q
        for k, a in enumerate(q.arrows):
            left = point[k].T @ J[a.target]
            right = q.tau[k] * J[a.source] @ point[q.arrow_sigma[k]]
            if not np.array_equal(la.mod_p(left, p), la.mod_p(right, p)):
                return False
        return True


def _block_size(kind: str, m: int, n: int) -> int:
    if kind == "free":
        return m * n
    if kind == "sym":
        return n * (n + 1) // 2
    return n * (n - 1) // 2


def enumerate_points(q: QuiverWithDuality, d: Sequence[int], ctx: PrimeFieldCtx,
                     cap: int = 10**7) -> Iterator[Point]:
    space = PointSpace(q, d, ctx)
    space.check_cap(cap)
    return iter(space)


def enumerate_selfdual_points(q: QuiverWithDuality, e: Sequence[int], gram: GramChoice, ctx: PrimeFieldCtx,
                              cap: int = 10**7) -> Iterator[Point]:
    if not is_admissible_selfdual(q, e):
        raise InadmissibleError(f"{q.format_dim(e)} is not an admissible self-dual dimension vector")
    space = PointSpace(q, e, ctx, gram)
    space.check_cap(cap)
    return iter(space)


# semistability

@lru_cache(maxsize=None)
def _subspaces(n: int, k: int, p: int) -> tuple[np.ndarray, ...]:
    return tuple(la.subspaces(n, k, p))


def _closed(q: QuiverWithDuality, point: Point, U: Sequence[np.ndarray], p: int) -> bool:
    for k, a in enumerate(q.arrows):
        B = U[a.source]
        if B.shape[0] == 0:
            continue
        image = la.matmul_mod(point[k], B.T, p).T
        if not la.contains(U[a.target], image, p):
            return False
    return True


def _isotropic(q: QuiverWithDuality, U: Sequence[np.ndarray], gram: GramChoice, p: int) -> bool:
    for i in range(q.size):
        B, C = U[i], U[q.node_sigma[i]]
        if B.shape[0] and C.shape[0] and la.matmul_mod(B @ gram.grams[i], C.T, p).any():
            return False
    return True


def check_subspace_cap(dim: Sequence[int], p: int, cap: int) -> None:
    total = prod(sum(la.count_subspaces(n, k, p) for k in range(n + 1)) for n in dim)
    if total > cap:
        raise CapExceededError(f"graded subspaces of {list(dim)}", total, cap)


def is_semistable(q: QuiverWithDuality, theta: Sequence[int], dim: Sequence[int], point: Point, p: int,
                  gram: Optional[GramChoice] = None, isotropic_only: bool = False,
                  subspace_cap: Optional[int] = None) -> bool:
    """King semistability by testing every graded subspace of larger slope for closure.

    Callers looping over many points of one dimension vector check the
    subspace cap once up front and leave ``subspace_cap`` unset.
    """
    dim = tuple(dim)
    if not any(dim):
        return True
    if isotropic_only and gram is None:
        raise OridtError("isotropic_only needs a self-dual point")
    if subspace_cap is not None:
        check_subspace_cap(dim, p, subspace_cap)
    mu = slope(theta, dim)
    for f in sub_vectors(dim):
        if not any(f) or f == dim or slope(theta, f) <= mu:
            continue
        for U in itertools.product(*(_subspaces(n, k, p) for n, k in zip(dim, f))):
            if isotropic_only and not _isotropic(q, U, gram, p):
                continue
            if _closed(q, point, U, p):
                return False
    return True


# stack counts

@dataclass(frozen=True)
class SectorResult:
    label: str
    points: int
    semistable: int
    group_order: int


@dataclass(frozen=True)
class StackCount:
    dim: DimVector
    p: int
    selfdual: bool
    value: Fraction
    sectors: tuple[SectorResult, ...]


def _count_range(space: PointSpace, theta: Sequence[int], start: int, stop: int, isotropic_only: bool) -> int:
    p = space.ctx.p
    return sum(
        1 for i in range(start, stop)
        if is_semistable(space.q, theta, space.dim, space.point(i), p, space.gram, isotropic_only)
    )


def count_semistable(space: PointSpace, theta: Sequence[int], settings: OracleSettings,
                     isotropic_only: bool = False) -> int:
    """Semistable points of ``space``, split into contiguous index ranges per worker."""
    check_subspace_cap(space.dim, space.ctx.p, settings.subspace_cap)
    workers = settings.workers
    if workers <= 1 or space.count < 2 * workers:
        return _count_range(space, theta, 0, space.count, isotropic_only)
    edges = [space.count * k // workers for k in range(workers + 1)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_count_range, space, theta, lo, hi, isotropic_only)
                   for lo, hi in zip(edges, edges[1:])]
        return sum(f.result() for f in futures)


def _check_selfdual(q: QuiverWithDuality, theta: Sequence[int], e: Sequence[int]) -> None:
    if not is_sigma_compatible(q, theta):
        raise NotSigmaCompatibleError(f"stability {list(theta)} is not sigma-compatible")
    if not is_admissible_selfdual(q, e):
        raise InadmissibleError(f"{q.format_dim(e)} is not an admissible self-dual dimension vector")


def stack_count(q: QuiverWithDuality, theta: Sequence[int], dim: Sequence[int], ctx: PrimeFieldCtx,
                selfdual: bool = False, settings: Optional[OracleSettings] = None,
                alternate_gram: bool = False, isotropic_only: bool = False) -> StackCount:
    """#ss / #GL_d, or the sum over epsilon-sectors of #ss / #G^{sigma,eps}_e."""
    settings = settings or OracleSettings()
    dim = tuple(dim)
    if selfdual:
        _check_selfdual(q, theta, dim)
        grams: list[Optional[GramChoice]] = list(gram_choices(q, dim, ctx, alternate_gram))
    else:
        grams = [None]
    value = Fraction(0)
    sectors = []
    for gram in grams:
        space = PointSpace(q, dim, ctx, gram)
        space.check_cap(settings.point_cap)
        semistable = count_semistable(space, theta, settings, isotropic_only)
        order = group_order(q, dim, ctx.p, gram)
        value += Fraction(semistable, order)
        sectors.append(SectorResult(gram.label if gram else "GL", space.count, semistable, order))
        log.debug("sector %s: %d of %d points semistable, group order %d",
                  sectors[-1].label, semistable, space.count, order)
    return StackCount(dim, ctx.p, selfdual, value, tuple(sectors))


def formula_count(q: QuiverWithDuality, theta: Sequence[int], dim: Sequence[int], p: int,
                  selfdual: bool = False, cache: Optional[SeriesCache] = None) -> Fraction:
    """The stack count predicted by the series engine, q^(-E/2) A^{sigma,theta}_e or q^(-chi/2) A^theta_d."""
    dim = tuple(dim)
    cache = cache if cache is not None else default_cache(q)
    if not any(dim):
        return Fraction(1)
    if selfdual:
        value = ScalarV.v_power(-sd_euler(q, dim)) * cache.a_sigma_semistable_rec(theta, dim)
    else:
        value = ScalarV.v_power(-euler_form(q, dim, dim)) * cache.a_semistable(theta, dim)
    rational, irrational = specialize(value, p)
    if irrational:
        raise OridtError(f"formula value {value} has a sqrt({p}) part at {q.format_dim(dim)}")
    return rational


# census

def _key(point: Point) -> bytes:
    return b"".join(np.ascontiguousarray(m, dtype=np.int64).tobytes() for m in point)


def group_elements(q: QuiverWithDuality, dim: Sequence[int], ctx: PrimeFieldCtx,
                   gram: Optional[GramChoice] = None,
                   settings: Optional[OracleSettings] = None) -> list[GroupElement]:
    """Every element of GL_d or G^{sigma,eps}_e, one matrix per node."""
    settings = settings or OracleSettings()
    p = ctx.p
    order = group_order(q, dim, p, gram)
    if order > settings.group_cap:
        raise CapExceededError(f"group elements for {list(dim)}", order, settings.group_cap)
    own = range(q.size) if gram is None else list(q.node_plus) + list(q.node_fixed)
    candidates = p ** sum(dim[i] ** 2 for i in own)
    if candidates > settings.point_cap:
        raise CapExceededError(f"candidate matrices for {list(dim)}", candidates, settings.point_cap)
    factors = []
    for i in own:
        mats = list(la.invertible_matrices(dim[i], p))
        if gram is not None and i in q.node_fixed:
            mats = [g for g in mats if la.preserves_form(g, gram.grams[i], p)]
        factors.append(mats)
    elements = []
    for choice in itertools.product(*factors):
        g: list[Optional[np.ndarray]] = [None] * q.size
        for i, m in zip(own, choice):
            g[i] = m
        if gram is not None:
            for i in q.node_plus:
                J = gram.grams[i]
                g[q.node_sigma[i]] = la.mod_p(la.inv_mod_mat(J, p) @ la.inv_mod_mat(g[i], p).T @ J, p)
        elements.append(tuple(g))
    if len(elements) != order:
        raise OridtError(f"enumerated {len(elements)} group elements, expected {order}")
    return elements  # type: ignore[return-value]


def act(q: QuiverWithDuality, g: GroupElement, g_inv: GroupElement, point: Point, p: int) -> Point:
    """m_a -> g_j m_a g_i^-1 for every arrow a: i -> j."""
    return tuple(la.mod_p(g[a.target] @ point[k] @ g_inv[a.source], p) for k, a in enumerate(q.arrows))


class _Orbits:
    def __init__(self, q: QuiverWithDuality, elements: list[GroupElement], p: int) -> None:
        self.q = q
        self.p = p
        self.elements = elements
        self.inverses = [tuple(la.inv_mod_mat(m, p) for m in g) for g in elements]

    def orbit(self, point: Point) -> set[bytes]:
        return {_key(act(self.q, g, gi, point, self.p)) for g, gi in zip(self.elements, self.inverses)}


@dataclass(frozen=True, eq=False)
class CensusEntry:
    representative: Point
    sector: str
    orbit_size: int
    aut_order: int
    semistable: Optional[bool] = None


def census(q: QuiverWithDuality, dim: Sequence[int], ctx: PrimeFieldCtx, selfdual: bool = False,
           theta: Optional[Sequence[int]] = None,
           settings: Optional[OracleSettings] = None) -> list[CensusEntry]:
    """Orbit decomposition of the point set, one entry per isomorphism (isometry) class."""
    settings = settings or OracleSettings()
    dim = tuple(dim)
    grams: list[Optional[GramChoice]] = list(gram_choices(q, dim, ctx)) if selfdual else [None]

    def sector(gram: Optional[GramChoice]) -> list[CensusEntry]:
        space = PointSpace(q, dim, ctx, gram)
        space.check_cap(settings.point_cap)
        elements = group_elements(q, dim, ctx, gram, settings)
        orbits = _Orbits(q, elements, ctx.p)
        if theta is not None:
            check_subspace_cap(dim, ctx.p, settings.subspace_cap)
        seen: set[bytes] = set()
        out = []
        for point in space:
            if _key(point) in seen:
                continue
            orbit = orbits.orbit(point)
            seen |= orbit
            if len(elements) % len(orbit):
                raise OridtError(f"orbit of size {len(orbit)} does not divide the group order {len(elements)}")
            flag = None
            if theta is not None:
                flag = is_semistable(q, theta, dim, point, ctx.p, gram)
            out.append(CensusEntry(point, gram.label if gram else "GL", len(orbit),
                                   len(elements) // len(orbit), flag))
        return out

    if settings.workers > 1 and len(grams) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            parts = list(pool.map(sector, grams))
    else:
        parts = [sector(gram) for gram in grams]
    entries = [entry for part in parts for entry in part]
    log.info("census of %s: %d classes", q.format_dim(dim), len(entries))
    return entries


def census_count(entries: Sequence[CensusEntry]) -> Fraction:
    """Sum of 1/#Aut over the semistable classes."""
    return sum((Fraction(1, e.aut_order) for e in entries if e.semistable), Fraction(0))


# integration identity

@dataclass(frozen=True)
class IntegrationCheck:
    d: DimVector
    e: DimVector
    p: int
    lhs: Fraction
    rhs: Fraction

    @property
    def match(self) -> bool:
        return self.lhs == self.rhs


def _restrict(point: Point, q: QuiverWithDuality, basis: Sequence[np.ndarray], p: int) -> Point:
    """Maps of the subrepresentation spanned by the rows of ``basis``, in that basis."""
    out = []
    for k, a in enumerate(q.arrows):
        Bs, Bt = basis[a.source], basis[a.target]
        if Bs.shape[0] == 0 or Bt.shape[0] == 0:
            out.append(la.zeros(Bt.shape[0], Bs.shape[0]))
            continue
        out.append(la.solve_mod(Bt.T, la.matmul_mod(point[k], Bs.T, p), p))
    return tuple(out)


def _extend(B: np.ndarray, W: np.ndarray, p: int) -> np.ndarray:
    """Rows of W completing the rows of B to a basis of span(B, W)."""
    rows: list[np.ndarray] = []
    current = B
    rank = la.rank_mod(B, p) if B.shape[0] else 0
    for w in W:
        trial = np.vstack([current, w[None, :]]) if current.shape[0] else w[None, :]
        r = la.rank_mod(trial, p)
        if r > rank:
            rows.append(w)
            current, rank = trial, r
    return np.array(rows, dtype=np.int64).reshape(len(rows), B.shape[1])


def _quotient_maps(point: Point, q: QuiverWithDuality, C: Sequence[np.ndarray], B: Sequence[np.ndarray],
                   p: int) -> Point:
    out = []
    for k, a in enumerate(q.arrows):
        Cs, Ct, Bt = C[a.source], C[a.target], B[a.target]
        if Cs.shape[0] == 0 or Ct.shape[0] == 0:
            out.append(la.zeros(Ct.shape[0], Cs.shape[0]))
            continue
        frame = np.vstack([Ct, Bt]) if Bt.shape[0] else Ct
        coords = la.solve_mod(frame.T, la.matmul_mod(point[k], Cs.T, p), p)
        out.append(coords[: Ct.shape[0]])
    return tuple(out)


class _Standardizer:
    """Moves the induced form on a subquotient to one of the standard sector Grams."""

    def __init__(self, q: QuiverWithDuality, e: DimVector, ctx: PrimeFieldCtx) -> None:
        self.q = q
        self.ctx = ctx
        self.choices = gram_choices(q, e, ctx)
        self._targets = {i: {la.mod_p(c.grams[i], ctx.p).tobytes(): c.grams[i] for c in self.choices}
                         for i in q.node_fixed}
        self._invertible = {i: list(la.invertible_matrices(e[i], ctx.p)) for i in q.node_fixed}

    def __call__(self, C: list[np.ndarray], J: Sequence[np.ndarray]) -> Optional[GramChoice]:
        q, p = self.q, self.ctx.p
        for i in q.node_plus:
            j = q.node_sigma[i]
            if C[i].shape[0] == 0:
                continue
            K = la.matmul_mod(C[i] @ J[i], C[j].T, p)
            C[j] = la.matmul_mod(la.inv_mod_mat(K, p).T, C[j], p)
        for i in q.node_fixed:
            if C[i].shape[0] == 0:
                continue
            K = la.matmul_mod(C[i] @ J[i], C[i].T, p)
            h = self._find(i, K)
            if h is None:
                return None
            C[i] = la.matmul_mod(h, C[i], p)
        for choice in self.choices:
            if all(np.array_equal(la.matmul_mod(C[i] @ J[i], C[q.node_sigma[i]].T, p), choice.grams[i])
                   for i in range(q.size)):
                return choice
        return None

    def _find(self, i: int, K: np.ndarray) -> Optional[np.ndarray]:
        p = self.ctx.p
        for h in self._invertible[i]:
            if la.mod_p(h @ K @ h.T, p).tobytes() in self._targets[i]:
                return h
        return None


def verify_integration_identity(q: QuiverWithDuality, u: Point, d: Sequence[int], m: Point,
                                m_gram: GramChoice, e: Sequence[int], ctx: PrimeFieldCtx,
                                settings: Optional[OracleSettings] = None) -> IntegrationCheck:
    """Compare sum_N G^N_{U,M}/#Aut_S(N) with q^(-chi(e,d)-E(d))/(#Aut U #Aut_S M).

    The left side runs over every self-dual point N of dimension H(d)+e in
    every sector, weighting by 1/#G, which is the class sum by orbit-stabilizer.
    """
    settings = settings or OracleSettings()
    p = ctx.p
    d, e = tuple(d), tuple(e)
    gl = group_elements(q, d, ctx, None, settings)
    orbit_u = _Orbits(q, gl, p).orbit(u)
    iso = group_elements(q, e, ctx, m_gram, settings)
    orbit_m = _Orbits(q, iso, p).orbit(m)
    aut_u = Fraction(len(gl), len(orbit_u))
    aut_m = Fraction(len(iso), len(orbit_m))
    rhs = Fraction(p) ** (-euler_form(q, e, d) - sd_euler(q, d)) / (aut_u * aut_m)

    total = hyperbolic_sum(q, d)
    total = tuple(x + y for x, y in zip(total, e))
    standardize = _Standardizer(q, e, ctx)
    lhs = Fraction(0)
    for gram in gram_choices(q, total, ctx):
        space = PointSpace(q, total, ctx, gram)
        space.check_cap(settings.point_cap)
        order = group_order(q, total, p, gram)
        flags = 0
        for point in space:
            flags += _count_flags(q, point, gram, d, orbit_u, orbit_m, m_gram.label, standardize, p)
        lhs += Fraction(flags, order)
    log.info("integration identity at d=%s e=%s: lhs %s rhs %s", d, e, lhs, rhs)
    return IntegrationCheck(d, e, p, lhs, rhs)


def _count_flags(q: QuiverWithDuality, point: Point, gram: GramChoice, d: DimVector,
                 orbit_u: set[bytes], orbit_m: set[bytes], m_label: str,
                 standardize: _Standardizer, p: int) -> int:
    dims = [J.shape[0] for J in gram.grams]
    count = 0
    for U in itertools.product(*(_subspaces(n, k, p) for n, k in zip(dims, d))):
        if not _isotropic(q, U, gram, p) or not _closed(q, point, U, p):
            continue
        if _key(_restrict(point, q, U, p)) not in orbit_u:
            continue
        C = []
        for i in range(q.size):
            Bs = U[q.node_sigma[i]]
            if Bs.shape[0]:
                perp = la.nullspace_mod(la.matmul_mod(Bs, gram.grams[i].T, p), p).T
            else:
                perp = la.identity(dims[i])
            C.append(_extend(U[i], perp, p))
        choice = standardize(C, gram.grams)
        if choice is None or choice.label != m_label:
            continue
        if _key(_quotient_maps(point, q, C, U, p)) in orbit_m:
            count += 1
    return count
