"""Quivers with involution and duality structure.

Node and arrow ids are strings in the order the description lists them;
internally they become dense indices and dimension vectors are int tuples
in node order.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator, Mapping, Optional, Sequence, Union

from .config import QuiverSpec, StabilitySpec, parse_quiver
from .exceptions import (
    ArrowOrientationMismatchError,
    ConfigError,
    FixedArrowNotFixedError,
    NonInvolutiveError,
    QuiverValidationError,
    QuiverViolation,
    SignConditionViolatedError,
    ZeroDimVectorError,
)

log = logging.getLogger(__name__)

DimVector = tuple[int, ...]
Stability = tuple[int, ...]


@dataclass(frozen=True)
class Arrow:
    id: str
    source: int
    target: int


@dataclass(frozen=True)
class QuiverWithDuality:
    nodes: tuple[str, ...]
    arrows: tuple[Arrow, ...]
    node_sigma: tuple[int, ...]
    arrow_sigma: tuple[int, ...]
    s: tuple[int, ...]
    tau: tuple[int, ...]
    node_plus: tuple[int, ...]
    node_fixed: tuple[int, ...]
    node_minus: tuple[int, ...]
    arrow_plus: tuple[int, ...]
    arrow_fixed: tuple[int, ...]
    arrow_minus: tuple[int, ...]
    spec: QuiverSpec = field(compare=False, hash=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def zero(self) -> DimVector:
        return (0,) * len(self.nodes)

    def sigma(self, d: Sequence[int]) -> DimVector:
        return tuple(d[j] for j in self.node_sigma)

    def node_index(self, node: str) -> int:
        return self.nodes.index(node)

    def dim(self, values: Union[Sequence[int], Mapping[str, int]]) -> DimVector:
        """A dimension vector from a list in node order or a node-id map."""
        if isinstance(values, Mapping):
            unknown = set(values) - set(self.nodes)
            if unknown:
                raise ConfigError(f"unknown nodes {sorted(unknown)}")
            return tuple(int(values.get(n, 0)) for n in self.nodes)
        out = tuple(int(x) for x in values)
        if len(out) != len(self.nodes):
            raise ConfigError(f"expected {len(self.nodes)} entries, got {len(out)}")
        return out

    def stability(self, spec: StabilitySpec) -> Stability:
        return self.dim(spec)

    def format_dim(self, d: Sequence[int]) -> str:
        return "(" + ",".join(str(x) for x in d) + ")"

    def fingerprint(self) -> str:
        text = json.dumps(self.spec.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def partitions(self) -> dict[str, dict[str, list[str]]]:
        def ids(names: Sequence[str], idx: Sequence[int]) -> list[str]:
            return [names[i] for i in idx]

        arrow_ids = [a.id for a in self.arrows]
        return {
            "nodes": {
                "plus": ids(self.nodes, self.node_plus),
                "fixed": ids(self.nodes, self.node_fixed),
                "minus": ids(self.nodes, self.node_minus),
            },
            "arrows": {
                "plus": ids(arrow_ids, self.arrow_plus),
                "fixed": ids(arrow_ids, self.arrow_fixed),
                "minus": ids(arrow_ids, self.arrow_minus),
            },
        }


def _signs(value: Union[int, Mapping[str, int]], ids: Sequence[str], what: str,
           violations: list[QuiverViolation]) -> list[int]:
    if isinstance(value, int):
        return [value] * len(ids)
    out = []
    for i in ids:
        if i not in value:
            violations.append(SignConditionViolatedError(i, f"no {what} sign given"))
            out.append(1)
        else:
            out.append(value[i])
    return out


def _split(ids: Sequence[str], sigma: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    plus, fixed, minus = [], [], []
    for i, j in enumerate(sigma):
        if i == j:
            fixed.append(i)
        elif ids[i] < ids[j]:
            plus.append(i)
        else:
            minus.append(i)
    return tuple(plus), tuple(fixed), tuple(minus)


def validate(raw: Union[QuiverSpec, dict[str, Any]]) -> QuiverWithDuality:
    """Check a raw description and return the validated quiver.

    Every violated condition is collected; if there is any, the aggregate
    QuiverValidationError lists all of them.
    """
    spec = parse_quiver(raw)
    nodes = tuple(spec.nodes)
    node_pos = {n: k for k, n in enumerate(nodes)}
    arrow_ids = [a.id for a in spec.arrows]
    arrow_pos = {a: k for k, a in enumerate(arrow_ids)}
    arrows = tuple(Arrow(a.id, node_pos[a.source], node_pos[a.target]) for a in spec.arrows)
    violations: list[QuiverViolation] = []

    node_sigma: list[Optional[int]] = []
    for n in nodes:
        image = spec.sigma.nodes.get(n)
        if image is None:
            violations.append(NonInvolutiveError(n, "sigma has no image for this node"))
            node_sigma.append(None)
        elif image not in node_pos:
            violations.append(NonInvolutiveError(n, f"sigma({n}) = {image} is not a node"))
            node_sigma.append(None)
        else:
            node_sigma.append(node_pos[image])
    for k, j in enumerate(node_sigma):
        if j is not None and node_sigma[j] is not None and node_sigma[j] != k:
            violations.append(NonInvolutiveError(nodes[k], "sigma(sigma(i)) != i"))
    for extra in sorted(set(spec.sigma.nodes) - set(nodes)):
        violations.append(NonInvolutiveError(extra, "sigma is given on an unknown node"))

    arrow_sigma: list[Optional[int]] = []
    for a in arrow_ids:
        image = spec.sigma.arrows.get(a)
        if image is None:
            violations.append(NonInvolutiveError(a, "sigma has no image for this arrow"))
            arrow_sigma.append(None)
        elif image not in arrow_pos:
            violations.append(ArrowOrientationMismatchError(a, f"sigma({a}) = {image} names no arrow"))
            arrow_sigma.append(None)
        else:
            arrow_sigma.append(arrow_pos[image])
    for k, j in enumerate(arrow_sigma):
        if j is not None and arrow_sigma[j] is not None and arrow_sigma[j] != k:
            violations.append(NonInvolutiveError(arrow_ids[k], "sigma(sigma(a)) != a"))
    for extra in sorted(set(spec.sigma.arrows) - set(arrow_ids)):
        violations.append(NonInvolutiveError(extra, "sigma is given on an unknown arrow"))

    s = _signs(spec.s, nodes, "s", violations)
    tau = _signs(spec.tau, arrow_ids, "tau", violations)

    for k, n in enumerate(nodes):
        j = node_sigma[k]
        if j is not None and s[j] != s[k]:
            violations.append(SignConditionViolatedError(n, f"s({n}) != s(sigma({n}))"))

    for k, arrow in enumerate(arrows):
        i, j = arrow.source, arrow.target
        si, sj = node_sigma[i], node_sigma[j]
        image = arrow_sigma[k]
        if sj is not None and sj == i and image is not None and image != k:
            violations.append(FixedArrowNotFixedError(arrow.id, "arrow i -> sigma(i) must be fixed by sigma"))
        if image is None or si is None or sj is None:
            continue
        target = arrows[image]
        if (target.source, target.target) != (sj, si):
            violations.append(ArrowOrientationMismatchError(
                arrow.id,
                f"{arrow.id}: {nodes[i]} -> {nodes[j]} is sent to {target.id}: "
                f"{nodes[target.source]} -> {nodes[target.target]}, expected {nodes[sj]} -> {nodes[si]}",
            ))
        if k <= image and tau[k] * tau[image] != s[i] * s[j]:
            violations.append(SignConditionViolatedError(arrow.id, "tau(a) * tau(sigma(a)) != s(i) * s(j)"))

    if violations:
        raise QuiverValidationError(violations)

    node_parts = _split(nodes, node_sigma)  # type: ignore[arg-type]
    arrow_parts = _split(arrow_ids, arrow_sigma)  # type: ignore[arg-type]
    quiver = QuiverWithDuality(
        nodes=nodes,
        arrows=arrows,
        node_sigma=tuple(node_sigma),  # type: ignore[arg-type]
        arrow_sigma=tuple(arrow_sigma),  # type: ignore[arg-type]
        s=tuple(s),
        tau=tuple(tau),
        node_plus=node_parts[0],
        node_fixed=node_parts[1],
        node_minus=node_parts[2],
        arrow_plus=arrow_parts[0],
        arrow_fixed=arrow_parts[1],
        arrow_minus=arrow_parts[2],
        spec=spec,
    )
    log.debug("validated quiver with %d nodes and %d arrows", len(nodes), len(arrows))
    return quiver


# forms

def euler_form(q: QuiverWithDuality, d: Sequence[int], e: Sequence[int]) -> int:
    """chi(d, e) = sum_i d_i e_i - sum_{i -> j} d_i e_j."""
    value = sum(x * y for x, y in zip(d, e))
    for a in q.arrows:
        value -= d[a.source] * e[a.target]
    return value


def skew_form(q: QuiverWithDuality, d: Sequence[int], e: Sequence[int]) -> int:
    return euler_form(q, d, e) - euler_form(q, e, d)


def sd_euler_parts(q: QuiverWithDuality, d: Sequence[int]) -> tuple[int, int]:
    """(E0, E1): the node sums and the arrow sums of the self-dual Euler form."""
    e0 = sum(d[i] * (d[i] - q.s[i]) // 2 for i in q.node_fixed)
    e0 += sum(d[q.node_sigma[i]] * d[i] for i in q.node_plus)
    e1 = 0
    for k in q.arrow_fixed:
        t = q.arrows[k].target
        e1 -= d[t] * (d[t] + q.tau[k] * q.s[t]) // 2
    for k in q.arrow_plus:
        a = q.arrows[k]
        e1 -= d[q.node_sigma[a.source]] * d[a.target]
    return e0, e1


def sd_euler(q: QuiverWithDuality, d: Sequence[int]) -> int:
    e0, e1 = sd_euler_parts(q, d)
    return e0 + e1


def e_tilde(q: QuiverWithDuality, d: Sequence[int]) -> int:
    return sd_euler(q, d) - sd_euler(q, q.sigma(d))


def hyperbolic_sum(q: QuiverWithDuality, d: Sequence[int]) -> DimVector:
    """H(d) = d + sigma(d)."""
    return tuple(x + y for x, y in zip(d, q.sigma(d)))


# stabilities

def is_sigma_compatible(q: QuiverWithDuality, theta: Sequence[int]) -> bool:
    return all(theta[q.node_sigma[i]] == -theta[i] for i in range(q.size))


def slope(theta: Sequence[int], d: Sequence[int]) -> Fraction:
    total = sum(d)
    if total == 0:
        raise ZeroDimVectorError("slope of the zero dimension vector")
    return Fraction(sum(t * x for t, x in zip(theta, d)), total)


def is_symmetric(q: QuiverWithDuality, e: Sequence[int]) -> bool:
    return q.sigma(e) == tuple(e)


def is_admissible_selfdual(q: QuiverWithDuality, e: Sequence[int]) -> bool:
    """sigma-symmetric, and even at every fixed node with s = -1."""
    if not is_symmetric(q, e):
        return False
    return all(e[i] % 2 == 0 for i in q.node_fixed if q.s[i] == -1)


# enumeration

def _compositions(parts: int, total: int) -> Iterator[DimVector]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(parts - 1, total - first):
            yield (first,) + rest


def enumerate_dimvectors(q: QuiverWithDuality, bound: int) -> list[DimVector]:
    """All d with 0 < |d| <= bound, by total dimension, then lexicographically."""
    out: list[DimVector] = []
    for total in range(1, bound + 1):
        out.extend(_compositions(q.size, total))
    return out


def enumerate_selfdual(q: QuiverWithDuality, bound: int) -> list[DimVector]:
    """All admissible sigma-symmetric e with |e| <= bound, zero included."""
    out = [q.zero()] if bound >= 0 else []
    out.extend(e for e in enumerate_dimvectors(q, bound) if is_admissible_selfdual(q, e))
    return out


def sub_vectors(upper: Sequence[int]) -> Iterator[DimVector]:
    """All d with 0 <= d <= upper componentwise, lexicographically."""
    return itertools.product(*(range(u + 1) for u in upper))


def dim_leq(d: Sequence[int], e: Sequence[int]) -> bool:
    return all(x <= y for x, y in zip(d, e))


# finite type

@dataclass(frozen=True)
class FiniteTypeVerdict:
    finite: bool
    components: tuple[str, ...]
    duality_class: str
    hyperbolic: Optional[bool]


def _dynkin_label(nodes: list[int], adjacency: dict[int, set[int]]) -> Optional[str]:
    n = len(nodes)
    degree = {v: len(adjacency[v]) for v in nodes}
    if sum(degree.values()) // 2 != n - 1:
        return None
    branches = [v for v in nodes if degree[v] > 2]
    if not branches:
        return f"A{n}"
    if len(branches) > 1 or degree[branches[0]] != 3:
        return None
    center = branches[0]
    arms = []
    for start in adjacency[center]:
        length, prev, cur = 1, center, start
        while degree[cur] == 2:
            prev, cur = cur, next(w for w in adjacency[cur] if w != prev)
            length += 1
        arms.append(length)
    a, b, c = sorted(arms)
    if a == 1 and b == 1:
        return f"D{n}"
    if a == 1 and b == 2 and c in (2, 3, 4):
        return f"E{n}"
    return None


def _components(q: QuiverWithDuality, adjacency: dict[int, set[int]]) -> list[list[int]]:
    seen: set[int] = set()
    out = []
    for v in range(q.size):
        if v in seen:
            continue
        comp, queue = [], deque([v])
        seen.add(v)
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        out.append(sorted(comp))
    return out


def _hyperbolic_component(q: QuiverWithDuality, comp: list[int]) -> bool:
    middle_nodes = [i for i in comp if q.node_sigma[i] == i]
    if middle_nodes:
        return q.s[middle_nodes[0]] == -1
    members = set(comp)
    for k in q.arrow_fixed:
        a = q.arrows[k]
        if a.source in members:
            return q.s[a.target] * q.tau[k] == -1
    return True


def is_finite_type(q: QuiverWithDuality) -> FiniteTypeVerdict:
    """Dynkin check of the underlying graph plus the duality classification."""
    edges = Counter()
    adjacency: dict[int, set[int]] = {v: set() for v in range(q.size)}
    loops = False
    for a in q.arrows:
        if a.source == a.target:
            loops = True
        edges[frozenset((a.source, a.target))] += 1
        adjacency[a.source].add(a.target)
        adjacency[a.target].add(a.source)
    multi = any(count > 1 for count in edges.values())
    comps = _components(q, adjacency)
    labels = []
    for comp in comps:
        label = None if (loops or multi) else _dynkin_label(comp, adjacency)
        labels.append(label or "wild")
    finite = all(label != "wild" for label in labels)

    stable = [comp for comp in comps if q.node_sigma[comp[0]] in comp]
    stable_labels = [labels[comps.index(comp)] for comp in stable]
    if not stable:
        duality_class = "disjoint-union"
    elif finite and all(label.startswith("A") for label in stable_labels):
        duality_class = "type-A-with-flip"
    else:
        duality_class = "other"
    hyperbolic = None
    if finite and duality_class != "other":
        hyperbolic = all(_hyperbolic_component(q, comp) for comp in stable)
    return FiniteTypeVerdict(finite, tuple(labels), duality_class, hyperbolic)


# genericity

@dataclass(frozen=True)
class GenericityVerdict:
    generic: bool
    bound: int
    witness: Optional[str] = None


def is_sigma_generic(
    q: QuiverWithDuality,
    theta: Sequence[int],
    bound: int,
    semistable: Callable[[DimVector], Any],
) -> GenericityVerdict:
    """Bounded scan of sigma-genericity up to total dimension ``bound``.

    ``semistable(d)`` returns the semistable count of d; a falsy value
    means there are no semistable representations.
    """
    if not is_sigma_compatible(q, theta):
        return GenericityVerdict(False, bound, "stability is not sigma-compatible")
    dims = enumerate_dimvectors(q, bound)
    by_slope: dict[Fraction, list[DimVector]] = {}
    for d in dims:
        by_slope.setdefault(slope(theta, d), []).append(d)
    for mu, group in by_slope.items():
        for d, e in itertools.combinations(group, 2):
            if skew_form(q, d, e) != 0:
                return GenericityVerdict(False, bound, f"<{d},{e}> != 0 at slope {mu}")
    for d in by_slope.get(Fraction(0), []):
        if not is_symmetric(q, d) and semistable(d):
            return GenericityVerdict(False, bound, f"semistable {q.format_dim(d)} of slope 0 is not symmetric")
    return GenericityVerdict(True, bound)
