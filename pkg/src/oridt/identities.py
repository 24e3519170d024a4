"""Quantum dilogarithm identities on the A2 quiver.

Each identity is a pair of truncated series built from qdilog products; an
identity holds up to a bound when the two sides agree term by term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .exceptions import ConfigError
from .presets import a2
from .quiver import DimVector
from .scalar import ScalarV
from .torus import ModuleSeries, TorusSeries, qdilog

log = logging.getLogger(__name__)

Side = Union[TorusSeries, ModuleSeries]


def pentagon(bound: int) -> tuple[TorusSeries, TorusSeries]:
    """E(x01) E(x10) against E(x10) E(x11) E(x01)."""
    q = a2()
    x01 = qdilog(q, (0, 1), 1, 0, bound)
    x10 = qdilog(q, (1, 0), 1, 0, bound)
    x11 = qdilog(q, (1, 1), 1, 0, bound)
    return x01 * x10, x10 * x11 * x01


def a2_orthogonal(bound: int) -> tuple[ModuleSeries, ModuleSeries]:
    """E_q(x01) . xi_0 against E_q(x10) E_q2(q^(-1/2) x11) . xi_0."""
    q = a2("orthogonal")
    vacuum = ModuleSeries.vacuum(q, bound)
    left = qdilog(q, (0, 1), 1, 0, bound) * vacuum
    right = qdilog(q, (1, 0), 1, 0, bound) * (qdilog(q, (1, 1), 2, -1, bound) * vacuum)
    return left, right


def a2_symplectic(bound: int) -> tuple[ModuleSeries, ModuleSeries]:
    """E_q(x01) . xi_0 against E_q(x10) (E_q2(q^(1/2) x11) . xi_0 + E_q2(q^(-1/2) x11) . xi_11)."""
    q = a2("symplectic")
    vacuum = ModuleSeries.vacuum(q, bound)
    left = qdilog(q, (0, 1), 1, 0, bound) * vacuum
    inner = (qdilog(q, (1, 1), 2, 1, bound) * vacuum
             + qdilog(q, (1, 1), 2, -1, bound) * ModuleSeries.basis(q, (1, 1), bound))
    right = qdilog(q, (1, 0), 1, 0, bound) * inner
    return left, right


IDENTITIES: dict[str, Callable[[int], tuple[Side, Side]]] = {
    "pentagon": pentagon,
    "a2-orthogonal": a2_orthogonal,
    "a2-symplectic": a2_symplectic,
}


@dataclass(frozen=True)
class IdentityResult:
    name: str
    bound: int
    equal: bool
    first_difference: Optional[tuple[DimVector, ScalarV, ScalarV]] = None


def check_identity(name: str, bound: int) -> IdentityResult:
    try:
        build = IDENTITIES[name]
    except KeyError:
        raise ConfigError(f"unknown identity {name!r}; choose from {sorted(IDENTITIES)}") from None
    left, right = build(bound)
    diff = left.first_difference(right)
    log.info("identity %s up to %d: %s", name, bound, "holds" if diff is None else f"fails at {diff[0]}")
    return IdentityResult(name, bound, diff is None, diff)
