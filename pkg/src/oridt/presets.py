"""Built-in quivers with involution used by the identities and the tests."""

from __future__ import annotations

from typing import Literal

from .quiver import QuiverWithDuality, validate

Duality = Literal["orthogonal", "symplectic"]

# (s, tau) for the two standard duality structures
_SIGNS = {
    "orthogonal": (1, -1),
    "symplectic": (-1, -1),
}


def _build(nodes, arrows, node_sigma, arrow_sigma, duality: Duality) -> QuiverWithDuality:
    s, tau = _SIGNS[duality]
    return validate({
        "nodes": nodes,
        "arrows": [{"id": a, "source": i, "target": j} for a, i, j in arrows],
        "sigma": {"nodes": node_sigma, "arrows": arrow_sigma},
        "s": s,
        "tau": tau,
    })


def a2(duality: Duality = "symplectic") -> QuiverWithDuality:
    """-1 -> 1 with the flip; the single arrow is fixed."""
    return _build(["-1", "1"], [("a", "-1", "1")], {"-1": "1", "1": "-1"}, {"a": "a"}, duality)


def kronecker(n: int, duality: Duality = "symplectic") -> QuiverWithDuality:
    """n parallel arrows -1 -> 1, all fixed by the flip."""
    arrows = [(f"a{k}", "-1", "1") for k in range(1, n + 1)]
    return _build(["-1", "1"], arrows, {"-1": "1", "1": "-1"}, {a: a for a, _, _ in arrows}, duality)


def a4_flip(duality: Duality = "symplectic") -> QuiverWithDuality:
    """-2 -> -1 -> 1 -> 2, the flip swaps the outer arrows and fixes the middle one."""
    arrows = [("a1", "-2", "-1"), ("a0", "-1", "1"), ("a2", "1", "2")]
    node_sigma = {"-2": "2", "-1": "1", "1": "-1", "2": "-2"}
    return _build(["-2", "-1", "1", "2"], arrows, node_sigma, {"a1": "a2", "a2": "a1", "a0": "a0"}, duality)


def a3_fixed(duality: Duality = "orthogonal") -> QuiverWithDuality:
    """-1 -> 0 -> 1 with a fixed middle node."""
    arrows = [("b1", "-1", "0"), ("b2", "0", "1")]
    node_sigma = {"-1": "1", "0": "0", "1": "-1"}
    return _build(["-1", "0", "1"], arrows, node_sigma, {"b1": "b2", "b2": "b1"}, duality)


def loop(s: int = 1, tau: int = 1) -> QuiverWithDuality:
    """One fixed node with one fixed loop."""
    return validate({
        "nodes": ["0"],
        "arrows": [{"id": "l", "source": "0", "target": "0"}],
        "sigma": {"nodes": {"0": "0"}, "arrows": {"l": "l"}},
        "s": s,
        "tau": tau,
    })


def kronecker_doubled(n: int, m: int, duality: Duality = "symplectic") -> QuiverWithDuality:
    """K_n on {-2,-1} glued to its opposite on {1,2} by m fixed arrows 1 -> -1."""
    arrows = [(f"a{k}", "-2", "-1") for k in range(1, n + 1)]
    arrows += [(f"b{k}", "1", "2") for k in range(1, n + 1)]
    arrows += [(f"c{k}", "1", "-1") for k in range(1, m + 1)]
    arrow_sigma = {f"a{k}": f"b{k}" for k in range(1, n + 1)}
    arrow_sigma.update({f"b{k}": f"a{k}" for k in range(1, n + 1)})
    arrow_sigma.update({f"c{k}": f"c{k}" for k in range(1, m + 1)})
    node_sigma = {"-2": "2", "-1": "1", "1": "-1", "2": "-2"}
    return _build(["-2", "-1", "1", "2"], arrows, node_sigma, arrow_sigma, duality)
