"""Orientifold Donaldson-Thomas invariants of quivers with involution."""

__all__ = [
    "__version__",
]

__version__ = "0.1.0"
