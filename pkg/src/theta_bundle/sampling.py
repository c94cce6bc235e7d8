"""Deterministic point sets on the fundamental cube [0, 1)^4."""

from __future__ import annotations

import itertools

import numpy as np

__all__ = ["cube_grid", "random_points"]


def cube_grid(n: int, interior: bool = True) -> np.ndarray:
    """n^4 points of a tensor grid, shape (n^4, 4), in lexicographic order.

    ``interior=True`` uses cell centres (i + 1/2)/n, which avoids the lattice
    zeros of theta at the cube corners; ``interior=False`` uses i/n.
    """
    if n < 1:
        raise ValueError("grid size must be positive")
    g = (np.arange(n) + (0.5 if interior else 0.0)) / n
    return np.array(list(itertools.product(g, g, g, g)), dtype=float)


def random_points(count: int, seed: int = 0) -> np.ndarray:
    """``count`` uniform points in [0, 1)^4 from a seeded generator."""
    return np.random.default_rng(seed).random((count, 4))
