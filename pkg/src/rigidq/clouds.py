"""Deterministic synthetic bead clouds used by the CLI, benchmarks and tests."""

from __future__ import annotations

import numpy as np

KINDS = ("uniform", "shell", "line", "grid")


def uniform_cloud(n: int, seed: int = 0) -> np.ndarray:
    """n beads uniform in the unit cube."""
    return np.random.default_rng([seed, 0]).random((n, 3))


def shell_cloud(n: int, seed: int = 0) -> np.ndarray:
    """n beads uniform on the unit sphere surface."""
    g = np.random.default_rng([seed, 1]).normal(size=(n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def line_cloud(n: int, seed: int = 0) -> np.ndarray:
    """n beads equispaced on a random line; the rank-5 degenerate case."""
    rng = np.random.default_rng([seed, 2])
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    origin = rng.random(3)
    t = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    return origin + np.outer(t, direction)


def grid_cloud(n: int, seed: int = 0) -> np.ndarray:
    """First n points of a regular lattice in the unit cube (seed unused)."""
    k = int(np.ceil(n ** (1.0 / 3.0)))
    side = np.linspace(0.0, 1.0, k) if k > 1 else np.zeros(1)
    pts = np.stack(np.meshgrid(side, side, side, indexing="ij"), axis=-1)
    return pts.reshape(-1, 3)[:n].copy()


_MAKERS = {
    "uniform": uniform_cloud,
    "shell": shell_cloud,
    "line": line_cloud,
    "grid": grid_cloud,
}


def make_cloud(kind: str, n: int, seed: int = 0) -> np.ndarray:
    if kind not in _MAKERS:
        raise ValueError(f"unknown cloud kind {kind!r}; choose from {KINDS}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return _MAKERS[kind](n, seed)
