"""Bead-cloud representation and dense force/torque resultant matrices.

A rigid body is an ordered cloud of bead positions.  Its 6 x 3n resultant
matrix maps the stacked per-bead forces to the body's net force (rows 1-3)
and net torque about a reference point (rows 4-6).  With the reference point
at the centroid the two row blocks are mutually orthogonal, which is the
property every factorization in this package leans on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DuplicateBeadsError

# Beads closer than DUP_TOL_FACTOR * (bounding-box diagonal) are rejected:
# coincident beads make the spatial split non-terminating and the two-bead
# closed form degenerate.
DUP_TOL_FACTOR = 1e-12


def skew(r) -> np.ndarray:
    """Return the 3x3 matrix A with A @ f == np.cross(r, f) for every f."""
    x, y, z = np.asarray(r, dtype=float)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


class BeadModel:
    """One rigid body: an ordered (n, 3) array of distinct, finite positions.

    Immutable after construction; safe to share between threads.
    """

    def __init__(self, positions, body_id: int = 0):
        pos = np.array(positions, dtype=float, ndmin=2)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError(f"positions must be (n, 3) with n >= 1, got {pos.shape}")
        if not np.isfinite(pos).all():
            raise ValueError("positions must be finite")
        _check_duplicates(pos)
        pos.flags.writeable = False
        self.positions = pos
        self.body_id = int(body_id)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        c = getattr(self, "_centroid", None)
        if c is None:
            c = self._centroid = self.positions.mean(axis=0)
        return c

    def __repr__(self):
        return f"BeadModel(n={self.n}, body_id={self.body_id})"


def _check_duplicates(pos: np.ndarray) -> None:
    n = pos.shape[0]
    if n < 2:
        return
    diag = float(np.linalg.norm(pos.max(axis=0) - pos.min(axis=0)))
    if diag == 0.0:
        raise DuplicateBeadsError("all beads coincide")
    tol = DUP_TOL_FACTOR * diag
    pairs = cKDTree(pos).query_pairs(tol)
    if pairs:
        i, j = min(pairs)
        raise DuplicateBeadsError(
            f"beads {i} and {j} are closer than {tol:.3e} (dup_tol)"
        )


def centroid(model: BeadModel) -> np.ndarray:
    """Arithmetic mean of the bead positions."""
    return model.centroid.copy()


class MultiBodyModel:
    """Ordered collection of rigid bodies; fixes the global 3n vector layout."""

    def __init__(self, bodies):
        bodies = list(bodies)
        if not bodies:
            raise ValueError("need at least one body")
        self.bodies = bodies
        counts = np.array([b.n for b in bodies])
        # offsets[j] is the first bead index of body j in the global layout
        self.offsets = np.concatenate([[0], np.cumsum(counts)])

    @property
    def m(self) -> int:
        return len(self.bodies)

    @property
    def n_total(self) -> int:
        return int(self.offsets[-1])

    def __iter__(self):
        return iter(self.bodies)

    def __repr__(self):
        return f"MultiBodyModel(m={self.m}, n_total={self.n_total})"


@dataclass(frozen=True)
class ZMatrix:
    """Dense 6 x 3n resultant matrix about ``origin``.

    Rows 1-3 are n copies of I; columns 3k..3k+3 of rows 4-6 hold
    skew(r_k - origin).
    """

    entries: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def n(self) -> int:
        return self.entries.shape[1] // 3


def assemble_z(model: BeadModel, origin=None) -> ZMatrix:
    """Assemble the dense resultant matrix of ``model`` about ``origin``.

    ``origin`` defaults to the centroid, which makes the translational rows
    orthogonal to the torque rows.
    """
    origin = model.centroid if origin is None else np.asarray(origin, dtype=float)
    n = model.n
    z = np.zeros((6, 3 * n))
    z[:3] = np.tile(np.eye(3), n)
    rel = model.positions - origin
    # skew blocks written columnwise: avoids n python-level skew() calls
    x, y, zc = rel[:, 0], rel[:, 1], rel[:, 2]
    rot = z[3:].reshape(3, n, 3)
    rot[0, :, 1] = -zc
    rot[0, :, 2] = y
    rot[1, :, 0] = zc
    rot[1, :, 2] = -x
    rot[2, :, 0] = -y
    rot[2, :, 1] = x
    return ZMatrix(z, origin.copy())
