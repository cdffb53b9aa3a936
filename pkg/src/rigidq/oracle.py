"""Independent dense references and the unstable naive baseline.

``dense_complement`` builds the orthogonal complement of a body's resultant
row space by a full orthogonal decomposition (rank-revealing), independent
of the hierarchical machinery — it is the verification oracle for
everything else.  ``naive_divide_conquer`` reproduces the classical
divide-and-conquer construction that stacks raw resultant rows and
re-orthonormalizes with classical Gram-Schmidt at each merge, with no
centroid stabilization: stable on benign clouds, catastrophically
inaccurate near collinearity, and singular exactly at it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clouds import make_cloud
from .errors import ShapeMismatchError, SingularHError, SizeGuardError
from .factor import factor_all, generate_explicit_q
from .matfree import downward_apply, upward_apply
from .model import BeadModel, ZMatrix
from .tree import BodyTree, build_tree

NAIVE_GUARD = 3000
_GS_TOL = 1e-12  # relative residual under which a merge row counts as dependent


@dataclass(frozen=True)
class DenseComplement:
    """Orthonormal rows spanning the complement of the resultant row space."""

    qtilde: np.ndarray
    rank: int  # numerical rank of Z (5 for collinear bodies, else 6)


def dense_complement(z, guard: int = 6000) -> DenseComplement:
    """Full orthogonal decomposition of Z; trailing directions span the
    complement.  Rank deficiency (collinear bodies) widens the complement."""
    entries = z.entries if isinstance(z, ZMatrix) else np.asarray(z, dtype=float)
    if entries.shape[1] > guard:
        raise SizeGuardError(f"3n = {entries.shape[1]} exceeds guard {guard}")
    _, s, vt = np.linalg.svd(entries, full_matrices=True)
    tol = max(entries.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int((s > tol).sum())
    return DenseComplement(vt[rank:], rank)


def projector_distance(a, b) -> float:
    """Entrywise max difference of the projectors onto two row spaces;
    zero iff the spaces coincide (rows themselves need not match)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatchError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    d = a.T @ a - b.T @ b
    return float(np.abs(d).max()) if d.size else 0.0


def _z_of(pos: np.ndarray) -> np.ndarray:
    """Raw resultant rows about the global origin (no centroid shift)."""
    n = pos.shape[0]
    z = np.zeros((6, 3 * n))
    z[:3] = np.tile(np.eye(3), n)
    rot = z[3:].reshape(3, n, 3)
    x, y, zc = pos[:, 0], pos[:, 1], pos[:, 2]
    rot[0, :, 1] = -zc
    rot[0, :, 2] = y
    rot[1, :, 0] = zc
    rot[1, :, 2] = -x
    rot[2, :, 0] = -y
    rot[2, :, 1] = x
    return z


class _ClassicalGS:
    """Classical Gram-Schmidt accumulator (single projection pass, no
    re-orthogonalization) -- deliberately the unstable variant."""

    def __init__(self, dim: int):
        self.basis = np.zeros((0, dim))

    def push(self, v: np.ndarray) -> float:
        """Orthonormalize v against the accepted basis; returns the relative
        residual norm.  The vector is always normalized and kept."""
        scale = np.linalg.norm(v)
        u = v - self.basis.T @ (self.basis @ v) if self.basis.shape[0] else v.copy()
        r = np.linalg.norm(u)
        rel = r / scale if scale > 0 else 0.0
        if r > 0:
            self.basis = np.vstack([self.basis, u / r])
        return rel


def naive_divide_conquer(tree: BodyTree, guard: int = NAIVE_GUARD) -> np.ndarray:
    """Dense Q from the raw-rows divide-and-conquer (columns in tree order).

    Merges orthonormalize [Z_p; 0 | Z_right] with classical Gram-Schmidt and
    keep the trailing rows.  Sub-ranges too small to carry a full-rank
    resultant matrix (one or two beads) are absorbed bead-by-bead; ranges of
    at most five beads are completed directly from canonical vectors.
    Raises SingularHError when a merge row is numerically dependent, which
    is exactly the collinear-body pathology (a two-bead body counts).
    """
    pos = tree.positions
    n = tree.n
    if 3 * n > guard:
        raise SizeGuardError(f"3n = {3 * n} exceeds naive guard {guard}")

    def gs_reduce(rows, gs: _ClassicalGS, keep: int, context: str) -> np.ndarray:
        out = []
        for row in rows:
            rel = gs.push(row)
            if rel < _GS_TOL:
                raise SingularHError(
                    f"dependent row in {context} (relative residual {rel:.1e})"
                )
            out.append(gs.basis[-1])
        return np.array(out[-keep:]) if keep else np.zeros((0, rows.shape[1]))

    def base(lo: int, hi: int) -> np.ndarray:
        nb = hi - lo
        z = _z_of(pos[lo:hi])
        gs = _ClassicalGS(3 * nb)
        for row in z:
            if gs.push(row) < _GS_TOL:
                raise SingularHError(
                    f"rank-deficient resultant rows on beads [{lo}, {hi})"
                )
        kept = []
        for i in range(3 * nb):
            e = np.zeros(3 * nb)
            e[i] = 1.0
            if gs.push(e) >= _GS_TOL:  # structural dependencies are skipped
                kept.append(gs.basis[-1])
            else:
                gs.basis = gs.basis[:-1]
            if len(kept) == 3 * nb - 6:
                break
        return np.array(kept)

    def merge(q_left, lo, mid, hi) -> np.ndarray:
        nb, nl = hi - lo, mid - lo
        z_p = _z_of(pos[lo:hi])
        gs = _ClassicalGS(3 * nb)
        for row in z_p:
            if gs.push(row) < _GS_TOL:
                raise SingularHError(f"singular H on beads [{lo}, {hi})")
        second = np.zeros((6, 3 * nb))
        second[:, 3 * nl:] = _z_of(pos[mid:hi])
        fresh = gs_reduce(second, gs, 6, f"merge on beads [{lo}, {hi})")
        q_right = process(mid, hi)
        lower = np.zeros((q_left.shape[0] + q_right.shape[0], 3 * nb))
        lower[:q_left.shape[0], :3 * nl] = q_left
        lower[q_left.shape[0]:, 3 * nl:] = q_right
        return np.vstack([fresh, lower])

    def absorb(q_x, lo, hi, bead: int) -> np.ndarray:
        # bead adjoins the range on one side; its three translation rows
        # carry the new directions of the enlarged range
        new_lo, new_hi = min(lo, bead), max(hi, bead + 1)
        nb = new_hi - new_lo
        z_p = _z_of(pos[new_lo:new_hi])
        gs = _ClassicalGS(3 * nb)
        for row in z_p:
            if gs.push(row) < _GS_TOL:
                raise SingularHError(f"singular H on beads [{new_lo}, {new_hi})")
        second = np.zeros((3, 3 * nb))
        second[:, 3 * (bead - new_lo):3 * (bead - new_lo) + 3] = np.eye(3)
        fresh = gs_reduce(second, gs, 3, f"absorb bead {bead}")
        shifted = np.zeros((q_x.shape[0], 3 * nb))
        shifted[:, 3 * (lo - new_lo):3 * (lo - new_lo) + q_x.shape[1]] = q_x
        return np.vstack([fresh, shifted])

    node_at = {}
    for node in tree.nodes:
        node_at[(node.start, node.stop)] = node

    def process(lo: int, hi: int) -> np.ndarray:
        node = node_at[(lo, hi)]
        if node.n_beads <= 5:
            return base(lo, hi)
        left, right = (tree.nodes[c] for c in node.children)
        if left.n_beads >= 3 and right.n_beads >= 3:
            return merge(process(left.start, left.stop),
                         lo, right.start, hi)
        small, big = (left, right) if left.n_beads < 3 else (right, left)
        rows = process(big.start, big.stop)
        cur_lo, cur_hi = big.start, big.stop
        beads = (range(small.stop - 1, small.start - 1, -1)
                 if small.stop == big.start else range(small.start, small.stop))
        for bead in beads:
            rows = absorb(rows, cur_lo, cur_hi, bead)
            cur_lo, cur_hi = min(cur_lo, bead), max(cur_hi, bead + 1)
        return rows

    qtilde = process(0, n)
    gs = _ClassicalGS(3 * n)
    q_z = []
    for row in _z_of(pos):
        if gs.push(row) < _GS_TOL:
            raise SingularHError("rank-deficient resultant rows at the root")
        q_z.append(gs.basis[-1])
    return np.vstack([np.array(q_z), qtilde])


def max_abs_gram_deviation(q: np.ndarray, block: int = 768) -> float:
    """max |Q Q^T - I| computed in row blocks (keeps memory flat)."""
    worst = 0.0
    m = q.shape[0]
    for i0 in range(0, m, block):
        g = q[i0:i0 + block] @ q.T
        rows = g.shape[0]
        g[np.arange(rows), i0 + np.arange(rows)] -= 1.0
        worst = max(worst, float(np.abs(g).max()))
    return worst


def body_report(model: BeadModel, seed: int = 0, dense_guard: int = 6000) -> dict:
    """One orthogonality-quality row for a single body (None = skipped)."""
    n = model.n
    row = {"n": n, "qqt": None, "qtq": None, "qv_dev": None,
           "qtv_dev": None, "roundtrip_qtq": None, "roundtrip_qqt": None}
    if n < 2:
        return row
    tree = build_tree(model)
    factors = factor_all(tree)
    hq = generate_explicit_q(tree, factors)
    rng = np.random.default_rng([seed, n])
    v = rng.normal(size=3 * n)
    w = rng.normal(size=3 * n)

    if 3 * n <= dense_guard:
        qd = hq.to_dense("tree")
        row["qqt"] = max_abs_gram_deviation(qd)
        row["qtq"] = max_abs_gram_deviation(qd.T)
    up = upward_apply(tree, factors, v)
    down = downward_apply(tree, factors, w)
    row["qv_dev"] = float(np.abs(hq.matvec(v) - up).max())
    row["qtv_dev"] = float(np.abs(hq.rmatvec(w) - down).max())
    row["roundtrip_qtq"] = float(np.abs(downward_apply(tree, factors, up) - v).max())
    row["roundtrip_qqt"] = float(np.abs(upward_apply(tree, factors, down) - w).max())
    return row


REPORT_COLUMNS = ("n", "qqt", "qtq", "qv_dev", "qtv_dev",
                  "roundtrip_qtq", "roundtrip_qqt")


def orthogonality_report(n_values, seed: int = 0, kind: str = "uniform",
                         dense_guard: int = 6000) -> list[dict]:
    """Orthogonality-quality rows for generated clouds at each n."""
    rows = []
    for n in n_values:
        model = BeadModel(make_cloud(kind, int(n), seed))
        rows.append(body_report(model, seed=seed, dense_guard=dense_guard))
    return rows


def report_to_csv(rows) -> str:
    """Render report rows byte-stably; skipped cells become 'na'."""
    lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        cells = [str(row["n"])]
        cells += ["na" if row[c] is None else f"{row[c]:.17e}"
                  for c in REPORT_COLUMNS[1:]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
