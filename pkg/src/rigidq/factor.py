"""Per-node orthogonality-preserving factorizations over the body tree.

For a node p with n beads, let E_n denote the 3 x 3n row block
(1/sqrt(n)) * [I I ... I].  About its own centroid, p's resultant matrix
factors as

    Z_p = [[sqrt(n) I, 0], [0, t22]] @ [E_n; U]

where [E_n; U] has orthonormal rows (U may be rank deficient through t22,
never through loss of orthogonality).  An internal node combines its
children's factors through one small LQ decomposition

    A = [t | 0] @ omega,    omega orthogonal (3x3, 6x6 or 9x9),

where A couples the children's t22 blocks with the centroid-shift skews.
The same omega both emits the node's new orthonormal rows (its residue
block) and drives the constant-work merge/split contractions of the
matrix-free passes.  Only three node shapes occur:

* two single beads       -> closed form, 3x3 orthogonal mixer, no residue;
* multi-bead + bead      -> 6x6 mixer, 3 residue rows;
* multi-bead + multi-bead-> 9x9 mixer, 6 residue rows.

Row convention for the full orthogonal matrix Q: rows 1-6 are the root's
[E_n; U]; the remaining 3n-6 rows are the nodes' residue blocks in
postorder emission order.  Everything here is pure and immutable once
computed; sibling subtrees are independent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .counting import matmul_flops, qr_flops, tick
from .errors import SizeGuardError, TooSmallError
from .model import skew
from .tree import BodyTree

DENSE_GUARD = 6000  # largest 3n materialize_dense accepts by default


class NodeCase(enum.Enum):
    LEAF = "leaf"
    BEAD_BEAD = "bead_bead"
    RIGID_BEAD = "rigid_bead"
    GENERAL = "general"


_RESIDUE_ROWS = {
    NodeCase.LEAF: 0,
    NodeCase.BEAD_BEAD: 0,
    NodeCase.RIGID_BEAD: 3,
    NodeCase.GENERAL: 6,
}


@dataclass
class NodeFactor:
    """Compressed factorization of one tree node.

    ``n_x``/``n_y`` are bead counts in formula roles: for RIGID_BEAD the
    multi-bead child always plays x.  ``swapped`` records that the formula-x
    child is the right tree child, so the matrix-free passes and the row
    expansion can translate between tree order and formula order.
    """

    case: NodeCase
    n: int
    n_x: int
    n_y: int
    t22: np.ndarray
    omega: np.ndarray | None   # 3x3 / 6x6 / 9x9 orthogonal mixer, None for leaves
    r21: np.ndarray | None = None  # skew shift of the formula-x child centroid
    s21: np.ndarray | None = None  # skew shift of the formula-y child centroid
    swapped: bool = False

    @property
    def residue_rows(self) -> int:
        return _RESIDUE_ROWS[self.case]

    @property
    def ratios(self) -> tuple[float, float]:
        """(sqrt(n_x/n), sqrt(n_y/n)) weights of the two formula children."""
        return np.sqrt(self.n_x / self.n), np.sqrt(self.n_y / self.n)


def small_lq(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """LQ-decompose a 3 x k matrix: a == [t | 0] @ omega.

    t is 3x3 lower triangular with nonnegative diagonal (sign convention for
    cross-platform reproducibility); omega is k x k orthogonal.  Computed as
    Householder QR of a.T, so orthogonality of omega holds to machine
    precision regardless of the rank of a.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[1]
    if not a.any():
        return np.zeros((3, 3)), np.eye(k)
    tick(qr_flops(k, 3))
    q, r = np.linalg.qr(a.T, mode="complete")
    s = np.sign(np.diag(r[:3, :3]))
    s[s == 0] = 1.0
    t = (r[:3, :3] * s[:, None]).T
    omega = q.T
    omega[:3] *= s[:, None]
    return t, omega


def child_shift(parent_centroid, child_centroid) -> np.ndarray:
    """Skew matrix moving a child's torque reference point to the parent centroid."""
    return skew(np.asarray(child_centroid, float) - np.asarray(parent_centroid, float))


def mean_block(n: int) -> np.ndarray:
    """E_n: the normalized 3 x 3n block of stacked identities."""
    return np.tile(np.eye(3), n) / np.sqrt(n)


def factor_leaf() -> NodeFactor:
    return NodeFactor(NodeCase.LEAF, 1, 0, 0, np.zeros((3, 3)), None)


# cyclic frames: index of the component playing the c role -> (a, b, c) source axes
_CYCLIC = {2: (0, 1, 2), 0: (1, 2, 0), 1: (2, 0, 1)}


def factor_bead_bead(offset) -> NodeFactor:
    """Closed-form factor for a parent of two single beads at +-offset.

    The closed form is singular when the c-role component pair (b, c)
    vanishes, so the coordinate frame is cyclically rotated to put the
    largest-magnitude component of ``offset`` in the c role; a final 3x3 LQ
    restores the lower-triangular t22 in the original frame.  t22 has rank
    two (third column zero) but the mixer stays fully orthogonal.
    """
    d = np.asarray(offset, dtype=float)
    axes = _CYCLIC[int(np.argmax(np.abs(d)))]
    a, b, c = d[list(axes)]

    bc2 = b * b + c * c
    ell = a * a + bc2
    t_prime = np.array([
        [np.sqrt(2.0 * bc2), 0.0, 0.0],
        [-np.sqrt(2.0) * a * b / np.sqrt(bc2), c * np.sqrt(2.0 * ell / bc2), 0.0],
        [-np.sqrt(2.0) * a * c / np.sqrt(bc2), -b * np.sqrt(2.0 * ell / bc2), 0.0],
    ])
    u_half = np.array([
        [0.0, -c, b],
        [bc2, -a * b, -a * c],
        [-a, -b, -c],
    ]) / np.sqrt(np.array([2.0 * bc2, 2.0 * ell * bc2, 2.0 * ell]))[:, None]

    # back to the original frame (P has rows e_axes, det +1):
    # torque rows transform by P^T on the left, bead columns by P on the right
    perm = list(axes)
    m = np.empty((3, 3))
    m[perm, :] = t_prime
    g_half = np.empty((3, 3))
    g_half[:, perm] = u_half

    t_raw, om3 = small_lq(m)
    g = np.sqrt(2.0) * (om3 @ g_half)  # orthogonal: acts on the mixing slot
    tick(matmul_flops(3, 3, 3))
    return NodeFactor(NodeCase.BEAD_BEAD, 2, 1, 1, t_raw, g,
                      r21=skew(d), s21=skew(-d))


def factor_rigid_bead(t22_x, r21, s21, n_x: int, swapped: bool = False) -> NodeFactor:
    """Factor for a multi-bead child x (t22_x, shift r21) plus one bead (shift s21)."""
    n = n_x + 1
    coupling = np.hstack([t22_x, np.sqrt(n_x * n) * np.asarray(r21, float)])
    t22, omega = small_lq(coupling)
    return NodeFactor(NodeCase.RIGID_BEAD, n, n_x, 1, t22, omega,
                      r21=np.asarray(r21, float), s21=np.asarray(s21, float),
                      swapped=swapped)


def factor_general(t22_x, t22_y, r21, s21, n_x: int, n_y: int) -> NodeFactor:
    """Factor for two multi-bead children with t22 blocks and centroid shifts."""
    n = n_x + n_y
    coupling = np.hstack([t22_x, t22_y,
                          np.sqrt(n_x * n / n_y) * np.asarray(r21, float)])
    t22, omega = small_lq(coupling)
    return NodeFactor(NodeCase.GENERAL, n, n_x, n_y, t22, omega,
                      r21=np.asarray(r21, float), s21=np.asarray(s21, float))


class FactorTable:
    """Per-node NodeFactor arena aligned with tree.nodes, plus the residue
    offsets that fix the spectral-vector layout."""

    def __init__(self, factors, tree: BodyTree):
        self.factors = factors
        self.n = tree.n
        offsets = np.zeros(len(factors), dtype=np.int64)
        pos = 6 if tree.n >= 2 else 3
        for node in tree.nodes:  # postorder = emission order
            offsets[node.id] = pos
            pos += factors[node.id].residue_rows
        self.res_offsets = offsets
        self.total_rows = pos

    def __getitem__(self, node_id: int) -> NodeFactor:
        return self.factors[node_id]

    def __len__(self):
        return len(self.factors)


def factor_all(tree: BodyTree) -> FactorTable:
    """Postorder pass filling a NodeFactor for every node."""
    pos = tree.positions
    factors: list[NodeFactor | None] = [None] * len(tree.nodes)
    for node in tree.nodes:
        if node.is_leaf:
            factors[node.id] = factor_leaf()
            continue
        left_id, right_id = node.children
        left, right = tree.nodes[left_id], tree.nodes[right_id]
        fl, fr = factors[left_id], factors[right_id]
        if left.n_beads == 1 and right.n_beads == 1:
            factors[node.id] = factor_bead_bead(pos[left.start] - node.centroid)
        elif left.n_beads == 1 or right.n_beads == 1:
            swapped = left.n_beads == 1
            rigid, bead = (right, left) if swapped else (left, right)
            f_rigid = fr if swapped else fl
            factors[node.id] = factor_rigid_bead(
                f_rigid.t22,
                child_shift(node.centroid, rigid.centroid),
                child_shift(node.centroid, bead.centroid),
                rigid.n_beads,
                swapped=swapped,
            )
        else:
            factors[node.id] = factor_general(
                fl.t22, fr.t22,
                child_shift(node.centroid, left.centroid),
                child_shift(node.centroid, right.centroid),
                left.n_beads, right.n_beads,
            )
    return FactorTable(factors, tree)


def node_rows(factor: NodeFactor, v=None, w=None) -> tuple[np.ndarray, np.ndarray]:
    """Expand one node's explicit U (3 x 3n) and residue rows from its
    children's explicit U blocks (``v`` for formula-x, ``w`` for formula-y).

    Column order is tree order, i.e. the swap of a RIGID_BEAD node is
    undone here.  Leaves need no inputs and contribute no rows.
    """
    case = factor.case
    if case is NodeCase.LEAF:
        return np.zeros((3, 3)), np.zeros((0, 3))

    a, b = factor.ratios
    n3 = 3 * factor.n
    if case is NodeCase.BEAD_BEAD:
        u = np.hstack([factor.omega, -factor.omega]) / np.sqrt(2.0)
        return u, np.zeros((0, n3))

    if case is NodeCase.RIGID_BEAD:
        stack = np.zeros((6, n3))
        stack[:3, : 3 * factor.n_x] = v
        stack[3:, : 3 * factor.n_x] = b * mean_block(factor.n_x)
        stack[3:, 3 * factor.n_x:] = -a * np.eye(3)
    else:
        stack = np.zeros((9, n3))
        stack[:3, : 3 * factor.n_x] = v
        stack[3:6, 3 * factor.n_x:] = w
        stack[6:, : 3 * factor.n_x] = b * mean_block(factor.n_x)
        stack[6:, 3 * factor.n_x:] = -a * mean_block(factor.n_y)

    tick(matmul_flops(factor.omega.shape[0], factor.omega.shape[0], n3))
    rows = factor.omega @ stack
    if factor.swapped:  # back to tree order: bead child first
        rows = np.hstack([rows[:, 3 * factor.n_x:], rows[:, : 3 * factor.n_x]])
    return rows[:3], rows[3:]


class HierQ:
    """Explicit hierarchical representation of the 3n x 3n orthogonal Q.

    ``root_rows`` holds the 6 rows [E_n; U_root]; ``blocks`` holds
    ``(node_id, column_offset, rows)`` residue blocks in emission order,
    each spanning its node's contiguous tree-order columns.  Vectors at the
    public boundary are in original bead order; ``perm`` translates.
    """

    def __init__(self, n, root_rows, blocks, perm):
        self.n = n
        self.root_rows = root_rows
        self.blocks = blocks
        self.perm = perm
        offsets = [6]
        for _, _, rows in blocks:
            offsets.append(offsets[-1] + rows.shape[0])
        self.row_offsets = offsets  # row offset of each block in Q

    @property
    def shape(self):
        return (3 * self.n, 3 * self.n)

    def _tree_order(self, v):
        v = np.asarray(v, dtype=float)
        return v.reshape(self.n, 3, -1)[self.perm].reshape(3 * self.n, -1)

    def matvec(self, v) -> np.ndarray:
        """Q @ v for v of shape (3n,) or (3n, k) in original bead order."""
        v = np.asarray(v, dtype=float)
        single = v.ndim == 1
        vt = self._tree_order(v)
        out = np.empty_like(vt)
        out[:6] = self.root_rows @ vt
        for (_, col, rows), off in zip(self.blocks, self.row_offsets):
            out[off:off + rows.shape[0]] = rows @ vt[col:col + rows.shape[1]]
        return out[:, 0] if single else out

    def rmatvec(self, w) -> np.ndarray:
        """Q.T @ w, returned in original bead order."""
        w = np.asarray(w, dtype=float)
        single = w.ndim == 1
        wt = w.reshape(3 * self.n, -1)
        vt = self.root_rows.T @ wt[:6]
        for (_, col, rows), off in zip(self.blocks, self.row_offsets):
            vt[col:col + rows.shape[1]] += rows.T @ wt[off:off + rows.shape[0]]
        out = np.empty_like(vt)
        out.reshape(self.n, 3, -1)[self.perm] = vt.reshape(self.n, 3, -1)
        return out[:, 0] if single else out

    def to_dense(self, order: str = "tree") -> np.ndarray:
        """Dense Q with columns in tree order, or original order via perm."""
        q = np.zeros(self.shape)
        q[:6] = self.root_rows
        for (_, col, rows), off in zip(self.blocks, self.row_offsets):
            q[off:off + rows.shape[0], col:col + rows.shape[1]] = rows
        if order == "original":
            out = np.empty_like(q)
            out.reshape(3 * self.n, self.n, 3)[:, self.perm] = \
                q.reshape(3 * self.n, self.n, 3)
            return out
        if order != "tree":
            raise ValueError("order must be 'tree' or 'original'")
        return q

    def float_count(self) -> int:
        return self.root_rows.size + sum(rows.size for _, _, rows in self.blocks)

    def dump(self, fp) -> None:
        """Text dump: header 'n rows', root rows, then per-block sections."""
        fp.write(f"{self.n} {3 * self.n}\n")
        for row in self.root_rows:
            fp.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        for node_id, col, rows in self.blocks:
            fp.write(f"{node_id} {col} {rows.shape[0]}\n")
            for row in rows:
                fp.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def generate_explicit_q(tree: BodyTree, factors: FactorTable | None = None) -> HierQ:
    """Explicit hierarchical Q; O(n log n) work and storage.

    Each node's explicit U is kept only until its parent consumes it, so
    peak transient storage stays proportional to the final output.
    """
    if tree.n < 2:
        raise TooSmallError("explicit Q needs at least 2 beads")
    if factors is None:
        factors = factor_all(tree)

    pending: dict[int, np.ndarray] = {}
    blocks = []
    for node in tree.nodes:
        f = factors[node.id]
        if node.is_leaf:
            pending[node.id] = np.zeros((3, 3))
            continue
        left_id, right_id = node.children
        v = pending.pop(right_id if f.swapped else left_id)
        w = pending.pop(left_id if f.swapped else right_id)
        u, residue = node_rows(f, v, w if f.case is NodeCase.GENERAL else None)
        if residue.shape[0]:
            blocks.append((node.id, 3 * node.start, residue))
        pending[node.id] = u

    u_root = pending.pop(tree.root_id)
    root_rows = np.vstack([mean_block(tree.n), u_root])
    return HierQ(tree.n, root_rows, blocks, tree.perm.copy())


def materialize_dense(q: HierQ, order: str = "tree",
                      guard: int = DENSE_GUARD) -> np.ndarray:
    """Dense 3n x 3n Q, guarded against accidental huge allocations."""
    if 3 * q.n > guard:
        raise SizeGuardError(f"3n = {3 * q.n} exceeds dense guard {guard}")
    return q.to_dense(order=order)
