"""Matrix-free application of Q and Q^T in O(n) per vector.

Upward pass (Q @ v): each leaf turns its force into the 6-long info vector
[f; 0]; each internal node contracts its children's info vectors through
its stored orthogonal mixer, emitting its residue coefficients.  Downward
pass (Q^T @ w): the exact adjoint — the root's 6 coefficients seed a
6-long generalized-velocity vector that splits through the transposed
mixers until each leaf reads off its bead velocity.

Spectral layout (shared bit-exactly by both passes and by the explicit
rows): entries [0:6] hold the root info vector, followed by the nodes'
residue coefficients in postorder emission order.  Public vectors are in
original bead order; the tree permutation is applied only at the boundary.
Both passes accept a single vector (3n,) or a batch (3n, k).

All functions here are pure given the factor table, so concurrent
applications over one tree are safe.
"""

from __future__ import annotations

import numpy as np

from .counting import tick
from .errors import BodyTooSmallError, LengthMismatchError
from .factor import FactorTable, NodeCase, factor_all
from .model import BeadModel, MultiBodyModel
from .tree import BodyTree, build_tree

_MERGE_FLOPS = {NodeCase.BEAD_BEAD: 42, NodeCase.RIGID_BEAD: 114, NodeCase.GENERAL: 204}


def leaf_infoset(f) -> np.ndarray:
    """Info vector of a single bead: [f; 0] (centroid at the bead itself)."""
    f = np.asarray(f, dtype=float)
    m = np.zeros((6,) + f.shape[1:])
    m[:3] = f
    return m


def merge_infosets(factor, m_x, m_y):
    """Combine the children's info vectors into the parent's, plus the
    parent's residue coefficients (length residue_rows).

    ``m_x``/``m_y`` are the info vectors of the formula-x/-y children and
    may carry trailing batch dimensions of identical shape.
    """
    a, b = factor.ratios
    t = b * m_x[:3] - a * m_y[:3]
    m_p = np.empty_like(m_x)
    m_p[:3] = a * m_x[:3] + b * m_y[:3]
    case = factor.case
    tick(_MERGE_FLOPS[case] * (m_x[0].size if m_x.ndim > 1 else 1))
    if case is NodeCase.BEAD_BEAD:
        m_p[3:] = factor.omega @ t
        return m_p, m_x[:0]
    if case is NodeCase.RIGID_BEAD:
        out = factor.omega @ np.concatenate([m_x[3:], t])
    else:
        out = factor.omega @ np.concatenate([m_x[3:], m_y[3:], t])
    m_p[3:] = out[:3]
    return m_p, out[3:]


def split_rvset(factor, l_p, res):
    """Adjoint of ``merge_infosets``: distribute the parent's generalized
    velocities and residue coefficients to the formula-x/-y children."""
    a, b = factor.ratios
    case = factor.case
    tick(_MERGE_FLOPS[case] * (l_p[0].size if l_p.ndim > 1 else 1))
    l_x = np.zeros_like(l_p)
    l_y = np.zeros_like(l_p)
    if case is NodeCase.BEAD_BEAD:
        tau = factor.omega.T @ l_p[3:]
    else:
        u = factor.omega.T @ np.concatenate([l_p[3:], res])
        l_x[3:] = u[:3]
        if case is NodeCase.GENERAL:
            l_y[3:] = u[3:6]
        tau = u[-3:]
    l_x[:3] = a * l_p[:3] + b * tau
    l_y[:3] = b * l_p[:3] - a * tau
    return l_x, l_y


def _as_columns(v, length, what="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape[0] != length or v.ndim > 2:
        raise LengthMismatchError(
            f"{what} has shape {v.shape}, expected ({length},) or ({length}, k)"
        )
    return v.reshape(length, -1), v.ndim == 1


def upward_apply(tree: BodyTree, factors: FactorTable, v) -> np.ndarray:
    """Q @ v in the spectral layout; O(n) constant work per node."""
    n = tree.n
    v2, single = _as_columns(v, 3 * n)
    if n == 1:
        return v2[:, 0].copy() if single else v2.copy()
    k = v2.shape[1]
    vt = v2.reshape(n, 3, k)[tree.perm]

    m = np.empty((len(tree.nodes), 6, k))
    out = np.empty((3 * n, k))
    for node in tree.nodes:  # postorder
        f = factors[node.id]
        if node.is_leaf:
            m[node.id, :3] = vt[node.start]
            m[node.id, 3:] = 0.0
            continue
        left, right = node.children
        if f.swapped:
            left, right = right, left
        m_p, res = merge_infosets(f, m[left], m[right])
        m[node.id] = m_p
        if res.shape[0]:
            off = factors.res_offsets[node.id]
            out[off:off + res.shape[0]] = res
    out[:6] = m[tree.root_id]
    return out[:, 0] if single else out


def downward_apply(tree: BodyTree, factors: FactorTable, w) -> np.ndarray:
    """Q.T @ w for a spectral-layout w; result in original bead order."""
    n = tree.n
    w2, single = _as_columns(w, 3 * n, "spectral vector")
    if n == 1:
        return w2[:, 0].copy() if single else w2.copy()
    k = w2.shape[1]

    l = np.empty((len(tree.nodes), 6, k))
    l[tree.root_id] = w2[:6]
    vt = np.empty((n, 3, k))
    for node in reversed(tree.nodes):  # parents before children
        if node.is_leaf:
            vt[node.start] = l[node.id, :3]
            continue
        f = factors[node.id]
        off = factors.res_offsets[node.id]
        res = w2[off:off + f.residue_rows]
        l_x, l_y = split_rvset(f, l[node.id], res)
        left, right = node.children
        if f.swapped:
            left, right = right, left
        l[left] = l_x
        l[right] = l_y
    out = np.empty((n, 3, k))
    out[tree.perm] = vt
    out = out.reshape(3 * n, k)
    return out[:, 0] if single else out


def qtilde_apply(tree: BodyTree, factors: FactorTable, v) -> np.ndarray:
    """Complement rows only: drop the leading 6 spectral entries of Q @ v."""
    if tree.n < 2:
        raise BodyTooSmallError("complement undefined for a single bead")
    return upward_apply(tree, factors, v)[6:]


def qtilde_transpose_apply(tree: BodyTree, factors: FactorTable, g) -> np.ndarray:
    """Q~^T @ g: downward pass seeded with a zero root vector."""
    n = tree.n
    if n < 2:
        raise BodyTooSmallError("complement undefined for a single bead")
    g2, single = _as_columns(g, 3 * n - 6, "complement vector")
    w = np.zeros((3 * n, g2.shape[1]))
    w[6:] = g2
    out = downward_apply(tree, factors, w)
    return out[:, 0] if single else out


class BodyOperator:
    """Fitted single-body operator: tree + factors built once, then O(n)
    applications of Q, Q^T and the complement pair."""

    def __init__(self, model: BeadModel):
        self.model = model
        self.tree = build_tree(model)
        self.factors = factor_all(self.tree)

    @property
    def n(self) -> int:
        return self.tree.n

    def qv(self, v):
        return upward_apply(self.tree, self.factors, v)

    def qtv(self, w):
        return downward_apply(self.tree, self.factors, w)

    def qtilde_v(self, v):
        return qtilde_apply(self.tree, self.factors, v)

    def qtilde_tv(self, g):
        return qtilde_transpose_apply(self.tree, self.factors, g)

    def scipy_operator(self, complement: bool = False):
        """Expose Q or Q~ as a scipy LinearOperator (matvec/rmatvec)."""
        from scipy.sparse.linalg import LinearOperator

        dim = 3 * self.n
        if complement:
            return LinearOperator((dim - 6, dim), matvec=self.qtilde_v,
                                  rmatvec=self.qtilde_tv)
        return LinearOperator((dim, dim), matvec=self.qv, rmatvec=self.qtv)


_OP_NAMES = ("qv", "qtv", "qtilde_v", "qtilde_tv")


class MultiBodyOperator:
    """Block-diagonal operator over an ordered set of bodies.

    Each body block is applied independently, so outputs equal the
    concatenation of per-body runs bit-exactly.
    """

    def __init__(self, model: MultiBodyModel):
        self.model = model
        self.bodies = [BodyOperator(b) for b in model]

    def _lengths(self, op: str):
        full = [3 * b.n for b in self.bodies]
        if op in ("qv", "qtv"):
            return full, full
        for b in self.bodies:
            if b.n < 2:
                raise BodyTooSmallError(
                    "complement operators need every body to have >= 2 beads"
                )
        comp = [3 * b.n - 6 for b in self.bodies]
        return (full, comp) if op == "qtilde_v" else (comp, full)

    def apply(self, op: str, v) -> np.ndarray:
        if op not in _OP_NAMES:
            raise ValueError(f"op must be one of {_OP_NAMES}, got {op!r}")
        in_lens, out_lens = self._lengths(op)
        v2, single = _as_columns(v, sum(in_lens))
        chunks = []
        pos = 0
        for body, ln in zip(self.bodies, in_lens):
            block = v2[pos:pos + ln]
            pos += ln
            chunks.append(getattr(body, op)(block))
        out = np.concatenate(chunks, axis=0)
        return out[:, 0] if single else out


def multibody_apply(model: MultiBodyModel, op: str, v) -> np.ndarray:
    """One-shot block-diagonal application; see MultiBodyOperator."""
    return MultiBodyOperator(model).apply(op, v)
