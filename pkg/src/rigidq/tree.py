"""Adaptive binary spatial tree over one body's beads.

The root box is the smallest axis-aligned cube containing all beads
(expanded by a tiny relative margin so boundary beads fall strictly inside).
Boxes are bisected at their spatial midpoint cycling through the z, y, x
axes; a bisection whose one side would be empty only shrinks the box (the
empty half is pruned), so every stored internal node has exactly two
children and every leaf holds exactly one bead.

Nodes are stored in an arena in postorder (children before parents, root
last), so ``tree.nodes`` doubles as a postorder schedule for the upward
pass and ``reversed(tree.nodes)`` as one for the downward pass.  Vectors
inside the tree are kept in tree (leaf) order; ``perm`` maps tree order to
the original bead order and is applied only at public API boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DuplicateBeadsError
from .model import BeadModel

# ghost-level split axes: z first, then y, then x
_AXIS_CYCLE = (2, 1, 0)

DEFAULT_MAX_DEPTH = 96  # 3 x 32 octree levels; deeper implies near-coincident beads


@dataclass
class TreeNode:
    id: int
    start: int              # half-open bead range [start, stop) in tree order
    stop: int
    children: tuple | None  # (left_id, right_id) or None for a leaf
    centroid: np.ndarray
    box: np.ndarray         # (2, 3) lower/upper bounds of the node's cell
    split_axis: int | None  # axis of the final successful bisection
    depth: int              # ghost depth at which the node was created

    @property
    def n_beads(self) -> int:
        return self.stop - self.start

    @property
    def is_leaf(self) -> bool:
        return self.children is None


class BodyTree:
    """Arena of TreeNode in postorder plus the induced bead permutation."""

    def __init__(self, nodes, root_id, perm, positions):
        self.nodes = nodes
        self.root_id = root_id
        self.perm = perm              # tree order -> original order
        self.positions = positions    # (n, 3), tree order
        self.n = positions.shape[0]

    @property
    def root(self) -> TreeNode:
        return self.nodes[self.root_id]

    def depth(self) -> int:
        return max(node.depth for node in self.nodes)

    def __len__(self):
        return len(self.nodes)


def build_tree(model: BeadModel, max_depth: int = DEFAULT_MAX_DEPTH) -> BodyTree:
    """Build the binary spatial tree and record the leaf-order permutation."""
    pos = model.positions
    n = model.n

    lo, hi = pos.min(axis=0), pos.max(axis=0)
    center = (lo + hi) / 2.0
    half = float((hi - lo).max()) * (1.0 + 1e-9) / 2.0
    root_box = np.array([center - half, center + half])

    nodes: list[TreeNode] = []
    leaf_seq: list[int] = []

    def build(idx: np.ndarray, box: np.ndarray, depth: int) -> int:
        if idx.size == 1:
            start = len(leaf_seq)
            leaf_seq.append(int(idx[0]))
            node = TreeNode(len(nodes), start, start + 1, None,
                            pos[idx[0]].copy(), box, None, depth)
            nodes.append(node)
            return node.id

        # find the first bisection with beads on both sides, pruning empty halves
        cell = box.copy()
        d = depth
        while True:
            if d >= max_depth:
                raise DuplicateBeadsError(
                    f"split depth {d} exceeded without separating "
                    f"{idx.size} beads (near-coincident input)"
                )
            axis = _AXIS_CYCLE[d % 3]
            mid = 0.5 * (cell[0, axis] + cell[1, axis])
            low = pos[idx, axis] <= mid  # ties go to the lower half
            n_low = int(low.sum())
            if n_low == idx.size:
                cell[1, axis] = mid
            elif n_low == 0:
                cell[0, axis] = mid
            else:
                break
            d += 1

        low_box = cell.copy()
        low_box[1, axis] = mid
        high_box = cell.copy()
        high_box[0, axis] = mid

        start = len(leaf_seq)
        left = build(idx[low], low_box, d + 1)
        right = build(idx[~low], high_box, d + 1)
        nl = nodes[left].n_beads
        nr = nodes[right].n_beads
        c = (nl * nodes[left].centroid + nr * nodes[right].centroid) / (nl + nr)
        node = TreeNode(len(nodes), start, len(leaf_seq), (left, right),
                        c, box, axis, depth)
        nodes.append(node)
        return node.id

    root_id = build(np.arange(n), root_box, 0)
    perm = np.array(leaf_seq)
    return BodyTree(nodes, root_id, perm, pos[perm].copy())


def validate_tree(tree: BodyTree) -> list[str]:
    """Check the structural invariants; return a list of violations (empty = ok)."""
    problems = []
    n = tree.n

    if len(tree.nodes) != 2 * n - 1:
        problems.append(f"node count {len(tree.nodes)} != 2n-1 = {2 * n - 1}")

    seen = np.sort(tree.perm)
    if tree.perm.shape != (n,) or not np.array_equal(seen, np.arange(n)):
        problems.append("perm is not a bijection on 0..n-1")

    for node in tree.nodes:
        if node.is_leaf:
            if node.n_beads != 1:
                problems.append(f"node {node.id}: leaf holds {node.n_beads} beads")
            continue
        left, right = node.children
        ln, rn = tree.nodes[left], tree.nodes[right]
        if node.n_beads != ln.n_beads + rn.n_beads:
            problems.append(f"node {node.id}: n_beads != sum of children")
        if (ln.start, rn.stop) != (node.start, node.stop) or ln.stop != rn.start:
            problems.append(f"node {node.id}: children do not tile its bead range")
        direct = tree.positions[node.start:node.stop].mean(axis=0)
        scale = max(1.0, float(np.abs(tree.positions).max()))
        if np.abs(node.centroid - direct).max() > 1e-13 * scale:
            problems.append(f"node {node.id}: centroid drifts from direct mean")
    return problems


def dump_tree(tree: BodyTree, fp) -> None:
    """One line per node: id n_beads centroid children (-1 for absent)."""
    for node in tree.nodes:
        c0, c1 = node.children if node.children else (-1, -1)
        cx, cy, cz = node.centroid
        fp.write(f"{node.id} {node.n_beads} {cx:.17g} {cy:.17g} {cz:.17g} {c0} {c1}\n")
