"""rigidq: hierarchical orthogonal bases for rigid-body bead models.

Given a rigid body discretized into n beads, this package builds, in
O(n log n) time and storage, an explicit 3n x 3n orthogonal matrix whose
first 6 rows span the body's net-force/net-torque row space and whose
remaining 3n - 6 rows span its orthogonal complement -- and applies either
factor (or its transpose) matrix-free in O(n) per vector, with accuracy at
machine-precision level independent of how degenerate the bead geometry is.
"""

from .clouds import grid_cloud, line_cloud, make_cloud, shell_cloud, uniform_cloud
from .errors import (BodyTooSmallError, DuplicateBeadsError,
                     LengthMismatchError, RigidQError, ShapeMismatchError,
                     SingularHError, SizeGuardError, TooSmallError)
from .estimator import RigidBodyBasis
from .factor import (FactorTable, HierQ, NodeCase, NodeFactor, child_shift,
                     factor_all, factor_bead_bead, factor_general, factor_leaf,
                     factor_rigid_bead, generate_explicit_q, materialize_dense,
                     mean_block, node_rows, small_lq)
from .io import load_beads, load_vector, save_beads, save_vector
from .matfree import (BodyOperator, MultiBodyOperator, downward_apply,
                      leaf_infoset, merge_infosets, multibody_apply,
                      qtilde_apply, qtilde_transpose_apply, split_rvset,
                      upward_apply)
from .model import (BeadModel, MultiBodyModel, ZMatrix, assemble_z, centroid,
                    skew)
from .oracle import (DenseComplement, body_report, dense_complement,
                     naive_divide_conquer, orthogonality_report,
                     projector_distance, report_to_csv)
from .tree import BodyTree, TreeNode, build_tree, dump_tree, validate_tree

__version__ = "0.1.0"

__all__ = [
    "BeadModel", "MultiBodyModel", "ZMatrix", "assemble_z", "centroid", "skew",
    "BodyTree", "TreeNode", "build_tree", "validate_tree", "dump_tree",
    "NodeCase", "NodeFactor", "FactorTable", "HierQ", "small_lq", "child_shift",
    "mean_block", "factor_leaf", "factor_bead_bead", "factor_rigid_bead",
    "factor_general", "factor_all", "node_rows", "generate_explicit_q",
    "materialize_dense",
    "leaf_infoset", "merge_infosets", "split_rvset", "upward_apply",
    "downward_apply", "qtilde_apply", "qtilde_transpose_apply",
    "multibody_apply", "BodyOperator", "MultiBodyOperator",
    "DenseComplement", "dense_complement", "projector_distance",
    "naive_divide_conquer", "orthogonality_report", "body_report",
    "report_to_csv",
    "make_cloud", "uniform_cloud", "shell_cloud", "line_cloud", "grid_cloud",
    "RigidBodyBasis",
    "load_beads", "save_beads", "load_vector", "save_vector",
    "RigidQError", "DuplicateBeadsError", "TooSmallError", "SizeGuardError",
    "LengthMismatchError", "BodyTooSmallError", "ShapeMismatchError",
    "SingularHError",
]
