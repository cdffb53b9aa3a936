"""Scikit-learn style front end.

``fit`` takes the bead positions of one rigid body, shape (n_beads, 3), and
builds the spatial tree plus per-node factors.  ``transform`` then maps
length-3n force vectors (rows of the input matrix) to their coefficients in
the fitted orthonormal basis, and ``inverse_transform`` maps coefficients
back.  With ``complement=True`` only the 3n - 6 internal-deformation
coefficients are produced, i.e. the rigid-motion resultants are projected
out.  Both directions are exact isometries up to rounding, so the estimator
composes with anything in the ecosystem expecting an orthogonal feature map.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .matfree import BodyOperator
from .model import BeadModel


def check_positions(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"positions must have shape (n_beads, 3), got {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("positions must be finite")
    return X


def check_vectors(V, length: int, what: str = "vectors"):
    """Validate a vector batch; returns (array of shape (k, length), was_1d)."""
    V = np.asarray(V, dtype=float)
    single = V.ndim == 1
    if single:
        V = V[None, :]
    if V.ndim != 2 or V.shape[1] != length:
        raise ValueError(f"{what} must have {length} columns, got shape {V.shape}")
    return V, single


class RigidBodyBasis(BaseEstimator, TransformerMixin):
    """Orthonormal basis of bead-force space adapted to one rigid body.

    Parameters
    ----------
    complement : bool, default False
        If True, transform returns only the 3n - 6 coefficients orthogonal
        to the body's net-force/net-torque row space.
    """

    def __init__(self, complement: bool = False):
        self.complement = complement

    def fit(self, X, y=None):
        X = check_positions(X)
        if self.complement and X.shape[0] < 2:
            raise ValueError("complement basis needs at least 2 beads")
        self.operator_ = BodyOperator(BeadModel(X))
        self.n_beads_ = self.operator_.n
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, V) -> np.ndarray:
        check_is_fitted(self, "operator_")
        V, single = check_vectors(V, 3 * self.n_beads_, "force vectors")
        op = self.operator_.qtilde_v if self.complement else self.operator_.qv
        out = op(V.T).T
        return out[0] if single else out

    def inverse_transform(self, W) -> np.ndarray:
        check_is_fitted(self, "operator_")
        dim = 3 * self.n_beads_ - 6 if self.complement else 3 * self.n_beads_
        W, single = check_vectors(W, dim, "coefficient vectors")
        op = self.operator_.qtilde_tv if self.complement else self.operator_.qtv
        out = op(W.T).T
        return out[0] if single else out
