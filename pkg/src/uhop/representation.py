"""Constructive check that orthonormal features let softmax attention realize any positive
column-stochastic matrix.

Given features ``X`` (``D x M``) with orthonormal columns, set
``W_KQ = log(P D0) / beta`` (elementwise log) and factor it as
``W_K~ = [I; 0]``, ``W_Q~ = [W_KQ; 0]``. Then ``W_K = W_K~ X^+`` and
``W_Q = W_Q~ X^+`` give ``(W_K X)^T (W_Q X) = W_KQ`` and the column-wise
softmax of ``beta W_KQ`` is ``P`` for any positive diagonal ``D0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import ortho_group

from .errors import DimensionError, RankError
from .kernel import FeatureMap
from .patterns import PatternSet

GRAM_RTOL = 1e-10


@dataclass(frozen=True)
class StochasticMatrix:
    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionError(f"P must be square, got shape {P.shape}")
        if not np.all(P > 0):
            raise ValueError("P must be strictly positive")
        if np.max(np.abs(P.sum(axis=0) - 1.0)) > 1e-12:
            raise ValueError("columns of P must sum to one")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def M(self) -> int:
        return self.P.shape[0]


def random_stochastic_matrix(M: int, rng: np.random.Generator) -> StochasticMatrix:
    P = rng.uniform(0.05, 1.0, size=(M, M))
    P /= P.sum(axis=0, keepdims=True)
    # one more pass pins column sums to the last ulp
    P /= P.sum(axis=0, keepdims=True)
    return StochasticMatrix(P)


def orthogonalize_features(ps: PatternSet, seed: int) -> FeatureMap:
    """Square invertible ``W`` whose features ``W xi_mu`` are orthonormal.

    With ``Xi = Q R`` (thin QR) and ``Q_perp`` completing ``Q`` to a basis,
    ``[R^{-1} Q^T; Q_perp^T]`` sends ``xi_mu`` to ``e_mu``; a seeded random
    rotation on the left keeps the columns orthonormal.
    """
    d, M = ps.d, ps.M
    if M > d:
        raise RankError(f"{M} memories cannot have orthonormal features in dimension {d}")
    s = np.linalg.svd(ps.data, compute_uv=False)
    if s[-1] ** 2 <= GRAM_RTOL * s[0] ** 2:
        raise RankError("memory columns are linearly dependent")
    Q_full, R_full = np.linalg.qr(ps.data, mode="complete")
    R = R_full[:M]
    top = np.linalg.solve(R, Q_full[:, :M].T)
    W = np.vstack([top, Q_full[:, M:].T])
    rotation = ortho_group.rvs(d, random_state=np.random.default_rng(seed)) if d > 1 else np.eye(1)
    return FeatureMap(rotation @ W)


def column_softmax(S: np.ndarray) -> np.ndarray:
    e = np.exp(S - S.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def realize_attention(features, P: StochasticMatrix, beta: float, D0=None):
    """Build ``(W_K, W_Q)`` whose attention over ``features`` reproduces ``P``."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != P.M:
        raise DimensionError(f"features of shape {X.shape} do not match P of size {P.M}")
    D, M = X.shape
    if M > D:
        raise DimensionError(f"need at least as many feature dimensions ({D}) as memories ({M})")
    D0 = np.eye(M) if D0 is None else np.asarray(D0, dtype=np.float64)
    if D0.shape != (M, M) or np.any(np.diag(D0) <= 0) or np.any(D0 - np.diag(np.diag(D0))):
        raise DimensionError("D0 must be a positive diagonal M x M matrix")
    W_KQ = np.log(P.P @ D0) / beta
    left_inv = np.linalg.pinv(X)
    K_tilde = np.eye(D, M)
    Q_tilde = np.zeros((D, M))
    Q_tilde[:M] = W_KQ
    return K_tilde @ left_inv, Q_tilde @ left_inv


def realized_attention(W_K, W_Q, features, beta: float) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    return column_softmax(beta * (W_K @ X).T @ (W_Q @ X))


def verify_realization(W_K, W_Q, features, P: StochasticMatrix, beta: float) -> float:
    """Largest absolute deviation between the realized attention matrix and ``P``."""
    X = np.asarray(features, dtype=np.float64)
    W_K = np.asarray(W_K)
    W_Q = np.asarray(W_Q)
    if W_K.shape[1] != X.shape[0] or W_Q.shape[1] != X.shape[0] or X.shape[1] != P.M:
        raise DimensionError("W_K, W_Q, features and P have inconsistent shapes")
    return float(np.max(np.abs(realized_attention(W_K, W_Q, X, beta) - P.P)))
