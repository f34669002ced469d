"""Separation losses over a memory set and the Stage-I optimizer.

All losses average over ordered pairs of distinct memories; diagonal pairs
are excluded.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.spatial.distance import pdist
from scipy.special import logsumexp, softmax

from ._io import text_sink
from .errors import DegenerateSet, LineSearchFailure
from .kernel import FeatureMap, kernel_eval, normalize_rows
from .patterns import PatternSet

LOSS_KINDS = ("avg", "max", "dl")
MAX_HALVINGS = 30
# pairs within this many multiples of t of the largest pair term count as active
MAX_ACTIVE_REL = 5e-3


def _require_pairs(ps: PatternSet) -> None:
    if ps.M < 2:
        raise DegenerateSet("separation losses need at least two memories")


def _pair_index(M: int):
    """Row/column indices of the condensed (pdist) ordering of unordered pairs."""
    return np.triu_indices(M, k=1)


def _features(fm: FeatureMap, ps: PatternSet, normalized: bool):
    """Feature matrix ``W Xi`` (columns optionally scaled to unit length) and the raw norms."""
    F = fm.W @ ps.data
    if not normalized:
        return F, None
    norms = np.linalg.norm(F, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return F / safe, safe


def pairwise_ell(fm: FeatureMap, ps: PatternSet, t: float, normalized: bool = False) -> np.ndarray:
    """``ell_phi`` for every unordered pair, in ``pdist`` order.

    With ``normalized`` the features are first projected onto the unit sphere,
    so each term equals ``2t <f_a, f_b> - 2t``.
    """
    _require_pairs(ps)
    F, _ = _features(fm, ps, normalized)
    return -t * pdist(F.T, "sqeuclidean")


def avg_separation_loss(fm: FeatureMap, ps: PatternSet, t: float, normalized: bool = False) -> float:
    ell = pairwise_ell(fm, ps, t, normalized)
    # each unordered pair appears twice among ordered pairs, so the mean is unchanged
    return float(logsumexp(ell) - np.log(ell.size))


def max_separation_loss(fm: FeatureMap, ps: PatternSet, t: float, normalized: bool = False) -> float:
    return float(pairwise_ell(fm, ps, t, normalized).max())


def dl_pair_value(fm: FeatureMap, t: float, u, v) -> float:
    """Pairwise term ``2t (K(u, v)^2 - 1)`` of the deep-learning separation loss."""
    return 2.0 * t * (kernel_eval(fm, u, v) ** 2 - 1.0)


def _dl_terms(F: np.ndarray, t: float):
    K = F.T @ F
    off = ~np.eye(F.shape[1], dtype=bool)
    return K, off, 2.0 * t * (K**2 - 1.0)


def dl_separation_loss(fm: FeatureMap, ps: PatternSet, t: float, normalized: bool = False) -> float:
    _require_pairs(ps)
    F, _ = _features(fm, ps, normalized)
    _, off, vals = _dl_terms(F, t)
    return float(logsumexp(vals[off]) - np.log(off.sum()))


def separation_loss(fm: FeatureMap, ps: PatternSet, t: float, kind: str = "avg", normalized: bool = False) -> float:
    if kind == "avg":
        return avg_separation_loss(fm, ps, t, normalized)
    if kind == "max":
        return max_separation_loss(fm, ps, t, normalized)
    if kind == "dl":
        return dl_separation_loss(fm, ps, t, normalized)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


def _laplacian(M: int, pair_weights: np.ndarray) -> np.ndarray:
    S = np.zeros((M, M))
    i, j = _pair_index(M)
    S[i, j] = pair_weights
    S = S + S.T
    return np.diag(S.sum(axis=1)) - S


def loss_gradient(fm: FeatureMap, ps: PatternSet, t: float, kind: str = "avg", normalized: bool = False) -> np.ndarray:
    """Analytic gradient of the chosen separation loss with respect to ``W``.

    For the raw average loss this is ``-2t W sum_p s_p d_p d_p^T`` with
    ``d_p`` the pair differences and ``s_p`` the softmax of the pair terms.
    """
    _require_pairs(ps)
    F, norms = _features(fm, ps, normalized)
    # gradient with respect to the (possibly normalized) feature columns
    if kind == "avg":
        weights = softmax(-t * pdist(F.T, "sqeuclidean"))
        G = -2.0 * t * F @ _laplacian(ps.M, weights)
    elif kind == "max":
        ell = -t * pdist(F.T, "sqeuclidean")
        # ties share the subgradient evenly
        hit = (ell == ell.max()).astype(np.float64)
        G = -2.0 * t * F @ _laplacian(ps.M, hit / hit.sum())
    elif kind == "dl":
        K, off, vals = _dl_terms(F, t)
        s = np.zeros_like(K)
        s[off] = softmax(vals[off])
        C = 4.0 * t * s * K
        G = F @ (C + C.T)
    else:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    if normalized:
        G = (G - F * np.sum(F * G, axis=0)) / norms
    return G @ ps.data.T


def _pair_gradients(F, norms, ps: PatternSet, t: float, pairs) -> np.ndarray:
    """Gradient of each selected pair term of the max loss, flattened into columns."""
    cols = []
    for a in pairs:
        w = np.zeros(ps.M * (ps.M - 1) // 2)
        w[a] = 1.0
        G = -2.0 * t * F @ _laplacian(ps.M, w)
        if norms is not None:
            G = (G - F * np.sum(F * G, axis=0)) / norms
        cols.append((G @ ps.data.T).ravel())
    return np.array(cols).T


def max_descent_direction(fm: FeatureMap, ps: PatternSet, t: float, normalized: bool = False) -> np.ndarray:
    """Min-norm element of the convex hull of the nearly active pair gradients.

    The plain subgradient of a single top pair is rarely a descent direction once
    several pairs are close to the maximum, so the backtracking stalls. Taking
    every pair within ``MAX_ACTIVE_REL * t`` of the top and solving the small
    simplex-constrained least-squares problem gives a usable direction.
    """
    _require_pairs(ps)
    F, norms = _features(fm, ps, normalized)
    ell = -t * pdist(F.T, "sqeuclidean")
    active = np.flatnonzero(ell >= ell.max() - MAX_ACTIVE_REL * t)
    A = _pair_gradients(F, norms, ps, t, active)
    if active.size == 1:
        return A[:, 0].reshape(fm.W.shape)
    # |A lam| = |B lam| with B the symmetric square root of the Gram matrix
    vals, vecs = np.linalg.eigh(A.T @ A)
    B = np.sqrt(np.clip(vals, 0.0, None))[:, None] * vecs.T
    rho = 1e3 * max(np.sqrt(vals.max()), 1.0)
    lam, _ = nnls(np.vstack([B, rho * np.ones(active.size)]), np.r_[np.zeros(active.size), rho])
    lam /= lam.sum()
    return (A @ lam).reshape(fm.W.shape)


def _descent_direction(fm: FeatureMap, ps: PatternSet, cfg) -> np.ndarray:
    if cfg.loss_kind == "max":
        return max_descent_direction(fm, ps, cfg.t, cfg.normalize_features)
    return loss_gradient(fm, ps, cfg.t, cfg.loss_kind, cfg.normalize_features)


@dataclass(frozen=True)
class Stage1Config:
    N: int = 0
    gamma: float = 0.01
    t: float = 2.0
    line_search: bool = True
    loss_kind: str = "avg"
    row_norm: str = "unit"
    normalize_features: bool = True

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be nonnegative")
        if self.gamma <= 0 or self.t <= 0:
            raise ValueError("gamma and t must be positive")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")


def stage1_optimize(fm: FeatureMap, ps: PatternSet, cfg: Stage1Config):
    """Run ``N`` gradient steps on the separation loss, then normalize the rows of ``W`` once.

    With ``line_search`` every step starts at ``gamma`` and is halved (up to 30
    times) until the loss does not increase. Returns the normalized map and the
    ``N + 1`` loss values seen along the way (before normalization).

    ``normalize_features`` evaluates the loss on unit-length features; the raw
    loss is unbounded below in the scale of ``W``, so plain descent on it mostly
    inflates ``W`` along a few difference directions. The max loss descends
    along ``max_descent_direction`` rather than a single-pair subgradient.
    """
    _require_pairs(ps)
    W = np.array(fm.W)
    current = FeatureMap(W)
    loss = separation_loss(current, ps, cfg.t, cfg.loss_kind, cfg.normalize_features)
    history = [loss]
    for _ in range(cfg.N):
        grad = _descent_direction(current, ps, cfg)
        step = cfg.gamma
        for _ in range(MAX_HALVINGS + 1):
            trial_W = current.W - step * grad
            if np.all(np.isfinite(trial_W)):
                trial = FeatureMap(trial_W)
                trial_loss = separation_loss(trial, ps, cfg.t, cfg.loss_kind, cfg.normalize_features)
                if not cfg.line_search or trial_loss <= loss:
                    break
            elif not cfg.line_search:
                raise FloatingPointError("Stage-I step overflowed; reduce gamma or enable line search")
            step *= 0.5
        else:
            raise LineSearchFailure(f"no nonincreasing step after {MAX_HALVINGS} halvings")
        current, loss = trial, trial_loss
        history.append(loss)
    return normalize_rows(current, cfg.row_norm, ps), history


def save_loss_history(history, path) -> None:
    with text_sink(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "loss"])
        for k, v in enumerate(history):
            writer.writerow([k, f"{v:.17g}"])
