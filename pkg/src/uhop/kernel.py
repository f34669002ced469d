"""Linear feature map ``phi(u) = W u`` and the kernel it induces."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import text_sink
from .errors import DimensionError
from .patterns import PatternSet

ROW_NORM_EPS = 1e-12


@dataclass(frozen=True)
class FeatureMap:
    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        if W.ndim != 2:
            raise DimensionError(f"W must be 2-D, got shape {W.shape}")
        if not np.all(np.isfinite(W)):
            raise ValueError("feature map entries must be finite")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def D_Phi(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def gram(self) -> np.ndarray:
        """``A = W^T W``, the matrix of the induced kernel."""
        return self.W.T @ self.W


def init_feature_map(d: int, D_Phi: int, seed: int) -> FeatureMap:
    """Gaussian ``W`` with entries ``N(0, 1/d)``, redrawn until numerically full rank."""
    if D_Phi < d:
        raise DimensionError(f"D_Phi={D_Phi} must be at least d={d}")
    rng = np.random.default_rng(seed)
    while True:
        W = rng.standard_normal((D_Phi, d)) / np.sqrt(d)
        if np.linalg.svd(W, compute_uv=False).min() > 1e-8:
            return FeatureMap(W)


def identity_feature_map(d: int, D_Phi: int | None = None) -> FeatureMap:
    """Top ``d`` rows identity, the rest zero; the induced kernel is the dot product."""
    D_Phi = d if D_Phi is None else D_Phi
    if D_Phi < d:
        raise DimensionError(f"D_Phi={D_Phi} must be at least d={d}")
    return FeatureMap(np.eye(D_Phi, d))


def _check_dim(fm: FeatureMap, u: np.ndarray) -> None:
    if u.shape[0] != fm.d:
        raise DimensionError(f"vector of length {u.shape[0]} does not match d={fm.d}")


def phi(fm: FeatureMap, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    _check_dim(fm, u)
    return fm.W @ u


def kernel_eval(fm: FeatureMap, u, v) -> float:
    return float(phi(fm, u) @ phi(fm, v))


def kernel_overlap(fm: FeatureMap, ps: PatternSet, x) -> np.ndarray:
    """``K(Xi, x)``; for a ``(d, n)`` matrix of queries the result is ``(n, M)``."""
    x = np.asarray(x, dtype=np.float64)
    if ps.d != fm.d:
        raise DimensionError(f"patterns have d={ps.d}, feature map expects d={fm.d}")
    _check_dim(fm, x)
    return (fm.W @ x).T @ (fm.W @ ps.data)


def ell_phi(fm: FeatureMap, t: float, u, v) -> float:
    """Log of the RBF similarity of two features: ``-t ||phi(u) - phi(v)||^2``."""
    diff = phi(fm, u) - phi(fm, v)
    return -t * float(diff @ diff)


def normalize_rows(fm: FeatureMap, mode: str = "unit", patterns: PatternSet | None = None) -> FeatureMap:
    """Scale each row of ``W`` to unit length; rows with norm <= 1e-12 are kept.

    ``mode="preserve"`` applies one extra global factor after the unit scaling
    so that the total squared feature norm of ``patterns`` equals their total
    squared norm in the input space.
    """
    W = np.array(fm.W)
    norms = np.linalg.norm(W, axis=1)
    big = norms > ROW_NORM_EPS
    W[big] /= norms[big, None]
    if mode == "unit":
        return FeatureMap(W)
    if mode != "preserve":
        raise ValueError(f"unknown normalization mode {mode!r}")
    if patterns is None:
        raise ValueError("mode='preserve' needs the pattern set")
    feat = np.sum((W @ patterns.data) ** 2)
    if feat > 0:
        W *= np.sqrt(np.sum(patterns.data**2) / feat)
    return FeatureMap(W)


def lipschitz_of_phi(fm: FeatureMap, tol: float = 1e-9, max_iter: int = 100_000) -> float:
    """Largest singular value of ``W`` by power iteration on ``W^T W``."""
    A = fm.gram
    if not np.any(A):
        return 0.0
    v = np.random.default_rng(0).standard_normal(fm.d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A @ v
        lam_new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def save_feature_map(fm: FeatureMap, path) -> None:
    """Header line ``D_Phi,d`` then one line per row of ``W`` at 17 significant digits."""
    lines = [f"{fm.D_Phi},{fm.d}"]
    lines += [",".join(f"{v:.17g}" for v in row) for row in fm.W]
    with text_sink(path) as fh:
        fh.write("\n".join(lines) + "\n")


def load_feature_map(path) -> FeatureMap:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    D_Phi, d = (int(v) for v in lines[0].split(","))
    W = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=np.float64)
    if W.shape != (D_Phi, d):
        raise DimensionError(f"{path}: expected {D_Phi}x{d} matrix, got {W.shape}")
    return FeatureMap(W)
