"""Simplex-valued separation maps and their entropic conjugates.

``Sep_alpha`` interpolates between softmax (``alpha=1``) and sparsemax
(``alpha=2``) through alpha-entmax. All maps act on the last axis, so a
``(n, M)`` array is treated as ``n`` independent score vectors.

Conventions: ``tsallis_entropy`` is the (nonnegative, concave) Tsallis
entropy, entmax maximizes ``<p, theta> + H_alpha(p)`` over the simplex, and
``psi_star(alpha, beta, z) = max_p <p, z> + H_alpha(p) / beta``, which is
exactly ``lse(beta, z)`` at ``alpha=1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import AlphaError, BisectionFailure


def lse(beta: float, z) -> float:
    """``log(sum(exp(beta * z))) / beta`` along the last axis."""
    z = np.asarray(z, dtype=np.float64)
    return logsumexp(beta * z, axis=-1) / beta


def softmax(beta: float, z) -> np.ndarray:
    z = beta * np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def sparsemax(z) -> np.ndarray:
    """Euclidean projection of ``z`` onto the probability simplex.

    Sort descending, take the support size ``k`` as the largest index with
    ``1 + k z_(k) > cumsum_k``, then threshold at ``tau = (cumsum_k - 1) / k``.
    """
    z = np.asarray(z, dtype=np.float64)
    # stable sort on -z breaks ties by index
    z_sorted = -np.sort(-z, axis=-1, kind="stable")
    cssv = np.cumsum(z_sorted, axis=-1)
    k = np.arange(1, z.shape[-1] + 1)
    support = 1.0 + k * z_sorted > cssv
    kappa = np.count_nonzero(support, axis=-1)[..., None]
    tau = (np.take_along_axis(cssv, kappa - 1, axis=-1) - 1.0) / kappa
    return np.maximum(z - tau, 0.0)


def _entmax_mass(theta, tau, power):
    return np.maximum(theta - tau, 0.0) ** power


def entmax(alpha: float, beta: float, z, tol: float = 1e-9, max_iter: int = 100) -> np.ndarray:
    """alpha-entmax of ``beta * z`` for ``alpha`` in (1, 2), by bisection on the threshold.

    The solution is ``p = [(alpha-1) beta z - tau]_+ ** (1/(alpha-1))`` with
    ``tau`` chosen so that ``p`` sums to one.
    """
    if not 1.0 < alpha <= 2.0:
        raise AlphaError(f"entmax needs alpha in (1, 2], got {alpha}")
    theta = (alpha - 1.0) * beta * np.asarray(z, dtype=np.float64)
    power = 1.0 / (alpha - 1.0)
    hi = theta.max(axis=-1, keepdims=True)
    # at tau = max - 1 the largest entry alone already carries unit mass
    lo = hi - 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        heavy = _entmax_mass(theta, mid, power).sum(axis=-1, keepdims=True) >= 1.0
        lo = np.where(heavy, mid, lo)
        hi = np.where(heavy, hi, mid)
    p = _entmax_mass(theta, lo, power)
    total = p.sum(axis=-1, keepdims=True)
    if np.any(np.abs(total - 1.0) > tol) or not np.all(np.isfinite(total)):
        raise BisectionFailure(
            f"entmax bisection missed tolerance {tol}: max |sum p - 1| = {np.max(np.abs(total - 1.0))}"
        )
    return p / total


@dataclass(frozen=True)
class SeparationFn:
    """``Sep_alpha(beta, z)``: softmax at 1, sparsemax at 2, entmax in between."""

    alpha: float = 1.0
    bisection_tol: float = 1e-9
    bisection_max_iter: int = 100

    def __post_init__(self):
        if not 1.0 <= self.alpha <= 2.0:
            raise AlphaError(f"alpha must lie in [1, 2], got {self.alpha}")

    def __call__(self, beta: float, z) -> np.ndarray:
        if self.alpha == 1.0:
            return softmax(beta, z)
        if self.alpha == 2.0:
            return sparsemax(beta * np.asarray(z, dtype=np.float64))
        return entmax(self.alpha, beta, z, self.bisection_tol, self.bisection_max_iter)


def sep(alpha: float, beta: float, z) -> np.ndarray:
    return SeparationFn(alpha)(beta, z)


def tsallis_entropy(alpha: float, p) -> float:
    p = np.asarray(p, dtype=np.float64)
    if alpha == 1.0:
        safe = np.where(p > 0, p, 1.0)
        return -np.sum(p * np.log(safe), axis=-1)
    return np.sum(p - p**alpha, axis=-1) / (alpha * (alpha - 1.0))


def psi_star(alpha: float, beta: float, z, sep_fn: SeparationFn | None = None) -> float:
    """Convex conjugate of the Tsallis entropy, evaluated at the maximizer ``Sep_alpha(beta z)``."""
    sep_fn = sep_fn or SeparationFn(alpha)
    z = np.asarray(z, dtype=np.float64)
    p = sep_fn(beta, z)
    return np.sum(p * z, axis=-1) + tsallis_entropy(alpha, p) / beta


def psi_star_sparse_closed_form(beta: float, z) -> float:
    """``0.5||beta z||^2 - 0.5||sparsemax(beta z) - beta z||^2 + 0.5``.

    This equals ``beta * psi_star(2, beta, z)``; the two coincide only at ``beta=1``.
    """
    bz = beta * np.asarray(z, dtype=np.float64)
    zs = sparsemax(bz)
    return 0.5 * np.sum(bz**2, axis=-1) - 0.5 * np.sum((zs - bz) ** 2, axis=-1) + 0.5
