"""Synthetic memory sets for tests, demos and the ``gen`` command."""
from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .patterns import PatternSet

GENERATORS = ("gaussian", "orthogonal", "near-parallel")


def gaussian_patterns(d: int, M: int, seed: int) -> PatternSet:
    """I.i.d. normal columns scaled to unit norm."""
    X = np.random.default_rng(seed).standard_normal((d, M))
    return PatternSet(X / np.linalg.norm(X, axis=0))


def orthogonal_patterns(d: int, M: int, seed: int) -> PatternSet:
    if M > d:
        raise DimensionError(f"cannot build {M} orthonormal vectors in dimension {d}")
    Q, R = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, M)))
    # fix column signs so the output does not depend on LAPACK sign conventions
    return PatternSet(Q * np.sign(np.diag(R)))


def near_parallel_patterns(d: int, M: int, seed: int, angle: float = 0.2) -> PatternSet:
    """Unit vectors at ``angle`` radians from one shared base direction.

    ``angle=0`` gives ``M`` identical columns.
    """
    if d < 2:
        raise DimensionError("near-parallel patterns need d >= 2")
    rng = np.random.default_rng(seed)
    base = rng.standard_normal(d)
    base /= np.linalg.norm(base)
    V = rng.standard_normal((d, M))
    V -= np.outer(base, base @ V)
    V /= np.linalg.norm(V, axis=0)
    return PatternSet(np.cos(angle) * base[:, None] + np.sin(angle) * V)


def generate(kind: str, d: int, M: int, seed: int, angle: float = 0.2) -> PatternSet:
    if kind == "gaussian":
        return gaussian_patterns(d, M, seed)
    if kind == "orthogonal":
        return orthogonal_patterns(d, M, seed)
    if kind == "near-parallel":
        return near_parallel_patterns(d, M, seed, angle)
    raise ValueError(f"unknown generator {kind!r}; expected one of {GENERATORS}")
