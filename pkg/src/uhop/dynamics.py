"""Kernelized Hopfield energy and its retrieval dynamics.

The energy is ``E(x) = K(x, x)/2 - psi_star(alpha, beta, K(Xi, x))`` and one
retrieval step is ``T(x) = Xi @ Sep_alpha(beta, K(Xi, x))``. Queries stay in
the input space; ``W^T W`` is never inverted.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._io import text_sink
from .errors import DegenerateSet
from .kernel import FeatureMap, kernel_overlap, phi
from .patterns import PatternSet, separation_stats
from .separation import SeparationFn, psi_star


@dataclass(frozen=True)
class RetrievalConfig:
    beta: float = 1.0
    t: float = 2.0
    alpha: float = 1.0
    T: int = 1
    fixed_point_tol: float = 1e-10

    def __post_init__(self):
        if self.beta <= 0 or self.t <= 0:
            raise ValueError("beta and t must be positive")
        if self.T < 1:
            raise ValueError("T must be a positive integer")
        SeparationFn(self.alpha)  # validates alpha

    @property
    def sep(self) -> SeparationFn:
        return SeparationFn(self.alpha)


@dataclass
class RetrievalTrace:
    iterates: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    converged: bool = False

    @property
    def retrieved(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def iters(self) -> int:
        return len(self.residuals)

    def to_csv(self, path) -> None:
        with text_sink(path) as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iter", "energy", "residual"])
            for k, e in enumerate(self.energies):
                res = "" if k == 0 else f"{self.residuals[k - 1]:.17g}"
                writer.writerow([k, f"{e:.17g}", res])


def energy(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, x):
    """Energy of one state, or an ``(n,)`` array for a ``(d, n)`` batch."""
    x = np.asarray(x, dtype=np.float64)
    fx = phi(fm, x)
    z = kernel_overlap(fm, ps, x)
    e = 0.5 * np.sum(fx * fx, axis=0) - psi_star(cfg.alpha, cfg.beta, z, cfg.sep)
    return float(e) if x.ndim == 1 else e


def separation_weights(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, x) -> np.ndarray:
    """Simplex weights ``Sep_alpha(beta, K(Xi, x))`` over the memories."""
    return cfg.sep(cfg.beta, kernel_overlap(fm, ps, x))


def retrieval_step(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, x) -> np.ndarray:
    """One update; ``x`` may also be a ``(d, n)`` batch of queries."""
    p = separation_weights(fm, ps, cfg, x)
    return ps.data @ p.T


def retrieve(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, x0) -> RetrievalTrace:
    """Iterate until the step length drops below ``fixed_point_tol`` or ``T`` steps are done.

    A ``(d, n)`` batch iterates all columns together and stops once every
    column has converged; use :func:`split_trace` to get per-query traces.
    """
    x = np.array(x0, dtype=np.float64)
    trace = RetrievalTrace(iterates=[x], energies=[energy(fm, ps, cfg, x)])
    for _ in range(cfg.T):
        x_new = retrieval_step(fm, ps, cfg, x)
        res = np.linalg.norm(x_new - x, axis=0)
        trace.iterates.append(x_new)
        trace.energies.append(energy(fm, ps, cfg, x_new))
        trace.residuals.append(float(res) if x.ndim == 1 else res)
        x = x_new
        if np.all(res < cfg.fixed_point_tol):
            trace.converged = True
            break
    return trace


def split_trace(batch: RetrievalTrace, tol: float) -> list:
    """Per-column traces of a batched run, each cut at its own first converged step."""
    n = batch.iterates[0].shape[1]
    out = []
    for j in range(n):
        res = [float(r[j]) for r in batch.residuals]
        stop = next((k + 1 for k, r in enumerate(res) if r < tol), len(res))
        out.append(
            RetrievalTrace(
                iterates=[it[:, j].copy() for it in batch.iterates[: stop + 1]],
                energies=[float(e[j]) for e in batch.energies[: stop + 1]],
                residuals=res[:stop],
                converged=bool(res) and res[stop - 1] < tol,
            )
        )
    return out


def error_bound(ps: PatternSet, beta: float, mu: int) -> float:
    """Retrieval-error bound ``2 m (M-1) exp(-beta (delta_mu - 2 m R))`` of the dense model."""
    if ps.M < 2:
        raise DegenerateSet("error bound needs at least two memories")
    if not 0 <= mu < ps.M:
        raise IndexError(f"memory index {mu} outside [0, {ps.M})")
    st = separation_stats(ps)
    return float(2.0 * st.m * (ps.M - 1) * np.exp(-beta * (st.delta[mu] - 2.0 * st.m * st.R)))


DISTANCE_METRICS = {"l2": "euclidean", "manhattan": "cityblock"}


def distance_retrieve(ps: PatternSet, cfg: RetrievalConfig, x0, metric: str = "l2") -> RetrievalTrace:
    """Baseline dynamics ``T(x) = Xi @ Sep_alpha(-beta d(xi_mu, x))`` with an l2 or l1 distance.

    No energy is attached to these updates; the trace records ``nan`` energies.
    """
    if metric not in DISTANCE_METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(DISTANCE_METRICS)}")
    x = np.array(x0, dtype=np.float64)
    cols = x if x.ndim == 2 else x[:, None]
    nan = np.full(cols.shape[1], np.nan)
    trace = RetrievalTrace(iterates=[x], energies=[float("nan") if x.ndim == 1 else nan])
    for _ in range(cfg.T):
        dist = cdist(cols.T, ps.data.T, DISTANCE_METRICS[metric])
        new = ps.data @ cfg.sep(cfg.beta, -dist).T
        res = np.linalg.norm(new - cols, axis=0)
        cols = new
        trace.iterates.append(new if x.ndim == 2 else new[:, 0])
        trace.energies.append(float("nan") if x.ndim == 1 else nan)
        trace.residuals.append(res if x.ndim == 2 else float(res[0]))
        if np.all(res < cfg.fixed_point_tol):
            trace.converged = True
            break
    return trace
