"""Two-stage retrieval: learn the feature map on the memories, then run the dynamics."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from ._io import text_sink
from .dynamics import RetrievalConfig, RetrievalTrace, retrieve, split_trace
from .kernel import FeatureMap, identity_feature_map, init_feature_map, normalize_rows
from .loss import Stage1Config, separation_loss, stage1_optimize
from .patterns import PatternSet, QueryCorruption, corrupt, separation_stats

MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Child seed ``splitmix(splitmix(seed) ^ index)``.

    Hashing the parent first keeps nearby parents from sharing children:
    a bare ``seed ^ index`` sends seeds 0 and 1 to the same set of trial seeds.
    """
    return _splitmix64(_splitmix64(seed & MASK64) ^ index)


@dataclass
class UHopResult:
    retrieved: np.ndarray
    sse: float
    final_loss: float
    trace: RetrievalTrace

    @property
    def converged(self) -> bool:
        return self.trace.converged

    @property
    def iters(self) -> int:
        return self.trace.iters


def sse(a, b) -> float:
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.sum(diff * diff))


DEFAULT_WIDTH = 4


def initial_feature_map(d: int, seed: int, init: str = "gaussian", D_Phi: int | None = None) -> FeatureMap:
    """Starting ``W`` with ``D_Phi`` rows (``4 d`` unless given).

    ``init="identity"`` stacks the identity on zero rows, so the kernel starts
    as the plain dot product; the zero rows receive no gradient and stay zero.
    """
    D_Phi = DEFAULT_WIDTH * d if D_Phi is None else D_Phi
    if init == "gaussian":
        return init_feature_map(d, D_Phi, seed)
    if init == "identity":
        return identity_feature_map(d, D_Phi)
    raise ValueError(f"unknown init {init!r}; expected 'gaussian' or 'identity'")


def learn_feature_map(ps: PatternSet, s1: Stage1Config, seed: int = 0, init: str = "gaussian",
                      D_Phi: int | None = None):
    """Stage I alone. Returns ``(feature_map, loss_history)``.

    A single memory has no pairs to separate; the initial map is then only
    row-normalized and the history is empty.
    """
    fm = initial_feature_map(ps.d, seed, init, D_Phi)
    if ps.M < 2:
        return normalize_rows(fm, s1.row_norm, ps), []
    return stage1_optimize(fm, ps, s1)


def _final_loss(history) -> float:
    return float(history[-1]) if history else float("nan")


def retrieve_with_map(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, query, truth,
                      final_loss: float = float("nan")) -> UHopResult:
    trace = retrieve(fm, ps, cfg, query)
    return UHopResult(trace.retrieved, sse(trace.retrieved, truth), final_loss, trace)


def uhop_retrieve(ps: PatternSet, s1: Stage1Config, cfg: RetrievalConfig, query, truth, seed: int,
                  init: str = "gaussian", D_Phi: int | None = None) -> UHopResult:
    fm, history = learn_feature_map(ps, s1, seed, init, D_Phi)
    return retrieve_with_map(fm, ps, cfg, query, truth, _final_loss(history))


def corrupted_queries(ps: PatternSet, corruption: QueryCorruption) -> np.ndarray:
    """One corrupted copy of every memory, as a ``(d, M)`` matrix; memory ``mu`` uses a derived seed."""
    stats = separation_stats(ps)
    cols = []
    for mu in range(ps.M):
        c = replace(corruption, seed=derive_seed(corruption.seed, mu))
        cols.append(corrupt(ps.pattern(mu), c, stats))
    return np.stack(cols, axis=1)


def retrieve_all(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, queries,
                 final_loss: float = float("nan")) -> list:
    """Retrieve a ``(d, M)`` query batch; column ``mu`` is scored against memory ``mu``."""
    batch = retrieve(fm, ps, cfg, queries)
    out = []
    for mu, trace in enumerate(split_trace(batch, cfg.fixed_point_tol)):
        out.append(UHopResult(trace.retrieved, sse(trace.retrieved, ps.pattern(mu)), final_loss, trace))
    return out


def batch_retrieve(ps: PatternSet, s1: Stage1Config, cfg: RetrievalConfig, corruption: QueryCorruption,
                   seed: int, init: str = "gaussian", D_Phi: int | None = None) -> list:
    """Stage I once on the memories, then one corrupted query per memory, ordered by ``mu``."""
    fm, history = learn_feature_map(ps, s1, seed, init, D_Phi)
    return retrieve_all(fm, ps, cfg, corrupted_queries(ps, corruption), _final_loss(history))


def final_map_loss(fm: FeatureMap, ps: PatternSet, s1: Stage1Config) -> float:
    """Separation loss of a (row-normalized) map under the Stage-I loss settings."""
    return separation_loss(fm, ps, s1.t, s1.loss_kind, s1.normalize_features)


def save_batch_results(results, path) -> None:
    with text_sink(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mu", "sse", "final_loss", "converged", "iters"])
        for mu, r in enumerate(results):
            writer.writerow([mu, f"{r.sse:.17g}", f"{r.final_loss:.17g}", int(r.converged), r.iters])

