"""Exact-retrieval conditions for sparse separation maps.

A memory is an exact fixed point when ``Sep_alpha(beta, K(Xi, xi_mu))`` is the
one-hot vector ``e_mu``. The sufficient condition checked here compares the
closest kernel-space neighbour against ``-2t / (beta (alpha - 1))``:

    max_{nu != mu} ell_phi(xi_nu, xi_mu) <= -2t / (beta (alpha - 1))

It implies the one-hot output when the features ``phi(xi_mu)`` have unit norm.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._io import text_sink
from .dynamics import RetrievalConfig, separation_weights
from .errors import AlphaError, DegenerateSet
from .kernel import FeatureMap
from .patterns import PatternSet, separation_stats

ONE_HOT_TOL = 1e-12
# margins within this relative slack of the threshold count as on the boundary
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class MemoryMargin:
    mu: int
    margin: float
    satisfied: bool


@dataclass(frozen=True)
class ExactRetrievalReport:
    per_memory: list
    threshold: float
    alpha: float
    beta: float
    t: float

    @property
    def all_satisfied(self) -> bool:
        return all(m.satisfied for m in self.per_memory)

    @property
    def n_satisfied(self) -> int:
        return sum(m.satisfied for m in self.per_memory)

    def to_csv(self, path, error_bounds=None) -> None:
        header = ["mu", "margin", "threshold", "satisfied"]
        if error_bounds is not None:
            header.append("error_bound")
        with text_sink(path) as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for k, m in enumerate(self.per_memory):
                row = [m.mu, f"{m.margin:.17g}", f"{self.threshold:.17g}", int(m.satisfied)]
                if error_bounds is not None:
                    row.append(f"{error_bounds[k]:.17g}")
                writer.writerow(row)


def require_sparse(alpha: float) -> None:
    if not 1.0 < alpha <= 2.0:
        raise AlphaError(f"exact retrieval needs alpha in (1, 2], got {alpha}")


def exact_threshold(alpha: float, beta: float, t: float) -> float:
    return -2.0 * t / (beta * (alpha - 1.0))


def check_exact_retrieval(fm: FeatureMap, ps: PatternSet, alpha: float, beta: float, t: float) -> ExactRetrievalReport:
    require_sparse(alpha)
    threshold = exact_threshold(alpha, beta, t)
    if ps.M == 1:
        margins = np.array([-np.inf])
    else:
        dist2 = squareform(pdist((fm.W @ ps.data).T, "sqeuclidean"))
        np.fill_diagonal(dist2, np.inf)
        margins = -t * dist2.min(axis=0)
    cutoff = threshold * (1.0 - BOUNDARY_RTOL)
    per = [MemoryMargin(mu, float(g), bool(g <= cutoff)) for mu, g in enumerate(margins)]
    return ExactRetrievalReport(per, threshold, alpha, beta, t)


def verify_fixed_point(fm: FeatureMap, ps: PatternSet, cfg: RetrievalConfig, mu: int) -> bool:
    """True when the separation weights at ``xi_mu`` equal ``e_mu`` to 1e-12 per entry."""
    p = separation_weights(fm, ps, cfg, ps.pattern(mu))
    e = np.zeros(ps.M)
    e[mu] = 1.0
    return bool(np.all(np.abs(p - e) <= ONE_HOT_TOL))


def min_distance_threshold(L: float, alpha: float, beta: float) -> float:
    return float(np.sqrt(2.0 / (L**2 * beta * (alpha - 1.0))))


def min_distance_condition(ps: PatternSet, L: float, alpha: float, beta: float) -> bool:
    """Input-space sufficient condition: ``2R >= sqrt(2 / (L^2 beta (alpha - 1)))``."""
    require_sparse(alpha)
    if ps.M < 2:
        raise DegenerateSet("the distance condition needs at least two memories")
    return bool(2.0 * separation_stats(ps).R >= min_distance_threshold(L, alpha, beta))
