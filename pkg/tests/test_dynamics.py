import numpy as np
import pytest

from oracles import dense_update, logsumexp_naive, simplex_projection_bruteforce
from uhop.errors import DegenerateSet
from uhop.dynamics import (
    RetrievalConfig,
    distance_retrieve,
    energy,
    error_bound,
    retrieval_step,
    retrieve,
    split_trace,
)
from uhop.kernel import FeatureMap, identity_feature_map, init_feature_map
from uhop.patterns import PatternSet, separation_stats
from uhop.synthetic import orthogonal_patterns


def random_instance(rng):
    d, M = rng.integers(1, 9), rng.integers(1, 9)
    ps = PatternSet(rng.normal(size=(d, M)))
    D = int(d + rng.integers(0, 2 * d + 1))
    fm = FeatureMap(rng.normal(size=(D, d)) / np.sqrt(d))
    return ps, fm, rng.normal(size=d)


def well_separated_set(rng):
    """Memories with at least one mu obeying delta_mu > 2 m R.

    A near-duplicate pair pins R to a small value; the first memory points
    along its own axis, orthogonal to everything else.
    """
    d = int(rng.integers(4, 10))
    M = int(rng.integers(3, d + 1))
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    X = np.zeros((d, M))
    X[:, 0] = rng.uniform(1.0, 2.0) * Q[:, 0]
    for k in range(1, M):
        X[:, k] = rng.uniform(0.3, 1.0) * Q[:, k]
    eps = rng.uniform(1e-3, 0.1)
    X[:, M - 1] = X[:, M - 2] + eps * Q[:, M - 1] / 2.0
    return PatternSet(X)


def test_config_defaults_and_validation():
    cfg = RetrievalConfig()
    assert (cfg.beta, cfg.t, cfg.alpha, cfg.T, cfg.fixed_point_tol) == (1.0, 2.0, 1.0, 1, 1e-10)
    for bad in (dict(beta=0), dict(t=-1), dict(T=0), dict(alpha=3.0)):
        with pytest.raises(ValueError):
            RetrievalConfig(**bad)


# -- energy ------------------------------------------------------------------------


def test_energy_single_memory_at_the_memory(rng):
    xi = rng.normal(size=4)
    ps = PatternSet(xi[:, None])
    assert energy(identity_feature_map(4), ps, RetrievalConfig(), xi) == pytest.approx(-0.5 * xi @ xi, abs=1e-12)


def test_energy_reduces_to_dense_energy(rng):
    for _ in range(100):
        d, M = rng.integers(1, 8), rng.integers(1, 8)
        X, x = rng.normal(size=(d, M)), rng.normal(size=d)
        beta = rng.uniform(0.1, 5)
        want = -logsumexp_naive(list(beta * (X.T @ x))) / beta + 0.5 * x @ x
        got = energy(identity_feature_map(d), PatternSet(X), RetrievalConfig(beta=beta), x)
        assert got == pytest.approx(want, abs=1e-10)


def test_energy_at_origin():
    ps = PatternSet(np.random.default_rng(0).normal(size=(3, 7)))
    assert energy(init_feature_map(3, 12, 0), ps, RetrievalConfig(), np.zeros(3)) == pytest.approx(-np.log(7), abs=1e-14)


def test_energy_batch_matches_columns(rng):
    ps, fm, _ = random_instance(rng)
    Q = rng.normal(size=(ps.d, 4))
    cfg = RetrievalConfig(alpha=1.5, beta=2.0)
    batch = energy(fm, ps, cfg, Q)
    for j in range(4):
        assert batch[j] == pytest.approx(energy(fm, ps, cfg, Q[:, j]), abs=1e-12)


# -- one step ----------------------------------------------------------------------


def test_single_memory_step_returns_it(rng):
    xi = rng.normal(size=5)
    ps = PatternSet(xi[:, None])
    for alpha in (1.0, 1.5, 2.0):
        out = retrieval_step(init_feature_map(5, 20, 1), ps, RetrievalConfig(alpha=alpha), rng.normal(size=5))
        np.testing.assert_allclose(out, xi, atol=1e-15)


def test_step_reduces_to_dense_and_sparse_updates(rng):
    for _ in range(200):
        d, M = rng.integers(1, 9), rng.integers(1, 9)
        X, x = rng.normal(size=(d, M)), rng.normal(size=d)
        beta = rng.uniform(0.1, 4)
        fm, ps = identity_feature_map(d, 3 * d), PatternSet(X)
        np.testing.assert_allclose(retrieval_step(fm, ps, RetrievalConfig(beta=beta), x),
                                   dense_update(X.tolist(), x.tolist(), beta), atol=1e-12)
        sparse = X @ simplex_projection_bruteforce(beta * (X.T @ x))
        np.testing.assert_allclose(retrieval_step(fm, ps, RetrievalConfig(alpha=2.0, beta=beta), x), sparse, atol=1e-12)


def test_orthonormal_memories_are_fixed_under_sparsemax():
    ps = orthogonal_patterns(6, 6, seed=3)
    fm = identity_feature_map(6)
    cfg = RetrievalConfig(alpha=2.0, beta=10.0)
    for mu in range(6):
        np.testing.assert_array_equal(retrieval_step(fm, ps, cfg, ps.pattern(mu)), ps.pattern(mu))


def test_iterates_stay_in_convex_hull(rng):
    for _ in range(100):
        ps, fm, x = random_instance(rng)
        cfg = RetrievalConfig(alpha=float(rng.choice([1.0, 1.5, 2.0])), beta=rng.uniform(0.1, 3))
        y = retrieval_step(fm, ps, cfg, x)
        # the simplex weights from the step reconstruct y exactly
        p = cfg.sep(cfg.beta, fm.W @ x @ (fm.W @ ps.data))
        assert np.all(p >= 0) and p.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(ps.data @ p, y, atol=1e-12)


# -- iteration and traces ----------------------------------------------------------


def test_energy_descends_along_traces(rng):
    worst = -np.inf
    for _ in range(1000):
        ps, fm, x = random_instance(rng)
        cfg = RetrievalConfig(alpha=float(rng.choice([1.0, 1.5, 2.0])), beta=rng.uniform(0.1, 5), T=8)
        e = retrieve(fm, ps, cfg, x).energies
        worst = max(worst, np.max(np.diff(e)) if len(e) > 1 else -np.inf)
    assert worst <= 1e-9


def test_fixed_point_converges_in_one_step(rng):
    ps = PatternSet(rng.normal(size=(4, 1)))
    cfg = RetrievalConfig(T=5)
    tr = retrieve(identity_feature_map(4), ps, cfg, ps.pattern(0))
    assert tr.converged and tr.iters == 1
    assert tr.residuals[0] < 1e-14
    assert len(tr.residuals) == len(tr.iterates) - 1 == len(tr.energies) - 1


def test_single_memory_retrieved_after_one_step(rng):
    ps = PatternSet(rng.normal(size=(3, 1)))
    tr = retrieve(init_feature_map(3, 9, 2), ps, RetrievalConfig(T=3), rng.normal(size=3))
    np.testing.assert_allclose(tr.iterates[1], ps.pattern(0), atol=1e-15)
    np.testing.assert_array_equal(tr.retrieved, tr.iterates[-1])


def test_perturbed_orthogonal_memory_is_recovered(rng):
    ps = orthogonal_patterns(8, 5, seed=1)
    cfg = RetrievalConfig(beta=10.0, T=20)
    for mu in range(5):
        x0 = ps.pattern(mu) + 0.05 * rng.normal(size=8)
        tr = retrieve(identity_feature_map(8), ps, cfg, x0)
        assert np.linalg.norm(tr.retrieved - ps.pattern(mu)) < 1e-3


def test_T_caps_the_number_of_steps(rng):
    ps, fm, x = random_instance(rng)
    tr = retrieve(fm, ps, RetrievalConfig(T=3, fixed_point_tol=0.0), x)
    assert tr.iters == 3 and not tr.converged


def test_batch_trace_splits_into_column_traces(rng):
    ps = PatternSet(rng.normal(size=(5, 4)))
    fm = init_feature_map(5, 10, 0)
    cfg = RetrievalConfig(T=6, beta=3.0)
    Q = np.column_stack([ps.pattern(0), rng.normal(size=5), rng.normal(size=5)])
    parts = split_trace(retrieve(fm, ps, cfg, Q), cfg.fixed_point_tol)
    for j, tr in enumerate(parts):
        single = retrieve(fm, ps, cfg, Q[:, j])
        assert tr.iters == single.iters and tr.converged == single.converged
        np.testing.assert_allclose(tr.retrieved, single.retrieved, atol=1e-12)
        np.testing.assert_allclose(tr.energies, single.energies, atol=1e-12)


def test_trace_csv(tmp_path, rng):
    ps, fm, x = random_instance(rng)
    tr = retrieve(fm, ps, RetrievalConfig(T=2, fixed_point_tol=0.0), x)
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,energy,residual"
    assert len(lines) == 4 and lines[1].endswith(",")
    assert float(lines[3].split(",")[2]) == tr.residuals[1]


# -- error bound -------------------------------------------------------------------


def test_error_bound_orthonormal_pair():
    ps = PatternSet(np.eye(2))
    assert error_bound(ps, 1.0, 0) == pytest.approx(2 * np.exp(np.sqrt(2) - 1), rel=1e-14)
    assert error_bound(ps, 1.0, 0) == pytest.approx(3.0264, abs=1e-4)


def test_error_bound_scaling_in_beta(rng):
    ps = well_separated_set(rng)
    s = separation_stats(ps)
    assert s.delta[0] > 2 * s.m * s.R
    pre = 2 * s.m * (ps.M - 1)
    b1, b2 = error_bound(ps, 1.0, 0), error_bound(ps, 2.0, 0)
    assert b2 / pre == pytest.approx((b1 / pre) ** 2, rel=1e-12)
    assert error_bound(ps, 1e4, 0) < 1e-100


def test_error_bound_errors():
    with pytest.raises(DegenerateSet):
        error_bound(PatternSet(np.ones((2, 1))), 1.0, 0)
    with pytest.raises(IndexError):
        error_bound(PatternSet(np.eye(2)), 1.0, 2)


def test_dense_error_stays_below_bound(rng):
    for _ in range(50):
        ps = well_separated_set(rng)
        s = separation_stats(ps)
        beta = rng.uniform(0.5, 5)
        bound = error_bound(ps, beta, 0)
        for _ in range(10):
            u = rng.normal(size=ps.d)
            x = ps.pattern(0) + s.R * rng.uniform() * u / np.linalg.norm(u)
            out = retrieval_step(identity_feature_map(ps.d), ps, RetrievalConfig(beta=beta), x)
            assert np.linalg.norm(out - ps.pattern(0)) <= bound


# -- distance baselines ------------------------------------------------------------


def test_distance_baselines(rng):
    from scipy.special import softmax as sp_softmax

    ps = PatternSet(rng.normal(size=(4, 5)))
    x = rng.normal(size=4)
    cfg = RetrievalConfig(beta=1.7)
    l2 = ps.data @ sp_softmax(-1.7 * np.linalg.norm(ps.data - x[:, None], axis=0))
    l1 = ps.data @ sp_softmax(-1.7 * np.abs(ps.data - x[:, None]).sum(axis=0))
    np.testing.assert_allclose(distance_retrieve(ps, cfg, x, "l2").retrieved, l2, atol=1e-13)
    np.testing.assert_allclose(distance_retrieve(ps, cfg, x, "manhattan").retrieved, l1, atol=1e-13)
    Q = rng.normal(size=(4, 3))
    batch = distance_retrieve(ps, cfg, Q, "l2").retrieved
    np.testing.assert_allclose(batch[:, 1], distance_retrieve(ps, cfg, Q[:, 1], "l2").retrieved, atol=1e-13)
    with pytest.raises(ValueError):
        distance_retrieve(ps, cfg, x, "cosine")
