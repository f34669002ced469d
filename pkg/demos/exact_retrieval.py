"""Check the exact-retrieval margins before and after Stage I on nearly parallel memories."""
from uhop import RetrievalConfig, Stage1Config, check_exact_retrieval, learn_feature_map, verify_fixed_point
from uhop.synthetic import near_parallel_patterns

ps = near_parallel_patterns(16, 12, seed=4, angle=0.3)
alpha, beta, t = 2.0, 20.0, 2.0
for N in (0, 10, 200):
    fm, _ = learn_feature_map(ps, Stage1Config(N=N, gamma=0.1, t=t, row_norm="preserve"), init="identity", D_Phi=16)
    rep = check_exact_retrieval(fm, ps, alpha, beta, t)
    fixed = sum(verify_fixed_point(fm, ps, RetrievalConfig(alpha=alpha, beta=beta, t=t), mu) for mu in range(ps.M))
    print(f"N={N:<4} satisfied={rep.n_satisfied}/{ps.M}  fixed points={fixed}/{ps.M}  threshold={rep.threshold:.3f}")
