"""Dense and sparse retrieval of a masked memory, with the energy trace."""
import numpy as np

from uhop import PatternSet, RetrievalConfig, identity_feature_map, retrieve
from uhop.synthetic import gaussian_patterns

ps = gaussian_patterns(d=32, M=10, seed=0)
fm = identity_feature_map(ps.d)
x0 = ps.pattern(3).copy()
x0[16:] = 0.0  # hide half of the entries

for alpha in (1.0, 2.0):
    tr = retrieve(fm, ps, RetrievalConfig(alpha=alpha, beta=8.0, T=20), x0)
    err = np.linalg.norm(tr.retrieved - ps.pattern(3))
    print(f"alpha={alpha}: steps={tr.iters} converged={tr.converged} error={err:.3e}")
    print("  energies:", " ".join(f"{e:.4f}" for e in tr.energies[:6]))
