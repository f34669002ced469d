"""Learn the feature map on 20 MNIST digits and watch the masked-query error drop."""
import numpy as np

from uhop import MaskFraction, RetrievalConfig, Stage1Config, batch_retrieve, load_dataset

full = load_dataset("mnist")
ps = full.subset(np.random.default_rng(0).choice(full.M, 20, replace=False))
for N in (0, 1, 10, 100):
    res = batch_retrieve(ps, Stage1Config(N=N), RetrievalConfig(beta=1.0), MaskFraction(0.5, 0), seed=0,
                         init="identity", D_Phi=ps.d)
    print(f"N={N:<4} mean SSE={np.mean([r.sse for r in res]):.5f}  final loss={res[0].final_loss:.4f}")
