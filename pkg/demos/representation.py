"""Build key/query maps whose softmax attention equals a chosen stochastic matrix."""
import numpy as np

from uhop import PatternSet, orthogonalize_features, realize_attention, verify_realization
from uhop.representation import random_stochastic_matrix, realized_attention

rng = np.random.default_rng(0)
ps = PatternSet(rng.normal(size=(8, 5)))
X = orthogonalize_features(ps, seed=0).W @ ps.data
P = random_stochastic_matrix(5, rng)
W_K, W_Q = realize_attention(X, P, beta=2.0)
np.set_printoptions(precision=3, suppress=True)
print("target:\n", P.P)
print("realized:\n", realized_attention(W_K, W_Q, X, 2.0))
print("max error:", verify_realization(W_K, W_Q, X, P, 2.0))
