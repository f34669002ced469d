"""Softmax, entmax and sparsemax on the same scores."""
import numpy as np

from uhop import sep

z = np.array([1.2, 1.0, 0.3, -0.5])
np.set_printoptions(precision=4, suppress=True)
for alpha in (1.0, 1.25, 1.5, 2.0):
    p = sep(alpha, 2.0, z)
    print(f"alpha={alpha:<5} p={p}  support={np.count_nonzero(p)}")
