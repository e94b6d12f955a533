"""Statistical tests on TREVOR keys versus uniformly random bits."""

import numpy as np

from trevor.experiments import standard_env, trevor_keys
from trevor.randomness import run_suite

keys = trevor_keys(standard_env(seed=4), count=50)
print("TREVOR keys")
print(run_suite(keys).to_table())

# symbol histogram: equal-width bins over skewed eigenvector components
bits = np.array([k.bits for k in keys])
sym = 2 * bits[:, 0::2] + bits[:, 1::2]
print("symbol frequencies:", np.bincount(sym.ravel(), minlength=4) / sym.size)

rng = np.random.default_rng(4)
print("\nuniform bits")
print(run_suite([rng.integers(0, 2, 256) for _ in range(50)]).to_table())
