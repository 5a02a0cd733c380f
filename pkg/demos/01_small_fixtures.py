"""
Two small tensors, decomposed by hand and by the library
========================================================

An orthogonally decomposable 2x2x2 tensor and a non-orthogonal one with
the same shape, both stored as ``S^2(R^2) (x) R^2``.
"""
import math

import numpy as np

from mspm import MSPMConfig, PSTensor, decompose, make_rank_one

u = np.array([1.0, 1.0]) / math.sqrt(2)
v = np.array([1.0, -1.0]) / math.sqrt(2)
e1 = np.array([1.0, 0.0])

# u(x)u(x)v + v(x)v(x)u is symmetric in its first two slots
T = make_rank_one((u, v), (2, 1)) + make_rank_one((v, u), (2, 1))
print("norm", T.norm())  # two orthonormal rank-one terms: sqrt(2)

res = decompose(T, MSPMConfig(plan=(1, 1)))
for c in res.components:
    print(f"lambda={c.lam:.12f}  a={np.round(c.factors[0], 6)}  c={np.round(c.factors[1], 6)}")

# the second tensor has u and e1 as its symmetric factors, which are not orthogonal
c1 = np.array([1 / math.sqrt(3), 1.0])
c2 = np.array([-2 / math.sqrt(3), 0.0])
T2 = make_rank_one((u, c1), (2, 1)) + make_rank_one((e1, c2), (2, 1))
res2 = decompose(T2, MSPMConfig(verify=True))
print("\nweights should both be 2/sqrt(3) =", 2 / math.sqrt(3))
for c, info in zip(res2.components, res2.diagnostics["components"]):
    print(f"lambda={c.lam:.12f}  a={np.round(c.factors[0], 6)}  c={np.round(c.factors[1], 6)}  residual={info['residual']:.1e}")
print("relative error", res2.diagnostics["relative_error"])
