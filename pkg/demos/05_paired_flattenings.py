"""
Asymmetric tensors need two flattenings
=======================================

In ``R^30 (x) R^30 (x) R^30`` the flattening that keeps the first two
factors as rows never sees the third one split.  A second flattening
sharing the first block fills in the missing factor.
"""
import numpy as np

from mspm import MSPMConfig, decompose
from mspm.bench import ExperimentSpec, gen_instance, result_ascore

inst = gen_instance(ExperimentSpec([(1, 30)] * 3, 20, noise=0.01, seed=2))
res = decompose(inst.tensor, MSPMConfig(plan=((1, 1, 0), (1, 0, 1)), rank=20))
print(res.diagnostics["plan"])
print("status", res.status, "rank", res.rank)
print("relative error", res.diagnostics["relative_error"])
for b in range(3):
    print(f"ascore block {b}: {result_ascore(inst.truth, res, block=b):.6f}")
steps = res.diagnostics["components"][0]["completion"]["steps"]
print("completion steps for the first component:", [(s["basis"], round(s["sigma"], 6)) for s in steps])
print("weights", np.round(np.sort(res.lambdas()), 3))
