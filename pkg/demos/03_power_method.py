"""
The power method on a subspace
==============================

The slices of a flattening's column space span a space ``A``.  Rank-one
tensors inside ``A`` are exactly the maximizers of ``F_A`` with value one,
and the power method finds them without forming the squared tensor.
"""
import numpy as np

from mspm import PowerConfig, ShiftPolicy, run_pshopm
from mspm.bench import ExperimentSpec, gen_instance
from mspm.power import ContractionCounter, pmi_step, pmie_step, shifts_for
from mspm.subspace import extract

inst = gen_instance(ExperimentSpec([(2, 12), (1, 8)], 6, seed=1))
state, S, s = extract(inst.tensor, (1, 1))
print("singular values", np.round(s[:8], 4), "-> rank", state.rank)

p = run_pshopm(S, PowerConfig(trace=True), ShiftPolicy("adaptive"), rng=0)
print(f"F_A = {p.sigma:.14f} after {p.iterations} sweeps, residual {p.residual:.1e}")
for it, val, move, gammas in p.trace[:: max(1, len(p.trace) // 8)]:
    print(f"  sweep {it:4d}  F_A={val:.10f}  move={move:.1e}  gamma={gammas[0]:.3f}")

# the point found is one of the planted row factors
a, c = p.factors
best = max(abs(a @ t.factors[0]) * abs(c @ t.factors[1]) for t in inst.truth)
print("best planted match", best)

# sequential and recursive-halving sweeps give the same iterate
T = inst.tensor / inst.tensor.norm()
g = shifts_for(T, ShiftPolicy("norm_bound"))
w = p.factors
counter = ContractionCounter()
x = pmi_step(T, w, g)
y = pmie_step(T, w, g, counter=counter)
print("sweep gap", max(np.abs(a - b).max() for a, b in zip(x, y)), "full contractions", counter.full)
