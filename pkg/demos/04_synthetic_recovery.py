"""
Recovering planted components
=============================

A rank-30 tensor in ``S^2(R^40) (x) R^20``, first exact and then with one
percent Gaussian noise.
"""
from mspm.bench import ExperimentSpec, metrics_csv, run_experiment

for noise in (0.0, 0.01):
    spec = ExperimentSpec([(2, 40), (1, 20)], 30, noise=noise, seed=0, repetitions=3)
    rows = run_experiment(spec)
    print(f"noise {noise}")
    for r in rows:
        print(f"  rep {r.rep}: error {r.rel_error:.2e}  ascore {r.ascore:.8f}  restarts {r.restarts}  {r.wall_time:.2f}s")

# the same rows as CSV, with timing switched off so the output is byte-stable
print(metrics_csv(run_experiment(ExperimentSpec([(4, 10), (1, 5)], 12, noise=0.01, plan=(2, 1)), timing=False)))
