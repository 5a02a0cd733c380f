"""
Choosing a flattening
=====================

For ``S^4(R^25) (x) R^k`` the planner prefers splitting two symmetric
slots to the rows while ``k`` is small, and one slot once ``k`` passes
``(n^2 + 3n - 2) / (2n - 2)``.
"""
from mspm.planner import optimal_plan, plan_csv

n = 25
print("crossover at k =", (n * n + 3 * n - 2) / (2 * n - 2))
for k in (5, 10, 14, 15, 20, 40):
    p = optimal_plan([(4, n), (1, k)])
    print(f"k={k:3d}  f={p.f}  r_max={p.r_max}  mode={p.mode}")

# the full table for a small case, as written by `mspm plan`
print()
print(plan_csv([(4, 10), (1, 5)]))

# three vector blocks: no single flattening recovers everything, so a partner is paired in
p = optimal_plan([(1, 30)] * 3)
print(p.describe())
