"""
Where the power method goes
===========================

Start the power method from a 100x100 grid of third-factor directions on
a rank-3 tensor in ``(R^3)^{(x)3}`` and label each start by the planted
component it reaches.
"""
from mspm.bench import basin_scan

res = basin_scan(seed=0, grid=100)
print("label counts", res.frequencies())

# a coarse text map: every fifth grid point, one character per label
marks = {-1: "?", 0: ".", 1: "1", 2: "2", 3: "3"}
grid = res.label.reshape(100, 100)
for row in grid[::5]:
    print("".join(marks[int(v)] for v in row[::2]))
