"""
Serving more nodes or giving each node more spectrum
====================================================

The max-reward weight is lambda + reward. At lambda = 0 wide blocks win;
a large lambda favours serving as many nodes as possible.
"""
from cbrsca.harness import ExperimentConfig, mean_of, sweep

cfg = ExperimentConfig(tier="gaa", seeds=(0, 1, 2, 3, 4), solvers=("gmwis",))
rows = sweep(cfg, "lambda", [0, 1, 2, 4, 8])

print("lambda   p1     p2")
for lam in (0, 1, 2, 4, 8):
    print(f"{lam:6}  {mean_of(rows, 'gmwis', 'p1', lam):.3f}  "
          f"{mean_of(rows, 'gmwis', 'p2', lam):.3f}")
