"""
Real node locations from a CSV file
===================================

Rows are ``id,lat,lon``. Locations are projected onto a local plane about
the given centre; nodes outside the radius are dropped.
"""
import tempfile
from pathlib import Path

import numpy as np

from cbrsca.harness import ExperimentConfig, mean_of, run_experiment
from cbrsca.scenario import scenario_from_csv

rng = np.random.default_rng(0)
lat0, lon0 = 40.7128, -74.0060
lines = ["id,lat,lon"]
for k in range(120):
    lines.append(f"{k},{lat0 + rng.normal(0, 0.003):.6f},{lon0 + rng.normal(0, 0.004):.6f}")

path = Path(tempfile.mkdtemp()) / "nodes.csv"
path.write_text("\n".join(lines) + "\n")

sc = scenario_from_csv(path, (lat0, lon0), radius_km=0.5)
print(f"kept {sc.n} of 120 nodes inside 0.5 km")

cfg = ExperimentConfig(tier="gaa", node_csv=str(path), center_latlon=(lat0, lon0),
                       radius_km=0.5, seeds=(0, 1), solvers=("gmwis", "mra"))
rows = run_experiment(cfg)
for s in cfg.solvers:
    print(f"{s}: p1={mean_of(rows, s, 'p1'):.3f} p2={mean_of(rows, s, 'p2'):.3f}")
