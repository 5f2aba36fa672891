"""
Priority access: greedy MWIS against sum multicoloring
======================================================

A 10 x 10 grid of census tracts, licensees with circular service areas,
and 10 PAL channels. Each licensee asks for one channel per tract it
covers. We compare two ways to hand out contiguous blocks.
"""
from cbrsca.graph import build_pa_graph
from cbrsca.harness import ExperimentConfig, mean_of, run_experiment
from cbrsca.scenario import generate_pa_scenario
from cbrsca.solve import gmwis

# one scenario up close
sc = generate_pa_scenario(10, 1.0, seed=0)
g = build_pa_graph(sc)
print(f"{len(sc.service_areas)} service areas, {g.n} NC pairs, {g.n_edges} conflict edges")

sol = gmwis(g)
print(f"gmwis satisfied {len(sol.per_node)} of {len(sc.service_areas)} areas")
for owner, block in sorted(sol.per_node.items())[:5]:
    print(f"  area {owner}: channels {block.lo}..{block.hi}")

# now the averages over 20 seeds
cfg = ExperimentConfig(tier="pa", seeds=tuple(range(20)), solvers=("gmwis", "npsmc"))
rows = run_experiment(cfg)
for s in cfg.solvers:
    print(f"{s:6s} mean p = {mean_of(rows, s, 'p'):.3f}  mean p2 = {mean_of(rows, s, 'p2'):.3f}")
