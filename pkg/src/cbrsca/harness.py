"""Experiment orchestration: seeded runs, metrics, sweeps and CSV output."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .coexist import all_super_nodes
from .graph import (ConflictGraph, augment_coexistence, build_gaa_binary_graph,
                    build_nonbinary_graph, build_pa_graph, build_pa_job_graph)
from .objective import (PENALTY_KINDS, REWARD_KINDS, CapacityParams, assign_rewards,
                        capacity_loss_per_channel, channel_capacity, weight_max_reward)
from .scenario import (PA_CHANNELS, GAAScenario, PAScenario, conflict_matrix,
                       generate_gaa_scenario, generate_pa_scenario, scenario_from_csv)
from .solve import (PartitionMatroid, Solution, UtilityFunction, gmwis, mra, npsmc,
                    random_select, solution_blocks, um, verify)
from .radio import dbm_to_watts, planar_distance, received_power_dbm

SOLVERS = ("gmwis", "um", "npsmc", "mra", "random")
COLUMNS = ("seed", "axis_value", "solver", "n_nodes", "n_vertices", "n_edges", "p", "p1",
           "p2", "utility", "total_interference_w", "capacity_mbps", "runtime_ms")
SWEEP_AXES = {
    "lambda": "lam", "lam": "lam", "alpha_bar": "alpha_bar", "epsilon": "eps", "eps": "eps",
    "r": "radius_km", "radius_km": "radius_km", "m": "m", "r_s": "r_s",
    "n_nodes": "n_nodes", "trials": "trials",
}
# stream ids for seed derivation; appending a solver never changes earlier streams
_STREAM_SOLVER = 1


@dataclass(frozen=True)
class ExperimentConfig:
    tier: str = "gaa"
    seeds: tuple = (0,)
    solvers: tuple = ("gmwis",)
    # PA tier
    m: int = 10
    r_s: float = 1.0
    n_channels: int = PA_CHANNELS
    # GAA tier
    radius_km: float = 0.8
    n_nodes: int | None = None
    density_per_km2: float = 75.0
    pa_per_licensee: int = 10
    node_csv: str | None = None
    center_latlon: tuple | None = None
    # solver knobs
    lam: float = 0.0
    alpha_bar: float = 1.0
    eps: float = 0.0
    reward: str = "linear"
    penalty: str = "interference"
    trials: int = 10000
    # output
    out: str | None = None
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.center_latlon is not None:
            object.__setattr__(self, "center_latlon", tuple(self.center_latlon))
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.tier not in ("pa", "gaa"):
            raise ValueError(f"unknown tier {self.tier!r}")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad or not self.solvers:
            raise ValueError(f"unknown solvers {bad}")
        if self.tier == "gaa" and "npsmc" in self.solvers:
            raise ValueError("npsmc runs on PA scenarios only")
        if min(self.lam, self.alpha_bar, self.eps) < 0:
            raise ValueError("lambda, alpha_bar and epsilon must be non-negative")
        if self.reward not in REWARD_KINDS or self.penalty not in PENALTY_KINDS:
            raise ValueError("unknown reward or penalty kind")
        if self.trials < 1 or self.workers < 1:
            raise ValueError("trials and workers must be positive")
        if self.node_csv is not None and self.center_latlon is None:
            raise ValueError("a node CSV needs center_latlon")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        d["solvers"] = list(self.solvers)
        if self.center_latlon is not None:
            d["center_latlon"] = list(self.center_latlon)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        d = dict(d)
        if "seeds" in d and isinstance(d["seeds"], int):
            d["seeds"] = tuple(range(d["seeds"]))
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class Metrics:
    p: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    utility: float = 0.0
    total_interference_w: float | None = None
    capacity_mbps: float | None = None


# ------------------------------------------------------------------ metrics

def _pair_interference(s: GAAScenario, per_node: dict, conflicts) -> float:
    ids = sorted(per_node)
    pos_of = {nd.id: k for k, nd in enumerate(s.nodes)}
    total = 0.0
    for i in ids:
        for j in ids:
            if i == j:
                continue
            k = per_node[i].overlap(per_node[j])
            if k and conflicts[pos_of[i], pos_of[j]]:
                vi, vj = s.node(i), s.node(j)
                d = planar_distance(vi.pos, vj.pos)
                total += k * float(dbm_to_watts(received_power_dbm(d, vj.params)))
    return total


def _capacity(s: GAAScenario, per_node: dict, conflicts, cap: CapacityParams) -> float:
    pos_of = {nd.id: k for k, nd in enumerate(s.nodes)}
    base = {}
    total = 0.0
    for i, b in sorted(per_node.items()):
        nd = s.node(i)
        if nd.params not in base:
            base[nd.params] = channel_capacity(nd, cap) / 1e6
        total += b.length * base[nd.params]
    for i in sorted(per_node):
        for j in sorted(per_node):
            k = per_node[i].overlap(per_node[j]) if i != j else 0
            if k and conflicts[pos_of[i], pos_of[j]]:
                total -= k * capacity_loss_per_channel(s.node(i), s.node(j), cap)
    return total


def compute_metrics(sol: Solution, scenario, conflicts=None,
                    cap: CapacityParams | None = None) -> Metrics:
    """Coverage ratios plus (GAA only) interference and capacity of a solution.

    p2 counts each served node's block length once against the sum of the
    largest demands.
    """
    per_node = sol.per_node
    if isinstance(scenario, PAScenario):
        n = scenario.n
        total = sum(a.n_pals for a in scenario.service_areas)
        served = len(per_node) / n if n else 0.0
        got = sum(b.length for b in per_node.values())
        return Metrics(p=served, p1=served, p2=got / total if total else 0.0,
                       utility=sol.objective)
    n = scenario.n
    demand = sum(max(nd.demand_set) for nd in scenario.nodes)
    p1 = len(per_node) / n if n else 0.0
    p2 = sum(b.length for b in per_node.values()) / demand if demand else 0.0
    if conflicts is None:
        conflicts = conflict_matrix(scenario)
    return Metrics(p=p1, p1=p1, p2=p2, utility=sol.objective,
                   total_interference_w=_pair_interference(scenario, per_node, conflicts),
                   capacity_mbps=_capacity(scenario, per_node, conflicts, cap or CapacityParams()))


# ----------------------------------------------------------------- instance

class Instance:
    """One seeded scenario and the graphs the solvers need, built lazily."""

    def __init__(self, cfg: ExperimentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed

    @cached_property
    def scenario(self):
        c = self.cfg
        if c.tier == "pa":
            return generate_pa_scenario(c.m, c.r_s, self.seed)
        if c.node_csv:
            return scenario_from_csv(c.node_csv, c.center_latlon, c.radius_km, seed=self.seed,
                                     pa_per_licensee=c.pa_per_licensee)
        return generate_gaa_scenario(c.radius_km, self.seed, n_nodes=c.n_nodes,
                                     density_per_km2=c.density_per_km2,
                                     pa_per_licensee=c.pa_per_licensee)

    @cached_property
    def conflicts(self):
        return conflict_matrix(self.scenario)

    @cached_property
    def binary(self) -> ConflictGraph:
        if self.cfg.tier == "pa":
            return build_pa_graph(self.scenario)
        g = build_gaa_binary_graph(self.scenario, self.conflicts)
        return assign_rewards(g, self.cfg.reward, self.scenario)

    @cached_property
    def coexist(self) -> ConflictGraph:
        if self.cfg.tier == "pa" or self.cfg.alpha_bar == 0:
            return self.binary
        blocks = {v.block for v in self.binary.vertices}
        supers = all_super_nodes(self.scenario, blocks, self.cfg.alpha_bar, self.seed,
                                 self.conflicts)
        g = augment_coexistence(self.binary, supers)
        return assign_rewards(g, self.cfg.reward, self.scenario)

    @cached_property
    def nonbinary(self) -> ConflictGraph:
        if self.cfg.tier == "pa":
            return self.binary
        g = build_nonbinary_graph(self.scenario, self.cfg.penalty, self.conflicts)
        return assign_rewards(g, self.cfg.reward, self.scenario)

    @cached_property
    def job(self):
        return build_pa_job_graph(self.scenario)


def solver_seed(seed: int, solver: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, _STREAM_SOLVER, SOLVERS.index(solver)])


def run_solver(inst: Instance, solver: str) -> tuple[Solution, ConflictGraph, str]:
    """Solve one instance; returns the solution, the graph it ran on and its verify mode."""
    c = inst.cfg
    if solver == "npsmc":
        g, demand = inst.job
        return npsmc(g, demand, c.n_channels), g, "multicolor"
    if solver == "gmwis":
        g = inst.coexist
        w = [weight_max_reward(v, c.lam) for v in g.vertices]
        return gmwis(g, w), g, "independent"
    if solver == "mra":
        return mra(inst.binary), inst.binary, "independent"
    g = inst.nonbinary
    if solver == "um":
        return um(PartitionMatroid.of_graph(g), UtilityFunction(g, c.lam), c.eps), g, \
            "cluster_feasible"
    return random_select(g, c.lam, c.trials, solver_seed(inst.seed, solver)), g, \
        "cluster_feasible"


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def _seed_rows(cfg: ExperimentConfig, seed: int, axis_value) -> list[dict]:
    inst = Instance(cfg, seed)
    try:
        sc = inst.scenario
    except (ValueError, RuntimeError) as exc:
        return [dict(seed=seed, axis_value=axis_value, solver=s, skipped=str(exc))
                for s in cfg.solvers]
    rows = []
    for s in cfg.solvers:
        t0 = time.perf_counter()
        sol, g, mode = run_solver(inst, s)
        if not verify(g, sol.selected, mode, solution_blocks(sol)):
            raise AssertionError(f"{s} returned an infeasible solution for seed {seed}")
        ms = (time.perf_counter() - t0) * 1e3
        met = compute_metrics(sol, sc, None if cfg.tier == "pa" else inst.conflicts)
        rows.append(dict(seed=seed, axis_value=axis_value, solver=s, n_nodes=sc.n,
                         n_vertices=g.n, n_edges=g.n_edges, p=met.p, p1=met.p1, p2=met.p2,
                         utility=met.utility, total_interference_w=met.total_interference_w,
                         capacity_mbps=met.capacity_mbps,
                         runtime_ms=ms if cfg.timing else None))
    return rows


def _seed_job(args):
    return _seed_rows(*args)


def _mean_rows(cfg, rows: list[dict], axis_value) -> list[dict]:
    out = []
    for s in cfg.solvers:
        ok = [r for r in rows if r["solver"] == s and "skipped" not in r]
        m = dict(seed="mean", axis_value=axis_value, solver=s)
        for col in COLUMNS[3:]:
            vals = [r[col] for r in ok if r.get(col) is not None]
            m[col] = float(np.mean(vals)) if vals else None
        out.append(m)
    return out


def run_experiment(cfg: ExperimentConfig, axis_value=None) -> list[dict]:
    """Per-seed rows for every solver followed by one mean row per solver.

    Every solver sees the same scenario for a given seed. A seed whose
    scenario cannot be generated yields rows marked ``skipped``.
    """
    jobs = [(cfg, seed, axis_value) for seed in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            per_seed = list(ex.map(_seed_job, jobs))
    else:
        per_seed = [_seed_job(j) for j in jobs]
    rows = [r for rs in per_seed for r in rs]
    return rows + _mean_rows(cfg, rows, axis_value)


def sweep(cfg: ExperimentConfig, axis: str, values: Sequence) -> list[dict]:
    """run_experiment for each value of one config field, in long format."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"cannot sweep {axis!r}; choose from {sorted(SWEEP_AXES)}")
    name = SWEEP_AXES[axis]
    rows = []
    for v in values:
        rows.extend(run_experiment(dataclasses.replace(cfg, **{name: v}), axis_value=v))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def mean_of(rows: list[dict], solver: str, col: str, axis_value=None) -> float:
    for r in rows:
        if r["seed"] == "mean" and r["solver"] == solver and r["axis_value"] == axis_value:
            return r[col]
    raise KeyError((solver, col, axis_value))


def write_results(rows: list[dict], cfg: ExperimentConfig, path, wall_s: float,
                  extra: dict | None = None) -> Path:
    """Write the CSV and a ``.manifest.json`` next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows))
    import scipy
    manifest = {
        "config": cfg.to_dict(),
        "versions": {"cbrsca": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "wall_clock_s": wall_s,
        "skipped": [{"seed": r["seed"], "solver": r["solver"], "reason": r["skipped"]}
                    for r in rows if "skipped" in r],
    }
    if extra:
        manifest.update(extra)
    mpath = path.with_suffix(".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return mpath
