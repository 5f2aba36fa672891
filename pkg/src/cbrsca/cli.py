"""Command-line entry point: gen, graph, solve, bench, sweep."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .graph import ConflictGraph, build_gaa_binary_graph, build_nonbinary_graph, build_pa_graph
from .harness import (SOLVERS, SWEEP_AXES, ExperimentConfig, Instance, rows_to_csv,
                      run_experiment, run_solver, sweep, write_results)
from .objective import PENALTY_KINDS, REWARD_KINDS, assign_rewards
from .scenario import PAScenario, scenario_from_json, scenario_to_json
from .solve import (PartitionMatroid, UtilityFunction, gmwis, mra, npsmc, random_select,
                    solution_blocks, um, verify)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    over = {
        "lam": args.lam, "alpha_bar": args.alpha_bar, "eps": args.epsilon,
        "reward": args.reward, "penalty": args.penalty, "trials": args.trials,
    }
    for k, v in over.items():
        if v is not None:
            base[k] = v
    if getattr(args, "tier", None):
        base["tier"] = args.tier
    if args.seeds is not None:
        start = args.seed or 0
        base["seeds"] = list(range(start, start + args.seeds))
    elif args.seed is not None:
        base["seeds"] = [args.seed]
    if args.solver:
        base["solvers"] = args.solver
    for k in ("m", "r_s", "radius_km", "n_nodes"):
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    if getattr(args, "timing", False):
        base["timing"] = True
    return ExperimentConfig.from_dict(base)


def cmd_gen(args) -> int:
    cfg = _config(args)
    inst = Instance(cfg, cfg.seeds[0])
    _emit(scenario_to_json(inst.scenario), args.out)
    return 0


def _read_scenario(path):
    return scenario_from_json(Path(path).read_text())


def cmd_graph(args) -> int:
    sc = _read_scenario(args.scenario)
    if isinstance(sc, PAScenario):
        g = build_pa_graph(sc)
    elif args.kind == "nonbinary":
        g = assign_rewards(build_nonbinary_graph(sc, args.penalty or "interference"),
                           args.reward or "linear", sc)
    else:
        g = assign_rewards(build_gaa_binary_graph(sc), args.reward or "linear", sc)
    _emit(g.to_json(), args.out)
    return 0


def cmd_solve(args) -> int:
    solver = (args.solver or ["gmwis"])[0]
    if args.graph:
        g = ConflictGraph.from_dict(json.loads(Path(args.graph).read_text()))
        lam = args.lam or 0.0
        eps = args.epsilon or 0.0
        if solver == "gmwis":
            sol, mode = gmwis(g), "independent"
        elif solver == "mra":
            sol, mode = mra(g), "independent"
        elif solver == "um":
            sol, mode = um(PartitionMatroid.of_graph(g), UtilityFunction(g, lam), eps), \
                "cluster_feasible"
        elif solver == "random":
            sol, mode = random_select(g, lam, args.trials or 10000, args.seed or 0), \
                "cluster_feasible"
        else:
            demand = {v.id: v.block.length for v in g.vertices}
            sol, mode = npsmc(g, demand, args.colors), "multicolor"
    elif args.scenario:
        sc = _read_scenario(args.scenario)
        args.tier = "pa" if isinstance(sc, PAScenario) else "gaa"
        args.solver = [solver]
        cfg = _config(args)
        inst = Instance(cfg, cfg.seeds[0])
        inst.__dict__["scenario"] = sc
        sol, g, mode = run_solver(inst, solver)
    else:
        raise SystemExit("solve needs --graph or --scenario")
    if not verify(g, sol.selected, mode, solution_blocks(sol)):
        raise SystemExit("solver produced an infeasible solution")
    _emit(sol.to_json(), args.out)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    rows = run_experiment(cfg)
    _finish(rows, cfg, args.out or cfg.out, time.perf_counter() - t0)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [_number(v) for v in args.values.split(",")]
    t0 = time.perf_counter()
    rows = sweep(cfg, args.axis, values)
    _finish(rows, cfg, args.out or cfg.out, time.perf_counter() - t0,
            {"axis": args.axis, "values": values})
    return 0


def _finish(rows, cfg, out, wall, extra=None):
    if out:
        write_results(rows, cfg, out, wall, extra)
    else:
        sys.stdout.write(rows_to_csv(rows))


def _number(s: str):
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        return float(s)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int)
    common.add_argument("--seeds", type=int, metavar="N", help="run seeds seed..seed+N-1")
    common.add_argument("--solver", choices=SOLVERS, action="append")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--alpha-bar", dest="alpha_bar", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--reward", choices=REWARD_KINDS)
    common.add_argument("--penalty", choices=PENALTY_KINDS)
    common.add_argument("--trials", type=int)
    common.add_argument("--out")
    common.add_argument("--tier", choices=("pa", "gaa"))
    common.add_argument("--m", type=int)
    common.add_argument("--r-s", dest="r_s", type=float)
    common.add_argument("--radius", dest="radius_km", type=float)
    common.add_argument("--n-nodes", dest="n_nodes", type=int)

    ap = argparse.ArgumentParser(prog="cbrsca", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("gen", parents=[common], help="generate a scenario as JSON")
    p = sub.add_parser("graph", parents=[common], help="build a conflict graph from a scenario")
    p.add_argument("scenario")
    p.add_argument("--kind", choices=("binary", "nonbinary"), default="binary")
    p = sub.add_parser("solve", parents=[common], help="solve a graph or scenario")
    p.add_argument("--graph")
    p.add_argument("--scenario")
    p.add_argument("--colors", type=int, default=10, help="channels for npsmc on a job graph")
    p = sub.add_parser("bench", parents=[common], help="run seeds and write a results CSV")
    p.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte-identity)")
    p = sub.add_parser("sweep", parents=[common], help="vary one parameter")
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--timing", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"gen": cmd_gen, "graph": cmd_graph, "solve": cmd_solve,
               "bench": cmd_bench, "sweep": cmd_sweep}[args.cmd]
    try:
        return handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
