#!/usr/bin/env python3
"""
DLNS command-line driver

  python main.py gen --family random --n 20 --p1 0.5 --d 10 --seed 7 --out inst.json
  python main.py solve --algo tdbr --in inst.json --iters 200 --seed 7 --trace t.csv
  python main.py solve --algo exact --in small.json
  python main.py normalize --trace tdbr=t1.csv --trace dsa=t2.csv --out norm.json
  python main.py bench --family random --instances 5 --algos tdbr,dsa --out-dir runs/
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import dlns_config
from dlns.batch_runner import BenchJob, SolveOptions, run_batch, solve_instance
from dlns.errors import ConfigError, DlnsError
from dlns.generators import GENERATORS
from dlns.instance_io import load_instance, save_instance
from dlns.trace import normalize_quality, read_csv, summarize_pool, write_csv, write_summary
from dlns.utility import format_utility


def _seed(args) -> int:
    return args.seed if args.seed is not None else dlns_config.get_default_seed()


def _generate(args, seed: int):
    family = args.family
    if family == "random":
        return GENERATORS[family](n=args.n, p1=args.p1, d=args.d, cost_max=args.cost_max, seed=seed)
    if family == "scale-free":
        return GENERATORS[family](n=args.n, d=args.d, cost_max=args.cost_max, seed=seed)
    if family == "grid":
        return GENERATORS[family](rows=args.rows, cols=args.cols, d=args.d, cost_max=args.cost_max, seed=seed)
    return GENERATORS[family](m_meetings=args.meetings, participants_pool=args.participants,
                              horizon=args.horizon, seed=seed)


def cmd_gen(args) -> int:
    inst = _generate(args, _seed(args))
    save_instance(inst, args.out)
    print(f"✅ {inst.name}: {len(inst.variables)} variables, {len(inst.functions)} functions -> {args.out}")
    return 0


def _solve_options(args, algorithm: Optional[str] = None) -> SolveOptions:
    return SolveOptions(
        algorithm=algorithm or args.algo,
        destroy=args.destroy,
        p_destroy=args.p_destroy,
        iterations=args.iters,
        wall_timeout=None if args.timeout_ms is None else args.timeout_ms / 1000.0,
        simulated_timeout=args.sim_timeout,
        gap_threshold=args.gap,
        seed=_seed(args),
        t_cc=args.t_cc,
        t_msg=args.t_msg,
        width_cap=args.width_cap,
        bound_rule=args.bound_rule,
        init_mode=args.init,
    )


def cmd_solve(args) -> int:
    inst = load_instance(args.input)
    trace = solve_instance(inst, _solve_options(args))
    if args.trace:
        write_csv(trace, args.trace)
    if args.summary:
        write_summary(summarize_pool({trace.algorithm: trace}), args.summary)
    if args.algo == "exact":
        print(f"optimum: {format_utility(trace.best_lb)}")
        print(f"assignment: {json.dumps({str(k): v for k, v in sorted(trace.best_solution.items())})}")
        if trace.infeasible:
            print("❌ no feasible assignment")
        return 0
    ub = "-" if trace.best_ub is None else format_utility(trace.best_ub)
    rho = "-" if trace.final.rho is None else f"{trace.final.rho:.4f}"
    print(f"✅ {trace.algorithm} on {inst.name}: {trace.iterations} iterations, "
          f"best LB {format_utility(trace.best_lb)}, best UB {ub}, rho {rho}")
    return 0


def cmd_normalize(args) -> int:
    traces = {}
    for item in args.trace:
        if "=" not in item:
            raise ConfigError(f"--trace expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        traces[name] = read_csv(path, algorithm=name)
    result = normalize_quality(traces, axis=args.axis, buckets=args.buckets)
    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"✅ normalized {len(traces)} traces -> {args.out}")
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    seed = _seed(args)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    unknown = set(algos) - set(dlns_config.get_bench_config()["algorithms"])
    if unknown:
        raise ConfigError(f"unknown algorithms {sorted(unknown)}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs: List[BenchJob] = []
    instances = []
    for i in range(args.instances):
        inst = _generate(args, seed + i)
        save_instance(inst, out_dir / f"{inst.name}.json")
        instances.append(inst)
        for algo in algos:
            options = _solve_options(args, algorithm=algo)
            options.seed = seed + i
            jobs.append(BenchJob(name=f"{inst.name}/{algo}", instance=inst, options=options))
    traces = run_batch(jobs)
    summary = {}
    for inst in instances:
        pool = {algo: traces[f"{inst.name}/{algo}"] for algo in algos}
        for algo, trace in pool.items():
            write_csv(trace, out_dir / f"{inst.name}.{algo}.csv")
        summary[inst.name] = {
            "summary": summarize_pool(pool),
            "normalized": normalize_quality(pool, axis=args.axis, buckets=args.buckets),
        }
    write_summary(summary, out_dir / "summary.json")
    print(f"✅ {len(jobs)} runs over {len(instances)} instances -> {out_dir}")
    return 0


def _add_generator_flags(parser: argparse.ArgumentParser):
    gen = dlns_config.get_generator_config()
    parser.add_argument("--family", choices=gen["families"], default="random")
    parser.add_argument("--n", type=int, default=None, help="number of agents")
    parser.add_argument("--p1", type=float, default=None, help="random-network density")
    parser.add_argument("--d", type=int, default=None, help="domain size")
    parser.add_argument("--cost-max", type=int, default=None)
    parser.add_argument("--rows", type=int, default=None)
    parser.add_argument("--cols", type=int, default=None)
    parser.add_argument("--meetings", type=int, default=None)
    parser.add_argument("--participants", type=int, default=None, help="meeting participant pool size")
    parser.add_argument("--horizon", type=int, default=None, help="meeting time slots")


def _add_solver_flags(parser: argparse.ArgumentParser):
    bench = dlns_config.get_bench_config()
    parser.add_argument("--destroy", choices=bench["destroy_strategies"], default="random")
    parser.add_argument("--p-destroy", type=float, default=None)
    parser.add_argument("--iters", type=int, default=None)
    parser.add_argument("--timeout-ms", type=float, default=None)
    parser.add_argument("--sim-timeout", type=float, default=None)
    parser.add_argument("--gap", type=float, default=None, help="stop when (UB-LB)/UB falls to this")
    parser.add_argument("--t-msg", type=float, default=None)
    parser.add_argument("--t-cc", type=float, default=None)
    parser.add_argument("--width-cap", type=int, default=None)
    parser.add_argument("--bound-rule", choices=["partition", "memoized-mean"], default=None)
    parser.add_argument("--init", choices=["random", "greedy"], default=None)


def build_parser() -> argparse.ArgumentParser:
    bench = dlns_config.get_bench_config()
    parser = argparse.ArgumentParser(prog="dlns", description="Distributed large neighborhood search for DCOPs")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--seed", type=int, default=None, help=f"falls back to ${bench['seed_env_var']}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    _add_generator_flags(gen)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="run one algorithm on an instance file")
    solve.add_argument("--algo", choices=bench["algorithms"], default="tdbr")
    solve.add_argument("--in", dest="input", required=True)
    _add_solver_flags(solve)
    solve.add_argument("--trace", default=None, help="per-iteration CSV")
    solve.add_argument("--summary", default=None, help="summary JSON")
    solve.set_defaults(func=cmd_solve)

    norm = sub.add_parser("normalize", help="normalize LB/UB series across traces")
    norm.add_argument("--trace", action="append", required=True, help="NAME=PATH, repeatable")
    norm.add_argument("--axis", choices=bench["normalization_axes"], default="sim_time")
    norm.add_argument("--buckets", type=int, default=None)
    norm.add_argument("--out", default=None)
    norm.set_defaults(func=cmd_normalize)

    batch = sub.add_parser("bench", help="generate instances and compare algorithms")
    _add_generator_flags(batch)
    _add_solver_flags(batch)
    batch.add_argument("--instances", type=int, default=3)
    batch.add_argument("--algos", default="tdbr,dsa")
    batch.add_argument("--axis", choices=bench["normalization_axes"], default="sim_time")
    batch.add_argument("--buckets", type=int, default=None)
    batch.add_argument("--out-dir", required=True)
    batch.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    dlns_config.configure_logging(args.verbose)
    try:
        return args.func(args)
    except DlnsError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
