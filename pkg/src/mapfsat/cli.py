"""Command line interface: `mapf solve` and `mapf bench`.

Exit code 0 means the command ran; 2 means a map or scenario file failed to
parse.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

from .bench import discover_suite, run_benchmark, write_csv
from .instance import ParseError, build_instance, parse_map, parse_scen
from .solvers import ALGORITHMS, SolverConfig, solution_json


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mapf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance")
    p_solve.add_argument("--map", required=True, help="movingai .map file")
    p_solve.add_argument("--scen", required=True, help="movingai .scen file")
    p_solve.add_argument("--agents", type=int, required=True)
    p_solve.add_argument("--algo", choices=sorted(ALGORITHMS), default="heuristic")
    p_solve.add_argument("--timeout", type=float, default=128.0, help="seconds")
    p_solve.add_argument("--cost-cap", type=int, default=None)
    p_solve.add_argument("--out", default=None, help="solution JSON path (default stdout)")

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("--suite", required=True, help="directory of .map/.scen pairs")
    p_bench.add_argument("--algos", default="heuristic",
                         help="comma-separated algorithm names")
    p_bench.add_argument("--agents", default="2",
                         help="comma-separated agent counts")
    p_bench.add_argument("--per-count", type=int, default=25)
    p_bench.add_argument("--timeout", type=float, default=128.0)
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--csv", required=True, help="output CSV path")
    return parser


def _cmd_solve(args) -> int:
    try:
        graph = parse_map(FsPath(args.map).read_text())
        specs = parse_scen(FsPath(args.scen).read_text())
    except ParseError as exc:
        print(f"mapf: {exc}", file=sys.stderr)
        return 2
    instance = build_instance(graph, specs, args.agents)
    config = SolverConfig(
        timeout_s=args.timeout, cost_cap=args.cost_cap, algorithm=args.algo
    )
    outcome = ALGORITHMS[args.algo](instance, config)
    instance_id = f"{FsPath(args.map).name}:{FsPath(args.scen).name}:{args.agents}"
    payload = json.dumps(solution_json(instance_id, args.algo, outcome), indent=2)
    if args.out:
        FsPath(args.out).write_text(payload + "\n")
    else:
        print(payload)
    return 0


def _cmd_bench(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    counts = [int(n) for n in args.agents.split(",") if n.strip()]
    records = run_benchmark(
        args.suite, algos, counts,
        per_count=args.per_count, timeout_s=args.timeout, workers=args.workers,
    )
    write_csv(records, args.csv)
    print(f"wrote {len(records)} records to {args.csv}")
    # distinguish parse failures from solver-level error records
    for scen in discover_suite(args.suite)[: args.per_count]:
        try:
            specs = parse_scen(scen.read_text())
            if specs:
                parse_map((scen.parent / specs[0].map_name).read_text())
        except ParseError as exc:
            print(f"mapf: {exc}", file=sys.stderr)
            return 2
        except OSError:
            continue  # missing files already surfaced as error records
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    return _cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
