"""Benchmark harness: batched runs, success rates, cactus data, CSV.

A suite directory holds `.scen` files plus the `.map` files they name.
Scenario files are taken in sorted order; one benchmark instance is the
first N agents of one scenario.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Sequence

from .instance import ParseError, build_instance, parse_map, parse_scen
from .solvers import ALGORITHMS, SolverConfig

ERROR = "error"

CSV_COLUMNS = ["map", "scen", "agents", "algo", "status", "runtime_s", "soc",
               "sat_calls", "conflicts"]


@dataclass(frozen=True)
class BenchRecord:
    map_name: str
    scen_name: str
    agents: int
    algo: str
    status: str
    runtime_s: float
    soc: int | None
    sat_calls: int
    conflicts: int


def discover_suite(suite_dir: str | FsPath) -> list[FsPath]:
    """Scenario files of a suite, in sorted order."""
    return sorted(FsPath(suite_dir).glob("*.scen"))


def _run_one(scen_path: FsPath, agents: int, algo: str, timeout_s: float) -> BenchRecord:
    scen_name = scen_path.name

    def err(map_name: str = "") -> BenchRecord:
        return BenchRecord(map_name, scen_name, agents, algo, ERROR, 0.0, None, 0, 0)

    try:
        specs = parse_scen(scen_path.read_text())
    except (OSError, ParseError):
        return err()
    if not specs:
        return err()
    map_name = specs[0].map_name
    map_path = scen_path.parent / map_name
    try:
        graph = parse_map(map_path.read_text())
    except (OSError, ParseError):
        return err(map_name)
    try:
        instance = build_instance(graph, specs, agents)
    except ValueError:
        return err(map_name)
    config = SolverConfig(timeout_s=timeout_s, algorithm=algo)
    outcome = ALGORITHMS[algo](instance, config)
    return BenchRecord(
        map_name=map_name,
        scen_name=scen_name,
        agents=agents,
        algo=algo,
        status=outcome.status,
        runtime_s=outcome.stats.runtime_s,
        soc=outcome.soc,
        sat_calls=outcome.stats.sat_calls,
        conflicts=outcome.stats.conflicts,
    )


def run_benchmark(
    suite_dir: str | FsPath,
    algorithms: Sequence[str],
    agent_counts: Sequence[int],
    per_count: int = 25,
    timeout_s: float = 128.0,
    workers: int = 1,
) -> list[BenchRecord]:
    """One record per (scenario, agent count, algorithm), in stable order."""
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}")
    scens = discover_suite(suite_dir)[:per_count]
    tasks = [
        (scen, n, algo, timeout_s)
        for scen in scens
        for n in agent_counts
        for algo in algorithms
    ]
    if workers <= 1:
        return [_run_one(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, *zip(*tasks)))


def success_rate(records: Iterable[BenchRecord], algorithm: str, agent_count: int) -> float | None:
    """Solved share for one (algorithm, agent count) group; None when empty."""
    group = [r for r in records if r.algo == algorithm and r.agents == agent_count]
    if not group:
        return None
    return sum(1 for r in group if r.status == "solved") / len(group)


def sorted_runtimes(records: Iterable[BenchRecord], algorithm: str) -> list[float]:
    """Cactus-plot data: runtimes of solved records, ascending."""
    return sorted(r.runtime_s for r in records if r.algo == algorithm and r.status == "solved")


def write_csv(records: Iterable[BenchRecord], out) -> None:
    """`out` is a text file object or a path."""
    if isinstance(out, (str, FsPath)):
        with open(out, "w", newline="") as fh:
            write_csv(records, fh)
        return
    writer = csv.writer(out)
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([
            r.map_name, r.scen_name, r.agents, r.algo, r.status,
            repr(r.runtime_s), "" if r.soc is None else r.soc,
            r.sat_calls, r.conflicts,
        ])


def read_csv(src) -> list[BenchRecord]:
    if isinstance(src, (str, FsPath)):
        with open(src, newline="") as fh:
            return read_csv(fh)
    if isinstance(src, str):  # pragma: no cover - path branch above
        src = io.StringIO(src)
    reader = csv.reader(src)
    header = next(reader)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    out = []
    for row in reader:
        out.append(BenchRecord(
            map_name=row[0],
            scen_name=row[1],
            agents=int(row[2]),
            algo=row[3],
            status=row[4],
            runtime_s=float(row[5]),
            soc=None if row[6] == "" else int(row[6]),
            sat_calls=int(row[7]),
            conflicts=int(row[8]),
        ))
    return out
