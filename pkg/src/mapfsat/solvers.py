"""Sum-of-costs optimal MAPF solvers.

Five algorithms share one outcome shape:

* ``solve_cbs``              -- best-first constraint-tree search.
* ``solve_mdd_sat``          -- complete SAT model over full diagrams.
* ``solve_smt_cbs``          -- lazy collision clauses over full diagrams.
* ``solve_sparse_smt_cbs``   -- lazy clauses over sparse candidate sets,
                                extended per conflict subset.
* ``solve_heuristic_smt_cbs``-- lazy clauses over sparse candidate sets,
                                extended by one all-conflicts-avoiding path.

``brute_force_oracle`` enumerates path tuples outright and exists to verify
the optimality of everything else at small scale.
"""

from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

from .diagrams import InfeasibleAgentError, build_mdd, build_smdd
from .encoding import (
    COMPLETE,
    INCOMPLETE,
    BooleanModel,
    add_conflict_clauses,
    build_model,
    extract_solution,
)
from .instance import (
    Collision,
    MapfInstance,
    Path,
    Solution,
    path_cost,
    sum_of_costs,
    validate_solution,
)
from .pathing import (
    AgentConflicts,
    ConflictSet,
    bfs_distances,
    constrained_shortest_path,
    new_and_path,
    new_or_paths,
    shortest_path,
)
from .satif import CdclSolver

SOLVED = "solved"
TIMEOUT = "timeout"
INFEASIBLE = "infeasible-at-cap"


class SolveTimeout(Exception):
    """Internal: cooperative cancellation hit the wall-clock limit."""


class _CapExceeded(Exception):
    pass


class Deadline:
    """Wall-clock budget with cooperative check()."""

    def __init__(self, limit_s: float):
        self.limit_s = limit_s
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    @property
    def expired(self) -> bool:
        return self.elapsed > self.limit_s

    def check(self) -> None:
        if self.expired:
            raise SolveTimeout


@dataclass
class SolverConfig:
    timeout_s: float = 128.0
    cost_cap: int | None = None        # None: sum of shortest costs + |V| * k
    or_subset_cap: int = 64
    sparse_unsat_fallback: bool = True  # promote all agents before trusting UNSAT
    or_all_conflicts: bool = True       # False: subsets over newly found conflicts only
    algorithm: str = "heuristic"

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        if self.or_subset_cap < 1:
            raise ValueError("or_subset_cap must be >= 1")


@dataclass(frozen=True)
class IterationStat:
    """One low-level model build: bounds, per-agent diagram sizes, var count."""

    soc: int
    makespan: int
    nodes_per_agent: tuple[int, ...]
    decision_vars: int
    full_mdd: tuple[bool, ...]


@dataclass
class SolveStats:
    sat_calls: int = 0
    conflicts: int = 0
    iterations: list[IterationStat] = field(default_factory=list)
    runtime_s: float = 0.0
    encoding_s: float = 0.0

    @property
    def smdd_nodes_per_iter(self) -> list[list[int]]:
        return [list(it.nodes_per_agent) for it in self.iterations]


@dataclass
class SolveOutcome:
    status: str
    solution: Solution | None = None
    soc: int | None = None
    makespan: int | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _shortest_costs(instance: MapfInstance) -> dict[Hashable, int] | None:
    xi = {}
    for a in instance.agents:
        d = bfs_distances(instance.graph, a.start).get(a.goal)
        if d is None:
            return None
        xi[a.id] = d
    return xi


def _resolve_cap(instance: MapfInstance, config: SolverConfig, soc0: int) -> int:
    if config.cost_cap is None:
        return soc0 + instance.graph.vertex_count * max(instance.k, 1)
    if config.cost_cap < soc0:
        raise ValueError(f"cost cap {config.cost_cap} below shortest-cost total {soc0}")
    return config.cost_cap


def _run(solver_fn: Callable[..., tuple[Solution, int]], instance: MapfInstance,
         config: SolverConfig | None) -> SolveOutcome:
    config = config if config is not None else SolverConfig()
    stats = SolveStats()
    deadline = Deadline(config.timeout_s)
    status = SOLVED
    solution: Solution | None = None
    soc: int | None = None
    try:
        solution, soc = solver_fn(instance, config, deadline, stats)
        if deadline.expired:
            status, solution, soc = TIMEOUT, None, None
    except SolveTimeout:
        status = TIMEOUT
    except (_CapExceeded, InfeasibleAgentError):
        status = INFEASIBLE
    stats.runtime_s = deadline.elapsed
    return SolveOutcome(
        status=status,
        solution=solution,
        soc=soc,
        makespan=solution.horizon if solution is not None else None,
        stats=stats,
    )


# --------------------------------------------------------------------------- CBS


def solve_cbs(instance: MapfInstance, config: SolverConfig | None = None) -> SolveOutcome:
    """Best-first constraint-tree search branching on the first collision."""
    return _run(_cbs, instance, config)


def _cbs(instance, config, deadline, stats):
    xi = _shortest_costs(instance)
    if xi is None:
        raise _CapExceeded
    soc0 = sum(xi.values())
    cap = _resolve_cap(instance, config, soc0)
    agent_ids = [a.id for a in instance.agents]

    root_constraints = {a: AgentConflicts.empty() for a in agent_ids}
    root_paths = {}
    for a in agent_ids:
        budget = cap - (soc0 - xi[a])
        p = constrained_shortest_path(instance, a, root_constraints[a], budget, budget)
        if p is None:
            raise _CapExceeded
        root_paths[a] = p

    def node_soc(paths):
        return sum(path_cost(p, instance.agent(a).goal) for a, p in paths.items())

    def freeze(constraints):
        return tuple((constraints[a].vertex, constraints[a].edge) for a in agent_ids)

    counter = itertools.count()
    heap = [(node_soc(root_paths), next(counter), root_constraints, root_paths)]
    expanded: set = set()
    while heap:
        deadline.check()
        soc, _, constraints, paths = heapq.heappop(heap)
        if soc > cap:
            raise _CapExceeded
        key = freeze(constraints)
        if key in expanded:  # the same constraint sets arise via both branches
            continue
        expanded.add(key)
        solution = Solution.from_paths(instance, paths.values())
        collisions = validate_solution(instance, solution)
        if not collisions:
            return solution, soc
        stats.conflicts += 1
        col = collisions[0]
        for side in (0, 1):
            agent_id = col.agents[side]
            if col.kind == "vertex":
                child = constraints[agent_id].extended(vertex=(col.location, col.t))
            else:
                u, v = col.location
                edge = (u, v) if side == 0 else (v, u)
                child = constraints[agent_id].extended(edge=(edge, col.t))
            # constraints only accumulate, so the other agents' current costs
            # are lower bounds below this node: budget what is left of the cap
            others = soc - path_cost(paths[agent_id], instance.agent(agent_id).goal)
            budget = cap - others
            if budget < xi[agent_id]:
                continue
            path = constrained_shortest_path(instance, agent_id, child, budget, budget)
            if path is None:
                continue
            new_constraints = dict(constraints)
            new_constraints[agent_id] = child
            new_paths = dict(paths)
            new_paths[agent_id] = path
            heapq.heappush(
                heap, (node_soc(new_paths), next(counter), new_constraints, new_paths)
            )
    raise _CapExceeded


# ----------------------------------------------------------------- SAT solvers


def _solve_model(model: BooleanModel, deadline: Deadline, stats: SolveStats):
    deadline.check()
    stats.sat_calls += 1
    return model.solve()


def _full_diagrams(instance, xi, horizon, delta):
    return {
        a.id: build_mdd(instance, a.id, horizon, xi[a.id] + delta)
        for a in instance.agents
    }


def _record_iteration(stats, instance, diagrams, model, soc, horizon, full_flags):
    stats.iterations.append(
        IterationStat(
            soc=soc,
            makespan=horizon,
            nodes_per_agent=tuple(diagrams[a.id].node_count for a in instance.agents),
            decision_vars=model.decision_var_count,
            full_mdd=tuple(full_flags[a.id] for a in instance.agents),
        )
    )


def _timed_build(stats, builder):
    t0 = time.perf_counter()
    out = builder()
    stats.encoding_s += time.perf_counter() - t0
    return out


def _backend(deadline: Deadline) -> CdclSolver:
    # long individual SAT calls poll the deadline between conflicts
    return CdclSolver(interrupt=deadline.check)


def solve_mdd_sat(instance: MapfInstance, config: SolverConfig | None = None) -> SolveOutcome:
    """Complete model over full diagrams; first satisfiable cost bound wins."""
    return _run(_mdd_sat, instance, config)


def _mdd_sat(instance, config, deadline, stats):
    xi = _shortest_costs(instance)
    if xi is None:
        raise _CapExceeded
    soc0 = sum(xi.values())
    mu0 = max(xi.values(), default=0)
    cap = _resolve_cap(instance, config, soc0)
    all_full = {a.id: True for a in instance.agents}
    for soc in range(soc0, cap + 1):
        deadline.check()
        delta = soc - soc0
        horizon = mu0 + delta
        diagrams = _full_diagrams(instance, xi, horizon, delta)
        model = _timed_build(
            stats,
            lambda: build_model(instance, diagrams, ConflictSet(), horizon, soc,
                                COMPLETE, solver=_backend(deadline)),
        )
        _record_iteration(stats, instance, diagrams, model, soc, horizon, all_full)
        assignment = _solve_model(model, deadline, stats)
        if assignment is not None:
            solution = extract_solution(model, assignment)
            return solution, sum_of_costs(instance, solution)
    raise _CapExceeded


def solve_smt_cbs(instance: MapfInstance, config: SolverConfig | None = None) -> SolveOutcome:
    """Incomplete model over full diagrams, collision clauses added on demand."""
    return _run(_smt_cbs, instance, config)


def _smt_cbs(instance, config, deadline, stats):
    xi = _shortest_costs(instance)
    if xi is None:
        raise _CapExceeded
    soc0 = sum(xi.values())
    mu0 = max(xi.values(), default=0)
    cap = _resolve_cap(instance, config, soc0)
    conflicts = ConflictSet()
    all_full = {a.id: True for a in instance.agents}
    for soc in range(soc0, cap + 1):
        deadline.check()
        delta = soc - soc0
        horizon = mu0 + delta
        diagrams = _full_diagrams(instance, xi, horizon, delta)
        model = _timed_build(
            stats,
            lambda: build_model(instance, diagrams, conflicts, horizon, soc,
                                INCOMPLETE, solver=_backend(deadline)),
        )
        _record_iteration(stats, instance, diagrams, model, soc, horizon, all_full)
        while True:
            assignment = _solve_model(model, deadline, stats)
            if assignment is None:
                break  # raise the cost bound
            solution = extract_solution(model, assignment)
            collisions = validate_solution(instance, solution)
            if not collisions:
                return solution, sum_of_costs(instance, solution)
            stats.conflicts += len(collisions)
            add_conflict_clauses(model, collisions)
    raise _CapExceeded


# ------------------------------------------------------- sparse candidate sets


class CandidateSets:
    """Per-agent candidate paths, with a per-agent full-diagram mode flag."""

    def __init__(self, instance: MapfInstance):
        self.instance = instance
        self._paths: dict[Hashable, list[Path]] = {a.id: [] for a in instance.agents}
        self._seen: dict[Hashable, set] = {a.id: set() for a in instance.agents}
        self._full: dict[Hashable, bool] = {a.id: False for a in instance.agents}

    @classmethod
    def initial(cls, instance: MapfInstance) -> "CandidateSets":
        sets = cls(instance)
        for a in instance.agents:
            p = shortest_path(instance, a.id)
            if p is None:
                raise InfeasibleAgentError(f"goal of agent {a.id!r} is unreachable")
            sets.add(a.id, p)
        return sets

    def add(self, agent_id: Hashable, path: Path) -> bool:
        if path.positions in self._seen[agent_id]:
            return False
        self._seen[agent_id].add(path.positions)
        self._paths[agent_id].append(path)
        return True

    def paths(self, agent_id: Hashable) -> tuple[Path, ...]:
        return tuple(self._paths[agent_id])

    def promote(self, agent_id: Hashable) -> None:
        self._full[agent_id] = True

    def is_full(self, agent_id: Hashable) -> bool:
        return self._full[agent_id]

    def all_full(self) -> bool:
        return all(self._full.values())


def solve_sparse_smt_cbs(instance: MapfInstance, config: SolverConfig | None = None) -> SolveOutcome:
    """Sparse candidate sets, extended with one path per conflict subset."""
    return _run(
        lambda i, c, d, s: _sparse_family(i, c, d, s, extend="or"), instance, config
    )


def solve_heuristic_smt_cbs(instance: MapfInstance, config: SolverConfig | None = None) -> SolveOutcome:
    """Sparse candidate sets, extended with one all-conflicts-avoiding path."""
    return _run(
        lambda i, c, d, s: _sparse_family(i, c, d, s, extend="and"), instance, config
    )


def _sparse_family(instance, config, deadline, stats, extend):
    xi = _shortest_costs(instance)
    if xi is None:
        raise _CapExceeded
    candidates = CandidateSets.initial(instance)
    conflicts = ConflictSet()
    soc0 = sum(xi.values())
    mu0 = max(xi.values(), default=0)
    cap = _resolve_cap(instance, config, soc0)
    for soc in range(soc0, cap + 1):
        horizon = mu0 + (soc - soc0)
        solution, conflicts = _fixed(
            instance, config, deadline, stats, candidates, conflicts, horizon, soc,
            xi, extend,
        )
        if solution is not None:
            return solution, sum_of_costs(instance, solution)
    raise _CapExceeded


def heuristic_fixed(
    instance: MapfInstance,
    candidates: CandidateSets,
    conflicts: ConflictSet,
    horizon: int,
    soc: int,
    config: SolverConfig | None = None,
    deadline: Deadline | None = None,
    stats: SolveStats | None = None,
) -> tuple[Solution | None, ConflictSet]:
    """One fixed-bounds round of the all-avoiding-path algorithm.

    Returns (solution, conflicts) on success or (None, conflicts) when no
    solution fits the bounds; `conflicts` accumulates everything discovered.
    """
    config = config if config is not None else SolverConfig()
    deadline = deadline if deadline is not None else Deadline(config.timeout_s)
    stats = stats if stats is not None else SolveStats()
    xi = _shortest_costs(instance)
    if xi is None:
        raise InfeasibleAgentError("some agent cannot reach its goal")
    return _fixed(
        instance, config, deadline, stats, candidates, conflicts, horizon, soc,
        xi, extend="and",
    )


def _agent_conflicts_from(collisions: Iterable[Collision], agent_id) -> AgentConflicts:
    vertex = set()
    edge = set()
    for col in collisions:
        if agent_id not in col.agents:
            continue
        if col.kind == "vertex":
            vertex.add((col.location, col.t))
        else:
            u, v = col.location
            edge.add(((u, v) if col.agents[0] == agent_id else (v, u), col.t))
    return AgentConflicts(frozenset(vertex), frozenset(edge))


def _fixed(instance, config, deadline, stats, candidates, conflicts, horizon, soc,
           xi, extend):
    soc0 = sum(xi.values())
    delta = soc - soc0
    bounds = {a.id: xi[a.id] + delta for a in instance.agents}
    model = None
    while True:
        deadline.check()
        if model is None:
            diagrams = {}
            for a in instance.agents:
                if candidates.is_full(a.id):
                    diagrams[a.id] = build_mdd(instance, a.id, horizon, bounds[a.id])
                else:
                    diagrams[a.id] = build_smdd(a.id, candidates.paths(a.id), horizon)
            model = _timed_build(
                stats,
                lambda: build_model(instance, diagrams, conflicts, horizon, soc,
                                INCOMPLETE, solver=_backend(deadline)),
            )
            _record_iteration(
                stats, instance, diagrams, model, soc, horizon,
                {a.id: candidates.is_full(a.id) for a in instance.agents},
            )
        assignment = _solve_model(model, deadline, stats)
        if assignment is None:
            if config.sparse_unsat_fallback and not candidates.all_full():
                for a in instance.agents:
                    candidates.promote(a.id)
                model = None
                continue
            return None, conflicts
        solution = extract_solution(model, assignment)
        collisions = validate_solution(instance, solution)
        if not collisions:
            return solution, conflicts
        stats.conflicts += len(collisions)
        add_conflict_clauses(model, collisions)
        grown = False
        if extend == "and":
            for a in instance.agents:
                if candidates.is_full(a.id):
                    continue
                pi = new_and_path(
                    instance, a.id, candidates.paths(a.id),
                    conflicts.for_agent(a.id), horizon, bounds[a.id],
                )
                if pi is None:
                    candidates.promote(a.id)
                    grown = True
                else:
                    assert _avoids(pi, conflicts.for_agent(a.id), horizon)
                    if candidates.add(a.id, pi):
                        grown = True
        else:
            colliding = list(dict.fromkeys(
                agent_id for col in collisions for agent_id in col.agents
            ))
            for agent_id in colliding:
                if candidates.is_full(agent_id):
                    continue
                if config.or_all_conflicts:
                    conf = conflicts.for_agent(agent_id)
                else:
                    conf = _agent_conflicts_from(collisions, agent_id)
                paths = new_or_paths(
                    instance, agent_id, conf, horizon, bounds[agent_id],
                    subset_cap=config.or_subset_cap,
                )
                added = False
                for p in paths:
                    if candidates.add(agent_id, p):
                        added = True
                if added:
                    grown = True
                else:
                    candidates.promote(agent_id)
                    grown = True
        if grown:
            model = None  # diagrams changed shape: rebuild on the next pass


def _avoids(path: Path, conf: AgentConflicts, horizon: int) -> bool:
    pos = path.padded(horizon).positions
    if any((pos[t], t) in conf.vertex for t in range(len(pos))):
        return False
    return not any(
        ((pos[t], pos[t + 1]), t) in conf.edge for t in range(len(pos) - 1)
    )


# ------------------------------------------------------------------ the oracle


def brute_force_oracle(instance: MapfInstance, cost_cap: int) -> SolveOutcome:
    """Optimal sum of costs by enumerating per-agent path tuples outright.

    Deliberately self-contained (own breadth-first distances, raw walk
    enumeration) so it stays independent of the solver machinery it checks.
    Intended for small instances only.
    """
    t_start = time.perf_counter()
    graph = instance.graph

    def bfs(src):
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in graph.neighbors(u):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    stats = SolveStats()
    xi = {}
    goal_dist = {}
    for a in instance.agents:
        d = bfs(a.goal)
        if a.start not in d:
            stats.runtime_s = time.perf_counter() - t_start
            return SolveOutcome(status=INFEASIBLE, stats=stats)
        goal_dist[a.id] = d
        xi[a.id] = d[a.start]
    soc0 = sum(xi.values())
    if cost_cap < soc0:
        stats.runtime_s = time.perf_counter() - t_start
        return SolveOutcome(status=INFEASIBLE, stats=stats)
    mu0 = max(xi.values(), default=0)
    agent_ids = [a.id for a in instance.agents]

    def walk_cost(positions, goal):
        last = -1
        for t, v in enumerate(positions):
            if v != goal:
                last = t
        return last + 1

    def enumerate_paths(agent, slack, len_cap):
        """Walks ending at the goal, grouped by cost, trailing waits stripped."""
        dist = goal_dist[agent.id]
        budget = xi[agent.id] + slack
        by_cost: dict[int, list[tuple]] = {}
        stack = [(agent.start,)]
        while stack:
            walk = stack.pop()
            v = walk[-1]
            t = len(walk) - 1
            if v == agent.goal and (len(walk) == 1 or walk[-2] != agent.goal):
                cost = walk_cost(walk, agent.goal)
                if cost <= budget:
                    by_cost.setdefault(cost, []).append(walk)
            if t >= len_cap:
                continue
            for w in sorted((v, *graph.neighbors(v)), key=str):
                d = dist.get(w)
                if d is None or t + 1 + d > len_cap:
                    continue
                lower = t + 1 + d if w != agent.goal else walk_cost(walk + (w,), agent.goal)
                if lower > budget:
                    continue
                stack.append(walk + (w,))
        return by_cost

    for soc in range(soc0, cost_cap + 1):
        # enumeration budgets follow the current bound, so early iterations
        # stay cheap and the loop usually stops before they grow
        slack = soc - soc0
        len_cap = mu0 + slack
        paths_by_cost = {a.id: enumerate_paths(a, slack, len_cap) for a in instance.agents}

        def tuples_with_total(total):
            def rec(idx, remaining):
                if idx == len(agent_ids) - 1:
                    for walk in paths_by_cost[agent_ids[idx]].get(remaining, ()):
                        yield (walk,)
                    return
                floor = sum(xi[a] for a in agent_ids[idx + 1:])
                for c in sorted(paths_by_cost[agent_ids[idx]]):
                    rest = remaining - c
                    if rest < floor:
                        continue
                    for walk in paths_by_cost[agent_ids[idx]][c]:
                        for tail in rec(idx + 1, rest):
                            yield (walk, *tail)
            return rec(0, total)

        for combo in tuples_with_total(soc):
            paths = [Path(agent_ids[i], combo[i]) for i in range(len(agent_ids))]
            solution = Solution.from_paths(instance, paths)
            if not validate_solution(instance, solution):
                stats.runtime_s = time.perf_counter() - t_start
                return SolveOutcome(
                    status=SOLVED, solution=solution, soc=soc,
                    makespan=solution.horizon, stats=stats,
                )
    stats.runtime_s = time.perf_counter() - t_start
    return SolveOutcome(status=INFEASIBLE, stats=stats)


ALGORITHMS: dict[str, Callable[..., SolveOutcome]] = {
    "cbs": solve_cbs,
    "mddsat": solve_mdd_sat,
    "smtcbs": solve_smt_cbs,
    "sparse": solve_sparse_smt_cbs,
    "heuristic": solve_heuristic_smt_cbs,
}


def solve(instance: MapfInstance, config: SolverConfig | None = None) -> SolveOutcome:
    """Dispatch on config.algorithm."""
    config = config if config is not None else SolverConfig()
    try:
        fn = ALGORITHMS[config.algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {config.algorithm!r}") from None
    return fn(instance, config)


def solution_json(instance_id: str, algorithm: str, outcome: SolveOutcome) -> dict:
    """Wire format for one solver run."""
    return {
        "instance": instance_id,
        "algorithm": algorithm,
        "status": outcome.status,
        "soc": outcome.soc,
        "makespan": outcome.makespan,
        "paths": (
            [list(p.positions) for p in outcome.solution.paths]
            if outcome.solution is not None
            else None
        ),
        "stats": {
            "sat_calls": outcome.stats.sat_calls,
            "conflicts": outcome.stats.conflicts,
            "smdd_nodes_per_iter": outcome.stats.smdd_nodes_per_iter,
            "runtime_s": outcome.stats.runtime_s,
        },
    }
