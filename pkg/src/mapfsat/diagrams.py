"""Leveled time-expansion diagrams: full (all bounded paths) and sparse.

A diagram for one agent has one node per (vertex, timestep) it may occupy
and directed edges between consecutive levels (moves plus waits). The full
build keeps exactly the nodes reachable from the start in t steps that can
still reach the goal within the cost bound; the sparse build inserts an
explicit set of candidate paths, which may make extra combined paths
representable as a side effect.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Sequence

from .instance import MapfInstance, Path, Vertex, vertex_sort_key
from .pathing import bfs_distances


class InfeasibleAgentError(ValueError):
    """The agent cannot reach its goal at all, or not within the horizon."""


class Mdd:
    """Per-agent leveled DAG of time-expanded nodes."""

    def __init__(self, agent: Hashable, horizon: int,
                 levels: Sequence[Iterable[Vertex]],
                 edges: Iterable[tuple[int, Vertex, Vertex]]):
        if len(levels) != horizon + 1:
            raise ValueError(f"expected {horizon + 1} levels, got {len(levels)}")
        self.agent = agent
        self.horizon = horizon
        self.levels: tuple[tuple[Vertex, ...], ...] = tuple(
            tuple(sorted(level, key=vertex_sort_key)) for level in levels
        )
        self._level_sets = [frozenset(level) for level in self.levels]
        if len(self.levels[0]) != 1:
            raise ValueError("level 0 must hold exactly the start node")
        if len(self.levels[-1]) != 1:
            raise ValueError("last level must hold exactly the goal node")
        self.edges: frozenset[tuple[int, Vertex, Vertex]] = frozenset(edges)
        out: dict[tuple[int, Vertex], list[Vertex]] = {}
        for t, u, v in self.edges:
            if not (0 <= t < horizon):
                raise ValueError(f"edge at level {t} outside horizon")
            if u not in self._level_sets[t] or v not in self._level_sets[t + 1]:
                raise ValueError(f"edge ({u!r}, {v!r}) at level {t} has missing endpoint")
            out.setdefault((t, u), []).append(v)
        self._out = {k: tuple(sorted(vs, key=vertex_sort_key)) for k, vs in out.items()}

    @property
    def start(self) -> Vertex:
        return self.levels[0][0]

    @property
    def goal(self) -> Vertex:
        return self.levels[-1][0]

    @property
    def node_count(self) -> int:
        return sum(len(level) for level in self.levels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_node(self, v: Vertex, t: int) -> bool:
        return 0 <= t <= self.horizon and v in self._level_sets[t]

    def has_edge(self, u: Vertex, v: Vertex, t: int) -> bool:
        return (t, u, v) in self.edges

    def outgoing(self, u: Vertex, t: int) -> tuple[Vertex, ...]:
        return self._out.get((t, u), ())

    def contains_path(self, path: Path) -> bool:
        """True when the goal-padded path is a directed walk of this diagram."""
        pos = path.padded(self.horizon).positions
        return all(self.has_edge(pos[t], pos[t + 1], t) for t in range(self.horizon))


def build_mdd(instance: MapfInstance, agent_id: Hashable, horizon: int,
              cost_bound: int) -> Mdd:
    """Full diagram of every start->goal path within the horizon and cost bound.

    The goal node persists at every level from the earliest arrival onward,
    so trailing goal waits stay representable and free.
    """
    graph = instance.graph
    agent = instance.agent(agent_id)
    dist_start = bfs_distances(graph, agent.start).distances
    dist_goal = bfs_distances(graph, agent.goal).distances
    xi = dist_start.get(agent.goal)
    if xi is None:
        raise InfeasibleAgentError(f"goal of agent {agent_id!r} is unreachable")
    if cost_bound < xi:
        raise ValueError(f"cost bound {cost_bound} below shortest-path cost {xi}")
    if horizon < xi:
        raise InfeasibleAgentError(
            f"agent {agent_id!r} cannot reach its goal within horizon {horizon}"
        )
    bound = min(cost_bound, horizon)

    levels: list[set[Vertex]] = []
    for t in range(horizon + 1):
        nodes = set()
        for v, ds in dist_start.items():
            if ds > t:
                continue
            if v == agent.goal:
                nodes.add(v)
            else:
                dg = dist_goal.get(v)
                if dg is not None and t + dg <= bound:
                    nodes.add(v)
        levels.append(nodes)

    edges = set()
    for t in range(horizon):
        nxt = levels[t + 1]
        for u in levels[t]:
            for w in (u, *graph.neighbors(u)):
                if w in nxt:
                    edges.add((t, u, w))

    _prune_dead_nodes(levels, edges, agent.start, agent.goal, horizon)
    return Mdd(agent_id, horizon, levels, edges)


def _prune_dead_nodes(levels: list[set[Vertex]], edges: set[tuple[int, Vertex, Vertex]],
                      start: Vertex, goal: Vertex, horizon: int) -> None:
    """Drop nodes not on any directed start->goal path (backward then forward)."""
    out: dict[tuple[int, Vertex], list[Vertex]] = {}
    for t, u, v in edges:
        out.setdefault((t, u), []).append(v)
    alive: list[set[Vertex]] = [set() for _ in range(horizon + 1)]
    if goal in levels[horizon]:
        alive[horizon].add(goal)
    for t in range(horizon - 1, -1, -1):
        for u in levels[t]:
            if any(v in alive[t + 1] for v in out.get((t, u), ())):
                alive[t].add(u)
    reach: list[set[Vertex]] = [set() for _ in range(horizon + 1)]
    if start in alive[0]:
        reach[0].add(start)
    for t in range(horizon):
        for u in reach[t]:
            for v in out.get((t, u), ()):
                if v in alive[t + 1]:
                    reach[t + 1].add(v)
    for t in range(horizon + 1):
        levels[t] = reach[t]
    dead = {(t, u, v) for (t, u, v) in edges if u not in levels[t] or v not in levels[t + 1]}
    edges -= dead


def build_smdd(agent_id: Hashable, paths: Sequence[Path], horizon: int) -> Mdd:
    """Sparse diagram representing (at least) an explicit candidate path set."""
    if not paths:
        raise ValueError("empty candidate path set")
    goal = paths[0].positions[-1]
    start = paths[0].positions[0]
    levels: list[set[Vertex]] = [set() for _ in range(horizon + 1)]
    edges: set[tuple[int, Vertex, Vertex]] = set()
    for p in paths:
        if p.agent != agent_id:
            raise ValueError(f"path of agent {p.agent!r} in candidate set of {agent_id!r}")
        if p.positions[-1] != goal or p.positions[0] != start:
            raise ValueError("candidate paths disagree on start/goal")
        if p.length > horizon:
            raise ValueError(f"candidate path longer than horizon {horizon}")
        pos = p.padded(horizon).positions
        for t in range(horizon + 1):
            levels[t].add(pos[t])
        for t in range(horizon):
            edges.add((t, pos[t], pos[t + 1]))
    return Mdd(agent_id, horizon, levels, edges)


def count_represented_paths(mdd: Mdd) -> int:
    """Number of directed start->sink paths, by per-level dynamic programming."""
    counts = {(0, mdd.start): 1}
    for t in range(mdd.horizon):
        for u in mdd.levels[t]:
            c = counts.get((t, u), 0)
            if not c:
                continue
            for v in mdd.outgoing(u, t):
                key = (t + 1, v)
                counts[key] = counts.get(key, 0) + c
    return counts.get((mdd.horizon, mdd.goal), 0)


def dump_mdd(mdd: Mdd) -> str:
    """Deterministic text form: one line per level, then the edge list."""
    lines = [f"agent {mdd.agent} horizon {mdd.horizon}"]
    for t, level in enumerate(mdd.levels):
        lines.append(f"level {t}: " + " ".join(str(v) for v in level))
    lines.append("edges:")
    for t, u, v in sorted(
        mdd.edges, key=lambda e: (e[0], vertex_sort_key(e[1]), vertex_sort_key(e[2]))
    ):
        lines.append(f"{t}: {u}->{v}")
    return "\n".join(lines) + "\n"
