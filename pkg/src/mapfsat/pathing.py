"""Single-agent shortest paths under vertex/edge avoidance constraints.

Path cost counts every step until the agent finally settles at its goal;
trailing goal waits are free. The space-time search below minimizes that
measure directly, so paths that leave the goal and come back are priced
correctly.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional

from .instance import Graph, MapfInstance, Path, Vertex, vertex_sort_key

VertexConflict = tuple[Vertex, int]          # agent must not occupy v at t
EdgeConflict = tuple[tuple[Vertex, Vertex], int]  # agent must not traverse u->v at t


@dataclass(frozen=True)
class AgentConflicts:
    """Avoidance entries for a single agent."""

    vertex: frozenset[VertexConflict] = frozenset()
    edge: frozenset[EdgeConflict] = frozenset()

    @classmethod
    def empty(cls) -> "AgentConflicts":
        return cls()

    def is_empty(self) -> bool:
        return not self.vertex and not self.edge

    def extended(self, vertex: VertexConflict | None = None,
                 edge: EdgeConflict | None = None) -> "AgentConflicts":
        v = self.vertex | {vertex} if vertex else self.vertex
        e = self.edge | {edge} if edge else self.edge
        return AgentConflicts(v, e)


class ConflictSet:
    """Accumulated per-agent vertex and edge conflicts."""

    def __init__(self):
        self._vertex: dict[Hashable, set[VertexConflict]] = {}
        self._edge: dict[Hashable, set[EdgeConflict]] = {}

    def add_vertex(self, agent_id: Hashable, v: Vertex, t: int) -> None:
        if t < 0:
            raise ValueError("negative timestep")
        self._vertex.setdefault(agent_id, set()).add((v, t))

    def add_edge(self, agent_id: Hashable, edge: tuple[Vertex, Vertex], t: int) -> None:
        if t < 0:
            raise ValueError("negative timestep")
        self._edge.setdefault(agent_id, set()).add((tuple(edge), t))

    def vertex_entries(self, agent_id: Hashable) -> frozenset[VertexConflict]:
        return frozenset(self._vertex.get(agent_id, ()))

    def edge_entries(self, agent_id: Hashable) -> frozenset[EdgeConflict]:
        return frozenset(self._edge.get(agent_id, ()))

    def for_agent(self, agent_id: Hashable) -> AgentConflicts:
        return AgentConflicts(self.vertex_entries(agent_id), self.edge_entries(agent_id))

    def agents(self) -> tuple[Hashable, ...]:
        seen = dict.fromkeys(itertools.chain(self._vertex, self._edge))
        return tuple(seen)

    def __len__(self) -> int:
        total = sum(len(s) for s in self._vertex.values())
        return total + sum(len(s) for s in self._edge.values())

    def copy(self) -> "ConflictSet":
        out = ConflictSet()
        out._vertex = {a: set(s) for a, s in self._vertex.items()}
        out._edge = {a: set(s) for a, s in self._edge.items()}
        return out


@dataclass(frozen=True)
class DistanceTable:
    """Exact hop distances from one source; unreachable vertices are absent."""

    source: Vertex
    distances: dict[Vertex, int] = field(default_factory=dict)

    def get(self, v: Vertex) -> int | None:
        return self.distances.get(v)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.distances


def bfs_distances(graph: Graph, source: Vertex) -> DistanceTable:
    if source not in graph:
        raise ValueError(f"source {source!r} not in graph")
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in graph.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return DistanceTable(source, dist)


def constrained_shortest_path(
    instance: MapfInstance,
    agent_id: Hashable,
    avoid: AgentConflicts,
    horizon: int,
    cost_bound: int,
    min_length: int = 0,
) -> Optional[Path]:
    """Minimum-cost start->goal path of length <= horizon and cost <= cost_bound.

    The path never occupies a conflicted vertex at its timestep nor traverses
    a conflicted directed edge, and its implicit goal-wait padding out to the
    horizon stays clear of vertex conflicts as well. Ties break on lower f,
    then lower timestep, then smaller vertex id. Returns None when no such
    path exists.
    """
    if cost_bound < 0:
        raise ValueError("negative cost bound")
    graph = instance.graph
    agent = instance.agent(agent_id)
    start, goal = agent.start, agent.goal
    dist_goal = bfs_distances(graph, goal).distances
    if start not in dist_goal:
        return None

    def h(v: Vertex) -> int:
        # cost from (v, t) is at least t + dist(v, goal); g already counts t + 1
        # for a non-goal position, hence the -1.
        return 0 if v == goal else dist_goal[v] - 1

    # Terminal states must keep the implicit goal-wait padding conflict-free.
    last_goal_conflict = max(
        (s for (v, s) in avoid.vertex if v == goal and s <= horizon), default=-1
    )
    earliest_stop = max(min_length, last_goal_conflict)

    if (start, 0) in avoid.vertex:
        return None
    g0 = 0 if start == goal else 1
    counter = itertools.count()
    root = (start, 0, None)
    heap = [(g0 + h(start), 0, vertex_sort_key(start), next(counter), g0, root)]
    settled: set[tuple[Vertex, int]] = set()
    while heap:
        f, t, _, _, g, node = heapq.heappop(heap)
        v = node[0]
        key = (v, t)
        if key in settled:
            continue
        settled.add(key)
        if v == goal and t >= earliest_stop:
            positions = []
            cur = node
            while cur is not None:
                positions.append(cur[0])
                cur = cur[2]
            return Path(agent_id, tuple(reversed(positions)))
        if t == horizon:
            continue
        for w in sorted((v, *graph.neighbors(v)), key=vertex_sort_key):
            if (w, t + 1) in avoid.vertex:
                continue
            if w != v and ((v, w), t) in avoid.edge:
                continue
            dg = dist_goal.get(w)
            if dg is None or t + 1 + dg > horizon:
                continue
            g2 = g if w == goal else t + 2
            f2 = g2 + h(w)
            if f2 > cost_bound:
                continue
            if (w, t + 1) in settled:
                continue
            heapq.heappush(
                heap, (f2, t + 1, vertex_sort_key(w), next(counter), g2, (w, t + 1, node))
            )
    return None


def shortest_path(instance: MapfInstance, agent_id: Hashable) -> Optional[Path]:
    """Deterministic unconstrained shortest path for one agent."""
    agent = instance.agent(agent_id)
    dist = bfs_distances(instance.graph, agent.start).get(agent.goal)
    if dist is None:
        return None
    return constrained_shortest_path(instance, agent_id, AgentConflicts.empty(), dist, dist)


def _padded_steps(paths: Iterable[Path], horizon: int) -> set[tuple[int, Vertex, Vertex]]:
    steps = set()
    for p in paths:
        pos = p.padded(horizon).positions
        steps.update((t, pos[t], pos[t + 1]) for t in range(horizon))
    return steps


def new_and_path(
    instance: MapfInstance,
    agent_id: Hashable,
    candidate_paths: Iterable[Path],
    conflicts: AgentConflicts,
    horizon: int,
    cost_bound: int,
) -> Optional[Path]:
    """Shortest path avoiding every conflict of the agent at once.

    Returns None when no such path exists within the bounds, or when the
    found path is already represented by the sparse diagram of the candidate
    set (adding it again would change nothing).
    """
    path = constrained_shortest_path(instance, agent_id, conflicts, horizon, cost_bound)
    if path is None:
        return None
    candidates = list(candidate_paths)
    if candidates:
        represented = _padded_steps(candidates, horizon)
        pos = path.padded(horizon).positions
        if all((t, pos[t], pos[t + 1]) in represented for t in range(horizon)):
            return None
    return path


def _conflict_sort_key(item: tuple[str, VertexConflict | EdgeConflict]):
    kind, entry = item
    if kind == "vertex":
        v, t = entry
        return (t, 0, vertex_sort_key(v), ())
    (u, v), t = entry
    return (t, 1, vertex_sort_key(u), vertex_sort_key(v))


def new_or_paths(
    instance: MapfInstance,
    agent_id: Hashable,
    conflicts: AgentConflicts,
    horizon: int,
    cost_bound: int,
    subset_cap: int = 64,
) -> list[Path]:
    """One shortest avoiding path per nonempty conflict subset.

    Subsets are enumerated in increasing cardinality, stopping after
    `subset_cap` subsets; duplicate paths are dropped. Each returned path
    extends past the last timestep of the subset it answers, so that it
    responds to the conflict rather than parking at the goal beforehand.
    """
    if subset_cap < 1:
        raise ValueError("subset_cap must be >= 1")
    items = [("vertex", e) for e in conflicts.vertex] + [("edge", e) for e in conflicts.edge]
    items.sort(key=_conflict_sort_key)
    out: list[Path] = []
    seen_positions: set[tuple[Vertex, ...]] = set()
    enumerated = 0
    for r in range(1, len(items) + 1):
        for subset in itertools.combinations(items, r):
            if enumerated >= subset_cap:
                return out
            enumerated += 1
            vconf = frozenset(e for kind, e in subset if kind == "vertex")
            econf = frozenset(e for kind, e in subset if kind == "edge")
            last_t = max(
                (e[1] if kind == "vertex" else e[1] + 1) for kind, e in subset
            )
            path = constrained_shortest_path(
                instance,
                agent_id,
                AgentConflicts(vconf, econf),
                horizon,
                cost_bound,
                min_length=last_t + 1,
            )
            if path is not None and path.positions not in seen_positions:
                seen_positions.add(path.positions)
                out.append(path)
    return out
