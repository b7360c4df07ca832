"""Core MAPF data model: graphs, instances, paths, solutions, validation.

Vertex ids are arbitrary hashable values: integers (row-major cell index)
for grid maps, strings in hand-built graphs. Ids within one graph must be
mutually orderable; `vertex_sort_key` keeps sorting stable either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence

Vertex = Hashable

PASSABLE_CHARS = frozenset(".GS")
BLOCKED_CHARS = frozenset("@OTW")


class ParseError(ValueError):
    """A map or scenario file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class MapParseError(ParseError):
    pass


class ScenParseError(ParseError):
    pass


class InstanceError(ValueError):
    """A graph, instance, path or solution violates a structural invariant."""


def vertex_sort_key(v: Vertex):
    """Total order over vertex ids that tolerates mixed id types."""
    return (type(v).__name__, v)


@dataclass(frozen=True)
class GridMeta:
    """2D provenance of a graph parsed from a map file."""

    width: int
    height: int
    passable: tuple[tuple[bool, ...], ...]  # passable[y][x]

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_passable(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and self.passable[y][x]

    def cell_id(self, x: int, y: int) -> int:
        return y * self.width + x


class Graph:
    """Undirected graph; edges are unordered vertex pairs, no self-loops."""

    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[Sequence[Vertex]],
                 grid: GridMeta | None = None):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise InstanceError("duplicate vertex ids")
        adj: dict[Vertex, set[Vertex]] = {v: set() for v in self.vertices}
        norm = set()
        for e in edges:
            u, v = e
            if u == v:
                raise InstanceError(f"self-loop edge at {u!r}")
            if u not in vset or v not in vset:
                raise InstanceError(f"edge ({u!r}, {v!r}) references an undeclared vertex")
            a, b = sorted((u, v), key=vertex_sort_key)
            norm.add((a, b))
            adj[u].add(v)
            adj[v].add(u)
        self.edges: frozenset[tuple[Vertex, Vertex]] = frozenset(norm)
        self._adj = {v: tuple(sorted(adj[v], key=vertex_sort_key)) for v in self.vertices}
        self.grid = grid

    def __contains__(self, v: Vertex) -> bool:
        return v in self._adj

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        return self._adj[v]

    def has_edge(self, u: Vertex, v: Vertex) -> bool:
        a, b = sorted((u, v), key=vertex_sort_key)
        return (a, b) in self.edges

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def cell_vertex(self, x: int, y: int) -> Optional[int]:
        """Vertex id for a grid cell, or None if blocked/out of bounds."""
        if self.grid is None:
            raise InstanceError("graph has no grid metadata")
        if not self.grid.is_passable(x, y):
            return None
        return self.grid.cell_id(x, y)


@dataclass(frozen=True)
class Agent:
    id: Hashable
    start: Vertex
    goal: Vertex


@dataclass(frozen=True)
class AgentSpec:
    """One scenario line: start/goal cells plus advisory metadata."""

    start_cell: tuple[int, int]
    goal_cell: tuple[int, int]
    map_name: str = ""
    optimal_length: float | None = None  # advisory only, never trusted


class MapfInstance:
    """A graph plus an ordered list of agents with distinct starts and goals."""

    def __init__(self, graph: Graph, agents: Iterable[Agent]):
        self.graph = graph
        self.agents: tuple[Agent, ...] = tuple(agents)
        starts = [a.start for a in self.agents]
        goals = [a.goal for a in self.agents]
        if len(set(starts)) != len(starts):
            raise InstanceError("duplicate start vertices")
        if len(set(goals)) != len(goals):
            raise InstanceError("duplicate goal vertices")
        for a in self.agents:
            if a.start not in graph or a.goal not in graph:
                raise InstanceError(f"agent {a.id!r} start/goal not in graph")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise InstanceError("duplicate agent ids")
        self._by_id = {a.id: i for i, a in enumerate(self.agents)}

    @property
    def k(self) -> int:
        return len(self.agents)

    def agent(self, agent_id: Hashable) -> Agent:
        return self.agents[self._by_id[agent_id]]

    def agent_index(self, agent_id: Hashable) -> int:
        return self._by_id[agent_id]


@dataclass(frozen=True)
class Path:
    """Per-agent vertex sequence indexed by timestep 0..length."""

    agent: Hashable
    positions: tuple[Vertex, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        if not self.positions:
            raise InstanceError("empty path")

    @property
    def length(self) -> int:
        return len(self.positions) - 1

    def padded(self, horizon: int) -> "Path":
        """Extend with trailing waits at the final position up to `horizon`."""
        if self.length > horizon:
            raise InstanceError(f"path longer than horizon {horizon}")
        if self.length == horizon:
            return self
        pad = (self.positions[-1],) * (horizon - self.length)
        return Path(self.agent, self.positions + pad)

    def is_walk(self, graph: Graph) -> bool:
        return all(
            u == v or graph.has_edge(u, v)
            for u, v in zip(self.positions, self.positions[1:])
        )


def path_cost(path: Path, goal: Vertex) -> int:
    """Timesteps needed to settle at the goal.

    Trailing waits at the goal are free; leaving the goal re-incurs cost for
    every step up to the final arrival.
    """
    if path.positions[-1] != goal:
        raise InstanceError(f"path of agent {path.agent!r} does not end at its goal")
    last = -1
    for t, v in enumerate(path.positions):
        if v != goal:
            last = t
    return last + 1


@dataclass(frozen=True)
class Solution:
    """One path per agent, all padded to a common horizon."""

    paths: tuple[Path, ...]

    @property
    def horizon(self) -> int:
        return self.paths[0].length if self.paths else 0

    @classmethod
    def from_paths(cls, instance: MapfInstance, paths: Iterable[Path]) -> "Solution":
        by_id = {p.agent: p for p in paths}
        ordered = []
        for a in instance.agents:
            p = by_id.get(a.id)
            if p is None:
                raise InstanceError(f"missing path for agent {a.id!r}")
            if p.positions[0] != a.start:
                raise InstanceError(f"path of agent {a.id!r} does not begin at its start")
            if p.positions[-1] != a.goal:
                raise InstanceError(f"path of agent {a.id!r} does not end at its goal")
            if not p.is_walk(instance.graph):
                raise InstanceError(f"path of agent {a.id!r} takes a non-edge step")
            ordered.append(p)
        horizon = max((p.length for p in ordered), default=0)
        return cls(tuple(p.padded(horizon) for p in ordered))

    def path_for(self, agent_id: Hashable) -> Path:
        for p in self.paths:
            if p.agent == agent_id:
                return p
        raise KeyError(agent_id)


def sum_of_costs(instance: MapfInstance, solution: Solution) -> int:
    return sum(
        path_cost(solution.paths[i], a.goal) for i, a in enumerate(instance.agents)
    )


@dataclass(frozen=True)
class Collision:
    """Two agents sharing a vertex, or swapping across an edge, at one timestep.

    For edge collisions `location` is the directed pair as traversed by the
    first agent of the pair (lower instance index).
    """

    kind: str  # "vertex" | "edge"
    agents: tuple[Hashable, Hashable]
    location: Vertex | tuple[Vertex, Vertex]
    t: int


def validate_solution(instance: MapfInstance, solution: Solution) -> list[Collision]:
    """All vertex and edge collisions, ordered by timestep then agent indices."""
    paths = solution.paths
    if len({p.length for p in paths}) > 1:
        raise InstanceError("solution paths are not padded to a common horizon")
    horizon = solution.horizon
    out: list[Collision] = []
    for t in range(horizon + 1):
        occupied: dict[Vertex, list[int]] = {}
        for i, p in enumerate(paths):
            occupied.setdefault(p.positions[t], []).append(i)
        for v, idxs in occupied.items():
            for ai in range(len(idxs)):
                for aj in range(ai + 1, len(idxs)):
                    i, j = idxs[ai], idxs[aj]
                    out.append(Collision("vertex", (paths[i].agent, paths[j].agent), v, t))
        if t == horizon:
            break
        moving: dict[tuple[Vertex, Vertex], list[int]] = {}
        for i, p in enumerate(paths):
            u, v = p.positions[t], p.positions[t + 1]
            if u != v:
                moving.setdefault((u, v), []).append(i)
        for (u, v), idxs in moving.items():
            opposite = moving.get((v, u))
            if not opposite:
                continue
            for i in idxs:
                for j in opposite:
                    if i < j:
                        out.append(Collision("edge", (paths[i].agent, paths[j].agent), (u, v), t))

    def key(c: Collision):
        i = instance.agent_index(c.agents[0])
        j = instance.agent_index(c.agents[1])
        loc = (
            (vertex_sort_key(c.location),)
            if c.kind == "vertex"
            else tuple(vertex_sort_key(x) for x in c.location)
        )
        return (c.t, i, j, 0 if c.kind == "vertex" else 1, loc)

    out.sort(key=key)
    return out


def parse_map(text: str) -> Graph:
    """Parse movingai map text into a 4-connected grid graph.

    Cells `.`, `G`, `S` are passable, `@`, `O`, `T`, `W` blocked; anything
    else is an error. Vertex ids are row-major cell indices.
    """
    lines = text.splitlines()

    def header(idx: int, name: str) -> str:
        if idx >= len(lines):
            raise MapParseError(f"missing `{name}` header line", line=idx + 1)
        return lines[idx].strip()

    if not header(0, "type").startswith("type"):
        raise MapParseError("expected `type` header", line=1)
    dims: dict[str, int] = {}
    for idx in (1, 2):
        parts = header(idx, "height/width").split()
        if len(parts) != 2 or parts[0] not in ("height", "width"):
            raise MapParseError("expected `height H` or `width W` header", line=idx + 1)
        try:
            dims[parts[0]] = int(parts[1])
        except ValueError:
            raise MapParseError(f"non-numeric {parts[0]}", line=idx + 1) from None
    if set(dims) != {"height", "width"}:
        raise MapParseError("header must declare both height and width", line=3)
    height, width = dims["height"], dims["width"]
    if height <= 0 or width <= 0:
        raise MapParseError("height and width must be positive", line=2)
    if header(3, "map") != "map":
        raise MapParseError("expected `map` header", line=4)

    rows = lines[4:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != height:
        raise MapParseError(f"expected {height} map rows, found {len(rows)}", line=5 + len(rows))
    passable = []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise MapParseError(
                f"row has {len(row)} cells, expected {width}", line=5 + y
            )
        mask = []
        for x, ch in enumerate(row):
            if ch in PASSABLE_CHARS:
                mask.append(True)
            elif ch in BLOCKED_CHARS:
                mask.append(False)
            else:
                raise MapParseError(f"unknown cell char {ch!r}", line=5 + y, column=x + 1)
        passable.append(tuple(mask))

    grid = GridMeta(width, height, tuple(passable))
    vertices = [grid.cell_id(x, y) for y in range(height) for x in range(width) if passable[y][x]]
    edges = []
    for y in range(height):
        for x in range(width):
            if not passable[y][x]:
                continue
            if x + 1 < width and passable[y][x + 1]:
                edges.append((grid.cell_id(x, y), grid.cell_id(x + 1, y)))
            if y + 1 < height and passable[y + 1][x]:
                edges.append((grid.cell_id(x, y), grid.cell_id(x, y + 1)))
    return Graph(vertices, edges, grid=grid)


def render_map(graph: Graph) -> str:
    """Debug writer for grid graphs; round-trips the passable mask exactly."""
    if graph.grid is None:
        raise InstanceError("graph has no grid metadata")
    g = graph.grid
    rows = ["".join("." if cell else "@" for cell in row) for row in g.passable]
    return "\n".join(["type octile", f"height {g.height}", f"width {g.width}", "map", *rows]) + "\n"


def parse_scen(text: str) -> list[AgentSpec]:
    """Parse movingai scenario text into ordered agent specs.

    Fields may be tab- or whitespace-separated. The per-line optimal length
    is kept as advisory metadata only.
    """
    lines = text.splitlines()
    if not lines:
        raise ScenParseError("empty scenario file", line=1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "version":
        raise ScenParseError("expected `version 1` header", line=1)
    try:
        version = float(head[1])
    except ValueError:
        raise ScenParseError(f"non-numeric version {head[1]!r}", line=1) from None
    if version != 1.0:
        raise ScenParseError(f"unsupported scenario version {head[1]}", line=1)

    specs: list[AgentSpec] = []
    for n, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = raw.split()
        if len(fields) != 9:
            raise ScenParseError(f"expected 9 fields, found {len(fields)}", line=n)
        try:
            sx, sy, gx, gy = (int(f) for f in fields[4:8])
        except ValueError:
            raise ScenParseError("non-numeric start/goal coordinates", line=n) from None
        try:
            opt = float(fields[8])
        except ValueError:
            raise ScenParseError("non-numeric optimal length", line=n) from None
        specs.append(AgentSpec((sx, sy), (gx, gy), map_name=fields[1], optimal_length=opt))
    return specs


def build_instance(graph: Graph, specs: Sequence[AgentSpec], n: int) -> MapfInstance:
    """Instance over the first `n` specs; agent ids are 1..n."""
    if n > len(specs):
        raise InstanceError(f"requested {n} agents but only {len(specs)} specs available")
    agents = []
    for i, spec in enumerate(specs[:n]):
        sv = graph.cell_vertex(*spec.start_cell)
        gv = graph.cell_vertex(*spec.goal_cell)
        if sv is None:
            raise InstanceError(f"start cell {spec.start_cell} of agent {i + 1} is blocked")
        if gv is None:
            raise InstanceError(f"goal cell {spec.goal_cell} of agent {i + 1} is blocked")
        agents.append(Agent(i + 1, sv, gv))
    return MapfInstance(graph, agents)
