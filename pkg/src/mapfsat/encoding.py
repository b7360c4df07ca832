"""Compile per-agent diagrams plus accumulated conflicts into a SAT model.

Decision variables: one per diagram node (agent at vertex v at step t) and
one per diagram edge (agent traversing u->v between t and t+1). Cost is
tracked by per-agent "still active" indicators: one indicator per timestep
from the agent's shortest-path cost up to the horizon, true while the agent
has not yet settled at its goal. A single global cardinality constraint caps
the indicator count at the slack above the sum of shortest-path costs.

The complete mode adds every pairwise vertex/swap exclusion up front; the
incomplete mode relies on lazily added collision clauses instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional

from .diagrams import Mdd
from .instance import Collision, MapfInstance, Path, Solution, Vertex, vertex_sort_key
from .pathing import ConflictSet, bfs_distances
from .satif import CdclSolver, SatSolver

COMPLETE = "complete"
INCOMPLETE = "incomplete"


class EncodingSoundnessError(RuntimeError):
    """A satisfying assignment violated a structural guarantee of the encoding."""


@dataclass
class VariableMap:
    """Bijection between diagram nodes/edges/cost indicators and SAT variables."""

    x: dict[tuple[Hashable, Vertex, int], int] = field(default_factory=dict)
    e: dict[tuple[Hashable, Vertex, Vertex, int], int] = field(default_factory=dict)
    c: dict[tuple[Hashable, int], int] = field(default_factory=dict)
    aux: list[int] = field(default_factory=list)

    def x_var(self, agent: Hashable, v: Vertex, t: int) -> Optional[int]:
        return self.x.get((agent, v, t))

    def e_var(self, agent: Hashable, u: Vertex, v: Vertex, t: int) -> Optional[int]:
        return self.e.get((agent, u, v, t))

    def c_var(self, agent: Hashable, t: int) -> Optional[int]:
        return self.c.get((agent, t))

    @property
    def decision_var_count(self) -> int:
        return len(self.x) + len(self.e)

    def describe(self) -> dict[int, dict]:
        """Debug map var -> role, for the JSON side-file."""
        out: dict[int, dict] = {}
        for (agent, v, t), var in self.x.items():
            out[var] = {"kind": "vertex", "agent": agent, "vertex": v, "t": t}
        for (agent, u, v, t), var in self.e.items():
            out[var] = {"kind": "edge", "agent": agent, "from": u, "to": v, "t": t}
        for (agent, t), var in self.c.items():
            out[var] = {"kind": "cost", "agent": agent, "t": t}
        for var in self.aux:
            out[var] = {"kind": "aux"}
        return out

    def to_json(self) -> str:
        return json.dumps({str(k): v for k, v in sorted(self.describe().items())},
                          default=str, indent=2)


@dataclass
class BooleanModel:
    """One solver instance plus the variable map and bounds it was built for."""

    solver: SatSolver
    varmap: VariableMap
    mode: str
    horizon: int
    soc: int
    delta: int
    conflicts: ConflictSet
    instance: MapfInstance
    diagrams: Mapping[Hashable, Mdd]
    _emitted_pairs: set = field(default_factory=set)

    def solve(self) -> Optional[list[bool]]:
        """Satisfying assignment of the current clause set, or None."""
        if self.solver.solve():
            return self.solver.model()
        return None

    @property
    def decision_var_count(self) -> int:
        return self.varmap.decision_var_count


def _at_most_one(solver: SatSolver, varmap: VariableMap, lits: list[int]) -> None:
    # pairwise is smaller up to a handful of literals, counter beyond that
    n = len(lits)
    if n <= 1:
        return
    if n <= 5:
        for i in range(n):
            for j in range(i + 1, n):
                solver.add_clause([-lits[i], -lits[j]])
    else:
        _sequential_le(solver, varmap, lits, 1)


def _sequential_le(solver: SatSolver, varmap: VariableMap, lits: list[int], k: int) -> None:
    """Sequential-counter clauses enforcing at most k of `lits` true."""
    n = len(lits)
    if k >= n:
        return
    if k == 0:
        for lit in lits:
            solver.add_clause([-lit])
        return
    reg = [[solver.new_var() for _ in range(k)] for _ in range(n - 1)]
    for row in reg:
        varmap.aux.extend(row)
    solver.add_clause([-lits[0], reg[0][0]])
    for j in range(1, k):
        solver.add_clause([-reg[0][j]])
    for i in range(1, n - 1):
        solver.add_clause([-lits[i], reg[i][0]])
        solver.add_clause([-reg[i - 1][0], reg[i][0]])
        for j in range(1, k):
            solver.add_clause([-lits[i], -reg[i - 1][j - 1], reg[i][j]])
            solver.add_clause([-reg[i - 1][j], reg[i][j]])
        solver.add_clause([-lits[i], -reg[i - 1][k - 1]])
    solver.add_clause([-lits[n - 1], -reg[n - 2][k - 1]])


def cardinality_le(model: BooleanModel, literals: list[int], k: int) -> BooleanModel:
    """Constrain at most k of the literals to be true (sequential counter)."""
    if k < 0:
        raise ValueError("negative cardinality bound")
    _sequential_le(model.solver, model.varmap, list(literals), k)
    return model


def build_model(
    instance: MapfInstance,
    diagrams: Mapping[Hashable, Mdd],
    conflicts: ConflictSet,
    horizon: int,
    soc: int,
    mode: str,
    solver: SatSolver | None = None,
) -> BooleanModel:
    """Fresh solver instance encoding the diagrams under the given bounds."""
    if mode not in (COMPLETE, INCOMPLETE):
        raise ValueError(f"unknown mode {mode!r}")
    agents = instance.agents
    if set(diagrams) != {a.id for a in agents}:
        raise ValueError("diagrams do not cover exactly the instance agents")
    for a in agents:
        if diagrams[a.id].horizon != horizon:
            raise ValueError(f"diagram of agent {a.id!r} has mismatched horizon")
    xi = {
        a.id: bfs_distances(instance.graph, a.start).get(a.goal) for a in agents
    }
    if any(d is None for d in xi.values()):
        raise ValueError("some agent cannot reach its goal")
    delta = soc - sum(xi.values())
    if delta < 0:
        raise ValueError(f"sum-of-costs {soc} below the shortest-path total")

    s = solver if solver is not None else CdclSolver()
    vm = VariableMap()
    model = BooleanModel(s, vm, mode, horizon, soc, delta, conflicts, instance, diagrams)

    for a in agents:
        mdd = diagrams[a.id]
        for t in range(horizon + 1):
            for v in mdd.levels[t]:
                vm.x[(a.id, v, t)] = s.new_var()
        for t, u, v in sorted(
            mdd.edges, key=lambda e: (e[0], vertex_sort_key(e[1]), vertex_sort_key(e[2]))
        ):
            vm.e[(a.id, u, v, t)] = s.new_var()
        for t in range(xi[a.id], horizon):
            vm.c[(a.id, t)] = s.new_var()

    for a in agents:
        mdd = diagrams[a.id]
        # endpoints
        s.add_clause([vm.x[(a.id, mdd.start, 0)]])
        s.add_clause([vm.x[(a.id, mdd.goal, horizon)]])
        # occupying a node forces exactly one outgoing edge
        for t in range(horizon):
            for u in mdd.levels[t]:
                xv = vm.x[(a.id, u, t)]
                outs = [vm.e[(a.id, u, w, t)] for w in mdd.outgoing(u, t)]
                s.add_clause([-xv] + outs)
                _at_most_one(s, vm, outs)
        # an edge pins both of its endpoints
        for t, u, v in mdd.edges:
            ev = vm.e[(a.id, u, v, t)]
            s.add_clause([-ev, vm.x[(a.id, u, t)]])
            s.add_clause([-ev, vm.x[(a.id, v, t + 1)]])
        # at most one vertex per level
        for t in range(horizon + 1):
            _at_most_one(s, vm, [vm.x[(a.id, v, t)] for v in mdd.levels[t]])
        # cost indicators: active while not settled at the goal, monotone,
        # and justified so the true count equals the exact excess cost
        for t in range(xi[a.id], horizon):
            ct = vm.c[(a.id, t)]
            support = [
                vm.x[(a.id, v, t)] for v in mdd.levels[t] if v != a.goal
            ]
            for xv in support:
                s.add_clause([-xv, ct])
            nxt = vm.c_var(a.id, t + 1)
            if nxt is not None:
                s.add_clause([-nxt, ct])
            s.add_clause([-ct] + support + ([nxt] if nxt is not None else []))

    all_c = [vm.c[key] for key in sorted(vm.c, key=lambda k: (instance.agent_index(k[0]), k[1]))]
    _sequential_le(s, vm, all_c, delta)

    if mode == COMPLETE:
        _emit_complete_constraints(model)
    _emit_recorded_conflicts(model)
    return model


def _emit_complete_constraints(model: BooleanModel) -> None:
    instance, vm, s = model.instance, model.varmap, model.solver
    agents = instance.agents
    # at most one agent per shared vertex-timestep
    shared: dict[tuple[Vertex, int], list[int]] = {}
    for a in agents:
        mdd = model.diagrams[a.id]
        for t in range(model.horizon + 1):
            for v in mdd.levels[t]:
                shared.setdefault((v, t), []).append(vm.x[(a.id, v, t)])
    for key in sorted(shared, key=lambda k: (k[1], vertex_sort_key(k[0]))):
        _at_most_one(s, vm, shared[key])
    # no pair of agents may swap across one edge
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            ai, aj = agents[i].id, agents[j].id
            for t, u, v in sorted(
                model.diagrams[ai].edges,
                key=lambda e: (e[0], vertex_sort_key(e[1]), vertex_sort_key(e[2])),
            ):
                opposite = vm.e_var(aj, v, u, t)
                if opposite is not None:
                    s.add_clause([-vm.e[(ai, u, v, t)], -opposite])


def add_conflict_clauses(model: BooleanModel, collisions: Iterable[Collision]) -> BooleanModel:
    """Lazily forbid discovered collisions and record them permanently.

    A clause is skipped when either agent's diagram lacks the node or edge;
    the rule is then vacuously enforced for the missing side. The conflict is
    recorded either way so later models re-emit it.
    """
    vm, s = model.varmap, model.solver
    for col in collisions:
        ai, aj = col.agents
        if col.kind == "vertex":
            v, t = col.location, col.t
            model.conflicts.add_vertex(ai, v, t)
            model.conflicts.add_vertex(aj, v, t)
            xi, xj = vm.x_var(ai, v, t), vm.x_var(aj, v, t)
            if xi is not None and xj is not None:
                _emit_pair(model, (-xi, -xj))
        else:
            (u, v), t = col.location, col.t
            model.conflicts.add_edge(ai, (u, v), t)
            model.conflicts.add_edge(aj, (v, u), t)
            ei, ej = vm.e_var(ai, u, v, t), vm.e_var(aj, v, u, t)
            if ei is not None and ej is not None:
                _emit_pair(model, (-ei, -ej))
    return model


def _emit_pair(model: BooleanModel, pair: tuple[int, int]) -> None:
    key = tuple(sorted(pair))
    if key in model._emitted_pairs:
        return
    model._emitted_pairs.add(key)
    model.solver.add_clause(list(pair))


def _emit_recorded_conflicts(model: BooleanModel) -> None:
    """Re-emit pairwise clauses for every recorded conflict.

    Vertex/edge avoidance is a universal MAPF rule, so the clause is emitted
    for every pair of agents that both carry the entry, not only the pair
    that originally collided.
    """
    instance, vm = model.instance, model.varmap
    agents = instance.agents
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            ai, aj = agents[i].id, agents[j].id
            both_v = model.conflicts.vertex_entries(ai) & model.conflicts.vertex_entries(aj)
            for v, t in sorted(both_v, key=lambda e: (e[1], vertex_sort_key(e[0]))):
                xi, xj = vm.x_var(ai, v, t), vm.x_var(aj, v, t)
                if xi is not None and xj is not None:
                    _emit_pair(model, (-xi, -xj))
            for (u, v), t in sorted(
                model.conflicts.edge_entries(ai),
                key=lambda e: (e[1], vertex_sort_key(e[0][0]), vertex_sort_key(e[0][1])),
            ):
                if ((v, u), t) not in model.conflicts.edge_entries(aj):
                    continue
                ei, ej = vm.e_var(ai, u, v, t), vm.e_var(aj, v, u, t)
                if ei is not None and ej is not None:
                    _emit_pair(model, (-ei, -ej))


def extract_solution(model: BooleanModel, assignment: list[bool]) -> Solution:
    """Read the unique true vertex variable per agent and level into paths."""
    instance, vm = model.instance, model.varmap
    paths = []
    for a in instance.agents:
        mdd = model.diagrams[a.id]
        positions = []
        for t in range(model.horizon + 1):
            trues = [v for v in mdd.levels[t] if assignment[vm.x[(a.id, v, t)]]]
            if len(trues) != 1:
                raise EncodingSoundnessError(
                    f"agent {a.id!r} occupies {len(trues)} vertices at step {t}"
                )
            positions.append(trues[0])
        paths.append(Path(a.id, tuple(positions)))
    try:
        return Solution.from_paths(instance, paths)
    except Exception as exc:  # endpoint/adjacency breakage is an encoding bug
        raise EncodingSoundnessError(f"extracted paths are inconsistent: {exc}") from exc
