from __future__ import annotations

import random

import pytest

from mapfsat import (
    AgentConflicts,
    ConflictSet,
    bfs_distances,
    constrained_shortest_path,
    new_and_path,
    new_or_paths,
    path_cost,
    shortest_path,
)
from conftest import random_grid_instance


def vconf(*entries) -> AgentConflicts:
    return AgentConflicts(frozenset(entries), frozenset())


class TestBfsDistances:
    def test_path_graph(self, fix_a):
        d = bfs_distances(fix_a.graph, "v1")
        assert d.distances == {"v1": 0, "v2": 1, "v3": 2}

    def test_cycle(self, fix_b):
        d = bfs_distances(fix_b.graph, "v00")
        assert d.distances == {"v00": 0, "v01": 1, "v10": 1, "v11": 2}

    def test_disconnected_vertex_absent(self):
        from mapfsat import Graph

        g = Graph(["a", "b", "c"], [("a", "b")])
        d = bfs_distances(g, "a")
        assert "c" not in d
        assert d.get("c") is None

    def test_adjacent_vertices_differ_by_at_most_one(self, fix_c):
        d = bfs_distances(fix_c.graph, "v1").distances
        for u, v in fix_c.graph.edges:
            assert abs(d[u] - d[v]) <= 1


class TestConstrainedShortestPath:
    def test_unique_avoiding_path(self, fix_a):
        p = constrained_shortest_path(fix_a, "a1", vconf(("v2", 1)), 3, 3)
        assert p.positions == ("v1", "v1", "v2", "v3")

    def test_blocked_on_both_steps(self, fix_a):
        p = constrained_shortest_path(fix_a, "a1", vconf(("v2", 1), ("v2", 2)), 3, 3)
        assert p is None

    def test_plain_shortest(self, fix_a):
        p = constrained_shortest_path(fix_a, "a1", AgentConflicts.empty(), 2, 2)
        assert p.positions == ("v1", "v2", "v3")

    def test_edge_conflict_forces_detour(self, fix_b):
        avoid = AgentConflicts(frozenset(), frozenset({(("v00", "v01"), 0)}))
        p = constrained_shortest_path(fix_b, "a1", avoid, 2, 2)
        assert p.positions == ("v00", "v10", "v11")

    def test_goal_conflict_after_arrival_forces_detour_or_wait(self, fix_a):
        # settling at the goal would hit (v3, 3): the agent must arrive late
        p = constrained_shortest_path(fix_a, "a1", vconf(("v3", 3)), 4, 4)
        assert p is not None
        padded = p.padded(4).positions
        assert padded[3] != "v3"
        assert padded[-1] == "v3"

    def test_cost_equals_bfs_distance_without_conflicts(self):
        rng = random.Random(31)
        for _ in range(30):
            inst = random_grid_instance(rng)
            for a in inst.agents:
                want = bfs_distances(inst.graph, a.start).get(a.goal)
                p = constrained_shortest_path(
                    inst, a.id, AgentConflicts.empty(), want, want
                )
                assert path_cost(p, a.goal) == want

    def test_determinism(self, fix_b):
        avoid = vconf(("v01", 1))
        first = constrained_shortest_path(fix_b, "a1", avoid, 4, 4)
        for _ in range(5):
            again = constrained_shortest_path(fix_b, "a1", avoid, 4, 4)
            assert again.positions == first.positions

    def test_respects_bounds_and_conflicts(self):
        rng = random.Random(77)
        for _ in range(60):
            inst = random_grid_instance(rng)
            agent = inst.agents[0]
            verts = list(inst.graph.vertices)
            horizon = rng.randint(2, 7)
            bound = rng.randint(1, horizon)
            avoid = AgentConflicts(
                frozenset(
                    (rng.choice(verts), rng.randint(0, horizon))
                    for _ in range(rng.randint(0, 4))
                ),
                frozenset(),
            )
            p = constrained_shortest_path(inst, agent.id, avoid, horizon, bound)
            if p is None:
                continue
            assert p.length <= horizon
            assert path_cost(p, agent.goal) <= bound
            assert p.is_walk(inst.graph)
            assert p.positions[0] == agent.start
            padded = p.padded(horizon).positions
            for t, v in enumerate(padded):
                assert (v, t) not in avoid.vertex


class TestNewAndPath:
    def test_single_conflict(self, fix_a):
        p = new_and_path(fix_a, "a1", [], vconf(("v2", 1)), 3, 3)
        assert p.positions == ("v1", "v1", "v2", "v3")

    def test_unavoidable_pair_gives_empty(self, fix_a):
        assert new_and_path(fix_a, "a1", [], vconf(("v2", 1), ("v2", 2)), 3, 3) is None

    def test_vacuous_avoidance_is_the_shortest_path(self, fix_a):
        p = new_and_path(fix_a, "a1", [], AgentConflicts.empty(), 2, 2)
        assert p.positions == shortest_path(fix_a, "a1").positions

    def test_path_already_represented_gives_empty(self, fix_a):
        existing = shortest_path(fix_a, "a1")
        assert (
            new_and_path(fix_a, "a1", [existing], AgentConflicts.empty(), 2, 2) is None
        )

    def test_avoids_every_conflict(self, fix_c):
        conf = AgentConflicts(
            frozenset({("v2", 1), ("v3", 2)}),
            frozenset({(("v1", "v2"), 0)}),
        )
        p = new_and_path(fix_c, "a1", [], conf, 7, 7)
        assert p is not None
        padded = p.padded(7).positions
        assert all((v, t) not in conf.vertex for t, v in enumerate(padded))
        assert all(
            ((padded[t], padded[t + 1]), t) not in conf.edge for t in range(7)
        )


class TestNewOrPaths:
    def test_every_subset_forces_a_unique_avoider(self, fix_a):
        conf = vconf(("v2", 1), ("v2", 2))
        got = [p.positions for p in new_or_paths(fix_a, "a1", conf, 4, 4)]
        assert got == [
            ("v1", "v1", "v2", "v3"),
            ("v1", "v2", "v3", "v3"),
            ("v1", "v1", "v1", "v2", "v3"),
        ]

    def test_no_conflicts_no_paths(self, fix_a):
        assert new_or_paths(fix_a, "a1", AgentConflicts.empty(), 4, 4) == []

    def test_single_conflict_yields_at_most_one(self, fix_a):
        got = new_or_paths(fix_a, "a1", vconf(("v2", 1)), 4, 4)
        assert len(got) <= 1

    def test_subset_cap_limits_enumeration(self, fix_a):
        conf = vconf(("v2", 1), ("v2", 2))
        capped = new_or_paths(fix_a, "a1", conf, 4, 4, subset_cap=2)
        assert [p.positions for p in capped] == [
            ("v1", "v1", "v2", "v3"),
            ("v1", "v2", "v3", "v3"),
        ]

    def test_returned_paths_respect_bounds(self, fix_b):
        conf = vconf(("v01", 1), ("v10", 1))
        for p in new_or_paths(fix_b, "a1", conf, 4, 4):
            assert p.length <= 4
            assert path_cost(p, "v11") <= 4
            assert p.is_walk(fix_b.graph)


class TestConflictSet:
    def test_per_agent_isolation(self):
        cs = ConflictSet()
        cs.add_vertex("a1", "v", 1)
        cs.add_edge("a2", ("u", "v"), 0)
        assert cs.for_agent("a1").vertex == {("v", 1)}
        assert cs.for_agent("a1").edge == frozenset()
        assert cs.for_agent("a2").edge == {(("u", "v"), 0)}
        assert len(cs) == 2

    def test_negative_timestep_rejected(self):
        cs = ConflictSet()
        with pytest.raises(ValueError):
            cs.add_vertex("a1", "v", -1)

    def test_copy_is_independent(self):
        cs = ConflictSet()
        cs.add_vertex("a1", "v", 1)
        cp = cs.copy()
        cp.add_vertex("a1", "w", 2)
        assert len(cs) == 1
        assert len(cp) == 2
