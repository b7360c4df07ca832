from __future__ import annotations

import random

import pytest

from mapfsat import (
    Agent,
    Graph,
    InfeasibleAgentError,
    MapfInstance,
    Path,
    build_mdd,
    build_smdd,
    count_represented_paths,
    dump_mdd,
)
from conftest import random_grid_instance


def enumerate_expansions(graph, start, goal, horizon, bound):
    """All horizon-length walks ending at the goal with cost <= bound.

    Equals the union of goal-padded paths within the bounds; serves as the
    independent ground truth for full-diagram construction.
    """
    def cost(seq):
        last = -1
        for t, v in enumerate(seq):
            if v != goal:
                last = t
        return last + 1

    done = []
    stack = [(start,)]
    while stack:
        walk = stack.pop()
        if len(walk) == horizon + 1:
            if walk[-1] == goal and cost(walk) <= min(bound, horizon):
                done.append(walk)
            continue
        for w in (walk[-1], *graph.neighbors(walk[-1])):
            stack.append(walk + (w,))
    return done


def expansion_nodes_edges(walks):
    nodes = {(t, v) for walk in walks for t, v in enumerate(walk)}
    edges = {(t, walk[t], walk[t + 1]) for walk in walks for t in range(len(walk) - 1)}
    return nodes, edges


class TestBuildMdd:
    def test_unique_shortest_path(self, fix_a):
        mdd = build_mdd(fix_a, "a1", 2, 2)
        assert mdd.node_count == 3
        assert mdd.edge_count == 2
        assert mdd.levels == (("v1",), ("v2",), ("v3",))

    def test_one_unit_of_slack(self, fix_a):
        mdd = build_mdd(fix_a, "a1", 3, 3)
        got = {(t, v) for t, level in enumerate(mdd.levels) for v in level}
        assert got == {(0, "v1"), (1, "v1"), (1, "v2"), (2, "v2"), (2, "v3"), (3, "v3")}

    def test_start_equals_goal(self):
        g = Graph(["a", "b"], [("a", "b")])
        inst = MapfInstance(g, [Agent(1, "a", "a")])
        mdd = build_mdd(inst, 1, 0, 0)
        assert mdd.node_count == 1
        assert mdd.edge_count == 0

    def test_goal_unreachable(self):
        g = Graph(["a", "b", "c"], [("a", "b")])
        inst = MapfInstance(g, [Agent(1, "a", "c")])
        with pytest.raises(InfeasibleAgentError):
            build_mdd(inst, 1, 4, 4)

    def test_matches_brute_force_expansion(self):
        rng = random.Random(13)
        checked = 0
        while checked < 25:
            inst = random_grid_instance(rng)
            if inst.graph.vertex_count > 8:
                continue
            agent = inst.agents[0]
            from mapfsat import bfs_distances

            xi = bfs_distances(inst.graph, agent.start).get(agent.goal)
            for slack in (0, 1, 2):
                horizon = min(xi + slack, 6)
                if horizon < xi:
                    continue
                bound = xi + slack
                mdd = build_mdd(inst, agent.id, horizon, bound)
                walks = enumerate_expansions(
                    inst.graph, agent.start, agent.goal, horizon, bound
                )
                nodes, edges = expansion_nodes_edges(walks)
                got_nodes = {(t, v) for t, lvl in enumerate(mdd.levels) for v in lvl}
                assert got_nodes == nodes
                assert set(mdd.edges) == edges
            checked += 1


class TestBuildSmdd:
    def test_two_path_example(self, fix_d_paths):
        smdd = build_smdd("ax", fix_d_paths, 4)
        got = {(t, v) for t, lvl in enumerate(smdd.levels) for v in lvl}
        assert got == {
            (0, "v1"), (1, "v2"), (1, "v6"), (2, "v3"), (3, "v4"), (3, "v7"), (4, "v5"),
        }
        assert smdd.edge_count == 8

    def test_single_path(self):
        smdd = build_smdd("a1", [Path("a1", ("v1", "v2", "v3"))], 2)
        assert smdd.node_count == 3
        assert smdd.edge_count == 2

    def test_goal_wait_padding(self):
        smdd = build_smdd("a1", [Path("a1", ("v1", "v2", "v3"))], 3)
        assert smdd.node_count == 4
        assert smdd.edge_count == 3
        assert smdd.has_node("v3", 3)

    def test_path_longer_than_horizon_rejected(self):
        with pytest.raises(ValueError):
            build_smdd("a1", [Path("a1", ("v1", "v2", "v3"))], 1)

    def test_mismatched_goal_rejected(self):
        with pytest.raises(ValueError):
            build_smdd("a1", [
                Path("a1", ("v1", "v2")),
                Path("a1", ("v1", "v3")),
            ], 2)

    def test_every_input_path_is_represented(self, fix_d_paths):
        smdd = build_smdd("ax", fix_d_paths, 4)
        for p in fix_d_paths:
            assert smdd.contains_path(p)


class TestCountRepresentedPaths:
    def test_overestimation_example(self, fix_d_paths):
        smdd = build_smdd("ax", fix_d_paths, 4)
        assert count_represented_paths(smdd) == 4

    def test_single_route(self, fix_a):
        assert count_represented_paths(build_mdd(fix_a, "a1", 2, 2)) == 1

    def test_three_routes_with_slack(self, fix_a):
        # enumeration: move-move-wait, wait-move-move, move-wait-move
        mdd = build_mdd(fix_a, "a1", 3, 3)
        walks = enumerate_expansions(fix_a.graph, "v1", "v3", 3, 3)
        assert len(walks) == 3
        assert count_represented_paths(mdd) == 3

    def test_at_least_the_input_paths(self, fix_d_paths):
        smdd = build_smdd("ax", fix_d_paths, 4)
        assert count_represented_paths(smdd) >= len(fix_d_paths)


class TestSparseVersusFull:
    def test_sparse_stays_inside_full(self, fix_d_graph, fix_d_paths):
        inst = MapfInstance(fix_d_graph, [Agent("ax", "v1", "v5")])
        full = build_mdd(inst, "ax", 4, 4)
        smdd = build_smdd("ax", fix_d_paths, 4)
        for t, lvl in enumerate(smdd.levels):
            assert set(lvl) <= set(full.levels[t])
        assert smdd.edges <= full.edges

    def test_random_candidate_subsets_stay_inside_full(self):
        rng = random.Random(99)
        from mapfsat import AgentConflicts, constrained_shortest_path

        for _ in range(20):
            inst = random_grid_instance(rng)
            agent = inst.agents[0]
            from mapfsat import bfs_distances

            xi = bfs_distances(inst.graph, agent.start).get(agent.goal)
            horizon, bound = xi + 2, xi + 2
            paths = []
            verts = list(inst.graph.vertices)
            for _ in range(4):
                avoid = AgentConflicts(
                    frozenset({(rng.choice(verts), rng.randint(1, horizon))}),
                    frozenset(),
                )
                p = constrained_shortest_path(inst, agent.id, avoid, horizon, bound)
                if p is not None:
                    paths.append(p)
            if not paths:
                continue
            smdd = build_smdd(agent.id, paths, horizon)
            full = build_mdd(inst, agent.id, horizon, bound)
            for t, lvl in enumerate(smdd.levels):
                assert set(lvl) <= set(full.levels[t])
            assert smdd.edges <= full.edges
            assert count_represented_paths(smdd) >= len({p.positions for p in paths})


def test_dump_format_is_stable(fix_d_paths):
    smdd = build_smdd("ax", fix_d_paths, 4)
    assert dump_mdd(smdd) == (
        "agent ax horizon 4\n"
        "level 0: v1\n"
        "level 1: v2 v6\n"
        "level 2: v3\n"
        "level 3: v4 v7\n"
        "level 4: v5\n"
        "edges:\n"
        "0: v1->v2\n"
        "0: v1->v6\n"
        "1: v2->v3\n"
        "1: v6->v3\n"
        "2: v3->v4\n"
        "2: v3->v7\n"
        "3: v4->v5\n"
        "3: v7->v5\n"
    )
