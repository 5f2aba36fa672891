import itertools
import json

import numpy as np
import pytest
import scipy.sparse as sp

from cbrsca.graph import ConflictGraph, Vertex, build_pa_graph, build_pa_job_graph
from cbrsca.objective import utility
from cbrsca.scenario import ChannelBlock
from cbrsca.solve import (PartitionMatroid, Solution, UtilityFunction, brute_force_opt, gmwis,
                          gmwis_lower_bound, ls, max_utility, mra, npsmc, random_select,
                          solution_blocks, um, verify)

from oracles import (brute_mwis, feasible_sets, graph_from_adj, random_adj, random_clustered,
                     utility_by_hand)
from test_graph import fig3


def test_gmwis_fig4_unit_weights():
    g = build_pa_graph(fig3())
    sol = gmwis(g)
    assert len(sol.selected) == 2 and verify(g, sol.selected)
    assert set(sol.per_node) == {0, 1}


def test_gmwis_edgeless_and_path():
    g = graph_from_adj({k: set() for k in range(5)})
    assert gmwis(g).selected == (0, 1, 2, 3, 4)
    path = graph_from_adj({0: {1}, 1: {0, 2}, 2: {1}}, weights=[1, 3, 1])
    sol = gmwis(path)
    assert sol.selected == (1,) and sol.objective == 3
    with pytest.raises(ValueError):
        gmwis(path, [-1, 1, 1])


def test_gmwis_bounds_random():
    rng = np.random.default_rng(0)
    for _ in range(60):
        n = int(rng.integers(1, 13))
        g = graph_from_adj(random_adj(rng, n, rng.uniform(0.05, 0.8)))
        w = rng.uniform(0, 5, n)
        sol = gmwis(g, w)
        assert verify(g, sol.selected)
        assert sol.objective >= gmwis_lower_bound(g, w) - 1e-9
        delta = max(int(g.degrees().max()), 1)
        assert sol.objective >= brute_mwis(g, w) / delta - 1e-9


def two_cluster_instance():
    verts = [Vertex(k, (k // 2,), ChannelBlock(k % 2 + 1, 1), 2.0) for k in range(4)]
    rows = [a for a in range(4) for b in range(4) if a // 2 != b // 2]
    cols = [b for a in range(4) for b in range(4) if a // 2 != b // 2]
    pen = sp.coo_array(([10.0] * len(rows), (rows, cols)), shape=(4, 4)).tocsr()
    return ConflictGraph.from_edges(verts, rows, cols, clusters=[[0, 1], [2, 3]], penalties=pen)


def test_ls_examples():
    verts = [Vertex(0, (0,), ChannelBlock(1, 1), 5.0), Vertex(1, (0,), ChannelBlock(2, 1), 3.0)]
    g = ConflictGraph.from_edges(verts, [], [], clusters=[[0, 1]])
    assert ls(PartitionMatroid.of_graph(g), UtilityFunction(g, 1.0)) == {0}
    g2 = two_cluster_instance()
    sel = ls(PartitionMatroid.of_graph(g2), UtilityFunction(g2, 1.0))
    assert len(sel) == 1
    best = max(feasible_sets(g2), key=lambda s: utility_by_hand(s, g2, 1.0))
    assert utility(sel, g2, 1.0) == utility_by_hand(best, g2, 1.0) == 2.0


@pytest.mark.parametrize("eps", [0.0, 0.3])
def test_ls_trace_never_decreases(eps):
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = random_clustered(rng, rng.integers(1, 5, size=5), pmax=2.0)
        m = PartitionMatroid.of_graph(g)
        st = {}
        sel = ls(m, UtilityFunction(g, 1.0), eps, st)
        assert m.is_independent(sel)
        trace = [0.0] + st["trace"]
        assert len(trace) == st["moves"] + 1
        assert all(b >= a for a, b in zip(trace, trace[1:]))
        assert trace[-1] == pytest.approx(utility(sel, g, 1.0))


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.5])
def test_fast_ls_matches_generic(eps):
    rng = np.random.default_rng(11)
    for _ in range(40):
        g = random_clustered(rng, rng.integers(1, 5, size=int(rng.integers(1, 6))),
                             density=rng.uniform(0.2, 0.9), pmax=rng.uniform(0.5, 3))
        lam = float(rng.uniform(0, 2))
        m = PartitionMatroid.of_graph(g)
        st_fast, st_gen = {}, {}
        fast = ls(m, UtilityFunction(g, lam), eps, st_fast)
        gen = ls(m, lambda s: utility(s, g, lam), eps, st_gen)
        assert fast == gen
        assert st_fast["moves"] == st_gen["moves"]
        np.testing.assert_allclose(st_fast["trace"], st_gen["trace"], atol=1e-9)


def test_ls_restricted_ground_set():
    rng = np.random.default_rng(2)
    g = random_clustered(rng, [3, 3, 3])
    m = PartitionMatroid.of_graph(g)
    first = ls(m, UtilityFunction(g, 1.0))
    rest = m.restrict(first)
    second = ls(rest, UtilityFunction(g, 1.0))
    assert not (first & second)
    assert rest.is_independent(second)


def test_um_zero_rewards_and_bound():
    verts = [Vertex(k, (k,), ChannelBlock(1, 1), 0.0) for k in range(3)]
    g = ConflictGraph.from_edges(verts, [], [], clusters=[[0], [1], [2]])
    sol = max_utility(g, 1.0)
    assert sol.objective == 0
    rng = np.random.default_rng(3)
    for _ in range(30):
        g = random_clustered(rng, rng.integers(1, 4, size=4), pmax=0.2)
        opt = brute_force_opt(g, 0.5)
        res = max_utility(g, 0.5, 0.0)
        assert verify(g, res.selected, "cluster_feasible")
        assert res.objective <= opt.objective + 1e-9
        if opt.meta["u_min"] >= 0:
            assert res.objective >= opt.objective / 4 - 1e-9


def test_um_returns_better_of_two_runs():
    rng = np.random.default_rng(9)
    g = random_clustered(rng, [2, 3, 2, 2])
    m = PartitionMatroid.of_graph(g)
    f = UtilityFunction(g, 1.0)
    i1 = ls(m, f)
    i2 = ls(m.restrict(i1), f)
    assert um(m, f).objective == pytest.approx(max(f(i1), f(i2)))


def test_npsmc_fig3_and_rounds():
    g, demand = build_pa_job_graph(fig3())
    sol = npsmc(g, demand, 3)
    assert sol.per_node == {0: ChannelBlock(1, 1), 1: ChannelBlock(2, 2)}
    assert sol.meta["rounds"] == 2
    assert verify(g, sol.selected, "multicolor", solution_blocks(sol))
    with pytest.raises(ValueError):
        npsmc(g, demand, 0)


def job_graph(adj, lengths):
    verts = [Vertex(k, (k,), ChannelBlock(1, lengths[k])) for k in range(len(adj))]
    u = [a for a in adj for b in adj[a] if a < b]
    v = [b for a in adj for b in adj[a] if a < b]
    return ConflictGraph.from_edges(verts, u, v), dict(enumerate(lengths))


def test_npsmc_equal_demands_are_mis_rounds():
    g, d = job_graph({0: {1}, 1: {0, 2}, 2: {1, 3}, 3: {2, 4}, 4: {3}}, [4] * 5)
    sol = npsmc(g, d, 10)
    assert sol.meta["rounds"] == 2 and len(sol.selected) == 5
    blocks = solution_blocks(sol)
    assert {b.lo for b in blocks.values()} == {1, 5}
    clique = {k: {j for j in range(4) if j != k} for k in range(4)}
    g, d = job_graph(clique, [4] * 4)
    sol = npsmc(g, d, 10)
    assert len(sol.selected) == 2
    assert sorted(b.lo for b in solution_blocks(sol).values()) == [1, 5]


def test_npsmc_mixed_lengths_never_share_round():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(2, 10))
        adj = random_adj(rng, n, 0.3)
        g, d = job_graph(adj, [int(x) for x in rng.integers(1, 5, n)])
        sol = npsmc(g, d, 10)
        blocks = solution_blocks(sol)
        assert verify(g, sol.selected, "multicolor", blocks)
        for a, b in itertools.combinations(blocks, 2):
            if blocks[a].lo == blocks[b].lo:
                assert d[a] == d[b]
        assert all(b.hi <= 10 for b in blocks.values())


def test_mra_examples():
    g = graph_from_adj({0: set(), 1: set()}, weights=[2, 5])
    assert mra(g).selected == (0, 1)
    verts = [Vertex(0, (0,), ChannelBlock(1, 4), 4.0), Vertex(1, (0,), ChannelBlock(5, 1), 1.0),
             Vertex(2, (1,), ChannelBlock(2, 3), 3.0), Vertex(3, (1,), ChannelBlock(6, 2), 2.0)]
    g = ConflictGraph.from_edges(verts, [0, 2, 0], [1, 3, 2])
    sol = mra(g)
    assert sol.selected == (0, 3) and verify(g, sol.selected)


def test_random_select():
    verts = [Vertex(0, (0,), ChannelBlock(1, 1), 1.0)]
    g = ConflictGraph.from_edges(verts, [], [], clusters=[[0]])
    assert random_select(g, 1.0, 5, 0).selected == (0,)
    rng = np.random.default_rng(6)
    g = random_clustered(rng, [3, 4, 2, 5])
    one = random_select(g, 1.0, 1, 42)
    many = random_select(g, 1.0, 10000, 42)
    assert many.objective >= one.objective
    for sol in (one, many):
        assert verify(g, sol.selected, "cluster_feasible")
        assert len(sol.selected) == 4
        assert sol.objective == pytest.approx(utility_by_hand(sol.selected, g, 1.0))
    assert random_select(g, 1.0, 500, 7).selected == random_select(g, 1.0, 500, 7).selected


def test_random_select_best_trial_matches_loop():
    rng = np.random.default_rng(8)
    g = random_clustered(rng, [2, 3, 2])
    sol = random_select(g, 1.5, 300, 1)
    best = max(utility_by_hand(s, g, 1.5) for s in itertools.product(*g.clusters))
    assert sol.objective <= best + 1e-12


def test_brute_force_opt():
    verts = [Vertex(k, (0,), ChannelBlock(k + 1, 1), r) for k, r in enumerate([1.0, 4.0, 2.0])]
    g = ConflictGraph.from_edges(verts, [], [], clusters=[[0, 1, 2]])
    for lam in (0, 5):
        assert brute_force_opt(g, lam).selected == (1,)
    empty = ConflictGraph([], sp.csr_array((0, 0), dtype=np.int8), clusters=[])
    sol = brute_force_opt(empty, 1.0)
    assert sol.selected == () and sol.objective == 0
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = random_clustered(rng, rng.integers(1, 4, size=3))
        opt = brute_force_opt(g, 1.0)
        vals = [utility_by_hand(s, g, 1.0) for s in feasible_sets(g)]
        assert opt.objective == pytest.approx(max(vals))
        assert opt.meta["u_min"] == pytest.approx(min(vals))


def test_verify_modes():
    g = two_cluster_instance()
    assert verify(g, [0, 2], "cluster_feasible")
    assert not verify(g, [0, 1], "cluster_feasible")
    assert not verify(g, [0, 2], "independent")
    assert not verify(g, [0, 0])
    with pytest.raises(ValueError):
        verify(g, [0], "other")


def test_solution_json_roundtrip():
    g = build_pa_graph(fig3())
    sol = gmwis(g)
    d = json.loads(sol.to_json())
    back = Solution.from_dict(d)
    assert back.selected == sol.selected and back.per_node == sol.per_node
    assert "runtime_ms" in d["meta"]


def test_ls_accepts_small_gain_from_empty_set():
    # from f = 0 any strict gain qualifies, even when eps / N^2 exceeds it
    verts = [Vertex(0, (0,), ChannelBlock(1, 1), 0.1)]
    g = ConflictGraph.from_edges(verts, [], [], clusters=[[0]])
    for eps in (0.0, 0.5, 2.0):
        assert max_utility(g, 1.0, eps).selected == (0,)
