import numpy as np
import pytest

from cbrsca.coexist import (ZERO_ACTIVITY_FLOOR, all_super_nodes, assign_cliques,
                            bron_kerbosch, cs_graph, ffd_pack, form_super_nodes, mapped_activity)
from cbrsca.scenario import ChannelBlock, conflict_matrix, generate_gaa_scenario

from oracles import brute_maximal_cliques, ffd_bound, opt_bins, random_adj
from test_graph import fig5


def test_bron_kerbosch_small_cases():
    assert bron_kerbosch({0: {1, 2}, 1: {0, 2}, 2: {0, 1}}) == [(0, 1, 2)]
    assert bron_kerbosch({"a": {"b"}, "b": {"a", "c"}, "c": {"b"}}) == [("a", "b"), ("b", "c")]
    assert bron_kerbosch({k: set() for k in range(4)}) == [(0,), (1,), (2,), (3,)]
    assert bron_kerbosch({}) == []


def test_bron_kerbosch_vs_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(60):
        n = int(rng.integers(1, 11))
        adj = random_adj(rng, n, rng.uniform(0.1, 0.9))
        assert bron_kerbosch(adj) == brute_maximal_cliques(adj)


def test_assign_cliques():
    assert assign_cliques([(0, 1)], 5) == {0: 0, 1: 0}
    cl = [("a", "b"), ("b", "c")]
    for seed in (0, 1, 2):
        got = assign_cliques(cl, seed)
        assert got == assign_cliques(cl, seed)
        assert got["a"] == 0 and got["c"] == 1 and got["b"] in (0, 1)
    picks = {assign_cliques(cl, s)["b"] for s in range(40)}
    assert picks == {0, 1}


def test_mapped_activity():
    assert mapped_activity(4, 2) == 1.0
    assert mapped_activity(0.5, 1) == 0.5
    assert mapped_activity(1, 4) == 0.25
    assert mapped_activity(0.0, 1) == ZERO_ACTIVITY_FLOOR
    with pytest.raises(ValueError):
        mapped_activity(-1, 1)


def test_ffd_examples():
    bins = ffd_pack([("a", 0.6), ("b", 0.5), ("c", 0.5), ("d", 0.4)], 1.0)
    assert [[s for _, s in b] for b in bins] == [[0.6, 0.4], [0.5, 0.5]]
    assert ffd_pack([("x", 0.3)], 1.0) == [[("x", 0.3)]]
    with pytest.raises(ValueError):
        ffd_pack([("x", 2.0)], 1.0)


def test_ffd_bound_and_capacity():
    rng = np.random.default_rng(2)
    for _ in range(100):
        k = int(rng.integers(1, 9))
        sizes = rng.uniform(0.05, 1.0, k).round(3)
        bins = ffd_pack(list(enumerate(sizes)), 1.0)
        assert all(sum(s for _, s in b) <= 1.0 + 1e-9 for b in bins)
        assert sorted(x for b in bins for x, _ in b) == list(range(k))
        assert len(bins) <= ffd_bound(opt_bins(sizes, 1.0))


def test_form_super_nodes_fig5():
    s = fig5(activity=0.4)
    sup = form_super_nodes(s, ChannelBlock(1, 1), 1.0)
    assert [(v.members, v.block) for v in sup] == [((1, 2), ChannelBlock(1, 1))]
    # a limit below the combined load splits the pair into singletons, which are dropped
    assert form_super_nodes(s, ChannelBlock(1, 1), 0.5) == []
    with pytest.raises(ValueError):
        form_super_nodes(s, ChannelBlock(1, 1), 0.0)


def test_no_type2_pairs_no_supers():
    s = generate_gaa_scenario(0.8, 0, n_nodes=3)
    far = conflict_matrix(s) * 0
    assert form_super_nodes(s, ChannelBlock(9, 1), 1.0, conflicts=far) == []


def test_super_invariants_on_dense_scenario():
    s = generate_gaa_scenario(0.8, 4)
    c = conflict_matrix(s)
    blocks = [ChannelBlock(lo, ln) for ln in (1, 2) for lo in range(1, 16 - ln + 1)]
    for b in blocks[:6]:
        adj = cs_graph(s, b, c)
        for v in form_super_nodes(s, b, 1.0, seed=3, conflicts=c):
            assert len(v.members) >= 2
            for i, a in enumerate(v.members):
                for x in v.members[i + 1:]:
                    assert x in adj[a]
            load = sum(mapped_activity(s.node(m).activity, b.length) for m in v.members)
            assert load <= 1.0 + 1e-9


def test_saturation():
    s = generate_gaa_scenario(0.8, 6)
    c = conflict_matrix(s)
    blocks = [ChannelBlock(lo, 1) for lo in range(8, 16)]
    big = sum(max(n.activity, 1.0) for n in s.nodes)
    a = all_super_nodes(s, blocks, big, seed=1, conflicts=c)
    b = all_super_nodes(s, blocks, 2 * big, seed=1, conflicts=c)
    assert a == b and a
    assert all_super_nodes(s, blocks, 0.0) == []
