import json

import numpy as np
import pytest

from cbrsca.radio import Point, RadioParams, contour_radius, interference_radius, service_radius
from cbrsca.scenario import (GAA_CHANNELS, MAX_PALS_PER_TRACT, ChannelBlock, ChannelSet,
                             ConflictClass, GAANode, GAAScenario, NodeFileError, PANode,
                             PAScenario, Region, ServiceArea, build_gaa_scenario,
                             classify_conflict, classify_distance, compute_gaa_availability,
                             compute_pal_availability, conflict_matrix, generate_gaa_scenario,
                             generate_pa_scenario, is_four_connected, load_gaa_nodes,
                             read_node_csv, scenario_from_json, scenario_to_json, tract_loads,
                             tracts_in_circle)

P = RadioParams()


def test_channel_block_basics():
    b = ChannelBlock(2, 3)
    assert list(b.channels) == [2, 3, 4]
    assert b.hi == 4
    assert b.overlap(ChannelBlock(4, 2)) == 1
    assert not b.intersects(ChannelBlock(5, 1))
    assert b.within(ChannelSet({2, 3, 4, 9}))
    assert not b.within(ChannelSet({2, 4}))
    with pytest.raises(ValueError):
        ChannelBlock(0, 1)
    with pytest.raises(ValueError):
        ChannelSet({16})


def test_pal_availability():
    assert compute_pal_availability(dpa_mask=ChannelSet(set(), 10)).to_list() == list(range(1, 11))
    assert compute_pal_availability(dpa_mask=ChannelSet.full(10)).to_list() == []
    assert compute_pal_availability(dpa_mask=ChannelSet({5}, 10)).to_list() == [1, 2, 3, 4, 6, 7,
                                                                                8, 9, 10]


def test_four_connectivity():
    m = 4
    assert is_four_connected({0, 1, 5}, m)
    assert not is_four_connected({0, 5}, m)  # diagonal only
    assert not is_four_connected(set(), m)


def test_tracts_in_circle_open_disk():
    # a circle of radius 0.5 centred in tract 0 touches no neighbour
    assert tracts_in_circle(0.5, 0.5, 0.5, 3) == {0}
    # centred on the grid corner shared by four tracts
    assert tracts_in_circle(1.0, 1.0, 0.1, 3) == {0, 1, 3, 4}


def test_pa_generator_single_tract():
    for seed in range(5):
        s = generate_pa_scenario(1, 0.1, seed)
        assert all(a.tract_ids == {0} for a in s.service_areas)
        assert sum(a.n_pals for a in s.service_areas) <= MAX_PALS_PER_TRACT


def test_pa_generator_invariants_100_seeds():
    for seed in range(100):
        s = generate_pa_scenario(10, 1.0, seed)
        assert s.n > 0
        for a in s.service_areas:
            assert a.tract_ids and is_four_connected(a.tract_ids, 10)
            assert 1 <= a.n_pals <= 4
        assert max(tract_loads(s.service_areas).values()) <= MAX_PALS_PER_TRACT


def test_pa_generator_deterministic_and_roundtrip():
    a = scenario_to_json(generate_pa_scenario(10, 1.0, 7))
    b = scenario_to_json(generate_pa_scenario(10, 1.0, 7))
    assert a == b
    assert scenario_to_json(scenario_from_json(a)) == a
    assert a != scenario_to_json(generate_pa_scenario(10, 1.0, 8))


def test_pa_scenario_rejects_overloaded_tract():
    areas = [ServiceArea(k, k, {0}, 4) for k in range(2)]
    with pytest.raises(ValueError):
        PAScenario(1, areas)


def _csv(tmp_path, text):
    p = tmp_path / "nodes.csv"
    p.write_text(text)
    return p


def test_load_nodes_filter_and_errors(tmp_path):
    assert load_gaa_nodes(_csv(tmp_path, "id,lat,lon\n"), (40.0, -74.0), 1.0) == []
    # 2 km north of the centre is outside a 1 km region
    north = 40.0 + 2.0 / 6371.0 * 180 / np.pi
    nodes = load_gaa_nodes(_csv(tmp_path, f"id,lat,lon\n1,40.0,-74.0\n2,{north},-74.0\n"),
                           (40.0, -74.0), 1.0)
    assert [n.id for n in nodes] == [1]
    assert nodes[0].pos.x_km == pytest.approx(0.0) and nodes[0].pos.y_km == pytest.approx(0.0)
    with pytest.raises(NodeFileError, match="duplicate"):
        read_node_csv(_csv(tmp_path, "id,lat,lon\n1,40,-74\n1,40,-74\n"))
    with pytest.raises(NodeFileError, match="line 2"):
        read_node_csv(_csv(tmp_path, "id,lat,lon\nx,40,-74\n"))
    with pytest.raises(NodeFileError, match="header"):
        read_node_csv(_csv(tmp_path, "a,b,c\n"))


def _node(i, x, y=0.0, **kw):
    return GAANode(i, Point(x, y), **kw)


def test_gaa_availability_rules():
    ppa = service_radius(P)
    r_int = interference_radius(P)
    pa = [PANode(Point(0.0, 0.0), ChannelBlock(1, 4), ppa, P)]
    far = _node(0, 5.0)
    assert len(compute_gaa_availability(far, pa)) == GAA_CHANNELS
    near = _node(1, 0.0)
    assert not set(compute_gaa_availability(near, pa)) & {1, 2, 3, 4}
    # exactly at ppa + r_int: not strictly closer, so still available
    edge = _node(2, ppa + r_int)
    assert len(compute_gaa_availability(edge, pa)) == GAA_CHANNELS


def test_classify_conflict_boundaries():
    r_i, r_jint, r_ics = service_radius(P), interference_radius(P), contour_radius(30, -75, P)
    assert classify_distance(r_i + r_jint, P, P) is ConflictClass.NONE
    assert classify_distance(r_i + r_jint - 1e-9, P, P) is ConflictClass.TYPE_I
    assert classify_distance(r_ics, P, P) is ConflictClass.TYPE_I
    assert classify_distance(r_ics * (1 - 1e-9), P, P) is ConflictClass.TYPE_II
    with pytest.raises(ValueError):
        classify_conflict(_node(1, 0), _node(1, 0.1))


def test_classify_symmetric_with_equal_params():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = _node(0, *rng.uniform(0, 0.3, 2))
        b = _node(1, *rng.uniform(0, 0.3, 2))
        assert classify_conflict(a, b) is classify_conflict(b, a)


def test_classify_asymmetric_with_different_power():
    strong = RadioParams(tx_power_dbm=36.0)
    a = _node(0, 0.0, params=P)
    # d sits between the two sums r_i + r_jint (0.2029 vs 0.2325 km)
    b = _node(1, 0.21, params=strong)
    assert classify_conflict(a, b) is ConflictClass.NONE
    assert classify_conflict(b, a) is ConflictClass.TYPE_I


def test_conflict_matrix_matches_pairwise():
    s = generate_gaa_scenario(0.3, 4, n_nodes=25)
    c = conflict_matrix(s)
    for i, a in enumerate(s.nodes):
        for j, b in enumerate(s.nodes):
            want = 0 if i == j else classify_conflict(a, b).value
            assert c[i, j] == want
    # heterogeneous parameters take the slow path; same answer
    nodes = list(s.nodes)
    nodes[0] = GAANode(nodes[0].id, nodes[0].pos, RadioParams(tx_power_dbm=33.0))
    s2 = GAAScenario(nodes, s.pa_nodes, s.region)
    c2 = conflict_matrix(s2)
    for j, b in enumerate(s2.nodes[1:], start=1):
        assert c2[0, j] == classify_conflict(s2.nodes[0], b).value


def test_gaa_generator_deterministic_and_roundtrip():
    a = generate_gaa_scenario(0.8, 11)
    b = generate_gaa_scenario(0.8, 11)
    assert scenario_to_json(a) == scenario_to_json(b)
    text = scenario_to_json(a)
    assert scenario_to_json(scenario_from_json(text)) == text
    # ~150 nodes at the default density
    assert 100 < a.n < 200
    assert len(a.pa_nodes) == 20
    for n in a.nodes:
        assert set(n.availability) <= set(range(1, GAA_CHANNELS + 1))
        # CH 8..15 are never held by a PA
        assert set(range(8, 16)) <= set(n.availability)
        assert n.pos.x_km ** 2 + n.pos.y_km ** 2 <= 0.8 ** 2 + 1e-12


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        GAAScenario((_node(1, 0.0), _node(1, 0.5)))


def test_build_from_positions_keeps_ids():
    s = build_gaa_scenario(np.array([[0.0, 0.0], [0.1, 0.0]]), Region(Point(0, 0), 1.0), 0,
                           ids=[10, 20])
    assert [n.id for n in s.nodes] == [10, 20]
    assert s.node(20).pos.x_km == 0.1
    json.loads(scenario_to_json(s))
