from __future__ import annotations

import json
import math
from dataclasses import replace
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ponfog.errors import CapacityExceeded, InvalidParams, SamePath
from ponfog.topology import (
    AWGR,
    INTER_CELL,
    INTER_RACK_SAME_CELL,
    INTRA_RACK,
    LEAF,
    ONU,
    REFLECTOR,
    SPINE,
    OltCapacity,
    SpineLeafParams,
    TopologyParams,
    build_fog_topology,
    build_spine_leaf,
    data_path,
    rwa_endpoints,
    spine_leaf_path,
    topology_to_dot,
    topology_to_json,
    validate_topology,
)


def test_default_profile_counts(topo):
    assert len(topo.cells) == 3
    assert topo.n_groups == 6
    assert topo.n_servers == 96
    assert len({g.awgr for g in topo.groups}) == 6
    assert len(topo.awgr_links) == 15
    inter = [(a, b) for a, b in topo.awgr_links if topo.cell_of(a) != topo.cell_of(b)]
    assert len(inter) == 12
    assert len(topo.awgr_links) - len(inter) == 3


def test_single_server_has_no_links():
    t = build_fog_topology(TopologyParams(cells=1, racks_per_cell=1, servers_per_rack=1))
    assert t.n_groups == 1 and t.n_servers == 1
    assert t.awgr_links == frozenset()
    assert validate_topology(t) == []


def test_two_cells_one_rack():
    t = build_fog_topology(TopologyParams(cells=2, racks_per_cell=1, servers_per_rack=16))
    assert t.n_groups == 2
    assert t.awgr_links == frozenset({(0, 1)})
    assert t.cell_of(0) != t.cell_of(1)


def test_group_ids_dense_and_cell_major(topo):
    assert [g.id for g in topo.groups] == list(range(6))
    assert [g.cell for g in topo.groups] == [0, 0, 1, 1, 2, 2]
    assert all(s.onu.tunable for s in topo.servers())


@pytest.mark.parametrize(
    "params",
    [
        TopologyParams(cells=0),
        TopologyParams(racks_per_cell=0),
        TopologyParams(servers_per_rack=0),
        TopologyParams(olt_to_cell_km=20.5),
        TopologyParams(olt_to_cell_km=0),
        TopologyParams(cells=2, olt_to_cell_km=(10.0, 25.0)),
        TopologyParams(cells=2, olt_to_cell_km=(10.0,)),
    ],
)
def test_invalid_params(params):
    with pytest.raises(InvalidParams):
        build_fog_topology(params)


def test_capacity_limit():
    cap = OltCapacity()
    assert cap.usable_cards == 16
    assert cap.servers_per_card == 2048
    ok = TopologyParams(cells=1, racks_per_cell=16, servers_per_rack=2048)
    assert ok.n_servers == cap.max_servers
    with pytest.raises(CapacityExceeded):
        build_fog_topology(replace(ok, servers_per_rack=2049))


def test_per_cell_distances():
    t = build_fog_topology(TopologyParams(cells=2, olt_to_cell_km=[10.0, 20.0]))
    assert t.uplink_km(0) == 10.0 and t.uplink_km(3) == 20.0


@pytest.mark.parametrize(
    "params, expected",
    [
        (TopologyParams(), 7),
        (TopologyParams(cells=1, racks_per_cell=1, servers_per_rack=1), 2),
        (TopologyParams(cells=4, racks_per_cell=3, servers_per_rack=2), 13),
    ],
)
def test_rwa_endpoints(params, expected):
    eps = rwa_endpoints(build_fog_topology(params))
    assert len(eps) == expected
    assert eps[-1] == "OLT"
    assert eps[0] == "G1"


def test_data_path_intra_rack(topo):
    p = data_path(topo, topo.server(0, 0), topo.server(0, 5))
    assert p.classification == INTRA_RACK
    assert p.devices == [ONU, REFLECTOR, ONU]
    assert p.awgr_count == 0


def test_data_path_g3_to_g5(topo):
    p = data_path(topo, topo.server(2, 0), topo.server(4, 0))
    assert p.classification == INTER_CELL
    awgrs = [e.name for e in p.elements if e.kind == AWGR]
    assert awgrs == ["AWGR3", "AWGR5"]
    assert math.isclose(p.length_km, 0.5 + 2 * 0.005)


def test_data_path_same_cell(topo):
    p = data_path(topo, topo.server(0, 0), topo.server(1, 0))
    assert p.classification == INTER_RACK_SAME_CELL
    assert p.awgr_count == 2


def test_data_path_errors(topo):
    s = topo.server(0, 0)
    with pytest.raises(SamePath):
        data_path(topo, s, s)
    other = build_fog_topology(TopologyParams(cells=4)).server(7, 0)
    with pytest.raises(InvalidParams):
        data_path(topo, s, other)


def test_validate_fresh_topology_is_clean(topo):
    assert validate_topology(topo) == []


def test_validate_missing_inter_cell_link(topo):
    broken = replace(topo, awgr_links=topo.awgr_links - {(0, 2)})
    diags = validate_topology(broken)
    assert len(diags) == 1
    assert diags[0].code == "missing-link"
    assert set(diags[0].elements) == {"AWGR1", "AWGR3"}


def test_validate_missing_uplink(topo):
    broken = replace(topo, awg_uplinks=topo.awg_uplinks[:3] + topo.awg_uplinks[4:])
    diags = validate_topology(broken)
    assert len(diags) == 1
    assert diags[0].code == "uplink-count" and diags[0].elements == ("G4",)


def test_validate_duplicate_uplink_and_bad_link(topo):
    broken = replace(
        topo,
        awg_uplinks=topo.awg_uplinks + (topo.awg_uplinks[0],),
        awgr_links=topo.awgr_links | {(0, 9)},
    )
    codes = sorted(d.code for d in validate_topology(broken))
    assert codes == ["unexpected-link", "uplink-count"]


def test_exports_are_deterministic():
    a = build_fog_topology()
    b = build_fog_topology()
    assert a == b
    assert topology_to_json(a) == topology_to_json(b)
    doc = json.loads(topology_to_json(a))
    assert doc["totals"] == {"cells": 3, "groups": 6, "servers": 96, "awgr_links": 15}
    assert list(doc) == ["params", "olt", "totals", "cells", "awgr_links", "awg_uplinks"]
    dot = topology_to_dot(a)
    assert dot.startswith("digraph fog {")
    assert dot.count("[dir=both]") == 15


# -- spine and leaf -------------------------------------------------------------


@pytest.mark.parametrize("n, leaves, spines", [(96, 2, 2), (1, 1, 2), (1536, 32, 8), (384, 8, 2), (385, 9, 3)])
def test_spine_leaf_sizing(n, leaves, spines):
    f = build_spine_leaf(n)
    assert (f.n_leaves, f.n_spines) == (leaves, spines)
    assert len(f.links) == leaves * spines
    assert len(f.server_leaf) == n


def test_spine_leaf_invalid():
    with pytest.raises(InvalidParams):
        build_spine_leaf(0)
    with pytest.raises(InvalidParams):
        build_spine_leaf(10, SpineLeafParams(leaf_server_ports=0))
    with pytest.raises(CapacityExceeded):
        build_spine_leaf(10_000, SpineLeafParams(leaf_uplink_ports=4))


def test_spine_leaf_paths():
    f = build_spine_leaf(96)
    near = spine_leaf_path(f, 0, 1)
    assert near.devices.count(LEAF) == 1 and SPINE not in near.devices
    far = spine_leaf_path(f, 0, 50)
    assert far.devices.count(LEAF) == 2 and far.devices.count(SPINE) == 1


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 20_000), ports=st.integers(1, 96))
def test_leaf_count_is_tight(n, ports):
    f = build_spine_leaf(n, SpineLeafParams(leaf_server_ports=ports, leaf_uplink_ports=10_000))
    assert f.n_leaves * ports >= n
    assert (f.n_leaves - 1) * ports < n
    assert f.n_spines == max(2, math.ceil(f.n_leaves / 4))


# -- properties -----------------------------------------------------------------

small_params = st.builds(
    TopologyParams,
    cells=st.integers(1, 5),
    racks_per_cell=st.integers(1, 4),
    servers_per_rack=st.integers(1, 4),
)


@settings(max_examples=150, deadline=None)
@given(params=small_params)
def test_awgr_mesh_is_complete(params):
    t = build_fog_topology(params)
    g = t.n_groups
    assert len(t.awgr_links) == g * (g - 1) // 2
    assert t.awgr_links == frozenset(combinations(range(g), 2))
    assert validate_topology(t) == []


@settings(max_examples=150, deadline=None)
@given(params=small_params, data=st.data())
def test_path_properties(params, data):
    t = build_fog_topology(params)
    servers = list(t.servers())
    if len(servers) < 2:
        return
    a, b = data.draw(st.sampled_from([(x, y) for x in servers for y in servers if x != y]))
    p, q = data_path(t, a, b), data_path(t, b, a)
    assert p.classification == q.classification
    assert "OLT" not in p.names()
    assert LEAF not in p.devices and SPINE not in p.devices
    expected = {INTRA_RACK: 0, INTER_RACK_SAME_CELL: 2, INTER_CELL: 2}
    assert p.awgr_count == expected[p.classification]
