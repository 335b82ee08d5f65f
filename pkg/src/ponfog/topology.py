"""PON-cell fog topology and the spine-and-leaf reference fabric.

A fog deployment is a set of PON cells. Each cell holds a few racks, each
rack is one PON group with its own AWGR, and every server sits behind a
wavelength-tunable ONU. AWGRs form a full mesh; each one also has a single
uplink to the SDN-enabled OLT through a per-cell AWG multiplexer. The OLT
handles control traffic only, so it never shows up in a data path.

Group ids are global and 0-based, numbered cell by cell (cell 0 holds groups
0 and 1 in the default profile). Human-facing labels are 1-based (``G1``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

from ponfog.errors import CapacityExceeded, InvalidParams, SamePath

MAX_REACH_KM = 20.0

# element kinds that may appear in a DataPath
ONU = "onu"
REFLECTOR = "reflector"
AWGR = "awgr"
FIBER = "fiber"
LEAF = "leaf"
SPINE = "spine"
TRANSCEIVER = "transceiver"

INTRA_RACK = "intra-rack"
INTER_RACK_SAME_CELL = "inter-rack-same-cell"
INTER_CELL = "inter-cell"


def group_label(group_id: int) -> str:
    return f"G{group_id + 1}"


@dataclass(frozen=True)
class TopologyParams:
    """Dimensions and fiber lengths of a fog deployment.

    ``olt_to_cell_km`` is either one distance for all cells or one per cell.
    The AWGR mesh and rack fiber lengths are not given by the source design;
    the defaults are placeholders sized for a metro fog site.
    """

    cells: int = 3
    racks_per_cell: int = 2
    servers_per_rack: int = 16
    olt_to_cell_km: float | tuple[float, ...] = MAX_REACH_KM
    inter_cell_km: float = 0.5
    intra_cell_km: float = 0.005
    rack_fiber_km: float = 0.005

    def __post_init__(self) -> None:
        if isinstance(self.olt_to_cell_km, list):
            object.__setattr__(self, "olt_to_cell_km", tuple(self.olt_to_cell_km))

    @property
    def n_groups(self) -> int:
        return self.cells * self.racks_per_cell

    @property
    def servers_per_cell(self) -> int:
        return self.racks_per_cell * self.servers_per_rack

    @property
    def n_servers(self) -> int:
        return self.cells * self.servers_per_cell

    def cell_distance_km(self, cell: int) -> float:
        if isinstance(self.olt_to_cell_km, tuple):
            return float(self.olt_to_cell_km[cell])
        return float(self.olt_to_cell_km)

    def validate(self) -> None:
        for name in ("cells", "racks_per_cell", "servers_per_rack"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise InvalidParams(f"{name} must be an integer >= 1, got {value!r}")
        if isinstance(self.olt_to_cell_km, tuple):
            if len(self.olt_to_cell_km) != self.cells:
                raise InvalidParams(
                    f"olt_to_cell_km lists {len(self.olt_to_cell_km)} distances "
                    f"for {self.cells} cells"
                )
            distances = self.olt_to_cell_km
        else:
            distances = (self.olt_to_cell_km,)
        for km in distances:
            if not 0 < km <= MAX_REACH_KM:
                raise InvalidParams(
                    f"OLT-to-cell distance {km} km outside (0, {MAX_REACH_KM}]"
                )
        for name in ("inter_cell_km", "intra_cell_km", "rack_fiber_km"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")


@dataclass(frozen=True)
class OltCapacity:
    """OLT chassis limits: cards, GPON ports per card and ONUs per port."""

    cards_per_chassis_total: int = 18
    cards_reserved: int = 2
    ports_per_card: int = 16
    split_ratio_per_port: int = 128

    @property
    def usable_cards(self) -> int:
        return self.cards_per_chassis_total - self.cards_reserved

    @property
    def servers_per_card(self) -> int:
        return self.ports_per_card * self.split_ratio_per_port

    @property
    def max_servers(self) -> int:
        return self.usable_cards * self.servers_per_card

    def validate(self) -> None:
        if self.cards_reserved < 0 or self.usable_cards < 1:
            raise InvalidParams("OLT chassis needs at least one usable card")
        if self.ports_per_card < 1 or self.split_ratio_per_port < 1:
            raise InvalidParams("ports per card and split ratio must be >= 1")


def check_capacity(n_servers: int, capacity: OltCapacity) -> None:
    """Raise CapacityExceeded if ``n_servers`` ONUs do not fit the OLT."""
    if n_servers > capacity.max_servers:
        raise CapacityExceeded(
            f"{n_servers} servers exceed {capacity.usable_cards} usable cards "
            f"x {capacity.servers_per_card} ONUs = {capacity.max_servers}"
        )


@dataclass(frozen=True)
class Onu:
    name: str
    tunable: bool = True


@dataclass(frozen=True)
class ServerNode:
    group: int
    index: int
    onu: Onu

    @property
    def name(self) -> str:
        return f"{group_label(self.group)}.S{self.index + 1}"


@dataclass(frozen=True)
class PonGroup:
    cell: int
    id: int
    servers: tuple[ServerNode, ...]

    @property
    def label(self) -> str:
        return group_label(self.id)

    @property
    def awgr(self) -> str:
        return f"AWGR{self.id + 1}"


@dataclass(frozen=True)
class PonCell:
    id: int
    groups: tuple[PonGroup, ...]

    @property
    def mux(self) -> str:
        return f"AWG{self.id + 1}"


@dataclass(frozen=True)
class OltNode:
    name: str
    capacity: OltCapacity


@dataclass(frozen=True)
class AwgUplink:
    """Fiber from a group's AWGR to the OLT through its cell's AWG mux."""

    group: int
    mux: str
    length_km: float


@dataclass(frozen=True)
class FogTopology:
    params: TopologyParams
    cells: tuple[PonCell, ...]
    olt: OltNode
    awgr_links: frozenset[tuple[int, int]]
    awg_uplinks: tuple[AwgUplink, ...]

    @property
    def groups(self) -> tuple[PonGroup, ...]:
        return tuple(g for cell in self.cells for g in cell.groups)

    @property
    def n_groups(self) -> int:
        return sum(len(cell.groups) for cell in self.cells)

    @property
    def n_servers(self) -> int:
        return sum(len(g.servers) for g in self.groups)

    def group(self, group_id: int) -> PonGroup:
        for g in self.groups:
            if g.id == group_id:
                return g
        raise InvalidParams(f"no group with id {group_id}")

    def cell_of(self, group_id: int) -> int:
        return self.group(group_id).cell

    def server(self, group_id: int, index: int) -> ServerNode:
        servers = self.group(group_id).servers
        if not 0 <= index < len(servers):
            raise InvalidParams(f"group {group_id} has no server {index}")
        return servers[index]

    def servers(self) -> Iterator[ServerNode]:
        for g in self.groups:
            yield from g.servers

    def link_km(self, a: int, b: int) -> float:
        if self.cell_of(a) == self.cell_of(b):
            return self.params.intra_cell_km
        return self.params.inter_cell_km

    def uplink_km(self, group_id: int) -> float:
        for up in self.awg_uplinks:
            if up.group == group_id:
                return up.length_km
        raise InvalidParams(f"group {group_id} has no OLT uplink")


def build_fog_topology(
    params: TopologyParams | None = None, capacity: OltCapacity | None = None
) -> FogTopology:
    """Build the cellular AWGR fog topology.

    Args:
        params: Deployment dimensions; defaults to 3 cells x 2 racks x 16 servers.
        capacity: OLT chassis limits.

    Returns:
        A topology with one AWGR per group, a full AWGR mesh and one OLT
        uplink per group.

    Raises:
        InvalidParams: Zero counts or a cell farther than 20 km from the OLT.
        CapacityExceeded: More servers than the usable OLT cards can address.
    """
    params = params or TopologyParams()
    capacity = capacity or OltCapacity()
    params.validate()
    capacity.validate()
    check_capacity(params.n_servers, capacity)

    cells = []
    uplinks = []
    gid = 0
    for c in range(params.cells):
        groups = []
        for _ in range(params.racks_per_cell):
            servers = tuple(
                ServerNode(gid, i, Onu(f"ONU{gid + 1}.{i + 1}"))
                for i in range(params.servers_per_rack)
            )
            groups.append(PonGroup(c, gid, servers))
            uplinks.append(AwgUplink(gid, f"AWG{c + 1}", params.cell_distance_km(c)))
            gid += 1
        cells.append(PonCell(c, tuple(groups)))

    links = frozenset(combinations(range(gid), 2))
    return FogTopology(
        params=params,
        cells=tuple(cells),
        olt=OltNode("OLT", capacity),
        awgr_links=links,
        awg_uplinks=tuple(uplinks),
    )


def rwa_endpoints(topo: FogTopology) -> list[str]:
    """Labels of every routing endpoint: the groups in id order, then the OLT."""
    return [g.label for g in sorted(topo.groups, key=lambda g: g.id)] + [topo.olt.name]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    elements: tuple[str, ...] = ()


def validate_topology(topo: FogTopology) -> list[Diagnostic]:
    """Check every structural invariant; one diagnostic per violation."""
    out: list[Diagnostic] = []
    groups = topo.groups
    ids = [g.id for g in groups]
    if sorted(ids) != list(range(len(ids))):
        out.append(Diagnostic("group-ids", f"group ids not dense 0..{len(ids) - 1}: {ids}"))
    known = set(ids)

    for g in groups:
        for s in g.servers:
            if s.group != g.id:
                out.append(
                    Diagnostic("server-group", f"{s.name} listed under {g.label}", (s.name, g.label))
                )
            if s.onu is None or not s.onu.tunable:
                out.append(Diagnostic("onu", f"{s.name} lacks a tunable ONU", (s.name,)))

    cell_of = {g.id: g.cell for g in groups}
    for a, b in sorted(topo.awgr_links):
        if a == b or a not in known or b not in known:
            out.append(
                Diagnostic("unexpected-link", f"link {a}-{b} is not between two AWGRs", (str(a), str(b)))
            )
    for a, b in combinations(sorted(known), 2):
        if (a, b) not in topo.awgr_links and (b, a) not in topo.awgr_links:
            kind = "intra-cell" if cell_of[a] == cell_of[b] else "inter-cell"
            la, lb = f"AWGR{a + 1}", f"AWGR{b + 1}"
            out.append(Diagnostic("missing-link", f"missing {kind} link {la}-{lb}", (la, lb)))

    counts = {gid: 0 for gid in ids}
    for up in topo.awg_uplinks:
        if up.group in counts:
            counts[up.group] += 1
        else:
            out.append(Diagnostic("unexpected-uplink", f"uplink for unknown group {up.group}"))
    for gid, n in counts.items():
        if n != 1:
            label = group_label(gid)
            out.append(
                Diagnostic("uplink-count", f"{label} has {n} OLT uplinks, expected 1", (label,))
            )
    return out


@dataclass(frozen=True)
class PathElement:
    kind: str
    name: str
    length_km: float = 0.0


@dataclass(frozen=True)
class DataPath:
    elements: tuple[PathElement, ...]
    classification: str

    @property
    def devices(self) -> list[str]:
        """Element kinds with fiber segments dropped."""
        return [e.kind for e in self.elements if e.kind != FIBER]

    @property
    def awgr_count(self) -> int:
        return sum(1 for e in self.elements if e.kind == AWGR)

    @property
    def length_km(self) -> float:
        return sum(e.length_km for e in self.elements)

    def names(self) -> list[str]:
        return [e.name for e in self.elements]


def classify(topo: FogTopology, src_group: int, dst_group: int) -> str:
    if src_group == dst_group:
        return INTRA_RACK
    if topo.cell_of(src_group) == topo.cell_of(dst_group):
        return INTER_RACK_SAME_CELL
    return INTER_CELL


def _check_member(topo: FogTopology, node: ServerNode) -> None:
    if topo.server(node.group, node.index) != node:
        raise InvalidParams(f"{node.name} is not part of this topology")


def data_path(topo: FogTopology, src: ServerNode, dst: ServerNode) -> DataPath:
    """Passive data path between two servers.

    Servers in the same rack reflect off the rack's FBG/star reflector; any
    other pair goes source AWGR -> destination AWGR over their direct link.
    """
    if src == dst:
        raise SamePath(f"{src.name} cannot send to itself")
    _check_member(topo, src)
    _check_member(topo, dst)
    rack = topo.params.rack_fiber_km
    kind = classify(topo, src.group, dst.group)
    if kind == INTRA_RACK:
        mid = [PathElement(REFLECTOR, f"FBG{src.group + 1}")]
    else:
        a, b = src.group, dst.group
        if (min(a, b), max(a, b)) not in topo.awgr_links:
            raise InvalidParams(f"no AWGR link between {group_label(a)} and {group_label(b)}")
        mid = [
            PathElement(AWGR, f"AWGR{a + 1}"),
            PathElement(FIBER, f"AWGR{a + 1}-AWGR{b + 1}", topo.link_km(a, b)),
            PathElement(AWGR, f"AWGR{b + 1}"),
        ]
    elements = (
        [PathElement(ONU, src.onu.name), PathElement(FIBER, f"{src.name}-drop", rack)]
        + mid
        + [PathElement(FIBER, f"{dst.name}-drop", rack), PathElement(ONU, dst.onu.name)]
    )
    return DataPath(tuple(elements), kind)


# ---------------------------------------------------------------------------
# spine-and-leaf reference fabric


@dataclass(frozen=True)
class SpineLeafParams:
    """Sizing rule for the switched reference fabric.

    One leaf per ``leaf_server_ports`` servers; spines = max(min_spines,
    ceil(leaves / leaves_per_spine)). Every leaf needs one uplink per spine.
    """

    leaf_server_ports: int = 48
    leaf_uplink_ports: int = 64
    min_spines: int = 2
    leaves_per_spine: int = 4

    def validate(self) -> None:
        for name in ("leaf_server_ports", "leaf_uplink_ports", "min_spines", "leaves_per_spine"):
            if getattr(self, name) < 1:
                raise InvalidParams(f"{name} must be >= 1")


def spine_leaf_size(n_servers: int, params: SpineLeafParams | None = None) -> tuple[int, int]:
    """Return ``(leaves, spines)`` for ``n_servers`` without building the fabric."""
    params = params or SpineLeafParams()
    params.validate()
    if n_servers < 1:
        raise InvalidParams("spine-and-leaf fabric needs at least one server")
    leaves = math.ceil(n_servers / params.leaf_server_ports)
    spines = max(params.min_spines, math.ceil(leaves / params.leaves_per_spine))
    if spines > params.leaf_uplink_ports:
        raise CapacityExceeded(
            f"{spines} spines exceed {params.leaf_uplink_ports} leaf uplink ports"
        )
    return leaves, spines


@dataclass(frozen=True)
class SpineLeafTopology:
    n_servers: int
    params: SpineLeafParams
    n_leaves: int
    n_spines: int
    server_leaf: tuple[int, ...] = field(repr=False)

    @property
    def links(self) -> list[tuple[int, int]]:
        """(leaf, spine) pairs; the fabric is a complete bipartite graph."""
        return [(l, s) for l in range(self.n_leaves) for s in range(self.n_spines)]


def build_spine_leaf(n_servers: int, params: SpineLeafParams | None = None) -> SpineLeafTopology:
    params = params or SpineLeafParams()
    leaves, spines = spine_leaf_size(n_servers, params)
    attach = tuple(i // params.leaf_server_ports for i in range(n_servers))
    return SpineLeafTopology(n_servers, params, leaves, spines, attach)


def spine_leaf_path(fabric: SpineLeafTopology, src: int, dst: int) -> DataPath:
    """Switched path between two servers, spine picked by a fixed hash."""
    if src == dst:
        raise SamePath(f"server {src} cannot send to itself")
    for s in (src, dst):
        if not 0 <= s < fabric.n_servers:
            raise InvalidParams(f"no server {s} in fabric")
    la, lb = fabric.server_leaf[src], fabric.server_leaf[dst]
    elements = [PathElement(TRANSCEIVER, f"S{src}"), PathElement(LEAF, f"leaf{la}")]
    if la != lb:
        spine = (src + dst) % fabric.n_spines
        elements += [PathElement(SPINE, f"spine{spine}"), PathElement(LEAF, f"leaf{lb}")]
    elements.append(PathElement(TRANSCEIVER, f"S{dst}"))
    return DataPath(tuple(elements), INTRA_RACK if la == lb else INTER_RACK_SAME_CELL)


# ---------------------------------------------------------------------------
# exports


def topology_to_dict(topo: FogTopology) -> dict:
    p = topo.params
    return {
        "params": {
            "cells": p.cells,
            "racks_per_cell": p.racks_per_cell,
            "servers_per_rack": p.servers_per_rack,
            "olt_to_cell_km": list(p.olt_to_cell_km)
            if isinstance(p.olt_to_cell_km, tuple)
            else p.olt_to_cell_km,
        },
        "olt": {
            "name": topo.olt.name,
            "usable_cards": topo.olt.capacity.usable_cards,
            "servers_per_card": topo.olt.capacity.servers_per_card,
        },
        "totals": {
            "cells": len(topo.cells),
            "groups": topo.n_groups,
            "servers": topo.n_servers,
            "awgr_links": len(topo.awgr_links),
        },
        "cells": [
            {
                "id": cell.id,
                "mux": cell.mux,
                "groups": [
                    {
                        "id": g.id,
                        "label": g.label,
                        "awgr": g.awgr,
                        "servers": [{"name": s.name, "onu": s.onu.name} for s in g.servers],
                    }
                    for g in cell.groups
                ],
            }
            for cell in topo.cells
        ],
        "awgr_links": [
            {"a": f"AWGR{a + 1}", "b": f"AWGR{b + 1}", "km": topo.link_km(a, b)}
            for a, b in sorted(topo.awgr_links)
        ],
        "awg_uplinks": [
            {"group": group_label(u.group), "mux": u.mux, "km": u.length_km}
            for u in topo.awg_uplinks
        ],
    }


def topology_to_json(topo: FogTopology) -> str:
    return json.dumps(topology_to_dict(topo), indent=2) + "\n"


def topology_to_dot(topo: FogTopology) -> str:
    lines = ["digraph fog {", '  "OLT" [shape=box];']
    for cell in topo.cells:
        lines.append(f'  "{cell.mux}" [shape=trapezium];')
        lines.append(f'  "{cell.mux}" -> "OLT";')
        for g in cell.groups:
            lines.append(f'  "{g.awgr}" [shape=diamond];')
            lines.append(f'  "{g.awgr}" -> "{cell.mux}";')
            for s in g.servers:
                lines.append(f'  "{s.onu.name}" -> "{g.awgr}";')
    for a, b in sorted(topo.awgr_links):
        lines.append(f'  "AWGR{a + 1}" -> "AWGR{b + 1}" [dir=both];')
    lines.append("}")
    return "\n".join(lines) + "\n"
