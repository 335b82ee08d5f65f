"""Power model for the PON fog interconnect and the spine-and-leaf reference.

The fog side draws power only at the edges: one tunable ONU per server and
GPON line cards in the OLT. AWGRs, AWG multiplexers, couplers and FBG
reflectors are passive and are itemized at 0 W. The reference fabric pays
for leaf and spine switches plus one transceiver per server.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable

from ponfog.errors import InvalidParams, PonFogError
from ponfog.topology import (
    OltCapacity,
    SpineLeafParams,
    TopologyParams,
    check_capacity,
    spine_leaf_size,
)

PON_FOG = "pon-fog"
SPINE_LEAF = "spine-leaf"

PER_CELL = "per-cell"
SHARED = "shared"
CARD_POLICIES = (PER_CELL, SHARED)


@dataclass(frozen=True)
class PowerParams:
    """Per-device power draw in watts (GPON card, ONU, switches, transceiver)."""

    olt_gpon_card_w: float = 90.0
    tunable_onu_w: float = 2.5
    spine_switch_w: float = 660.0
    leaf_switch_w: float = 508.0
    server_transceiver_w: float = 3.0
    # switching matrix and control cards, charged per chassis
    olt_overhead_w: float = 0.0

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise InvalidParams(f"{f.name} must be >= 0")

    def scaled(self, factor: float) -> PowerParams:
        return PowerParams(**{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass(frozen=True)
class PowerItem:
    device: str
    count: int
    unit_w: float
    subtotal_w: float


@dataclass(frozen=True)
class PowerBreakdown:
    architecture: str
    items: tuple[PowerItem, ...]
    total_w: float

    def count(self, device: str) -> int:
        return sum(i.count for i in self.items if i.device == device)

    def is_consistent(self) -> bool:
        subtotals_ok = all(
            math.isclose(i.subtotal_w, i.count * i.unit_w, rel_tol=1e-12, abs_tol=1e-9)
            for i in self.items
        )
        total = math.fsum(i.subtotal_w for i in self.items)
        return subtotals_ok and math.isclose(total, self.total_w, rel_tol=1e-12, abs_tol=1e-9)

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "items": [
                {
                    "device": i.device,
                    "count": i.count,
                    "unit_w": i.unit_w,
                    "subtotal_w": i.subtotal_w,
                }
                for i in self.items
            ],
            "total_w": self.total_w,
        }


def _breakdown(architecture: str, parts: Iterable[tuple[str, int, float]]) -> PowerBreakdown:
    items = tuple(PowerItem(dev, n, unit, n * unit) for dev, n, unit in parts)
    return PowerBreakdown(architecture, items, math.fsum(i.subtotal_w for i in items))


def olt_cards(
    params: TopologyParams, capacity: OltCapacity, n_servers: int, policy: str = PER_CELL
) -> int:
    """GPON line cards needed.

    ``per-cell`` dedicates cards to each cell (one unless a cell outgrows a
    card); ``shared`` packs all ONUs onto as few cards as possible.
    """
    if policy == PER_CELL:
        per_cell = math.ceil(params.servers_per_cell / capacity.servers_per_card)
        return params.cells * per_cell
    if policy == SHARED:
        return math.ceil(n_servers / capacity.servers_per_card)
    raise InvalidParams(f"unknown card policy {policy!r}; expected one of {CARD_POLICIES}")


def pon_fog_power(
    topo_params: TopologyParams | None = None,
    capacity: OltCapacity | None = None,
    p: PowerParams | None = None,
    *,
    card_policy: str = PER_CELL,
    n_servers: int | None = None,
) -> PowerBreakdown:
    """Itemized power of the fog interconnect.

    ``n_servers`` defaults to a fully populated deployment; a smaller value
    models a last cell that is only partly filled.
    """
    topo_params = topo_params or TopologyParams()
    capacity = capacity or OltCapacity()
    p = p or PowerParams()
    topo_params.validate()
    capacity.validate()
    p.validate()
    n = topo_params.n_servers if n_servers is None else n_servers
    if not 1 <= n <= topo_params.n_servers:
        raise InvalidParams(f"{n} servers do not fit {topo_params.n_servers} server slots")
    check_capacity(n, capacity)

    cards = olt_cards(topo_params, capacity, n, card_policy)
    chassis = math.ceil(cards / capacity.usable_cards)
    groups = topo_params.n_groups
    return _breakdown(
        PON_FOG,
        [
            ("tunable-onu", n, p.tunable_onu_w),
            ("olt-gpon-card", cards, p.olt_gpon_card_w),
            ("olt-chassis-overhead", chassis, p.olt_overhead_w),
            ("awgr", groups, 0.0),
            ("awg-mux", topo_params.cells, 0.0),
            ("coupler", groups, 0.0),
            ("fbg-reflector", groups, 0.0),
        ],
    )


def spine_leaf_power(
    n_servers: int, slp: SpineLeafParams | None = None, p: PowerParams | None = None
) -> PowerBreakdown:
    p = p or PowerParams()
    p.validate()
    leaves, spines = spine_leaf_size(n_servers, slp or SpineLeafParams())
    return _breakdown(
        SPINE_LEAF,
        [
            ("leaf-switch", leaves, p.leaf_switch_w),
            ("spine-switch", spines, p.spine_switch_w),
            ("server-transceiver", n_servers, p.server_transceiver_w),
        ],
    )


@dataclass(frozen=True)
class PowerConfig:
    """Everything the comparison needs.

    ``topology`` acts as a template: for a given server count the number of
    cells is grown to fit and the other fields are kept.
    """

    topology: TopologyParams = field(default_factory=TopologyParams)
    capacity: OltCapacity = field(default_factory=OltCapacity)
    spine_leaf: SpineLeafParams = field(default_factory=SpineLeafParams)
    power: PowerParams = field(default_factory=PowerParams)
    card_policy: str = PER_CELL


def fog_params_for(n_servers: int, template: TopologyParams | None = None) -> TopologyParams:
    """Smallest deployment shaped like ``template`` that holds ``n_servers``."""
    template = template or TopologyParams()
    if n_servers < 1:
        raise InvalidParams("need at least one server")
    cells = math.ceil(n_servers / template.servers_per_cell)
    return replace(template, cells=cells)


def compare(n_servers: int, cfg: PowerConfig | None = None) -> tuple[PowerBreakdown, PowerBreakdown]:
    cfg = cfg or PowerConfig()
    fog = pon_fog_power(
        fog_params_for(n_servers, cfg.topology),
        cfg.capacity,
        cfg.power,
        card_policy=cfg.card_policy,
        n_servers=n_servers,
    )
    ref = spine_leaf_power(n_servers, cfg.spine_leaf, cfg.power)
    return fog, ref


def savings(n_servers: int, cfg: PowerConfig | None = None) -> float:
    """Fraction of spine-and-leaf power saved by the fog interconnect."""
    fog, ref = compare(n_servers, cfg)
    if ref.total_w <= 0:
        raise InvalidParams("reference fabric draws no power; savings undefined")
    return 1.0 - fog.total_w / ref.total_w


@dataclass(frozen=True)
class SweepRow:
    n_servers: int
    pon_fog_w: float | None
    spine_leaf_w: float | None
    savings: float | None
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SweepSeries:
    rows: tuple[SweepRow, ...]

    def savings_column(self) -> list[float]:
        return [r.savings for r in self.rows if r.feasible]


def sweep(n_list: Iterable[int], cfg: PowerConfig | None = None) -> SweepSeries:
    """One comparison row per server count.

    A count that cannot be built yields a row carrying the error message
    instead of aborting the sweep.
    """
    cfg = cfg or PowerConfig()
    ns = list(n_list)
    if ns != sorted(ns):
        raise InvalidParams("server counts must be sorted ascending")
    rows = []
    for n in ns:
        try:
            fog, ref = compare(n, cfg)
            if ref.total_w <= 0:
                raise InvalidParams("reference fabric draws no power")
        except PonFogError as exc:
            rows.append(SweepRow(n, None, None, None, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(SweepRow(n, fog.total_w, ref.total_w, 1.0 - fog.total_w / ref.total_w))
    return SweepSeries(tuple(rows))


SWEEP_HEADER = ("n_servers", "pon_fog_w", "spine_leaf_w", "savings")


def sweep_to_csv(series: SweepSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in series.rows:
        if r.feasible:
            writer.writerow([r.n_servers, f"{r.pon_fog_w:.1f}", f"{r.spine_leaf_w:.1f}", f"{r.savings:.4f}"])
        else:
            writer.writerow([r.n_servers, "infeasible", "infeasible", "infeasible"])
    return buf.getvalue()


def sweep_to_gnuplot(series: SweepSeries) -> str:
    """Whitespace-separated columns; infeasible rows become comments."""
    lines = ["# " + " ".join(SWEEP_HEADER)]
    for r in series.rows:
        if r.feasible:
            lines.append(f"{r.n_servers} {r.pon_fog_w:.1f} {r.spine_leaf_w:.1f} {r.savings:.4f}")
        else:
            lines.append(f"# {r.n_servers} infeasible: {r.error}")
    return "\n".join(lines) + "\n"


def report(n_servers: int, cfg: PowerConfig | None = None) -> dict:
    fog, ref = compare(n_servers, cfg)
    return {
        "n_servers": n_servers,
        "pon_fog": fog.to_dict(),
        "spine_leaf": ref.to_dict(),
        "savings": float(f"{1.0 - fog.total_w / ref.total_w:.4g}"),
    }


def report_to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"
