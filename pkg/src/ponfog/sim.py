"""Discrete-event simulation of the SDN-OLT wavelength grant protocol.

An inter-group flow runs through four phases:

1. the source group sends a request to the OLT on its upstream wavelength,
2. after processing, the OLT sends one grant to each of the two groups,
3. once both grants have arrived both ONUs retune,
4. data crosses the passive AWGR path on the source->destination wavelength.

Intra-rack flows skip the OLT and only retune. Time is integer
microseconds and every delay is rounded up.

Contention is per (group, wavelength, direction) channel. Each channel is
held by at most one flow and has a FIFO wait queue. A control message holds
its channel for ``control_msg_us`` but arrives after propagation alone. A
data flow holds its channel until its last bit arrives.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from ponfog.errors import ConfigError, InvalidParams, InvalidRequest, MalformedTrace, PonFogError
from ponfog.rwa import RoutingMap, wavelength
from ponfog.topology import FogTopology, ServerNode, data_path, group_label

REQUEST_SENT = "request-sent"
GRANT_SENT = "grant-sent"
TUNED = "tuned"
DATA_START = "data-start"
DATA_END = "data-end"
BLOCKED = "blocked"
UNBLOCKED = "unblocked"

TX = "tx"
RX = "rx"
INTRA = "intra"

# heap priority: releases run before anything else scheduled at the same instant
_RELEASE = 0
_NORMAL = 1


def ceil_us(x: float) -> int:
    # round first so 100.00000000000001 does not become 101
    return math.ceil(round(x, 6))


@dataclass(frozen=True)
class SimConfig:
    topo: FogTopology
    rmap: RoutingMap
    line_rate_gbps: float = 10.0
    propagation_us_per_km: float = 5.0
    olt_processing_us: int = 10
    tuning_us: int = 1
    control_msg_us: int = 1
    seed: int = 0

    def validate(self) -> None:
        for name in ("propagation_us_per_km", "olt_processing_us", "tuning_us", "control_msg_us"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        if self.line_rate_gbps <= 0:
            raise InvalidParams("line_rate_gbps must be > 0")
        if self.rmap.n_endpoints != self.topo.n_groups + 1:
            raise InvalidParams(
                f"routing map has {self.rmap.n_endpoints} endpoints, "
                f"topology needs {self.topo.n_groups + 1}"
            )

    @property
    def olt(self) -> int:
        return self.topo.n_groups

    def prop_us(self, km: float) -> int:
        return ceil_us(km * self.propagation_us_per_km)

    def olt_leg_us(self, group: int) -> int:
        return self.prop_us(self.topo.uplink_km(group))

    def transmit_us(self, size_bits: int) -> int:
        return ceil_us(size_bits / (self.line_rate_gbps * 1000.0))


@dataclass(frozen=True)
class FlowRequest:
    id: int
    src: ServerNode
    dst: ServerNode
    size_bits: int
    arrival_us: int


@dataclass(frozen=True)
class Event:
    time: int
    kind: str
    flow: int
    wavelength: int | None
    src: str
    dst: str

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "kind": self.kind,
            "flow": self.flow,
            "wavelength": self.wavelength,
            "src": self.src,
            "dst": self.dst,
        }


@dataclass(frozen=True)
class SimTrace:
    events: tuple[Event, ...]
    arrivals: dict[int, int] = field(default_factory=dict)

    def for_flow(self, flow: int) -> list[Event]:
        return [e for e in self.events if e.flow == flow]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)


def setup_latency(cfg: SimConfig, src_group: int, dst_group: int) -> int:
    """Request-to-retune delay of an inter-group flow on an idle system."""
    if src_group == dst_group:
        raise InvalidParams("setup latency is defined for distinct groups only")
    down = max(cfg.olt_leg_us(src_group), cfg.olt_leg_us(dst_group))
    return cfg.olt_leg_us(src_group) + cfg.olt_processing_us + down + cfg.tuning_us


Channel = tuple[int, int, str]


@dataclass
class _Flow:
    req: FlowRequest
    src_group: int
    dst_group: int
    grants_pending: int = 2
    grants_done_at: int = 0


class _Engine:
    def __init__(self, cfg: SimConfig, until_us: int | None) -> None:
        self.cfg = cfg
        self.until = until_us
        self.heap: list = []
        self.seq = 0
        self.events: list[Event] = []
        self.holder: dict[Channel, int] = {}
        self.waiting: dict[Channel, deque] = {}

    def at(self, time: int, prio: int, flow: int, action: Callable, *args) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time, prio, flow, self.seq, action, args))

    def emit(self, time: int, kind: str, flow: int, lam: int | None, src: str, dst: str) -> None:
        self.events.append(Event(time, kind, flow, lam, src, dst))

    def acquire(self, ch: Channel, flow: int, t: int, then: Callable, lam, src, dst) -> None:
        if ch not in self.holder:
            self.holder[ch] = flow
            then(t)
            return
        self.emit(t, BLOCKED, flow, lam, src, dst)
        self.waiting.setdefault(ch, deque()).append((flow, then, lam, src, dst))

    def release(self, t: int, ch: Channel) -> None:
        del self.holder[ch]
        queue = self.waiting.get(ch)
        if queue:
            flow, then, lam, src, dst = queue.popleft()
            self.holder[ch] = flow
            self.emit(t, UNBLOCKED, flow, lam, src, dst)
            then(t)

    def loop(self) -> None:
        while self.heap:
            time, _, _, _, action, args = heapq.heappop(self.heap)
            if self.until is not None and time > self.until:
                break
            action(time, *args)


def _check_requests(cfg: SimConfig, requests: list[FlowRequest]) -> None:
    seen = set()
    for r in requests:
        if r.id in seen:
            raise InvalidRequest(f"duplicate flow id {r.id}")
        seen.add(r.id)
        if r.src == r.dst:
            raise InvalidRequest(f"flow {r.id}: source and destination are both {r.src.name}")
        if r.arrival_us < 0 or r.size_bits <= 0:
            raise InvalidRequest(f"flow {r.id}: needs arrival >= 0 and size > 0")
        for node in (r.src, r.dst):
            try:
                known = cfg.topo.server(node.group, node.index)
            except PonFogError:
                known = None
            if known != node:
                raise InvalidRequest(f"flow {r.id}: unknown server {node.name}")


def run(cfg: SimConfig, requests: Iterable[FlowRequest], until_us: int | None = None) -> SimTrace:
    """Simulate ``requests`` and return the event trace.

    Args:
        cfg: Topology, routing map and timing constants.
        requests: Flows to carry; ids must be distinct.
        until_us: Stop before processing any event later than this instant.

    Raises:
        InvalidRequest: Self-addressed flows, unknown servers, duplicate ids.
    """
    cfg.validate()
    requests = list(requests)
    _check_requests(cfg, requests)
    eng = _Engine(cfg, until_us)
    olt = cfg.olt
    olt_name = cfg.rmap.labels[olt]
    ctrl = cfg.control_msg_us

    def lam(a: int, b: int) -> int:
        return wavelength(cfg.rmap, a, b)

    def label(g: int) -> str:
        return group_label(g)

    def arrive(t: int, f: _Flow) -> None:
        fid, gs = f.req.id, f.src_group
        if gs == f.dst_group:
            eng.at(t + cfg.tuning_us, _NORMAL, fid, tuned, f)
            return
        up = lam(gs, olt)
        eng.acquire((gs, up, TX), fid, t, lambda now: send_request(now, f), up, label(gs), olt_name)

    def send_request(t: int, f: _Flow) -> None:
        fid, gs = f.req.id, f.src_group
        up = lam(gs, olt)
        eng.emit(t, REQUEST_SENT, fid, up, label(gs), olt_name)
        eng.at(t + ctrl, _RELEASE, fid, eng.release, (gs, up, TX))
        eng.at(t + cfg.olt_leg_us(gs), _NORMAL, fid, olt_receive, f)

    def olt_receive(t: int, f: _Flow) -> None:
        eng.at(t + cfg.olt_processing_us, _NORMAL, f.req.id, olt_grant, f)

    def olt_grant(t: int, f: _Flow) -> None:
        for g in (f.src_group, f.dst_group):
            down = lam(olt, g)
            eng.acquire(
                (g, down, RX), f.req.id, t,
                lambda now, g=g: send_grant(now, f, g), down, olt_name, label(g),
            )

    def send_grant(t: int, f: _Flow, g: int) -> None:
        fid = f.req.id
        down = lam(olt, g)
        eng.emit(t, GRANT_SENT, fid, down, olt_name, label(g))
        eng.at(t + ctrl, _RELEASE, fid, eng.release, (g, down, RX))
        f.grants_done_at = max(f.grants_done_at, t + cfg.olt_leg_us(g))
        f.grants_pending -= 1
        if f.grants_pending == 0:
            eng.at(f.grants_done_at + cfg.tuning_us, _NORMAL, fid, tuned, f)

    def data_channel(f: _Flow) -> tuple[Channel, int | None]:
        gs, gd = f.src_group, f.dst_group
        if gs == gd:
            return (gs, 0, INTRA), None
        w = lam(gs, gd)
        return (gs, w, TX), w

    def tuned(t: int, f: _Flow) -> None:
        fid = f.req.id
        ch, w = data_channel(f)
        src, dst = label(f.src_group), label(f.dst_group)
        eng.emit(t, TUNED, fid, w, src, dst)
        eng.acquire(ch, fid, t, lambda now: start_data(now, f), w, src, dst)

    def start_data(t: int, f: _Flow) -> None:
        fid = f.req.id
        _, w = data_channel(f)
        eng.emit(t, DATA_START, fid, w, label(f.src_group), label(f.dst_group))
        path = data_path(cfg.topo, f.req.src, f.req.dst)
        done = t + cfg.transmit_us(f.req.size_bits) + cfg.prop_us(path.length_km)
        eng.at(done, _RELEASE, fid, end_data, f)

    def end_data(t: int, f: _Flow) -> None:
        ch, w = data_channel(f)
        eng.emit(t, DATA_END, f.req.id, w, label(f.src_group), label(f.dst_group))
        eng.release(t, ch)

    for r in requests:
        f = _Flow(r, r.src.group, r.dst.group)
        eng.at(r.arrival_us, _NORMAL, r.id, arrive, f)
    eng.loop()
    return SimTrace(tuple(eng.events), {r.id: r.arrival_us for r in requests})


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class FlowStats:
    flow: int
    setup_delay_us: int | None
    control_wait_us: int
    queueing_delay_us: int | None
    completion_us: int | None

    @property
    def completed(self) -> bool:
        return self.completion_us is not None


@dataclass(frozen=True)
class SimStats:
    flows: tuple[FlowStats, ...]
    submitted: int
    completed: int
    pending: int
    requests: int
    grants: int

    @property
    def control_messages(self) -> int:
        return self.requests + self.grants

    def aggregate(self, attr: str) -> dict[str, float]:
        values = sorted(getattr(f, attr) for f in self.flows if getattr(f, attr) is not None)
        if not values:
            return {"mean": 0.0, "p95": 0.0, "max": 0.0}
        rank = math.ceil(0.95 * len(values)) - 1
        return {
            "mean": sum(values) / len(values),
            "p95": float(values[rank]),
            "max": float(values[-1]),
        }

    def to_dict(self) -> dict:
        return {
            "submitted": self.submitted,
            "completed": self.completed,
            "pending": self.pending,
            "control_messages": self.control_messages,
            "requests": self.requests,
            "grants": self.grants,
            "setup_delay_us": self.aggregate("setup_delay_us"),
            "queueing_delay_us": self.aggregate("queueing_delay_us"),
            "completion_us": self.aggregate("completion_us"),
            "flows": [
                {
                    "flow": f.flow,
                    "setup_delay_us": f.setup_delay_us,
                    "control_wait_us": f.control_wait_us,
                    "queueing_delay_us": f.queueing_delay_us,
                    "completion_us": f.completion_us,
                }
                for f in self.flows
            ],
        }


def check_trace(trace: SimTrace) -> None:
    """Raise MalformedTrace unless global and per-flow event ordering hold."""
    last = None
    for e in trace.events:
        if last is not None and e.time < last:
            raise MalformedTrace(f"time goes backwards at flow {e.flow} ({e.time} < {last})")
        last = e.time

    by_flow: dict[int, list[Event]] = {}
    for e in trace.events:
        by_flow.setdefault(e.flow, []).append(e)
    limits = {REQUEST_SENT: 1, GRANT_SENT: 2, TUNED: 1, DATA_START: 1, DATA_END: 1}
    for fid, evs in by_flow.items():
        kinds = [e.kind for e in evs]
        for kind, cap in limits.items():
            if kinds.count(kind) > cap:
                raise MalformedTrace(f"flow {fid}: {kinds.count(kind)} {kind} events")
        if kinds.count(UNBLOCKED) > kinds.count(BLOCKED):
            raise MalformedTrace(f"flow {fid}: unblocked without blocked")
        order = [k for k in kinds if k in limits]
        rank = {REQUEST_SENT: 0, GRANT_SENT: 1, TUNED: 2, DATA_START: 3, DATA_END: 4}
        if [rank[k] for k in order] != sorted(rank[k] for k in order):
            raise MalformedTrace(f"flow {fid}: phases out of order: {order}")
        if GRANT_SENT in kinds and REQUEST_SENT not in kinds:
            raise MalformedTrace(f"flow {fid}: grant without request")
        if REQUEST_SENT in kinds and TUNED in kinds and kinds.count(GRANT_SENT) != 2:
            raise MalformedTrace(f"flow {fid}: tuned after {kinds.count(GRANT_SENT)} grants")
        for needs, kind in ((TUNED, DATA_START), (DATA_START, DATA_END)):
            if kind in kinds and needs not in kinds:
                raise MalformedTrace(f"flow {fid}: {kind} without {needs}")
        times = {e.kind: e.time for e in evs if e.kind in (DATA_START, DATA_END)}
        if DATA_END in times and times[DATA_END] <= times[DATA_START]:
            raise MalformedTrace(f"flow {fid}: data-end not after data-start")


def stats(trace: SimTrace) -> SimStats:
    """Per-flow delays and aggregate counters.

    Setup delay runs from arrival to retune, control wait is time spent
    blocked before retuning, queueing delay is the wait for the data channel.
    """
    check_trace(trace)
    by_flow: dict[int, list[Event]] = {}
    for e in trace.events:
        by_flow.setdefault(e.flow, []).append(e)
    ids = sorted(set(trace.arrivals) | set(by_flow))
    out = []
    for fid in ids:
        evs = by_flow.get(fid, [])
        first = {}
        for e in evs:
            first.setdefault(e.kind, e.time)
        arrival = trace.arrivals.get(fid, evs[0].time if evs else 0)
        tuned_at = first.get(TUNED)
        # both grants can wait at once; count wall-clock time with any block open
        control_wait = 0
        open_blocks = 0
        since = 0
        for e in evs:
            if e.kind == TUNED:
                break
            if e.kind == BLOCKED:
                if open_blocks == 0:
                    since = e.time
                open_blocks += 1
            elif e.kind == UNBLOCKED and open_blocks:
                open_blocks -= 1
                if open_blocks == 0:
                    control_wait += e.time - since
        out.append(
            FlowStats(
                fid,
                None if tuned_at is None else tuned_at - arrival,
                control_wait,
                None if DATA_START not in first else first[DATA_START] - tuned_at,
                None if DATA_END not in first else first[DATA_END] - arrival,
            )
        )
    completed = sum(1 for f in out if f.completed)
    kinds = [e.kind for e in trace.events]
    return SimStats(
        flows=tuple(out),
        submitted=len(ids),
        completed=completed,
        pending=len(ids) - completed,
        requests=kinds.count(REQUEST_SENT),
        grants=kinds.count(GRANT_SENT),
    )


# ---------------------------------------------------------------------------
# workloads

WORKLOAD_HEADER = (
    "flow_id", "src_cell", "src_group", "src_server",
    "dst_cell", "dst_group", "dst_server", "size_bits", "arrival_us",
)


def _node(topo: FogTopology, row: int, cell: int, group: int, server: int) -> ServerNode:
    try:
        node = topo.server(group, server)
    except PonFogError:
        raise ConfigError(f"row {row}: no server {server} in group {group}") from None
    if topo.cell_of(group) != cell:
        raise ConfigError(f"row {row}: group {group} is in cell {topo.cell_of(group)}, not {cell}")
    return node


def read_workload(text: str, topo: FogTopology) -> list[FlowRequest]:
    """Parse a workload CSV. Cells, groups and servers are 0-based ids.

    Raises:
        ConfigError: Missing columns or a bad row; the message names the row.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = [c for c in WORKLOAD_HEADER if c not in reader.fieldnames]
    if missing:
        raise ConfigError(f"row 1: workload header lacks {', '.join(missing)}")
    flows = []
    for lineno, rec in enumerate(reader, start=2):
        try:
            v = {k: int(rec[k]) for k in WORKLOAD_HEADER}
        except (TypeError, ValueError):
            raise ConfigError(f"row {lineno}: every field must be an integer") from None
        src = _node(topo, lineno, v["src_cell"], v["src_group"], v["src_server"])
        dst = _node(topo, lineno, v["dst_cell"], v["dst_group"], v["dst_server"])
        flows.append(FlowRequest(v["flow_id"], src, dst, v["size_bits"], v["arrival_us"]))
    return flows


def write_workload(flows: Iterable[FlowRequest], topo: FogTopology) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(WORKLOAD_HEADER)
    for f in flows:
        writer.writerow([
            f.id,
            topo.cell_of(f.src.group), f.src.group, f.src.index,
            topo.cell_of(f.dst.group), f.dst.group, f.dst.index,
            f.size_bits, f.arrival_us,
        ])
    return buf.getvalue()


def synthetic_workload(
    topo: FogTopology,
    n_flows: int,
    seed: int = 0,
    mean_gap_us: float = 50.0,
    size_bits: tuple[int, int] = (100_000, 10_000_000),
) -> list[FlowRequest]:
    """Random flows between distinct servers with exponential inter-arrivals."""
    rng = random.Random(seed)
    servers = list(topo.servers())
    if len(servers) < 2:
        raise InvalidParams("need at least two servers for a workload")
    t = 0.0
    flows = []
    for i in range(n_flows):
        src, dst = rng.sample(servers, 2)
        t += rng.expovariate(1.0 / mean_gap_us) if mean_gap_us > 0 else 0.0
        flows.append(FlowRequest(i, src, dst, rng.randint(*size_bits), int(t)))
    return flows
