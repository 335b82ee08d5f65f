"""Command-line front end.

Exit status: 0 on success, 1 when a validation or verification step fails,
2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ponfog import power, rwa, sim, topology
from ponfog.config import AUTO_MAP, RunConfig, load_config
from ponfog.errors import CapacityExceeded, ConfigError, InvalidParams, InvalidRequest

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class _Output:
    """Collects stdout text; written to ``--out`` or stdout at the end."""

    def __init__(self) -> None:
        self.chunks: list[str] = []

    def write(self, text: str) -> None:
        self.chunks.append(text)

    def flush_to(self, path: str | None) -> None:
        text = "".join(self.chunks)
        if path:
            Path(path).write_text(text)
        else:
            sys.stdout.write(text)


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _routing_map_for(cfg: RunConfig, topo: topology.FogTopology, choice: str) -> rwa.RoutingMap:
    n = topo.n_groups + 1
    if choice == AUTO_MAP:
        table = rwa.load_table1()
        return table if table.n_endpoints == n else rwa.solve(n)
    if choice == "table1":
        return rwa.load_table1()
    if choice == "solve":
        return rwa.solve(n)
    try:
        return rwa.from_csv(Path(choice).read_text())
    except OSError as exc:
        raise ConfigError(f"{choice}: {exc.strerror}") from None


def cmd_topo(cfg: RunConfig, args: argparse.Namespace, out: _Output) -> int:
    topo = topology.build_fog_topology(cfg.topology, cfg.olt)
    if args.format == "dot":
        out.write(topology.topology_to_dot(topo))
    else:
        out.write(topology.topology_to_json(topo))
    diags = topology.validate_topology(topo)
    for d in diags:
        _err(f"{d.code}: {d.message}")
    return EXIT_FAILED if diags else EXIT_OK


def cmd_rwa(cfg: RunConfig, args: argparse.Namespace, out: _Output) -> int:
    if args.verify:
        try:
            text = Path(args.verify).read_text()
        except OSError as exc:
            raise ConfigError(f"{args.verify}: {exc.strerror}") from None
        rmap = rwa.from_csv(text)
        report = rwa.verify(rmap)
        if report.valid:
            out.write(f"valid: {rmap.n_endpoints} endpoints, {len(rwa.used_wavelengths(rmap))} wavelengths\n")
            return EXIT_OK
        out.write("invalid\n")
        for line in report.describe(rmap.labels):
            out.write(line + "\n")
        return EXIT_FAILED
    topo = topology.build_fog_topology(cfg.topology, cfg.olt)
    labels = tuple(topology.rwa_endpoints(topo))
    solved = rwa.solve(len(labels))
    out.write(rwa.to_csv(replace(solved, labels=labels)))
    _err(f"{solved.n_wavelengths} wavelengths for {len(labels)} endpoints")
    return EXIT_OK


def cmd_power(cfg: RunConfig, args: argparse.Namespace, out: _Output) -> int:
    n = args.servers if args.servers is not None else cfg.topology.n_servers
    out.write(power.report_to_json(power.report(n, cfg.power_config())))
    return EXIT_OK


def _parse_servers(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace, out: _Output) -> int:
    series = power.sweep(args.servers, cfg.power_config())
    out.write(power.sweep_to_csv(series))
    if args.gnuplot:
        Path(args.gnuplot).write_text(power.sweep_to_gnuplot(series))
    bad = [r for r in series.rows if not r.feasible]
    for r in bad:
        _err(f"infeasible: {r.n_servers} servers: {r.error}")
    return EXIT_FAILED if bad else EXIT_OK


def cmd_sim(cfg: RunConfig, args: argparse.Namespace, out: _Output) -> int:
    topo = topology.build_fog_topology(cfg.topology, cfg.olt)
    rmap = _routing_map_for(cfg, topo, args.map or cfg.sim.routing_map)
    s = cfg.sim
    sim_cfg = sim.SimConfig(
        topo, rmap, s.line_rate_gbps, s.propagation_us_per_km,
        s.olt_processing_us, s.tuning_us, s.control_msg_us, s.seed,
    )
    if args.workload:
        try:
            text = Path(args.workload).read_text()
        except OSError as exc:
            raise ConfigError(f"{args.workload}: {exc.strerror}") from None
        flows = sim.read_workload(text, topo)
    else:
        flows = sim.synthetic_workload(topo, args.synthetic, seed=s.seed)
    trace = sim.run(sim_cfg, flows)
    summary = sim.stats(trace)
    doc = json.dumps(summary.to_dict(), indent=2) + "\n"
    if args.stats_only:
        out.write(doc)
    else:
        out.write(trace.to_jsonl())
        if args.stats:
            Path(args.stats).write_text(doc)
    _err(
        f"{summary.completed}/{summary.submitted} flows completed, "
        f"{summary.control_messages} control messages"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS,
                        help="JSON run configuration")
    common.add_argument("--out", metavar="PATH", default=argparse.SUPPRESS,
                        help="write the main output here instead of stdout")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override sim.seed")

    parser = argparse.ArgumentParser(
        prog="ponfog", parents=[common],
        description="PON fog interconnect design, wavelength routing, power and protocol simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topo", parents=[common], help="build and validate the fog topology")
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(func=cmd_topo)

    p = sub.add_parser("rwa", parents=[common], help="print a minimal routing map or verify one")
    p.add_argument("--verify", metavar="FILE", help="check a routing-map CSV instead of solving")
    p.set_defaults(func=cmd_rwa)

    p = sub.add_parser("power", parents=[common], help="itemized power comparison")
    p.add_argument("--servers", type=int, help="server count (default: the configured topology)")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("sweep", parents=[common], help="savings over a list of server counts")
    p.add_argument("--servers", type=_parse_servers, required=True, metavar="A,B,C")
    p.add_argument("--gnuplot", metavar="PATH", help="also write a gnuplot data file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sim", parents=[common], help="simulate the grant protocol")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--workload", metavar="FILE", help="workload CSV")
    src.add_argument("--synthetic", type=int, metavar="N", help="generate N random flows from the seed")
    p.add_argument("--stats-only", action="store_true", help="print statistics instead of the trace")
    p.add_argument("--stats", metavar="PATH", help="also write statistics JSON here")
    p.add_argument("--map", metavar="FILE", help="routing map CSV, 'table1' or 'solve'")
    p.set_defaults(func=cmd_sim)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = _Output()
    try:
        cfg = load_config(getattr(args, "config", None))
        if hasattr(args, "seed"):
            cfg = replace(cfg, sim=replace(cfg.sim, seed=args.seed))
        status = args.func(cfg, args, out)
    except (ConfigError, InvalidParams, CapacityExceeded, InvalidRequest) as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE
    out.flush_to(getattr(args, "out", None))
    return status


if __name__ == "__main__":
    sys.exit(main())
