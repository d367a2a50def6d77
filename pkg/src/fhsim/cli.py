"""Command line: ``fhsim {rates,sweep,curve,simulate,validate}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys
from typing import Iterable, Optional, TextIO

from .frame_grid import dump_grid
from .fronthaul import MBPS, threshold_capacity
from .phy_model import Direction, access_capacity, duty, effective_layers, fh_rate_dl, fh_rate_ul, required_fh
from .scenario_file import ScenarioError, load_scenario
from .sim_engine import CurveRow, Scenario, SweepRow, TimeSeries, curve_access_vs_fh, last_grid_for, run, sweep_capacity

SWEEP_HEADER = ["capacity_mbps", "config", "achieved_dl_mbps", "achieved_ul_mbps", "fh_dl_mbps", "fh_ul_mbps"]
CURVE_HEADER = ["offered_mbps", "config", "access_mbps", "fh_dl_mbps", "fh_ul_mbps"]
SIM_HEADER = [
    "t", "capacity_dl", "capacity_ul", "config", "offered_dl", "offered_ul",
    "achieved_dl", "achieved_ul", "fh_dl", "fh_ul", "event",
]
EVENT_HEADER = ["time_s", "event", "from_config", "to_config"]


class UnknownCell(ScenarioError):
    exit_code = 1


def mbps(bps: float) -> str:
    if bps == float("inf"):
        return "inf"
    return f"{bps / MBPS:.1f}"


def _writer(stream: TextIO):
    return csv.writer(stream, lineterminator="\n")


def write_sweep(rows: Iterable[SweepRow], stream: TextIO) -> None:
    w = _writer(stream)
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([mbps(r.capacity), r.config, mbps(r.achieved_dl), mbps(r.achieved_ul), mbps(r.fh_dl), mbps(r.fh_ul)])


def write_curve(rows: Iterable[CurveRow], stream: TextIO) -> None:
    w = _writer(stream)
    w.writerow(CURVE_HEADER)
    for r in rows:
        w.writerow([mbps(r.offered), r.config, mbps(r.access), mbps(r.fh_dl), mbps(r.fh_ul)])


def write_timeseries(series: TimeSeries, stream: TextIO) -> None:
    w = _writer(stream)
    w.writerow(SIM_HEADER)
    for r in series.rows:
        event = f"{r.event.from_config}->{r.event.to_config}" if r.event else ""
        w.writerow([
            f"{r.t:.3f}", mbps(r.capacity_dl), mbps(r.capacity_ul), r.config,
            mbps(r.offered_dl), mbps(r.offered_ul), mbps(r.achieved_dl), mbps(r.achieved_ul),
            mbps(r.fh_dl), mbps(r.fh_ul), event,
        ])


def write_events(series: TimeSeries, stream: TextIO) -> None:
    w = _writer(stream)
    w.writerow(EVENT_HEADER)
    for e in series.events:
        w.writerow([f"{e.t:.3f}", e.kind, e.from_config, e.to_config])


def rates_report(scenario: Scenario, cell_name: Optional[str] = None) -> str:
    """Key-value document of the closed-form rates for one or every cell."""
    names = scenario.catalog.names
    if cell_name is not None:
        if cell_name not in names:
            raise UnknownCell(f"unknown cell {cell_name!r}; catalog has {', '.join(names)}")
        names = [cell_name]
    ue, tdd, link = scenario.ue, scenario.tdd, scenario.link
    out = []
    for name in names:
        cell = scenario.catalog.get(name)
        layers = effective_layers(cell, ue, Direction.DL)
        dl_req, ul_req = required_fh(cell, ue, tdd, link.control_overhead_bps)
        values = [
            ("n_rb", cell.n_rb),
            ("gnb_ports", cell.gnb_ports),
            ("dl_layers", layers),
            ("ul_layers", effective_layers(cell, ue, Direction.UL)),
            ("duty_dl", f"{float(duty(tdd, Direction.DL)):.4f}"),
            ("duty_ul", f"{float(duty(tdd, Direction.UL)):.4f}"),
            ("dl_access_mbps", mbps(access_capacity(cell, ue, Direction.DL, tdd))),
            ("ul_access_mbps", mbps(access_capacity(cell, ue, Direction.UL, tdd))),
            ("dl_fh_mbps", mbps(fh_rate_dl(cell, layers, cell.n_rb, duty(tdd, Direction.DL)))),
            ("ul_fh_mbps", mbps(fh_rate_ul(cell, 1, duty(tdd, Direction.UL)))),
            ("control_overhead_mbps", mbps(link.control_overhead_bps)),
            ("dl_fh_required_mbps", mbps(dl_req)),
            ("ul_fh_required_mbps", mbps(ul_req)),
            ("threshold_mbps", mbps(threshold_capacity(cell, ue, tdd, link))),
            ("binding_direction", "UL" if ul_req >= dl_req else "DL"),
        ]
        out.append(f"[rates.{name}]")
        out.extend(f"{k} = {v}" for k, v in values)
        out.append("")
    return "\n".join(out)


def _common(defaults: bool) -> argparse.ArgumentParser:
    # Shared flags accepted before or after the subcommand.
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--scenario", default=d("default.scenario"), help="scenario file (bundled names accepted)")
    p.add_argument("--out", default=d(None), help="write output here instead of stdout")
    p.add_argument("--jobs", type=int, default=d(1), help="parallel workers for sweep/curve")
    p.add_argument("--grid-dump", default=d(None), help="CSV dump of a scheduled grid (curve, simulate)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fhsim", description=__doc__, parents=[_common(True)])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(False)

    p = sub.add_parser("rates", parents=[common], help="closed-form rates per cell")
    p.add_argument("--cell", help="restrict to one catalog entry")

    p = sub.add_parser("sweep", parents=[common], help="achieved access vs symmetric fronthaul capacity")
    p.add_argument("--min", type=float, default=500.0, help="first capacity, Mbps")
    p.add_argument("--max", type=float, default=4000.0, help="capacity upper bound (exclusive), Mbps")
    p.add_argument("--step", type=float, default=100.0, help="capacity step, Mbps")

    p = sub.add_parser("curve", parents=[common], help="fronthaul load vs offered access traffic")
    p.add_argument("--direction", choices=["dl", "ul"], default="dl")
    p.add_argument("--demand-max", type=float, default=900.0, help="largest offered rate, Mbps")
    p.add_argument("--points", type=int, default=10)

    p = sub.add_parser("simulate", parents=[common], help="time-stepped run with the reconfiguration controller")
    p.add_argument("--events", help="also write reconfiguration events CSV here")

    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    return parser


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as f:
            yield f


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        return _dispatch(args, scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, scenario: Scenario) -> int:
    if args.command == "rates":
        report = rates_report(scenario, args.cell)
        with _output(args.out) as out:
            out.write(report)
        return 0

    if args.command == "sweep":
        rows = sweep_capacity(scenario, args.min * MBPS, args.max * MBPS, args.step * MBPS, jobs=args.jobs)
        with _output(args.out) as out:
            write_sweep(rows, out)
        return 0

    if args.command == "curve":
        direction = Direction(args.direction.upper())
        demand_max = args.demand_max * MBPS
        rows = curve_access_vs_fh(scenario, direction, demand_max, args.points, jobs=args.jobs)
        with _output(args.out) as out:
            write_curve(rows, out)
        if args.grid_dump:
            cell = scenario.catalog.configs[0]
            dl, ul = (demand_max, 0.0) if direction is Direction.DL else (demand_max * scenario.link.ack_ratio, demand_max)
            with open(args.grid_dump, "w", newline="") as f:
                dump_grid(last_grid_for(scenario, cell, dl, ul), f)
        return 0

    if args.command == "simulate":
        series = run(scenario)
        with _output(args.out) as out:
            write_timeseries(series, out)
        if args.events:
            with open(args.events, "w", newline="") as f:
                write_events(series, f)
        if args.grid_dump and series.last_result is not None:
            with open(args.grid_dump, "w", newline="") as f:
                dump_grid(series.last_result.allocation.grid, f)
        return 0 if all(r.feasible for r in series.rows) else 1

    if args.command == "validate":
        from .checks import run_checks

        results = run_checks(scenario)
        with _output(args.out) as out:
            for r in results:
                out.write(r.line() + "\n")
        return 0 if all(r.passed for r in results) else 1

    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
