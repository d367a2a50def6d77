"""Time-stepped co-simulation and the two batch experiments (capacity sweep, access-vs-fronthaul curve)."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import controller as ctl
from .controller import ConfigCatalog, ControllerParams, ControllerState, ReconfigEvent
from .fronthaul import CapacityProfile, LinkParams, ThrottleResult, capacity_at, throttle
from .phy_model import CellConfig, Direction, TddPattern, UeProfile

INF = math.inf


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class Traffic:
    dl_demand_bps: float = 1000e6
    ul_demand_bps: float = 0.0
    jitter: float = 0.0  # uniform +/- fraction applied per step

    def __post_init__(self):
        if min(self.dl_demand_bps, self.ul_demand_bps) < 0:
            raise SimError("traffic demands must be >= 0")
        if not 0 <= self.jitter < 1:
            raise SimError("jitter must be in [0, 1)")


@dataclass(frozen=True)
class Scenario:
    catalog: ConfigCatalog
    ue: UeProfile = field(default_factory=UeProfile)
    tdd: TddPattern = field(default_factory=TddPattern)
    capacity: CapacityProfile = field(default_factory=lambda: CapacityProfile.constant(3500e6))
    traffic: Traffic = field(default_factory=Traffic)
    link: LinkParams = field(default_factory=LinkParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    step_s: float = 0.1
    duration_s: float = 10.0
    seed: int = 0
    capacity_trace: Optional[str] = None  # source path, kept for round-tripping

    def __post_init__(self):
        if not self.step_s > 0:
            raise SimError("step_s must be > 0")
        if self.duration_s < self.step_s:
            raise SimError("duration_s must be >= step_s")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.floor(self.duration_s / self.step_s + 1e-9)))


@dataclass(frozen=True)
class TimeRow:
    t: float
    capacity_dl: float
    capacity_ul: float
    config: str
    offered_dl: float
    offered_ul: float
    achieved_dl: float
    achieved_ul: float
    fh_dl: float
    fh_ul: float
    feasible: bool
    event: Optional[ReconfigEvent] = None


@dataclass
class TimeSeries:
    rows: list[TimeRow]
    last_result: Optional[ThrottleResult] = None

    @property
    def events(self) -> list[ReconfigEvent]:
        return [r.event for r in self.rows if r.event is not None]


def run(scenario: Scenario) -> TimeSeries:
    """Simulate the scenario step by step.

    Each step samples the capacity trace, lets the controller reconfigure,
    then schedules the offered traffic on the current configuration and
    throttles it against the fronthaul.
    """
    rng = np.random.default_rng(scenario.seed)
    cap0 = capacity_at(scenario.capacity, 0.0)
    start = ctl.select_config(scenario.catalog, cap0, scenario.ue, scenario.tdd, scenario.link, scenario.controller.objective)
    state = ControllerState(start.name, 0.0)
    traffic = scenario.traffic
    rows, result = [], None
    for k in range(scenario.n_steps):
        t = round(k * scenario.step_s, 9)
        cap = capacity_at(scenario.capacity, t)
        state, event = ctl.step(
            state, t, cap, scenario.catalog, scenario.ue, scenario.tdd, scenario.link, scenario.controller
        )
        dl, ul = traffic.dl_demand_bps, traffic.ul_demand_bps
        if traffic.jitter:
            lo, hi = 1 - traffic.jitter, 1 + traffic.jitter
            dl *= rng.uniform(lo, hi)
            ul *= rng.uniform(lo, hi)
        cell = scenario.catalog.get(state.current)
        result = throttle(cell, scenario.ue, scenario.tdd, dl, ul, cap, scenario.link)
        rows.append(
            TimeRow(
                t, cap[0], cap[1], state.current, dl, ul,
                result.dl_access, result.ul_access, result.fh_dl, result.fh_ul, result.feasible, event,
            )
        )
    return TimeSeries(rows, result)


@dataclass(frozen=True)
class SweepRow:
    capacity: float
    config: str
    achieved_dl: float
    achieved_ul: float
    fh_dl: float
    fh_ul: float


@dataclass(frozen=True)
class CurveRow:
    offered: float
    config: str
    access: float
    fh_dl: float
    fh_ul: float


def _throttle_job(args) -> ThrottleResult:
    cell, ue, tdd, dl, ul, cap, link = args
    return replace(throttle(cell, ue, tdd, dl, ul, cap, link), allocation=None)


def _map(jobs: int, tasks: list) -> list[ThrottleResult]:
    # Executor.map yields in submission order, so output never depends on completion order.
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_throttle_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_throttle_job(t) for t in tasks]


def sweep_points(cap_min: float, cap_max: float, step: float) -> list[float]:
    """Half-open grid ``cap_min, cap_min + step, ...`` strictly below ``cap_max``."""
    if step <= 0:
        raise SimError("sweep step must be > 0")
    if cap_max <= cap_min:
        return []
    n = math.ceil((cap_max - cap_min) / step - 1e-9)
    return [cap_min + k * step for k in range(n)]


def sweep_capacity(scenario: Scenario, cap_min: float, cap_max: float, step: float, jobs: int = 1) -> list[SweepRow]:
    """Achieved access and fronthaul load per (symmetric capacity, config), capacity-major."""
    caps = sweep_points(cap_min, cap_max, step)
    tr = scenario.traffic
    tasks = [
        (cell, scenario.ue, scenario.tdd, tr.dl_demand_bps, tr.ul_demand_bps, (cap, cap), scenario.link)
        for cap in caps
        for cell in scenario.catalog
    ]
    results = _map(jobs, tasks)
    return [
        SweepRow(task[5][0], task[0].name, r.dl_access, r.ul_access, r.fh_dl, r.fh_ul)
        for task, r in zip(tasks, results)
    ]


def curve_access_vs_fh(
    scenario: Scenario, direction: Direction, demand_max: float, n_points: int, jobs: int = 1
) -> list[CurveRow]:
    """Fronthaul load against offered access traffic with an unconstrained link.

    Loads exclude the constant control overhead.  Traffic in the other
    direction is only the acknowledgment stream of the swept direction.
    """
    direction = Direction(direction)
    if n_points < 2:
        raise SimError("n_points must be >= 2")
    link = replace(scenario.link, control_overhead_bps=0)
    offered = [demand_max * i / (n_points - 1) for i in range(n_points)]
    tasks = []
    for x in offered:
        dl, ul = (x, 0.0) if direction is Direction.DL else (x * link.ack_ratio, x)
        for cell in scenario.catalog:
            tasks.append((cell, scenario.ue, scenario.tdd, dl, ul, (INF, INF), link))
    results = _map(jobs, tasks)
    rows = []
    for i, (task, r) in enumerate(zip(tasks, results)):
        access = r.dl_access if direction is Direction.DL else r.ul_access
        rows.append(CurveRow(offered[i // len(scenario.catalog)], task[0].name, access, r.fh_dl, r.fh_ul))
    return rows


def last_grid_for(scenario: Scenario, cell: CellConfig, dl: float, ul: float):
    """Scheduled grid of one unconstrained evaluation, for debugging dumps."""
    link = replace(scenario.link, control_overhead_bps=0)
    return throttle(cell, scenario.ue, scenario.tdd, dl, ul, (INF, INF), link).allocation.grid
