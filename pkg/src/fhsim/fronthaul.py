"""Fronthaul capacity profiles and the access/fronthaul feasibility coupling."""

from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .frame_grid import (
    Allocation,
    SchedulingPolicy,
    ack_traffic,
    build_grid,
    fh_load_from_grid_exact,
    schedule_demand,
)
from .phy_model import CellConfig, Direction, TddPattern, UeProfile, access_capacity_exact

MBPS = 1_000_000
TRACE_HEADER = ["time_s", "capacity_dl_mbps", "capacity_ul_mbps"]


class FronthaulError(ValueError):
    pass


class ThrottlePolicy(str, enum.Enum):
    ALL_OR_NOTHING = "all_or_nothing"
    PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class LinkParams:
    """Knobs shared by every fronthaul evaluation of a scenario."""

    control_overhead_bps: float = 300 * MBPS
    ack_ratio: float = 0.02
    scheduling: SchedulingPolicy = SchedulingPolicy.SPREAD
    throttle: ThrottlePolicy = ThrottlePolicy.ALL_OR_NOTHING
    horizon_slots: int = 20
    ul_signaling_symbols: int = 2
    ul_signaling_rbs: int = 4

    def __post_init__(self):
        if self.control_overhead_bps < 0:
            raise FronthaulError("control overhead must be >= 0")
        if not 0 <= self.ack_ratio <= 0.2:
            raise FronthaulError("ack_ratio must be in [0, 0.2]")
        object.__setattr__(self, "scheduling", SchedulingPolicy(self.scheduling))
        object.__setattr__(self, "throttle", ThrottlePolicy(self.throttle))


@dataclass(frozen=True)
class CapacityProfile:
    """Right-continuous step function of (start_s, capacity_dl_bps, capacity_ul_bps)."""

    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        segs = tuple((float(t), float(dl), float(ul)) for t, dl, ul in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs or segs[0][0] != 0:
            raise FronthaulError("capacity profile must start at t = 0")
        starts = [s[0] for s in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise FronthaulError("capacity profile start times must be strictly increasing")
        if any(min(dl, ul) < 0 or math.isnan(dl) or math.isnan(ul) for _, dl, ul in segs):
            raise FronthaulError("capacities must be >= 0")

    @classmethod
    def constant(cls, capacity_bps: float, capacity_ul_bps: Optional[float] = None) -> CapacityProfile:
        ul = capacity_bps if capacity_ul_bps is None else capacity_ul_bps
        return cls(((0.0, capacity_bps, ul),))

    @classmethod
    def steps(cls, points: Iterable[tuple[float, float]]) -> CapacityProfile:
        """Symmetric profile from (start_s, capacity_bps) pairs."""
        return cls(tuple((t, c, c) for t, c in points))

    @property
    def symmetric(self) -> bool:
        return all(dl == ul for _, dl, ul in self.segments)


def capacity_at(profile: CapacityProfile, t: float) -> tuple[float, float]:
    if t < 0:
        raise FronthaulError(f"time {t} < 0")
    starts = [s[0] for s in profile.segments]
    _, dl, ul = profile.segments[bisect.bisect_right(starts, t) - 1]
    return dl, ul


def read_trace(path) -> CapacityProfile:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_HEADER:
            raise FronthaulError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                t, dl, ul = (float(x) for x in row)
            except ValueError:
                raise FronthaulError(f"{path}:{lineno}: expected three numbers") from None
            rows.append((t, dl * MBPS, ul * MBPS))
    return CapacityProfile(tuple(rows))


def write_trace(profile: CapacityProfile, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for t, dl, ul in profile.segments:
            writer.writerow([repr(t), repr(dl / MBPS), repr(ul / MBPS)])


@dataclass(frozen=True)
class ThrottleResult:
    dl_access: float
    ul_access: float
    fh_dl: float
    fh_ul: float
    feasible: bool
    allocation: Optional[Allocation] = None


def load_at(cell: CellConfig, ue: UeProfile, tdd: TddPattern, dl_access, ul_access, params: LinkParams):
    """Schedule the given access rates (UL plus DL acknowledgments) and return the grid load.

    Returns ``(allocation, fh_dl, fh_ul)`` with fronthaul rates as exact
    fractions including the control overhead.
    """
    grid = build_grid(cell, tdd, params.horizon_slots, params.ul_signaling_symbols, params.ul_signaling_rbs)
    ul_sched = Fraction(ul_access) + Fraction(ack_traffic(Fraction(dl_access), Fraction(str(params.ack_ratio))))
    alloc = schedule_demand(grid, dl_access, ul_sched, ue, params.scheduling)
    fh_dl, fh_ul = fh_load_from_grid_exact(alloc, Fraction(params.control_overhead_bps))
    return alloc, fh_dl, fh_ul


def _fits(value: Fraction, capacity: float) -> bool:
    return math.isinf(capacity) or value <= Fraction(capacity)


def throttle(
    cell: CellConfig,
    ue: UeProfile,
    tdd: TddPattern,
    demand_dl_bps: float,
    demand_ul_bps: float,
    capacity: tuple[float, float],
    params: LinkParams = LinkParams(),
    policy: Optional[ThrottlePolicy] = None,
) -> ThrottleResult:
    """Access throughput the cell achieves behind a fronthaul of ``capacity`` (DL, UL) bps."""
    policy = ThrottlePolicy(policy or params.throttle)
    if min(demand_dl_bps, demand_ul_bps) < 0 or min(capacity) < 0:
        raise FronthaulError("demands and capacities must be >= 0")
    cap_dl, cap_ul = capacity
    want_dl = min(Fraction(demand_dl_bps), access_capacity_exact(cell, ue, Direction.DL, tdd))
    want_ul = min(Fraction(demand_ul_bps), access_capacity_exact(cell, ue, Direction.UL, tdd))

    def result(dl, ul, loaded=None):
        alloc, fh_dl, fh_ul = loaded or load_at(cell, ue, tdd, dl, ul, params)
        ok = _fits(fh_dl, cap_dl) and _fits(fh_ul, cap_ul)
        return ThrottleResult(float(dl), float(ul), float(fh_dl), float(fh_ul), ok, alloc)

    loaded = load_at(cell, ue, tdd, want_dl, want_ul, params)
    full = result(want_dl, want_ul, loaded)
    if full.feasible:
        return full

    if policy is ThrottlePolicy.ALL_OR_NOTHING:
        if not _fits(loaded[2], cap_ul):
            # DL acknowledgments ride the UL fronthaul, so a binding UL stalls both.
            return result(0, 0)
        return result(0, want_ul)

    def fits(alpha: Fraction) -> bool:
        _, fh_dl, fh_ul = load_at(cell, ue, tdd, alpha * want_dl, alpha * want_ul, params)
        return _fits(fh_dl, cap_dl) and _fits(fh_ul, cap_ul)

    lo, hi = Fraction(0), Fraction(1)
    resolution = Fraction(MBPS) / max(want_dl, want_ul, Fraction(1))
    for _ in range(40):
        if hi - lo <= resolution:
            break
        mid = (lo + hi) / 2
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return result(lo * want_dl, lo * want_ul)


def threshold_capacity_exact(
    cell: CellConfig,
    ue: UeProfile,
    tdd: TddPattern,
    params: LinkParams = LinkParams(),
    direction: Direction = Direction.DL,
) -> Fraction:
    direction = Direction(direction)
    sat = access_capacity_exact(cell, ue, direction, tdd)
    dl, ul = (sat, 0) if direction is Direction.DL else (0, sat)
    _, fh_dl, fh_ul = load_at(cell, ue, tdd, dl, ul, params)
    return max(fh_dl, fh_ul)


def threshold_capacity(
    cell: CellConfig,
    ue: UeProfile,
    tdd: TddPattern,
    params: LinkParams = LinkParams(),
    direction: Direction = Direction.DL,
) -> float:
    """Smallest symmetric capacity at which saturating traffic in ``direction`` gets through."""
    return float(threshold_capacity_exact(cell, ue, tdd, params, direction))
