"""OFDM occupancy grid over a scheduling horizon and the fronthaul load it implies.

The grid is a boolean array indexed ``(slot, symbol, rb, layer)`` with one
layer per gNB port.  User data and always-on UL signaling are kept in separate
masks so carried user bits never include signaling REs.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import TextIO

import numpy as np

from .phy_model import (
    N_SC_PER_RB,
    SYMBOLS_PER_SLOT,
    CellConfig,
    Direction,
    TddPattern,
    UeProfile,
    effective_layers,
    effective_qm,
)

_NONE, _DL, _UL = 0, 1, 2
_DIR_CODE = {Direction.DL: _DL, Direction.UL: _UL}


class GridError(ValueError):
    pass


class BadHorizon(GridError):
    pass


class OutOfRange(GridError):
    pass


class SchedulingPolicy(str, enum.Enum):
    FREQUENCY_FIRST = "frequency_first"
    TIME_FIRST = "time_first"
    SPREAD = "spread"


@dataclass(frozen=True, eq=False)
class FrameGrid:
    cell: CellConfig
    tdd: TddPattern
    horizon_slots: int
    slot_types: str
    symbol_dir: np.ndarray  # (slots, 14) int8: 0 none, 1 DL, 2 UL
    occupancy: np.ndarray  # (slots, 14, n_rb, ports) bool
    signaling_mask: np.ndarray  # same shape as occupancy
    ul_signaling_symbols: int = 0
    ul_signaling_rbs: int = 0

    @property
    def duration(self) -> Fraction:
        """Horizon length in seconds."""
        return self.horizon_slots * self.cell.numerology.slot_duration

    def legal(self, direction: Direction) -> np.ndarray:
        return self.symbol_dir == _DIR_CODE[Direction(direction)]

    def slot_count(self, slot_type: str) -> int:
        return self.slot_types.count(slot_type)


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


def build_grid(
    cell: CellConfig,
    tdd: TddPattern,
    horizon_slots: int,
    ul_signaling_symbols: int = 0,
    ul_signaling_rbs: int = 0,
) -> FrameGrid:
    """Empty grid with slot types assigned cyclically from the TDD pattern."""
    if horizon_slots <= 0 or horizon_slots % tdd.period:
        raise BadHorizon(f"horizon {horizon_slots} slots is not a positive multiple of the {tdd.period}-slot TDD period")
    slot_types = tdd.slot_sequence * (horizon_slots // tdd.period)
    code = {None: _NONE, Direction.DL: _DL, Direction.UL: _UL}
    per_type = {t: [code[d] for d in tdd.symbol_directions(t)] for t in "DSU"}
    symbol_dir = np.array([per_type[t] for t in slot_types], dtype=np.int8)
    shape = (horizon_slots, SYMBOLS_PER_SLOT, cell.n_rb, cell.gnb_ports)
    occupancy = np.zeros(shape, dtype=bool)
    grid = FrameGrid(cell, tdd, horizon_slots, slot_types, symbol_dir, occupancy, np.zeros(shape, dtype=bool))
    _freeze(symbol_dir, occupancy, grid.signaling_mask)
    return baseline_signaling(grid, ul_signaling_symbols, ul_signaling_rbs)


def baseline_signaling(grid: FrameGrid, ul_signaling_symbols_per_ul_slot: int, ul_signaling_rbs: int) -> FrameGrid:
    """Reserve the last symbols of every U slot over the lowest RBs on layer 0.

    These REs are transported on the UL fronthaul even when no user traffic is
    offered.  Replaces any mask already present on ``grid``.
    """
    n_sym, n_rb = ul_signaling_symbols_per_ul_slot, ul_signaling_rbs
    if not 0 <= n_sym <= SYMBOLS_PER_SLOT:
        raise OutOfRange(f"signaling symbols per UL slot {n_sym} outside [0, {SYMBOLS_PER_SLOT}]")
    if not 0 <= n_rb <= grid.cell.n_rb:
        raise OutOfRange(f"signaling RBs {n_rb} outside [0, {grid.cell.n_rb}]")
    mask = np.zeros_like(grid.signaling_mask)
    if n_sym and n_rb:
        u_slots = [i for i, t in enumerate(grid.slot_types) if t == "U"]
        mask[u_slots, SYMBOLS_PER_SLOT - n_sym :, :n_rb, 0] = True
    _freeze(mask)
    return replace(grid, signaling_mask=mask, ul_signaling_symbols=n_sym, ul_signaling_rbs=n_rb)


@lru_cache(maxsize=256)
def _fill_order(
    cell: CellConfig,
    tdd: TddPattern,
    horizon_slots: int,
    sig_symbols: int,
    sig_rbs: int,
    direction: Direction,
    layers: int,
    policy: SchedulingPolicy,
) -> np.ndarray:
    """Flat occupancy indices of the free data cells of one direction, in fill order."""
    grid = build_grid(cell, tdd, horizon_slots, sig_symbols, sig_rbs)
    avail = grid.legal(direction)[:, :, None, None] & ~grid.signaling_mask
    avail[..., layers:] = False
    slot, sym, rb, layer = np.nonzero(avail)
    if policy is SchedulingPolicy.FREQUENCY_FIRST:
        order = np.lexsort((rb, layer, sym, slot))
    elif policy is SchedulingPolicy.TIME_FIRST:
        order = np.lexsort((sym, rb, layer, slot))
    else:
        # Rank of each cell inside its symbol (frequency order), then visit every
        # symbol at that depth before going one cell deeper.
        freq = np.lexsort((rb, layer, sym, slot))
        pos = slot[freq] * SYMBOLS_PER_SLOT + sym[freq]
        starts = np.r_[0, np.flatnonzero(np.diff(pos)) + 1]
        counts = np.diff(np.r_[starts, pos.size])
        depth = np.arange(pos.size) - np.repeat(starts, counts)
        order = freq[np.lexsort((pos, depth))]
    flat = np.ravel_multi_index((slot[order], sym[order], rb[order], layer[order]), avail.shape)
    flat.setflags(write=False)
    return flat


@dataclass(frozen=True, eq=False)
class Allocation:
    grid: FrameGrid
    dl_bits_carried: Fraction
    ul_bits_carried: Fraction
    rb_symbol_usage: dict
    qm_dl: int
    qm_ul: int

    @property
    def dl_rate(self) -> float:
        return float(self.dl_bits_carried / self.grid.duration)

    @property
    def ul_rate(self) -> float:
        return float(self.ul_bits_carried / self.grid.duration)


def cell_quantum_bits(cell: CellConfig, qm: int) -> Fraction:
    """User bits carried by one (RB, symbol, layer) cell."""
    return N_SC_PER_RB * qm * cell.code_rate * (1 - cell.overhead)


def schedule_demand(
    grid: FrameGrid,
    dl_demand_bps,
    ul_demand_bps,
    ue: UeProfile,
    policy: SchedulingPolicy = SchedulingPolicy.SPREAD,
) -> Allocation:
    """Fill data cells in policy order until each direction's demand is carried.

    Saturation is a valid outcome: when the horizon runs out of cells the
    allocation simply carries less than demanded.
    """
    cell = grid.cell
    policy = SchedulingPolicy(policy)
    occupancy = np.zeros_like(grid.occupancy)
    flat_occ = occupancy.reshape(-1)
    carried, usage, qms = {}, {}, {}
    for direction, demand in ((Direction.DL, dl_demand_bps), (Direction.UL, ul_demand_bps)):
        demand = Fraction(demand)
        if demand < 0:
            raise GridError(f"{direction.value} demand must be >= 0")
        qm = effective_qm(cell, ue, direction)
        layers = effective_layers(cell, ue, direction)
        order = _fill_order(
            cell, grid.tdd, grid.horizon_slots, grid.ul_signaling_symbols, grid.ul_signaling_rbs,
            direction, layers, policy,
        )
        quantum = cell_quantum_bits(cell, qm)
        target = demand * grid.duration
        if target == 0:
            n = 0
        elif quantum == 0:
            n = order.size
        else:
            n = min(order.size, math.ceil(target / quantum))
        flat_occ[order[:n]] = True
        carried[direction] = n * quantum
        usage[direction] = n
        qms[direction] = qm
    _freeze(occupancy)
    return Allocation(
        grid=replace(grid, occupancy=occupancy),
        dl_bits_carried=carried[Direction.DL],
        ul_bits_carried=carried[Direction.UL],
        rb_symbol_usage=usage,
        qm_dl=qms[Direction.DL],
        qm_ul=qms[Direction.UL],
    )


def ul_transported(grid: FrameGrid) -> np.ndarray:
    """Boolean (slot, symbol) map of UL symbols that must cross the fronthaul."""
    used = (grid.occupancy | grid.signaling_mask).any(axis=(2, 3))
    return used & grid.legal(Direction.UL)


def ul_transport_symbols(grid: FrameGrid) -> int:
    # Any occupied RE forces the whole symbol onto the link.
    return int(ul_transported(grid).sum())


def occupied_cells(grid: FrameGrid, direction: Direction) -> int:
    return int((grid.occupancy & grid.legal(direction)[:, :, None, None]).sum())


def fh_load_from_grid_exact(alloc: Allocation, control_overhead_bps=0) -> tuple[Fraction, Fraction]:
    grid = alloc.grid
    cell = grid.cell
    dl_bits = occupied_cells(grid, Direction.DL) * N_SC_PER_RB * alloc.qm_dl
    ul_bits = ul_transport_symbols(grid) * cell.n_rb * N_SC_PER_RB * cell.gnb_ports * cell.n_iq
    ctrl = Fraction(control_overhead_bps)
    return dl_bits / grid.duration + ctrl, ul_bits / grid.duration + ctrl


def fh_load_from_grid(alloc: Allocation, control_overhead_bps=0) -> tuple[float, float]:
    """Fronthaul rate (DL, UL) in bps implied by a scheduled grid.

    DL carries the data bits of occupied cells; UL carries every transported
    symbol across the whole carrier and all gNB ports.
    """
    dl, ul = fh_load_from_grid_exact(alloc, control_overhead_bps)
    return float(dl), float(ul)


def ack_traffic(dl_access_bps, ack_ratio) -> float:
    if not 0 <= ack_ratio <= 0.2:
        raise GridError(f"ack_ratio {ack_ratio} outside [0, 0.2]")
    return dl_access_bps * ack_ratio


def dump_grid(grid: FrameGrid, stream: TextIO) -> None:
    """Write one CSV row per (slot, symbol) for debugging."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["slot", "symbol", "direction", "occupied_rbs", "transported"])
    used_rbs = (grid.occupancy | grid.signaling_mask).any(axis=3).sum(axis=2)
    ul_tx = ul_transported(grid)
    labels = {_NONE: "-", _DL: "DL", _UL: "UL"}
    for slot in range(grid.horizon_slots):
        for sym in range(SYMBOLS_PER_SLOT):
            d = int(grid.symbol_dir[slot, sym])
            transported = bool(ul_tx[slot, sym]) if d == _UL else bool(d == _DL and used_rbs[slot, sym])
            writer.writerow([slot, sym, labels[d], int(used_rbs[slot, sym]), int(transported)])
