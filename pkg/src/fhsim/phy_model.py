"""Numerology, RB tables and closed-form rate equations for split I_D / I_U.

All rate functions compute in exact rational arithmetic and return ``float``
bits per second, so power-of-two rescalings (halved bandwidth, ports traded
for RBs) survive bit-exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

N_SC_PER_RB = 12
SYMBOLS_PER_SLOT = 14
VALID_QM = (2, 4, 6, 8)

# TS 38.104 FR2 transmission bandwidth configuration, 120 kHz SCS only.
FR2_RB_TABLE = {
    (50, 120): 32,
    (100, 120): 66,
    (200, 120): 132,
    (400, 120): 264,
}


class PhyError(ValueError):
    pass


class UnknownBandwidth(PhyError):
    pass


class RbOverflow(PhyError):
    pass


class UnsupportedSplit(PhyError):
    pass


class Direction(str, enum.Enum):
    DL = "DL"
    UL = "UL"


class PayloadKind(str, enum.Enum):
    DATA_BITS = "data_bits"
    IQ_SAMPLES = "iq_samples"


class SplitOption(str, enum.Enum):
    """eCPRI split points; only I_D and I_U carry a rate model."""

    I_D = "I_D"
    II_D = "II_D"
    D = "D"
    I_U = "I_U"
    E = "E"

    @property
    def direction(self) -> Direction:
        return Direction.DL if self in (SplitOption.I_D, SplitOption.II_D, SplitOption.D) else Direction.UL

    @property
    def payload_kind(self) -> PayloadKind:
        if self in (SplitOption.I_D,):
            return PayloadKind.DATA_BITS
        return PayloadKind.IQ_SAMPLES

    @property
    def implemented(self) -> bool:
        return self in (SplitOption.I_D, SplitOption.I_U)


@dataclass(frozen=True)
class Numerology:
    scs_khz: int = 120
    symbols_per_slot: int = SYMBOLS_PER_SLOT
    n_sc_per_rb: int = N_SC_PER_RB

    def __post_init__(self):
        if self.scs_khz not in (15, 30, 60, 120):
            raise PhyError(f"unsupported subcarrier spacing {self.scs_khz} kHz")
        if self.n_sc_per_rb != N_SC_PER_RB or self.symbols_per_slot != SYMBOLS_PER_SLOT:
            raise PhyError("normal cyclic prefix numerology only (14 symbols, 12 subcarriers)")

    @property
    def mu(self) -> int:
        return (self.scs_khz // 15).bit_length() - 1

    @property
    def slots_per_subframe(self) -> int:
        return 2**self.mu

    @property
    def slot_duration(self) -> Fraction:
        return Fraction(1, 1000 * self.slots_per_subframe)

    def symbol_rate(self) -> int:
        return self.symbols_per_slot * self.slots_per_subframe * 1000


def symbol_rate(numerology: Numerology) -> int:
    """OFDM symbols per second, i.e. ``1 / T_S``."""
    return numerology.symbol_rate()


def rb_count(bandwidth_mhz: float, numerology: Numerology) -> int:
    key = (bandwidth_mhz, numerology.scs_khz)
    try:
        return FR2_RB_TABLE[key]
    except KeyError:
        raise UnknownBandwidth(
            f"no RB table entry for {bandwidth_mhz} MHz at {numerology.scs_khz} kHz"
        ) from None


@dataclass(frozen=True)
class CellConfig:
    name: str
    bandwidth_mhz: int
    gnb_ports: int
    numerology: Numerology = field(default_factory=Numerology)
    qm_dl: int = 6
    qm_ul: int = 6
    n_iq: int = 18
    code_rate: Fraction = Fraction(77, 100)
    overhead: Fraction = Fraction(14, 100)
    dl_split: SplitOption = SplitOption.I_D
    ul_split: SplitOption = SplitOption.I_U
    rb_count_override: Optional[int] = None

    def __post_init__(self):
        # Fractions keep the rate products exact; accept floats/strings for convenience.
        object.__setattr__(self, "code_rate", Fraction(str(self.code_rate)))
        object.__setattr__(self, "overhead", Fraction(str(self.overhead)))
        if self.gnb_ports < 1:
            raise PhyError(f"{self.name}: gnb_ports must be >= 1")
        for label, qm in (("qm_dl", self.qm_dl), ("qm_ul", self.qm_ul)):
            if qm not in VALID_QM:
                raise PhyError(f"{self.name}: {label}={qm} not in {VALID_QM}")
        if self.n_iq < self.qm_ul:
            raise PhyError(f"{self.name}: n_iq must be >= qm_ul")
        if not 0 < self.code_rate <= 1:
            raise PhyError(f"{self.name}: code_rate must be in (0, 1]")
        if not 0 <= self.overhead <= 1:
            raise PhyError(f"{self.name}: overhead must be in [0, 1]")
        if self.dl_split.direction is not Direction.DL or self.ul_split.direction is not Direction.UL:
            raise PhyError(f"{self.name}: split direction mismatch")
        if self.rb_count_override is not None:
            if self.rb_count_override < 0:
                raise PhyError(f"{self.name}: rb_count_override must be >= 0")
        else:
            rb_count(self.bandwidth_mhz, self.numerology)

    @property
    def n_rb(self) -> int:
        if self.rb_count_override is not None:
            return self.rb_count_override
        return rb_count(self.bandwidth_mhz, self.numerology)


@dataclass(frozen=True)
class UeProfile:
    max_layers_dl: int = 2
    max_layers_ul: int = 2
    max_qm_dl: int = 6
    max_qm_ul: int = 6

    def __post_init__(self):
        if min(self.max_layers_dl, self.max_layers_ul) < 1:
            raise PhyError("UE layer counts must be >= 1")
        if self.max_qm_dl not in VALID_QM or self.max_qm_ul not in VALID_QM:
            raise PhyError(f"UE modulation must be one of {VALID_QM}")

    def max_layers(self, direction: Direction) -> int:
        return self.max_layers_dl if direction is Direction.DL else self.max_layers_ul

    def max_qm(self, direction: Direction) -> int:
        return self.max_qm_dl if direction is Direction.DL else self.max_qm_ul


@dataclass(frozen=True)
class TddPattern:
    slot_sequence: str = "DDDSU"
    s_slot_split: tuple[int, int, int] = (10, 2, 2)
    s_slot_carries_data: bool = False

    def __post_init__(self):
        seq = self.slot_sequence.upper()
        object.__setattr__(self, "slot_sequence", seq)
        object.__setattr__(self, "s_slot_split", tuple(int(x) for x in self.s_slot_split))
        if not seq or set(seq) - set("DSU"):
            raise PhyError(f"bad TDD pattern {self.slot_sequence!r}")
        if len(self.s_slot_split) != 3 or min(self.s_slot_split) < 0 or sum(self.s_slot_split) != SYMBOLS_PER_SLOT:
            raise PhyError(f"special slot split must be 3 non-negative counts summing to 14, got {self.s_slot_split}")

    @property
    def period(self) -> int:
        return len(self.slot_sequence)

    def symbol_directions(self, slot_type: str) -> list[Optional[Direction]]:
        """Per-symbol data direction of one slot; ``None`` marks gap or non-data symbols."""
        if slot_type == "D":
            return [Direction.DL] * SYMBOLS_PER_SLOT
        if slot_type == "U":
            return [Direction.UL] * SYMBOLS_PER_SLOT
        n_dl, n_gap, n_ul = self.s_slot_split
        if not self.s_slot_carries_data:
            return [None] * SYMBOLS_PER_SLOT
        return [Direction.DL] * n_dl + [None] * n_gap + [Direction.UL] * n_ul


def duty(tdd: TddPattern, direction: Direction) -> Fraction:
    """Fraction of symbol time in the TDD period usable for data in ``direction``."""
    direction = Direction(direction)
    full = "D" if direction is Direction.DL else "U"
    n_dl, _, n_ul = tdd.s_slot_split
    s_symbols = (n_dl if direction is Direction.DL else n_ul) if tdd.s_slot_carries_data else 0
    usable = tdd.slot_sequence.count(full) * SYMBOLS_PER_SLOT + tdd.slot_sequence.count("S") * s_symbols
    return Fraction(usable, tdd.period * SYMBOLS_PER_SLOT)


def gap_fraction(tdd: TddPattern) -> Fraction:
    return 1 - duty(tdd, Direction.DL) - duty(tdd, Direction.UL)


def effective_layers(cell: CellConfig, ue: UeProfile, direction: Direction) -> int:
    return min(cell.gnb_ports, ue.max_layers(Direction(direction)))


def effective_qm(cell: CellConfig, ue: UeProfile, direction: Direction) -> int:
    direction = Direction(direction)
    cell_qm = cell.qm_dl if direction is Direction.DL else cell.qm_ul
    return min(cell_qm, ue.max_qm(direction))


def _check_split(split: SplitOption) -> None:
    if not split.implemented:
        raise UnsupportedSplit(f"split {split.value} is enumerated but has no rate model")


def fh_rate_dl_exact(cell: CellConfig, layers: int, rb_used: int, duty_dl) -> Fraction:
    _check_split(cell.dl_split)
    if rb_used < 0 or rb_used > cell.n_rb:
        raise RbOverflow(f"{cell.name}: rb_used={rb_used} outside [0, {cell.n_rb}]")
    if layers < 0 or layers > cell.gnb_ports:
        raise RbOverflow(f"{cell.name}: layers={layers} exceeds {cell.gnb_ports} ports")
    return (
        rb_used * N_SC_PER_RB * layers * cell.qm_dl * symbol_rate(cell.numerology) * Fraction(duty_dl)
    )


def fh_rate_dl(cell: CellConfig, layers: int, rb_used: int, duty_dl) -> float:
    """Downlink fronthaul rate at split I_D: coded data bits of the scheduled REs."""
    return float(fh_rate_dl_exact(cell, layers, rb_used, duty_dl))


def fh_rate_ul_exact(cell: CellConfig, occupied_symbol_fraction, duty_ul) -> Fraction:
    _check_split(cell.ul_split)
    frac = Fraction(occupied_symbol_fraction)
    if not 0 <= frac <= 1:
        raise PhyError(f"occupied_symbol_fraction {occupied_symbol_fraction} outside [0, 1]")
    # Transported symbols span the whole carrier and every gNB port.
    return cell.n_rb * N_SC_PER_RB * cell.gnb_ports * cell.n_iq * symbol_rate(cell.numerology) * Fraction(duty_ul) * frac


def fh_rate_ul(cell: CellConfig, occupied_symbol_fraction, duty_ul) -> float:
    """Uplink fronthaul rate at split I_U for the given share of transported symbols."""
    return float(fh_rate_ul_exact(cell, occupied_symbol_fraction, duty_ul))


def access_capacity_exact(cell: CellConfig, ue: UeProfile, direction: Direction, tdd: TddPattern) -> Fraction:
    direction = Direction(direction)
    return (
        cell.n_rb
        * N_SC_PER_RB
        * effective_layers(cell, ue, direction)
        * effective_qm(cell, ue, direction)
        * cell.code_rate
        * duty(tdd, direction)
        * (1 - cell.overhead)
        * symbol_rate(cell.numerology)
    )


def access_capacity(cell: CellConfig, ue: UeProfile, direction: Direction, tdd: TddPattern) -> float:
    return float(access_capacity_exact(cell, ue, direction, tdd))


def required_fh_exact(cell: CellConfig, ue: UeProfile, tdd: TddPattern, control_overhead_bps=0) -> tuple[Fraction, Fraction]:
    # DL data bits exist only on layers the UE can take; UL IQ spans every port.
    ctrl = Fraction(control_overhead_bps)
    if ctrl < 0:
        raise PhyError("control overhead must be >= 0")
    layers = effective_layers(cell, ue, Direction.DL)
    dl = fh_rate_dl_exact(cell, layers, cell.n_rb, duty(tdd, Direction.DL))
    ul = fh_rate_ul_exact(cell, 1, duty(tdd, Direction.UL))
    return dl + ctrl, ul + ctrl


def required_fh(cell: CellConfig, ue: UeProfile, tdd: TddPattern, control_overhead_bps=0) -> tuple[float, float]:
    """Fronthaul rate per direction (DL, UL) the link must sustain for the configuration."""
    dl, ul = required_fh_exact(cell, ue, tdd, control_overhead_bps)
    return float(dl), float(ul)
