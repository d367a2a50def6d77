"""Cell reconfiguration: pick the richest catalog entry the fronthaul can carry."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .fronthaul import LinkParams
from .phy_model import CellConfig, Direction, TddPattern, UeProfile, access_capacity_exact, required_fh_exact


class ControllerError(ValueError):
    pass


class Objective(str, enum.Enum):
    DL = "dl"
    UL = "ul"
    SUM = "sum"


@dataclass(frozen=True)
class ConfigCatalog:
    configs: tuple[CellConfig, ...]

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        if not self.configs:
            raise ControllerError("catalog must not be empty")
        names = [c.name for c in self.configs]
        if len(set(names)) != len(names):
            raise ControllerError(f"duplicate config names in catalog: {names}")

    def __iter__(self):
        return iter(self.configs)

    def __len__(self):
        return len(self.configs)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.configs]

    def get(self, name: str) -> CellConfig:
        for c in self.configs:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True)
class ControllerParams:
    hysteresis_margin: float = 0.1
    min_dwell_s: float = 2.0
    objective: Objective = Objective.DL

    def __post_init__(self):
        if self.hysteresis_margin < 0 or self.min_dwell_s < 0:
            raise ControllerError("hysteresis and dwell must be >= 0")
        object.__setattr__(self, "objective", Objective(self.objective))


@dataclass(frozen=True)
class ControllerState:
    current: str
    last_switch_t: float = 0.0


@dataclass(frozen=True)
class ReconfigEvent:
    t: float
    from_config: str
    to_config: str
    kind: str  # "upgrade" or "downgrade"


@dataclass(frozen=True)
class Selection:
    name: str
    feasible: bool


def objective_value(cell: CellConfig, ue: UeProfile, tdd: TddPattern, objective=Objective.DL) -> Fraction:
    objective = Objective(objective)
    dl = access_capacity_exact(cell, ue, Direction.DL, tdd)
    ul = access_capacity_exact(cell, ue, Direction.UL, tdd)
    return {Objective.DL: dl, Objective.UL: ul, Objective.SUM: dl + ul}[objective]


def is_feasible(cell, ue, tdd, capacity, link: LinkParams, margin=0) -> bool:
    req = required_fh_exact(cell, ue, tdd, Fraction(link.control_overhead_bps))
    scale = 1 + Fraction(str(margin))
    return all(math.isinf(c) or scale * r <= Fraction(c) for r, c in zip(req, capacity))


def select_config(
    catalog: ConfigCatalog,
    capacity: tuple[float, float],
    ue: UeProfile,
    tdd: TddPattern,
    link: LinkParams = LinkParams(),
    objective=Objective.DL,
) -> Selection:
    """Best feasible configuration; if none fits, the least demanding one flagged infeasible.

    Ties on the objective prefer fewer gNB ports, then lower bandwidth.
    """
    feasible = [c for c in catalog if is_feasible(c, ue, tdd, capacity, link)]
    if feasible:
        best = min(
            feasible,
            key=lambda c: (-objective_value(c, ue, tdd, objective), c.gnb_ports, c.bandwidth_mhz),
        )
        return Selection(best.name, True)
    ctrl = Fraction(link.control_overhead_bps)
    cheapest = min(catalog, key=lambda c: max(required_fh_exact(c, ue, tdd, ctrl)))
    return Selection(cheapest.name, False)


def step(
    state: ControllerState,
    t: float,
    capacity: tuple[float, float],
    catalog: ConfigCatalog,
    ue: UeProfile,
    tdd: TddPattern,
    link: LinkParams = LinkParams(),
    params: ControllerParams = ControllerParams(),
) -> tuple[ControllerState, Optional[ReconfigEvent]]:
    """Advance the controller one tick.

    Downgrades (current config no longer fits) fire immediately.  Upgrades need
    ``hysteresis_margin`` headroom over the new config's requirement and at
    least ``min_dwell_s`` since the previous switch.
    """
    if t < state.last_switch_t:
        raise ControllerError(f"time went backwards: {t} < {state.last_switch_t}")
    chosen = select_config(catalog, capacity, ue, tdd, link, params.objective)
    if chosen.name == state.current:
        return state, None
    current = catalog.get(state.current)
    if not is_feasible(current, ue, tdd, capacity, link):
        new = ControllerState(chosen.name, t)
        return new, ReconfigEvent(t, state.current, chosen.name, "downgrade")
    target = catalog.get(chosen.name)
    if not is_feasible(target, ue, tdd, capacity, link, params.hysteresis_margin):
        return state, None
    if t - state.last_switch_t < params.min_dwell_s:
        return state, None
    return replace(state, current=chosen.name, last_switch_t=t), ReconfigEvent(t, state.current, chosen.name, "upgrade")
