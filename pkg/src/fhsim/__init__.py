"""Co-simulation of a split I_D / I_U radio site and its fronthaul link."""

from .controller import ConfigCatalog, ControllerParams, select_config
from .fronthaul import CapacityProfile, LinkParams, ThrottlePolicy, threshold_capacity, throttle
from .frame_grid import SchedulingPolicy, build_grid, schedule_demand, ul_transport_symbols
from .phy_model import (
    CellConfig,
    Direction,
    Numerology,
    SplitOption,
    TddPattern,
    UeProfile,
    access_capacity,
    fh_rate_dl,
    fh_rate_ul,
    required_fh,
)
from .scenario_file import load_scenario
from .sim_engine import Scenario, curve_access_vs_fh, run, sweep_capacity

__version__ = "0.1.0"
