"""Self-checks run by ``fhsim validate`` against a loaded scenario."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import controller as ctl
from .fronthaul import ThrottlePolicy, threshold_capacity_exact
from .frame_grid import build_grid, schedule_demand, fh_load_from_grid_exact, ul_transport_symbols
from .phy_model import (
    CellConfig,
    Direction,
    TddPattern,
    access_capacity_exact,
    duty,
    effective_layers,
    fh_rate_dl_exact,
    fh_rate_ul_exact,
    gap_fraction,
    required_fh_exact,
)
from .sim_engine import Scenario, Traffic, curve_access_vs_fh, run, sweep_capacity

MBPS = 1e6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


def ul_symbols_by_enumeration(grid) -> int:
    """Count transported UL symbols by walking every resource element."""
    occ = grid.occupancy.tolist()
    sig = grid.signaling_mask.tolist()
    dirs = grid.symbol_dir.tolist()
    n_slots, n_sym, n_rb, n_layer = grid.occupancy.shape
    marked = set()
    for slot, sym, rb, layer, _subcarrier in itertools.product(
        range(n_slots), range(n_sym), range(n_rb), range(n_layer), range(12)
    ):
        if dirs[slot][sym] == 2 and (occ[slot][sym][rb][layer] or sig[slot][sym][rb][layer]):
            marked.add((slot, sym))
    return len(marked)


def random_grid(rng: np.random.Generator, cell, tdd, horizon_slots: int, density: float):
    """Grid with random legal occupancy, bypassing the scheduler."""
    grid = build_grid(cell, tdd, horizon_slots, int(rng.integers(0, 3)), int(rng.integers(0, cell.n_rb + 1)))
    occ = rng.random(grid.occupancy.shape) < density
    legal = (grid.symbol_dir > 0)[:, :, None, None]
    return replace(grid, occupancy=occ & legal & ~grid.signaling_mask)


def _pairs(scenario: Scenario):
    return list(itertools.permutations(scenario.catalog, 2))


def check_eq2_invariance(s: Scenario) -> CheckResult:
    pairs = [
        (a, b) for a, b in _pairs(s)
        if a.n_rb == 2 * b.n_rb and 2 * a.gnb_ports == b.gnb_ports and a.n_iq == b.n_iq
    ]
    du = duty(s.tdd, Direction.UL)
    bad = [(a.name, b.name) for a, b in pairs if fh_rate_ul_exact(a, 1, du) != fh_rate_ul_exact(b, 1, du)]
    return CheckResult("eq2_trade_invariance", not bad, f"{len(pairs)} pair(s) checked" + (f", mismatch {bad}" if bad else ""))


def check_factor_two(s: Scenario) -> CheckResult:
    pairs = [(a, b) for a, b in _pairs(s) if a.n_rb == 2 * b.n_rb and a.gnb_ports == b.gnb_ports]
    dd = duty(s.tdd, Direction.DL)
    bad = []
    for a, b in pairs:
        la, lb = effective_layers(a, s.ue, Direction.DL), effective_layers(b, s.ue, Direction.DL)
        if fh_rate_dl_exact(a, la, a.n_rb, dd) != 2 * fh_rate_dl_exact(b, lb, b.n_rb, dd):
            bad.append((a.name, b.name, "fh"))
        if access_capacity_exact(a, s.ue, Direction.DL, s.tdd) != 2 * access_capacity_exact(b, s.ue, Direction.DL, s.tdd):
            bad.append((a.name, b.name, "access"))
    return CheckResult("factor_two_scaling", not bad, f"{len(pairs)} pair(s) checked" + (f", mismatch {bad}" if bad else ""))


def check_duty_partition(s: Scenario) -> CheckResult:
    total = duty(s.tdd, Direction.DL) + duty(s.tdd, Direction.UL) + gap_fraction(s.tdd)
    return CheckResult("tdd_duty_partition", total == 1 and gap_fraction(s.tdd) >= 0, f"sum={total}")


def check_binding_direction(s: Scenario) -> CheckResult:
    """Saturating DL traffic must be limited by the UL fronthaul, at its full requirement."""
    details, ok = [], True
    ctrl = s.link.control_overhead_bps
    for cell in s.catalog:
        dl, ul = required_fh_exact(cell, s.ue, s.tdd, ctrl)
        thr = threshold_capacity_exact(cell, s.ue, s.tdd, s.link)
        binds_ul = ul > dl and thr == ul
        ok &= binds_ul
        details.append(f"{cell.name}={'UL' if binds_ul else 'DL'}")
    return CheckResult("threshold_set_by_ul", ok, " ".join(details))


def check_grid_formula_dl(s: Scenario) -> CheckResult:
    bad = []
    link = s.link
    for cell in s.catalog:
        grid = build_grid(cell, s.tdd, link.horizon_slots, link.ul_signaling_symbols, link.ul_signaling_rbs)
        cap = access_capacity_exact(cell, s.ue, Direction.DL, s.tdd)
        alloc = schedule_demand(grid, cap, 0, s.ue, link.scheduling)
        fh_dl, _ = fh_load_from_grid_exact(alloc)
        layers = effective_layers(cell, s.ue, Direction.DL)
        expected = fh_rate_dl_exact(cell, layers, cell.n_rb, duty(s.tdd, Direction.DL))
        if fh_dl != expected:
            bad.append(cell.name)
    return CheckResult("grid_matches_dl_formula", not bad, ",".join(bad))


def check_sweep_on_off(s: Scenario) -> CheckResult:
    link = replace(s.link, throttle=ThrottlePolicy.ALL_OR_NOTHING)
    saturating = 2 * max(float(access_capacity_exact(c, s.ue, Direction.DL, s.tdd)) for c in s.catalog)
    s = replace(s, link=link, traffic=Traffic(saturating, 0.0))
    thresholds = {c.name: threshold_capacity_exact(c, s.ue, s.tdd, link) for c in s.catalog}
    # Decade step giving at least ten points below the largest threshold.
    step_bps = 10.0 ** math.floor(math.log10(float(max(thresholds.values())) / 10))
    hi = float(max(thresholds.values())) + 5 * step_bps
    rows = sweep_capacity(s, step_bps, hi, step_bps)
    ok, details = True, []
    for cell in s.catalog:
        series = [(r.capacity, r.achieved_dl) for r in rows if r.config == cell.name]
        jumps = [series[i][0] for i in range(1, len(series)) if series[i][1] != series[i - 1][1]]
        thr = float(thresholds[cell.name])
        good = len(jumps) == 1 and abs(jumps[0] - thr) <= step_bps
        ok &= good
        details.append(f"{cell.name}:jumps={len(jumps)}@{jumps[0] / MBPS if jumps else 'none'}")
    return CheckResult("sweep_single_jump_at_threshold", ok, " ".join(details))


def check_ul_transport_oracle(s: Scenario, n: int = 200, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n):
        cell = CellConfig("rand", 50, int(rng.integers(1, 4)), rb_count_override=int(rng.integers(1, 5)))
        pattern = "".join(rng.choice(list("DSU"), size=int(rng.integers(1, 4))))
        n_dl = int(rng.integers(0, 13))
        n_ul = int(rng.integers(0, 14 - n_dl))
        tdd = TddPattern(pattern, (n_dl, 14 - n_dl - n_ul, n_ul), bool(rng.integers(0, 2)))
        grid = random_grid(rng, cell, tdd, tdd.period * int(rng.integers(1, 3)), float(rng.uniform(0, 0.2)))
        mismatches += ul_transport_symbols(grid) != ul_symbols_by_enumeration(grid)
    return CheckResult("ul_transport_symbols_oracle", mismatches == 0, f"{n} grids, {mismatches} mismatches")


def check_ul_curve(s: Scenario) -> CheckResult:
    rows = curve_access_vs_fh(s, Direction.DL, 900 * MBPS, 10)
    ok, notes = True, []
    for cell in s.catalog:
        ul = [r.fh_ul for r in rows if r.config == cell.name]
        good = ul[0] > 0 and all(b >= a for a, b in zip(ul, ul[1:]))
        ok &= good
        if not good:
            notes.append(f"{cell.name} not positive/non-decreasing")
    by_offer = {}
    for r in rows:
        by_offer.setdefault(r.offered, {})[r.config] = r
    pairs = [
        (a, b) for a, b in _pairs(s)
        if a.n_rb * a.gnb_ports == b.n_rb * b.gnb_ports and a.n_iq == b.n_iq
    ]
    for a, b in pairs:
        if any(pt[a.name].fh_ul != pt[b.name].fh_ul for pt in by_offer.values()):
            ok = False
            notes.append(f"{a.name}!={b.name}")
    doubled = [
        (a, b) for a, b in _pairs(s)
        if a.n_rb == b.n_rb and a.gnb_ports == 2 * b.gnb_ports and a.n_iq == b.n_iq
    ]
    for a, b in doubled:
        if any(pt[a.name].fh_ul != 2 * pt[b.name].fh_ul for pt in by_offer.values()):
            ok = False
            notes.append(f"{a.name}!=2*{b.name}")
    return CheckResult("ul_curve_shape", ok, "; ".join(notes) or f"{len(by_offer)} points")


def check_controller_optimality(s: Scenario, n: int = 100, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    ctrl = s.link.control_overhead_bps
    worst = max(max(required_fh_exact(c, s.ue, s.tdd, ctrl)) for c in s.catalog)
    bad = 0
    for _ in range(n):
        cap = float(rng.uniform(0, 1.3 * float(worst)))
        sel = ctl.select_config(s.catalog, (cap, cap), s.ue, s.tdd, s.link, s.controller.objective)
        feasible = [c for c in s.catalog if all(r <= cap for r in required_fh_exact(c, s.ue, s.tdd, ctrl))]
        if feasible:
            best = max(ctl.objective_value(c, s.ue, s.tdd, s.controller.objective) for c in feasible)
            got = ctl.objective_value(s.catalog.get(sel.name), s.ue, s.tdd, s.controller.objective)
            bad += not (sel.feasible and got == best)
        else:
            bad += sel.feasible
    return CheckResult("controller_matches_enumeration", bad == 0, f"{n} capacities, {bad} mismatches")


def check_feasibility_over_run(s: Scenario) -> CheckResult:
    series = run(s)
    ctrl = s.link.control_overhead_bps
    bad = 0
    for row in series.rows:
        feasible_exists = any(
            all(r <= c for r, c in zip(required_fh_exact(cell, s.ue, s.tdd, ctrl), (row.capacity_dl, row.capacity_ul)))
            for cell in s.catalog
        )
        if feasible_exists:
            req = required_fh_exact(s.catalog.get(row.config), s.ue, s.tdd, ctrl)
            bad += not (req[0] <= row.capacity_dl and req[1] <= row.capacity_ul)
    return CheckResult("controller_feasibility", bad == 0, f"{len(series.rows)} steps, {len(series.events)} events")


def check_determinism(s: Scenario) -> CheckResult:
    from .cli import write_timeseries

    outs = []
    for _ in range(2):
        buf = io.StringIO()
        write_timeseries(run(s), buf)
        outs.append(buf.getvalue())
    return CheckResult("simulate_deterministic", outs[0] == outs[1], f"{len(outs[0])} bytes")


CHECKS: list[Callable[[Scenario], CheckResult]] = [
    check_duty_partition,
    check_eq2_invariance,
    check_factor_two,
    check_binding_direction,
    check_grid_formula_dl,
    check_sweep_on_off,
    check_ul_transport_oracle,
    check_ul_curve,
    check_controller_optimality,
    check_feasibility_over_run,
    check_determinism,
]


def run_checks(scenario: Scenario) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            results.append(check(scenario))
        except Exception as exc:  # a crashing check is a failing check
            results.append(CheckResult(check.__name__.removeprefix("check_"), False, f"error: {exc}"))
    return results
