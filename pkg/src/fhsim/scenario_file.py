"""Scenario files: INI-style sections with ``key = value`` lines.

Every key is optional except the cell definitions; omitted keys fall back to
the built-in defaults.  Unknown sections or keys are rejected, and errors name
the section, key and line they came from.
"""

from __future__ import annotations

import configparser
import re
from decimal import Decimal
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from .controller import ConfigCatalog, ControllerParams
from .fronthaul import MBPS, CapacityProfile, LinkParams, read_trace
from .phy_model import CellConfig, Numerology, SplitOption, TddPattern, UeProfile, rb_count
from .sim_engine import Scenario, Traffic


class ScenarioError(Exception):
    exit_code = 1


class ParseError(ScenarioError):
    exit_code = 2


class ValidationError(ScenarioError):
    exit_code = 1


CELL_KEYS = {
    "bandwidth_mhz", "scs_khz", "ports", "qm_dl", "qm_ul", "n_iq",
    "code_rate", "overhead", "rb_count_override", "dl_split", "ul_split",
}
SECTION_KEYS = {
    "ue": {"max_layers_dl", "max_layers_ul", "max_qm_dl", "max_qm_ul"},
    "tdd": {"pattern", "s_split", "s_carries_data"},
    "fronthaul": {"control_overhead_mbps", "policy", "trace_file", "capacity_mbps", "capacity_steps"},
    "traffic": {"dl_mbps", "ul_mbps", "ack_ratio", "jitter"},
    "grid": {"policy", "horizon_slots", "ul_signaling_symbols", "ul_signaling_rbs"},
    "controller": {"hysteresis", "dwell_s", "objective"},
    "sim": {"step_s", "duration_s", "seed"},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^\s=:#;\[][^=:]*?)\s*[=:]")


def bundled_scenario(name: str) -> Path:
    return Path(str(resources.files("fhsim") / "scenarios" / name))


def _line_index(text: str) -> dict:
    index, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = lineno
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = lineno
    return index


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _as_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _as_int(s: str) -> int:
    return int(s)


def _as_mbps(s: str) -> float:
    if s.strip().lower() in ("inf", "infinity"):
        return float("inf")
    # Exact decimal parse keeps a dump/load round trip bit-identical.
    return float(Fraction(s) * MBPS)


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines: dict, source: str):
        self.parser, self.lines, self.source = parser, lines, source

    def error(self, section: str, key: Optional[str], msg: str) -> ValidationError:
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        where = f"[{section}]" + (f" {key}" if key else "")
        at = f" (line {line})" if line else ""
        return ValidationError(f"{self.source}: {where}{at}: {msg}")

    def get(self, section: str, key: str, conv: Callable, default):
        if not self.parser.has_section(section) or not self.parser.has_option(section, key):
            return default
        raw = _unquote(self.parser.get(section, key))
        try:
            return conv(raw)
        except (ValueError, ArithmeticError, KeyError) as exc:
            raise self.error(section, key, f"bad value {raw!r}: {exc}") from None

    def check(self, section: str, key: Optional[str], fn: Callable):
        try:
            return fn()
        except (ValueError, KeyError) as exc:
            raise self.error(section, key, str(exc)) from None


def _parse_s_split(s: str) -> tuple[int, int, int]:
    parts = tuple(int(x) for x in s.split(","))
    if len(parts) != 3:
        raise ValueError("expected three comma-separated counts")
    return parts


def _parse_steps(s: str) -> CapacityProfile:
    segments = []
    for item in s.split(","):
        t, _, caps = item.partition(":")
        dl, _, ul = caps.partition("/")
        dl_bps = _as_mbps(dl.strip())
        segments.append((float(t), dl_bps, _as_mbps(ul.strip()) if ul else dl_bps))
    return CapacityProfile(tuple(segments))


def parse_scenario(text: str, source: str = "<string>", base_dir: Optional[Path] = None) -> Scenario:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True, empty_lines_in_values=False
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from None
    lines = _line_index(text)
    r = _Reader(parser, lines, source)

    cells = []
    for section in parser.sections():
        if section.startswith("cell."):
            allowed = CELL_KEYS
        elif section in SECTION_KEYS:
            allowed = SECTION_KEYS[section]
        else:
            raise r.error(section, None, "unknown section")
        for key in parser.options(section):
            if key not in allowed:
                raise r.error(section, key, "unknown key")
        if section.startswith("cell."):
            cells.append(section)
    if not cells:
        raise ValidationError(f"{source}: no [cell.<name>] sections")

    configs = []
    for section in cells:
        name = section[len("cell."):].strip()
        if not parser.has_option(section, "bandwidth_mhz") or not parser.has_option(section, "ports"):
            raise r.error(section, None, "bandwidth_mhz and ports are required")
        kwargs = dict(
            name=name,
            bandwidth_mhz=r.get(section, "bandwidth_mhz", _as_int, None),
            gnb_ports=r.get(section, "ports", _as_int, None),
            numerology=r.check(section, "scs_khz", lambda: Numerology(r.get(section, "scs_khz", _as_int, 120))),
            qm_dl=r.get(section, "qm_dl", _as_int, 6),
            qm_ul=r.get(section, "qm_ul", _as_int, 6),
            n_iq=r.get(section, "n_iq", _as_int, 18),
            code_rate=r.get(section, "code_rate", Fraction, Fraction(77, 100)),
            overhead=r.get(section, "overhead", Fraction, Fraction(14, 100)),
            dl_split=r.get(section, "dl_split", SplitOption, SplitOption.I_D),
            ul_split=r.get(section, "ul_split", SplitOption, SplitOption.I_U),
            rb_count_override=r.get(section, "rb_count_override", _as_int, None),
        )
        for key in ("dl_split", "ul_split"):
            if not kwargs[key].implemented:
                raise r.error(section, key, f"split {kwargs[key].value} has no rate model (only I_D / I_U)")
        if kwargs["rb_count_override"] is None:
            r.check(section, "bandwidth_mhz", lambda: rb_count(kwargs["bandwidth_mhz"], kwargs["numerology"]))
        configs.append(r.check(section, None, lambda: CellConfig(**kwargs)))
    catalog = r.check(cells[0], None, lambda: ConfigCatalog(tuple(configs)))

    ue = r.check("ue", None, lambda: UeProfile(
        max_layers_dl=r.get("ue", "max_layers_dl", _as_int, 2),
        max_layers_ul=r.get("ue", "max_layers_ul", _as_int, 2),
        max_qm_dl=r.get("ue", "max_qm_dl", _as_int, 6),
        max_qm_ul=r.get("ue", "max_qm_ul", _as_int, 6),
    ))
    tdd = r.check("tdd", None, lambda: TddPattern(
        slot_sequence=r.get("tdd", "pattern", str, "DDDSU"),
        s_slot_split=r.get("tdd", "s_split", _parse_s_split, (10, 2, 2)),
        s_slot_carries_data=r.get("tdd", "s_carries_data", _as_bool, False),
    ))

    trace_file = r.get("fronthaul", "trace_file", str, None) or None
    if trace_file is not None:
        path = Path(trace_file)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        capacity = r.check("fronthaul", "trace_file", lambda: read_trace(path))
        trace_file = str(path)
    elif parser.has_option("fronthaul", "capacity_steps"):
        capacity = r.get("fronthaul", "capacity_steps", _parse_steps, None)
    else:
        cap = r.get("fronthaul", "capacity_mbps", _as_mbps, 3500 * MBPS)
        capacity = r.check("fronthaul", "capacity_mbps", lambda: CapacityProfile.constant(cap))

    link = r.check("grid", None, lambda: LinkParams(
        control_overhead_bps=r.get("fronthaul", "control_overhead_mbps", _as_mbps, 300 * MBPS),
        ack_ratio=r.get("traffic", "ack_ratio", float, 0.02),
        scheduling=r.get("grid", "policy", str, "spread"),
        throttle=r.get("fronthaul", "policy", str, "all_or_nothing"),
        horizon_slots=r.get("grid", "horizon_slots", _as_int, 20),
        ul_signaling_symbols=r.get("grid", "ul_signaling_symbols", _as_int, 2),
        ul_signaling_rbs=r.get("grid", "ul_signaling_rbs", _as_int, 4),
    ))
    if link.horizon_slots % tdd.period:
        raise r.error("grid", "horizon_slots", f"must be a multiple of the {tdd.period}-slot TDD period")
    for cell in catalog:
        if link.ul_signaling_rbs > cell.n_rb:
            raise r.error("grid", "ul_signaling_rbs", f"exceeds the {cell.n_rb} RBs of {cell.name}")
    if link.ul_signaling_symbols > 14:
        raise r.error("grid", "ul_signaling_symbols", "at most 14 symbols per slot")

    traffic = r.check("traffic", None, lambda: Traffic(
        dl_demand_bps=r.get("traffic", "dl_mbps", _as_mbps, 1000 * MBPS),
        ul_demand_bps=r.get("traffic", "ul_mbps", _as_mbps, 0.0),
        jitter=r.get("traffic", "jitter", float, 0.0),
    ))
    ctrl = r.check("controller", None, lambda: ControllerParams(
        hysteresis_margin=r.get("controller", "hysteresis", float, 0.1),
        min_dwell_s=r.get("controller", "dwell_s", float, 2.0),
        objective=r.get("controller", "objective", str, "dl"),
    ))
    return r.check("sim", None, lambda: Scenario(
        catalog=catalog,
        ue=ue,
        tdd=tdd,
        capacity=capacity,
        traffic=traffic,
        link=link,
        controller=ctrl,
        step_s=r.get("sim", "step_s", float, 0.1),
        duration_s=r.get("sim", "duration_s", float, 10.0),
        seed=r.get("sim", "seed", _as_int, 0),
        capacity_trace=trace_file,
    ))


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists() and not path.is_absolute() and bundled_scenario(path.name).exists():
        path = bundled_scenario(path.name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, source=str(path), base_dir=path.parent)


def _dec(x: Fraction) -> str:
    """Exact decimal text of a fraction parsed from a decimal string."""
    d = Decimal(x.numerator) / Decimal(x.denominator)
    if Fraction(d) != x:
        raise ValueError(f"{x} has no finite decimal expansion")
    return format(d.normalize(), "f")


def _mbps(bps: float) -> str:
    if bps == float("inf"):
        return "inf"
    return format(Decimal(bps).scaleb(-6).normalize(), "f")


def dump_scenario(scenario: Scenario) -> str:
    """Canonical text form; ``parse_scenario(dump_scenario(s)) == s``."""
    out = []

    def section(name, items):
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in items)
        out.append("")

    for c in scenario.catalog:
        items = [
            ("bandwidth_mhz", c.bandwidth_mhz),
            ("scs_khz", c.numerology.scs_khz),
            ("ports", c.gnb_ports),
            ("qm_dl", c.qm_dl),
            ("qm_ul", c.qm_ul),
            ("n_iq", c.n_iq),
            ("code_rate", _dec(c.code_rate)),
            ("overhead", _dec(c.overhead)),
            ("dl_split", c.dl_split.value),
            ("ul_split", c.ul_split.value),
        ]
        if c.rb_count_override is not None:
            items.append(("rb_count_override", c.rb_count_override))
        section(f"cell.{c.name}", items)
    ue = scenario.ue
    section("ue", [
        ("max_layers_dl", ue.max_layers_dl), ("max_layers_ul", ue.max_layers_ul),
        ("max_qm_dl", ue.max_qm_dl), ("max_qm_ul", ue.max_qm_ul),
    ])
    tdd = scenario.tdd
    section("tdd", [
        ("pattern", f'"{tdd.slot_sequence}"'),
        ("s_split", '"' + ",".join(str(x) for x in tdd.s_slot_split) + '"'),
        ("s_carries_data", "true" if tdd.s_slot_carries_data else "false"),
    ])
    link = scenario.link
    fh = [("control_overhead_mbps", _mbps(link.control_overhead_bps)), ("policy", link.throttle.value)]
    if scenario.capacity_trace:
        fh.append(("trace_file", scenario.capacity_trace))
    else:
        steps = ", ".join(
            f"{t!r}:{_mbps(dl)}" + ("" if dl == ul else f"/{_mbps(ul)}")
            for t, dl, ul in scenario.capacity.segments
        )
        fh.append(("capacity_steps", f'"{steps}"'))
    section("fronthaul", fh)
    tr = scenario.traffic
    section("traffic", [
        ("dl_mbps", _mbps(tr.dl_demand_bps)), ("ul_mbps", _mbps(tr.ul_demand_bps)),
        ("ack_ratio", repr(float(link.ack_ratio))), ("jitter", repr(float(tr.jitter))),
    ])
    section("grid", [
        ("policy", link.scheduling.value), ("horizon_slots", link.horizon_slots),
        ("ul_signaling_symbols", link.ul_signaling_symbols), ("ul_signaling_rbs", link.ul_signaling_rbs),
    ])
    ctrl = scenario.controller
    section("controller", [
        ("hysteresis", repr(float(ctrl.hysteresis_margin))), ("dwell_s", repr(float(ctrl.min_dwell_s))),
        ("objective", ctrl.objective.value),
    ])
    section("sim", [
        ("step_s", repr(float(scenario.step_s))), ("duration_s", repr(float(scenario.duration_s))),
        ("seed", scenario.seed),
    ])
    return "\n".join(out)
