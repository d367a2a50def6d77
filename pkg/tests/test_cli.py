import csv
import subprocess
import sys

import pytest

from fhsim.cli import CURVE_HEADER, SIM_HEADER, SWEEP_HEADER, main, rates_report
from fhsim.fronthaul import CapacityProfile, write_trace
from fhsim.scenario_file import (
    ParseError,
    ValidationError,
    bundled_scenario,
    dump_scenario,
    load_scenario,
    parse_scenario,
)

TABLE_TEXT = bundled_scenario("default.scenario").read_text()


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def report_values(text):
    out, section = {}, None
    for line in text.splitlines():
        if line.startswith("["):
            section = line.strip("[]").split(".", 1)[1]
        elif "=" in line:
            k, v = (x.strip() for x in line.split("=", 1))
            out[(section, k)] = v
    return out


class TestScenarioFile:
    def test_bundled(self, default_scenario):
        assert default_scenario.catalog.names == ["config1", "config2", "config3"]
        assert default_scenario.link.control_overhead_bps == 300e6
        assert default_scenario.n_steps == 150

    def test_unknown_bandwidth_names_line(self):
        with pytest.raises(ValidationError, match=r"\[cell.config1\] bandwidth_mhz \(line 5\)"):
            parse_scenario(TABLE_TEXT.replace("bandwidth_mhz = 200", "bandwidth_mhz = 70"))

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="unknown key"):
            parse_scenario(TABLE_TEXT.replace("[ue]", "[ue]\nfoo = 1"))

    def test_unknown_section(self):
        with pytest.raises(ValidationError):
            parse_scenario(TABLE_TEXT + "\n[extras]\nx = 1\n")

    def test_inert_split_rejected(self):
        with pytest.raises(ValidationError):
            parse_scenario(TABLE_TEXT.replace("overhead = 0.14\n\n[cell.config2]", "overhead = 0.14\ndl_split = II_D\n\n[cell.config2]"))

    def test_parse_error(self):
        with pytest.raises(ParseError) as info:
            parse_scenario(TABLE_TEXT.replace("[ue]", "[ue"))
        assert info.value.exit_code == 2

    def test_empty_controller_defaults(self):
        s = parse_scenario(TABLE_TEXT.replace("hysteresis = 0.1\ndwell_s = 2", ""))
        assert (s.controller.hysteresis_margin, s.controller.min_dwell_s) == (0.1, 2.0)

    def test_round_trip(self, default_scenario, tiny_scenario):
        for s in (default_scenario, tiny_scenario):
            text = dump_scenario(s)
            assert parse_scenario(text) == s
            assert dump_scenario(parse_scenario(text)) == text

    def test_trace_file_relative(self, tmp_path):
        write_trace(CapacityProfile.steps([(0, 3.5e9), (1, 1.8e9)]), tmp_path / "cap.csv")
        text = TABLE_TEXT.replace('capacity_steps = "0:3500, 5:1800, 10:3500"', "trace_file = cap.csv")
        path = tmp_path / "s.scenario"
        path.write_text(text)
        s = load_scenario(path)
        assert s.capacity.segments[1][:2] == (1.0, 1.8e9)


class TestRates:
    def test_values(self, default_scenario):
        v = report_values(rates_report(default_scenario))
        assert v[("config1", "dl_access_mbps")] == "845.9"
        assert v[("config2", "dl_access_mbps")] == "422.9"
        assert v[("config1", "ul_fh_required_mbps")] == "2854.7"
        assert v[("config1", "dl_fh_required_mbps")] == "1577.3"
        assert v[("config3", "ul_fh_required_mbps")] == v[("config1", "ul_fh_required_mbps")]
        assert v[("config1", "n_rb")] == "132"
        assert {v[(c, "binding_direction")] for c in ("config1", "config2", "config3")} == {"UL"}

    def test_single_cell(self, tmp_path):
        out = tmp_path / "r.txt"
        assert main(["rates", "--cell", "config2", "--out", str(out)]) == 0
        assert out.read_text().startswith("[rates.config2]")
        assert "config1" not in out.read_text()

    def test_unknown_cell(self, capsys):
        assert main(["rates", "--cell", "nope"]) == 1
        assert "unknown cell" in capsys.readouterr().err


class TestCommands:
    def test_sweep(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["--out", str(out), "sweep"]) == 0
        rows = read_csv(out)
        assert rows[0] == SWEEP_HEADER
        assert len(rows) == 1 + 35 * 3
        assert rows[1][:2] == ["500.0", "config1"] and rows[-1][0] == "3900.0"

    def test_curve_monotone(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(["curve", "--out", str(out), "--jobs", "2"]) == 0
        rows = read_csv(out)
        assert rows[0] == CURVE_HEADER
        for name in ("config1", "config2", "config3"):
            fh = [float(r[3]) for r in rows[1:] if r[1] == name]
            assert len(fh) == 10
            assert fh == sorted(fh)

    def test_validate(self, capsys):
        assert main(["validate", "--scenario", "tiny.scenario"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines and all(line.startswith("PASS") for line in lines)

    def test_simulate_deterministic_with_events(self, tmp_path):
        a, b, ev = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "ev.csv"
        assert main(["simulate", "--out", str(a), "--events", str(ev)]) == 0
        assert main(["simulate", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        rows = read_csv(a)
        assert rows[0] == SIM_HEADER and len(rows) == 151
        assert [r[1:] for r in read_csv(ev)[1:]] == [
            ["downgrade", "config1", "config2"],
            ["upgrade", "config2", "config1"],
        ]

    def test_grid_dump(self, tmp_path):
        dump = tmp_path / "grid.csv"
        assert main(["simulate", "--scenario", "tiny.scenario", "--out", str(tmp_path / "s.csv"), "--grid-dump", str(dump)]) == 0
        rows = read_csv(dump)
        assert rows[0] == ["slot", "symbol", "direction", "occupied_rbs", "transported"]
        assert len(rows) == 1 + 4 * 14

    def test_missing_scenario(self, capsys):
        assert main(["rates", "--scenario", "/nonexistent.scenario"]) != 0
        assert "error" in capsys.readouterr().err

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.scenario"
        bad.write_text("[ue\n")
        assert main(["rates", "--scenario", str(bad)]) == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "fhsim", "rates", "--cell", "config1"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "threshold_mbps = 2854.7" in proc.stdout
