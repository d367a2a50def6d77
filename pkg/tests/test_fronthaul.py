import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from fhsim.fronthaul import (
    CapacityProfile,
    FronthaulError,
    LinkParams,
    ThrottlePolicy,
    capacity_at,
    read_trace,
    threshold_capacity,
    throttle,
    write_trace,
)
from fhsim.phy_model import CellConfig, Direction, access_capacity, required_fh

MBPS = 1e6
GBPS = 1e9


class TestCapacityProfile:
    def test_constant(self):
        assert capacity_at(CapacityProfile.constant(3.5 * GBPS), 10) == (3.5 * GBPS, 3.5 * GBPS)

    def test_right_continuous(self):
        prof = CapacityProfile.steps([(0, 3.5 * GBPS), (5, 1.8 * GBPS)])
        assert capacity_at(prof, 4.999) == (3.5 * GBPS, 3.5 * GBPS)
        assert capacity_at(prof, 5) == (1.8 * GBPS, 1.8 * GBPS)
        assert prof.symmetric

    def test_negative_time(self):
        with pytest.raises(FronthaulError):
            capacity_at(CapacityProfile.constant(1.0), -0.1)

    @pytest.mark.parametrize(
        "segments",
        [((1.0, 1.0, 1.0),), ((0.0, 1.0, 1.0), (0.0, 2.0, 2.0)), ((0.0, -1.0, 1.0),), ()],
    )
    def test_invalid(self, segments):
        with pytest.raises(FronthaulError):
            CapacityProfile(segments)

    def test_trace_round_trip(self, tmp_path):
        prof = CapacityProfile(((0, 3.5 * GBPS, 3.0 * GBPS), (2.5, 1.8 * GBPS, 1.8 * GBPS)))
        path = tmp_path / "trace.csv"
        write_trace(prof, path)
        assert path.read_text().splitlines()[0] == "time_s,capacity_dl_mbps,capacity_ul_mbps"
        assert read_trace(path) == prof
        assert not prof.symmetric

    def test_trace_bad_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("t,dl,ul\n0,1,1\n")
        with pytest.raises(FronthaulError):
            read_trace(path)


class TestThrottle:
    def test_above_threshold_full_rate(self, cell1, ue, tdd):
        r = throttle(cell1, ue, tdd, 1 * GBPS, 0, (3.2 * GBPS, 3.2 * GBPS))
        assert r.feasible
        assert r.dl_access == access_capacity(cell1, ue, Direction.DL, tdd)
        assert round(r.dl_access / MBPS, 1) == 845.9

    def test_below_threshold_all_or_nothing(self, cell1, ue, tdd):
        r = throttle(cell1, ue, tdd, 1 * GBPS, 0, (2.0 * GBPS, 2.0 * GBPS))
        assert r.dl_access == 0 and r.ul_access == 0

    def test_dl_binding_only_keeps_ul(self, cell1, ue, tdd):
        # Generous UL, starved DL: DL stalls, UL user traffic goes through.
        r = throttle(cell1, ue, tdd, 1 * GBPS, 50 * MBPS, (1.0 * GBPS, 10 * GBPS))
        assert r.dl_access == 0
        assert r.ul_access == 50 * MBPS

    def test_unconstrained(self, cell2, ue, tdd):
        r = throttle(cell2, ue, tdd, 100 * MBPS, 20 * MBPS, (math.inf, math.inf))
        assert (r.dl_access, r.ul_access) == (100 * MBPS, 20 * MBPS)
        r = throttle(cell2, ue, tdd, 5 * GBPS, 5 * GBPS, (math.inf, math.inf))
        assert r.dl_access == access_capacity(cell2, ue, Direction.DL, tdd)
        assert r.ul_access == access_capacity(cell2, ue, Direction.UL, tdd)

    def test_loads_include_control_overhead(self, cell1, ue, tdd):
        r = throttle(cell1, ue, tdd, 1 * GBPS, 0, (math.inf, math.inf))
        assert (r.fh_dl, r.fh_ul) == required_fh(cell1, ue, tdd, 300 * MBPS)

    def test_proportional_bisection_resolution(self, cell1, ue, tdd, link):
        cap = 1.9 * GBPS
        r = throttle(cell1, ue, tdd, 1 * GBPS, 0, (cap, cap), link, ThrottlePolicy.PROPORTIONAL)
        assert r.feasible and 0 < r.dl_access < access_capacity(cell1, ue, Direction.DL, tdd)
        bumped = throttle(cell1, ue, tdd, r.dl_access + 1 * MBPS, 0, (cap, cap), link)
        assert not bumped.feasible or bumped.dl_access == 0

    def test_negative_inputs(self, cell1, ue, tdd):
        with pytest.raises(FronthaulError):
            throttle(cell1, ue, tdd, -1, 0, (1, 1))


class TestThreshold:
    def test_config1(self, cell1, ue, tdd):
        assert threshold_capacity(cell1, ue, tdd) == 2_854_675_200

    def test_config2(self, cell2, ue, tdd):
        assert threshold_capacity(cell2, ue, tdd) == 1_577_337_600

    def test_ratio(self, cell1, cell2, ue, tdd):
        ratio = threshold_capacity(cell2, ue, tdd) / threshold_capacity(cell1, ue, tdd)
        assert ratio == pytest.approx(0.55, abs=0.05)

    def test_equals_max_requirement(self, catalog, ue, tdd, link):
        for cell in catalog:
            assert threshold_capacity(cell, ue, tdd, link) == max(required_fh(cell, ue, tdd, link.control_overhead_bps))

    def test_ul_traffic_threshold(self, cell1, ue, tdd):
        assert threshold_capacity(cell1, ue, tdd, direction=Direction.UL) == required_fh(cell1, ue, tdd, 300 * MBPS)[1]

    def test_ul_binds_for_table_configs(self, catalog, ue, tdd):
        for cell in catalog:
            dl, ul = required_fh(cell, ue, tdd, 300 * MBPS)
            assert ul > dl
            assert threshold_capacity(cell, ue, tdd) == ul


caps = st.floats(0, 4 * GBPS)


@settings(max_examples=30, deadline=None)
@given(a=caps, b=caps, policy=st.sampled_from(list(ThrottlePolicy)))
def test_monotone_in_capacity(a, b, policy):
    from fhsim.phy_model import TddPattern, UeProfile

    cell, ue, tdd = CellConfig("c", 100, 4), UeProfile(), TddPattern()
    lo, hi = sorted((a, b))
    r_lo = throttle(cell, ue, tdd, 1 * GBPS, 0, (lo, lo), policy=policy)
    r_hi = throttle(cell, ue, tdd, 1 * GBPS, 0, (hi, hi), policy=policy)
    assert r_lo.dl_access <= r_hi.dl_access


@settings(max_examples=30, deadline=None)
@given(cap=caps)
def test_proportional_dominates(cap):
    from fhsim.phy_model import TddPattern, UeProfile

    cell, ue, tdd = CellConfig("c", 100, 4), UeProfile(), TddPattern()
    aon = throttle(cell, ue, tdd, 1 * GBPS, 0, (cap, cap), policy=ThrottlePolicy.ALL_OR_NOTHING)
    prop = throttle(cell, ue, tdd, 1 * GBPS, 0, (cap, cap), policy=ThrottlePolicy.PROPORTIONAL)
    assert prop.dl_access >= 0
    assert prop.dl_access >= aon.dl_access
    if cap >= threshold_capacity(cell, ue, tdd):
        assert prop.dl_access == aon.dl_access


def test_all_or_nothing_single_step(cell2, ue, tdd):
    thr = threshold_capacity(cell2, ue, tdd)
    values = [throttle(cell2, ue, tdd, 1 * GBPS, 0, (c, c)).dl_access for c in (0, thr / 2, thr - 1, thr, thr * 2)]
    assert values[:3] == [0, 0, 0]
    assert values[3] == values[4] == access_capacity(cell2, ue, Direction.DL, tdd)


def test_link_params_validation():
    with pytest.raises(FronthaulError):
        LinkParams(ack_ratio=0.5)
    with pytest.raises(FronthaulError):
        LinkParams(control_overhead_bps=-1)
    assert LinkParams(scheduling="time_first").scheduling.value == "time_first"
    assert replace(LinkParams(), throttle="proportional").throttle is ThrottlePolicy.PROPORTIONAL
