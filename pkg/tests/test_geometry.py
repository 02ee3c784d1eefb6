import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cri.geometry import (
    EgoState,
    Envelope,
    EnvelopeParams,
    InvalidStateError,
    ObjectState,
    RoadContext,
    RssParams,
    build_envelope,
    filter_objects,
    lead_speed,
    rss_distance,
    to_ego_frame,
    wrap_angle,
)

# frozen from tests/oracle/straight_line.py
RSS_20_15 = 41.4453125
RSS_0_0 = 0.8203125
RSS_0_30_RAW = -111.6796875


def obj(x, y, vx=0.0, vy=0.0, heading=0.0, id="o"):
    return ObjectState(id=id, x=x, y=y, vx=vx, vy=vy, heading=heading)


class TestEgoFrame:
    def test_identity_rotation(self):
        ego = EgoState(0.0, 0.0, 0.0, 5.0)
        rel = to_ego_frame(ego, obj(10.0, 0.0))
        assert (rel.dp_lon, rel.dp_lat, rel.v_lon, rel.v_lat, rel.bearing) == (10.0, 0.0, -5.0, 0.0, 0.0)

    def test_rotated_ego(self):
        ego = EgoState(0.0, 0.0, math.pi / 2, 0.0)
        rel = to_ego_frame(ego, obj(0.0, 10.0, heading=math.pi / 2))
        assert rel.dp_lon == pytest.approx(10.0)
        assert rel.dp_lat == pytest.approx(0.0, abs=1e-12)
        assert rel.theta_deg == pytest.approx(0.0)

    def test_opposite_heading_is_180(self):
        rel = to_ego_frame(EgoState(0.0, 0.0, 0.0, 0.0), obj(5.0, 0.0, heading=math.pi))
        assert rel.theta_deg == pytest.approx(180.0)

    def test_left_is_positive_bearing(self):
        rel = to_ego_frame(EgoState(0.0, 0.0, 0.0, 0.0), obj(0.0, 3.0))
        assert rel.bearing == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(InvalidStateError):
            EgoState(bad, 0.0, 0.0, 1.0)
        with pytest.raises(InvalidStateError):
            obj(0.0, bad)

    def test_negative_speed_rejected(self):
        with pytest.raises(InvalidStateError):
            EgoState(0.0, 0.0, 0.0, -1.0)

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-math.pi, math.pi), st.floats(0, 30))
    def test_theta_in_range_and_distance_preserved(self, x, y, h, v):
        ego = EgoState(1.0, -2.0, h, v)
        rel = to_ego_frame(ego, obj(x, y, heading=-h))
        assert 0.0 <= rel.theta_deg <= 180.0
        assert math.hypot(rel.dp_lon, rel.dp_lat) == pytest.approx(math.hypot(x - 1.0, y + 2.0), abs=1e-9)


def test_wrap_angle_range():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.5) == 0.5


class TestRss:
    def test_oracle_values(self):
        assert rss_distance(20.0, 15.0) == pytest.approx(RSS_20_15, rel=1e-12)
        assert rss_distance(0.0, 0.0) == pytest.approx(RSS_0_0, rel=1e-12)

    def test_negative_raw_clamped(self):
        assert RSS_0_30_RAW < 0.0
        assert rss_distance(0.0, 30.0) == 0.0

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            rss_distance(-1.0, 0.0)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            RssParams(a_min=0.0)

    @given(st.floats(0, 60), st.floats(0, 60), st.floats(0, 5))
    def test_monotone(self, v, vf, dv):
        assert rss_distance(v + dv, vf) >= rss_distance(v, vf)
        assert rss_distance(v, vf + dv) <= rss_distance(v, vf)


class TestEnvelope:
    def test_example(self):
        env = build_envelope(EgoState(0, 0, 0, 20.0), RoadContext(20.0, 2), lead=15.0)
        assert env.forward == pytest.approx(41.4453125)
        assert env.rear == pytest.approx(20.72265625)
        assert env.lateral == pytest.approx(4.0)

    def test_floor_applies_at_rest(self):
        env = build_envelope(EgoState(0, 0, 0, 0.0), RoadContext(10.0), lead=0.0)
        assert env.d_rss == pytest.approx(0.8203125)
        assert env.forward == 5.0
        assert env.rear == 2.5

    def test_single_lane(self):
        assert build_envelope(EgoState(0, 0, 0, 5.0), RoadContext(10.0, 1)).lateral == pytest.approx(2.25)

    def test_no_lead_uses_ego_speed(self):
        ego = EgoState(0, 0, 0, 10.0)
        assert build_envelope(ego, RoadContext(10.0)).d_rss == pytest.approx(rss_distance(10.0, 10.0))

    def test_lead_speed_picks_nearest_in_path(self):
        ego = EgoState(0, 0, 0, 10.0)
        objs = [obj(30, 0, vx=8.0, id="far"), obj(15, 1.0, vx=4.0, id="near"), obj(5, 3.0, vx=0.0, id="side")]
        assert lead_speed(ego, objs, RoadContext(10.0)) == 4.0
        assert lead_speed(ego, [obj(10, 0, vx=-6.0)], RoadContext(10.0)) == 0.0
        assert lead_speed(ego, [], RoadContext(10.0)) == 10.0

    def test_filter_boundary_closed(self):
        env = Envelope(forward=10.0, rear=5.0, lateral=4.0)
        ego = EgoState(0, 0, 0, 0.0)
        kept = filter_objects(ego, [obj(11.0, 0, id="out"), obj(1.0, 0, id="in"), obj(10.0, 4.0, id="edge"),
                                    obj(-5.0, -4.0, id="corner")], env)
        assert [o.id for o, _ in kept] == ["in", "edge", "corner"]

    def test_envelope_params_validated(self):
        with pytest.raises(ValueError):
            EnvelopeParams(d_min=-1.0)

    @settings(max_examples=200)
    @given(st.floats(0, 40), st.floats(0, 40), st.integers(1, 6))
    def test_envelope_invariants(self, v, lead, lanes):
        env = build_envelope(EgoState(0, 0, 0, v), RoadContext(15.0, lanes), lead=lead)
        assert env.forward >= 5.0
        assert env.rear == pytest.approx(0.5 * env.forward)
        assert env.lateral == pytest.approx(lanes * 1.75 + 0.5)
