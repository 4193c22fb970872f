import math

import numpy as np
import pytest

from blenddrive.sensors import (N_RAYS, N_SECTORS, RANGE_MAX, STATE_DIM,
                                normalize_state, obstacle_theta,
                                opponent_sectors, sector_readings,
                                sensor_frame, track_rays)
from blenddrive.track import (Opponent, OpponentScript, PhysicsConfig,
                              VehiclePose, WorldState, build_track, pose_at)

LONG_SEGS = [(500.0, 0.0), (math.pi * 60.0, 1.0 / 60.0),
             (500.0, 0.0), (math.pi * 60.0, 1.0 / 60.0)]


@pytest.fixture
def track():
    return build_track(LONG_SEGS, 6.0)


def test_side_rays_read_half_width(track):
    rays = track_rays(track, pose_at(track, 100.0))
    assert rays[0] == pytest.approx(6.0)   # -90 deg, right edge
    assert rays[-1] == pytest.approx(6.0)  # +90 deg, left edge


def test_forward_ray_capped_on_long_straight(track):
    rays = track_rays(track, pose_at(track, 10.0))
    assert rays[9] == RANGE_MAX


def test_ray_mirror_symmetry(track):
    rays = track_rays(track, pose_at(track, 100.0))
    for k in range(N_RAYS):
        assert rays[k] == pytest.approx(rays[18 - k], abs=1e-9)


def test_rays_zero_off_track(track):
    rays = track_rays(track, pose_at(track, 100.0, 7.0))
    assert rays == (0.0,) * N_RAYS


def test_offset_pose_side_rays(track):
    rays = track_rays(track, pose_at(track, 100.0, 2.0))
    # 2 m right of center: right edge at 4 m, left edge at 8 m
    assert rays[0] == pytest.approx(4.0)
    assert rays[-1] == pytest.approx(8.0)


# -- opponent sectors ---------------------------------------------------------

def _world_with(ego, others):
    opponents = tuple(Opponent(p, OpponentScript(0.0)) for p in others)
    return WorldState(ego, opponents)


def test_no_opponents_all_clear():
    st = _world_with(VehiclePose(0, 0, 0), [])
    assert opponent_sectors(st) == (RANGE_MAX,) * N_SECTORS


def test_opponent_straight_ahead():
    ego = VehiclePose(0, 0, 0)
    st = _world_with(ego, [VehiclePose(15, 0, 0)])
    sectors = opponent_sectors(st)
    ahead = int((math.pi / 2) / math.radians(10.0))  # sector containing pi/2
    assert sectors[ahead] == pytest.approx(15.0)
    assert all(v == RANGE_MAX for j, v in enumerate(sectors) if j != ahead)


def test_nearest_wins_in_sector():
    ego = VehiclePose(0, 0, 0)
    st = _world_with(ego, [VehiclePose(10, 0, 0), VehiclePose(20, 0, 0)])
    sectors = opponent_sectors(st)
    assert min(sectors) == pytest.approx(10.0)


def test_theta_convention():
    ego = VehiclePose(0, 0, 0)
    assert obstacle_theta(ego, VehiclePose(10, 0, 0)) == pytest.approx(math.pi / 2)
    assert obstacle_theta(ego, VehiclePose(0, 10, 0)) == pytest.approx(0.0)   # left
    assert obstacle_theta(ego, VehiclePose(0, -10, 0)) == pytest.approx(math.pi)


def test_sector_rotation_equivariance():
    ego = VehiclePose(0, 0, 0)
    rng = np.random.default_rng(7)
    angles = rng.uniform(0, 2 * math.pi, 8)
    dists = rng.uniform(5, 100, 8)

    def world(extra):
        # bearing beta (ccw from heading) -> world position
        return _world_with(ego, [
            VehiclePose(d * math.cos(b + extra), d * math.sin(b + extra), 0)
            for b, d in zip(angles, dists)])

    base = opponent_sectors(world(0.0))
    rotated = opponent_sectors(world(-math.radians(10.0)))  # +10 deg in theta
    assert rotated[1:] + rotated[:1] == pytest.approx(base, abs=1e-9) or \
        list(rotated) == list(base[-1:]) + list(base[:-1])


def test_sectors_and_rays_independent(track):
    ego = pose_at(track, 100.0)
    lonely = _world_with(ego, [])
    crowded = _world_with(ego, [VehiclePose(ego.x + 10, ego.y, 0)])
    assert track_rays(track, lonely.ego) == track_rays(track, crowded.ego)
    assert opponent_sectors(crowded) != opponent_sectors(lonely)


def test_sector_readings_extraction():
    sectors = [RANGE_MAX] * N_SECTORS
    sectors[9] = 15.0
    readings = sector_readings(tuple(sectors))
    assert len(readings) == 1
    assert readings[0].d == 15.0
    assert readings[0].theta == pytest.approx(math.radians(95.0))


# -- frame assembly and normalization -----------------------------------------

def test_frame_fields(track):
    st = WorldState(pose_at(track, 100.0, 3.0, 0.0, 20.0))
    frame = sensor_frame(st, track)
    assert frame.track_pos == pytest.approx(0.5)
    assert frame.angle == pytest.approx(0.0, abs=1e-12)
    assert frame.wheel_speeds == (20.0,) * 4
    assert frame.engine_rpm == pytest.approx(20.0 * 95.0)
    assert len(frame.track_rays) == N_RAYS
    assert len(frame.opponents) == N_SECTORS


def test_normalized_state_bounds_and_values(track):
    phys = PhysicsConfig()
    st = WorldState(pose_at(track, 100.0, 0.0, 0.0, phys.v_max / 2.0))
    v = normalize_state(sensor_frame(st, track), phys)
    assert v.shape == (STATE_DIM,)
    assert np.all(v >= -1.0) and np.all(v <= 1.0)
    assert v[2] == pytest.approx(0.5)   # speed slot
    assert v[3] == 0.0 and v[4] == 0.0  # lateral/vertical speed slots
    # capped forward ray maps to 1.0
    assert v[10 + 9] == pytest.approx(1.0)


def test_normalized_state_random_on_track_poses(track):
    rng = np.random.default_rng(3)
    phys = PhysicsConfig()
    for _ in range(50):
        s = rng.uniform(0, track.total_length)
        e = rng.uniform(-5.9, 5.9)
        dpsi = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(0, phys.v_max)
        st = WorldState(pose_at(track, s, e, dpsi, speed))
        v = normalize_state(sensor_frame(st, track), phys)
        assert np.all(v >= -1.0 - 1e-12) and np.all(v <= 1.0 + 1e-12)
