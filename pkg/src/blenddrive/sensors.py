"""TORCS-style observation assembly: edge rays, opponent sectors, state vector."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .track import (TWO_PI, PhysicsConfig, DEFAULT_PHYSICS, Segment,
                    TrackGeometry, VehiclePose, WorldState,
                    track_relative_pose, wrap_angle)

RANGE_MAX = 200.0  # a reading of exactly 200 means "nothing detected"
N_RAYS = 19
N_SECTORS = 36
SECTOR_WIDTH = math.radians(10.0)
RPM_PER_MPS = 95.0  # engine-speed proxy for the engineless kinematic model
RPM_MAX = 9500.0
STATE_DIM = 29

# ray bearings relative to the ego heading, -90..+90 deg, ccw positive
RAY_BEARINGS = tuple(math.radians(-90.0 + 10.0 * k) for k in range(N_RAYS))


@dataclass(frozen=True)
class SensorFrame:
    track_rays: tuple[float, ...]   # 19 edge distances, m
    opponents: tuple[float, ...]    # 36 sector distances, m
    speed: float                    # m/s
    wheel_speeds: tuple[float, float, float, float]
    engine_rpm: float
    track_pos: float
    angle: float                    # rad, = delta_psi
    t: float


@dataclass(frozen=True)
class ObstacleReading:
    """Distance and ego-frame bearing of one detected obstacle.

    theta = pi/2 is straight ahead, 0 is due left, pi is due right.
    """

    d: float
    theta: float


# --------------------------------------------------------------------------
# Track-edge raycasting
# --------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _edges(geom: TrackGeometry):
    """Edge primitives: ('line', px, py, tx, ty, length) and
    ('circle', cx, cy, radius, phi0, sweep_signed)."""
    out = []
    w = geom.half_width
    for seg in geom.segments:
        if not seg.is_arc:
            ch, sh = math.cos(seg.heading0), math.sin(seg.heading0)
            for side in (1.0, -1.0):
                # left normal is (-sh, ch)
                px = seg.x0 + side * w * -sh
                py = seg.y0 + side * w * ch
                out.append(("line", px, py, ch, sh, seg.length))
        else:
            r = abs(1.0 / seg.curvature)
            cx, cy = seg.arc_center()
            phi0 = math.atan2(seg.y0 - cy, seg.x0 - cx)
            sweep = seg.curvature * seg.length
            for radius in (r - w, r + w):
                if radius > 1e-9:
                    out.append(("circle", cx, cy, radius, phi0, sweep))
    return tuple(out)


def _ray_hit(edge, ox: float, oy: float, dx: float, dy: float) -> float | None:
    """Distance along the unit ray (ox,oy)+(dx,dy)*u to one edge, or None."""
    if edge[0] == "line":
        _, px, py, tx, ty, length = edge
        denom = dx * ty - dy * tx
        if abs(denom) < 1e-12:
            return None
        qx, qy = px - ox, py - oy
        u = (qx * ty - qy * tx) / denom
        v = (qx * dy - qy * dx) / denom
        if u > 1e-9 and -1e-9 <= v <= length + 1e-9:
            return u
        return None

    _, cx, cy, radius, phi0, sweep = edge
    fx, fy = ox - cx, oy - cy
    b = dx * fx + dy * fy
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    best = None
    sgn = math.copysign(1.0, sweep)
    for u in (-b - root, -b + root):
        if u <= 1e-9:
            continue
        phi = math.atan2(oy + u * dy - cy, ox + u * dx - cx)
        prog = ((phi - phi0) * sgn) % TWO_PI
        if prog <= abs(sweep) + 1e-9 or prog >= TWO_PI - 1e-9:
            if best is None or u < best:
                best = u
    return best


def track_rays(geom: TrackGeometry, pose: VehiclePose) -> tuple[float, ...]:
    """19 distances to the track edge; all zeros when the pose is off track."""
    rel = track_relative_pose(geom, pose)
    if abs(rel.track_pos) > 1.0:
        return (0.0,) * N_RAYS
    edges = _edges(geom)
    out = []
    for bearing in RAY_BEARINGS:
        ang = pose.heading + bearing
        dx, dy = math.cos(ang), math.sin(ang)
        dist = RANGE_MAX
        for edge in edges:
            u = _ray_hit(edge, pose.x, pose.y, dx, dy)
            if u is not None and u < dist:
                dist = u
        out.append(dist)
    return tuple(out)


# --------------------------------------------------------------------------
# Opponent sectors
# --------------------------------------------------------------------------

def obstacle_theta(ego: VehiclePose, other: VehiclePose) -> float:
    """Ego-frame bearing with theta = pi/2 dead ahead, 0 due left, pi due right."""
    bearing = math.atan2(other.y - ego.y, other.x - ego.x) - ego.heading
    return (math.pi / 2.0 - bearing) % TWO_PI


def opponent_sectors(state: WorldState) -> tuple[float, ...]:
    """Nearest opponent distance per 10-degree bearing sector, else 200.

    Sector j covers theta in [j*10deg, (j+1)*10deg); sector 0 starts due left.
    """
    sectors = [RANGE_MAX] * N_SECTORS
    for opp in state.opponents:
        d = math.hypot(opp.pose.x - state.ego.x, opp.pose.y - state.ego.y)
        if d >= RANGE_MAX:
            continue
        theta = obstacle_theta(state.ego, opp.pose)
        j = int(theta / SECTOR_WIDTH) % N_SECTORS
        if d < sectors[j]:
            sectors[j] = d
    return tuple(sectors)


def sector_readings(sectors: tuple[float, ...]) -> list[ObstacleReading]:
    """Detected sectors as obstacle readings at the sector center bearing."""
    return [ObstacleReading(d, (j + 0.5) * SECTOR_WIDTH)
            for j, d in enumerate(sectors) if d < RANGE_MAX]


# --------------------------------------------------------------------------
# Frame assembly
# --------------------------------------------------------------------------

def sensor_frame(state: WorldState, geom: TrackGeometry) -> SensorFrame:
    rel = track_relative_pose(geom, state.ego)
    v = state.ego.speed
    return SensorFrame(
        track_rays=track_rays(geom, state.ego),
        opponents=opponent_sectors(state),
        speed=v,
        wheel_speeds=(v, v, v, v),
        engine_rpm=min(v * RPM_PER_MPS, RPM_MAX),
        track_pos=rel.track_pos,
        angle=rel.delta_psi,
        t=state.t,
    )


def normalize_state(frame: SensorFrame,
                    phys: PhysicsConfig = DEFAULT_PHYSICS) -> np.ndarray:
    """Flat 29-vector in [-1, 1] for the policy and value networks.

    Layout: [angle/pi, track_pos, speed_x, speed_y, speed_z, 4 wheel speeds,
    rpm, 19 track rays]; speeds scaled by v_max, rays by 200. The lateral and
    vertical speed slots are always 0 under the kinematic model.
    """
    out = np.empty(STATE_DIM)
    out[0] = frame.angle / math.pi
    out[1] = frame.track_pos
    out[2] = frame.speed / phys.v_max
    out[3] = 0.0
    out[4] = 0.0
    out[5:9] = [w / phys.v_max for w in frame.wheel_speeds]
    out[9] = frame.engine_rpm / RPM_MAX
    out[10:29] = [r / RANGE_MAX for r in frame.track_rays]
    return out


# canonical CSV column order for harness logs
FRAME_CSV_COLUMNS = (
    ["angle", "track_pos", "speed"]
    + [f"wheel_{i}" for i in range(4)]
    + ["rpm"]
    + [f"ray_{i}" for i in range(N_RAYS)]
    + [f"opp_{i}" for i in range(N_SECTORS)]
    + ["t"]
)
