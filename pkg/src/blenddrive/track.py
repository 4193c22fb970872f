"""Deterministic 2D closed-track world.

Geometry is a loop of straight and constant-curvature arc segments.
Vehicles follow a kinematic bicycle model integrated with forward Euler.
Opponents are scripted centerline followers with a fixed lateral offset.

Sign conventions used everywhere in this package:
  * heading is world-frame, counterclockwise positive, wrapped to (-pi, pi]
  * positive steering command turns LEFT
  * lateral offset e > 0 means the vehicle sits RIGHT of the centerline
  * heading error delta_psi > 0 means the vehicle points RIGHT of the tangent
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .command import Command, clamp

TWO_PI = 2.0 * math.pi


class TrackError(ValueError):
    """Invalid track specification (non-closing loop, bad dimensions)."""


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class Segment:
    """One centerline piece: length in meters, signed curvature in 1/m.

    curvature == 0 is a straight; curvature > 0 bends left.
    The start fields are filled in by build_track.
    """

    length: float
    curvature: float
    x0: float = 0.0
    y0: float = 0.0
    heading0: float = 0.0
    s0: float = 0.0

    @property
    def is_arc(self) -> bool:
        return self.curvature != 0.0

    def arc_center(self) -> tuple[float, float]:
        r = 1.0 / self.curvature
        return (self.x0 - r * math.sin(self.heading0),
                self.y0 + r * math.cos(self.heading0))

    def end(self) -> tuple[float, float, float]:
        """Endpoint (x, y, heading) of this segment."""
        if not self.is_arc:
            return (self.x0 + self.length * math.cos(self.heading0),
                    self.y0 + self.length * math.sin(self.heading0),
                    self.heading0)
        cx, cy = self.arc_center()
        sweep = self.curvature * self.length
        phi0 = math.atan2(self.y0 - cy, self.x0 - cx)
        phi1 = phi0 + sweep
        r = abs(1.0 / self.curvature)
        return (cx + r * math.cos(phi1), cy + r * math.sin(phi1),
                self.heading0 + sweep)

    def point_at(self, t: float) -> tuple[float, float, float]:
        """Centerline point and tangent heading at arc length t from start."""
        if not self.is_arc:
            return (self.x0 + t * math.cos(self.heading0),
                    self.y0 + t * math.sin(self.heading0),
                    self.heading0)
        cx, cy = self.arc_center()
        sweep = self.curvature * t
        phi = math.atan2(self.y0 - cy, self.x0 - cx) + sweep
        r = abs(1.0 / self.curvature)
        return (cx + r * math.cos(phi), cy + r * math.sin(phi),
                self.heading0 + sweep)


@dataclass(frozen=True)
class TrackGeometry:
    segments: tuple[Segment, ...]
    half_width: float
    total_length: float

    def segment_at(self, s: float) -> tuple[Segment, float]:
        """Segment containing arc length s (wrapped) and the offset into it."""
        s = s % self.total_length
        for seg in self.segments:
            if s < seg.s0 + seg.length:
                return seg, s - seg.s0
        last = self.segments[-1]
        return last, last.length

    def centerline_point(self, s: float) -> tuple[float, float, float]:
        seg, t = self.segment_at(s)
        return seg.point_at(t)


CLOSURE_TOL = 1e-6


def build_track(segments: list[tuple[float, float]] | list[Segment],
                half_width: float) -> TrackGeometry:
    """Build a closed-loop geometry from (length, curvature) pieces."""
    if not segments:
        raise TrackError("empty segment list")
    if half_width <= 0.0:
        raise TrackError(f"half_width must be positive, got {half_width}")

    placed: list[Segment] = []
    x, y, h, s = 0.0, 0.0, 0.0, 0.0
    for raw in segments:
        if isinstance(raw, Segment):
            length, curvature = raw.length, raw.curvature
        else:
            length, curvature = raw
        if length <= 0.0:
            raise TrackError(f"segment length must be positive, got {length}")
        seg = Segment(length, curvature, x, y, h, s)
        placed.append(seg)
        x, y, h = seg.end()
        s += length

    gap = math.hypot(x, y)
    if gap > CLOSURE_TOL:
        raise TrackError(f"track does not close: endpoint gap {gap:.3e} m")
    if abs(wrap_angle(h)) > CLOSURE_TOL:
        raise TrackError(f"track does not close: heading gap {wrap_angle(h):.3e} rad")
    return TrackGeometry(tuple(placed), half_width, s)


def load_track_file(path: str) -> TrackGeometry:
    """Plain-text track: `half_width <m>` header, then one segment per line.

    Segment lines are `straight <length_m>` or `arc <radius_m> <sweep_rad_signed>`.
    """
    half_width = None
    segs: list[tuple[float, float]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "half_width":
                    half_width = float(parts[1])
                elif parts[0] == "straight":
                    segs.append((float(parts[1]), 0.0))
                elif parts[0] == "arc":
                    radius, sweep = float(parts[1]), float(parts[2])
                    if radius <= 0.0:
                        raise TrackError(f"line {lineno}: radius must be positive")
                    segs.append((radius * abs(sweep), math.copysign(1.0 / radius, sweep)))
                else:
                    raise TrackError(f"line {lineno}: unknown directive {parts[0]!r}")
            except (IndexError, ValueError) as exc:
                if isinstance(exc, TrackError):
                    raise
                raise TrackError(f"line {lineno}: cannot parse {line!r}") from exc
    if half_width is None:
        raise TrackError("missing half_width header")
    return build_track(segs, half_width)


def _arc(radius: float, sweep: float) -> tuple[float, float]:
    return (radius * abs(sweep), math.copysign(1.0 / radius, sweep))


_BUILTIN_SPECS = {
    # two 100 m straights joined by 30 m-radius half circles
    "oval": ([(100.0, 0.0), _arc(30.0, math.pi),
              (100.0, 0.0), _arc(30.0, math.pi)], 8.0),
    # rounded rectangle with alternating corner radii
    "curvy": ([(60.0, 0.0), _arc(20.0, math.pi / 2),
               (40.0, 0.0), _arc(30.0, math.pi / 2),
               (60.0, 0.0), _arc(20.0, math.pi / 2),
               (40.0, 0.0), _arc(30.0, math.pi / 2)], 6.0),
}


def builtin_track(name: str) -> TrackGeometry:
    try:
        segs, hw = _BUILTIN_SPECS[name]
    except KeyError:
        raise TrackError(f"unknown builtin track {name!r}; "
                         f"choices: {sorted(_BUILTIN_SPECS)}") from None
    return build_track(list(segs), hw)


BUILTIN_TRACKS = tuple(sorted(_BUILTIN_SPECS))


# --------------------------------------------------------------------------
# Poses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VehiclePose:
    x: float
    y: float
    heading: float
    speed: float = 0.0


@dataclass(frozen=True)
class TrackRelativePose:
    s: float
    e: float
    delta_psi: float
    track_pos: float

    @property
    def on_track(self) -> bool:
        return abs(self.track_pos) <= 1.0


def pose_at(geom: TrackGeometry, s: float, e: float = 0.0,
            delta_psi: float = 0.0, speed: float = 0.0) -> VehiclePose:
    """Place a pose at track coordinates (s, e) with the given heading error."""
    cx, cy, tangent = geom.centerline_point(s)
    # right-pointing normal
    nx, ny = math.sin(tangent), -math.cos(tangent)
    return VehiclePose(cx + e * nx, cy + e * ny,
                       wrap_angle(tangent - delta_psi), speed)


def _project_segment(seg: Segment, x: float, y: float) -> tuple[float, float, float, float]:
    """Project (x, y) onto one segment.

    Returns (t, dist, e, tangent) with t clamped to [0, length].
    """
    if not seg.is_arc:
        ch, sh = math.cos(seg.heading0), math.sin(seg.heading0)
        vx, vy = x - seg.x0, y - seg.y0
        t = vx * ch + vy * sh
        t = min(max(t, 0.0), seg.length)
        fx, fy = seg.x0 + t * ch, seg.y0 + t * sh
        dist = math.hypot(x - fx, y - fy)
        # right offset = displacement dotted with the right normal
        e = (x - fx) * sh - (y - fy) * ch
        return t, dist, e, seg.heading0

    k = seg.curvature
    r = abs(1.0 / k)
    cx, cy = seg.arc_center()
    rho = math.hypot(x - cx, y - cy)
    phi = math.atan2(y - cy, x - cx)
    phi0 = math.atan2(seg.y0 - cy, seg.x0 - cx)
    sweep = abs(k) * seg.length
    # angular progress along travel direction, in [0, 2*pi)
    prog = ((phi - phi0) * math.copysign(1.0, k)) % TWO_PI
    if prog <= sweep:
        t = prog * r
    else:
        # beyond the arc: snap to whichever endpoint is angularly closer
        t = seg.length if (prog - sweep) < (TWO_PI - prog) else 0.0
    fx, fy, tangent = seg.point_at(t)
    dist = math.hypot(x - fx, y - fy)
    if 0.0 < t < seg.length:
        e = math.copysign(1.0, k) * (rho - r)
    else:
        e = (x - fx) * math.sin(tangent) - (y - fy) * math.cos(tangent)
    return t, dist, e, tangent


def track_relative_pose(geom: TrackGeometry, pose: VehiclePose) -> TrackRelativePose:
    """Track coordinates of the nearest centerline point (smallest-s tie-break)."""
    best = None
    for seg in geom.segments:
        t, dist, e, tangent = _project_segment(seg, pose.x, pose.y)
        s = (seg.s0 + t) % geom.total_length
        key = (dist, s)
        if best is None or key < best[0]:
            best = (key, s, e, tangent)
    _, s, e, tangent = best
    delta_psi = wrap_angle(tangent - pose.heading)
    return TrackRelativePose(s, e, delta_psi, e / geom.half_width)


# --------------------------------------------------------------------------
# World
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicsConfig:
    wheelbase: float = 2.6
    max_steer: float = 0.45
    a_max: float = 4.0
    b_max: float = 8.0
    v_max: float = 83.3
    dt: float = 0.05


DEFAULT_PHYSICS = PhysicsConfig()


@dataclass(frozen=True)
class OpponentScript:
    """Constant-speed centerline follower with a fixed lateral offset."""

    target_speed: float
    lateral_offset: float = 0.0


@dataclass(frozen=True)
class Opponent:
    pose: VehiclePose
    script: OpponentScript


@dataclass(frozen=True)
class WorldState:
    ego: VehiclePose
    opponents: tuple[Opponent, ...] = ()
    t: float = 0.0
    lap_count: int = 0


def _bicycle_step(pose: VehiclePose, cmd: Command, phys: PhysicsConfig,
                  dt: float) -> VehiclePose:
    steer = clamp(cmd.steer) * phys.max_steer
    accel_cmd = clamp(cmd.accel)
    accel = accel_cmd * (phys.a_max if accel_cmd >= 0.0 else phys.b_max)
    v = pose.speed
    x = pose.x + v * math.cos(pose.heading) * dt
    y = pose.y + v * math.sin(pose.heading) * dt
    heading = wrap_angle(pose.heading + v / phys.wheelbase * math.tan(steer) * dt)
    speed = min(max(v + accel * dt, 0.0), phys.v_max)
    return VehiclePose(x, y, heading, speed)


# gains reused from the path-tracking steering law; good enough for scripts
_OPP_STEER_PSI = 3.18
_OPP_STEER_E = 2.0


def _opponent_command(geom: TrackGeometry, opp: Opponent) -> Command:
    rel = track_relative_pose(geom, opp.pose)
    steer = clamp(_OPP_STEER_PSI * rel.delta_psi
                  + _OPP_STEER_E * (rel.e - opp.script.lateral_offset))
    target = opp.script.target_speed
    accel = clamp(2.0 * (target - opp.pose.speed) / max(target, 1.0))
    return Command(steer, accel)


def step(state: WorldState, cmd: Command, geom: TrackGeometry,
         dt: float | None = None,
         phys: PhysicsConfig = DEFAULT_PHYSICS) -> WorldState:
    """Advance the world by one time step. Saturating: never raises."""
    if dt is None:
        dt = phys.dt
    s_prev = track_relative_pose(geom, state.ego).s
    ego = _bicycle_step(state.ego, cmd.clamped(), phys, dt)
    s_new = track_relative_pose(geom, ego).s
    laps = state.lap_count
    if state.ego.speed > 0.0 and s_new - s_prev < -geom.total_length / 2.0:
        laps += 1
    opponents = tuple(
        Opponent(_bicycle_step(o.pose, _opponent_command(geom, o), phys, dt), o.script)
        for o in state.opponents)
    return WorldState(ego, opponents, state.t + dt, laps)


class Status(Enum):
    RUNNING = "running"
    OFF_TRACK = "off_track"
    COLLIDED = "collided"
    LAP_DONE = "lap_done"


DEFAULT_COLLISION_RADIUS = 2.0  # sum of the two vehicles' effective half-lengths


def episode_status(state: WorldState, geom: TrackGeometry,
                   collision_radius: float = DEFAULT_COLLISION_RADIUS,
                   target_laps: int = 1) -> Status:
    rel = track_relative_pose(geom, state.ego)
    if abs(rel.track_pos) > 1.0:
        return Status.OFF_TRACK
    for opp in state.opponents:
        if math.hypot(opp.pose.x - state.ego.x,
                      opp.pose.y - state.ego.y) < collision_radius:
            return Status.COLLIDED
    if state.lap_count >= target_laps:
        return Status.LAP_DONE
    return Status.RUNNING
