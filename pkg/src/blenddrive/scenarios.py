"""Scenario library and rollout logging for the four qualitative driving
situations: A curve alone, B opponent ahead, C opponent close on the left,
D curve with two opponents while off-center."""
from __future__ import annotations

import os
from dataclasses import dataclass

from . import nn
from .config import RunConfig
from .controller import BlendedController
from .sensors import sensor_frame
from .track import (Opponent, OpponentScript, Status, WorldState,
                    builtin_track, episode_status, pose_at, step,
                    track_relative_pose)


@dataclass(frozen=True)
class OpponentSpec:
    s_offset: float
    e_offset: float
    speed: float


@dataclass(frozen=True)
class Scenario:
    id: str
    track: str
    start_s: float
    start_e: float
    start_speed: float
    opponents: tuple[OpponentSpec, ...]
    duration: float  # seconds


SCENARIOS = {
    # on the first arc of the oval, nobody around
    "A": Scenario("A", "oval", 110.0, 0.0, 15.0, (), 5.0),
    # one opponent 20 m ahead on the straight
    "B": Scenario("B", "oval", 20.0, 0.0, 15.0,
                  (OpponentSpec(20.0, 0.0, 15.0),), 5.0),
    # one opponent much closer, front-left
    "C": Scenario("C", "oval", 20.0, 0.0, 15.0,
                  (OpponentSpec(6.0, -2.0, 15.0),), 5.0),
    # curve, two opponents, ego well right of center
    "D": Scenario("D", "oval", 110.0, 3.5, 12.0,
                  (OpponentSpec(12.0, -2.5, 12.0),
                   OpponentSpec(18.0, 2.5, 12.0)), 5.0),
}


@dataclass(frozen=True)
class LogRow:
    t: float
    x: float
    y: float
    heading: float
    speed: float
    s: float
    e: float
    track_pos: float
    angle: float
    min_ray: float
    min_opp: float
    delta_l: float
    tau_l: float
    delta_f: float
    tau_f: float
    delta_p: float
    tau_p: float
    delta: float
    tau: float
    status: str


LOG_COLUMNS = ("t", "x", "y", "heading", "speed", "s", "e", "track_pos",
               "angle", "min_ray", "min_opp", "delta_l", "tau_l", "delta_f",
               "tau_f", "delta_p", "tau_p", "delta", "tau", "status")


class ScenarioError(ValueError):
    pass


def initial_world(sc: Scenario, cfg: RunConfig) -> WorldState:
    geom = builtin_track(sc.track)
    ego = pose_at(geom, sc.start_s, sc.start_e, 0.0, sc.start_speed)
    if abs(sc.start_e) > geom.half_width:
        raise ScenarioError(f"scenario {sc.id}: start is off track")
    opponents = tuple(
        Opponent(pose_at(geom, sc.start_s + o.s_offset, o.e_offset, 0.0, o.speed),
                 OpponentScript(o.speed, o.e_offset))
        for o in sc.opponents)
    return WorldState(ego, opponents)


def run_scenario(sc: Scenario, cfg: RunConfig,
                 actor: nn.NetworkParams) -> list[LogRow]:
    """Roll the blended controller through the scenario, logging every step."""
    geom = builtin_track(sc.track)
    state = initial_world(sc, cfg)
    controller = BlendedController(actor, cfg.apf, cfg.tracking, cfg.weights,
                                   geom.half_width, cfg.physics)
    rows: list[LogRow] = []
    n_steps = int(round(sc.duration / cfg.physics.dt))
    for _ in range(n_steps):
        frame = sensor_frame(state, geom)
        rel = track_relative_pose(geom, state.ego)
        cmds = controller.method_commands(frame)
        blended = controller.act(frame)
        status = episode_status(state, geom)
        rows.append(LogRow(
            state.t, state.ego.x, state.ego.y, state.ego.heading,
            state.ego.speed, rel.s, rel.e, rel.track_pos, rel.delta_psi,
            min(frame.track_rays), min(frame.opponents),
            cmds.learn.steer, cmds.learn.accel,
            cmds.apf.steer, cmds.apf.accel,
            cmds.track.steer, cmds.track.accel,
            blended.steer, blended.accel, status.value))
        if status in (Status.OFF_TRACK, Status.COLLIDED):
            break
        state = step(state, blended, geom, cfg.physics.dt, cfg.physics)
    return rows


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        return "%.9g" % v
    return str(v)


def export_csv(rows: list[LogRow], path: str,
               extra_columns: dict[str, str] | None = None) -> None:
    """One row per step, floats at 9 significant digits, fixed column order."""
    extra = extra_columns or {}
    header = list(extra) + list(LOG_COLUMNS)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            values = list(extra.values()) + [
                _cell(getattr(row, c)) for c in LOG_COLUMNS]
            fh.write(",".join(values) + "\n")


def export_combined_csv(logs: dict[str, list[LogRow]], path: str) -> None:
    """All scenarios in one per-method command file, keyed by scenario id."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    columns = ("scenario", "t", "delta_l", "delta_f", "delta_p", "delta",
               "tau_l", "tau_f", "tau_p", "tau")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for sid in sorted(logs):
            for row in logs[sid]:
                fh.write(",".join([sid] + [_cell(getattr(row, c))
                                           for c in columns[1:]]) + "\n")
