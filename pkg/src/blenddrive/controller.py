"""Composition of the three methods into one blended driving controller."""
from __future__ import annotations

from dataclasses import dataclass

from . import nn
from .apf import APFConfig, apf_act
from .blend import BlendWeights, MethodCommands, blend
from .command import Command
from .ddpg import policy_act
from .scr import SensorMessage
from .sensors import N_RAYS, N_SECTORS, RANGE_MAX, SensorFrame
from .track import DEFAULT_PHYSICS, PhysicsConfig
from .tracking import TrackingConfig, tracking_act


@dataclass
class BlendedController:
    """Computes per-method commands for a sensor frame and their blend.

    half_width converts the normalized track position back to a lateral
    offset in meters for the path-tracking law.
    """

    actor: nn.NetworkParams
    apf_cfg: APFConfig
    tracking_cfg: TrackingConfig
    weights: BlendWeights
    half_width: float
    phys: PhysicsConfig = DEFAULT_PHYSICS

    def method_commands(self, frame: SensorFrame) -> MethodCommands:
        e = frame.track_pos * self.half_width
        return MethodCommands(
            learn=policy_act(self.actor, frame, self.phys),
            apf=apf_act(frame.opponents, self.apf_cfg),
            track=tracking_act(frame.angle, e, frame.speed, self.tracking_cfg),
        )

    def act(self, frame: SensorFrame) -> Command:
        return blend(self.method_commands(frame), self.weights)

    def act_message(self, msg: SensorMessage) -> Command:
        return self.act(frame_from_message(msg))


def frame_from_message(msg: SensorMessage) -> SensorFrame:
    """SensorFrame from a wire message; absent groups fall back to neutral
    values (zero speeds/angles, nothing detected)."""
    speed = msg.speed_x if msg.speed_x is not None else 0.0
    wheels = msg.wheel_spin_vel or (speed,) * 4
    return SensorFrame(
        track_rays=msg.track or (RANGE_MAX,) * N_RAYS,
        opponents=msg.opponents or (RANGE_MAX,) * N_SECTORS,
        speed=speed,
        wheel_speeds=tuple(wheels),
        engine_rpm=msg.rpm if msg.rpm is not None else 0.0,
        track_pos=msg.track_pos if msg.track_pos is not None else 0.0,
        angle=msg.angle if msg.angle is not None else 0.0,
        t=0.0,
    )
