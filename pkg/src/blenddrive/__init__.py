"""Hybrid autonomous-driving stack: a learned DDPG policy, repulsive
potential-field collision avoidance and centerline path tracking, fused by
a fixed-weight command blender, with a built-in 2D track simulator and an
SCR-compatible UDP bridge."""

from .apf import APFConfig, RepulsiveForce, apf_command, repulsive_force
from .blend import BlendWeights, MethodCommands, blend, validate_weights
from .command import Command
from .controller import BlendedController
from .ddpg import (DrivingEnv, ReplayBuffer, TrainerConfig, Transition,
                   evaluate, policy_act, reward, train)
from .sensors import (ObstacleReading, SensorFrame, normalize_state,
                      opponent_sectors, sensor_frame, track_rays)
from .track import (PhysicsConfig, Status, TrackGeometry, TrackRelativePose,
                    VehiclePose, WorldState, build_track, builtin_track,
                    episode_status, load_track_file, pose_at, step,
                    track_relative_pose)
from .tracking import TrackingConfig, tracking_accel, tracking_steer

__version__ = "0.1.0"
