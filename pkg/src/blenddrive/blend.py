"""Fixed-weight convex blending of the three method commands."""
from __future__ import annotations

from dataclasses import dataclass

from .command import Command

WEIGHT_SUM_TOL = 1e-12


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class BlendWeights:
    """Weights of the learned policy, the potential field and path tracking."""

    alpha: float = 0.4
    beta: float = 0.3
    gamma_w: float = 0.3


@dataclass(frozen=True)
class MethodCommands:
    learn: Command
    apf: Command
    track: Command


def validate_weights(w: BlendWeights) -> None:
    if w.alpha < 0.0 or w.beta < 0.0 or w.gamma_w < 0.0:
        raise WeightError(f"blend weights must be nonnegative: {w}")
    total = w.alpha + w.beta + w.gamma_w
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightError(f"blend weights must sum to 1, got sum={total!r}")


def blend(cmds: MethodCommands, w: BlendWeights) -> Command:
    """Convex combination; output stays in [-1, 1] without clamping."""
    validate_weights(w)
    return Command(
        w.alpha * cmds.learn.steer + w.beta * cmds.apf.steer + w.gamma_w * cmds.track.steer,
        w.alpha * cmds.learn.accel + w.beta * cmds.apf.accel + w.gamma_w * cmds.track.accel,
    )
