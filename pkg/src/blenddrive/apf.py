"""Repulsive potential-field collision avoidance.

Each detected obstacle contributes a force -1/d^eta along its bearing;
the lateral (x) component maps to steering, the longitudinal (y)
component to acceleration, both through proportional gains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .command import Command, clamp
from .sensors import ObstacleReading, sector_readings

FORWARD_MIN = 0.0
FORWARD_MAX = math.pi  # rear bearings (pi, 2*pi) never contribute force


@dataclass(frozen=True)
class APFConfig:
    k_fx: float = 20.0
    k_fy: float = 10.0
    eta: float = 1.5
    d_cut: float = 50.0  # readings at or beyond this range contribute nothing

    def validate(self) -> None:
        if self.k_fx <= 0.0 or self.k_fy <= 0.0:
            raise ValueError("force gains must be positive")
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if not 0.0 < self.d_cut <= 200.0:
            raise ValueError("d_cut must be in (0, 200]")


@dataclass(frozen=True)
class RepulsiveForce:
    fx: float  # lateral, positive toward the left
    fy: float  # longitudinal, positive forward


def repulsive_force(readings: list[ObstacleReading],
                    cfg: APFConfig) -> RepulsiveForce:
    """Vector sum of per-obstacle repulsion over the forward half-plane."""
    fx = fy = 0.0
    for r in readings:
        if r.d <= 0.0:
            raise ValueError(f"obstacle distance must be positive, got {r.d}")
        if r.d >= cfg.d_cut:
            continue
        theta = r.theta % (2.0 * math.pi)
        if not FORWARD_MIN <= theta <= FORWARD_MAX:
            continue
        mag = 1.0 / r.d ** cfg.eta
        fx -= mag * math.cos(theta)
        fy -= mag * math.sin(theta)
    return RepulsiveForce(fx, fy)


def apf_command(force: RepulsiveForce, cfg: APFConfig) -> Command:
    return Command(clamp(cfg.k_fx * force.fx), clamp(cfg.k_fy * force.fy))


def apf_act(sectors: tuple[float, ...], cfg: APFConfig) -> Command:
    """Full pipeline from the 36 opponent sector distances to a command."""
    return apf_command(repulsive_force(sector_readings(sectors), cfg), cfg)
