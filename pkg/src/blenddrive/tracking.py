"""Centerline path tracking: proportional steering on heading and lateral
error, plus a speed rule that slows down when the steering demand is high."""
from __future__ import annotations

from dataclasses import dataclass

from .command import Command, clamp


@dataclass(frozen=True)
class TrackingConfig:
    eta1: float = 3.18   # gain on heading error, 1/rad
    eta2: float = 2.0    # gain on lateral offset, 1/m
    v_ref: float = 20.0  # cruise speed, m/s
    v_min: float = 5.0   # slowdown floor, m/s
    k_slow: float = 0.6  # speed reduction per unit |steer|
    k_speed: float = 2.0 # proportional throttle gain

    def validate(self) -> None:
        if self.eta1 <= 0.0 or self.eta2 <= 0.0:
            raise ValueError("steering gains must be positive")
        if self.v_ref <= 0.0:
            raise ValueError("v_ref must be positive")


def tracking_steer(delta_psi: float, e: float, cfg: TrackingConfig) -> float:
    """Both error terms are corrective under the package sign conventions:
    positive delta_psi or e (vehicle right of center) steers left."""
    return clamp(cfg.eta1 * delta_psi + cfg.eta2 * e)


def tracking_accel(steer: float, speed: float, cfg: TrackingConfig) -> float:
    v_target = max(cfg.v_ref * (1.0 - cfg.k_slow * abs(steer)), cfg.v_min)
    return clamp(cfg.k_speed * (v_target - speed) / cfg.v_ref)


def tracking_act(delta_psi: float, e: float, speed: float,
                 cfg: TrackingConfig) -> Command:
    steer = tracking_steer(delta_psi, e, cfg)
    return Command(steer, tracking_accel(steer, speed, cfg))
