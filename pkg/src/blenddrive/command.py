"""Normalized actuation command shared by every controller."""
from __future__ import annotations

from dataclasses import dataclass


def clamp(value: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return lo if value < lo else hi if value > hi else value


@dataclass(frozen=True)
class Command:
    """One (steering, acceleration) pair, both in [-1, 1].

    Positive steer turns left; negative accel means braking.
    """

    steer: float
    accel: float

    def clamped(self) -> "Command":
        return Command(clamp(self.steer), clamp(self.accel))
