"""Run configuration: flat `key = value` files with dotted section prefixes,
overridable from the command line."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, replace

from .apf import APFConfig
from .blend import BlendWeights, validate_weights
from .ddpg import PROFILES, TrainerConfig
from .track import PhysicsConfig
from .tracking import TrackingConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsConfig = PhysicsConfig()
    trainer: TrainerConfig = TrainerConfig()
    apf: APFConfig = APFConfig()
    tracking: TrackingConfig = TrackingConfig()
    weights: BlendWeights = BlendWeights()
    track: str = "oval"
    seed: int = 0
    out_dir: str = "runs"


_SECTIONS = {
    "physics": PhysicsConfig,
    "trainer": TrainerConfig,
    "apf": APFConfig,
    "tracking": TrackingConfig,
    "weights": BlendWeights,
}


def default_out_dir() -> str:
    return os.environ.get("BLENDDRIVE_OUT", "runs")


def default_config() -> RunConfig:
    return RunConfig(out_dir=default_out_dir())


def read_config_file(path: str) -> dict[str, str]:
    settings: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`")
            key, value = line.split("=", 1)
            settings[key.strip()] = value.strip()
    return settings


def _convert(raw: str, target_type) -> object:
    if target_type is float:
        return float(raw)
    if target_type is int:
        return int(raw)
    if target_type is str:
        return raw
    if target_type is bool:
        return raw.lower() in ("1", "true", "yes")
    # tuple of ints (hidden layer sizes)
    return tuple(int(v) for v in raw.replace(",", " ").split())


def apply_setting(cfg: RunConfig, key: str, raw: str) -> RunConfig:
    if "." in key:
        section, name = key.split(".", 1)
        cls = _SECTIONS.get(section)
        if cls is None:
            raise ConfigError(f"unknown config section {section!r}")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        if name not in fields:
            raise ConfigError(f"unknown key {key!r}")
        sub = getattr(cfg, section)
        current = getattr(sub, name)
        target_type = type(current) if current is not None else str
        try:
            value = _convert(raw, target_type)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
        return replace(cfg, **{section: replace(sub, **{name: value})})
    if key == "track":
        return replace(cfg, track=raw)
    if key == "seed":
        return replace(cfg, seed=int(raw))
    if key == "out_dir":
        return replace(cfg, out_dir=raw)
    raise ConfigError(f"unknown key {key!r}")


def apply_settings(cfg: RunConfig, settings: dict[str, str]) -> RunConfig:
    for key, raw in settings.items():
        cfg = apply_setting(cfg, key, raw)
    return cfg


def apply_profile(cfg: RunConfig, profile: str) -> RunConfig:
    """tiny: small networks and a gentle speed cap; full: 400/300 layers."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choices: "
                          f"{sorted(PROFILES)}")
    cfg = replace(cfg, trainer=replace(cfg.trainer,
                                       hidden_sizes=PROFILES[profile]))
    if profile == "tiny":
        cfg = replace(cfg, physics=replace(cfg.physics, v_max=25.0))
    return cfg


def finalize(cfg: RunConfig) -> RunConfig:
    """Propagate the master seed and validate every section."""
    cfg = replace(cfg, trainer=replace(cfg.trainer, seed=cfg.seed))
    try:
        cfg.trainer.validate()
        cfg.apf.validate()
        cfg.tracking.validate()
        validate_weights(cfg.weights)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.physics.dt <= 0.0 or cfg.physics.v_max <= 0.0:
        raise ConfigError("physics dt and v_max must be positive")
    return cfg
