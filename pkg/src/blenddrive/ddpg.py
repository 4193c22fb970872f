"""Learned driving policy: replay buffer, OU exploration, reward,
actor-critic updates with target networks, training loop and inference."""
from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import nn
from .command import Command, clamp
from .sensors import STATE_DIM, SensorFrame, normalize_state, sensor_frame
from .track import (DEFAULT_PHYSICS, PhysicsConfig, Status, TrackGeometry,
                    TrackRelativePose, VehiclePose, WorldState, episode_status,
                    pose_at, step, track_relative_pose)

ACTION_DIM = 2
MPS_TO_KMH = 3.6


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring with uniform sampling (with replacement)."""

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._storage: list[Transition] = []
        self._next = 0
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._storage)

    def push(self, t: Transition) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(t)
        else:
            self._storage[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def sample(self, n: int) -> list[Transition]:
        if not self._storage:
            raise ValueError("sample from empty buffer")
        idx = self._rng.integers(0, len(self._storage), size=n)
        return [self._storage[i] for i in idx]


@dataclass(frozen=True)
class TrainerConfig:
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.99
    batch: int = 64
    tau_soft: float = 1e-3
    capacity: int = 100_000
    warmup: int = 1000
    theta_ou: float = 0.15
    sigma_ou: float = 0.2
    ou_dt: float = 1.0
    total_steps: int = 50_000
    episode_steps: int = 400
    eval_steps: int = 2500
    start_speed: float = 10.0
    seed: int = 0
    reward_scale: float = 150.0
    hidden_sizes: tuple[int, ...] = (32, 32)

    def validate(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not 0.0 < self.tau_soft <= 1.0:
            raise ValueError("tau_soft must be in (0, 1]")


# network profiles; "full" uses the large 400/300 hidden layout
PROFILES = {"tiny": (32, 32), "full": (400, 300)}


def build_actor(cfg: TrainerConfig, rng: np.random.Generator) -> nn.NetworkParams:
    return nn.init_mlp([STATE_DIM, *cfg.hidden_sizes, ACTION_DIM],
                       hidden_activation="relu", output_activation="tanh",
                       rng=rng)


def build_critic(cfg: TrainerConfig, rng: np.random.Generator) -> nn.NetworkParams:
    # action joins the state at the first layer
    return nn.init_mlp([STATE_DIM + ACTION_DIM, *cfg.hidden_sizes, 1],
                       hidden_activation="relu", output_activation="identity",
                       rng=rng)


# --------------------------------------------------------------------------
# Reward
# --------------------------------------------------------------------------

def reward(rel: TrackRelativePose, speed: float,
           reward_scale: float = 150.0) -> float:
    """Forward speed (km/h) projected on the track direction, scaled and
    clamped to [0, 2]; never negative."""
    raw = speed * MPS_TO_KMH * math.cos(rel.delta_psi) / reward_scale
    return min(max(raw, 0.0), 2.0)


# --------------------------------------------------------------------------
# Exploration noise
# --------------------------------------------------------------------------

def ou_step(noise: np.ndarray, cfg: TrainerConfig,
            rng: np.random.Generator) -> np.ndarray:
    """Mean-zero Ornstein-Uhlenbeck recurrence."""
    return (noise + cfg.theta_ou * (0.0 - noise) * cfg.ou_dt
            + cfg.sigma_ou * math.sqrt(cfg.ou_dt) * rng.standard_normal(noise.shape))


def explore_action(actor: nn.NetworkParams, s: np.ndarray, noise: np.ndarray,
                   cfg: TrainerConfig,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    noise = ou_step(noise, cfg, rng)
    a, _ = nn.mlp_forward(actor, s)
    return np.clip(a + noise, -1.0, 1.0), noise


# --------------------------------------------------------------------------
# Updates
# --------------------------------------------------------------------------

def _stack(batch: list[Transition]):
    s = np.stack([t.s for t in batch])
    a = np.stack([t.a for t in batch])
    r = np.array([t.r for t in batch])
    s2 = np.stack([t.s_next for t in batch])
    done = np.array([t.terminal for t in batch], dtype=np.float64)
    return s, a, r, s2, done


def critic_update(online_q: nn.NetworkParams, q_opt: nn.AdamState,
                  target_q: nn.NetworkParams, target_mu: nn.NetworkParams,
                  batch: list[Transition], cfg: TrainerConfig
                  ) -> tuple[nn.NetworkParams, nn.AdamState, float, float]:
    """One TD step toward y = r + gamma * Q_target(s', mu_target(s')).

    Returns (params, opt state, loss, mean online Q on the batch).
    """
    s, a, r, s2, done = _stack(batch)
    n = len(batch)
    a2, _ = nn.mlp_forward(target_mu, s2)
    q_next, _ = nn.mlp_forward(target_q, np.hstack([s2, a2]))
    y = r + cfg.gamma * (1.0 - done) * q_next[:, 0]
    q, tape = nn.mlp_forward(online_q, np.hstack([s, a]))
    diff = q[:, 0] - y
    loss = float(np.mean(diff ** 2))
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite critic loss")
    grads = nn.mlp_backward(online_q, tape, (2.0 * diff / n).reshape(-1, 1))
    online_q, q_opt = nn.adam_step(online_q, grads, cfg.critic_lr, q_opt)
    return online_q, q_opt, loss, float(np.mean(q))


def actor_update(online_mu: nn.NetworkParams, mu_opt: nn.AdamState,
                 online_q: nn.NetworkParams, batch: list[Transition],
                 cfg: TrainerConfig) -> tuple[nn.NetworkParams, nn.AdamState]:
    """Ascend the batch-mean Q(s, mu(s)) by chaining the critic's action
    gradient through the actor."""
    s, *_ = _stack(batch)
    n = s.shape[0]
    a, mu_tape = nn.mlp_forward(online_mu, s)
    _, q_tape = nn.mlp_forward(online_q, np.hstack([s, a]))
    q_grads = nn.mlp_backward(online_q, q_tape, np.full((n, 1), 1.0 / n))
    dq_da = q_grads.input_grad[:, online_mu.input_dim:]
    mu_grads = nn.mlp_backward(online_mu, mu_tape, dq_da)
    # Adam descends, so feed the negated gradient to maximize
    return nn.adam_step(online_mu, nn.scale_gradients(mu_grads, -1.0),
                        cfg.actor_lr, mu_opt)


def soft_update(target: nn.NetworkParams, online: nn.NetworkParams,
                tau: float) -> nn.NetworkParams:
    if len(target.layers) != len(online.layers):
        raise nn.ShapeError("network layer counts differ")
    layers = []
    for t, o in zip(target.layers, online.layers):
        if t.weights.shape != o.weights.shape:
            raise nn.ShapeError("layer shapes differ")
        layers.append(nn.DenseLayer((1.0 - tau) * t.weights + tau * o.weights,
                                    (1.0 - tau) * t.bias + tau * o.bias,
                                    t.activation))
    return nn.NetworkParams(tuple(layers))


# --------------------------------------------------------------------------
# Environment wrapper around the built-in world
# --------------------------------------------------------------------------

class DrivingEnv:
    """Single-vehicle episode driver used for training and evaluation."""

    def __init__(self, geom: TrackGeometry, phys: PhysicsConfig = DEFAULT_PHYSICS,
                 reward_scale: float = 150.0):
        self.geom = geom
        self.phys = phys
        self.reward_scale = reward_scale
        self.state: WorldState | None = None

    def reset(self, start_s: float = 0.0, start_e: float = 0.0,
              speed: float = 10.0) -> np.ndarray:
        ego = pose_at(self.geom, start_s, start_e, 0.0, speed)
        self.state = WorldState(ego)
        return normalize_state(sensor_frame(self.state, self.geom), self.phys)

    def frame(self) -> SensorFrame:
        return sensor_frame(self.state, self.geom)

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, Status]:
        cmd = Command(float(action[0]), float(action[1]))
        self.state = step(self.state, cmd, self.geom, self.phys.dt, self.phys)
        rel = track_relative_pose(self.geom, self.state.ego)
        status = episode_status(self.state, self.geom)
        r = reward(rel, self.state.ego.speed, self.reward_scale)
        done = status in (Status.OFF_TRACK, Status.COLLIDED)
        obs = normalize_state(sensor_frame(self.state, self.geom), self.phys)
        return obs, r, done, status


# --------------------------------------------------------------------------
# Training loop
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    steps: int
    episode_return: float
    avg_q: float
    loss: float


@dataclass
class TrainResult:
    actor: nn.NetworkParams
    critic: nn.NetworkParams
    metrics: list[EpisodeMetrics]


def train(cfg: TrainerConfig, env: DrivingEnv) -> TrainResult:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    actor = build_actor(cfg, np.random.default_rng(rng.integers(2 ** 63)))
    critic = build_critic(cfg, np.random.default_rng(rng.integers(2 ** 63)))
    target_mu, target_q = actor, critic
    mu_opt, q_opt = nn.adam_init(actor), nn.adam_init(critic)
    buffer = ReplayBuffer(cfg.capacity, seed=int(rng.integers(2 ** 63)))

    metrics: list[EpisodeMetrics] = []
    total = 0
    episode = 0
    while total < cfg.total_steps:
        start_s = float(rng.uniform(0.0, env.geom.total_length))
        obs = env.reset(start_s=start_s, speed=cfg.start_speed)
        noise = np.zeros(ACTION_DIM)
        ep_return = 0.0
        q_sum = loss_sum = 0.0
        n_updates = 0
        steps_this = 0
        for _ in range(cfg.episode_steps):
            a, noise = explore_action(actor, obs, noise, cfg, rng)
            obs2, r, done, _ = env.step(a)
            buffer.push(Transition(obs, a, r, obs2, done))
            obs = obs2
            ep_return += r
            total += 1
            steps_this += 1
            if len(buffer) >= cfg.warmup:
                batch = buffer.sample(cfg.batch)
                critic, q_opt, loss, q_mean = critic_update(
                    critic, q_opt, target_q, target_mu, batch, cfg)
                actor, mu_opt = actor_update(actor, mu_opt, critic, batch, cfg)
                target_q = soft_update(target_q, critic, cfg.tau_soft)
                target_mu = soft_update(target_mu, actor, cfg.tau_soft)
                q_sum += q_mean
                loss_sum += loss
                n_updates += 1
            if done or total >= cfg.total_steps:
                break
        episode += 1
        metrics.append(EpisodeMetrics(
            episode, steps_this, ep_return,
            q_sum / n_updates if n_updates else 0.0,
            loss_sum / n_updates if n_updates else 0.0))
    return TrainResult(actor, critic, metrics)


def policy_act(actor: nn.NetworkParams, frame: SensorFrame,
               phys: PhysicsConfig = DEFAULT_PHYSICS) -> Command:
    """Deterministic trained-policy command for one sensor frame."""
    a, _ = nn.mlp_forward(actor, normalize_state(frame, phys))
    return Command(clamp(float(a[0])), clamp(float(a[1])))


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalSummary:
    episodes: int
    completed: int
    off_track: int
    mean_return: float

    @property
    def completion_rate(self) -> float:
        return self.completed / self.episodes if self.episodes else 0.0


def evaluate(actor: nn.NetworkParams, env: DrivingEnv, episodes: int,
             seed: int, cfg: TrainerConfig) -> EvalSummary:
    """Noise-free rollouts from seeded random starts; an episode counts as
    completed when a full lap finishes without leaving the track."""
    rng = np.random.default_rng(seed)
    completed = off_track = 0
    returns = []
    for _ in range(episodes):
        start_s = float(rng.uniform(0.0, env.geom.total_length))
        obs = env.reset(start_s=start_s, speed=cfg.start_speed)
        ep_return = 0.0
        for _ in range(cfg.eval_steps):
            a, _ = nn.mlp_forward(actor, obs)
            obs, r, done, status = env.step(np.clip(a, -1.0, 1.0))
            ep_return += r
            if done:
                off_track += 1
                break
            if status is Status.LAP_DONE:
                completed += 1
                break
        returns.append(ep_return)
    return EvalSummary(episodes, completed, off_track,
                       float(np.mean(returns)) if returns else 0.0)


# --------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------

def config_hash(cfg: TrainerConfig) -> str:
    text = ",".join(f"{k}={v!r}" for k, v in sorted(asdict(cfg).items()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def save_checkpoint(directory: str, result: TrainResult, cfg: TrainerConfig,
                    steps: int) -> None:
    os.makedirs(directory, exist_ok=True)
    nn.save_params(result.actor, os.path.join(directory, "actor.mlpv1"))
    nn.save_params(result.critic, os.path.join(directory, "critic.mlpv1"))
    with open(os.path.join(directory, "meta.txt"), "w") as fh:
        fh.write(f"steps={steps}\n")
        fh.write(f"seed={cfg.seed}\n")
        fh.write(f"config_hash={config_hash(cfg)}\n")


def load_actor(path: str) -> nn.NetworkParams:
    """Load an actor from a checkpoint directory or a bare mlpv1 file."""
    if os.path.isdir(path):
        path = os.path.join(path, "actor.mlpv1")
    actor = nn.load_params(path)
    if actor.input_dim != STATE_DIM:
        raise ValueError(f"checkpoint state width {actor.input_dim} != "
                         f"expected {STATE_DIM}")
    return actor
