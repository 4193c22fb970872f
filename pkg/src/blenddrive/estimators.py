"""scikit-learn style wrappers so the controllers compose with pipelines.

Each estimator maps feature rows to (steer, accel) command rows:

  * ``PotentialFieldPolicy``: rows of 36 opponent sector distances
  * ``PathTrackingPolicy``: rows of [heading_error, lateral_offset, speed]
  * ``DDPGDrivingPolicy``: rows of the normalized 29-value state; ``fit``
    trains on the built-in track
  * ``CommandBlender``: rows of the six stacked method commands
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import ddpg, nn
from .apf import APFConfig, apf_act
from .blend import BlendWeights, validate_weights
from .sensors import N_SECTORS, STATE_DIM
from .track import PhysicsConfig, builtin_track
from .tracking import TrackingConfig, tracking_accel, tracking_steer


class PotentialFieldPolicy(BaseEstimator):
    def __init__(self, k_fx=20.0, k_fy=10.0, eta=1.5, d_cut=50.0):
        self.k_fx = k_fx
        self.k_fy = k_fy
        self.eta = eta
        self.d_cut = d_cut

    def fit(self, X=None, y=None):
        config = APFConfig(self.k_fx, self.k_fy, self.eta, self.d_cut)
        config.validate()
        self.config_ = config
        return self

    def predict(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X, ensure_min_features=N_SECTORS)
        if X.shape[1] != N_SECTORS:
            raise ValueError(f"expected {N_SECTORS} sector columns")
        out = np.empty((X.shape[0], 2))
        for i, row in enumerate(X):
            cmd = apf_act(tuple(row), self.config_)
            out[i] = (cmd.steer, cmd.accel)
        return out


class PathTrackingPolicy(BaseEstimator):
    def __init__(self, eta1=3.18, eta2=2.0, v_ref=20.0, v_min=5.0,
                 k_slow=0.6, k_speed=2.0):
        self.eta1 = eta1
        self.eta2 = eta2
        self.v_ref = v_ref
        self.v_min = v_min
        self.k_slow = k_slow
        self.k_speed = k_speed

    def fit(self, X=None, y=None):
        config = TrackingConfig(self.eta1, self.eta2, self.v_ref, self.v_min,
                                self.k_slow, self.k_speed)
        config.validate()
        self.config_ = config
        return self

    def predict(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X)
        if X.shape[1] != 3:
            raise ValueError("expected columns [heading_error, lateral_offset, speed]")
        out = np.empty((X.shape[0], 2))
        for i, (dpsi, e, speed) in enumerate(X):
            steer = tracking_steer(dpsi, e, self.config_)
            out[i] = (steer, tracking_accel(steer, speed, self.config_))
        return out


class DDPGDrivingPolicy(BaseEstimator):
    """Trains on the built-in opponent-free track; predicts actions for
    normalized state rows. ``fit`` ignores X/y."""

    def __init__(self, track="oval", total_steps=2000, seed=0,
                 hidden_sizes=(32, 32), v_max=25.0):
        self.track = track
        self.total_steps = total_steps
        self.seed = seed
        self.hidden_sizes = hidden_sizes
        self.v_max = v_max

    def fit(self, X=None, y=None):
        cfg = ddpg.TrainerConfig(total_steps=self.total_steps, seed=self.seed,
                                 hidden_sizes=tuple(self.hidden_sizes))
        cfg.validate()
        phys = PhysicsConfig(v_max=self.v_max)
        env = ddpg.DrivingEnv(builtin_track(self.track), phys)
        result = ddpg.train(cfg, env)
        self.actor_ = result.actor
        self.critic_ = result.critic
        self.metrics_ = result.metrics
        return self

    def load(self, checkpoint_path):
        """Adopt a pre-trained actor instead of fitting."""
        self.actor_ = ddpg.load_actor(checkpoint_path)
        return self

    def predict(self, X):
        check_is_fitted(self, "actor_")
        X = check_array(X)
        if X.shape[1] != STATE_DIM:
            raise ValueError(f"expected {STATE_DIM} state columns")
        out, _ = nn.mlp_forward(self.actor_, X)
        return np.clip(out, -1.0, 1.0)


class CommandBlender(BaseEstimator):
    """Convex blend of stacked method commands.

    Rows are [steer_l, accel_l, steer_f, accel_f, steer_p, accel_p].
    """

    def __init__(self, alpha=0.4, beta=0.3, gamma_w=0.3):
        self.alpha = alpha
        self.beta = beta
        self.gamma_w = gamma_w

    def fit(self, X=None, y=None):
        weights = BlendWeights(self.alpha, self.beta, self.gamma_w)
        validate_weights(weights)
        self.weights_ = weights
        return self

    def predict(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        if X.shape[1] != 6:
            raise ValueError("expected 6 command columns")
        w = self.weights_
        steer = w.alpha * X[:, 0] + w.beta * X[:, 2] + w.gamma_w * X[:, 4]
        accel = w.alpha * X[:, 1] + w.beta * X[:, 3] + w.gamma_w * X[:, 5]
        return np.column_stack([steer, accel])
