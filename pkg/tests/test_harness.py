import os

import numpy as np
import pytest

from blenddrive import ddpg, nn
from blenddrive.config import (ConfigError, apply_profile, apply_setting,
                               apply_settings, default_config, finalize,
                               read_config_file)
from blenddrive.scenarios import (SCENARIOS, ScenarioError, export_csv,
                                  export_combined_csv, initial_world,
                                  run_scenario)

DATA = os.path.join(os.path.dirname(__file__), "data")
CHECKPOINT = os.path.join(DATA, "toy_checkpoint")


@pytest.fixture(scope="module")
def toy_actor():
    return ddpg.load_actor(CHECKPOINT)


@pytest.fixture(scope="module")
def cfg():
    return finalize(apply_profile(default_config(), "tiny"))


# -- config -------------------------------------------------------------------

def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("apf.k_fx = 25\nweights.alpha = 0.5\n"
                    "weights.beta = 0.25\nweights.gamma_w = 0.25\n"
                    "seed = 7\n# comment\n")
    cfg = apply_settings(default_config(), read_config_file(str(path)))
    assert cfg.apf.k_fx == 25.0
    assert cfg.weights.alpha == 0.5
    assert cfg.seed == 7
    cfg = apply_setting(cfg, "apf.k_fx", "30")
    assert cfg.apf.k_fx == 30.0
    cfg = finalize(cfg)
    assert cfg.trainer.seed == 7


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown"):
        apply_setting(default_config(), "apf.bogus", "1")


def test_config_rejects_bad_weights():
    cfg = apply_setting(default_config(), "weights.alpha", "0.9")
    with pytest.raises(ConfigError, match="sum"):
        finalize(cfg)


def test_profile_sizes():
    tiny = apply_profile(default_config(), "tiny")
    assert tiny.trainer.hidden_sizes == (32, 32)
    full = apply_profile(default_config(), "full")
    assert full.trainer.hidden_sizes == (400, 300)


# -- scenarios ----------------------------------------------------------------

def test_scenario_library_shape():
    assert sorted(SCENARIOS) == ["A", "B", "C", "D"]
    assert SCENARIOS["A"].opponents == ()
    assert len(SCENARIOS["B"].opponents) == 1
    assert len(SCENARIOS["D"].opponents) == 2
    assert SCENARIOS["D"].start_e != 0.0


def test_scenario_starts_on_track(cfg):
    for sc in SCENARIOS.values():
        world = initial_world(sc, cfg)
        assert abs(sc.start_e) <= 8.0
        assert world.opponents is not None


def test_scenario_a_apf_columns_zero(cfg, toy_actor):
    rows = run_scenario(SCENARIOS["A"], cfg, toy_actor)
    assert len(rows) > 10
    assert all(r.delta_f == 0.0 and r.tau_f == 0.0 for r in rows)


def test_scenario_c_apf_exceeds_b(cfg, toy_actor):
    rows_b = run_scenario(SCENARIOS["B"], cfg, toy_actor)
    rows_c = run_scenario(SCENARIOS["C"], cfg, toy_actor)
    peak = lambda rows: max(max(abs(r.delta_f), abs(r.tau_f)) for r in rows)
    assert peak(rows_c) > peak(rows_b)


def test_scenario_d_tracking_dominates_at_start(cfg, toy_actor):
    row = run_scenario(SCENARIOS["D"], cfg, toy_actor)[0]
    assert abs(row.delta_p) > abs(row.delta_l)
    assert abs(row.delta_p) > abs(row.delta_f)


def test_blended_command_is_convex_combination(cfg, toy_actor):
    for sc in SCENARIOS.values():
        for r in run_scenario(sc, cfg, toy_actor):
            lo = min(r.delta_l, r.delta_f, r.delta_p)
            hi = max(r.delta_l, r.delta_f, r.delta_p)
            assert lo - 1e-12 <= r.delta <= hi + 1e-12


def test_scenario_off_track_start_rejected(cfg):
    import dataclasses
    bad = dataclasses.replace(SCENARIOS["A"], start_e=50.0)
    with pytest.raises(ScenarioError, match="off track"):
        initial_world(bad, cfg)


# -- CSV export ----------------------------------------------------------------

def test_export_empty_log_header_only(tmp_path):
    path = str(tmp_path / "empty.csv")
    export_csv([], path)
    lines = open(path).read().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("t,x,y")


def test_export_row_count_and_determinism(tmp_path, cfg, toy_actor):
    rows = run_scenario(SCENARIOS["A"], cfg, toy_actor)
    p1, p2 = str(tmp_path / "a1.csv"), str(tmp_path / "a2.csv")
    export_csv(rows, p1)
    export_csv(rows, p2)
    b1, b2 = open(p1, "rb").read(), open(p2, "rb").read()
    assert b1 == b2
    assert len(b1.splitlines()) == len(rows) + 1


def test_export_combined(tmp_path, cfg, toy_actor):
    logs = {sid: run_scenario(sc, cfg, toy_actor)
            for sid, sc in SCENARIOS.items()}
    path = str(tmp_path / "combined.csv")
    export_combined_csv(logs, path)
    lines = open(path).read().splitlines()
    assert lines[0].startswith("scenario,t,delta_l")
    assert len(lines) == 1 + sum(len(v) for v in logs.values())


# -- eval plumbing ---------------------------------------------------------------

def test_zero_policy_never_completes(cfg):
    actor = nn.NetworkParams((
        nn.DenseLayer(np.zeros((8, 29)), np.zeros(8), "relu"),
        nn.DenseLayer(np.zeros((2, 8)), np.zeros(2), "tanh")))
    from blenddrive.track import builtin_track
    env = ddpg.DrivingEnv(builtin_track("oval"), cfg.physics)
    trainer = ddpg.TrainerConfig(eval_steps=300, start_speed=0.0)
    summary = ddpg.evaluate(actor, env, 3, 0, trainer)
    assert summary.completed == 0
