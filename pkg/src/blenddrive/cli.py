"""Command-line entry points: train, eval, scenario, serve-scr, drive-scr,
check-gradients. Exit codes: 0 success, 1 validation error, 2 runtime failure."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import ddpg, nn
from .config import (ConfigError, RunConfig, apply_profile, apply_setting,
                     apply_settings, default_config, finalize,
                     read_config_file)
from .controller import BlendedController
from .scenarios import SCENARIOS, export_csv, run_scenario
from .scr import run_client, run_server
from .track import TrackError, builtin_track, load_track_file

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _load_geom(name: str):
    if os.path.exists(name):
        return load_track_file(name)
    return builtin_track(name)


def _build_config(args) -> RunConfig:
    cfg = default_config()
    if getattr(args, "config", None):
        cfg = apply_settings(cfg, read_config_file(args.config))
    if getattr(args, "profile", None):
        cfg = apply_profile(cfg, args.profile)
    for setting in getattr(args, "set", None) or []:
        if "=" not in setting:
            raise ConfigError(f"--set expects key=value, got {setting!r}")
        key, value = setting.split("=", 1)
        cfg = apply_setting(cfg, key.strip(), value.strip())
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "track", None):
        cfg = replace(cfg, track=args.track)
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "steps", None) is not None:
        cfg = replace(cfg, trainer=replace(cfg.trainer, total_steps=args.steps))
    return finalize(cfg)


def _write_metrics(metrics, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("episode,steps,return,avg_q,loss\n")
        for m in metrics:
            fh.write("%d,%d,%.9g,%.9g,%.9g\n"
                     % (m.episode, m.steps, m.episode_return, m.avg_q, m.loss))


def cmd_train(args) -> int:
    cfg = _build_config(args)
    geom = _load_geom(cfg.track)
    env = ddpg.DrivingEnv(geom, cfg.physics, cfg.trainer.reward_scale)
    result = ddpg.train(cfg.trainer, env)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    ddpg.save_checkpoint(os.path.join(out, "checkpoint"), result, cfg.trainer,
                         cfg.trainer.total_steps)
    _write_metrics(result.metrics, os.path.join(out, "metrics.csv"))
    print(f"trained {cfg.trainer.total_steps} steps, "
          f"{len(result.metrics)} episodes -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _build_config(args)
    actor = ddpg.load_actor(args.checkpoint)
    geom = _load_geom(cfg.track)
    env = ddpg.DrivingEnv(geom, cfg.physics, cfg.trainer.reward_scale)
    summary = ddpg.evaluate(actor, env, args.episodes, cfg.seed, cfg.trainer)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "eval_summary.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("episodes,completed,off_track,completion_rate,mean_return\n")
        fh.write("%d,%d,%d,%.9g,%.9g\n"
                 % (summary.episodes, summary.completed, summary.off_track,
                    summary.completion_rate, summary.mean_return))
    print(f"completion {summary.completed}/{summary.episodes}, "
          f"mean return {summary.mean_return:.3f}, "
          f"off-track {summary.off_track}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    cfg = _build_config(args)
    sc = SCENARIOS[args.id]
    actor = ddpg.load_actor(args.checkpoint)
    rows = run_scenario(sc, cfg, actor)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"scenario_{sc.id}.csv")
    export_csv(rows, path)
    print(f"scenario {sc.id}: {len(rows)} steps -> {path}")
    return EXIT_OK


def cmd_serve_scr(args) -> int:
    cfg = _build_config(args)
    geom = _load_geom(cfg.track)
    result = run_server(args.scr_listen, geom, cfg.physics,
                        max_steps=args.steps, timeout=args.timeout)
    print(f"served {result.steps} steps, end={result.end.value}")
    return EXIT_OK


def cmd_drive_scr(args) -> int:
    cfg = _build_config(args)
    actor = ddpg.load_actor(args.checkpoint)
    geom = builtin_track(cfg.track)
    controller = BlendedController(actor, cfg.apf, cfg.tracking, cfg.weights,
                                   geom.half_width, cfg.physics)
    host, _, port = args.scr_connect.rpartition(":")
    result = run_client(host or "127.0.0.1", int(port),
                        controller.act_message, max_steps=args.steps,
                        timeout=args.timeout)
    print(f"drove {result.steps} steps, end={result.end.value}")
    return EXIT_OK


def cmd_check_gradients(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for i in range(args.nets):
        sizes = [int(rng.integers(2, 8)) for _ in range(3)]
        act = "tanh" if i % 2 == 0 else "relu"
        params = nn.init_mlp(sizes, hidden_activation=act,
                             output_activation="tanh",
                             rng=np.random.default_rng(rng.integers(2 ** 63)))
        x = rng.uniform(-1.0, 1.0, sizes[0])
        upstream = rng.uniform(-1.0, 1.0, sizes[-1])
        err = nn.finite_diff_check(params, x, 1e-5, upstream)
        worst = max(worst, err)
    print(f"max relative gradient error over {args.nets} nets: {worst:.3e}")
    if worst >= 1e-4:
        print("FAIL: exceeds 1e-4", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blenddrive",
        description="Hybrid learned/potential-field/path-tracking driver "
                    "with a built-in 2D track simulator and SCR UDP bridge.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config entry (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--track", help="builtin track name or track file")

    p = sub.add_parser("train", help="train the driving policy (no opponents)")
    common(p)
    p.add_argument("--steps", type=int, help="total environment steps")
    p.add_argument("--profile", choices=("tiny", "full"), default="tiny")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained policy")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--profile", choices=("tiny", "full"), default="tiny")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scenario", help="run one qualitative scenario")
    common(p)
    p.add_argument("id", choices=sorted(SCENARIOS))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--profile", choices=("tiny", "full"), default="tiny")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("serve-scr", help="serve the built-in sim over UDP")
    common(p)
    p.add_argument("--scr-listen", type=int, required=True, metavar="PORT")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--timeout", type=float, default=1.0)
    p.set_defaults(func=cmd_serve_scr)

    p = sub.add_parser("drive-scr", help="drive an external SCR simulator")
    common(p)
    p.add_argument("--scr-connect", required=True, metavar="HOST:PORT")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--timeout", type=float, default=1.0)
    p.set_defaults(func=cmd_drive_scr)

    p = sub.add_parser("check-gradients", help="finite-difference self test")
    p.add_argument("--nets", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_gradients)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TrackError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
