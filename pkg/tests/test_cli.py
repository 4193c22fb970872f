import os
import threading

import pytest

from blenddrive.cli import main
from blenddrive.scr import SHUTDOWN

DATA = os.path.join(os.path.dirname(__file__), "data")
CHECKPOINT = os.path.join(DATA, "toy_checkpoint")


def test_train_zero_steps_writes_checkpoint(tmp_path):
    out = str(tmp_path / "run")
    assert main(["train", "--steps", "0", "--seed", "1", "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "checkpoint", "actor.mlpv1"))
    assert os.path.exists(os.path.join(out, "checkpoint", "critic.mlpv1"))
    metrics = open(os.path.join(out, "metrics.csv")).read().splitlines()
    assert metrics == ["episode,steps,return,avg_q,loss"]


def test_train_metrics_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["train", "--steps", "400", "--seed", "5", "--out", out,
                     "--set", "trainer.warmup=100",
                     "--set", "trainer.episode_steps=50",
                     "--set", "trainer.hidden_sizes=8 8"]) == 0
        outs.append(open(os.path.join(out, "metrics.csv"), "rb").read())
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) > 1


def test_eval_command(tmp_path):
    out = str(tmp_path / "eval")
    code = main(["eval", "--checkpoint", CHECKPOINT, "--episodes", "2",
                 "--seed", "3", "--out", out,
                 "--set", "trainer.eval_steps=200"])
    assert code == 0
    lines = open(os.path.join(out, "eval_summary.csv")).read().splitlines()
    assert lines[0] == "episodes,completed,off_track,completion_rate,mean_return"
    assert lines[1].startswith("2,")


def test_scenario_command_deterministic(tmp_path):
    files = []
    for name in ("s1", "s2"):
        out = str(tmp_path / name)
        assert main(["scenario", "A", "--checkpoint", CHECKPOINT,
                     "--out", out]) == 0
        files.append(open(os.path.join(out, "scenario_A.csv"), "rb").read())
    assert files[0] == files[1]


def test_validation_error_exit_code(tmp_path):
    assert main(["train", "--steps", "0", "--track", "not-a-track",
                 "--out", str(tmp_path)]) == 1
    assert main(["train", "--steps", "0", "--set", "weights.alpha=0.9",
                 "--out", str(tmp_path)]) == 1
    assert main(["eval", "--checkpoint", "/does/not/exist",
                 "--out", str(tmp_path)]) == 1


def test_check_gradients_command():
    assert main(["check-gradients", "--nets", "3"]) == 0


def test_scr_loopback_commands(tmp_path):
    import socket
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()

    rc = {}

    def serve():
        rc["server"] = main(["serve-scr", "--scr-listen", str(port),
                             "--steps", "30", "--timeout", "5"])

    thread = threading.Thread(target=serve)
    thread.start()
    import time
    time.sleep(0.3)
    rc["client"] = main(["drive-scr", "--scr-connect", f"127.0.0.1:{port}",
                         "--checkpoint", CHECKPOINT, "--timeout", "5"])
    thread.join(timeout=15.0)
    assert rc["server"] == 0
    assert rc["client"] == 0
