import math

import numpy as np
import pytest

from blenddrive.apf import APFConfig, RepulsiveForce, apf_act, apf_command, repulsive_force
from blenddrive.sensors import N_SECTORS, RANGE_MAX, ObstacleReading

CFG = APFConfig()  # k_fx=20, k_fy=10, eta=1.5, d_cut=50


def force(readings, cfg=CFG):
    return repulsive_force([ObstacleReading(d, th) for d, th in readings], cfg)


def test_empty_readings_zero_force():
    f = force([])
    assert f.fx == 0.0 and f.fy == 0.0
    cmd = apf_command(f, CFG)
    assert cmd.steer == 0.0 and cmd.accel == 0.0


def test_single_obstacle_straight_ahead():
    f = force([(10.0, math.pi / 2)])
    assert f.fx == pytest.approx(0.0, abs=1e-15)
    assert f.fy == pytest.approx(-(10.0 ** -1.5))
    assert f.fy == pytest.approx(-0.0316228, abs=1e-6)


def test_symmetric_pair_cancels_laterally():
    d = 12.0
    f = force([(d, math.pi / 4), (d, 3 * math.pi / 4)])
    assert f.fx == pytest.approx(0.0, abs=1e-15)
    assert f.fy == pytest.approx(-2.0 * math.sin(math.pi / 4) / d ** 1.5)


def test_nonpositive_distance_rejected():
    with pytest.raises(ValueError, match="positive"):
        force([(0.0, 1.0)])


def test_activation_range_cutoff():
    assert force([(CFG.d_cut, 1.0)]) == RepulsiveForce(0.0, 0.0)
    assert force([(CFG.d_cut + 10.0, 1.0)]) == RepulsiveForce(0.0, 0.0)
    assert force([(CFG.d_cut - 1.0, 1.0)]).fy != 0.0


def test_rear_obstacles_ignored():
    assert force([(5.0, math.pi * 1.5)]) == RepulsiveForce(0.0, 0.0)
    assert force([(5.0, math.pi + 0.01)]) == RepulsiveForce(0.0, 0.0)


def test_command_scaling_and_clamp():
    cmd = apf_command(RepulsiveForce(0.0, -0.0316228), CFG)
    assert cmd.accel == pytest.approx(-0.316228)
    assert cmd.steer == 0.0
    # obstacle on the left produces hard right steer once clamped
    cmd = apf_command(RepulsiveForce(-0.1, 0.0), CFG)
    assert cmd.steer == -1.0


def test_brute_force_high_precision_oracle():
    # independent 40-digit summation for up to 3 obstacles
    mp = pytest.importorskip("mpmath").mp
    mpmath = pytest.importorskip("mpmath")
    mp.dps = 40
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = rng.integers(1, 4)
        readings = [(float(rng.uniform(1.0, CFG.d_cut - 1.0)),
                     float(rng.uniform(0.0, math.pi))) for _ in range(n)]
        fx = fy = mp.mpf(0)
        for d, th in readings:
            mag = 1 / mpmath.power(mp.mpf(d), mp.mpf(CFG.eta))
            fx -= mag * mpmath.cos(mp.mpf(th))
            fy -= mag * mpmath.sin(mp.mpf(th))
        f = force(readings)
        assert abs(f.fx - float(fx)) < 1e-12
        assert abs(f.fy - float(fy)) < 1e-12


def test_monotone_in_distance():
    rng = np.random.default_rng(1)
    for _ in range(300):
        th = float(rng.uniform(0.01, math.pi - 0.01))
        d = float(rng.uniform(2.0, CFG.d_cut - 2.0))
        near, far = force([(d * 0.5, th)]), force([(d, th)])
        if abs(math.cos(th)) > 1e-9:
            assert abs(near.fx) > abs(far.fx)
        assert abs(near.fy) > abs(far.fy)


def test_mirror_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(300):
        readings = [(float(rng.uniform(1.0, CFG.d_cut - 1.0)),
                     float(rng.uniform(0.0, math.pi)))
                    for _ in range(rng.integers(1, 5))]
        mirrored = [(d, math.pi - th) for d, th in readings]
        f, g = force(readings), force(mirrored)
        assert g.fx == pytest.approx(-f.fx, abs=1e-12)
        assert g.fy == pytest.approx(f.fy, abs=1e-12)


def test_superposition_exact():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = [(float(rng.uniform(1.0, 40.0)), float(rng.uniform(0.0, math.pi)))
             for _ in range(2)]
        b = [(float(rng.uniform(1.0, 40.0)), float(rng.uniform(0.0, math.pi)))
             for _ in range(2)]
        fa, fb, fab = force(a), force(b), force(a + b)
        assert fab.fx == pytest.approx(fa.fx + fb.fx, abs=1e-15)
        assert fab.fy == pytest.approx(fa.fy + fb.fy, abs=1e-15)


def test_head_on_never_steers():
    for d in (2.0, 5.0, 20.0):
        f = force([(d, math.pi / 2)])
        assert f.fx == pytest.approx(0.0, abs=1e-15)


def test_full_sector_pipeline():
    sectors = [RANGE_MAX] * N_SECTORS
    sectors[9] = 15.0  # theta in [90, 100) deg: ahead, slightly right
    cmd = apf_act(tuple(sectors), CFG)
    assert cmd.accel < 0.0  # braking
    assert cmd.steer > 0.0  # steer left, away from the right-side obstacle


def test_config_validation():
    with pytest.raises(ValueError):
        APFConfig(k_fx=-1.0).validate()
    with pytest.raises(ValueError):
        APFConfig(eta=0.0).validate()
    with pytest.raises(ValueError):
        APFConfig(d_cut=500.0).validate()
