import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurodevo.config import RunConfig
from neurodevo.evo import generation_seed, high_cal_species_for
from neurodevo.world import (
    RESPAWN_TRIES, SPECIES_A, SPECIES_B, advance_clock, init_world, nearest_prey_distance,
    read_sensors, resolve_captures, step_animat, step_prey,
)


def world(seed=0, high=SPECIES_A, **cfg):
    return init_world(np.random.default_rng(seed), RunConfig(**cfg), high)


def test_species_split():
    for seed in range(10):
        w = world(seed)
        assert len(w.species) == 50
        assert (w.species == SPECIES_A).sum() == 17
        assert (w.species == SPECIES_B).sum() == 33


def test_init_world_deterministic_and_centred():
    a, b = world(5), world(5)
    np.testing.assert_array_equal(a.prey_pos, b.prey_pos)
    np.testing.assert_array_equal(a.pose, b.pose)
    assert tuple(a.pose[:2]) == (0.5, 0.5)
    assert np.all((a.prey_pos >= 0) & (a.prey_pos <= 1))
    assert a.calories == {"high": 3.0, "low": 1.0}


def test_init_world_rejects_bad_species():
    with pytest.raises(ValueError):
        world(high=2)


def test_high_cal_species_balanced_over_generations():
    picks = [high_cal_species_for(generation_seed(0, g)) for g in range(10_000)]
    assert abs(np.mean(np.array(picks) == SPECIES_A) - 0.5) < 0.02


def _isolated_prey(n=1):
    # animat parked in a corner, prey near the far side
    w = world(n_prey=n)
    w.pose[:] = [0.0, 0.0, 0.0]
    w.prey_pos[:] = [0.7, 0.7]
    return w


def test_prey_brownian_mean_displacement_zero():
    w = _isolated_prey()
    rng = np.random.default_rng(1)
    steps = []
    for _ in range(100_000):
        w.prey_pos[:] = [0.7, 0.7]
        w.prey_vel[:] = 0.0
        before = w.prey_pos.copy()
        step_prey(w, 0.01, rng)
        steps.append((w.prey_pos - before)[0])
    d = np.array(steps)
    se = d.std(ddof=1, axis=0) / math.sqrt(len(d))
    assert np.all(np.abs(d.mean(axis=0)) < 3 * se)


def test_prey_flee_drift_points_away():
    w = world(n_prey=1, sigma_b=0.5)
    rng = np.random.default_rng(2)
    dv = []
    for _ in range(5000):
        w.pose[:] = [0.5, 0.5, 0.0]
        w.prey_pos[:] = [0.6, 0.5]  # due east, inside striking distance 0.15
        w.prey_vel[:] = 0.0
        step_prey(w, 0.01, rng)
        dv.append(w.prey_vel[0].copy())
    mean = np.mean(dv, axis=0)
    assert mean[0] > 0
    assert abs(mean[1]) < abs(mean[0])


def test_prey_speed_cap_every_step():
    cfg = RunConfig()
    w = init_world(np.random.default_rng(3), cfg, 0)
    rng = np.random.default_rng(4)
    vmax = 0.95 * cfg.animat_top_speed
    top = 0.0
    for t in range(100_000):
        if t % 50 == 0:
            w.pose[:2] = rng.random(2)
        step_prey(w, cfg.dt, rng)
        speed = np.hypot(w.prey_vel[:, 0], w.prey_vel[:, 1])
        top = max(top, speed.max())
        assert np.all((w.prey_pos >= 0) & (w.prey_pos <= 1))
    assert top <= vmax * (1 + 1e-12)


def test_prey_wall_zeroes_velocity():
    w = world(n_prey=1, sigma_b=0.0)
    w.pose[:] = [0.1, 0.5, 0.0]
    w.prey_pos[:] = [0.999, 0.5]
    w.prey_vel[:] = [0.9, 0.0]
    step_prey(w, 0.01, None, noise=np.zeros((1, 2)))
    assert w.prey_pos[0, 0] == 1.0 and w.prey_vel[0, 0] == 0.0


def test_animat_crosses_arena_in_one_second():
    w = world()
    w.pose[:] = [0.0, 0.5, 0.0]
    for _ in range(100):
        step_animat(w, (1.0, 1.0), 0.01)
    assert w.pose[0] == pytest.approx(1.0, abs=1e-9)
    assert w.pose[1] == 0.5


def test_animat_zero_drive_stays_put():
    w = world()
    before = w.pose.copy()
    for _ in range(100):
        step_animat(w, (0.0, 0.0), 0.01)
    np.testing.assert_array_equal(w.pose, before)


def test_animat_right_motor_turns_left():
    w = world()
    w.pose[:] = [0.5, 0.5, 0.0]
    step_animat(w, (0.0, 1.0), 0.01)
    assert w.pose[2] > 0
    assert w.pose[0] > 0.5 and w.pose[1] > 0.5  # arcs to the left of a +x heading


def test_animat_rejects_bad_dt():
    with pytest.raises(ValueError):
        step_animat(world(), (0.5, 0.5), 0.0)


def test_no_capture_outside_radius():
    w = world()
    w.prey_pos[:] = [0.9, 0.9]
    before = w.prey_pos.copy()
    assert resolve_captures(w, np.random.default_rng(0)) == 0.0
    assert w.captures.sum() == 0
    np.testing.assert_array_equal(w.prey_pos, before)


def test_capture_high_cal_prey():
    w = world(high=SPECIES_A)
    w.prey_pos[:] = [0.9, 0.9]
    w.prey_pos[0] = w.pose[:2]  # prey 0 is species A
    w.clock = 12.5
    gained = resolve_captures(w, np.random.default_rng(0))
    assert gained == 3.0
    assert w.captures_high == 1 and w.captures_low == 0
    assert w.last_meal_time == 12.5
    assert len(w.prey_pos) == 50 and w.species[0] == SPECIES_A
    assert np.hypot(*(w.prey_pos[0] - w.pose[:2])) >= 0.25
    assert np.all(w.prey_vel[0] == 0)


def test_respawn_falls_back_to_farthest_candidate():
    w = world(n_prey=1)
    w.prey_pos[:] = w.pose[:2]
    cands = np.full((RESPAWN_TRIES, 2), 0.5)
    cands[5] = [0.6, 0.5]
    resolve_captures(w, None, candidates=cands)
    np.testing.assert_array_equal(w.prey_pos[0], [0.6, 0.5])


def test_random_policy_conservation():
    cfg = RunConfig(animat_radius=0.05)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        w = init_world(rng, cfg, seed % 2)
        for t in range(cfg.steps):
            if t % 25 == 0:
                motor = rng.random(2)
            step_animat(w, motor, cfg.dt)
            step_prey(w, cfg.dt, rng)
            advance_clock(w, cfg.dt)
            resolve_captures(w, rng)
            assert w.prey_pos.shape == (50, 2)
        assert (w.species == SPECIES_A).sum() == 17
        assert w.captures.sum() > 0
        assert w.total_calories == w.accounted_calories()


def test_sensor_single_prey_channels():
    w = world(n_prey=1)
    w.species[:] = SPECIES_A
    w.pose[:] = [0.5, 0.5, 0.0]
    w.prey_pos[:] = w.pose[:2]
    s = read_sensors(w)
    assert s.shape == (34,)
    assert s[0] == 1.0 and s[33] == 1.0
    # bin 3 of species A: centre at 3 * 22.5 degrees
    ang = math.radians(3 * 22.5)
    w.prey_pos[0] = [0.5 + 1e-9 * math.cos(ang), 0.5 + 1e-9 * math.sin(ang)]
    s = read_sensors(w)
    assert s[3] == pytest.approx(1.0) and np.count_nonzero(s[:32]) == 1


def test_sensor_species_b_channels_and_falloff():
    w = world(n_prey=1)
    w.species[:] = SPECIES_B
    w.pose[:] = [0.5, 0.5, math.pi / 2]
    w.prey_pos[:] = [0.5, 0.75]  # straight ahead, distance 0.25
    s = read_sensors(w)
    assert s[16] == pytest.approx(1 / (1 + 8 * 0.25))
    assert np.count_nonzero(s[:16]) == 0
    assert s[33] == pytest.approx(1 / 3)


def test_hunger_channel():
    w = world()
    w.clock = 30.0
    w.last_meal_time = 0.0
    assert read_sensors(w)[32] == 0.5
    w.last_meal_time = 30.0
    assert read_sensors(w)[32] == 0.0
    w.clock = 1000.0
    assert read_sensors(w)[32] == 1.0


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**6), heading=st.floats(-20, 20))
def test_sensor_range_and_bin_partition(seed, heading):
    rng = np.random.default_rng(seed)
    w = world(n_prey=1)
    w.pose[:] = [*rng.random(2), heading]
    w.clock = rng.uniform(0, 100)
    for _ in range(10):
        w.prey_pos[:] = rng.random(2)
        w.species[:] = rng.integers(2)
        s = read_sensors(w)
        assert np.all((s >= 0) & (s <= 1))
        assert np.count_nonzero(s[:32]) == 1
        d = nearest_prey_distance(w)
        assert s[:32].sum() == pytest.approx(min(1.0, 1 / (1 + 8 * d)))


def test_world_determinism_with_motor_sequence():
    def run():
        rng = np.random.default_rng(9)
        w = init_world(rng, RunConfig(), 1)
        motors = np.random.default_rng(10).random((3000, 2))
        for m in motors:
            step_animat(w, m, 0.01)
            step_prey(w, 0.01, rng)
            advance_clock(w, 0.01)
            resolve_captures(w, rng)
        return w
    a, b = run(), run()
    assert a.prey_pos.tobytes() == b.prey_pos.tobytes()
    assert a.pose.tobytes() == b.pose.tobytes()
    assert a.total_calories == b.total_calories


def test_stationary_animat_captures_little():
    cfg = RunConfig()
    total = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        w = init_world(rng, cfg, 0)
        for _ in range(cfg.steps):
            step_prey(w, cfg.dt, rng)
            advance_clock(w, cfg.dt)
            resolve_captures(w, rng)
        total += w.captures.sum()
    assert total / 20 < 3
