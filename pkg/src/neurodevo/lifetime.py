"""One animat lifetime: the sense-act-learn loop over the world and network kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import RunConfig
from .genome import Genome
from .netdyn import (
    EATING, HUNGER, PROXIMITY, NetworkState, adapt_kernel, hebbian_kernel,
    homeostatic_kernel, network_kernel, nm_kernel,
)
from .world import (
    RESPAWN_TRIES, WorldState, animat_kernel, capture_kernel, init_world,
    nearest_kernel, prey_kernel, sensor_kernel,
)

NOISE_CHUNK = 2000  # steps of prey noise drawn at a time
CANDIDATE_CHUNK = 8192  # respawn candidates drawn at a time

TRACE_COLUMNS = ("t", "x", "y", "heading", "calories", "motor_left", "motor_right",
                 "nm_proximity", "nm_eating", "nm_hunger")

# packed parameter vector layout
(P_DT, P_DT_TAU, P_GAIN, P_BIAS, P_COUPLING, P_ALPHA, P_S0, P_A1, P_A2, P_RECOVERY,
 P_PROX_DRIVE, P_HUNGER_DRIVE, P_CAP, P_SAT, P_LR, P_WMAX, P_HOMEO, P_SIGMA, P_DRIFT,
 P_STRIKE, P_VMAX_PREY, P_TOP, P_TURN, P_RADIUS, P_RESPAWN, P_FALLOFF, N_PARAMS) = range(27)


@njit(cache=True)
def lifetime_kernel(t0, t1, noise, noise_t0, candidates, cursor, p, n_bins, learn_interval, homeo_steps,
                    W, plastic, x, u, gains, smoothed, target, levels, taus, raw, scratch, n_inter,
                    pose, prey_pos, prey_vel, species, species_cal, captures, clocks,
                    trace, trace_interval):
    """Advance ticks [t0, t1); stop early when respawn candidates run low.

    ``clocks`` holds (clock, last_meal_time, total_calories, learned), where
    ``learned`` flags a gated Hebbian update since the last homeostatic pass;
    homeostasis only runs after learning. Returns the
    next tick index and the candidate cursor.
    """
    dt = p[P_DT]
    n_s = raw.shape[0]
    n = x.shape[0]
    n_prey = prey_pos.shape[0]
    need = n_prey * RESPAWN_TRIES
    t = t0
    while t < t1:
        if cursor + need > candidates.shape[0]:
            break
        sensor_kernel(prey_pos, species, pose[0], pose[1], pose[2], clocks[0] - clocks[1],
                      n_bins, p[P_FALLOFF], raw)
        adapt_kernel(raw, smoothed, gains, p[P_ALPHA], p[P_S0], p[P_A1], p[P_A2], p[P_RECOVERY], dt)
        drive = p[P_COUPLING] * (levels[PROXIMITY] + levels[HUNGER])
        network_kernel(W, x, u, gains, raw, n_s, n_inter, drive, p[P_DT_TAU], p[P_GAIN], p[P_BIAS], scratch)
        left = x[n - 2]
        right = x[n - 1]
        animat_kernel(pose, left, right, dt, p[P_TOP], p[P_TURN])
        prey_kernel(prey_pos, prey_vel, pose[0], pose[1], noise[t - noise_t0], dt,
                    p[P_SIGMA], p[P_DRIFT], p[P_STRIKE], p[P_VMAX_PREY])
        clocks[0] += dt
        gained, eaten, cursor = capture_kernel(prey_pos, prey_vel, species, pose[0], pose[1], p[P_RADIUS],
                                               species_cal, captures, candidates, cursor, p[P_RESPAWN])
        if eaten > 0:
            clocks[1] = clocks[0]
            clocks[2] += gained
        nearest = nearest_kernel(prey_pos, pose[0], pose[1])
        nm_kernel(levels, taus, nearest, eaten > 0, clocks[0] - clocks[1], dt,
                  p[P_PROX_DRIVE], p[P_HUNGER_DRIVE], p[P_CAP])
        if (t + 1) % learn_interval == 0:
            m = levels[EATING]
            if m > p[P_SAT]:
                m = p[P_SAT]
            coef = p[P_LR] * m * dt * learn_interval
            if coef != 0.0:
                hebbian_kernel(W, plastic, x, coef, p[P_WMAX], n_s, scratch)
                clocks[3] = 1.0
        if (t + 1) % homeo_steps == 0 and clocks[3] != 0.0:
            homeostatic_kernel(W, target, p[P_HOMEO], p[P_WMAX], n_s, scratch)
            clocks[3] = 0.0
        if trace.shape[0] > 0 and t % trace_interval == 0:
            r = t // trace_interval
            trace[r, 0] = clocks[0]
            trace[r, 1] = pose[0]
            trace[r, 2] = pose[1]
            trace[r, 3] = pose[2]
            trace[r, 4] = clocks[2]
            trace[r, 5] = left
            trace[r, 6] = right
            trace[r, 7] = levels[PROXIMITY]
            trace[r, 8] = levels[EATING]
            trace[r, 9] = levels[HUNGER]
            for k in range(n_prey):
                trace[r, 10 + 3 * k] = prey_pos[k, 0]
                trace[r, 11 + 3 * k] = prey_pos[k, 1]
                trace[r, 12 + 3 * k] = species[k]
        t += 1
    return t, cursor


def pack_params(config: RunConfig, genome: Genome, w_max: float) -> np.ndarray:
    p = np.zeros(N_PARAMS)
    p[P_DT] = config.dt
    p[P_DT_TAU] = config.dt / config.tau_m
    p[P_GAIN] = config.logistic_gain
    p[P_BIAS] = config.logistic_bias
    p[P_COUPLING] = config.nm_coupling
    p[P_ALPHA] = 1.0 - math.exp(-config.dt / config.adapt_tau)
    p[P_S0] = genome["sensory_adapt_min_scale_s0"]
    p[P_A1] = genome["sensory_adapt_delta_scale_a1"]
    p[P_A2] = genome["sensory_adapt_delta_threshold_a2"]
    p[P_RECOVERY] = config.recovery_rate
    p[P_PROX_DRIVE] = config.proximity_drive
    p[P_HUNGER_DRIVE] = config.hunger_drive
    p[P_CAP] = config.impulse_cap
    p[P_SAT] = config.sat_cap
    p[P_LR] = config.learning_rate
    p[P_WMAX] = w_max
    p[P_HOMEO] = genome["homeostatic"]
    p[P_SIGMA] = config.sigma_b
    p[P_DRIFT] = config.drift_strength
    p[P_STRIKE] = config.striking_distance
    p[P_VMAX_PREY] = config.prey_top_speed
    p[P_TOP] = config.animat_top_speed
    p[P_TURN] = config.turn_gain
    p[P_RADIUS] = config.animat_radius
    p[P_RESPAWN] = config.respawn_distance
    p[P_FALLOFF] = config.sensor_falloff
    return p


@dataclass
class LifetimeResult:
    world: WorldState
    network: NetworkState
    trace: np.ndarray | None = None

    @property
    def calories(self) -> float:
        return self.world.total_calories


def trace_header(n_prey: int) -> list[str]:
    cols = list(TRACE_COLUMNS)
    for k in range(n_prey):
        cols += [f"prey{k}_x", f"prey{k}_y", f"prey{k}_species"]
    return cols


def run_lifetime(network: NetworkState, genome: Genome, config: RunConfig, rng: np.random.Generator,
                 high_cal_species: int, trace: bool = False) -> LifetimeResult:
    """Simulate one lifetime; ``network`` is advanced (and learns) in place."""
    world = init_world(rng, config, high_cal_species)
    steps = config.steps
    n_rec = -(-steps // config.trace_interval) if trace else 0
    trace_buf = np.zeros((n_rec, len(TRACE_COLUMNS) + 3 * config.n_prey))
    p = pack_params(config, genome, network.w_max)
    clocks = np.array([world.clock, world.last_meal_time, world.total_calories, 0.0])
    raw = np.zeros(network.n_sensors)
    scratch = np.zeros(network.n_nodes)
    noise = np.empty((0, config.n_prey, 2))
    noise_t0 = 0
    candidates = np.empty((0, 2))
    cursor = 0
    t = 0
    while t < steps:
        if t >= noise_t0 + noise.shape[0]:
            noise_t0 = t
            noise = rng.standard_normal((min(NOISE_CHUNK, steps - t), config.n_prey, 2))
        if cursor + config.n_prey * RESPAWN_TRIES > candidates.shape[0]:
            candidates = rng.random((max(CANDIDATE_CHUNK, config.n_prey * RESPAWN_TRIES), 2))
            cursor = 0
        t, cursor = lifetime_kernel(
            t, noise_t0 + noise.shape[0], noise, noise_t0, candidates, cursor, p,
            config.sensor_bins, config.learn_interval, config.homeostasis_steps,
            network.weights, network.plastic, network.activations, network.potentials, network.gains,
            network.smoothed_inputs, network.target_sum, network.nm.levels, network.nm.taus, raw, scratch,
            network.n_inter, world.pose, world.prey_pos, world.prey_vel, world.species,
            world.species_calories, world.captures, clocks, trace_buf, config.trace_interval,
        )
    world.clock, world.last_meal_time, world.total_calories = (float(v) for v in clocks[:3])
    return LifetimeResult(world, network, trace_buf if trace else None)
