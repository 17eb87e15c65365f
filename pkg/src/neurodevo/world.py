"""2D prey-capture arena: differential-drive animat, two fleeing prey species."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import RunConfig
from .netdyn import MEAL_HORIZON

SPECIES_A, SPECIES_B = 0, 1
RESPAWN_TRIES = 16  # candidate positions reserved per respawn


@njit(cache=True)
def sensor_kernel(prey_pos, species, ax, ay, heading, since_meal, n_bins, falloff, out):
    """Fill ``out`` with the sensor channels; return the nearest-prey distance."""
    for k in range(out.shape[0]):
        out[k] = 0.0
    width = 2.0 * math.pi / n_bins
    # rotate into a frame whose angle 0 is the start of bin 0
    c = math.cos(heading - 0.5 * width)
    s = math.sin(heading - 0.5 * width)
    nearest = np.inf
    for k in range(prey_pos.shape[0]):
        dx = prey_pos[k, 0] - ax
        dy = prey_pos[k, 1] - ay
        d = math.sqrt(dx * dx + dy * dy)
        if d < nearest:
            nearest = d
        # bin 0 is centred on the heading; bins run counter-clockwise
        rel = math.atan2(c * dy - s * dx, c * dx + s * dy)
        if rel < 0.0:
            rel += 2.0 * math.pi
        b = int(rel / width)
        if b >= n_bins:
            b = n_bins - 1
        out[species[k] * n_bins + b] += 1.0 / (1.0 + falloff * d)
    for k in range(2 * n_bins):
        if out[k] > 1.0:
            out[k] = 1.0
    out[2 * n_bins] = min(since_meal, MEAL_HORIZON) / MEAL_HORIZON
    out[2 * n_bins + 1] = 1.0 / (1.0 + falloff * nearest)
    return nearest


@njit(cache=True)
def nearest_kernel(prey_pos, ax, ay):
    nearest = np.inf
    for k in range(prey_pos.shape[0]):
        dx = prey_pos[k, 0] - ax
        dy = prey_pos[k, 1] - ay
        d = math.sqrt(dx * dx + dy * dy)
        if d < nearest:
            nearest = d
    return nearest


@njit(cache=True)
def prey_kernel(pos, vel, ax, ay, noise, dt, sigma, drift, strike, vmax):
    sd = sigma * math.sqrt(dt)
    for k in range(pos.shape[0]):
        vx = vel[k, 0] + sd * noise[k, 0]
        vy = vel[k, 1] + sd * noise[k, 1]
        dx = pos[k, 0] - ax
        dy = pos[k, 1] - ay
        d = math.sqrt(dx * dx + dy * dy)
        if d < strike and d > 0.0:
            vx += drift * dt * dx / d
            vy += drift * dt * dy / d
        speed = math.sqrt(vx * vx + vy * vy)
        if speed > vmax:
            vx *= vmax / speed
            vy *= vmax / speed
        x = pos[k, 0] + vx * dt
        y = pos[k, 1] + vy * dt
        if x < 0.0:
            x = 0.0
            vx = 0.0
        elif x > 1.0:
            x = 1.0
            vx = 0.0
        if y < 0.0:
            y = 0.0
            vy = 0.0
        elif y > 1.0:
            y = 1.0
            vy = 0.0
        pos[k, 0] = x
        pos[k, 1] = y
        vel[k, 0] = vx
        vel[k, 1] = vy


@njit(cache=True)
def animat_kernel(pose, left, right, dt, top_speed, turn_gain):
    v = top_speed * 0.5 * (left + right)
    pose[2] += turn_gain * (right - left) * dt
    x = pose[0] + v * dt * math.cos(pose[2])
    y = pose[1] + v * dt * math.sin(pose[2])
    pose[0] = min(max(x, 0.0), 1.0)
    pose[1] = min(max(y, 0.0), 1.0)


@njit(cache=True)
def capture_kernel(pos, vel, species, ax, ay, radius, species_cal, captures, candidates, cursor, min_dist):
    """Eat every prey inside ``radius`` and respawn it; return (calories, eaten, cursor).

    Each respawn consumes exactly RESPAWN_TRIES candidates and takes the first
    one at least ``min_dist`` from the animat (the farthest if none qualifies).
    """
    gained = 0.0
    eaten = 0
    for k in range(pos.shape[0]):
        dx = pos[k, 0] - ax
        dy = pos[k, 1] - ay
        if dx * dx + dy * dy > radius * radius:
            continue
        s = species[k]
        gained += species_cal[s]
        captures[s] += 1
        eaten += 1
        best = -1
        best_d = -1.0
        for t in range(RESPAWN_TRIES):
            cx = candidates[cursor + t, 0]
            cy = candidates[cursor + t, 1]
            d = math.sqrt((cx - ax) ** 2 + (cy - ay) ** 2)
            if d >= min_dist:
                best = t
                break
            if d > best_d:
                best_d = d
                best = t
        pos[k, 0] = candidates[cursor + best, 0]
        pos[k, 1] = candidates[cursor + best, 1]
        vel[k, 0] = 0.0
        vel[k, 1] = 0.0
        cursor += RESPAWN_TRIES
    return gained, eaten, cursor


@dataclass
class WorldState:
    pose: np.ndarray  # x, y, heading (rad)
    radius: float
    prey_pos: np.ndarray
    prey_vel: np.ndarray
    species: np.ndarray
    high_cal_species: int
    species_calories: np.ndarray  # calories per prey, indexed by species
    captures: np.ndarray  # per species
    clock: float = 0.0
    last_meal_time: float = 0.0
    total_calories: float = 0.0
    config: RunConfig | None = None

    @property
    def low_cal_species(self) -> int:
        return 1 - self.high_cal_species

    @property
    def captures_high(self) -> int:
        return int(self.captures[self.high_cal_species])

    @property
    def captures_low(self) -> int:
        return int(self.captures[self.low_cal_species])

    @property
    def calories(self) -> dict:
        return {"high": float(self.species_calories[self.high_cal_species]),
                "low": float(self.species_calories[self.low_cal_species])}

    def accounted_calories(self) -> float:
        cal = self.calories
        return self.captures_high * cal["high"] + self.captures_low * cal["low"]

    def copy(self) -> "WorldState":
        return WorldState(self.pose.copy(), self.radius, self.prey_pos.copy(), self.prey_vel.copy(),
                          self.species.copy(), self.high_cal_species, self.species_calories.copy(),
                          self.captures.copy(), self.clock, self.last_meal_time, self.total_calories,
                          self.config)


def species_for(config: RunConfig) -> np.ndarray:
    n_a = config.n_minority
    return np.array([SPECIES_A] * n_a + [SPECIES_B] * (config.n_prey - n_a), dtype=np.int64)


def init_world(rng: np.random.Generator, config: RunConfig, high_cal_species: int) -> WorldState:
    if high_cal_species not in (SPECIES_A, SPECIES_B):
        raise ValueError("high_cal_species must be 0 (A) or 1 (B)")
    cal = np.empty(2)
    cal[high_cal_species] = config.cal_high
    cal[1 - high_cal_species] = config.cal_low
    prey_pos = rng.random((config.n_prey, 2))
    heading = rng.uniform(0.0, 2.0 * math.pi)
    return WorldState(
        pose=np.array([0.5, 0.5, heading]),
        radius=config.animat_radius,
        prey_pos=prey_pos,
        prey_vel=np.zeros((config.n_prey, 2)),
        species=species_for(config),
        high_cal_species=int(high_cal_species),
        species_calories=cal,
        captures=np.zeros(2, dtype=np.int64),
        config=config,
    )


def step_prey(world: WorldState, dt: float, rng: np.random.Generator, noise=None) -> np.ndarray:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    cfg = world.config
    if noise is None:
        noise = rng.standard_normal(world.prey_pos.shape)
    prey_kernel(world.prey_pos, world.prey_vel, world.pose[0], world.pose[1], np.asarray(noise, dtype=float),
                dt, cfg.sigma_b, cfg.drift_strength, cfg.striking_distance, cfg.prey_top_speed)
    return world.prey_pos


def step_animat(world: WorldState, motor, dt: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    left, right = (float(m) for m in motor)
    animat_kernel(world.pose, left, right, dt, world.config.animat_top_speed, world.config.turn_gain)
    return world.pose


def advance_clock(world: WorldState, dt: float) -> float:
    world.clock += dt
    return world.clock


def resolve_captures(world: WorldState, rng: np.random.Generator, candidates=None) -> float:
    """Eat prey inside the animat, respawn them, and return calories gained."""
    n = world.prey_pos.shape[0]
    if candidates is None:
        candidates = rng.random((n * RESPAWN_TRIES, 2))
    gained, eaten, _ = capture_kernel(
        world.prey_pos, world.prey_vel, world.species, world.pose[0], world.pose[1], world.radius,
        world.species_calories, world.captures, np.asarray(candidates, dtype=float), 0,
        world.config.respawn_distance,
    )
    if eaten:
        world.last_meal_time = world.clock
        world.total_calories += gained
    return gained


def read_sensors(world: WorldState, config: RunConfig | None = None) -> np.ndarray:
    config = config or world.config
    out = np.empty(config.n_sensors)
    sensor_kernel(world.prey_pos, world.species, world.pose[0], world.pose[1], world.pose[2],
                  world.clock - world.last_meal_time, config.sensor_bins, config.sensor_falloff, out)
    return out


def nearest_prey_distance(world: WorldState) -> float:
    return float(nearest_kernel(world.prey_pos, world.pose[0], world.pose[1]))
