"""Real-time network dynamics: leaky rate units, sensory adaptation,
neuromodulators, reward-gated Hebbian learning and homeostatic scaling.

Node order is fixed by :func:`neurodevo.neurodev.place_nodes`: sensors first,
then interneurons, then motors. The numba kernels below rely on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import RunConfig
from .genome import Genome

PROXIMITY, EATING, HUNGER = 0, 1, 2
NM_DECAY_GENES = ("decay_proximity", "decay_eating", "decay_hunger")
MEAL_HORIZON = 60.0  # seconds until the hunger drive saturates
FLUSH = 1e-30  # decaying traces below this are zeroed (avoids subnormal arithmetic)


@njit(cache=True)
def logistic(u, gain, bias):
    return 1.0 / (1.0 + math.exp(-gain * (u - bias)))


@njit(cache=True)
def network_kernel(W, x, u, gains, raw, n_sensors, n_inter, nm_drive, dt_over_tau, gain, bias, scratch):
    # W is column-major and the inner loops span all rows (sensor rows are
    # zero) so that LLVM vectorizes them.
    n = x.shape[0]
    for c in range(n_sensors):
        v = gains[c] * raw[c]
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        x[c] = v
        u[c] = v
    for i in range(n):
        scratch[i] = 0.0
    for j in range(n):
        xj = x[j]
        if xj == 0.0:
            continue
        for i in range(n):
            scratch[i] += W[i, j] * xj
    for i in range(n_sensors, n_sensors + n_inter):
        scratch[i] += nm_drive
    for i in range(n_sensors, n):
        u[i] += dt_over_tau * (-u[i] + scratch[i])
        x[i] = logistic(u[i], gain, bias)


@njit(cache=True)
def adapt_kernel(raw, smoothed, gains, alpha, s0, a1, a2, recovery_rate, dt):
    for c in range(raw.shape[0]):
        smoothed[c] += alpha * (raw[c] - smoothed[c])
        if abs(smoothed[c]) < FLUSH:
            smoothed[c] = 0.0
        if smoothed[c] > a2:
            g = gains[c] - a1 * (smoothed[c] - a2) * dt
            gains[c] = g if g > s0 else s0
        else:
            g = gains[c] + recovery_rate * dt
            gains[c] = g if g < 1.0 else 1.0


@njit(cache=True)
def nm_kernel(levels, taus_ms, prey_distance, ate, since_meal, dt, proximity_drive, hunger_drive, cap):
    dt_ms = dt * 1000.0
    for k in range(3):
        if taus_ms[k] > 0.0:
            levels[k] *= math.exp(-dt_ms / taus_ms[k])
        else:
            levels[k] = 0.0
    if ate:
        levels[EATING] += 1.0
    levels[PROXIMITY] += proximity_drive * dt / (1.0 + prey_distance)
    levels[HUNGER] += hunger_drive * dt * min(since_meal, MEAL_HORIZON) / MEAL_HORIZON
    for k in range(3):
        if levels[k] < FLUSH:
            levels[k] = 0.0
        elif levels[k] > cap:
            levels[k] = cap


@njit(cache=True)
def hebbian_kernel(W, plastic, x, coef, w_max, n_sensors, scratch):
    """``plastic`` is a 0/1 float mask with the same layout as ``W``; it is
    zero on sensor rows, which are therefore left unchanged."""
    if coef == 0.0:
        return
    n = x.shape[0]
    for i in range(n):
        scratch[i] = coef * (x[i] - 0.5)
    for j in range(n):
        xj = x[j]
        if xj == 0.0:
            continue
        for i in range(n):
            w = W[i, j] + scratch[i] * xj * plastic[i, j]
            W[i, j] = min(max(w, -w_max), w_max)


@njit(cache=True)
def homeostatic_kernel(W, target, h, w_max, n_sensors, scratch):
    n = W.shape[0]
    for i in range(n):
        scratch[i] = 0.0
    for j in range(n):
        for i in range(n):
            scratch[i] += abs(W[i, j])
    for i in range(n):
        s = scratch[i]
        if i < n_sensors:
            s = 0.0
        if s > 0.0:
            f = 1.0 + h * (target[i] / s - 1.0)
            if not f > 0.0:
                raise ValueError("homeostatic scale factor must be positive")
            scratch[i] = f
        else:
            scratch[i] = 1.0
    for j in range(n):
        for i in range(n):
            W[i, j] = min(max(W[i, j] * scratch[i], -w_max), w_max)


@dataclass
class NeuromodulatorState:
    levels: np.ndarray  # proximity, eating, hunger
    taus: np.ndarray  # decay time constants in ms
    impulse_cap: float = 10.0

    @classmethod
    def from_genome(cls, genome: Genome, impulse_cap: float = 10.0) -> "NeuromodulatorState":
        taus = np.array([genome[name] for name in NM_DECAY_GENES])
        return cls(np.zeros(3), taus, impulse_cap)

    @property
    def proximity(self) -> float:
        return float(self.levels[PROXIMITY])

    @property
    def eating(self) -> float:
        return float(self.levels[EATING])

    @property
    def hunger(self) -> float:
        return float(self.levels[HUNGER])


@dataclass
class NetworkState:
    activations: np.ndarray
    potentials: np.ndarray
    gains: np.ndarray
    smoothed_inputs: np.ndarray
    weights: np.ndarray
    plastic: np.ndarray
    target_sum: np.ndarray
    nm: NeuromodulatorState
    n_sensors: int
    n_inter: int
    w_max: float
    config: RunConfig

    @classmethod
    def from_blueprint(cls, blueprint, genome: Genome, config: RunConfig, initial_potential: float = 0.0) -> "NetworkState":
        n = len(blueprint.nodes)
        n_sensors = blueprint.n_sensors
        weights = np.asfortranarray(blueprint.weights, dtype=float).copy(order="F")
        plastic = np.asfortranarray((weights != 0.0).astype(float))
        target = config.target_fraction * blueprint.w_max * plastic.sum(axis=1).astype(float)
        potentials = np.full(n, initial_potential)
        activations = np.array(
            [logistic(v, config.logistic_gain, config.logistic_bias) for v in potentials]
        )
        activations[:n_sensors] = 0.0
        potentials[:n_sensors] = 0.0
        return cls(
            activations=activations,
            potentials=potentials,
            gains=np.ones(n_sensors),
            smoothed_inputs=np.zeros(n_sensors),
            weights=weights,
            plastic=plastic,
            target_sum=target,
            nm=NeuromodulatorState.from_genome(genome, config.impulse_cap),
            n_sensors=n_sensors,
            n_inter=blueprint.n_inter,
            w_max=blueprint.w_max,
            config=config,
        )

    @property
    def n_nodes(self) -> int:
        return self.activations.shape[0]

    @property
    def motor(self) -> np.ndarray:
        return self.activations[self.n_sensors + self.n_inter:]

    def nm_drive(self) -> float:
        return self.config.nm_coupling * (self.nm.levels[PROXIMITY] + self.nm.levels[HUNGER])


def step_network(state: NetworkState, sensor_raw, dt: float) -> np.ndarray:
    """Advance the network one step and return a copy of the motor activations."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    raw = np.asarray(sensor_raw, dtype=float)
    if raw.shape != (state.n_sensors,):
        raise ValueError(f"expected {state.n_sensors} sensor channels, got {raw.shape}")
    cfg = state.config
    network_kernel(
        state.weights, state.activations, state.potentials, state.gains, raw,
        state.n_sensors, state.n_inter, state.nm_drive(), dt / cfg.tau_m,
        cfg.logistic_gain, cfg.logistic_bias, np.empty(state.n_nodes),
    )
    return state.motor.copy()


def adapt_sensors(state: NetworkState, sensor_raw, genome: Genome, dt: float) -> np.ndarray:
    cfg = state.config
    raw = np.asarray(sensor_raw, dtype=float)
    adapt_kernel(
        raw, state.smoothed_inputs, state.gains, 1.0 - math.exp(-dt / cfg.adapt_tau),
        genome["sensory_adapt_min_scale_s0"], genome["sensory_adapt_delta_scale_a1"],
        genome["sensory_adapt_delta_threshold_a2"], cfg.recovery_rate, dt,
    )
    return state.gains


def update_neuromodulators(
    nm: NeuromodulatorState,
    prey_distance: float,
    ate: bool,
    since_meal: float,
    dt: float,
    proximity_drive: float = 1.0,
    hunger_drive: float = 1.0,
) -> NeuromodulatorState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    nm_kernel(nm.levels, nm.taus, float(prey_distance), bool(ate), float(since_meal), dt,
              proximity_drive, hunger_drive, nm.impulse_cap)
    return nm


def hebbian_learn(state: NetworkState, learning_rate: float, dt: float, modulation: float | None = None) -> np.ndarray:
    """Reward-gated Hebbian step on plastic synapses.

    ``modulation`` defaults to the saturated eating neuromodulator level;
    development passes 1.0 for ungated updates.
    """
    if modulation is None:
        modulation = min(state.nm.eating, state.config.sat_cap)
    hebbian_kernel(state.weights, state.plastic, state.activations,
                   learning_rate * modulation * dt, state.w_max, state.n_sensors, np.empty(state.n_nodes))
    return state.weights


def homeostatic_scale(state: NetworkState, genome: Genome, target_sum=None) -> np.ndarray:
    """Pull each non-sensor row's absolute weight sum toward ``target_sum``.

    ``target_sum`` may be a scalar or a per-node array; by default each row's
    target is ``target_fraction * w_max * n_incoming``.
    """
    n = state.n_nodes
    if target_sum is None:
        target = state.target_sum
    else:
        target = np.broadcast_to(np.asarray(target_sum, dtype=float), (n,)).copy()
        if np.any(target[state.n_sensors:] <= 0):
            raise ValueError("target_sum must be positive")
    homeostatic_kernel(state.weights, target, genome["homeostatic"], state.w_max, state.n_sensors,
                       np.empty(state.n_nodes))
    return state.weights
