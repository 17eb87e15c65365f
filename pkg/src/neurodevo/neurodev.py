"""Developmental construction of a network blueprint from a genome.

Three stages: node placement in a 2D virtual space, coarse wiring from
ligand/receptor gradient matching, and fine mapping by spontaneous
noise-driven activity with Hebbian and homeostatic updates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .genome import LIGAND_GENES, RECEPTOR_GENES, Genome
from . import netdyn

GENE_PERIOD = 12.0


class NodeKind(enum.IntEnum):
    SENSOR = 0
    INTER = 1
    MOTOR = 2


@dataclass(frozen=True)
class LayoutConfig:
    n_sensors: int
    n_inter: int
    n_motors: int
    inhibitory_fraction: float = 0.2

    @classmethod
    def from_config(cls, config: RunConfig) -> "LayoutConfig":
        return cls(config.n_sensors, config.n_inter, config.n_motors, config.inhibitory_fraction)


@dataclass(frozen=True)
class NodeSpec:
    id: int
    x: float
    y: float
    kind: NodeKind
    channel: int = -1
    inhibitory: bool = False

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class NetworkBlueprint:
    nodes: tuple[NodeSpec, ...]
    weights: np.ndarray  # post x pre
    w_max: float = 1.0

    @property
    def n_sensors(self) -> int:
        return sum(1 for n in self.nodes if n.kind == NodeKind.SENSOR)

    @property
    def n_inter(self) -> int:
        return sum(1 for n in self.nodes if n.kind == NodeKind.INTER)

    @property
    def n_motors(self) -> int:
        return sum(1 for n in self.nodes if n.kind == NodeKind.MOTOR)

    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=float)

    def kinds(self) -> np.ndarray:
        return np.array([int(n.kind) for n in self.nodes])

    def permitted(self) -> np.ndarray:
        """Mask of pairs (post i, pre j) allowed to carry a synapse."""
        kinds = self.kinds()
        return (kinds[:, None] != NodeKind.SENSOR) & (kinds[None, :] != NodeKind.MOTOR)

    def dump(self) -> str:
        """Node table followed by the weight matrix, as plain text."""
        lines = ["# id x y kind channel inhibitory"]
        for n in self.nodes:
            lines.append(f"{n.id} {n.x!r} {n.y!r} {n.kind.name} {n.channel} {int(n.inhibitory)}")
        lines.append(f"# weights post x pre ({len(self.nodes)}x{len(self.nodes)}), w_max={self.w_max!r}")
        for row in self.weights:
            lines.append(" ".join(repr(float(w)) for w in row))
        return "\n".join(lines) + "\n"


def _edge_positions(count: int) -> np.ndarray:
    return (np.arange(count) + 0.5) / count


def place_nodes(layout: LayoutConfig, rng: np.random.Generator) -> list[NodeSpec]:
    """Sensors on the x=0 edge, motors on the x=1 edge, interneurons uniform inside.

    The first ``round(inhibitory_fraction * n_inter)`` interneurons are
    inhibitory; since their positions are random this is a random subset.
    """
    if layout.n_sensors <= 0 or layout.n_motors <= 0:
        raise ValueError("layout needs at least one sensor and one motor")
    if layout.n_inter < 0:
        raise ValueError("interneuron count must be nonnegative")
    nodes: list[NodeSpec] = []
    for c, y in enumerate(_edge_positions(layout.n_sensors)):
        nodes.append(NodeSpec(len(nodes), 0.0, float(y), NodeKind.SENSOR, c))
    n_inhib = int(round(layout.inhibitory_fraction * layout.n_inter))
    for k, (x, y) in enumerate(rng.random((layout.n_inter, 2))):
        nodes.append(NodeSpec(len(nodes), float(x), float(y), NodeKind.INTER, -1, k < n_inhib))
    for c, y in enumerate(_edge_positions(layout.n_motors)):
        nodes.append(NodeSpec(len(nodes), 1.0, float(y), NodeKind.MOTOR, c))
    return nodes


def express(gene_value, x, y):
    """Signal level of a planar gradient whose direction is set by the gene.

    Vectorizes over array inputs.
    """
    angle = 2.0 * math.pi * np.asarray(gene_value, dtype=float) / GENE_PERIOD
    level = 0.5 + (np.asarray(x) - 0.5) * np.cos(angle) + (np.asarray(y) - 0.5) * np.sin(angle)
    out = np.clip(level, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def expression_profiles(nodes, genome: Genome) -> tuple[np.ndarray, np.ndarray]:
    """(ligand, receptor) expression matrices, each nodes x 5."""
    pos = np.array([n.position for n in nodes], dtype=float)
    lig = np.array([genome[g] for g in LIGAND_GENES])
    rec = np.array([genome[g] for g in RECEPTOR_GENES])
    ligand = express(lig[None, :], pos[:, :1], pos[:, 1:])
    receptor = express(rec[None, :], pos[:, :1], pos[:, 1:])
    return ligand, receptor


def coarse_wire(nodes, genome: Genome, w_max: float = 1.0) -> NetworkBlueprint:
    nodes = tuple(nodes)
    ligand, receptor = expression_profiles(nodes, genome)
    raw = receptor @ ligand.T / ligand.shape[1]
    bp = NetworkBlueprint(nodes, np.zeros_like(raw), w_max)
    weights = np.where(bp.permitted(), w_max * raw, 0.0)
    return replace(bp, weights=weights)


def apply_inhibition(blueprint: NetworkBlueprint) -> NetworkBlueprint:
    """Make outgoing weights of inhibitory interneurons negative."""
    sign = np.array([-1.0 if n.inhibitory else 1.0 for n in blueprint.nodes])
    return replace(blueprint, weights=blueprint.weights * sign[None, :])


def prune(blueprint: NetworkBlueprint, threshold: float) -> NetworkBlueprint:
    w = blueprint.weights
    return replace(blueprint, weights=np.where(np.abs(w) < threshold, 0.0, w))


def fine_map(
    blueprint: NetworkBlueprint,
    genome: Genome,
    epochs: int,
    rng: np.random.Generator,
    config: RunConfig | None = None,
    noise=None,
) -> NetworkBlueprint:
    """Refine weights by spontaneous activity, then prune weak synapses.

    Each epoch drives the sensors with uniform noise for ``settle_steps``
    network steps, then applies one ungated Hebbian update over the epoch's
    duration and one homeostatic correction. ``noise`` (epochs x sensors)
    overrides the random drive.
    """
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    config = config or RunConfig()
    state = netdyn.NetworkState.from_blueprint(blueprint, genome, config)
    n_s = state.n_sensors
    if noise is None:
        noise = rng.random((epochs, n_s))
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (epochs, n_s):
        raise ValueError(f"noise must have shape {(epochs, n_s)}")
    for epoch in range(epochs):
        for _ in range(config.settle_steps):
            netdyn.step_network(state, noise[epoch], config.dt)
        netdyn.hebbian_learn(state, config.learning_rate, config.settle_steps * config.dt, modulation=1.0)
        netdyn.homeostatic_scale(state, genome)
    return prune(replace(blueprint, weights=state.weights), config.prune_threshold)


def develop(genome: Genome, config: RunConfig, rng: np.random.Generator) -> NetworkBlueprint:
    """Full construction: place, coarse-wire, sign, fine-map."""
    nodes = place_nodes(LayoutConfig.from_config(config), rng)
    bp = apply_inhibition(coarse_wire(nodes, genome, config.w_max))
    return fine_map(bp, genome, config.fine_map_epochs, rng, config)
