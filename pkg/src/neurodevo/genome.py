"""Evolvable parameter set and the bounded Gaussian mutation operator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class GenomeError(ValueError):
    """Raised for malformed genomes or gene tables."""


@dataclass(frozen=True)
class GeneSpec:
    name: str
    init_mut_std: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise GenomeError(f"gene {self.name}: lower {self.lower} must be < upper {self.upper}")
        if not self.init_mut_std > 0:
            raise GenomeError(f"gene {self.name}: mutation std must be positive")


LIGAND_GENES = tuple(f"Ligand_{k}" for k in range(1, 6))
RECEPTOR_GENES = tuple(f"Receptor_{k}" for k in range(1, 6))

_DEFAULT_ROWS = (
    *((name, 0.5, 0.0, 12.0) for name in LIGAND_GENES),
    *((name, 0.5, 0.0, 12.0) for name in RECEPTOR_GENES),
    ("sensory_adapt_min_scale_s0", 0.1, 0.0, 1.0),
    ("sensory_adapt_delta_scale_a1", 0.5, 0.0, 1.0),
    ("sensory_adapt_delta_threshold_a2", 0.5, 0.0, 20.0),
    ("homeostatic", 0.1, 0.0, 1.0),
    ("decay_proximity", 100.0, 0.0, 2000.0),
    ("decay_eating", 100.0, 0.0, 2000.0),
    ("decay_hunger", 100.0, 0.0, 2000.0),
)


@dataclass(frozen=True)
class GeneTable:
    """Ordered gene specs plus the current (possibly narrowed) mutation stds."""

    specs: tuple[GeneSpec, ...]
    current_mut_std: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        specs = tuple(self.specs)
        object.__setattr__(self, "specs", specs)
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise GenomeError("duplicate gene names")
        init = np.array([s.init_mut_std for s in specs], dtype=float)
        cur = init.copy() if self.current_mut_std is None else np.array(self.current_mut_std, dtype=float)
        if cur.shape != init.shape:
            raise GenomeError("current_mut_std length does not match specs")
        if np.any(cur <= 0) or np.any(cur > init):
            raise GenomeError("current mutation std must lie in (0, init_mut_std]")
        cur.setflags(write=False)
        object.__setattr__(self, "current_mut_std", cur)

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    @property
    def lower(self) -> np.ndarray:
        return np.array([s.lower for s in self.specs])

    @property
    def upper(self) -> np.ndarray:
        return np.array([s.upper for s in self.specs])

    @property
    def init_mut_std(self) -> np.ndarray:
        return np.array([s.init_mut_std for s in self.specs])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def __eq__(self, other):
        if not isinstance(other, GeneTable):
            return NotImplemented
        return self.specs == other.specs and np.array_equal(self.current_mut_std, other.current_mut_std)


def default_gene_table() -> GeneTable:
    return GeneTable(tuple(GeneSpec(*row) for row in _DEFAULT_ROWS))


@dataclass(frozen=True)
class Genome:
    """Immutable vector of gene values, index-aligned with a GeneTable."""

    values: np.ndarray
    table: GeneTable = field(default_factory=default_gene_table, compare=False, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.table),):
            raise GenomeError(f"expected {len(self.table)} gene values, got {values.shape}")
        for spec, v in zip(self.table.specs, values):
            if not (spec.lower <= v <= spec.upper):
                raise GenomeError(
                    f"gene {spec.name} = {v} outside bounds [{spec.lower:g}, {spec.upper:g}]"
                )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.table.index(name)])

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.table.names == other.table.names and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def to_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.table.names, self.values)}

    @classmethod
    def from_dict(cls, mapping: Mapping[str, float], table: GeneTable | None = None) -> "Genome":
        table = table or default_gene_table()
        missing = [n for n in table.names if n not in mapping]
        extra = [k for k in mapping if k not in table.names]
        if missing:
            raise GenomeError(f"missing genes: {', '.join(missing)}")
        if extra:
            raise GenomeError(f"unknown genes: {', '.join(extra)}")
        try:
            values = [float(mapping[n]) for n in table.names]
        except (TypeError, ValueError) as exc:
            raise GenomeError(f"non-numeric gene value: {exc}") from None
        return cls(np.array(values), table)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def random_genome(table: GeneTable, rng: np.random.Generator) -> Genome:
    return Genome(rng.uniform(table.lower, table.upper), table)


def perturb(genome: Genome, table: GeneTable, deltas: Sequence[float]) -> Genome:
    """Add ``deltas`` gene-wise and clamp to the table bounds."""
    deltas = np.asarray(deltas, dtype=float)
    return Genome(np.clip(genome.values + deltas, table.lower, table.upper), table)


def mutate(genome: Genome, table: GeneTable, rng: np.random.Generator) -> Genome:
    deltas = rng.standard_normal(len(table)) * table.current_mut_std
    return perturb(genome, table, deltas)


def narrow_mutation(table: GeneTable, factor: float) -> GeneTable:
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"narrowing factor must lie in (0, 1], got {factor}")
    return GeneTable(table.specs, table.current_mut_std * factor)


def load_genomes(lines: Iterable[str], table: GeneTable | None = None) -> list[Genome]:
    """Parse genome records; accepts flat name->value maps or log records with a ``genome`` key."""
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise GenomeError(f"malformed genome record: {exc}") from None
        if not isinstance(record, dict):
            raise GenomeError("genome record must be a JSON object")
        out.append(Genome.from_dict(record.get("genome", record), table))
    return out
