"""Generational loop, selection, logging and the cross-world assay.

Every random draw comes from a stream keyed by (master seed, generation,
individual, purpose), so results do not depend on worker scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import RunConfig, parse_narrowing
from .genome import GeneTable, Genome, default_gene_table, mutate, narrow_mutation, random_genome
from .lifetime import run_lifetime, trace_header
from .netdyn import NetworkState
from .neurodev import develop

log = logging.getLogger(__name__)

# stream purposes
_DEVELOPMENT, _WORLD, _CALORIES, _REPRODUCTION, _INITIAL = range(5)

STATS_COLUMNS = ("gen", "mean", "min", "max", "top_decile_mean", "high_cal_species")


class EvaluationError(RuntimeError):
    def __init__(self, genome_index: int, message: str):
        super().__init__(f"evaluation of genome {genome_index} failed: {message}")
        self.genome_index = genome_index


def generation_seed(master_seed: int, generation: int) -> int:
    ss = np.random.SeedSequence([master_seed, generation])
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


def high_cal_species_for(seed: int) -> int:
    """Calorie assignment shared by every individual evaluated under ``seed``."""
    return int(stream(seed, _CALORIES).integers(2))


@dataclass(frozen=True)
class EvalResult:
    genome_index: int
    calories: float
    captures_high: int
    captures_low: int
    world_seed: int
    high_cal_species: int = 0

    @property
    def captures(self) -> int:
        return self.captures_high + self.captures_low


@dataclass
class Evaluation:
    result: EvalResult
    trace: np.ndarray | None = None


def _evaluate(genome: Genome, seed: int, index: int, config: RunConfig, trace: bool = False) -> Evaluation:
    high = high_cal_species_for(seed)
    try:
        blueprint = develop(genome, config, stream(seed, index, _DEVELOPMENT))
        network = NetworkState.from_blueprint(blueprint, genome, config)
        life = run_lifetime(network, genome, config, stream(seed, index, _WORLD), high, trace=trace)
        world = life.world
        if world.prey_pos.shape[0] != config.n_prey:
            raise RuntimeError("prey count changed")
        if world.total_calories != world.accounted_calories():
            raise RuntimeError("calorie accounting mismatch")
        if np.abs(network.weights).max(initial=0.0) > network.w_max:
            raise RuntimeError("weight bound violated")
    except EvaluationError:
        raise
    except Exception as exc:
        raise EvaluationError(index, str(exc)) from exc
    result = EvalResult(index, world.total_calories, world.captures_high, world.captures_low, seed, high)
    return Evaluation(result, life.trace)


def evaluate(genome: Genome, generation_seed: int, individual_index: int, config: RunConfig) -> EvalResult:
    """Develop ``genome`` and run one lifetime in its (generation, individual) world."""
    return _evaluate(genome, generation_seed, individual_index, config).result


def _evaluate_star(args):
    return evaluate(*args)


def evaluate_population(population: Sequence[Genome], seed: int, config: RunConfig, workers: int = 1,
                        pool: ProcessPoolExecutor | None = None) -> list[EvalResult]:
    jobs = [(g, seed, i, config) for i, g in enumerate(population)]
    if pool is not None:
        return list(pool.map(_evaluate_star, jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_evaluate_star, jobs))
    return [evaluate(*job) for job in jobs]


def capture_histogram(counts: Sequence[int], n_bins: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of capture counts over [0, max] with integer bin width
    ``max(1, ceil((max + 1) / n_bins))``; returns (counts, left edges)."""
    counts = np.asarray(counts, dtype=int)
    top = int(counts.max()) if counts.size else 0
    width = max(1, math.ceil((top + 1) / n_bins))
    n = math.ceil((top + 1) / width)
    edges = np.arange(n + 1) * width
    hist, _ = np.histogram(counts, bins=edges)
    return hist, edges[:-1]


def top_decile_mean(values: Sequence[float]) -> float:
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    k = max(1, math.ceil(len(v) / 10))
    return float(v[:k].mean())


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    mean: float
    min: float
    max: float
    top_decile_mean: float
    high_cal_species: int
    mean_captures: float
    histogram: tuple[int, ...]

    @classmethod
    def from_results(cls, generation: int, results: Sequence[EvalResult], high_cal_species: int) -> "GenerationStats":
        cal = np.array([r.calories for r in results])
        hist, _ = capture_histogram([r.captures for r in results])
        return cls(generation, float(cal.mean()), float(cal.min()), float(cal.max()), top_decile_mean(cal),
                   high_cal_species, float(np.mean([r.captures for r in results])), tuple(int(h) for h in hist))

    def row(self) -> list:
        return [self.generation, repr(self.mean), repr(self.min), repr(self.max),
                repr(self.top_decile_mean), "AB"[self.high_cal_species]]


def rank(results: Sequence[EvalResult]) -> list[EvalResult]:
    """Best first; ties go to the lower genome index."""
    return sorted(results, key=lambda r: (-r.calories, r.genome_index))


def select_and_reproduce(population: Sequence[Genome], results: Sequence[EvalResult], table: GeneTable,
                         rng: np.random.Generator, elite_fraction: float = 0.1) -> list[Genome]:
    """Truncation selection: the top decile survives unchanged and parents
    every offspring slot (uniformly, with replacement)."""
    if not results:
        raise ValueError("cannot select from empty results")
    size = len(population)
    n_elite = max(1, math.ceil(size * elite_fraction))
    elites = [population[r.genome_index] for r in rank(results)[:n_elite]]
    parents = rng.integers(n_elite, size=size - n_elite)
    return elites + [mutate(elites[p], table, rng) for p in parents]


@dataclass
class RunHistory:
    stats: list[GenerationStats] = field(default_factory=list)
    results: list[list[EvalResult]] = field(default_factory=list)
    populations: list[list[Genome]] = field(default_factory=list)
    narrowed_at: list[int] = field(default_factory=list)

    def best_genome(self, generation: int = -1) -> Genome:
        best = rank(self.results[generation])[0]
        return self.populations[generation][best.genome_index]


class RunWriter:
    """Per-run directory: stats.csv, genomes.jsonl and optional traces."""

    def __init__(self, out_dir: str | Path, config: RunConfig):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "config.txt").write_text(config.to_text())
        self._stats = open(self.dir / "stats.csv", "w", newline="")
        self._stats_csv = csv.writer(self._stats, lineterminator="\n")
        self._stats_csv.writerow(STATS_COLUMNS)
        self._genomes = open(self.dir / "genomes.jsonl", "w")

    def generation(self, stats: GenerationStats, population: Sequence[Genome], results: Sequence[EvalResult]):
        self._stats_csv.writerow(stats.row())
        for genome, r in zip(population, results):
            record = {"generation": stats.generation, "index": r.genome_index, "calories": r.calories,
                      "captures_high": r.captures_high, "captures_low": r.captures_low,
                      "genome": genome.to_dict()}
            self._genomes.write(json.dumps(record) + "\n")
        self._stats.flush()
        self._genomes.flush()

    def trace(self, name: str, trace: np.ndarray, n_prey: int):
        write_trace(self.dir / name, trace, n_prey)

    def close(self):
        self._stats.close()
        self._genomes.close()


def write_trace(path: str | Path, trace: np.ndarray, n_prey: int):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(n_prey))
        species_cols = {12 + 3 * k for k in range(n_prey)}
        for row in trace:
            w.writerow([int(v) if c in species_cols else repr(float(v)) for c, v in enumerate(row)])


def _plateaued(stats: Sequence[GenerationStats], window: int) -> bool:
    if len(stats) <= window:
        return False
    best_before = max(s.top_decile_mean for s in stats[:-window])
    return max(s.top_decile_mean for s in stats[-window:]) <= best_before


def run_evolution(config: RunConfig, out_dir: str | Path | None = None, workers: int | None = None,
                  on_generation: Callable[[GenerationStats], None] | None = None,
                  table: GeneTable | None = None) -> RunHistory:
    """Evaluate, log and reproduce for generations 0..G.

    Narrowing follows ``config.narrowing``: an explicit {generation: factor}
    schedule, or "auto" (halve once after the top-decile mean has not
    improved for ``narrowing_plateau`` generations).
    """
    workers = config.workers if workers is None else workers
    table = table or default_gene_table()
    schedule = parse_narrowing(config.narrowing)
    auto_narrowed = False
    history = RunHistory()
    writer = RunWriter(out_dir, config) if out_dir is not None else None
    init_rng = stream(generation_seed(config.master_seed, 0), _INITIAL)
    population = [random_genome(table, init_rng) for _ in range(config.population)]
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for gen in range(config.generations + 1):
            seed = generation_seed(config.master_seed, gen)
            results = evaluate_population(population, seed, config, pool=pool)
            stats = GenerationStats.from_results(gen, results, high_cal_species_for(seed))
            history.stats.append(stats)
            history.results.append(results)
            history.populations.append(list(population))
            if writer is not None:
                writer.generation(stats, population, results)
                if config.trace:
                    best = rank(results)[0]
                    ev = _evaluate(population[best.genome_index], seed, best.genome_index, config, trace=True)
                    writer.trace(f"trace_g{gen:04d}_best.csv", ev.trace, config.n_prey)
            log.info("gen %d mean %.2f max %.2f top10 %.2f", gen, stats.mean, stats.max, stats.top_decile_mean)
            if on_generation is not None:
                on_generation(stats)
            if gen == config.generations:
                break
            factor = None
            if schedule == "auto":
                if not auto_narrowed and _plateaued(history.stats, config.narrowing_plateau):
                    factor, auto_narrowed = config.narrowing_factor, True
            elif gen in schedule:
                factor = schedule[gen]
            if factor is not None:
                table = narrow_mutation(table, factor)
                history.narrowed_at.append(gen)
                log.info("gen %d: mutation narrowed by %g", gen, factor)
            population = select_and_reproduce(population, results, table, stream(seed, _REPRODUCTION),
                                              config.elite_fraction)
    finally:
        if pool is not None:
            pool.shutdown()
        if writer is not None:
            writer.close()
    return history


@dataclass
class AssayResult:
    results: list[EvalResult]
    histogram: np.ndarray
    bin_edges: np.ndarray

    @property
    def captures(self) -> np.ndarray:
        return np.array([r.captures for r in self.results])

    def coefficient_of_variation(self) -> float:
        c = self.captures.astype(float)
        return float(c.std(ddof=1) / c.mean()) if c.size > 1 and c.mean() > 0 else float("nan")


def assay_seed(base_seed: int, world: int) -> int:
    return generation_seed(base_seed, world) ^ 0x5A5A5A5A


def cross_world_assay(genome: Genome, n_worlds: int, base_seed: int, config: RunConfig,
                      workers: int = 1) -> AssayResult:
    """Evaluate one genome in ``n_worlds`` independent worlds (calorie
    assignment re-drawn per world)."""
    if n_worlds < 1:
        raise ValueError("n_worlds must be >= 1")
    jobs = [(genome, assay_seed(base_seed, w), 0, config) for w in range(n_worlds)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_evaluate_star, jobs))
    else:
        results = [evaluate(*j) for j in jobs]
    results = [EvalResult(w, r.calories, r.captures_high, r.captures_low, r.world_seed, r.high_cal_species)
               for w, r in enumerate(results)]
    hist, edges = capture_histogram([r.captures for r in results])
    return AssayResult(results, hist, edges)


def replay(genome: Genome, world_seed: int, config: RunConfig) -> Evaluation:
    """One fully traced lifetime in the world keyed by ``world_seed``."""
    return _evaluate(genome, world_seed, 0, config, trace=True)
