"""Command-line entry point: ``evolve``, ``assay`` and ``replay``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .evo import EvaluationError, cross_world_assay, replay, run_evolution, write_trace
from .genome import Genome, GenomeError, load_genomes

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("neurodevo")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="master / base seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="evaluation worker processes")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable; wins over --config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurodevo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run the generational loop")
    _common(p)

    p = sub.add_parser("assay", help="evaluate one genome across many random worlds")
    _common(p)
    p.add_argument("--genome", required=True, help="genome JSON / JSONL file")
    p.add_argument("--record", type=int, default=0, help="record index within a JSONL file")
    p.add_argument("--best", action="store_true", help="pick the highest-calorie record of the last generation")
    p.add_argument("--worlds", type=int, default=100)

    p = sub.add_parser("replay", help="run one fully traced lifetime")
    _common(p)
    p.add_argument("--genome", required=True)
    p.add_argument("--record", type=int, default=0)
    p.add_argument("--best", action="store_true")
    p.add_argument("--world-seed", type=int, help="world seed (defaults to --seed / master_seed)")
    return parser


def resolve_config(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v
    for flag, key in (("seed", "master_seed"), ("out", "out"), ("workers", "workers")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    return load_config(args.config, overrides)


def read_genome(path: str, record: int = 0, best: bool = False) -> Genome:
    p = Path(path)
    if not p.is_file():
        raise GenomeError(f"genome file not found: {path}")
    text = p.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None
    if isinstance(obj, dict):
        return Genome.from_dict(obj.get("genome", obj))
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if best:
        records = [json.loads(ln) for ln in lines]
        last = max(r.get("generation", 0) for r in records)
        pick = max((r for r in records if r.get("generation", 0) == last), key=lambda r: r.get("calories", 0.0))
        return Genome.from_dict(pick.get("genome", pick))
    genomes = load_genomes(lines[record:record + 1])
    if not genomes:
        raise GenomeError(f"{path}: no genome record at index {record}")
    return genomes[0]


def _prepare_out(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.to_text())
    return out


def histogram_text(hist, edges) -> str:
    width = int(edges[1] - edges[0]) if len(edges) > 1 else 1
    lines = [f"# capture-count histogram, bin width {width}, bins [lo, lo+{width})"]
    top = max(int(h) for h in hist) if len(hist) else 0
    for lo, count in zip(edges, hist):
        bar = "#" * (0 if top == 0 else round(40 * count / top))
        lines.append(f"{int(lo):6d}-{int(lo) + width - 1:<6d} {int(count):5d} {bar}")
    return "\n".join(lines) + "\n"


def cmd_evolve(config: RunConfig) -> int:
    out = Path(config.out)

    def report(s):
        print(f"gen {s.generation:4d}  mean {s.mean:8.2f}  max {s.max:8.2f}  top10% {s.top_decile_mean:8.2f}  "
              f"captures {s.mean_captures:7.2f}  high={'AB'[s.high_cal_species]}", flush=True)

    run_evolution(config, out, on_generation=report)
    return EXIT_OK


def cmd_assay(genome: Genome, n_worlds: int, seed: int, config: RunConfig) -> int:
    if n_worlds < 1:
        raise ConfigError("--worlds must be >= 1")
    out = _prepare_out(config)
    assay = cross_world_assay(genome, n_worlds, seed, config, workers=config.workers)
    with open(out / "assay.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["world", "world_seed", "high_cal_species", "captures_high", "captures_low", "captures", "calories"])
        for r in assay.results:
            w.writerow([r.genome_index, r.world_seed, "AB"[r.high_cal_species], r.captures_high,
                        r.captures_low, r.captures, repr(r.calories)])
    text = histogram_text(assay.histogram, assay.bin_edges)
    (out / "histogram.txt").write_text(text)
    print(text, end="")
    c = assay.captures
    print(f"worlds {n_worlds}  mean captures {c.mean():.2f}  sd {c.std(ddof=1) if c.size > 1 else 0.0:.2f}  "
          f"cv {assay.coefficient_of_variation():.3f}")
    return EXIT_OK


def cmd_replay(genome: Genome, world_seed: int, config: RunConfig) -> int:
    out = _prepare_out(config)
    ev = replay(genome, world_seed, config)
    write_trace(out / "trace.csv", ev.trace, config.n_prey)
    r = ev.result
    print(f"calories {r.calories:g}  captures high {r.captures_high}  low {r.captures_low}  "
          f"records {len(ev.trace)}  -> {out / 'trace.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        if args.command == "evolve":
            return cmd_evolve(config)
        genome = read_genome(args.genome, args.record, args.best)
        if args.command == "assay":
            return cmd_assay(genome, args.worlds, config.master_seed, config)
        world_seed = args.world_seed if args.world_seed is not None else config.master_seed
        return cmd_replay(genome, world_seed, config)
    except (ConfigError, GenomeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvaluationError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
