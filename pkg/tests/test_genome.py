import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurodevo.genome import (
    GeneSpec, GeneTable, Genome, GenomeError, default_gene_table, load_genomes, mutate,
    narrow_mutation, perturb, random_genome,
)

from conftest import mid_genome

TABLE_ROWS = {
    **{f"Ligand_{k}": (0.5, 0, 12) for k in range(1, 6)},
    **{f"Receptor_{k}": (0.5, 0, 12) for k in range(1, 6)},
    "sensory_adapt_min_scale_s0": (0.1, 0, 1),
    "sensory_adapt_delta_scale_a1": (0.5, 0, 1),
    "sensory_adapt_delta_threshold_a2": (0.5, 0, 20),
    "homeostatic": (0.1, 0, 1),
    "decay_proximity": (100, 0, 2000),
    "decay_eating": (100, 0, 2000),
    "decay_hunger": (100, 0, 2000),
}


def test_default_table_matches_reference_rows():
    table = default_gene_table()
    assert len(table) == 17
    assert set(table.names) == set(TABLE_ROWS)
    for spec in table.specs:
        assert (spec.init_mut_std, spec.lower, spec.upper) == TABLE_ROWS[spec.name]
    np.testing.assert_array_equal(table.current_mut_std, table.init_mut_std)


def test_ligand_and_decay_rows():
    table = default_gene_table()
    lig = table.specs[table.index("Ligand_1")]
    assert (lig.init_mut_std, lig.lower, lig.upper) == (0.5, 0, 12)
    hun = table.specs[table.index("decay_hunger")]
    assert (hun.init_mut_std, hun.lower, hun.upper) == (100, 0, 2000)


def test_gene_spec_validation():
    with pytest.raises(GenomeError):
        GeneSpec("bad", 0.1, 1.0, 1.0)
    with pytest.raises(GenomeError):
        GeneSpec("bad", 0.0, 0.0, 1.0)
    with pytest.raises(GenomeError):
        GeneTable((GeneSpec("a", 1, 0, 1), GeneSpec("a", 1, 0, 1)))


def test_random_genome_within_bounds_and_deterministic():
    table = default_gene_table()
    for seed in range(50):
        g = random_genome(table, np.random.default_rng(seed))
        assert np.all(g.values >= table.lower) and np.all(g.values <= table.upper)
    a = random_genome(table, np.random.default_rng(7))
    b = random_genome(table, np.random.default_rng(7))
    assert a == b


def test_random_homeostatic_mean():
    table = default_gene_table()
    rng = np.random.default_rng(123)
    vals = [random_genome(table, rng)["homeostatic"] for _ in range(10_000)]
    assert abs(np.mean(vals) - 0.5) < 0.02


def _with(name, value):
    table = default_gene_table()
    g = mid_genome(**{name: value})
    d = np.zeros(len(table))
    return g, table, d


@pytest.mark.parametrize("name, start, delta, expected", [
    ("Ligand_1", 6.0, 0.5, 6.5),
    ("Ligand_2", 11.9, 0.4, 12.0),
    ("homeostatic", 0.05, -0.2, 0.0),
])
def test_perturb_examples(name, start, delta, expected):
    g, table, d = _with(name, start)
    d[table.index(name)] = delta
    child = perturb(g, table, d)
    assert child[name] == pytest.approx(expected, abs=1e-12)
    assert g[name] == start


def test_mutate_uses_standard_normal_scaled_by_current_std():
    table = narrow_mutation(default_gene_table(), 0.5)
    g = mid_genome()
    child = mutate(g, table, np.random.default_rng(5))
    draws = np.random.default_rng(5).standard_normal(17) * table.current_mut_std
    expected = np.clip(g.values + draws, table.lower, table.upper)
    np.testing.assert_array_equal(child.values, expected)


def test_narrowing_examples():
    table = default_gene_table()
    assert narrow_mutation(table, 1.0) == table
    half = narrow_mutation(table, 0.5)
    assert half.current_mut_std[half.index("Ligand_1")] == 0.25
    quarter = narrow_mutation(half, 0.5)
    assert quarter.current_mut_std[quarter.index("Ligand_1")] == 0.125
    np.testing.assert_array_equal(quarter.init_mut_std, table.init_mut_std)


@pytest.mark.parametrize("factor", [0.0, -0.5, 1.5])
def test_narrowing_rejects_bad_factor(factor):
    with pytest.raises(ValueError):
        narrow_mutation(default_gene_table(), factor)


def test_bounds_hold_over_many_mutations():
    table = default_gene_table()
    rng = np.random.default_rng(0)
    g = random_genome(table, rng)
    lo, hi = table.lower, table.upper
    for _ in range(100_000):
        g = mutate(g, table, rng)
        assert np.all(g.values >= lo) and np.all(g.values <= hi)


def test_mutation_delta_std():
    # mid-range a2 gene (range 20, std 0.5): clamping essentially never triggers
    table = default_gene_table()
    k = table.index("sensory_adapt_delta_threshold_a2")
    g = mid_genome()
    rng = np.random.default_rng(42)
    deltas = np.array([mutate(g, table, rng).values[k] - g.values[k] for _ in range(100_000)])
    assert abs(deltas.std(ddof=1) / table.current_mut_std[k] - 1.0) < 0.05
    assert abs(deltas.mean()) < 3 * 0.5 / np.sqrt(deltas.size)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), factor=st.floats(0.01, 1.0))
def test_mutate_is_pure_and_bounded(seed, factor):
    table = narrow_mutation(default_gene_table(), factor)
    parent = random_genome(table, np.random.default_rng(seed))
    before = parent.values.copy()
    a = mutate(parent, table, np.random.default_rng(seed + 1))
    b = mutate(parent, table, np.random.default_rng(seed + 1))
    np.testing.assert_array_equal(parent.values, before)
    assert a == b
    assert np.all(a.values >= table.lower) and np.all(a.values <= table.upper)


def test_genome_rejects_out_of_bounds_naming_gene():
    with pytest.raises(GenomeError, match=r"Ligand_1.*12"):
        mid_genome(Ligand_1=13.0)


def test_genome_values_read_only():
    g = mid_genome()
    with pytest.raises(ValueError):
        g.values[0] = 1.0


def test_serialization_round_trip():
    g = random_genome(default_gene_table(), np.random.default_rng(3))
    assert Genome.from_dict(json.loads(g.to_json())) == g
    record = json.dumps({"generation": 4, "index": 2, "genome": g.to_dict()})
    assert load_genomes([g.to_json(), "", record]) == [g, g]
    assert list(json.loads(g.to_json())) == list(default_gene_table().names)


def test_from_dict_errors():
    d = mid_genome().to_dict()
    missing = dict(d)
    del missing["homeostatic"]
    with pytest.raises(GenomeError, match="missing"):
        Genome.from_dict(missing)
    with pytest.raises(GenomeError, match="unknown"):
        Genome.from_dict({**d, "extra_gene": 1.0})
    with pytest.raises(GenomeError):
        load_genomes(["not json"])
