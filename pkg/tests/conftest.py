import numpy as np
import pytest

from gengap.population import HyperparamSpace, ModelRecord, Population


def make_population(cards, cells, gaps, measures, task_id="t", names=None):
    """Population from per-model cells and gaps (train_err fixed at 0 so the gap equals val_err)."""
    names = names or [f"a{i}" for i in range(len(cards))]
    space = HyperparamSpace(tuple((n, tuple(range(c))) for n, c in zip(names, cards)))
    seen = {}
    records = []
    for cell, g in zip(cells, gaps):
        cell = tuple(int(c) for c in cell)
        r = seen.get(cell, 0)
        seen[cell] = r + 1
        records.append(ModelRecord(cell, 0.0, float(g), replica=r))
    return Population(task_id, space, tuple(records), {k: np.asarray(v, dtype=float) for k, v in measures.items()})


def random_population(rng, max_models=12, max_axes=3, ties=None):
    """Small random population, optionally with tied gaps and measure values."""
    n_axes = int(rng.integers(1, max_axes + 1))
    cards = [int(rng.integers(1, 4)) for _ in range(n_axes)]
    n = int(rng.integers(2, max_models + 1))
    cells = [tuple(int(rng.integers(0, c)) for c in cards) for _ in range(n)]
    if ties is None:
        ties = bool(rng.integers(0, 2))
    if ties:
        gaps = rng.choice([0.0, 0.25, 0.5], size=n)
        mu = rng.choice([-1.0, 0.0, 1.0, 2.0], size=n)
    else:
        gaps = rng.uniform(0.0, 1.0, size=n)
        mu = rng.normal(size=n)
    return make_population(cards, cells, gaps, {"mu": mu})


def oracle_inputs(pop, measure="mu"):
    coords = [list(r.coord) for r in pop.records]
    cards = list(pop.space.cardinalities)
    g = [r.val_err - r.train_err for r in pop.records]
    mu = [float(v) for v in pop.measure(measure)]
    return coords, cards, g, mu


@pytest.fixture
def rng():
    return np.random.default_rng(20200715)


@pytest.fixture
def four_model_pop():
    """4 models on one binary axis A; agreeing and disagreeing pairs balance overall."""
    return make_population([2], [(0,), (0,), (1,), (1,)], [0.1, 0.2, 0.3, 0.4], {"mu": [10, 20, 5, 15]}, names=["A"])
