import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gengap.population import (
    HyperparamSpace,
    ManifestError,
    ModelRecord,
    dump_manifest,
    gap,
    group_by,
    parse_manifest,
    validate_grid,
)
from gengap.synth import MeasureSpec, PlantSpec, generate_population, preset_space

from conftest import make_population


def minimal_manifest(**overrides):
    doc = {
        "task_id": "mini",
        "axes": [{"name": "bs", "values": [32, 512]}],
        "models": [
            {"coord": [0], "train_err": 0.0, "val_err": 0.1},
            {"coord": [1], "train_err": 0.01, "val_err": 0.3},
        ],
        "measures": {"mu": [1.0, 2.0]},
    }
    doc.update(overrides)
    return json.dumps(doc).encode()


def test_parse_minimal():
    pop = parse_manifest(minimal_manifest())
    assert pop.space.size == 2
    assert len(pop) == 2
    assert pop.measure("mu").tolist() == [1.0, 2.0]
    assert pop.gaps.tolist() == [0.1, 0.3 - 0.01]


def test_parse_duplicate_record():
    doc = json.loads(minimal_manifest())
    doc["models"].append({"coord": [0], "train_err": 0.0, "val_err": 0.2})
    doc["measures"]["mu"].append(3.0)
    with pytest.raises(ManifestError, match="duplicate") as exc:
        parse_manifest(json.dumps(doc))
    assert exc.value.record == 2


def test_parse_replicas_are_distinct():
    doc = json.loads(minimal_manifest())
    doc["models"].append({"coord": [0], "train_err": 0.0, "val_err": 0.2, "replica": 1})
    doc["measures"]["mu"].append(3.0)
    assert len(parse_manifest(json.dumps(doc))) == 3


def test_parse_task1_preset():
    pop, _ = generate_population(preset_space("task1"), PlantSpec(seed=1), task_id="task1")
    again = parse_manifest(dump_manifest(pop))
    assert again.space.cardinalities == (2, 2, 2, 2, 2, 3)
    assert again.space.size == 96
    assert len(again) == 96


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d["models"][1].update(val_err=1.5), "val_err"),
        (lambda d: d["models"][0].update(train_err=-0.1), "train_err"),
        (lambda d: d["models"][1].update(coord=[2]), "coord"),
        (lambda d: d["models"][1].update(coord=[0, 0]), "coord"),
        (lambda d: d["measures"].update(mu=[1.0]), "measures.mu"),
        (lambda d: d["models"][0].pop("val_err"), "val_err"),
    ],
)
def test_parse_errors_name_field(mutate, field):
    doc = json.loads(minimal_manifest())
    mutate(doc)
    with pytest.raises(ManifestError) as exc:
        parse_manifest(json.dumps(doc))
    assert exc.value.field == field


def test_parse_rejects_bad_documents():
    with pytest.raises(ManifestError, match="malformed JSON"):
        parse_manifest(b"{not json")
    with pytest.raises(ManifestError, match="unknown top-level"):
        parse_manifest(minimal_manifest(extra=1))
    with pytest.raises(ManifestError, match="non-finite"):
        parse_manifest(minimal_manifest().replace(b"2.0]", b"NaN]"))
    with pytest.raises(ManifestError, match="repeated values"):
        parse_manifest(minimal_manifest(axes=[{"name": "bs", "values": [32, 32]}]))
    with pytest.raises(ManifestError, match="duplicate axis"):
        HyperparamSpace((("a", (1,)), ("a", (2,))))


def test_axis_values_compared_as_written():
    # 0, 0.0 and false are different literals
    space = HyperparamSpace((("x", (0, 0.0, False)),))
    assert space.cardinalities == (3,)


def test_gap_examples():
    assert gap(ModelRecord((0,), 0.0, 0.0)) == 0.0
    assert gap(ModelRecord((0,), 0.0, 0.30)) == 0.30
    assert gap(ModelRecord((0,), 0.02, 0.22)) == pytest.approx(0.20, abs=1e-15)


@given(st.floats(0, 1), st.floats(0, 1))
def test_gap_antisymmetric(a, b):
    assert gap(ModelRecord((0,), a, b)) == -gap(ModelRecord((0,), b, a))


def test_group_by_examples():
    pop = make_population([2, 3], [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)], np.arange(6) / 10, {"mu": range(6)},
                          names=["lr", "depth"])
    groups = group_by(pop, [])
    assert len(groups) == 1 and len(groups[0]) == 6

    pop4 = make_population([2, 2, 2], list(itertools.product(range(2), repeat=3)), np.arange(8) / 10, {"mu": range(8)},
                           names=["lr", "depth", "wd"])
    groups = group_by(pop4, ["depth", "lr"])
    assert len(groups) == 4
    assert [g.key for g in groups] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(len(g) == 2 for g in groups)

    with pytest.raises(KeyError, match="unknown axis"):
        group_by(pop, ["width"])


def test_group_by_all_axes_task1():
    pop, _ = generate_population(preset_space("task1"), PlantSpec(seed=2))
    groups = group_by(pop, pop.space.names)
    # count distinct coordinate tuples independently
    distinct = {r.coord for r in pop.records}
    assert len(groups) == len(distinct) == 96
    assert all(len(g) == 1 for g in groups)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_group_by_partitions(data):
    cards = data.draw(st.lists(st.integers(1, 3), min_size=1, max_size=3))
    cells = data.draw(st.lists(st.tuples(*(st.integers(0, c - 1) for c in cards)), min_size=1, max_size=15))
    pop = make_population(cards, cells, [0.1] * len(cells), {})
    cond = data.draw(st.sets(st.sampled_from(pop.space.names)))
    groups = group_by(pop, cond)
    sizes = [len(g) for g in groups]
    assert sum(sizes) == len(pop)
    flat = np.concatenate([g.indices for g in groups])
    assert sorted(flat.tolist()) == list(range(len(pop)))
    positions = [pop.space.index(n) for n in sorted(cond, key=pop.space.index)]
    for grp in groups:
        for i in grp.indices:
            assert tuple(pop.records[i].coord[p] for p in positions) == grp.key


def test_validate_grid():
    pop, _ = generate_population(preset_space("task1"), PlantSpec(seed=3))
    rep = validate_grid(pop)
    assert rep.n_missing == 0 and rep.replica_histogram == {1: 96}

    keep = [i for i in range(len(pop)) if i not in (5, 17, 60)]
    holes = type(pop)(pop.task_id, pop.space, [pop.records[i] for i in keep])
    rep = validate_grid(holes)
    assert rep.n_missing == 3
    assert set(rep.missing_cells) == {pop.records[i].coord for i in (5, 17, 60)}

    const = make_population([2, 1], [(0, 0), (1, 0)], [0.1, 0.2], {}, names=["lr", "wd"])
    assert validate_grid(const).single_valued_axes == ("wd",)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_manifest_round_trip(seed, replicas):
    plant = PlantSpec(seed=seed, measures=(MeasureSpec("oracle"), MeasureSpec("independent_random")))
    pop, _ = generate_population(preset_space("task8"), plant, replicas)
    first = dump_manifest(pop)
    again = parse_manifest(first)
    assert dump_manifest(again) == first
    assert again.records == pop.records
    assert np.array_equal(again.measure("independent_random"), pop.measure("independent_random"))
