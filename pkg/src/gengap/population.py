"""Model populations: hyperparameter grids, trained-model records and measures.

A population is everything known about one task: the hyperparameter axes,
one record per trained model (grid coordinate plus precomputed train and
validation error rates) and any number of named complexity measures aligned
with the record order.  Populations are immutable once parsed.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ManifestError",
    "HyperparamSpace",
    "ModelRecord",
    "MeasureVector",
    "Population",
    "Group",
    "GridReport",
    "parse_manifest",
    "dump_manifest",
    "gap",
    "group_by",
    "validate_grid",
]

AxisValue = int | float | str | bool

_TOP_LEVEL_KEYS = {"task_id", "axes", "models", "measures"}
_MODEL_KEYS = {"coord", "train_err", "val_err", "replica", "weights"}


class ManifestError(ValueError):
    """Raised when a manifest is malformed or violates a population invariant."""

    def __init__(self, message: str, record: int | None = None, field: str | None = None):
        where = []
        if record is not None:
            where.append(f"record {record}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.record = record
        self.field = field


def _literal_key(value: AxisValue) -> str:
    # 0, 0.0 and False must stay distinct axis values
    return json.dumps(value)


@dataclass(frozen=True)
class HyperparamSpace:
    """Ordered hyperparameter axes and their discrete value sets."""

    axes: tuple[tuple[str, tuple[AxisValue, ...]], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.axes]
        if len(set(names)) != len(names):
            dup = [n for n, c in Counter(names).items() if c > 1]
            raise ManifestError(f"duplicate axis names {dup}", field="axes")
        for name, values in self.axes:
            if not isinstance(name, str) or not name:
                raise ManifestError(f"axis name must be a non-empty string, got {name!r}", field="axes")
            if len(values) == 0:
                raise ManifestError(f"axis {name!r} has no values", field="axes")
            keys = [_literal_key(v) for v in values]
            if len(set(keys)) != len(keys):
                raise ManifestError(f"axis {name!r} has repeated values", field="axes")

    @classmethod
    def from_dict(cls, axes: Mapping[str, Sequence[AxisValue]]) -> "HyperparamSpace":
        return cls(tuple((name, tuple(values)) for name, values in axes.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(values) for _, values in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.cardinalities)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown axis {name!r}; known axes: {list(self.names)}") from None

    def values(self, name: str) -> tuple[AxisValue, ...]:
        return self.axes[self.index(name)][1]

    def coords(self) -> Iterable[tuple[int, ...]]:
        """All grid coordinates in lexicographic order."""
        return itertools.product(*(range(c) for c in self.cardinalities))

    def multi_valued(self) -> tuple[str, ...]:
        return tuple(name for name, values in self.axes if len(values) >= 2)


@dataclass(frozen=True)
class ModelRecord:
    coord: tuple[int, ...]
    train_err: float
    val_err: float
    replica: int = 0
    weights_ref: str | None = None

    @property
    def gap(self) -> float:
        return gap(self)

    @property
    def identity(self) -> tuple[tuple[int, ...], int]:
        return self.coord, self.replica


@dataclass(frozen=True)
class MeasureVector:
    name: str
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ManifestError(f"measure {self.name!r} must be a flat list", field=f"measures.{self.name}")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise ManifestError(
                f"measure {self.name!r} has a non-finite value", record=int(bad[0]), field=f"measures.{self.name}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)


def gap(record: ModelRecord) -> float:
    """Generalization gap: validation error minus training error."""
    return record.val_err - record.train_err


@dataclass(frozen=True)
class Population:
    task_id: str
    space: HyperparamSpace
    records: tuple[ModelRecord, ...]
    measures: Mapping[str, MeasureVector] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        cards = self.space.cardinalities
        seen: dict[tuple[tuple[int, ...], int], int] = {}
        for i, rec in enumerate(self.records):
            _check_record(rec, i, cards)
            if rec.identity in seen:
                raise ManifestError(
                    f"duplicate model at coord {list(rec.coord)} replica {rec.replica} "
                    f"(first seen at record {seen[rec.identity]})",
                    record=i,
                    field="coord",
                )
            seen[rec.identity] = i
        measures = {}
        for name in sorted(self.measures):
            mv = self.measures[name]
            if not isinstance(mv, MeasureVector):
                mv = MeasureVector(name, mv)
            if len(mv) != len(self.records):
                raise ManifestError(
                    f"measure {name!r} has {len(mv)} values for {len(self.records)} models",
                    field=f"measures.{name}",
                )
            measures[name] = mv
        object.__setattr__(self, "measures", measures)

        coords = np.array([r.coord for r in self.records], dtype=np.int64).reshape(len(self.records), len(cards))
        gaps = np.array([gap(r) for r in self.records], dtype=np.float64)
        coords.setflags(write=False)
        gaps.setflags(write=False)
        object.__setattr__(self, "_coords", coords)
        object.__setattr__(self, "_gaps", gaps)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def coords(self) -> np.ndarray:
        """(n_models, n_axes) array of value indices."""
        return self._coords

    @property
    def gaps(self) -> np.ndarray:
        return self._gaps

    def measure(self, name: str) -> np.ndarray:
        try:
            return self.measures[name].values
        except KeyError:
            raise KeyError(f"unknown measure {name!r}; available: {sorted(self.measures)}") from None

    def with_measure(self, name: str, values: Sequence[float], *, replace: bool = False) -> "Population":
        if name in self.measures and not replace:
            raise ManifestError(f"measure {name!r} already exists", field=f"measures.{name}")
        measures = dict(self.measures)
        measures[name] = MeasureVector(name, np.asarray(values, dtype=np.float64))
        return Population(self.task_id, self.space, self.records, measures)

    def permuted(self, order: Sequence[int]) -> "Population":
        """Same population with records (and measures) reordered."""
        order = list(order)
        if sorted(order) != list(range(len(self.records))):
            raise ValueError("order must be a permutation of record positions")
        records = [self.records[i] for i in order]
        measures = {name: mv.values[order] for name, mv in self.measures.items()}
        return Population(self.task_id, self.space, records, measures)


def _check_record(rec: ModelRecord, i: int, cards: Sequence[int]) -> None:
    if len(rec.coord) != len(cards):
        raise ManifestError(f"coord has {len(rec.coord)} entries, expected {len(cards)}", record=i, field="coord")
    for axis, (idx, card) in enumerate(zip(rec.coord, cards)):
        if isinstance(idx, bool) or not isinstance(idx, (int, np.integer)):
            raise ManifestError(f"coord[{axis}] must be an integer, got {idx!r}", record=i, field="coord")
        if not 0 <= idx < card:
            raise ManifestError(
                f"coord[{axis}]={idx} is not a value index of an axis with {card} values", record=i, field="coord"
            )
    for name in ("train_err", "val_err"):
        v = getattr(rec, name)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ManifestError(f"must be a finite number, got {v!r}", record=i, field=name)
        if not 0.0 <= v <= 1.0:
            raise ManifestError(f"error rate {v!r} outside [0, 1]", record=i, field=name)
    if isinstance(rec.replica, bool) or not isinstance(rec.replica, int):
        raise ManifestError(f"replica must be an integer, got {rec.replica!r}", record=i, field="replica")


# -- manifest I/O ------------------------------------------------------------


def parse_manifest(data: bytes | str) -> Population:
    """Parse and validate a population manifest (UTF-8 JSON)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestError(f"manifest is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ManifestError(f"unknown top-level keys {sorted(unknown)}")
    missing = {"task_id", "axes", "models"} - set(doc)
    if missing:
        raise ManifestError(f"missing top-level keys {sorted(missing)}")

    task_id = doc["task_id"]
    if not isinstance(task_id, str):
        raise ManifestError("task_id must be a string", field="task_id")

    axes_doc = doc["axes"]
    if not isinstance(axes_doc, list):
        raise ManifestError("axes must be a list", field="axes")
    axes = []
    for j, ax in enumerate(axes_doc):
        if not isinstance(ax, dict) or set(ax) != {"name", "values"}:
            raise ManifestError(f"axes[{j}] must be an object with exactly 'name' and 'values'", field="axes")
        values = ax["values"]
        if not isinstance(values, list) or any(isinstance(v, (list, dict)) or v is None for v in values):
            raise ManifestError(f"axes[{j}].values must be a list of scalars or strings", field="axes")
        axes.append((ax["name"], tuple(values)))
    space = HyperparamSpace(tuple(axes))

    models_doc = doc["models"]
    if not isinstance(models_doc, list):
        raise ManifestError("models must be a list", field="models")
    records = []
    for i, m in enumerate(models_doc):
        if not isinstance(m, dict):
            raise ManifestError("model entry must be an object", record=i)
        unknown = set(m) - _MODEL_KEYS
        if unknown:
            raise ManifestError(f"unknown keys {sorted(unknown)}", record=i)
        for key in ("coord", "train_err", "val_err"):
            if key not in m:
                raise ManifestError("missing", record=i, field=key)
        if not isinstance(m["coord"], list):
            raise ManifestError("coord must be a list of integers", record=i, field="coord")
        weights = m.get("weights")
        if weights is not None and not isinstance(weights, str):
            raise ManifestError("weights must be a string path", record=i, field="weights")
        records.append(
            ModelRecord(
                coord=tuple(m["coord"]),
                train_err=m["train_err"],
                val_err=m["val_err"],
                replica=m.get("replica", 0),
                weights_ref=weights,
            )
        )

    measures_doc = doc.get("measures", {})
    if not isinstance(measures_doc, dict):
        raise ManifestError("measures must be an object", field="measures")
    measures = {}
    for name, vals in measures_doc.items():
        if not isinstance(vals, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
            raise ManifestError("must be a list of numbers", field=f"measures.{name}")
        measures[name] = MeasureVector(name, np.array(vals, dtype=np.float64))

    return Population(task_id, space, tuple(records), measures)


def _reject_constant(name: str) -> Any:
    raise ManifestError(f"non-finite JSON constant {name}")


def dump_manifest(pop: Population, *, indent: int | None = None) -> bytes:
    """Serialize a population back to manifest JSON.  Output is byte-stable."""
    models = []
    for rec in pop.records:
        m: dict[str, Any] = {
            "coord": [int(c) for c in rec.coord],
            "train_err": rec.train_err,
            "val_err": rec.val_err,
        }
        if rec.replica != 0:
            m["replica"] = rec.replica
        if rec.weights_ref is not None:
            m["weights"] = rec.weights_ref
        models.append(m)
    doc = {
        "task_id": pop.task_id,
        "axes": [{"name": name, "values": list(values)} for name, values in pop.space.axes],
        "models": models,
        "measures": {name: [float(v) for v in mv.values] for name, mv in pop.measures.items()},
    }
    return (json.dumps(doc, indent=indent, allow_nan=False) + "\n").encode("utf-8")


# -- grouping ----------------------------------------------------------------


@dataclass(frozen=True)
class Group:
    """Models sharing the same values on a set of conditioning axes."""

    key: tuple[int, ...]
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def _axis_positions(space: HyperparamSpace, cond: Iterable[str]) -> list[int]:
    positions = set()
    for name in cond:
        if name not in space.names:
            raise KeyError(f"unknown axis {name!r} in conditioning set; known axes: {list(space.names)}")
        positions.add(space.index(name))
    return sorted(positions)


def group_by(pop: Population, cond: Iterable[str]) -> list[Group]:
    """Partition records by their values on the axes in ``cond``.

    One group per combination of values (so empty groups appear on incomplete
    grids), ordered lexicographically in axis order then value index.  An
    empty ``cond`` yields a single group holding every record.
    """
    positions = _axis_positions(pop.space, cond)
    return _group_positions(pop, positions)


def _group_positions(pop: Population, positions: Sequence[int]) -> list[Group]:
    n = len(pop)
    if not positions:
        return [Group((), np.arange(n, dtype=np.int64))]
    cards = [pop.space.cardinalities[p] for p in positions]
    codes = np.zeros(n, dtype=np.int64)
    for p, c in zip(positions, cards):
        codes = codes * c + pop.coords[:, p]
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    n_groups = math.prod(cards)
    bounds = np.searchsorted(sorted_codes, np.arange(n_groups + 1), side="left")
    groups = []
    for code, key in enumerate(itertools.product(*(range(c) for c in cards))):
        groups.append(Group(key, order[bounds[code] : bounds[code + 1]]))
    return groups


def slices_along(pop: Population, axis: str) -> list[Group]:
    """Groups of models that differ only in ``axis`` (all other axes fixed)."""
    target = pop.space.index(axis)
    others = [p for p in range(pop.space.n_axes) if p != target]
    return _group_positions(pop, others)


# -- grid diagnostics --------------------------------------------------------


@dataclass(frozen=True)
class GridReport:
    missing_cells: tuple[tuple[int, ...], ...]
    replica_histogram: Mapping[int, int]
    single_valued_axes: tuple[str, ...]

    @property
    def n_missing(self) -> int:
        return len(self.missing_cells)

    @property
    def complete(self) -> bool:
        return not self.missing_cells


def validate_grid(pop: Population) -> GridReport:
    """Report missing grid cells, replicas per cell and single-valued axes."""
    per_cell = Counter(rec.coord for rec in pop.records)
    missing = tuple(c for c in pop.space.coords() if c not in per_cell)
    hist = Counter(per_cell.values())
    if missing:
        hist[0] = len(missing)
    single = tuple(name for name, values in pop.space.axes if len(values) == 1)
    return GridReport(missing, dict(sorted(hist.items())), single)
