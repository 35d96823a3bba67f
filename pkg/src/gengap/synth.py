"""Synthetic model populations with planted generalization gaps.

The competition task grids are reproduced as presets.  A :class:`PlantSpec`
describes the gap as an affine function of normalized axis positions plus
pairwise interactions and Gaussian noise, and lists the measures to attach.
Generation is deterministic in the seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Mapping

import numpy as np

from .baselines import measure_noisy_oracle
from .population import HyperparamSpace, ModelRecord, Population
from .rng import model_stream, stream

__all__ = [
    "PRESETS",
    "preset_space",
    "MeasureSpec",
    "PlantSpec",
    "generate_population",
    "monotone",
]

log = logging.getLogger(__name__)

_TASK4 = {
    "num_params": [1_000_000, 2_500_000],
    "depth": [4, 6],
    "reversed": [False, True],
    "weight_decay": [0.0, 0.0005],
    "learning_rate": [0.01, 0.001],
    "batch_size": [32, 256],
}

PRESETS: dict[str, dict[str, list]] = {
    "task1": {
        "last_conv_filters": [256, 512],
        "dropout": [0.0, 0.5],
        "conv_blocks": [1, 3],
        "dense_layers": [1, 2],
        "weight_decay": [0.0, 0.001],
        "batch_size": [8, 32, 512],
    },
    "task2": {
        "conv_layers": [6, 9, 12],
        "dropout": [0.0, 0.25, 0.5],
        "weight_decay": [0.0, 0.001],
        "batch_size": [32, 512, 1024],
    },
    "task4": _TASK4,
    # task 5 is task 4 without batch normalization; same grid
    "task5": dict(_TASK4),
    "task6": {
        "weight_decay": [0.0, 0.001],
        "batch_size": [512, 1024],
        "conv_filters": [256, 512],
        "conv_layers": [6, 9, 12],
        "dropout": [0.0, 0.25],
        "learning_rate": [0.1, 0.01],
    },
    "task7": {
        "depth": [6, 9],
        "dropout": [0.0, 0.25],
        "weight_decay": [0.0, 0.001],
        "batch_size": [512, 1024],
        "dense_arch": ["128-128-128", "256-256", "512"],
    },
    "task8": {
        "last_conv_filters": [256, 512],
        "dropout": [0.0, 0.5],
        "conv_blocks": [1, 3],
        "learning_rate": [0.001, 0.01],
        "batch_size": [32, 512],
    },
    "task9": {
        "conv_filters": [256, 512],
        "conv_layers": [9, 12],
        "dropout": [0.0, 0.25],
        "weight_decay": [0.0, 0.001],
        "batch_size": [32, 512],
    },
}


def preset_space(task: str) -> HyperparamSpace:
    if task == "task3":
        raise KeyError("task3 was never released; known presets: " + ", ".join(PRESETS))
    try:
        return HyperparamSpace.from_dict(PRESETS[task])
    except KeyError:
        raise KeyError(f"unknown preset {task!r}; known presets: {', '.join(PRESETS)}") from None


def monotone(x: np.ndarray) -> np.ndarray:
    """The strictly increasing transform x -> x^3 + 2x."""
    return x**3 + 2 * x


_MEASURE_KINDS = ("oracle", "noisy_oracle", "axis_proxy", "independent_random", "monotone_transform")


@dataclass(frozen=True)
class MeasureSpec:
    kind: str
    sigma: float = 0.0
    axis: str | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}; expected one of {_MEASURE_KINDS}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if self.kind == "axis_proxy" and not self.axis:
            raise ValueError("axis_proxy needs an axis")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "noisy_oracle":
            return f"noisy_oracle_{self.sigma:g}"
        if self.kind == "axis_proxy":
            return f"axis_proxy_{self.axis}"
        return self.kind


@dataclass(frozen=True)
class PlantSpec:
    """Planted gap function and the measures to attach.

    gap(theta) = base + sum_a affine[a] * x_a + sum_(a,b) coef * x_a * x_b + noise * N(0, 1)

    where x_a is the value index of axis a scaled to [0, 1].  Axes missing from
    ``affine`` get a coefficient drawn uniformly from [0.005, 0.05] with the seed.
    """

    base: float = 0.05
    affine: Mapping[str, float] | None = None
    interactions: tuple[tuple[str, str, float], ...] = ()
    noise: float = 0.0
    measures: tuple[MeasureSpec, ...] = (MeasureSpec("oracle"),)
    jitter: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.noise >= 0:
            raise ValueError(f"noise must be non-negative, got {self.noise}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        labels = [m.label for m in self.measures]
        if len(set(labels)) != len(labels):
            raise ValueError(f"measure names must be unique, got {labels}")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PlantSpec":
        known = {"base", "affine", "interactions", "noise", "measures", "measure", "jitter", "seed"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown plant keys {sorted(unknown)}")
        kwargs: dict[str, Any] = {k: doc[k] for k in ("base", "noise", "jitter", "seed") if k in doc}
        if "affine" in doc:
            kwargs["affine"] = dict(doc["affine"])
        if "interactions" in doc:
            kwargs["interactions"] = tuple((i["axes"][0], i["axes"][1], float(i["coef"])) for i in doc["interactions"])
        specs = list(doc.get("measures", []))
        if "measure" in doc:
            specs.append(doc["measure"])
        if specs:
            kwargs["measures"] = tuple(MeasureSpec(**m) for m in specs)
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "PlantSpec":
        return replace(self, seed=seed)


def _resolve_affine(space: HyperparamSpace, plant: PlantSpec) -> dict[str, float]:
    given = dict(plant.affine or {})
    for name in given:
        space.index(name)
    rng = stream(plant.seed, "affine")
    drawn = rng.uniform(0.005, 0.05, size=space.n_axes)
    return {name: float(given.get(name, drawn[i])) for i, name in enumerate(space.names)}


def generate_population(
    space: HyperparamSpace, plant: PlantSpec, replicas: int = 1, task_id: str = "synthetic"
) -> tuple[Population, dict[str, Any]]:
    """One model per (grid cell, replica), with planted gaps and the requested measures.

    Returns the population and a ground-truth record (resolved coefficients,
    gap range, clamping counts) suitable for a JSON sidecar.
    """
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1, got {replicas}")
    for a, b, _ in plant.interactions:
        space.index(a)
        space.index(b)
    for m in plant.measures:
        if m.kind == "axis_proxy":
            space.index(m.axis)

    affine = _resolve_affine(space, plant)
    coef = np.array([affine[name] for name in space.names])
    cards = np.array(space.cardinalities)
    scale = np.where(cards > 1, cards - 1, 1).astype(np.float64)
    pairs = [(space.index(a), space.index(b), c) for a, b, c in plant.interactions]

    cells = list(space.coords())
    n = len(cells) * replicas
    # distinct per-model offsets break exact ties in the planted gap
    jitter = (stream(plant.seed, "jitter").permutation(n) + 1) * (1e-9 / n) if plant.jitter else np.zeros(n)

    records = []
    out_of_range = 0
    clamped = 0
    k = 0
    for cell in cells:
        x = np.array(cell, dtype=np.float64) / scale
        planted = plant.base + float(coef @ x) + sum(c * x[a] * x[b] for a, b, c in pairs)
        for r in range(replicas):
            g = planted + jitter[k]
            if plant.noise:
                g += plant.noise * model_stream(plant.seed, "gap_noise", cell, r).standard_normal()
            if not -1.0 <= g <= 1.0:
                out_of_range += 1
                g = min(max(g, -1.0), 1.0)
            train = float(model_stream(plant.seed, "train_err", cell, r).uniform(0.0, 0.01))
            val = train + g
            if not 0.0 <= val <= 1.0:
                clamped += 1
                val = min(max(val, 0.0), 1.0)
            records.append(ModelRecord(tuple(cell), train, val, replica=r))
            k += 1
    if out_of_range:
        log.warning("planted gap left [-1, 1] for %d model(s); clamped", out_of_range)
    if clamped:
        log.warning("validation error left [0, 1] for %d model(s); clamped (may create ties)", clamped)

    pop = Population(task_id, space, tuple(records))
    for spec in plant.measures:
        pop = pop.with_measure(spec.label, _make_measure(pop, spec, plant.seed))

    truth = {
        "task_id": task_id,
        "seed": plant.seed,
        "replicas": replicas,
        "n_models": len(pop),
        "base": plant.base,
        "affine": affine,
        "interactions": [{"axes": [a, b], "coef": c} for a, b, c in plant.interactions],
        "noise": plant.noise,
        "jitter": plant.jitter,
        "measures": [{"name": m.label, **{k: v for k, v in asdict(m).items() if k != "name"}} for m in plant.measures],
        "gap_min": float(pop.gaps.min()),
        "gap_max": float(pop.gaps.max()),
        "gap_out_of_range": out_of_range,
        "val_err_clamped": clamped,
    }
    return pop, truth


def _make_measure(pop: Population, spec: MeasureSpec, seed: int) -> np.ndarray:
    if spec.kind == "oracle":
        return pop.gaps.copy()
    if spec.kind == "monotone_transform":
        return monotone(pop.gaps)
    if spec.kind == "noisy_oracle":
        return measure_noisy_oracle(pop, spec.sigma, seed).values
    if spec.kind == "axis_proxy":
        return pop.coords[:, pop.space.index(spec.axis)].astype(np.float64)
    if spec.kind == "independent_random":
        return np.array(
            [model_stream(seed, "independent_random", r.coord, r.replica).standard_normal() for r in pop.records]
        )
    raise AssertionError(spec.kind)


def gap_range(pop: Population) -> float:
    return float(pop.gaps.max() - pop.gaps.min()) if len(pop) else math.nan
