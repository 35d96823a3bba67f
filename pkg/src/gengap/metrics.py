"""Sign-vote rank metrics over model populations.

Two scores are computed for a complexity measure on a population:

* the controlled ranking correlation: Kendall's tau restricted to slices of
  the grid that vary a single hyperparameter, averaged per axis (``psi``) and
  then across axes (``Psi``);
* the minimum normalized conditional mutual information ``J`` between the
  pairwise sign votes of the generalization gap and of the measure, taken
  over every conditioning set of at most ``k_max`` hyperparameter axes.

Everything is derived from sign votes, so any strictly increasing transform
of a measure leaves every number bit-identical.  Votes are three-valued
(ties vote 0) and all discrete distributions live on {-1, 0, +1}^2.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .population import Group, Population, group_by, slices_along

__all__ = [
    "ScoringError",
    "VoteJoint",
    "CmiBreakdown",
    "TaskScore",
    "sign_vote",
    "kendall_tau",
    "vote_joint",
    "vote_counts",
    "psi_axis",
    "psi_overall",
    "cond_mi",
    "conditioning_sets",
    "metric2_task",
    "score_task",
]

log = logging.getLogger(__name__)

# rows per block when counting votes over large groups; bounds memory at
# roughly _BLOCK * group_size bytes per temporary
_BLOCK = 512


class ScoringError(ValueError):
    """A score cannot be computed for the given population and measure."""


def sign_vote(a: float, b: float) -> int:
    """sgn(a - b) with sgn(0) = 0."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"sign_vote needs finite inputs, got {a!r}, {b!r}")
    return (a > b) - (a < b)


@dataclass(frozen=True)
class VoteJoint:
    """Counts of (gap vote, measure vote) over ordered distinct pairs.

    ``counts[a + 1, b + 1]`` is the number of ordered pairs whose gap vote is
    ``a`` and measure vote is ``b``.
    """

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, votes: tuple[int, int]) -> int:
        a, b = votes
        return int(self.counts[a + 1, b + 1])

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {(a, b): self[a, b] for a in (-1, 0, 1) for b in (-1, 0, 1) if self[a, b]}


def vote_counts(g: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """3x3 table of ordered-pair vote counts for aligned vectors ``g`` and ``mu``."""
    n = len(g)
    if len(mu) != n:
        raise ValueError(f"length mismatch: {n} gaps vs {len(mu)} measure values")
    counts = np.zeros(9, dtype=np.int64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        vg = np.sign(g[start:stop, None] - g[None, :]).astype(np.int8)
        vm = np.sign(mu[start:stop, None] - mu[None, :]).astype(np.int8)
        cell = (vg + 1) * 3 + (vm + 1)
        counts += np.bincount(cell.ravel(), minlength=9)
    # self-pairs land in (0, 0)
    counts[4] -= n
    return counts.reshape(3, 3)


def kendall_tau(mu: Sequence[float], g: Sequence[float]) -> float:
    """Kendall's tau without tie correction: mean vote product over ordered distinct pairs."""
    mu = np.asarray(mu, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if mu.shape != g.shape or mu.ndim != 1:
        raise ValueError(f"kendall_tau needs two equal-length vectors, got shapes {mu.shape} and {g.shape}")
    n = len(mu)
    if n < 2:
        raise ValueError(f"kendall_tau needs at least 2 points, got {n}")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(g))):
        raise ValueError("kendall_tau needs finite inputs")
    return _tau_from_counts(vote_counts(g, mu), n)


def _tau_from_counts(c: np.ndarray, n: int) -> float:
    agree = int(c[0, 0] + c[2, 2])
    disagree = int(c[0, 2] + c[2, 0])
    return (agree - disagree) / (n * (n - 1))


def vote_joint(group: Group, pop: Population, measure: str) -> VoteJoint:
    if len(group) < 2:
        raise ScoringError(f"group {group.key} has {len(group)} model(s); at least 2 are needed for a pair")
    idx = group.indices
    return VoteJoint(vote_counts(pop.gaps[idx], pop.measure(measure)[idx]))


# -- Metric 1 ------------------------------------------------------------------


def psi_axis(pop: Population, measure: str, axis: str, warnings: list[str] | None = None) -> float:
    """Mean Kendall tau over the slices of the grid that vary only ``axis``.

    Slices with fewer than two models (incomplete grids) are skipped and the
    mean is taken over the rest.  Replicas sharing a cell sit in the same
    slice and are compared like any other pair.
    """
    if len(pop.space.values(axis)) < 2:
        raise ScoringError(f"axis {axis!r} has a single value; tau along it is undefined")
    g = pop.gaps
    mu = pop.measure(measure)
    taus = []
    skipped = 0
    for sl in slices_along(pop, axis):
        n = len(sl)
        if n < 2:
            skipped += 1
            continue
        taus.append(_tau_from_counts(vote_counts(g[sl.indices], mu[sl.indices]), n))
    if skipped and warnings is not None:
        warnings.append(f"psi[{axis}]: skipped {skipped} slice(s) with fewer than 2 models")
    if not taus:
        raise ScoringError(f"axis {axis!r}: no slice holds 2 or more models")
    return math.fsum(taus) / len(taus)


def psi_overall(
    pop: Population, measure: str, warnings: list[str] | None = None
) -> tuple[dict[str, float], float]:
    """Per-axis psi and their mean over multi-valued axes."""
    per_axis = {}
    for axis in pop.space.multi_valued():
        try:
            per_axis[axis] = psi_axis(pop, measure, axis, warnings)
        except ScoringError as exc:
            if warnings is not None:
                warnings.append(f"psi[{axis}] excluded: {exc}")
    if not per_axis:
        raise ScoringError(f"task {pop.task_id!r}: no eligible axis for the controlled ranking correlation")
    return per_axis, math.fsum(per_axis.values()) / len(per_axis)


# -- Metric 2 ------------------------------------------------------------------


@dataclass(frozen=True)
class CmiBreakdown:
    cond_set: tuple[str, ...]
    mi: float
    entropy: float
    normalized: float
    group_weights: tuple[float, ...]
    skipped_groups: int


def _entropy_bits(counts: np.ndarray, total: int) -> float:
    # fsum makes the result independent of term order
    return 0.0 - math.fsum(p * math.log2(p) for p in (c / total for c in counts.ravel().tolist() if c))


def _group_information(c: np.ndarray) -> tuple[float, float]:
    """(I(Vg; Vmu), H(Vg)) in bits for one 3x3 vote table.

    The mutual information is evaluated as H(Vg) + H(Vmu) - H(Vg, Vmu), which
    makes I == H bit-exactly when the measure vote is a one-to-one function of
    the gap vote and I == 0 exactly when the measure vote is constant.
    """
    total = int(c.sum())
    h_g = _entropy_bits(c.sum(axis=1), total)
    h_m = _entropy_bits(c.sum(axis=0), total)
    h_gm = _entropy_bits(c, total)
    mi = (h_g + h_m) - h_gm
    return min(max(mi, 0.0), h_g), h_g


def cond_mi(
    pop: Population,
    measure: str,
    cond: Iterable[str],
    weighting: str = "equal",
    groups: Sequence[Group] | None = None,
) -> CmiBreakdown:
    """Conditional mutual information between gap votes and measure votes given ``cond``.

    Each group of the partition gets weight ``1/K`` over the K groups that
    hold at least one pair (``weighting="equal"``), or weight proportional to
    its ordered pair count (``weighting="pairs"``).
    """
    if weighting not in ("equal", "pairs"):
        raise ValueError(f"weighting must be 'equal' or 'pairs', got {weighting!r}")
    cond = tuple(sorted(cond, key=pop.space.index))
    if groups is None:
        groups = group_by(pop, cond)
    g = pop.gaps
    mu = pop.measure(measure)
    per_group = []
    skipped = 0
    for grp in groups:
        if len(grp) < 2:
            skipped += 1
            continue
        c = vote_counts(g[grp.indices], mu[grp.indices])
        per_group.append((int(c.sum()), *_group_information(c)))
    if not per_group:
        raise ScoringError(f"conditioning on {list(cond)}: every group has fewer than 2 models")
    if weighting == "equal":
        weights = [1.0 / len(per_group)] * len(per_group)
    else:
        all_pairs = sum(t for t, _, _ in per_group)
        weights = [t / all_pairs for t, _, _ in per_group]
    mi = math.fsum(w * i for w, (_, i, _) in zip(weights, per_group))
    h = math.fsum(w * e for w, (_, _, e) in zip(weights, per_group))
    normalized = mi / h if h > 0 else 0.0
    return CmiBreakdown(cond, mi, h, normalized, tuple(weights), skipped)


def conditioning_sets(pop: Population, k_max: int) -> list[tuple[str, ...]]:
    """Subsets of the multi-valued axes of size <= k_max: by size, then lexicographic in axis order."""
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    axes = pop.space.multi_valued()
    out: list[tuple[str, ...]] = []
    for k in range(min(k_max, len(axes)) + 1):
        out.extend(itertools.combinations(axes, k))
    return out


def metric2_task(
    pop: Population,
    measure: str,
    k_max: int = 2,
    weighting: str = "equal",
    workers: int = 1,
    warnings: list[str] | None = None,
) -> tuple[float, tuple[str, ...], list[CmiBreakdown]]:
    """Minimum normalized conditional MI over conditioning sets of size <= k_max.

    Conditioning sets that leave no group with a pair (e.g. every axis fixed on
    a one-model-per-cell grid) carry no information and are skipped with a
    warning.  The reported argmin is the first minimizer in enumeration order,
    i.e. smallest set, then lexicographic.
    """
    sets = conditioning_sets(pop, k_max)

    def evaluate(cond: tuple[str, ...]) -> CmiBreakdown | str:
        try:
            return cond_mi(pop, measure, cond, weighting)
        except ScoringError as exc:
            return str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, sets))
    else:
        results = [evaluate(cond) for cond in sets]

    breakdowns = []
    for cond, res in zip(sets, results):
        if isinstance(res, str):
            if warnings is not None:
                warnings.append(f"metric2: skipped conditioning set {list(cond)}: {res}")
            continue
        breakdowns.append(res)
    if not breakdowns:
        raise ScoringError(f"task {pop.task_id!r}: no conditioning set has a group with 2 or more models")
    best = breakdowns[0]
    for b in breakdowns[1:]:
        if b.normalized < best.normalized:
            best = b
    return best.normalized, best.cond_set, breakdowns


@dataclass(frozen=True)
class TaskScore:
    """Both metrics for one measure on one task."""

    task_id: str
    measure: str
    psi_per_axis: dict[str, float]
    psi: float
    metric2: float
    argmin_cond_set: tuple[str, ...]
    breakdowns: tuple[CmiBreakdown, ...]
    warnings: tuple[str, ...] = ()
    timing: dict[str, float] = field(default_factory=dict, compare=False)


def score_task(
    pop: Population, measure: str, k_max: int = 2, weighting: str = "equal", workers: int = 1
) -> TaskScore:
    pop.measure(measure)
    warnings: list[str] = []
    t0 = time.perf_counter()
    per_axis, psi = psi_overall(pop, measure, warnings)
    t1 = time.perf_counter()
    j, argmin, breakdowns = metric2_task(pop, measure, k_max, weighting, workers, warnings)
    t2 = time.perf_counter()
    for w in warnings:
        log.warning("%s/%s: %s", pop.task_id, measure, w)
    return TaskScore(
        pop.task_id,
        measure,
        per_axis,
        psi,
        j,
        argmin,
        tuple(breakdowns),
        tuple(warnings),
        {"metric1_s": t1 - t0, "metric2_s": t2 - t1},
    )
