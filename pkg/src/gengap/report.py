"""Cross-task aggregation, score report serialization and leaderboards."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .metrics import CmiBreakdown, ScoringError, TaskScore, score_task
from .population import Population

__all__ = [
    "ScoreReport",
    "aggregate",
    "score_population_set",
    "report_to_dict",
    "report_from_dict",
    "dumps_reports",
    "loads_reports",
    "reports_to_csv",
    "LeaderboardRow",
    "leaderboard",
    "leaderboard_to_csv",
]

REPORT_FORMAT = "gengap.score/1"
SIG_DIGITS = 12


def _r(x: float) -> float:
    """Round to 12 significant digits (and fold -0.0 into 0.0)."""
    return float(f"{x:.{SIG_DIGITS}g}") + 0.0


@dataclass(frozen=True)
class ScoreReport:
    measure: str
    k_max: int
    weighting: str
    per_task: Mapping[str, TaskScore]
    metric1: float
    metric2: float
    timing: Mapping[str, float] = field(default_factory=dict, compare=False)

    @property
    def task_ids(self) -> tuple[str, ...]:
        return tuple(self.per_task)


def aggregate(tasks: Sequence[TaskScore], measure: str, k_max: int = 2, weighting: str = "equal") -> ScoreReport:
    """Average per-task scores across tasks (mean, not sum, so task counts do not matter)."""
    if not tasks:
        raise ScoringError("aggregate needs at least one scored task")
    per_task = {}
    for ts in sorted(tasks, key=lambda t: t.task_id):
        if ts.measure != measure:
            raise ScoringError(f"task {ts.task_id!r} was scored for {ts.measure!r}, not {measure!r}")
        if ts.task_id in per_task:
            raise ScoringError(f"task {ts.task_id!r} appears more than once")
        per_task[ts.task_id] = ts
    metric1 = math.fsum(t.psi for t in per_task.values()) / len(per_task)
    metric2 = math.fsum(t.metric2 for t in per_task.values()) / len(per_task)
    timing = {}
    for ts in per_task.values():
        for phase, secs in ts.timing.items():
            timing[phase] = timing.get(phase, 0.0) + secs
    return ScoreReport(measure, k_max, weighting, per_task, metric1, metric2, timing)


def score_population_set(
    pops: Sequence[Population],
    measure: str,
    k_max: int = 2,
    weighting: str = "equal",
    workers: int = 1,
) -> ScoreReport:
    scores = [score_task(p, measure, k_max, weighting, workers) for p in pops]
    return aggregate(scores, measure, k_max, weighting)


# -- JSON --------------------------------------------------------------------


def _breakdown_to_dict(b: CmiBreakdown) -> dict[str, Any]:
    return {
        "cond_set": list(b.cond_set),
        "mi": _r(b.mi),
        "entropy": _r(b.entropy),
        "normalized": _r(b.normalized),
        "group_weights": [_r(w) for w in b.group_weights],
        "skipped_groups": b.skipped_groups,
    }


def report_to_dict(report: ScoreReport, *, include_timing: bool = False) -> dict[str, Any]:
    per_task = {}
    for task_id, ts in report.per_task.items():
        per_task[task_id] = {
            "psi_per_axis": {axis: _r(v) for axis, v in ts.psi_per_axis.items()},
            "psi": _r(ts.psi),
            "metric2": _r(ts.metric2),
            "argmin_cond_set": list(ts.argmin_cond_set),
            "breakdowns": [_breakdown_to_dict(b) for b in ts.breakdowns],
            "warnings": list(ts.warnings),
        }
    doc: dict[str, Any] = {
        "measure": report.measure,
        "k_max": report.k_max,
        "weighting": report.weighting,
        "aggregate": {"metric1": _r(report.metric1), "metric2": _r(report.metric2)},
        "per_task": per_task,
    }
    if include_timing:
        doc["timing"] = {k: _r(v) for k, v in sorted(report.timing.items())}
    return doc


def report_from_dict(doc: Mapping[str, Any]) -> ScoreReport:
    per_task = {}
    for task_id, t in doc["per_task"].items():
        per_task[task_id] = TaskScore(
            task_id=task_id,
            measure=doc["measure"],
            psi_per_axis=dict(t["psi_per_axis"]),
            psi=t["psi"],
            metric2=t["metric2"],
            argmin_cond_set=tuple(t["argmin_cond_set"]),
            breakdowns=tuple(
                CmiBreakdown(
                    tuple(b["cond_set"]),
                    b["mi"],
                    b["entropy"],
                    b["normalized"],
                    tuple(b["group_weights"]),
                    b["skipped_groups"],
                )
                for b in t["breakdowns"]
            ),
            warnings=tuple(t.get("warnings", ())),
        )
    return ScoreReport(
        doc["measure"],
        doc["k_max"],
        doc["weighting"],
        per_task,
        doc["aggregate"]["metric1"],
        doc["aggregate"]["metric2"],
        dict(doc.get("timing", {})),
    )


def dumps_reports(reports: Iterable[ScoreReport], *, include_timing: bool = False) -> str:
    """Serialize reports (sorted by measure name) into one byte-stable JSON document."""
    ordered = sorted(reports, key=lambda r: r.measure)
    doc = {"format": REPORT_FORMAT, "reports": [report_to_dict(r, include_timing=include_timing) for r in ordered]}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def loads_reports(text: str) -> list[ScoreReport]:
    doc = json.loads(text)
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise ValueError(f"not a score report document (expected format {REPORT_FORMAT!r})")
    return [report_from_dict(r) for r in doc["reports"]]


def reports_to_csv(reports: Iterable[ScoreReport]) -> str:
    """One row per (task, measure), plus an aggregate row per measure with task_id 'ALL'."""
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
    writer.writerow(["task_id", "measure", "psi", "metric2", "argmin_cond_set"])
    for rep in sorted(reports, key=lambda r: r.measure):
        for task_id, ts in rep.per_task.items():
            writer.writerow([task_id, rep.measure, _r(ts.psi), _r(ts.metric2), "+".join(ts.argmin_cond_set)])
        writer.writerow(["ALL", rep.measure, _r(rep.metric1), _r(rep.metric2), ""])
    return buf.getvalue()


# -- leaderboard ---------------------------------------------------------------


@dataclass(frozen=True)
class LeaderboardRow:
    rank: int
    measure: str
    metric2: float
    metric1: float


def leaderboard(reports: Sequence[ScoreReport]) -> list[LeaderboardRow]:
    """Rank measures by aggregate Metric 2, breaking ties by Metric 1 and then name."""
    if not reports:
        raise ScoringError("leaderboard needs at least one report")
    tasks = set(reports[0].task_ids)
    seen = set()
    for rep in reports:
        if set(rep.task_ids) != tasks:
            raise ScoringError(
                f"report for {rep.measure!r} covers tasks {sorted(rep.task_ids)}, expected {sorted(tasks)}"
            )
        if rep.measure in seen:
            raise ScoringError(f"measure {rep.measure!r} appears in more than one report")
        seen.add(rep.measure)
    ordered = sorted(reports, key=lambda r: (-_r(r.metric2), -_r(r.metric1), r.measure))
    return [LeaderboardRow(i + 1, r.measure, _r(r.metric2), _r(r.metric1)) for i, r in enumerate(ordered)]


def leaderboard_to_csv(rows: Sequence[LeaderboardRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
    writer.writerow(["rank", "measure", "metric2", "metric1"])
    for row in rows:
        writer.writerow([row.rank, row.measure, row.metric2, row.metric1])
    return buf.getvalue()
