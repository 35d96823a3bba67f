"""Command-line front end.

    gengap score --manifest m.json --measure mu [--kmax 2] [--out report.json]
    gengap gen --preset task1 [--plant plant.json] --seed 7 --out task1.json
    gengap baseline --name param_count --manifest m.json --archives weights/ --out m2.json
    gengap leaderboard --reports a.json b.json [--out board.csv]

Exit status: 0 on success, 1 on input errors (unreadable or invalid files),
2 on scoring errors (unknown measure, nothing scorable).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .archive import ArchiveError, read_tensor_archive
from .baselines import ARCHIVE_BASELINES, BaselineError, measure_noisy_oracle
from .metrics import ScoringError, score_task
from .population import ManifestError, Population, dump_manifest, parse_manifest
from .report import aggregate, dumps_reports, leaderboard, leaderboard_to_csv, loads_reports, reports_to_csv
from .synth import PlantSpec, generate_population, preset_space

log = logging.getLogger("gengap")

EXIT_OK, EXIT_INPUT, EXIT_SCORING = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


@dataclass
class RunConfig:
    manifests: list[Path]
    measures: list[str]
    k_max: int = 2
    weighting: str = "equal"
    out: Path | None = None
    format: str = "json"
    time_budget_per_model: float = 300.0
    workers: int = 1
    timing: bool = False

    def __post_init__(self) -> None:
        if self.k_max < 0:
            raise CliError(f"--kmax must be >= 0, got {self.k_max}", EXIT_INPUT)
        if not self.manifests or not self.measures:
            raise CliError("need at least one --manifest and one --measure", EXIT_INPUT)


def _load_manifest(path: Path) -> Population:
    try:
        return parse_manifest(path.read_bytes())
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}", EXIT_INPUT) from None
    except ManifestError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None


def _write(out: Path | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def cmd_score(cfg: RunConfig) -> int:
    pops = [_load_manifest(p) for p in cfg.manifests]
    ids = [p.task_id for p in pops]
    dup = sorted({t for t in ids if ids.count(t) > 1})
    if dup:
        raise CliError(f"task ids appear in more than one manifest: {dup}", EXIT_INPUT)
    for pop, path in zip(pops, cfg.manifests):
        for m in cfg.measures:
            if m not in pop.measures:
                raise CliError(f"{path}: unknown measure {m!r}; available: {sorted(pop.measures)}", EXIT_SCORING)

    jobs = [(m, pop) for m in sorted(cfg.measures) for pop in sorted(pops, key=lambda p: p.task_id)]

    def run(job):
        measure, pop = job
        t0 = time.perf_counter()
        try:
            ts = score_task(pop, measure, cfg.k_max, cfg.weighting)
        except ScoringError as exc:
            raise CliError(f"task {pop.task_id!r}, measure {measure!r}: {exc}", EXIT_SCORING) from None
        elapsed = time.perf_counter() - t0
        per_model = elapsed / max(len(pop), 1)
        if per_model > cfg.time_budget_per_model:
            log.warning(
                "task %s, measure %s: %.3g s per model exceeds the %g s budget",
                pop.task_id, measure, per_model, cfg.time_budget_per_model,
            )
        return ts

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            scores = list(pool.map(run, jobs))
    else:
        scores = [run(j) for j in jobs]

    reports = []
    for m in sorted(cfg.measures):
        reports.append(aggregate([s for s in scores if s.measure == m], m, cfg.k_max, cfg.weighting))
    if cfg.format == "csv":
        text = reports_to_csv(reports)
    else:
        text = dumps_reports(reports, include_timing=cfg.timing)
    _write(cfg.out, text)
    for rep in reports:
        log.info("%s: metric1=%.6g metric2=%.6g", rep.measure, rep.metric1, rep.metric2)
    return EXIT_OK


def cmd_leaderboard(paths: Sequence[Path], out: Path | None, fmt: str) -> int:
    reports = []
    for p in paths:
        try:
            reports.extend(loads_reports(p.read_text(encoding="utf-8")))
        except OSError as exc:
            raise CliError(f"{p}: {exc.strerror or exc}", EXIT_INPUT) from None
        except (ValueError, KeyError) as exc:
            raise CliError(f"{p}: not a score report: {exc}", EXIT_INPUT) from None
    try:
        rows = leaderboard(reports)
    except ScoringError as exc:
        raise CliError(str(exc), EXIT_SCORING) from None
    if fmt == "csv":
        text = leaderboard_to_csv(rows)
    else:
        text = json.dumps(
            [{"rank": r.rank, "measure": r.measure, "metric2": r.metric2, "metric1": r.metric1} for r in rows],
            indent=2,
        ) + "\n"
    _write(out, text)
    return EXIT_OK


def cmd_gen(preset: str, plant_path: Path | None, seed: int, replicas: int, out: Path, jitter: bool) -> int:
    try:
        space = preset_space(preset)
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_INPUT) from None
    try:
        plant = PlantSpec.from_dict(json.loads(plant_path.read_text())) if plant_path else PlantSpec()
        plant = plant.with_seed(seed)
        if not jitter:
            plant = replace(plant, jitter=False)
        pop, truth = generate_population(space, plant, replicas, task_id=preset)
    except OSError as exc:
        raise CliError(f"{plant_path}: {exc.strerror or exc}", EXIT_INPUT) from None
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"invalid plant: {exc}", EXIT_INPUT) from None
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(dump_manifest(pop))
    truth["preset"] = preset
    sidecar = out.with_name(out.stem + ".truth.json")
    sidecar.write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d models to %s (ground truth: %s)", len(pop), out, sidecar)
    return EXIT_OK


def cmd_baseline(
    name: str,
    manifest: Path,
    archives: Path | None,
    out: Path,
    sigma: float = 0.0,
    seed: int = 0,
    budget_secs: float = 300.0,
    measure_name: str | None = None,
) -> int:
    pop = _load_manifest(manifest)
    label = measure_name or name
    if label in pop.measures:
        raise CliError(f"{manifest}: measure {label!r} already exists", EXIT_INPUT)
    if name == "noisy_oracle":
        try:
            values = measure_noisy_oracle(pop, sigma, seed).values
        except (BaselineError, ValueError) as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
    elif name in ARCHIVE_BASELINES:
        if archives is None:
            raise CliError(f"baseline {name!r} needs --archives", EXIT_INPUT)
        fn = ARCHIVE_BASELINES[name]
        values = []
        over = []
        for i, rec in enumerate(pop.records):
            if rec.weights_ref is None:
                raise CliError(f"{manifest}: record {i} has no 'weights' archive", EXIT_INPUT)
            t0 = time.perf_counter()
            try:
                values.append(fn(read_tensor_archive(archives / rec.weights_ref)))
            except ArchiveError as exc:
                raise CliError(f"record {i}: {exc}", EXIT_INPUT) from None
            except BaselineError as exc:
                raise CliError(f"record {i}: {exc}", EXIT_SCORING) from None
            elapsed = time.perf_counter() - t0
            if elapsed > budget_secs:
                over.append((i, elapsed))
        for i, elapsed in over:
            log.warning("record %d took %.1f s, over the %g s per-model budget", i, elapsed, budget_secs)
    else:
        known = sorted([*ARCHIVE_BASELINES, "noisy_oracle"])
        raise CliError(f"unknown baseline {name!r}; known: {known}", EXIT_INPUT)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(dump_manifest(pop.with_measure(label, values)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gengap", description="Score complexity measures against generalization gaps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score measures on one or more task manifests")
    p.add_argument("--manifest", nargs="+", action="extend", required=True, type=Path, help="task manifest JSON files")
    p.add_argument("--measure", nargs="+", action="extend", required=True, help="measure names present in every manifest")
    p.add_argument("--kmax", type=int, default=2, help="largest conditioning set size (default 2)")
    p.add_argument("--weighting", choices=("equal", "pairs"), default="equal", help="group weighting within a conditioning set")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    p.add_argument("--budget-secs", type=float, default=300.0, help="per-model time budget (reported, not enforced)")
    p.add_argument("--workers", type=int, default=1, help="threads for conditioning sets (results are identical)")
    p.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte-stability)")

    p = sub.add_parser("gen", help="generate a synthetic population on a task preset")
    p.add_argument("--preset", required=True, help="task1, task2, task4 ... task9")
    p.add_argument("--plant", type=Path, help="JSON plant spec: base, affine, interactions, noise, measures")
    p.add_argument("--seed", type=int, default=0, help="overrides the plant seed")
    p.add_argument("--replicas", type=int, default=1, help="models per grid cell")
    p.add_argument("--no-jitter", action="store_true", help="keep exact planted ties")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("baseline", help="append a baseline measure to a manifest")
    p.add_argument("--name", required=True, help="param_count, vc_proxy, log_frobenius_product, log_spectral_product or noisy_oracle")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--archives", type=Path, help="directory holding one tensor archive per weights_ref")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--sigma", type=float, default=0.0, help="noise scale for noisy_oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-secs", type=float, default=300.0, help="per-model time budget (reported, not enforced)")
    p.add_argument("--measure-name", help="column name for the new measure (default: --name)")

    p = sub.add_parser("leaderboard", help="rank measures from score reports")
    p.add_argument("--reports", nargs="+", action="extend", required=True, type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out", type=Path)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "score":
            cfg = RunConfig(
                manifests=args.manifest,
                measures=list(dict.fromkeys(args.measure)),
                k_max=args.kmax,
                weighting=args.weighting,
                out=args.out,
                format=args.format,
                time_budget_per_model=args.budget_secs,
                workers=args.workers,
                timing=args.timing,
            )
            return cmd_score(cfg)
        if args.command == "gen":
            return cmd_gen(args.preset, args.plant, args.seed, args.replicas, args.out, not args.no_jitter)
        if args.command == "baseline":
            return cmd_baseline(
                args.name, args.manifest, args.archives, args.out, args.sigma, args.seed, args.budget_secs,
                args.measure_name,
            )
        if args.command == "leaderboard":
            return cmd_leaderboard(args.reports, args.out, args.format)
    except CliError as exc:
        print(f"gengap {args.command}: error: {exc}", file=sys.stderr)
        return exc.status
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
