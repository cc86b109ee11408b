"""Parameter sweeps over the simulation: consumers, providers and movements."""

from __future__ import annotations

import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from trustscope.ingest import (
    DatasetStats,
    IngestError,
    ParseReport,
    dataset_stats,
    iter_checkins,
    iter_social_edges,
    sample_microcells,
)
from trustscope.simulation import MM, SM, SimConfig, Workload, result_row, simulate, workload_from

EXPERIMENTS = ("consumers", "providers", "movements")

DEFAULT_POINTS = {
    "consumers": (1, 10, 25, 50, 75, 100),
    "providers": (1, 5, 10, 20, 30, 40),
    "movements": (0.0, 0.25, 0.5, 0.75, 1.0),
}

SWEPT_FIELD = {
    "consumers": "consumers_per_microcell",
    "providers": "providers_per_microcell",
    "movements": "movement_fraction",
}


class SpecError(ValueError):
    """An experiment description that cannot be run."""


@dataclass(frozen=True)
class DatasetFiles:
    checkins: Path
    edges: Path | None


def resolve_dataset(path: str | os.PathLike) -> DatasetFiles:
    """Locate the check-in file and (optional) edge file of a SNAP dataset.

    ``path`` is either the check-in file itself or a directory holding
    exactly one ``*totalCheckins*`` file.
    """
    path = Path(path)
    if path.is_dir():
        candidates = sorted(p for p in path.iterdir() if "totalCheckins" in p.name)
        if len(candidates) != 1:
            raise IngestError(f"expected one *totalCheckins* file in {path}, found {len(candidates)}")
        checkins = candidates[0]
    elif path.is_file():
        checkins = path
    else:
        raise IngestError(f"dataset path does not exist: {path}")
    edges = checkins.with_name(checkins.name.replace("totalCheckins", "edges"))
    if edges == checkins or not edges.is_file():
        siblings = sorted(p for p in checkins.parent.iterdir() if "edges" in p.name)
        edges = siblings[0] if len(siblings) == 1 else None
    return DatasetFiles(checkins, edges)


def stats_for(files: DatasetFiles) -> tuple[DatasetStats, ParseReport, ParseReport]:
    checkin_report, edge_report = ParseReport(), ParseReport()
    edges: Iterable[tuple[int, int]] = ()
    if files.edges is not None:
        edges = iter_social_edges(files.edges, edge_report)
    stats = dataset_stats(iter_checkins(files.checkins, checkin_report), edges)
    return stats, checkin_report, edge_report


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    dataset: Path | None = None
    microcell_count: int = 500
    points: tuple = ()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out: Path | None = None
    providers: int = 40
    consumers: int = 100
    services: int = 40
    movement_fraction: float = 1.0
    modes: tuple[str, ...] = (MM, SM)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise SpecError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.points:
            object.__setattr__(self, "points", DEFAULT_POINTS[self.experiment])
        points = list(self.points)
        if any(b <= a for a, b in zip(points, points[1:])):
            raise SpecError("sweep points must be strictly increasing")
        if self.experiment == "movements" and not all(0 <= p <= 1 for p in points):
            raise SpecError("movement fractions must lie in [0, 1]")
        if self.experiment != "movements" and not all(float(p).is_integer() and p >= 0 for p in points):
            raise SpecError("consumer/provider counts must be non-negative integers")
        if not self.seeds:
            raise SpecError("at least one seed is required")
        if not self.modes or any(m not in (MM, SM) for m in self.modes):
            raise SpecError(f"modes must be drawn from {MM!r}, {SM!r}")
        if self.microcell_count < 1:
            raise SpecError("microcell_count must be positive")

    def configs(self, seed: int) -> list[SimConfig]:
        base = SimConfig(
            microcell_count=self.microcell_count,
            providers_per_microcell=self.providers,
            services_per_microcell=self.services,
            consumers_per_microcell=self.consumers,
            movement_fraction=self.movement_fraction,
            seed=seed,
        )
        swept = SWEPT_FIELD[self.experiment]
        out = []
        for point in self.points:
            value = float(point) if swept == "movement_fraction" else int(point)
            for mode in self.modes:
                out.append(replace(base, scoping_mode=mode, **{swept: value}))
        return out


def load_workloads(checkins_path, microcell_count: int, seeds: Sequence[int]) -> dict[int, Workload]:
    """Two passes over the check-in file so only sampled microcells stay in memory."""
    locations = {c.location_id for c in iter_checkins(checkins_path)}
    if microcell_count > len(locations):
        raise SpecError(f"dataset has only {len(locations)} locations, asked for {microcell_count}")
    samples = {seed: sample_microcells(locations, microcell_count, seed) for seed in seeds}
    wanted = set().union(*samples.values())
    kept = [c for c in iter_checkins(checkins_path) if c.location_id in wanted]
    return {seed: workload_from(kept, samples[seed]) for seed in seeds}


def _run_seed(args: tuple[Workload, list[SimConfig]]) -> list[dict]:
    workload, configs = args
    return [result_row(cfg, simulate(workload, cfg)) for cfg in configs]


def row_sort_key(row: dict):
    return (row["mode"], row["consumers"], row["providers"], row["movement_fraction"], row["seed"])


def run_sweep(spec: ExperimentSpec, workloads: dict[int, Workload]) -> list[dict]:
    jobs = [(workloads[seed], spec.configs(seed)) for seed in spec.seeds]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(spec.workers, len(jobs))) as pool:
            batches = list(pool.map(_run_seed, jobs))
    else:
        batches = [_run_seed(job) for job in jobs]
    rows = [row for batch in batches for row in batch]
    rows.sort(key=row_sort_key)
    return rows


def run_experiment(spec: ExperimentSpec, workloads: dict[int, Workload] | None = None) -> list[dict]:
    if workloads is None:
        if spec.dataset is None:
            raise SpecError("a dataset path is required")
        files = resolve_dataset(spec.dataset)
        workloads = load_workloads(files.checkins, spec.microcell_count, spec.seeds)
    return run_sweep(spec, workloads)


@dataclass(frozen=True)
class PointSummary:
    mode: str
    point: float
    se_mean: float
    se_min: float
    se_max: float
    am_mean: float
    am_min: float
    am_max: float
    runs: int = field(default=0)


def summarize(spec: ExperimentSpec, rows: Sequence[dict]) -> list[PointSummary]:
    column = {"consumers": "consumers", "providers": "providers", "movements": "movement_fraction"}[spec.experiment]
    grouped: dict[tuple[str, float], list[dict]] = {}
    for row in rows:
        grouped.setdefault((row["mode"], float(row[column])), []).append(row)
    out = []
    for (mode, point), group in sorted(grouped.items()):
        se = [float(r["se"]) for r in group]
        am = [float(r["am"]) for r in group]
        out.append(PointSummary(mode, point, statistics.fmean(se), min(se), max(se),
                                statistics.fmean(am), min(am), max(am), len(group)))
    return out


def series(summary: Sequence[PointSummary], mode: str, metric: str) -> list[float]:
    return [getattr(s, f"{metric}_mean") for s in summary if s.mode == mode]


@dataclass(frozen=True)
class TrendCheck:
    experiment: str
    claim: str
    passed: bool
    detail: str


def _spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    from scipy.stats import spearmanr

    if len(set(ys)) < 2:
        return float("nan")
    return float(spearmanr(xs, ys).statistic)


def evaluate_trends(experiment: str, summary: Sequence[PointSummary]) -> list[TrendCheck]:
    """Directional checks on sweep means, one per expected curve shape."""
    points = [s.point for s in summary if s.mode == MM]
    mm_se, mm_am = series(summary, MM, "se"), series(summary, MM, "am")
    sm_se, sm_am = series(summary, SM, "se"), series(summary, SM, "am")
    checks = []

    def rho_check(claim, ys, predicate, bound):
        rho = _spearman(points, ys)
        checks.append(TrendCheck(experiment, claim, predicate(rho), f"rho={rho:.3f} ({bound}); means={_fmt(ys)}"))

    if experiment == "consumers":
        rho_check("MM SE increases", mm_se, lambda r: r > 0.9, "> 0.9")
        rho_check("MM AM weakly increases", mm_am, lambda r: r > 0, "> 0")
        ok = len(mm_se) == len(sm_se) and all(a >= b for a, b in zip(mm_se, sm_se))
        checks.append(TrendCheck(experiment, "MM SE >= SM SE at every point", ok,
                                 f"mm={_fmt(mm_se)} sm={_fmt(sm_se)}"))
    elif experiment == "providers":
        rho_check("MM SE increases", mm_se, lambda r: r > 0.9, "> 0.9")
        rho_check("MM AM decreases", mm_am, lambda r: r < 0, "< 0")
        ok = all(b >= a for a, b in zip(sm_am, sm_am[1:]))
        checks.append(TrendCheck(experiment, "SM AM non-decreasing", ok, f"sm={_fmt(sm_am)}"))
    elif experiment == "movements":
        rho_check("MM AM decreases", mm_am, lambda r: r < 0, "< 0")
        rho_check("MM SE weakly decreases", mm_se, lambda r: r < 0, "< 0")
        for name, ys in (("SM SE", sm_se), ("SM AM", sm_am)):
            spread = max(ys) - min(ys) if ys else 0.0
            checks.append(TrendCheck(experiment, f"{name} constant across sweep", spread == 0.0,
                                     f"spread={spread:.6g}"))
    else:
        raise SpecError(f"unknown experiment {experiment!r}")
    return checks


def _fmt(values: Sequence[float]) -> str:
    return "[" + ", ".join(f"{v:.3f}" for v in values) + "]"
