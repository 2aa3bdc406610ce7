"""Ground-truth scoring and the two experiment harnesses: side-by-side
captured-variance tables and multi-trial detection-rate sweeps over the
normal-subspace rank."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .detectors import (
    DEFAULT_BETA,
    DEFAULT_POWER_EXPONENT,
    METHOD_PCA,
    METHOD_RBAD,
    METHOD_SSPBAD,
    METHODS,
    DetectionReport,
    SubspaceModel,
    build_pca_model,
    build_rbad_model,
    build_sspbad_candidates,
    detect,
    sspbad_select,
)
from .ensembles import EnsembleKind, SeedSpec
from .traffic import Scenario, ScenarioConfig, assemble_scenario

__all__ = [
    "ConfusionCounts",
    "MetricRow",
    "SweepCurve",
    "VarianceTable",
    "score",
    "detection_rate",
    "true_positive_rate",
    "false_alarm_rate",
    "variance_compare",
    "sweep_rank",
]

# substream labels for detector randomness inside one trial (scenario
# components use labels 0-3 of the same trial stream)
_RBAD_STREAM, _SSPBAD_STREAM = 4, 5


@dataclass(frozen=True)
class ConfusionCounts:
    """Snapshot-level confusion tally; tp+fp+fn+tn equals the snapshot count."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricRow:
    """One scored detection run: (method, rank, trial) plus its rates."""

    method: str
    rank: int
    trial: int
    detection_rate: float
    tpr: float
    far: float
    flag_count: int


@dataclass(frozen=True)
class SweepCurve:
    """Mean and standard deviation of the detection rate per rank for one
    method, aggregated over trials."""

    method: str
    ranks: tuple[int, ...]
    mean_detection_rate: tuple[float, ...]
    std_detection_rate: tuple[float, ...]


@dataclass(frozen=True)
class VarianceTable:
    """Descending captured-variance sequences side by side, one column per
    method, plus each method's maximum relative deviation from the pca
    eigenvalues over the top `rank` indices."""

    methods: tuple[str, ...]
    variances: np.ndarray  # m rows, one column per method
    rank: int
    top_rank_deviation: dict[str, float]


def score(report: DetectionReport, labels: Sequence[bool]) -> ConfusionCounts:
    """Confusion counts of report flags against ground-truth labels."""
    labels = np.asarray(labels, dtype=bool)
    flags = report.flags
    if labels.shape != flags.shape:
        raise ValueError(f"got {flags.shape[0]} flags but {labels.shape[0]} labels")
    tp = int(np.count_nonzero(flags & labels))
    fp = int(np.count_nonzero(flags & ~labels))
    fn = int(np.count_nonzero(~flags & labels))
    tn = int(np.count_nonzero(~flags & ~labels))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def detection_rate(c: ConfusionCounts) -> float:
    """Combined detection/false-alarm score tp / (tp + fn + fp): rises with
    detection probability, falls with false alarms, and equals 1 exactly
    when flags and labels agree on every flagged-or-anomalous snapshot.

    Defined as 1 when there is nothing to detect and nothing was flagged.
    """
    denominator = c.tp + c.fn + c.fp
    if denominator == 0:
        return 1.0
    return c.tp / denominator


def true_positive_rate(c: ConfusionCounts) -> float:
    """tp / (tp + fn); NaN marks the undefined no-anomaly case."""
    positives = c.tp + c.fn
    return c.tp / positives if positives > 0 else math.nan


def false_alarm_rate(c: ConfusionCounts) -> float:
    """fp / (fp + tn); NaN marks the undefined all-anomaly case."""
    negatives = c.fp + c.tn
    return c.fp / negatives if negatives > 0 else math.nan


def variance_compare(
    y: np.ndarray,
    rank: int,
    seed: SeedSpec,
    power_exponent: int = DEFAULT_POWER_EXPONENT,
    kinds: Iterable[EnsembleKind] | None = None,
) -> VarianceTable:
    """Tabulate the captured-variance sequences of every method on the same
    traffic, all in centered mode so the randomized bases are directly
    comparable with the pca eigenvalues."""
    pca = build_pca_model(y, rank)
    rbad = build_rbad_model(y, rank, seed.split(_RBAD_STREAM), power_exponent, center=True)
    candidates = build_sspbad_candidates(y, rank, seed.split(_SSPBAD_STREAM), kinds, center=True)
    columns: dict[str, np.ndarray] = {METHOD_PCA: pca.variances, METHOD_RBAD: rbad.variances}
    for model in candidates:
        assert model.ensemble is not None
        columns[f"{METHOD_SSPBAD}-{model.ensemble.value}"] = model.variances
    reference = pca.variances[:rank]
    deviations = {
        name: float(np.max(np.abs(values[:rank] - reference) / reference))
        for name, values in columns.items()
        if name != METHOD_PCA
    }
    return VarianceTable(
        methods=tuple(columns),
        variances=np.column_stack(list(columns.values())),
        rank=rank,
        top_rank_deviation=deviations,
    )


def _trial_models(
    scenario: Scenario,
    methods: Sequence[str],
    trial_seed: SeedSpec,
    rank: int,
    power_exponent: int,
    kinds: Iterable[EnsembleKind] | None,
    center: bool,
) -> dict[str, SubspaceModel | list[SubspaceModel]]:
    """Build each requested method's full-basis model(s) once per trial;
    rank splits are applied afterwards without re-fitting (the basis does
    not depend on the rank)."""
    models: dict[str, SubspaceModel | list[SubspaceModel]] = {}
    if METHOD_PCA in methods:
        models[METHOD_PCA] = build_pca_model(scenario.y, rank)
    if METHOD_RBAD in methods:
        models[METHOD_RBAD] = build_rbad_model(
            scenario.y, rank, trial_seed.split(_RBAD_STREAM), power_exponent, center=center
        )
    if METHOD_SSPBAD in methods:
        models[METHOD_SSPBAD] = build_sspbad_candidates(
            scenario.y, rank, trial_seed.split(_SSPBAD_STREAM), kinds, center=center
        )
    return models


def _run_trial(
    cfg: ScenarioConfig,
    trial: int,
    methods: Sequence[str],
    rank_grid: Sequence[int],
    beta: float,
    power_exponent: int,
    kinds: Iterable[EnsembleKind] | None,
    center: bool,
) -> list[MetricRow]:
    trial_seed = replace(cfg.seed, stream_index=cfg.seed.stream_index + trial)
    scenario = assemble_scenario(replace(cfg, seed=trial_seed))
    models = _trial_models(
        scenario, methods, trial_seed, rank_grid[0], power_exponent, kinds, center
    )
    rows = []
    for method in methods:
        for rank in rank_grid:
            fitted = models[method]
            if method == METHOD_SSPBAD:
                assert isinstance(fitted, list)
                reports = [detect(c.with_rank(rank), scenario.y, beta) for c in fitted]
                report = sspbad_select(reports)
            else:
                assert isinstance(fitted, SubspaceModel)
                report = detect(fitted.with_rank(rank), scenario.y, beta)
            counts = score(report, scenario.labels)
            rows.append(
                MetricRow(
                    method=method,
                    rank=rank,
                    trial=trial,
                    detection_rate=detection_rate(counts),
                    tpr=true_positive_rate(counts),
                    far=false_alarm_rate(counts),
                    flag_count=report.flag_count,
                )
            )
    return rows


def sweep_rank(
    cfg: ScenarioConfig,
    methods: Sequence[str],
    rank_grid: Sequence[int],
    trials: int,
    beta: float = DEFAULT_BETA,
    power_exponent: int = DEFAULT_POWER_EXPONENT,
    kinds: Iterable[EnsembleKind] | None = None,
    center: bool = False,
    workers: int = 1,
) -> tuple[list[MetricRow], list[SweepCurve]]:
    """Detection rate versus normal-subspace rank, aggregated over
    independently seeded trials.

    Trial i draws its scenario from stream cfg.seed.stream_index + i, so
    the sweep is fully determined by (cfg, methods, rank_grid, trials,
    beta); trials may run in parallel (workers > 1) without changing any
    emitted number because rows are reduced in trial order either way.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("methods must be nonempty")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    rank_grid = list(rank_grid)
    if not rank_grid:
        raise ValueError("rank_grid must be nonempty")
    for rank in rank_grid:
        if not 1 <= rank <= cfg.m - 1:
            raise ValueError(f"rank grid values must be in [1, m-1] = [1, {cfg.m - 1}], got {rank}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    def run(trial: int) -> list[MetricRow]:
        return _run_trial(cfg, trial, methods, rank_grid, beta, power_exponent, kinds, center)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(run, range(trials)))
    else:
        per_trial = [run(trial) for trial in range(trials)]

    method_order = {method: i for i, method in enumerate(methods)}
    rows = [row for trial_rows in per_trial for row in trial_rows]
    rows.sort(key=lambda row: (method_order[row.method], row.rank, row.trial))

    curves = []
    for method in methods:
        means, stds = [], []
        for rank in rank_grid:
            rates = [r.detection_rate for r in rows if r.method == method and r.rank == rank]
            means.append(float(np.mean(rates)))
            stds.append(float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0)
        curves.append(
            SweepCurve(
                method=method,
                ranks=tuple(rank_grid),
                mean_detection_rate=tuple(means),
                std_detection_rate=tuple(stds),
            )
        )
    return rows, curves
