"""
Evaluation protocols: detection-rate sweeps, ROC/AUC, the lambda
sensitivity table, runtime scaling, sample-size sweeps and kernel
comparisons.

Every run's dataset and detection seed is `base_seed + repeat`, so the same
configuration always reproduces the same report.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import time

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from confoundverse.config import settings
from confoundverse import exceptions as ex
from confoundverse.kernel_core import KernelSpec, effective_p
from confoundverse.estimator import RidgeConfig
from confoundverse.confounder_testing import bonferroni_score_threshold, detect
from confoundverse import datagen


logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID: Tuple[float, ...] = (1e-12, 1e-8, 1e-4, 1.0)
DEFAULT_RHO_GRID: Tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
DEFAULT_SAMPLE_SIZES: Tuple[int, ...] = (200, 500, 1000)
RUNTIME_REPEATS: int = 3

CSV_COLUMNS = ['rho', 'lambda', 'repeat', 'seed', 'verdict', 'score', 'wall_ms']


@dataclass(frozen=True)
class SweepConfig:
    """
    A Monte Carlo sweep over confounding strengths.

    Parameters
    ----------
    rho_values : Sequence[float]
        Confounding strengths; must contain 0 for ROC/AUC

    repeats : int, optional
        Runs per strength, by default 30

    sample_size : int, optional
        N of every dataset, by default 1000

    ridge : RidgeConfig, optional
        Detection configuration

    scenario : ScenarioConfig, optional
        Data template; its rho, N and seed are overridden per run

    base_seed : int, optional
        Run `repeat` uses seed `base_seed + repeat`, by default 0

    alpha_level : float, optional
        Family-wise level, by default 0.05

    env_as_covariate : bool, optional
        Append environment labels to X (multi-environment scenario), by default False

    jobs : int, optional
        Parallel workers, by default 1
    """
    rho_values: Sequence[float] = (0.0,) + DEFAULT_RHO_GRID
    repeats: int = 30
    sample_size: int = 1000
    ridge: RidgeConfig = field(default_factory=RidgeConfig)
    scenario: datagen.ScenarioConfig = field(default_factory=datagen.ScenarioConfig)
    base_seed: int = 0
    alpha_level: float = settings.DEFAULT_ALPHA
    env_as_covariate: bool = False
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'rho_values', tuple(float(r) for r in self.rho_values))
        if not self.rho_values:
            raise ex.ErrorOutOfRange('rho_values', self.rho_values, 'a non-empty list')
        if any(r < 0 or not np.isfinite(r) for r in self.rho_values):
            raise ex.ErrorOutOfRange('rho', self.rho_values, '[0, inf)')
        if self.repeats < 1:
            raise ex.ErrorOutOfRange('repeats', self.repeats, '[1, inf)')
        if self.sample_size <= self.ridge.P:
            raise ex.ErrorBasisSize(self.ridge.P, self.sample_size)

    def to_dict(self) -> dict:
        return {
            'rho_values': list(self.rho_values),
            'repeats': int(self.repeats),
            'sample_size': int(self.sample_size),
            'ridge': self.ridge.to_dict(),
            'scenario': self.scenario.to_dict(),
            'base_seed': int(self.base_seed),
            'alpha_level': float(self.alpha_level),
            'env_as_covariate': bool(self.env_as_covariate),
        }


@dataclass(frozen=True)
class RunRecord:
    rho: float
    lam: float
    repeat: int
    seed: int
    verdict: str
    score: float
    wall_ms: float
    P: int

    @property
    def rejected(self) -> bool:
        return self.verdict == 'reject_null'

    def to_row(self) -> dict:
        return {
            'rho': self.rho,
            'lambda': self.lam,
            'repeat': self.repeat,
            'seed': self.seed,
            'verdict': self.verdict,
            'score': self.score,
            'wall_ms': self.wall_ms,
        }


@dataclass(frozen=True)
class RocCurve:
    roc_points: List[Tuple[float, float]]
    auc: float

    def to_dict(self) -> dict:
        return {'roc_points': [list(p) for p in self.roc_points], 'auc': float(self.auc)}


@dataclass(frozen=True)
class MetricsReport:
    """
    Detection rates per confounding strength, ROC curves of every rho > 0
    against the rho = 0 runs, the pooled ROC/AUC, and the run records.
    """
    detection_rate: Dict[float, float]
    roc_by_rho: Dict[float, RocCurve]
    roc_points: List[Tuple[float, float]]
    auc: Optional[float]
    runtimes_ms: List[float]
    total_runtime_ms: Dict[float, float]
    records: List[RunRecord]
    config: dict

    def to_dict(self) -> dict:
        return {
            'detection_rate': {repr(r): v for r, v in self.detection_rate.items()},
            'roc_by_rho': {repr(r): c.to_dict() for r, c in self.roc_by_rho.items()},
            'roc_points': [list(p) for p in self.roc_points],
            'auc': self.auc,
            'runtimes_ms': list(self.runtimes_ms),
            'total_runtime_ms': {repr(r): v for r, v in self.total_runtime_ms.items()},
            'config': self.config,
        }

    def to_frame(self) -> pd.DataFrame:
        return records_frame(self.records)


@dataclass(frozen=True)
class LambdaTable:
    lambdas: List[float]
    rhos: List[float]
    auc: np.ndarray
    records: List[RunRecord]
    config: dict

    def to_dict(self) -> dict:
        return {
            'lambdas': list(self.lambdas),
            'rhos': list(self.rhos),
            'auc': [[float(a) for a in row] for row in self.auc],
            'config': self.config,
        }

    def to_frame(self) -> pd.DataFrame:
        return records_frame(self.records)


@dataclass(frozen=True)
class RuntimeTable:
    rows: List[dict]
    n_slope: Optional[float]
    p_slope: Optional[float]
    config: dict

    def to_dict(self) -> dict:
        return {
            'rows': list(self.rows),
            'n_slope': self.n_slope,
            'p_slope': self.p_slope,
            'config': self.config,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=['N', 'P', 'median_ms'])


@dataclass(frozen=True)
class GridReport:
    """Detection rates of several sweeps keyed by a grid label (N or kernel)."""
    reports: Dict[str, MetricsReport]
    config: dict

    def to_dict(self) -> dict:
        return {
            'reports': {k: r.to_dict() for k, r in self.reports.items()},
            'config': self.config,
        }

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for key, report in self.reports.items():
            frame = report.to_frame()
            frame.insert(0, 'cell', key)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in records], columns=CSV_COLUMNS)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                            runs                            ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
def _run_one(cfg: SweepConfig, rho: float, lam: float, repeat: int) -> RunRecord:
    seed = cfg.base_seed + repeat
    dataset = datagen.generate(replace(cfg.scenario, rho=rho, N=cfg.sample_size, seed=seed))
    if cfg.env_as_covariate:
        dataset = dataset.with_env_covariate()
    ridge = replace(cfg.ridge, lam=lam, seed=seed)
    result = detect(dataset, ridge, cfg.alpha_level)
    return RunRecord(
        rho=rho,
        lam=lam,
        repeat=repeat,
        seed=seed,
        verdict=result.verdict.value,
        score=result.score,
        wall_ms=result.wall_time_ms,
        P=ridge.P,
    )


def _run_cells(cfg: SweepConfig, cells: Sequence[Tuple[float, float]]) -> List[RunRecord]:
    jobs = [(rho, lam, r) for rho, lam in cells for r in range(cfg.repeats)]
    logger.info('running %d detections on %d cells (jobs=%d)', len(jobs), len(cells), cfg.jobs)
    return Parallel(n_jobs=cfg.jobs)(
        delayed(_run_one)(cfg, rho, lam, r) for rho, lam, r in jobs
    )


def roc_auc(scores, labels) -> RocCurve:
    """
    Threshold-sweep ROC curve and trapezoidal AUC.

    Thresholds run over the distinct scores from high to low; tied scores
    share one step, so the AUC equals the Mann-Whitney statistic with ties
    counted one half.

    Parameters
    ----------
    scores : array_like
        Continuous scores, higher meaning more confounded

    labels : array_like
        True for positives

    Returns
    -------
    RocCurve
        (false positive rate, true positive rate) points from (0, 0) to
        (1, 1) and the AUC

    Raises
    ------
    ErrorSingleClassLabels
        If the labels lack a positive or a negative
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    labels = np.asarray(labels, dtype=bool).reshape(-1)
    if scores.shape != labels.shape:
        raise ex.ErrorDimensionMismatch('roc_auc', scores.shape, labels.shape)
    if not np.all(np.isfinite(scores)):
        raise ex.ErrorNonFinite('scores')
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ex.ErrorSingleClassLabels(n_pos, int(labels.size))

    order = np.argsort(-scores, kind='mergesort')
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    true_positives = np.cumsum(sorted_labels)
    false_positives = np.cumsum(~sorted_labels)
    step_ends = np.r_[np.nonzero(np.diff(sorted_scores))[0], sorted_scores.size - 1]

    tpr = np.r_[0.0, true_positives[step_ends] / n_pos]
    fpr = np.r_[0.0, false_positives[step_ends] / n_neg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(roc_points=list(zip(fpr.tolist(), tpr.tolist())), auc=auc)


def _metrics(cfg: SweepConfig, records: Sequence[RunRecord]) -> MetricsReport:
    by_rho: Dict[float, List[RunRecord]] = {}
    for record in records:
        by_rho.setdefault(record.rho, []).append(record)

    detection_rate = {
        rho: sum(r.rejected for r in runs) / len(runs) for rho, runs in by_rho.items()
    }
    total_runtime = {rho: float(sum(r.wall_ms for r in runs)) for rho, runs in by_rho.items()}

    roc_by_rho: Dict[float, RocCurve] = {}
    roc_points: List[Tuple[float, float]] = []
    auc = None
    negatives = by_rho.get(0.0, [])
    positives = [r for r in records if r.rho > 0]
    if negatives and positives:
        for rho, runs in by_rho.items():
            if rho > 0:
                roc_by_rho[rho] = _records_roc(runs, negatives)
        pooled = _records_roc(positives, negatives)
        roc_points, auc = pooled.roc_points, pooled.auc

    return MetricsReport(
        detection_rate=detection_rate,
        roc_by_rho=roc_by_rho,
        roc_points=roc_points,
        auc=auc,
        runtimes_ms=[r.wall_ms for r in records],
        total_runtime_ms=total_runtime,
        records=list(records),
        config=cfg.to_dict(),
    )


def _records_roc(positives: Sequence[RunRecord], negatives: Sequence[RunRecord]) -> RocCurve:
    scores = [r.score for r in positives] + [r.score for r in negatives]
    labels = [True] * len(positives) + [False] * len(negatives)
    return roc_auc(scores, labels)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                           sweeps                           ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
def detection_rate_sweep(cfg: SweepConfig) -> MetricsReport:
    """
    Detection rate at every confounding strength.

    Returns
    -------
    MetricsReport
        detection_rate[rho] is the share of `reject_null` verdicts over the
        `repeats` runs; ROC/AUC are filled when rho = 0 is in the sweep
    """
    records = _run_cells(cfg, [(rho, cfg.ridge.lam) for rho in cfg.rho_values])
    return _metrics(cfg, records)


def false_positive_rate_at_bonferroni(report: MetricsReport) -> Optional[float]:
    """
    The ROC false positive rate at the score threshold the verdict uses.

    Matches `detection_rate[0]` since a run is rejected iff its score
    exceeds Phi^{-1}(1 - alpha / 2P).
    """
    negatives = [r for r in report.records if r.rho == 0.0]
    if not negatives:
        return None
    threshold = bonferroni_score_threshold(report.config['alpha_level'], negatives[0].P)
    return sum(r.score > threshold for r in negatives) / len(negatives)


def lambda_sensitivity(
        grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
        rho_values: Sequence[float] = DEFAULT_RHO_GRID,
        cfg: Optional[SweepConfig] = None
    ) -> LambdaTable:
    """
    AUC for every (rho, lambda) cell.

    Each cell scores `repeats` runs at rho against `repeats` runs at rho = 0
    with the same lambda; the score is the max non-degenerate |z|.

    Returns
    -------
    LambdaTable
        auc[i][j] for rho_values[i] and grid[j]
    """
    cfg = cfg or SweepConfig()
    rhos = [float(r) for r in rho_values if r > 0]
    if not rhos:
        raise ex.ErrorOutOfRange('rho_values', list(rho_values), 'at least one rho > 0')
    cells = [(rho, float(lam)) for lam in grid for rho in [0.0] + rhos]
    records = _run_cells(cfg, cells)

    auc = np.zeros((len(rhos), len(grid)))
    for j, lam in enumerate(grid):
        negatives = [r for r in records if r.lam == lam and r.rho == 0.0]
        for i, rho in enumerate(rhos):
            positives = [r for r in records if r.lam == lam and r.rho == rho]
            auc[i, j] = _records_roc(positives, negatives).auc

    config = cfg.to_dict()
    config['lambda_grid'] = [float(l) for l in grid]
    return LambdaTable(lambdas=[float(l) for l in grid], rhos=rhos, auc=auc,
                       records=records, config=config)


def _log_log_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    if len(set(x)) < 3:
        return None
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def runtime_scaling(
        N_grid: Sequence[int],
        P_grid: Sequence[int],
        d: int = 3,
        cfg: Optional[SweepConfig] = None
    ) -> RuntimeTable:
    """
    Wall time of `detect` over a grid of sample sizes and basis sizes.

    Each grid point times `detect` alone (data generation excluded), pinned
    to one BLAS thread, and keeps the median of three runs. The log-log slope
    is fitted against N at the smallest P and against P at the largest N.

    Returns
    -------
    RuntimeTable
        One row per (N, P) and the two fitted exponents (None when the grid
        has fewer than three points)
    """
    cfg = cfg or SweepConfig()
    N_grid = sorted(int(n) for n in N_grid)
    P_grid = sorted(int(p) for p in P_grid)
    if len(N_grid) < 3:
        raise ex.ErrorOutOfRange('N_grid', N_grid, 'at least 3 points')
    if not P_grid:
        raise ex.ErrorOutOfRange('P_grid', P_grid, 'at least 1 point')
    for N in N_grid:
        for P in P_grid:
            if P >= N:
                raise ex.ErrorBasisSize(P, N)

    rows = []
    with settings.thread_limit(1):
        for N in N_grid:
            scenario = replace(cfg.scenario, N=N, d_x=d, seed=cfg.base_seed)
            dataset = datagen.generate(scenario)
            for P in P_grid:
                ridge = replace(cfg.ridge, P=P, seed=cfg.base_seed)
                times = []
                for _ in range(RUNTIME_REPEATS):
                    start = time.perf_counter()
                    detect(dataset, ridge, cfg.alpha_level)
                    times.append((time.perf_counter() - start) * 1e3)
                rows.append({'N': N, 'P': P, 'median_ms': float(np.median(times))})
                logger.info('runtime N=%d P=%d median=%.2fms', N, P, rows[-1]['median_ms'])

    small_p = [r for r in rows if r['P'] == P_grid[0]]
    large_n = [r for r in rows if r['N'] == N_grid[-1]]
    config = cfg.to_dict()
    config.update(N_grid=N_grid, P_grid=P_grid, d=d)
    return RuntimeTable(
        rows=rows,
        n_slope=_log_log_slope([r['N'] for r in small_p], [r['median_ms'] for r in small_p]),
        p_slope=_log_log_slope([r['P'] for r in large_n], [r['median_ms'] for r in large_n]),
        config=config,
    )


def sample_size_sweep(
        cfg: SweepConfig,
        sample_sizes: Sequence[int] = DEFAULT_SAMPLE_SIZES
    ) -> GridReport:
    """
    Detection rate across confounding strengths and sample sizes.

    The basis size is capped at N - 1 for small samples.
    """
    reports = {}
    for N in sample_sizes:
        ridge = replace(cfg.ridge, P=min(cfg.ridge.P, effective_p(None, N)))
        reports[f'N={N}'] = detection_rate_sweep(replace(cfg, sample_size=N, ridge=ridge))
    config = cfg.to_dict()
    config['sample_sizes'] = [int(n) for n in sample_sizes]
    return GridReport(reports=reports, config=config)


def kernel_comparison(cfg: SweepConfig, kernels: Sequence[KernelSpec]) -> GridReport:
    """Detection rate across confounding strengths for several kernels."""
    reports = {}
    for spec in kernels:
        report = detection_rate_sweep(replace(cfg, ridge=replace(cfg.ridge, kernel=spec)))
        if spec.label in reports:
            logger.warning('kernel %s listed twice; keeping the last run', spec.label)
        reports[spec.label] = report
    config = cfg.to_dict()
    config['kernels'] = [spec.to_dict() for spec in kernels]
    return GridReport(reports=reports, config=config)
