"""
Brute-force references for the closed forms and for the test calibration.

The minimizers here use plain gradient descent with a backtracking line
search and share no linear-solve code with `estimator`, so agreement between
the two is an independent check.

Functions:
- oracle_minimize_kls(...): Gradient-descent KLS minimizer.
- oracle_minimize_hkls(...): Gradient-descent ||Z||^2-weighted minimizer.
- oracle_agreement(...): Closed form vs oracle over random small instances.
- monte_carlo_null_calibration(...): Rejection rate and z moments under H0.
- pair_count_auc(...): Mann-Whitney pair-counting AUC.
"""

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from confoundverse.config import settings
from confoundverse import exceptions as ex
from confoundverse.kernel_core import (
    FAMILIES,
    BasisKernel,
    DesignMatrix,
    KernelSpec,
    as_matrix,
    basis_kernel,
    weighted_basis,
)
from confoundverse.estimator import RidgeConfig, fit_hkls, fit_kls
from confoundverse.confounder_testing import detect
from confoundverse import datagen


logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE: float = 1e-10
MAX_ITERATIONS: int = 1_000_000
ARMIJO: float = 0.5
SMALL_LAMBDAS: Tuple[float, ...] = (1e-4, 1e-8)
# basis rows nearly orthogonal: full rank and a well-conditioned descent at tiny lambda
SMALL_LAMBDA_KERNEL = KernelSpec(family='gaussian', bandwidth=0.25)


@dataclass(frozen=True)
class OracleReport:
    """
    Agreement between the gradient-descent oracle and the closed form.

    `objective_gap` is the oracle objective minus the closed-form objective,
    reported for the instance where its magnitude is largest.
    """
    max_coord_error: float
    objective_gap: float
    iterations: int
    converged: bool
    gradient_norm: float = 0.0
    instances: int = 1
    lambdas: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            'max_coord_error': float(self.max_coord_error),
            'objective_gap': float(self.objective_gap),
            'iterations': int(self.iterations),
            'converged': bool(self.converged),
            'gradient_norm': float(self.gradient_norm),
            'instances': int(self.instances),
            'lambdas': [float(lam) for lam in self.lambdas],
        }


@dataclass(frozen=True)
class CalibrationReport:
    rejection_rate: float
    z_mean: Optional[float]
    z_var: Optional[float]
    ks_distance: Optional[float]
    repeats: int
    coordinates: int

    def to_dict(self) -> dict:
        return {
            'rejection_rate': float(self.rejection_rate),
            'z_mean': self.z_mean,
            'z_var': self.z_var,
            'ks_distance': self.ks_distance,
            'repeats': int(self.repeats),
            'coordinates': int(self.coordinates),
        }


@dataclass(frozen=True)
class DescentInfo:
    iterations: int
    converged: bool
    gradient_norm: float
    objective: float


def ridge_objective(K, Y, alpha, lam: float, weights=None) -> float:
    """(1/N) sum_i w_i (Y_i - (K^T a)_i)^2 + (lam/N) sum_k a_k^2."""
    K = as_matrix(K)
    Y = np.asarray(Y, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    w = np.ones_like(Y) if weights is None else np.asarray(weights, dtype=float)
    residuals = Y - K.T @ alpha
    return float((np.dot(w * residuals, residuals) + lam * np.dot(alpha, alpha)) / Y.shape[0])


def _gradient_descent(
        K: np.ndarray,
        Y: np.ndarray,
        w: np.ndarray,
        lam: float,
        tol: float,
        max_iter: int
    ) -> Tuple[np.ndarray, DescentInfo]:
    N = Y.shape[0]
    alpha = np.zeros(K.shape[0])
    step = 1.0
    gradient_norm = np.inf

    for iteration in range(max_iter):
        residuals = Y - K.T @ alpha
        gradient = (2.0 / N) * (lam * alpha - K @ (w * residuals))
        gradient_norm = float(np.linalg.norm(gradient))
        if gradient_norm < tol:
            return alpha, DescentInfo(iteration, True, gradient_norm,
                                      ridge_objective(K, Y, alpha, lam, w))

        # exact decrease of the quadratic along -g, free of cancellation:
        # J(a - t g) - J(a) = -t ||g||^2 + (t^2 / 2) g^T H g
        g_sq = float(np.dot(gradient, gradient))
        Kg = K.T @ gradient
        curvature = (2.0 / N) * (float(np.dot(w * Kg, Kg)) + lam * g_sq)
        step *= 2.0
        while -step * g_sq + 0.5 * step ** 2 * curvature > -ARMIJO * step * g_sq:
            step *= 0.5
        alpha = alpha - step * gradient

    logger.warning('oracle did not converge in %d iterations (|grad|=%.3e)', max_iter, gradient_norm)
    return alpha, DescentInfo(max_iter, False, gradient_norm,
                              ridge_objective(K, Y, alpha, lam, w))


def _prepare(K, Y, lam: float, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    if not np.isfinite(lam) or lam <= 0:
        raise ex.ErrorNotPositive('lambda', lam)
    if not tol > 0:
        raise ex.ErrorNotPositive('tol', tol)
    K = as_matrix(K)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if Y.shape[0] != K.shape[1]:
        raise ex.ErrorDimensionMismatch('oracle', K.shape[1], Y.shape[0])
    return K, Y


def oracle_minimize_kls(
        K: Union[BasisKernel, np.ndarray],
        Y,
        lam: float,
        tol: float = DEFAULT_TOLERANCE,
        max_iter: int = MAX_ITERATIONS,
        full_output: bool = False
    ):
    """
    Minimize the KLS objective by gradient descent from a = 0.

    Parameters
    ----------
    K : BasisKernel | np.ndarray
        The P x N basis kernel

    Y : array_like
        The outcome

    lam : float
        The regularizer

    tol : float, optional
        Stop when the gradient norm drops below it, by default 1e-10

    max_iter : int, optional
        Iteration cap, by default 10^6

    full_output : bool, optional
        True to also return the `DescentInfo`, by default False

    Returns
    -------
    np.ndarray | Tuple[np.ndarray, DescentInfo]
        The minimizer, and the descent diagnostics when `full_output`
    """
    K, Y = _prepare(K, Y, lam, tol)
    alpha, info = _gradient_descent(K, Y, np.ones_like(Y), lam, tol, max_iter)
    return (alpha, info) if full_output else alpha


def oracle_minimize_hkls(
        K: Union[BasisKernel, np.ndarray],
        Y,
        squared_norms,
        lam: float,
        tol: float = DEFAULT_TOLERANCE,
        max_iter: int = MAX_ITERATIONS,
        full_output: bool = False
    ):
    """
    Minimize the ||Z||^2-weighted objective by gradient descent from a = 0.

    Same as `oracle_minimize_kls` with the squared residual of sample i
    weighted by `squared_norms[i]`.
    """
    K, Y = _prepare(K, Y, lam, tol)
    w = np.asarray(squared_norms, dtype=float).reshape(-1)
    if w.shape != Y.shape:
        raise ex.ErrorDimensionMismatch('oracle weights', Y.shape, w.shape)
    alpha, info = _gradient_descent(K, Y, w, lam, tol, max_iter)
    return (alpha, info) if full_output else alpha


def random_instance(
        family: Union[str, KernelSpec],
        seed: int,
        N: int = 30,
        P: int = 6,
        d: int = 3
    ) -> Tuple[BasisKernel, np.ndarray, np.ndarray]:
    """A small random (K, squared_norms, Y) instance."""
    spec = family if isinstance(family, KernelSpec) else KernelSpec(family=family)
    rng = np.random.default_rng(seed)
    Z = DesignMatrix(rng.uniform(-1.0, 1.0, size=(N, d + 1)))
    K = basis_kernel(spec, Z, P, seed=seed)
    Y = rng.normal(size=N)
    return K, weighted_basis(K, Z).squared_norms, Y


def oracle_agreement(
        families: Iterable[str] = FAMILIES,
        instances: int = 20,
        lam: float = 1.0,
        seed: int = 0,
        tol: float = DEFAULT_TOLERANCE,
        N: int = 30,
        P: int = 6,
        small_lambdas: Sequence[float] = SMALL_LAMBDAS
    ) -> OracleReport:
    """
    Compare `fit_kls` / `fit_hkls` against the oracles on random instances.

    Every family is checked at `lam`; each of `small_lambdas` is checked on
    the narrow gaussian basis `SMALL_LAMBDA_KERNEL`, which has full rank.

    Returns
    -------
    OracleReport
        Worst coordinate error and objective gap, total iterations, and
        whether every descent converged
    """
    cases = [(KernelSpec(family=family), lam) for family in families]
    cases += [(SMALL_LAMBDA_KERNEL, small) for small in small_lambdas]

    max_error = 0.0
    worst_gap = 0.0
    iterations = 0
    converged = True
    gradient_norm = 0.0
    count = 0

    for spec, case_lam in cases:
        for i in range(instances):
            K, norms, Y = random_instance(spec, seed + i, N=N, P=P)
            K_psi = K.K * norms[np.newaxis, :]
            pairs = (
                (fit_kls(K, Y, case_lam), None),
                (fit_hkls(K, K_psi, Y, case_lam), norms),
            )
            for closed, weights in pairs:
                if weights is None:
                    alpha, info = oracle_minimize_kls(K, Y, case_lam, tol=tol, full_output=True)
                else:
                    alpha, info = oracle_minimize_hkls(K, Y, weights, case_lam, tol=tol,
                                                       full_output=True)
                max_error = max(max_error, float(np.max(np.abs(alpha - closed))))
                gap = info.objective - ridge_objective(K, Y, closed, case_lam, weights)
                if abs(gap) > abs(worst_gap):
                    worst_gap = gap
                iterations += info.iterations
                converged = converged and info.converged
                gradient_norm = max(gradient_norm, info.gradient_norm)
                count += 1

    return OracleReport(
        max_coord_error=max_error,
        objective_gap=worst_gap,
        iterations=iterations,
        converged=converged,
        gradient_norm=gradient_norm,
        instances=count,
        lambdas=tuple(sorted({case_lam for _, case_lam in cases})),
    )


def _null_run(config: RidgeConfig, dataset, seed: int, alpha_level: float):
    result = detect(dataset, replace(config, seed=seed), alpha_level)
    return result.rejected, result.z_scores[~result.degenerate_coords]


def monte_carlo_null_calibration(
        config: RidgeConfig,
        scenario: datagen.ScenarioConfig,
        repeats: int = 200,
        alpha_level: float = settings.DEFAULT_ALPHA,
        jobs: int = 1,
        generator: Optional[Callable[[int], object]] = None
    ) -> CalibrationReport:
    """
    Run the test on `repeats` independently seeded datasets without confounding.

    Parameters
    ----------
    config : RidgeConfig
        Detection configuration; its seed is replaced per repeat

    scenario : ScenarioConfig
        Data template with rho = 0; repeat i uses seed `scenario.seed + i`

    repeats : int, optional
        Number of datasets, at least 100, by default 200

    alpha_level : float, optional
        Family-wise level, by default 0.05

    jobs : int, optional
        Parallel workers, by default 1

    generator : Callable[[int], object], optional
        Replaces the scenario generator; called with the repeat seed and
        must return an object with `X`, `T`, `Y`

    Returns
    -------
    CalibrationReport
        Family-wise rejection rate, mean and variance of the pooled
        non-degenerate z-scores, and their Kolmogorov-Smirnov distance to the
        standard normal
    """
    if scenario.rho != 0:
        raise ex.ErrorOutOfRange('rho', scenario.rho, '{0}')
    if repeats < 100:
        raise ex.ErrorOutOfRange('repeats', repeats, '[100, inf)')

    seeds = [scenario.seed + i for i in range(repeats)]
    make = generator or (lambda s: datagen.generate(replace(scenario, seed=s)))
    runs = Parallel(n_jobs=jobs)(
        delayed(_null_run)(config, make(s), s, alpha_level) for s in seeds
    )

    rejections = sum(int(rejected) for rejected, _ in runs)
    pooled = np.concatenate([z for _, z in runs]) if runs else np.empty(0)
    if pooled.size:
        z_mean = float(pooled.mean())
        z_var = float(pooled.var())
        ks = float(stats.kstest(pooled, 'norm').statistic)
    else:
        z_mean = z_var = ks = None

    logger.info('null calibration: %d/%d rejections, %d z-scores', rejections, repeats, pooled.size)
    return CalibrationReport(
        rejection_rate=rejections / repeats,
        z_mean=z_mean,
        z_var=z_var,
        ks_distance=ks,
        repeats=repeats,
        coordinates=int(pooled.size),
    )


def pair_count_auc(scores, labels) -> float:
    """
    Mann-Whitney AUC by exhaustive pair counting: the share of
    (positive, negative) pairs where the positive scores higher, ties
    counting one half.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    positives = scores[labels]
    negatives = scores[~labels]
    if positives.size == 0 or negatives.size == 0:
        raise ex.ErrorSingleClassLabels(int(positives.size), int(labels.size))

    wins = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (positives.size * negatives.size)
