"""
The kernel regression confounder detection test.

Under no hidden confounding the KLS and HKLS coefficients coincide; the test
turns their difference delta into per-coordinate z-scores using the plug-in
asymptotic covariance sigma^2 V, and rejects the null when any Bonferroni
corrected p-value falls below alpha / P.

Functions:
- difference_operator(...): The linear map V0 with V0 Y = delta.
- covariance_matrix(...): V = N V0 V0^T.
- z_and_p(...): z-scores, two-sided p-values, degenerate coordinates.
- bonferroni_verdict(...): Rejected coordinates and the verdict.
- detect(...): The whole test on observed (X, T, Y).
"""

from dataclasses import dataclass, field
from typing import Any, Optional, Tuple
import enum
import logging
import time

import numpy as np
from scipy import special

from confoundverse.config import settings
from confoundverse import exceptions as ex
from confoundverse.kernel_core import (
    BasisKernel,
    DesignMatrix,
    WeightedBasisKernel,
    as_matrix,
    basis_kernel,
    weighted_basis,
)
from confoundverse.estimator import (
    CoefficientPair,
    RidgeConfig,
    check_lambda,
    fit_hkls,
    fit_kls,
    range_basis,
    range_solve,
    regularization_dominates,
    residual_variance,
)


logger = logging.getLogger(__name__)

P_VALUE_FLOOR: float = 1e-300
DEGENERATE_TOLERANCE: float = 1e-14


class Verdict(str, enum.Enum):
    SUPPORT_NULL = 'support_null'
    REJECT_NULL = 'reject_null'


@dataclass(frozen=True)
class ObservedData:
    """The observed sample: covariates X (N x d), treatment T and outcome Y."""
    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    env_labels: Optional[np.ndarray] = None

    def with_env_covariate(self) -> 'ObservedData':
        """Append the environment labels to X as one more covariate column."""
        if self.env_labels is None:
            raise ex.ErrorMissingColumns(['env'])
        X = np.column_stack([np.asarray(self.X, dtype=float),
                             np.asarray(self.env_labels, dtype=float)])
        return ObservedData(X=X, T=self.T, Y=self.Y, env_labels=self.env_labels)


@dataclass(frozen=True)
class TestResult:
    """
    Outcome of one detection run.

    `rejected_coords[j]` holds when p_j < alpha_level / P; the verdict is
    `reject_null` iff any coordinate is rejected. Degenerate coordinates
    (sigma^2 V_jj below tolerance) carry z = 0 and p = 1.
    """
    __test__ = False

    z_scores: np.ndarray
    p_values: np.ndarray
    rejected_coords: np.ndarray
    verdict: Verdict
    sigma_sq: float
    alpha_level: float
    degenerate_coords: np.ndarray
    N: int = 0
    lam: float = settings.DEFAULT_LAMBDA
    kernel: dict = field(default_factory=dict)
    wall_time_ms: float = 0.0
    coefficients: Optional[CoefficientPair] = field(default=None, repr=False, compare=False)

    @property
    def P(self) -> int:
        return int(self.z_scores.shape[0])

    @property
    def rejected(self) -> bool:
        return self.verdict == Verdict.REJECT_NULL

    @property
    def score(self) -> float:
        """Continuous confounding score: max |z_j| over non-degenerate coordinates."""
        live = np.abs(self.z_scores[~self.degenerate_coords])
        return float(live.max()) if live.size else 0.0

    def to_dict(self) -> dict:
        return {
            'verdict': self.verdict.value,
            'alpha_level': float(self.alpha_level),
            'P': self.P,
            'N': int(self.N),
            'lambda': float(self.lam),
            'kernel': dict(self.kernel),
            'z_scores': [float(z) for z in self.z_scores],
            'p_values': [float(p) for p in self.p_values],
            'rejected': [bool(r) for r in self.rejected_coords],
            'degenerate': [bool(d) for d in self.degenerate_coords],
            'sigma_sq': float(self.sigma_sq),
            'wall_time_ms': float(self.wall_time_ms),
        }


def difference_operator(
        K: BasisKernel,
        K_psi: WeightedBasisKernel,
        lam: float,
        basis: Optional[np.ndarray] = None
    ) -> np.ndarray:
    """
    The P x N linear map V0 taking an outcome vector to delta.

    V0 = (K_psi K^T + lam I)^{-1} K_psi - (K K^T + lam I)^{-1} K, computed with
    two Cholesky solves on N right-hand sides in the range of K.
    """
    lam = check_lambda(lam)
    K = as_matrix(K)
    K_psi = as_matrix(K_psi)
    if K.shape != K_psi.shape:
        raise ex.ErrorDimensionMismatch('difference_operator', K.shape, K_psi.shape)
    basis = range_basis(K) if basis is None else basis
    weighted = range_solve(K_psi, K, lam, basis)
    plain = range_solve(K, K, lam, basis)
    return weighted - plain


def covariance_matrix(V0: np.ndarray, N: int) -> np.ndarray:
    """V = N V0 V0^T, symmetric positive semi-definite."""
    V0 = np.asarray(V0, dtype=float)
    if V0.shape[1] != N:
        raise ex.ErrorDimensionMismatch('covariance_matrix', N, V0.shape[1])
    V = N * (V0 @ V0.T)
    return (V + V.T) / 2.0


def normal_two_sided_p(z) -> np.ndarray:
    """2 (1 - Phi(|z|)) through the complementary error function, clamped to [1e-300, 1]."""
    z = np.abs(np.asarray(z, dtype=float))
    return np.clip(special.erfc(z / np.sqrt(2.0)), P_VALUE_FLOOR, 1.0)


def z_and_p(
        delta,
        sigma_sq: float,
        V: np.ndarray,
        N: int
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-coordinate z-scores and two-sided p-values.

    Parameters
    ----------
    delta : array_like
        The coefficient difference, length P

    sigma_sq : float
        The KLS residual variance

    V : np.ndarray
        The P x P covariance plug-in

    N : int
        Sample size

    Returns
    -------
    Tuple[np.ndarray, np.ndarray, np.ndarray]
        z_j = sqrt(N) delta_j / sqrt(sigma^2 V_jj), p_j = 2 (1 - Phi(|z_j|)), and
        the degenerate flags; a coordinate is degenerate when
        sigma^2 V_jj < 1e-14 max(1, ||delta||_inf^2 N), and then z_j = 0, p_j = 1
    """
    delta = np.asarray(delta, dtype=float).reshape(-1)
    variances = max(float(sigma_sq), 0.0) * np.clip(np.diag(V), 0.0, None)
    scale = float(np.max(np.abs(delta))) if delta.size else 0.0
    tolerance = DEGENERATE_TOLERANCE * max(1.0, scale ** 2 * N)
    degenerate = variances < tolerance

    z_scores = np.zeros_like(delta)
    live = ~degenerate
    z_scores[live] = np.sqrt(N) * delta[live] / np.sqrt(variances[live])

    p_values = normal_two_sided_p(z_scores)
    p_values[degenerate] = 1.0
    return z_scores, p_values, degenerate


def bonferroni_verdict(
        p_values,
        alpha_level: float = settings.DEFAULT_ALPHA
    ) -> Tuple[np.ndarray, Verdict]:
    """
    Bonferroni correction over the P coordinates.

    Returns
    -------
    Tuple[np.ndarray, Verdict]
        rejected_coords[j] = p_j < alpha_level / P, and `reject_null` iff any
        coordinate is rejected
    """
    check_alpha(alpha_level)
    p_values = np.asarray(p_values, dtype=float).reshape(-1)
    rejected = p_values < alpha_level / p_values.shape[0]
    verdict = Verdict.REJECT_NULL if rejected.any() else Verdict.SUPPORT_NULL
    return rejected, verdict


def check_alpha(alpha_level: float) -> float:
    if not 0.0 < alpha_level < 1.0:
        raise ex.ErrorOutOfRange('alpha', alpha_level, '(0, 1)')
    return float(alpha_level)


def bonferroni_score_threshold(alpha_level: float, P: int) -> float:
    """The |z| above which a coordinate is rejected: Phi^{-1}(1 - alpha / (2P))."""
    check_alpha(alpha_level)
    return float(-special.ndtri(alpha_level / (2.0 * P)))


def _observed_arrays(dataset: Any) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.asarray(dataset.X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    T = np.asarray(dataset.T, dtype=float).reshape(-1)
    Y = np.asarray(dataset.Y, dtype=float).reshape(-1)
    if not X.shape[0] == T.shape[0] == Y.shape[0]:
        raise ex.ErrorRowCount({'X': X.shape[0], 'T': T.shape[0], 'Y': Y.shape[0]})
    for name, values in (('X', X), ('T', T), ('Y', Y)):
        if not np.all(np.isfinite(values)):
            raise ex.ErrorNonFinite(name)
    return X, T, Y


def detect(
        dataset: Any,
        config: Optional[RidgeConfig] = None,
        alpha_level: float = settings.DEFAULT_ALPHA
    ) -> TestResult:
    """
    Run the confounder detection test on an observed sample.

    Parameters
    ----------
    dataset : Any
        An object with `X` (N x d), `T` (N) and `Y` (N) attributes, such as
        `ObservedData` or `datagen.GeneratedDataset`

    config : RidgeConfig, optional
        Kernel, basis size, regularizer and seed, by default `RidgeConfig()`

    alpha_level : float, optional
        Family-wise significance level, by default 0.05

    Returns
    -------
    TestResult
        z-scores, p-values, Bonferroni flags and the verdict

    Raises
    ------
    ErrorBasisSize
        If N <= P

    ErrorNonFinite, ErrorRowCount
        If the data are not finite or the row counts disagree
    """
    config = config or RidgeConfig()
    check_alpha(alpha_level)
    start = time.perf_counter()

    X, T, Y = _observed_arrays(dataset)
    N = Y.shape[0]
    if N <= config.P:
        raise ex.ErrorBasisSize(config.P, N)

    Z = DesignMatrix.from_arrays(T, X)
    spec = config.kernel.resolve(Z, seed=config.seed)
    K = basis_kernel(spec, Z, config.P, selection=config.selection,
                     seed=config.seed, full_gram=config.full_gram)
    K_psi = weighted_basis(K, Z)
    regularization_dominates(K, config.lam)
    basis = range_basis(K)

    pair = CoefficientPair(
        alpha_kls=fit_kls(K, Y, config.lam, basis=basis),
        alpha_hkls=fit_hkls(K, K_psi, Y, config.lam, basis=basis),
    )
    sigma_sq = residual_variance(K, pair.alpha_kls, Y)
    V = covariance_matrix(difference_operator(K, K_psi, config.lam, basis=basis), N)
    z_scores, p_values, degenerate = z_and_p(pair.delta, sigma_sq, V, N)
    rejected, verdict = bonferroni_verdict(p_values, alpha_level)

    wall_time_ms = (time.perf_counter() - start) * 1e3
    logger.debug('detect N=%d P=%d verdict=%s degenerate=%d wall=%.1fms',
                 N, config.P, verdict.value, int(degenerate.sum()), wall_time_ms)

    return TestResult(
        z_scores=z_scores,
        p_values=p_values,
        rejected_coords=rejected,
        verdict=verdict,
        sigma_sq=sigma_sq,
        alpha_level=alpha_level,
        degenerate_coords=degenerate,
        N=N,
        lam=config.lam,
        kernel=spec.to_dict(),
        wall_time_ms=wall_time_ms,
        coefficients=pair,
    )
