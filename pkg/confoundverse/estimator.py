"""
Closed-form kernelized least squares (KLS) and ||Z||^2-weighted
kernelized least squares (HKLS) coefficients.

Both estimators minimize a ridge objective over the coefficients of the basis
kernel sections,

    KLS:  (1/N) sum_i (Y_i - (K^T a)_i)^2            + (lambda/N) sum_k a_k^2
    HKLS: (1/N) sum_i (Y_i - (K^T a)_i)^2 ||Z_i||^2  + (lambda/N) sum_k a_k^2

whose minimizers solve (K K^T + lambda I) a = K Y and
(K_psi K^T + lambda I) a = K_psi Y respectively.

Both minimizers lie in the column space of K, so the systems are solved in
the orthonormal coordinates of its numerical range. A basis with more rows
than the kernel has features (P = 40 with the degree-2 polynomial kernel on
four columns has rank 15) then stays exact at tiny lambda.
"""

from dataclasses import dataclass, field
from typing import Optional, Union
import logging

import numpy as np
from scipy import linalg

from confoundverse.config import settings
from confoundverse import exceptions as ex
from confoundverse.kernel_core import (
    BasisKernel,
    KernelSpec,
    WeightedBasisKernel,
    FIRST_P,
    SELECTIONS,
    as_matrix,
)


logger = logging.getLogger(__name__)

MAX_JITTER_ESCALATIONS: int = 3
REGULARIZATION_GUARD: float = 0.1


@dataclass(frozen=True)
class RidgeConfig:
    """
    Configuration of one detection run.

    Parameters
    ----------
    P : int, optional
        Basis size, by default `settings.DEFAULT_P`

    lam : float, optional
        The aggregate regularizer lambda = N * xi, by default `settings.DEFAULT_LAMBDA`

    kernel : KernelSpec, optional
        The kernel, by default the degree-2 polynomial kernel with offset 1

    selection : str, optional
        Basis selection mode, `first_p` or `seeded_random`, by default `first_p`

    seed : int, optional
        Seed for the basis selection and the bandwidth subsample, by default 0

    full_gram : bool, optional
        True to build the whole N x N kernel matrix before keeping the basis
        rows, by default True
    """
    P: int = settings.DEFAULT_P
    lam: float = settings.DEFAULT_LAMBDA
    kernel: KernelSpec = field(default_factory=KernelSpec)
    selection: str = FIRST_P
    seed: int = 0
    full_gram: bool = True

    def __post_init__(self):
        check_lambda(self.lam)
        if int(self.P) != self.P or self.P < 1:
            raise ex.ErrorOutOfRange('P', self.P, '[1, N)')
        if self.selection not in SELECTIONS:
            raise ex.ErrorInvalidOption(self.selection, 'selection', SELECTIONS)
        if int(self.seed) != self.seed or self.seed < 0:
            raise ex.ErrorOutOfRange('seed', self.seed, '[0, inf)')

    def to_dict(self) -> dict:
        return {
            'P': int(self.P),
            'lambda': float(self.lam),
            'kernel': self.kernel.to_dict(),
            'selection': self.selection,
            'seed': int(self.seed),
            'full_gram': bool(self.full_gram),
        }


@dataclass(frozen=True)
class CoefficientPair:
    """KLS and HKLS coefficients and their difference delta = HKLS - KLS."""
    alpha_kls: np.ndarray
    alpha_hkls: np.ndarray
    delta: np.ndarray = field(init=False)

    def __post_init__(self):
        alpha_kls = np.asarray(self.alpha_kls, dtype=float)
        alpha_hkls = np.asarray(self.alpha_hkls, dtype=float)
        if alpha_kls.shape != alpha_hkls.shape:
            raise ex.ErrorDimensionMismatch('CoefficientPair', alpha_kls.shape, alpha_hkls.shape)
        if not (np.all(np.isfinite(alpha_kls)) and np.all(np.isfinite(alpha_hkls))):
            raise ex.ErrorNonFinite('coefficients')
        object.__setattr__(self, 'alpha_kls', alpha_kls)
        object.__setattr__(self, 'alpha_hkls', alpha_hkls)
        object.__setattr__(self, 'delta', alpha_hkls - alpha_kls)


def check_lambda(lam: float) -> float:
    if not np.isfinite(lam) or lam <= 0:
        raise ex.ErrorNotPositive('lambda', lam)
    return float(lam)


def symmetric_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A B^T symmetrized as (M + M^T) / 2."""
    M = A @ B.T
    return (M + M.T) / 2.0


def spd_solve(gram: np.ndarray, rhs: np.ndarray, lam: float) -> np.ndarray:
    """
    Solve (gram + lam I) x = rhs with a Cholesky factorization.

    When the factorization fails, lam is multiplied by 10, at most
    `MAX_JITTER_ESCALATIONS` times.

    Raises
    ------
    ErrorFactorization
        If every escalation fails; carries the condition estimate of the
        last regularized matrix
    """
    if not np.all(np.isfinite(gram)):
        raise ex.ErrorNonFinite('gram matrix')
    eye = np.eye(gram.shape[0])
    current = lam
    for attempt in range(MAX_JITTER_ESCALATIONS + 1):
        try:
            factor = linalg.cho_factor(gram + current * eye, lower=True, check_finite=False)
        except linalg.LinAlgError:
            current *= 10.0
            continue
        if attempt:
            logger.warning('Cholesky needed jitter: lambda raised from %.3e to %.3e', lam, current)
        return linalg.cho_solve(factor, rhs, check_finite=False)

    last = current / 10.0
    raise ex.ErrorFactorization(last, float(np.linalg.cond(gram + last * eye)))


def range_basis(K: Union[BasisKernel, np.ndarray]) -> np.ndarray:
    """
    Orthonormal P x r basis of the numerical column space of K.

    Singular values at or below s_max * max(P, N) * eps count as zero, the
    `numpy.linalg.matrix_rank` convention.
    """
    K = as_matrix(K)
    if not np.all(np.isfinite(K)):
        raise ex.ErrorNonFinite('basis kernel')
    U, s, _ = linalg.svd(K, full_matrices=False, check_finite=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0]
    rank = int(np.sum(s > s[0] * max(K.shape) * np.finfo(float).eps))
    if rank < K.shape[0]:
        logger.debug('basis kernel has rank %d < P=%d; solving on its range', rank, K.shape[0])
    return U[:, :rank]


def range_solve(
        left: np.ndarray,
        K: np.ndarray,
        lam: float,
        basis: np.ndarray,
        rhs: Optional[np.ndarray] = None
    ) -> np.ndarray:
    """
    Solve (left K^T + lam I) x = left rhs for x in the span of `basis`.

    Without `rhs` the P x N operator (left K^T + lam I)^{-1} left is returned.
    With `basis` from `range_basis(K)` the result is the exact solution
    whenever the columns of `left` lie in the column space of K.
    """
    if basis.shape[1] == 0:
        shape = left.shape if rhs is None else (K.shape[0],) + np.shape(rhs)[1:]
        return np.zeros(shape)
    left_r = basis.T @ left
    K_r = basis.T @ K
    target = left_r if rhs is None else left_r @ rhs
    return basis @ spd_solve(symmetric_gram(left_r, K_r), target, lam)


def _validate_outcome(K: np.ndarray, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if Y.shape[0] != K.shape[1]:
        raise ex.ErrorDimensionMismatch('outcome', K.shape[1], Y.shape[0])
    if not np.all(np.isfinite(Y)):
        raise ex.ErrorNonFinite('Y')
    return Y


def regularization_dominates(K: Union[BasisKernel, np.ndarray], lam: float) -> bool:
    """
    True, with a warning, when lambda >= 0.1 ||K K^T||_F / sqrt(P), i.e. the
    regularizer is no longer negligible next to the Gram matrix and the
    asymptotic covariance approximation degrades.
    """
    K = as_matrix(K)
    scale = np.linalg.norm(K @ K.T, ord='fro') / np.sqrt(K.shape[0])
    if lam >= REGULARIZATION_GUARD * scale:
        logger.warning(
            'lambda=%.3e is not negligible against the Gram matrix (scale %.3e); '
            'the test loses power and calibration', lam, scale
        )
        return True
    return False


def fit_kls(
        K: Union[BasisKernel, np.ndarray],
        Y,
        lam: float,
        basis: Optional[np.ndarray] = None
    ) -> np.ndarray:
    """
    Closed-form KLS coefficients.

    Parameters
    ----------
    K : BasisKernel | np.ndarray
        The P x N basis kernel

    Y : array_like
        The outcome, length N

    lam : float
        The regularizer, strictly positive

    basis : np.ndarray, optional
        `range_basis(K)` when the caller already has it

    Returns
    -------
    np.ndarray
        The solution of (K K^T + lam I) a = K Y
    """
    lam = check_lambda(lam)
    K = as_matrix(K)
    Y = _validate_outcome(K, Y)
    basis = range_basis(K) if basis is None else basis
    return range_solve(K, K, lam, basis, rhs=Y)


def fit_hkls(
        K: Union[BasisKernel, np.ndarray],
        K_psi: Union[WeightedBasisKernel, np.ndarray],
        Y,
        lam: float,
        basis: Optional[np.ndarray] = None
    ) -> np.ndarray:
    """
    Closed-form HKLS coefficients.

    Parameters
    ----------
    K : BasisKernel | np.ndarray
        The P x N basis kernel

    K_psi : WeightedBasisKernel | np.ndarray
        The basis kernel weighted by ||Z_j||^2

    Y : array_like
        The outcome, length N

    lam : float
        The regularizer, strictly positive

    basis : np.ndarray, optional
        `range_basis(K)` when the caller already has it

    Returns
    -------
    np.ndarray
        The solution of (K_psi K^T + lam I) a = K_psi Y
    """
    lam = check_lambda(lam)
    K = as_matrix(K)
    K_psi = as_matrix(K_psi)
    if K_psi.shape != K.shape:
        raise ex.ErrorDimensionMismatch('fit_hkls', K.shape, K_psi.shape)
    Y = _validate_outcome(K, Y)
    basis = range_basis(K) if basis is None else basis
    return range_solve(K_psi, K, lam, basis, rhs=Y)


def fit_pair(K, K_psi, Y, lam: float) -> CoefficientPair:
    return CoefficientPair(alpha_kls=fit_kls(K, Y, lam), alpha_hkls=fit_hkls(K, K_psi, Y, lam))


def predict(K: Union[BasisKernel, np.ndarray], alpha) -> np.ndarray:
    """Fitted values K^T a at the N training points."""
    return as_matrix(K).T @ np.asarray(alpha, dtype=float)


def residual_variance(K: Union[BasisKernel, np.ndarray], alpha_kls, Y) -> float:
    """(1/N) ||Y - K^T a||^2 of the KLS fit, without degrees-of-freedom correction."""
    K = as_matrix(K)
    Y = _validate_outcome(K, Y)
    residuals = Y - predict(K, alpha_kls)
    return float(np.dot(residuals, residuals) / Y.shape[0])
