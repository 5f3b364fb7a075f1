"""
Kernel matrices for the kernel regression confounder test.

Classes:
- KernelSpec: kernel family plus hyperparameters.
- DesignMatrix: the stacked design Z = [T, X].
- BasisKernel: the P x N basis kernel matrix.
- WeightedBasisKernel: the basis kernel with columns weighted by ||Z_j||^2.

Functions:
- kernel_eval(...): Evaluates the kernel on a pair of vectors.
- kernel_matrix(...): Evaluates the kernel on every pair of rows.
- resolve_bandwidth(...): Median heuristic for the gaussian bandwidth.
- basis_kernel(...): Builds the P x N basis kernel matrix.
- weighted_basis(...): Weights the basis kernel columns by ||Z_j||^2.

Notes:
- Linear and polynomial kernels are evaluated with `numpy.einsum` rather than a
  BLAS product, so the matrices are bit-identical whatever the thread count.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Union
import logging

import numpy as np
from scipy.spatial import distance

from confoundverse.config import settings
from confoundverse import exceptions as ex


logger = logging.getLogger(__name__)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                          constants                         ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
LINEAR: str = 'linear'
POLYNOMIAL: str = 'polynomial'
GAUSSIAN: str = 'gaussian'
FAMILIES = (LINEAR, POLYNOMIAL, GAUSSIAN)
FAMILY_ALIASES = {'poly': POLYNOMIAL, 'rbf': GAUSSIAN}

MEDIAN_HEURISTIC: str = 'median'

FIRST_P: str = 'first_p'
SEEDED_RANDOM: str = 'seeded_random'
SELECTIONS = (FIRST_P, SEEDED_RANDOM)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                            types                           ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
@dataclass(frozen=True)
class KernelSpec:
    """
    Kernel family plus hyperparameters.

    Parameters
    ----------
    family : str, optional
        One of `linear`, `polynomial` (alias `poly`) or `gaussian` (alias `rbf`),
        by default `polynomial`

    degree : int, optional
        Degree of the polynomial kernel, by default 2

    offset : float, optional
        Offset of the polynomial kernel, by default 1.0

    bandwidth : float | str, optional
        Gaussian bandwidth, or `median` to resolve it with the median
        heuristic, by default `median`
    """
    family: str = POLYNOMIAL
    degree: int = 2
    offset: float = 1.0
    bandwidth: Union[float, str] = MEDIAN_HEURISTIC

    def __post_init__(self):
        family = FAMILY_ALIASES.get(str(self.family).lower(), str(self.family).lower())
        if family not in FAMILIES:
            raise ex.ErrorInvalidOption(self.family, 'kernel', FAMILIES)
        object.__setattr__(self, 'family', family)

        if family == POLYNOMIAL:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ex.ErrorOutOfRange('degree', self.degree, '[1, inf)')
            if not np.isfinite(self.offset) or self.offset < 0:
                raise ex.ErrorOutOfRange('offset', self.offset, '[0, inf)')
            object.__setattr__(self, 'degree', int(self.degree))

        if family == GAUSSIAN and self.bandwidth != MEDIAN_HEURISTIC:
            bandwidth = float(self.bandwidth)
            if not np.isfinite(bandwidth) or bandwidth <= 0:
                raise ex.ErrorNotPositive('bandwidth', self.bandwidth)
            object.__setattr__(self, 'bandwidth', bandwidth)

    @property
    def is_resolved(self) -> bool:
        return self.family != GAUSSIAN or self.bandwidth != MEDIAN_HEURISTIC

    def resolve(self, Z: 'DesignMatrix', seed: int = 0) -> 'KernelSpec':
        """Return a copy whose gaussian bandwidth is a number."""
        if self.is_resolved:
            return self
        bandwidth = resolve_bandwidth(Z, seed=seed)
        logger.debug('median heuristic bandwidth resolved to %.6g', bandwidth)
        return replace(self, bandwidth=bandwidth)

    def to_dict(self) -> dict:
        out = {'family': self.family}
        if self.family == POLYNOMIAL:
            out.update(degree=self.degree, offset=self.offset)
        elif self.family == GAUSSIAN:
            out.update(bandwidth=self.bandwidth)
        return out

    @property
    def label(self) -> str:
        """`to_dict` rendered as e.g. `polynomial(degree=2, offset=1.0)`."""
        params = ', '.join(f'{k}={v}' for k, v in self.to_dict().items() if k != 'family')
        return f'{self.family}({params})'


@dataclass(frozen=True)
class DesignMatrix:
    """
    The design Z = [T, X]: column 0 holds the treatment, columns 1..d the
    covariates.
    """
    Z: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim != 2:
            raise ex.ErrorDimensionMismatch('design matrix', '2-d array', f'{Z.ndim}-d array')
        if Z.shape[0] < 2:
            raise ex.ErrorRowCount({'N': Z.shape[0], 'minimum': 2})
        if not np.all(np.isfinite(Z)):
            raise ex.ErrorNonFinite('Z')
        Z.setflags(write=False)
        object.__setattr__(self, 'Z', Z)

    @classmethod
    def from_arrays(cls, T, X) -> 'DesignMatrix':
        T = np.asarray(T, dtype=float).reshape(-1)
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[0] != T.shape[0]:
            raise ex.ErrorRowCount({'T': T.shape[0], 'X': X.shape[0]})
        return cls(np.column_stack([T, X]))

    @property
    def N(self) -> int:
        return self.Z.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1] - 1

    def squared_norms(self) -> np.ndarray:
        return np.einsum('ij,ij->i', self.Z, self.Z)


@dataclass(frozen=True)
class BasisKernel:
    """P x N matrix with K[i][j] = k(Z_{b_i}, Z_j)."""
    K: np.ndarray
    row_indices: np.ndarray

    @property
    def P(self) -> int:
        return self.K.shape[0]

    @property
    def N(self) -> int:
        return self.K.shape[1]


@dataclass(frozen=True)
class WeightedBasisKernel:
    """The basis kernel right-multiplied by diag(||Z_j||^2)."""
    K_psi: np.ndarray
    squared_norms: np.ndarray = field(repr=False)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                          functions                         ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
def _require_resolved(spec: KernelSpec) -> None:
    if not spec.is_resolved:
        raise ex.ErrorInvalidOption(spec.bandwidth, 'bandwidth', ['a positive number'])


def kernel_eval(spec: KernelSpec, z1, z2) -> float:
    """
    Evaluate the kernel on a pair of vectors.

    Parameters
    ----------
    spec : KernelSpec
        A kernel whose hyperparameters are resolved

    z1, z2 : array_like
        Vectors of the same length

    Returns
    -------
    float
        linear: <z1, z2>; polynomial: (<z1, z2> + offset)^degree;
        gaussian: exp(-||z1 - z2||^2 / (2 bandwidth^2))

    Raises
    ------
    ErrorDimensionMismatch
        If the vectors differ in length

    ErrorNonFiniteKernel
        If the value overflows
    """
    _require_resolved(spec)
    z1 = np.asarray(z1, dtype=float).reshape(-1)
    z2 = np.asarray(z2, dtype=float).reshape(-1)
    if z1.shape != z2.shape:
        raise ex.ErrorDimensionMismatch('kernel_eval', z1.shape, z2.shape)

    with np.errstate(over='ignore', invalid='ignore'):
        if spec.family == LINEAR:
            value = float(np.dot(z1, z2))
        elif spec.family == POLYNOMIAL:
            value = float((np.dot(z1, z2) + spec.offset) ** spec.degree)
        else:
            diff = z1 - z2
            value = float(np.exp(-np.dot(diff, diff) / (2.0 * spec.bandwidth ** 2)))

    if not np.isfinite(value):
        raise ex.ErrorNonFiniteKernel(spec.family)
    return value


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Evaluate the kernel on every pair (A_i, B_j).

    Parameters
    ----------
    spec : KernelSpec
        A kernel whose hyperparameters are resolved

    A, B : np.ndarray
        Row-sample matrices with the same number of columns

    Returns
    -------
    np.ndarray
        The len(A) x len(B) kernel matrix
    """
    _require_resolved(spec)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ex.ErrorDimensionMismatch('kernel_matrix', A.shape[1], B.shape[1])

    with np.errstate(over='ignore', invalid='ignore'):
        if spec.family == LINEAR:
            K = np.einsum('ic,jc->ij', A, B)
        elif spec.family == POLYNOMIAL:
            K = (np.einsum('ic,jc->ij', A, B) + spec.offset) ** spec.degree
        else:
            sq = distance.cdist(A, B, metric='sqeuclidean')
            K = np.exp(-sq / (2.0 * spec.bandwidth ** 2))

    if not np.all(np.isfinite(K)):
        raise ex.ErrorNonFiniteKernel(spec.family)
    return K


def resolve_bandwidth(
        Z: DesignMatrix,
        seed: int = 0,
        max_rows: int = settings.MEDIAN_SUBSAMPLE
    ) -> float:
    """
    Median heuristic: the median pairwise Euclidean distance between rows.

    At most `max_rows` rows take part, drawn uniformly without replacement
    from a generator seeded with `seed`. A zero median falls back to 1.0.

    Parameters
    ----------
    Z : DesignMatrix
        The design matrix

    seed : int, optional
        Seed of the row subsample, by default 0

    max_rows : int, optional
        Subsample cap, by default `settings.MEDIAN_SUBSAMPLE`

    Returns
    -------
    float
        A strictly positive finite bandwidth
    """
    rows = Z.Z
    if Z.N > max_rows:
        rng = np.random.default_rng(seed)
        rows = rows[np.sort(rng.choice(Z.N, size=max_rows, replace=False))]

    median = float(np.median(distance.pdist(rows, metric='euclidean')))
    if not np.isfinite(median) or median <= 0.0:
        return 1.0
    return median


def select_rows(N: int, P: int, selection: str = FIRST_P, seed: int = 0) -> np.ndarray:
    """Indices of the P basis points."""
    if int(P) != P or not 1 <= P < N:
        raise ex.ErrorBasisSize(P, N)
    if selection == FIRST_P:
        return np.arange(P)
    if selection == SEEDED_RANDOM:
        rng = np.random.default_rng(seed)
        return np.sort(rng.choice(N, size=int(P), replace=False))
    raise ex.ErrorInvalidOption(selection, 'selection', SELECTIONS)


def basis_kernel(
        spec: KernelSpec,
        Z: DesignMatrix,
        P: int,
        selection: str = FIRST_P,
        seed: int = 0,
        full_gram: bool = False
    ) -> BasisKernel:
    """
    Build the P x N basis kernel matrix.

    Parameters
    ----------
    spec : KernelSpec
        The kernel; a `median` gaussian bandwidth is resolved on `Z`

    Z : DesignMatrix
        The design matrix

    P : int
        Basis size, 1 <= P < N

    selection : str, optional
        `first_p` takes rows 1..P, `seeded_random` draws P distinct rows
        with `seed`, by default `first_p`

    seed : int, optional
        Seed for `seeded_random` and the bandwidth subsample, by default 0

    full_gram : bool, optional
        True to evaluate the whole N x N kernel matrix and keep the basis rows,
        False to evaluate only the P x N block, by default False

    Returns
    -------
    BasisKernel
        The basis kernel and the chosen row indices

    Raises
    ------
    ErrorBasisSize
        If P >= N or P < 1
    """
    rows = select_rows(Z.N, P, selection=selection, seed=seed)
    spec = spec.resolve(Z, seed=seed)
    logger.debug('basis kernel: family=%s P=%d N=%d selection=%s full_gram=%s',
                 spec.family, P, Z.N, selection, full_gram)

    if full_gram:
        K = kernel_matrix(spec, Z.Z, Z.Z)[rows]
    else:
        K = kernel_matrix(spec, Z.Z[rows], Z.Z)
    return BasisKernel(K=K, row_indices=rows)


def weighted_basis(K: BasisKernel, Z: DesignMatrix) -> WeightedBasisKernel:
    """
    Weight the columns of the basis kernel by the squared sample norms.

    Parameters
    ----------
    K : BasisKernel
        The P x N basis kernel

    Z : DesignMatrix
        The design matrix the kernel was built on

    Returns
    -------
    WeightedBasisKernel
        K_psi[i][j] = K[i][j] * ||Z_j||^2 and the vector of ||Z_j||^2
    """
    if K.N != Z.N:
        raise ex.ErrorDimensionMismatch('weighted_basis', Z.N, K.N)
    squared_norms = Z.squared_norms()
    return WeightedBasisKernel(K_psi=K.K * squared_norms[np.newaxis, :],
                               squared_norms=squared_norms)


def as_matrix(K: Union[BasisKernel, WeightedBasisKernel, np.ndarray]) -> np.ndarray:
    if isinstance(K, BasisKernel):
        return K.K
    if isinstance(K, WeightedBasisKernel):
        return K.K_psi
    return np.asarray(K, dtype=float)


def effective_p(P: Optional[int], N: int) -> int:
    """Basis size used when none is requested: min(DEFAULT_P, N - 1)."""
    if P is None:
        return min(settings.DEFAULT_P, N - 1)
    return P
