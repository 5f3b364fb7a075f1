"""
Synthetic benchmark datasets with a controllable hidden-confounding strength.

Scenarios:
- single_env_nonlinear: one nonlinear mechanism shared by every sample.
- multi_env_nonlinear: per-environment weights on a shared nonlinear structure.
- binary_synthetic: thresholded latent treatment and outcome.

rho = 0 removes the hidden confounder U from both structural equations.

Every draw comes from its own counter-based `Philox` stream spawned from the
configured seed, so the covariates, the hidden confounders, each noise term and
the environment weights never share random state.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple
import logging

import numpy as np

from confoundverse.config import settings
from confoundverse import exceptions as ex


logger = logging.getLogger(__name__)


SINGLE_ENV: str = 'single_env_nonlinear'
MULTI_ENV: str = 'multi_env_nonlinear'
BINARY: str = 'binary_synthetic'
SCENARIOS = (SINGLE_ENV, MULTI_ENV, BINARY)
SCENARIO_ALIASES = {
    'single_env': SINGLE_ENV,
    'multi_env': MULTI_ENV,
    'binary': BINARY,
}

MULTI_ENV_HIDDEN_SCALE: float = 3.0
BINARY_HIDDEN_SCALE: float = 2.5
BINARY_THRESHOLD: float = 1.0

_STREAMS = ('covariates', 'hidden', 'noise_t', 'noise_y', 'weights')


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Parameters of one generated dataset.

    Parameters
    ----------
    scenario : str, optional
        `single_env_nonlinear`, `multi_env_nonlinear` or `binary_synthetic`
        (aliases `single_env`, `multi_env`, `binary`), by default single env

    rho : float, optional
        Confounding strength, rho >= 0, by default 0

    N : int, optional
        Sample count, by default 1000

    d_x, d_u : int, optional
        Observed and hidden covariate dimensions, by default 3 each

    n_envs : int, optional
        Environment count of the multi-environment scenario, by default 2

    seed : int, optional
        Root seed, by default 0

    noise_half_width : float, optional
        Noise is Uniform(-h, h), by default 0.1
    """
    scenario: str = SINGLE_ENV
    rho: float = 0.0
    N: int = 1000
    d_x: int = 3
    d_u: int = 3
    n_envs: int = 2
    seed: int = 0
    noise_half_width: float = settings.DEFAULT_NOISE_HALF_WIDTH

    def __post_init__(self):
        scenario = SCENARIO_ALIASES.get(self.scenario, self.scenario)
        if scenario not in SCENARIOS:
            raise ex.ErrorInvalidOption(self.scenario, 'scenario', SCENARIOS)
        object.__setattr__(self, 'scenario', scenario)

        if not np.isfinite(self.rho) or self.rho < 0:
            raise ex.ErrorOutOfRange('rho', self.rho, '[0, inf)')
        if self.N < 2:
            raise ex.ErrorOutOfRange('N', self.N, '[2, inf)')
        if self.d_x < 1 or self.d_u < 1:
            raise ex.ErrorOutOfRange('d_x/d_u', (self.d_x, self.d_u), '[1, inf)')
        if not np.isfinite(self.noise_half_width) or self.noise_half_width <= 0:
            raise ex.ErrorNotPositive('noise_half_width', self.noise_half_width)
        if self.seed < 0:
            raise ex.ErrorOutOfRange('seed', self.seed, '[0, inf)')

        if scenario == MULTI_ENV and not 2 <= self.n_envs <= self.N:
            raise ex.ErrorEnvironments(self.n_envs, self.N)
        if scenario == BINARY and (self.d_x, self.d_u) != (1, 1):
            raise ex.ErrorInvalidOption((self.d_x, self.d_u), 'd_x/d_u', [(1, 1)])

    def to_dict(self) -> dict:
        out = {
            'scenario': self.scenario,
            'rho': float(self.rho),
            'N': int(self.N),
            'd_x': int(self.d_x),
            'd_u': int(self.d_u),
            'seed': int(self.seed),
            'noise_half_width': float(self.noise_half_width),
        }
        if self.scenario == MULTI_ENV:
            out['n_envs'] = int(self.n_envs)
        return out


@dataclass(frozen=True)
class GeneratedDataset:
    """
    A generated sample. `U` is hidden: it is kept for audit and never reaches
    the detection test.
    """
    X: np.ndarray
    U: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    config: ScenarioConfig
    env_labels: Optional[np.ndarray] = None
    env_weights: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)
    T_latent: Optional[np.ndarray] = field(default=None, repr=False)
    Y_latent: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def truth(self) -> bool:
        """True when the data carry hidden confounding."""
        return self.config.rho > 0

    @property
    def N(self) -> int:
        return self.T.shape[0]

    def with_env_covariate(self) -> 'GeneratedDataset':
        """Append the environment labels to X as one more covariate column."""
        if self.env_labels is None:
            raise ex.ErrorMissingColumns(['env'])
        return replace(self, X=np.column_stack([self.X, self.env_labels.astype(float)]))


def _streams(seed: int) -> Dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {
        name: np.random.Generator(np.random.Philox(child))
        for name, child in zip(_STREAMS, children)
    }


def normalize_covariates(M) -> np.ndarray:
    """
    Min-max scale every column to [0, 1], then center it.

    Constant columns map to zeros.

    Parameters
    ----------
    M : array_like
        An N x d matrix (a vector is treated as one column)

    Returns
    -------
    np.ndarray
        Columns with range at most 1 and mean 0
    """
    M = np.asarray(M, dtype=float)
    squeeze = M.ndim == 1
    if squeeze:
        M = M.reshape(-1, 1)

    low = M.min(axis=0)
    span = M.max(axis=0) - low
    constant = span == 0
    scaled = (M - low) / np.where(constant, 1.0, span)
    scaled[:, constant] = 0.0
    out = scaled - scaled.mean(axis=0)
    return out.reshape(-1) if squeeze else out


def _noise(rng: np.random.Generator, config: ScenarioConfig) -> np.ndarray:
    h = config.noise_half_width
    return rng.uniform(-h, h, size=config.N)


def _squared_sum(M: np.ndarray) -> np.ndarray:
    return np.einsum('ij,ij->i', M, M)


def gen_single_env(config: ScenarioConfig) -> GeneratedDataset:
    """
    Single-environment nonlinear scenario.

    T = ||X||^2 + rho ||U||^2 + e1 and Y = ||Z||^2 + rho ||U||^2 + e2 with
    Z = (T, X), X and U uniform on [0, 1] then min-max scaled and centered,
    and e1, e2 ~ Uniform(-h, h).
    """
    if config.scenario != SINGLE_ENV:
        raise ex.ErrorInvalidOption(config.scenario, 'scenario', [SINGLE_ENV])
    rngs = _streams(config.seed)
    X = normalize_covariates(rngs['covariates'].uniform(0.0, 1.0, size=(config.N, config.d_x)))
    U = normalize_covariates(rngs['hidden'].uniform(0.0, 1.0, size=(config.N, config.d_u)))

    hidden = config.rho * _squared_sum(U)
    T = _squared_sum(X) + hidden + _noise(rngs['noise_t'], config)
    Y = T ** 2 + _squared_sum(X) + hidden + _noise(rngs['noise_y'], config)
    return GeneratedDataset(X=X, U=U, T=T, Y=Y, config=config)


def _environment_weights(rng: np.random.Generator, config: ScenarioConfig) -> Dict[str, np.ndarray]:
    e, dx, du = config.n_envs, config.d_x, config.d_u
    return {
        'w_T_x': rng.uniform(1.0, 5.0, size=(e, dx)),
        'w_T_u': rng.uniform(1.0, 5.0, size=(e, du)),
        'w_Y_x': rng.uniform(1.0, 5.0, size=(e, dx)),
        'w_Y_u': rng.uniform(1.0, 5.0, size=(e, du)),
        'w_Y_T': rng.uniform(1.0, 2.0, size=e),
    }


def gen_multi_env(config: ScenarioConfig) -> GeneratedDataset:
    """
    Multi-environment nonlinear scenario.

    Samples are assigned to environments round-robin. Environment e draws
    w_{T,x}, w_{T,u}, w_{Y,x}, w_{Y,u} ~ Uniform(1, 5) and w_{Y,T} ~ Uniform(1, 2);
    then

        T = sum_x w_{T,x} x^2 + sum_u w_{T,u} (3 rho u)^2 + e1
        Y = w_{Y,T} T^2 + sum_x w_{Y,x} x^2 + sum_u w_{Y,u} (3 rho u)^2 + e2
    """
    if config.scenario != MULTI_ENV:
        raise ex.ErrorInvalidOption(config.scenario, 'scenario', [MULTI_ENV])
    if config.n_envs > config.N:
        raise ex.ErrorEnvironments(config.n_envs, config.N)

    rngs = _streams(config.seed)
    X = normalize_covariates(rngs['covariates'].uniform(0.0, 1.0, size=(config.N, config.d_x)))
    U = normalize_covariates(rngs['hidden'].uniform(0.0, 1.0, size=(config.N, config.d_u)))
    envs = np.arange(config.N) % config.n_envs
    weights = _environment_weights(rngs['weights'], config)

    hidden_sq = (MULTI_ENV_HIDDEN_SCALE * config.rho * U) ** 2
    x_sq = X ** 2
    T = (np.einsum('ij,ij->i', weights['w_T_x'][envs], x_sq)
         + np.einsum('ij,ij->i', weights['w_T_u'][envs], hidden_sq)
         + _noise(rngs['noise_t'], config))
    Y = (weights['w_Y_T'][envs] * T ** 2
         + np.einsum('ij,ij->i', weights['w_Y_x'][envs], x_sq)
         + np.einsum('ij,ij->i', weights['w_Y_u'][envs], hidden_sq)
         + _noise(rngs['noise_y'], config))
    return GeneratedDataset(X=X, U=U, T=T, Y=Y, config=config,
                            env_labels=envs, env_weights=weights)


def gen_binary_synthetic(config: ScenarioConfig) -> GeneratedDataset:
    """
    Binary synthetic scenario.

    X, U ~ Uniform(0, 1); T0 = X^2 + 2.5 rho U^2 + e1, T = 1[T0 > 1];
    Y0 = ||(T, X)||^2 + 2.5 rho U^2 + e2, Y = 1[Y0 > 1]. The outcome uses the
    binarized treatment.
    """
    if config.scenario != BINARY:
        raise ex.ErrorInvalidOption(config.scenario, 'scenario', [BINARY])
    rngs = _streams(config.seed)
    X = rngs['covariates'].uniform(0.0, 1.0, size=(config.N, 1))
    U = rngs['hidden'].uniform(0.0, 1.0, size=(config.N, 1))

    x, u = X[:, 0], U[:, 0]
    hidden = BINARY_HIDDEN_SCALE * config.rho * u ** 2
    T_latent = x ** 2 + hidden + _noise(rngs['noise_t'], config)
    T = (T_latent > BINARY_THRESHOLD).astype(float)
    Y_latent = T ** 2 + x ** 2 + hidden + _noise(rngs['noise_y'], config)
    Y = (Y_latent > BINARY_THRESHOLD).astype(float)
    return GeneratedDataset(X=X, U=U, T=T, Y=Y, config=config,
                            T_latent=T_latent, Y_latent=Y_latent)


_GENERATORS = {
    SINGLE_ENV: gen_single_env,
    MULTI_ENV: gen_multi_env,
    BINARY: gen_binary_synthetic,
}


def generate(config: ScenarioConfig) -> GeneratedDataset:
    """Generate the dataset of any scenario."""
    logger.debug('generating %s rho=%g N=%d seed=%d',
                 config.scenario, config.rho, config.N, config.seed)
    return _GENERATORS[config.scenario](config)


def structural_residuals(dataset: GeneratedDataset) -> Tuple[np.ndarray, np.ndarray]:
    """
    Treatment and outcome minus their deterministic structural parts.

    For the binary scenario the latent T0 and Y0 are used. Both residuals
    recover the noise draws, so they lie in [-h, h].
    """
    config = dataset.config
    X, U = dataset.X, dataset.U

    if config.scenario == SINGLE_ENV:
        hidden = config.rho * _squared_sum(U)
        t_part = _squared_sum(X) + hidden
        y_part = dataset.T ** 2 + _squared_sum(X) + hidden
        return dataset.T - t_part, dataset.Y - y_part

    if config.scenario == MULTI_ENV:
        w, envs = dataset.env_weights, dataset.env_labels
        hidden_sq = (MULTI_ENV_HIDDEN_SCALE * config.rho * U) ** 2
        t_part = (np.einsum('ij,ij->i', w['w_T_x'][envs], X ** 2)
                  + np.einsum('ij,ij->i', w['w_T_u'][envs], hidden_sq))
        y_part = (w['w_Y_T'][envs] * dataset.T ** 2
                  + np.einsum('ij,ij->i', w['w_Y_x'][envs], X ** 2)
                  + np.einsum('ij,ij->i', w['w_Y_u'][envs], hidden_sq))
        return dataset.T - t_part, dataset.Y - y_part

    x, u = X[:, 0], U[:, 0]
    hidden = BINARY_HIDDEN_SCALE * config.rho * u ** 2
    t_part = x ** 2 + hidden
    y_part = dataset.T ** 2 + x ** 2 + hidden
    return dataset.T_latent - t_part, dataset.Y_latent - y_part
