"""
Command line entry point: `confoundverse simulate | detect | benchmark | validate`.

Exit status:
- 0: success (`detect`: no evidence of hidden confounding)
- 3: `detect` rejected the null of no hidden confounding
- 1: bad input data, numerical failure or failed validation
- 2: usage or configuration error
"""

from dataclasses import replace
from typing import List, Optional
import functools
import logging
import sys

import click

from confoundverse import __version__
from confoundverse import console
from confoundverse import datagen
from confoundverse import evalharness
from confoundverse import exceptions as ex
from confoundverse import io
from confoundverse import oracle
from confoundverse.config import settings
from confoundverse.confounder_testing import detect as run_detect
from confoundverse.estimator import RidgeConfig
from confoundverse.kernel_core import (
    FAMILIES,
    FAMILY_ALIASES,
    FIRST_P,
    MEDIAN_HEURISTIC,
    SELECTIONS,
    KernelSpec,
    effective_p,
)


logger = logging.getLogger(__name__)

EXIT_SUPPORT = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_REJECT = 3

SWEEPS = ('detection', 'auc', 'lambda-table', 'runtime', 'sample-size', 'kernels')
KERNEL_CHOICES = list(FAMILIES) + list(FAMILY_ALIASES)
SCENARIO_CHOICES = list(datagen.SCENARIOS) + list(datagen.SCENARIO_ALIASES)

VALIDATION_MAX_ERROR = 1e-6
VALIDATION_MAX_GAP = 1e-10
VALIDATION_MAX_REJECTION = 0.08

# wall-clock fields; every other output byte is reproducible from the manifest
DETECT_TIMINGS = ('wall_time_ms',)
BENCHMARK_TIMINGS = (
    'wall_ms', 'runtimes_ms', 'total_runtime_ms', 'median_ms', 'n_slope', 'p_slope',
)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                          helpers                           ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
def _exit_codes(func):
    """Map package errors to the exit-status contract."""
    @functools.wraps(func)
    def wrapped(*args, **kwargs):
        try:
            with settings.thread_limit():
                return func(*args, **kwargs)
        except (ex.ConfigurationErrorKRCD, ex.ArgumentErrorKRCD, ex.SettingsError) as error:
            console.error(error)
            sys.exit(EXIT_USAGE)
        except (ex.InputErrorKRCD, ex.NumericErrorKRCD) as error:
            console.error(error)
            sys.exit(EXIT_FAILURE)
    return wrapped


def _split(value: Optional[str], cast, name: str) -> Optional[List]:
    if value is None:
        return None
    try:
        return [cast(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f'expected a comma separated list, got {value!r}', param_hint=name)


def _bandwidth(value: str):
    if value == MEDIAN_HEURISTIC:
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter(f'expected a number or "median", got {value!r}',
                                 param_hint='--bandwidth')


def _kernel_spec(kernel: str, degree: int, offset: float, bandwidth: str) -> KernelSpec:
    return KernelSpec(family=kernel, degree=degree, offset=offset, bandwidth=_bandwidth(bandwidth))


def _write_manifest(command: str, config: dict, seed, inputs, outputs, started: io.RunManifest,
                    volatile=()):
    manifest = replace(started, config=config, seed=seed, inputs=list(inputs),
                       outputs=list(outputs), volatile_fields=list(volatile))
    manifest.finish()
    for path in outputs:
        io.write_manifest(manifest, path)


def kernel_options(func):
    options = [
        click.option('--kernel', type=click.Choice(KERNEL_CHOICES), default='polynomial',
                     show_default=True, help='Kernel family.'),
        click.option('--degree', type=int, default=2, show_default=True,
                     help='Polynomial kernel degree.'),
        click.option('--offset', type=float, default=1.0, show_default=True,
                     help='Polynomial kernel offset.'),
        click.option('--bandwidth', type=str, default=MEDIAN_HEURISTIC, show_default=True,
                     help='Gaussian bandwidth, or "median" for the median heuristic.'),
        click.option('--lambda', 'lam', type=float, default=settings.DEFAULT_LAMBDA,
                     show_default=True, help='Regularization parameter.'),
        click.option('--alpha', type=float, default=settings.DEFAULT_ALPHA, show_default=True,
                     help='Family-wise significance level.'),
        click.option('--selection', type=click.Choice(SELECTIONS), default=FIRST_P,
                     show_default=True, help='Basis row selection.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                          commands                          ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
@click.group()
@click.version_option(
    version=__version__,
    prog_name=console.NAME,
    message=f'%(prog)s %(version)s (format {settings.FORMAT_VERSION})',
)
@click.option('-v', '--verbose', count=True, help='Repeat for more logging on stderr.')
@click.option('--lang', type=click.Choice([settings.ENG, settings.ESP]), default=settings.ENG,
              help='Language of the messages.')
@click.option('--no-color', is_flag=True, help='Plain text on stderr.')
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Cap on the BLAS threads [default: KRCD_THREADS or no cap].')
def main(verbose, lang, no_color, threads):
    """Detect hidden confounding with kernel ridge coefficient comparisons."""
    level = max(logging.DEBUG, logging.WARNING - 10 * verbose)
    stream = logging.StreamHandler(sys.stderr)
    stream.addFilter(lambda record: record.levelno < logging.WARNING)
    logging.basicConfig(
        level=level,
        handlers=[stream, console.WarningHandler()],
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        force=True,
    )
    settings.define_lang(lang)
    if threads is not None:
        settings.define_threads(threads)
    console.init(colors=not no_color)


@main.command()
@click.option('--scenario', type=click.Choice(SCENARIO_CHOICES), default='single_env',
              show_default=True, help='Data generating process.')
@click.option('--rho', type=float, default=0.0, show_default=True, help='Confounding strength.')
@click.option('--n', 'n', type=int, default=1000, show_default=True, help='Sample count.')
@click.option('--dx', type=int, default=None, help='Observed covariates [default: 3, binary: 1].')
@click.option('--du', type=int, default=None, help='Hidden confounders [default: 3, binary: 1].')
@click.option('--envs', type=int, default=2, show_default=True,
              help='Environment count (multi_env only).')
@click.option('--seed', type=int, default=0, show_default=True, help='Root seed.')
@click.option('--noise', type=float, default=settings.DEFAULT_NOISE_HALF_WIDTH,
              show_default=True, help='Half width of the uniform noise.')
@click.option('--out', type=click.Path(dir_okay=False), required=True, help='Output CSV.')
@click.option('--include-hidden', is_flag=True, help='Also write the hidden u* columns (audit).')
@_exit_codes
def simulate(scenario, rho, n, dx, du, envs, seed, noise, out, include_hidden):
    """Generate a synthetic dataset as CSV."""
    started = io.RunManifest(command='simulate', config={})
    scenario = datagen.SCENARIO_ALIASES.get(scenario, scenario)
    default_dim = 1 if scenario == datagen.BINARY else 3
    config = datagen.ScenarioConfig(
        scenario=scenario,
        rho=rho,
        N=n,
        d_x=default_dim if dx is None else dx,
        d_u=default_dim if du is None else du,
        n_envs=envs,
        seed=seed,
        noise_half_width=noise,
    )
    dataset = datagen.generate(config)
    io.write_dataset_csv(dataset, out, include_hidden=include_hidden)

    manifest_config = dict(config.to_dict(), include_hidden=include_hidden)
    _write_manifest('simulate', manifest_config, seed, [], [out], started)
    console.println(f'wrote {config.N} rows of {config.scenario} (rho={config.rho:g}) to {out}')


@main.command()
@click.option('--input', 'input_path', type=click.Path(dir_okay=False), required=True,
              help='CSV with y, t and x* columns.')
@kernel_options
@click.option('--p-dim', type=int, default=None, help='Basis size [default: min(40, N-1)].')
@click.option('--seed', type=int, default=0, show_default=True,
              help='Seed of the basis selection and bandwidth subsample.')
@click.option('--env-as-covariate', is_flag=True, help='Append the env column to X.')
@click.option('--out', type=click.Path(dir_okay=False), default=None,
              help='Also write the result JSON (with a manifest) to this file.')
@_exit_codes
def detect(input_path, kernel, degree, offset, bandwidth, lam, alpha, selection,
           p_dim, seed, env_as_covariate, out):
    """Test a dataset for hidden confounding; prints the result JSON."""
    started = io.RunManifest(command='detect', config={})
    dataset = io.read_dataset_csv(input_path)
    if env_as_covariate:
        dataset = dataset.with_env_covariate()

    N = len(dataset.Y)
    config = RidgeConfig(
        P=effective_p(p_dim, N),
        lam=lam,
        kernel=_kernel_spec(kernel, degree, offset, bandwidth),
        selection=selection,
        seed=seed,
    )
    result = run_detect(dataset, config, alpha)
    document = result.to_dict()
    click.echo(io.dumps_json(document), nl=False)
    console.print_verdict(document)

    if out:
        io.write_json(document, out)
        manifest_config = dict(config.to_dict(), alpha_level=alpha,
                               env_as_covariate=env_as_covariate)
        _write_manifest('detect', manifest_config, seed, [input_path], [out], started,
                        volatile=DETECT_TIMINGS)

    sys.exit(EXIT_REJECT if result.rejected else EXIT_SUPPORT)


@main.command()
@click.option('--sweep', type=click.Choice(SWEEPS), required=True, help='Evaluation protocol.')
@click.option('--rho', 'rho_list', type=str, default=None,
              help='Comma separated confounding strengths.')
@click.option('--lambda', 'lambda_list', type=str, default=None,
              help='Comma separated regularization values.')
@click.option('--n', 'n_list', type=str, default=None,
              help='Comma separated sample sizes (grid for runtime and sample-size).')
@click.option('--p', 'p_list', type=str, default=None, help='Comma separated basis sizes.')
@click.option('--kernels', 'kernel_list', type=str, default='polynomial,gaussian',
              show_default=True, help='Kernel families of the kernels sweep.')
@click.option('--scenario', type=click.Choice(SCENARIO_CHOICES), default='single_env',
              show_default=True, help='Data generating process.')
@click.option('--envs', type=int, default=2, show_default=True,
              help='Environment count (multi_env only).')
@click.option('--env-as-covariate', is_flag=True, help='Append the env labels to X.')
@kernel_options
@click.option('--repeats', type=int, default=30, show_default=True, help='Runs per cell.')
@click.option('--seed', type=int, default=0, show_default=True, help='Base seed.')
@click.option('--jobs', type=int, default=1, show_default=True, help='Parallel workers.')
@click.option('--out', type=str, default='benchmark', show_default=True,
              help='Output prefix: <out>.json and <out>.csv.')
@_exit_codes
def benchmark(sweep, rho_list, lambda_list, n_list, p_list, kernel_list, scenario, envs,
              env_as_covariate, kernel, degree, offset, bandwidth, lam, alpha, selection,
              repeats, seed, jobs, out):
    """Run an evaluation sweep and write JSON and CSV results."""
    started = io.RunManifest(command='benchmark', config={})
    rhos = _split(rho_list, float, '--rho')
    lambdas = _split(lambda_list, float, '--lambda')
    sizes = _split(n_list, int, '--n')
    p_values = _split(p_list, int, '--p') or [settings.DEFAULT_P]

    scenario = datagen.SCENARIO_ALIASES.get(scenario, scenario)
    dim = 1 if scenario == datagen.BINARY else 3
    template = datagen.ScenarioConfig(scenario=scenario, d_x=dim, d_u=dim, n_envs=envs)
    sample_size = (sizes or [1000])[0]
    ridge = RidgeConfig(
        P=min(p_values[0], effective_p(None, sample_size)) if p_list is None else p_values[0],
        lam=(lambdas or [lam])[0],
        kernel=_kernel_spec(kernel, degree, offset, bandwidth),
        selection=selection,
    )
    cfg = evalharness.SweepConfig(
        rho_values=rhos if rhos is not None else (0.0,) + evalharness.DEFAULT_RHO_GRID,
        repeats=repeats,
        sample_size=sample_size,
        ridge=ridge,
        scenario=template,
        base_seed=seed,
        alpha_level=alpha,
        env_as_covariate=env_as_covariate,
        jobs=jobs,
    )

    console.start_block(f'{sweep} sweep')
    if sweep in ('detection', 'auc'):
        if sweep == 'auc' and not (0.0 in cfg.rho_values and max(cfg.rho_values) > 0):
            raise ex.ErrorOutOfRange('rho', list(cfg.rho_values), 'a list with 0 and a positive value')
        report = evalharness.detection_rate_sweep(cfg)
        document = report.to_dict()
        console.print_metrics(document)
    elif sweep == 'lambda-table':
        report = evalharness.lambda_sensitivity(
            grid=lambdas or evalharness.DEFAULT_LAMBDA_GRID,
            rho_values=rhos or evalharness.DEFAULT_RHO_GRID,
            cfg=cfg,
        )
        document = report.to_dict()
        console.print_lambda_table(document)
    elif sweep == 'runtime':
        report = evalharness.runtime_scaling(
            N_grid=sizes or [500, 1000, 2000],
            P_grid=p_values,
            d=template.d_x,
            cfg=cfg,
        )
        document = report.to_dict()
        console.print_runtime_table(document)
    elif sweep == 'sample-size':
        report = evalharness.sample_size_sweep(cfg, sizes or evalharness.DEFAULT_SAMPLE_SIZES)
        document = report.to_dict()
        for key, cell in document['reports'].items():
            console.print_title(key, align='left')
            console.print_metrics(cell)
            console.new_line()
    else:
        families = _split(kernel_list, str, '--kernels')
        specs = [_kernel_spec(f, degree, offset, bandwidth) for f in families]
        report = evalharness.kernel_comparison(cfg, specs)
        document = report.to_dict()
        for key, cell in document['reports'].items():
            console.print_title(key, align='left')
            console.print_metrics(cell)
            console.new_line()
    console.end_block(f'{sweep} sweep')

    json_path, csv_path = f'{out}.json', f'{out}.csv'
    io.write_json(document, json_path)
    io.write_frame_csv(report.to_frame(), csv_path)
    _write_manifest('benchmark', dict(document.get('config', {}), sweep=sweep), seed,
                    [], [json_path, csv_path], started, volatile=BENCHMARK_TIMINGS)


@console.block({settings.ENG: 'validation', settings.ESP: 'validacion'})
def _validation_checks(repeats, seed, n, instances, jobs, inject_lambda):
    """Oracle agreement then null calibration; a package error fails the run."""
    document, checks = {}, {}
    try:
        lam = 1.0 if inject_lambda is None else inject_lambda
        agreement = oracle.oracle_agreement(instances=instances, lam=lam, seed=seed)
        document['agreement'] = agreement.to_dict()
        checks['converged'] = agreement.converged
        checks['max_coord_error'] = agreement.max_coord_error < VALIDATION_MAX_ERROR
        checks['objective_gap'] = abs(agreement.objective_gap) < VALIDATION_MAX_GAP

        scenario = datagen.ScenarioConfig(rho=0.0, N=n, seed=seed)
        calibration = oracle.monte_carlo_null_calibration(
            RidgeConfig(P=effective_p(None, n)), scenario, repeats=repeats, jobs=jobs,
        )
        document['calibration'] = calibration.to_dict()
        checks['rejection_rate'] = calibration.rejection_rate <= VALIDATION_MAX_REJECTION
    except ex.KRCDError as error:
        document['error'] = str(error)
        checks['error'] = False

    document['checks'] = checks
    document['passed'] = all(checks.values())
    return document, checks


@main.command()
@click.option('--repeats', type=int, default=100, show_default=True,
              help='Datasets of the null calibration (at least 100).')
@click.option('--seed', type=int, default=0, show_default=True, help='Base seed.')
@click.option('--n', 'n', type=int, default=1000, show_default=True,
              help='Sample count of the null datasets.')
@click.option('--instances', type=int, default=20, show_default=True,
              help='Random instances per kernel family and per small lambda '
                   'for the oracle agreement.')
@click.option('--jobs', type=int, default=1, show_default=True, help='Parallel workers.')
@click.option('--out', type=click.Path(dir_okay=False), default=None,
              help='Also write the report JSON (with a manifest) to this file.')
@click.option('--inject-lambda', type=float, default=None, hidden=True)
@_exit_codes
def validate(repeats, seed, n, instances, jobs, out, inject_lambda):
    """Check the closed forms against the oracles and the null calibration."""
    started = io.RunManifest(command='validate', config={})
    document, checks = _validation_checks(repeats, seed, n, instances, jobs, inject_lambda)
    click.echo(io.dumps_json(document), nl=False)
    if 'agreement' in document:
        console.print_oracle_report(document, checks)
    else:
        console.error(document['error'])

    if out:
        io.write_json(document, out)
        config = {'repeats': repeats, 'N': n, 'instances': instances, 'seed': seed}
        _write_manifest('validate', config, seed, [], [out], started)

    sys.exit(EXIT_SUPPORT if document['passed'] else EXIT_FAILURE)


if __name__ == '__main__':
    main()
