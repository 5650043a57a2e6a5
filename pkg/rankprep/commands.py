import os
import sys
import math
import functools

import click
import numpy as np

from rankprep import adiabatic, bounds, variants
from rankprep.config import RunConfig, load_config, resolve_config
from rankprep.functions import load_corpus, parse_function, table_one_functions
from rankprep.gridfn import (
    GridSpec, encode_function, fidelity, filling_ratio, integral_encode, make_grid_function,
    plus_state, target_state,
)
from rankprep.helper import (
    BackendSpec, Backend, Encoding, Mode, ConfigError, PostselectionError, RankPrepError, ResourceError,
    BOUNDS_REPORT_SCHEMA_VERSION, FIG2_TOTAL_TIME, RUN_REPORT_SCHEMA_VERSION, TABLE_CSV_SCHEMA_VERSION,
    TRACE_CSV_SCHEMA_VERSION, parse_backend, round_significant, substream,
)
from rankprep.model import ReportDocument, report_rows
from rankprep.rank1 import Rank1Hamiltonian
from rankprep.serialization import UnsupportedFormatErr, csv_dumps, save_content_to_path
from rankprep.sweep import run_sweep

import logging
logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_POSTSELECTION = 4
EXIT_NUMERIC = 5

DEFAULT_QPE_BITS = 12
DEFAULT_INTEGRATION_BITS = 22
DEFAULT_INTEGRATION_QUBITS = 10
DEFAULT_TABLE_QUBITS = 16
SWEEP_POINTS = 32


@click.group()
def cli():
    """Continuous quantum state preparation by rank-1 adiabatic evolution."""
    pass  # pragma: no cover.


def common_options(func):
    options = [
        click.option('--config', 'config_path', required=False, type=click.Path(exists=True, resolve_path=True),
                     help='A json, yaml or toml file of run parameters. Flags override it.'),
        click.option('--seed', required=False, default=None, type=int),
        click.option('--workers', required=False, default=None, type=click.IntRange(1)),
        click.option('--output-dir', required=False, default=None, type=click.Path(file_okay=False)),
        click.option('--format', required=False, default=None, type=click.Choice(['json', 'csv'], case_sensitive=True)),
        click.option('--log-frequency-in-sec', required=False, default=None, type=int),
        click.option('--progress-logger', required=False, type=click.Choice(['info', 'error'], case_sensitive=True),
                     show_default=True, default='info'),
        click.option('--debug', is_flag=True, show_default=False),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def function_options(func):
    options = [
        click.option('--fn', 'function', required=False, default=None, type=str,
                     help='Function spec such as lognormal:0,0.5 or tabulated:path.csv'),
        click.option('--interval', required=False, default=None, type=str, help='a,b'),
        click.option('--encoding', required=False, default=None,
                     type=click.Choice([e.value for e in Encoding], case_sensitive=True)),
        click.option('--n', required=False, default=None, type=int),
        click.option('--quad-points', required=False, default=None, type=int),
        click.option('--rescale/--no-rescale', required=False, default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def evolution_options(func):
    options = [
        click.option('--r', required=False, default=None, type=int),
        click.option('--k-margin', required=False, default=None, type=float),
        click.option('--t-override', required=False, default=None, type=float,
                     help='Total time T; fig2 defaults to 25.5, others to k_margin times the delay bound.'),
        click.option('--backend', required=False, default=None, type=str, help='exact, ideal, taylor or taylor:m'),
        click.option('--mode', required=False, default=None,
                     type=click.Choice([m.value for m in Mode], case_sensitive=True)),
        click.option('--d', required=False, default=None, type=int, help='Digitization bits.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _exit_code(error):
    if isinstance(error, (ConfigError, UnsupportedFormatErr)):
        return EXIT_CONFIG
    if isinstance(error, ResourceError):
        return EXIT_RESOURCE
    if isinstance(error, PostselectionError):
        return EXIT_POSTSELECTION
    return EXIT_NUMERIC


def command_body(**defaults):
    """
    Resolves the config of a subcommand and maps rankprep errors to exit codes.

    `defaults` are the subcommand's own defaults; the config file and the flags
    override them. With --debug the errors are re-raised instead.
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(**kwargs):
            debug = kwargs.pop('debug')
            progress_logger = logger.info if kwargs.pop('progress_logger') == 'info' else logger.error
            config_path = kwargs.pop('config_path')
            # Flags such as --corpus steer a single subcommand and are not part of the run config.
            extras = {key: kwargs.pop(key) for key in list(kwargs) if key not in RunConfig._fields}
            try:
                file_values = load_config(config_path) if config_path else {}
                config = resolve_config({**defaults, **file_values}, kwargs)
                func(config, progress_logger=progress_logger, flags=extras)
            except (RankPrepError, UnsupportedFormatErr) as e:
                if debug:  # pragma: no cover.
                    raise  # pragma: no cover.
                click.echo(f"{type(e).__name__}: {e}", err=True)
                sys.exit(_exit_code(e))
        return wrapper
    return decorator


def _emit(config, kind, result, rows=None, schema_version=RUN_REPORT_SCHEMA_VERSION,
          csv_schema_version=TRACE_CSV_SCHEMA_VERSION):
    """Prints or writes the report of a subcommand. csv output falls back to json when there are no rows."""
    if config.format == 'csv' and rows is not None:
        rows = [{'schema_version': csv_schema_version, **row} for row in rows]
        if config.output_dir:
            save_content_to_path(rows, os.path.join(config.output_dir, f'{kind}.csv'))
        else:
            click.echo(csv_dumps(rows), nl=False)
        return
    document = ReportDocument(kind, result, config=config.to_document(), schema_version=schema_version)
    if config.output_dir:
        save_content_to_path(document.to_dict(), os.path.join(config.output_dir, f'{kind}.json'))
    else:
        click.echo(document.to_json(indent=2))


def _grid(config, n=None):
    a, b = config.interval
    return GridSpec(a, b, config.n if n is None else n)


def _target(config, n=None, rescale=None):
    func = parse_function(config.function, interval=config.interval)
    rescale = config.rescale if rescale is None else rescale
    return encode_function(func, _grid(config, n), encoding=config.encoding,
                           quad_points=config.quad_points, rescale=rescale)


def _drop_state(result, field):
    item = result._asdict()
    item.pop(field)
    return item


@cli.command()
@click.option('--corpus', required=False, default=None, type=click.Path(exists=True, resolve_path=True),
              help='Extra functions to tabulate next to the built-in table.')
@function_options
@common_options
@command_body(n=DEFAULT_TABLE_QUBITS)
def table1(config, flags, **kwargs):
    """
    Filling ratios of the normal, lognormal, Slater and zeta families on [0, 1].
    """
    n = config.n
    entries = table_one_functions()
    if flags.get('corpus'):
        entries += [(func, None) for func in load_corpus(flags['corpus'])]
    rows = []
    for func, tabulated in entries:
        a, b = func.interval
        ratio = filling_ratio(func, GridSpec(a, b, n)) / (b - a)
        rows.append({
            'family': func.name,
            'params': ','.join(repr(float(p)) for p in func.params),
            'n': n,
            'filling_ratio': round_significant(ratio, 2),
            'filling_ratio_exact': ratio,
            'tabulated': tabulated,
        })
    _emit(config, 'table1', rows, rows=rows, csv_schema_version=TABLE_CSV_SCHEMA_VERSION)


def _fig2_point(config, n, r):
    row = {'n': n, 'r': r, 'final_infidelity': None, 'cumulative_success_prob': None, 'error': ''}
    try:
        f1 = _target(config, n=n)
        t_override = FIG2_TOTAL_TIME if config.t_override is None else config.t_override
        schedule = adiabatic.plan(f1, r, t_override=t_override)
        report = adiabatic.run(f1, schedule, backend=config.backend, mode=config.mode, seed=config.seed,
                               track_fidelity=False, digit_bits=config.d)
    except (ResourceError, PostselectionError) as e:
        logger.warning("Point n=%s r=%s skipped: %s", n, r, e)
        row['error'] = f"{type(e).__name__}: {e}"
        return row
    row['final_infidelity'] = report.final_infidelity
    row['cumulative_success_prob'] = report.cumulative_success_prob
    return row


@cli.command()
@function_options
@evolution_options
@click.option('--n-range', required=False, default=None, type=str, help='low,high (inclusive) at fixed r')
@click.option('--r-range', required=False, default=None, type=str, help='r values at fixed n, e.g. 64,128,256')
@common_options
@command_body()
def fig2(config, **kwargs):
    """
    Final infidelity against n at fixed r and against r at fixed n, with the log-log slope of the r sweep.

    Every point runs for the same total time T = 25.5 unless --t-override is given; --k-margin is ignored.
    """
    jobs = []
    if config.n_range is not None:
        jobs += [(('n', n), (config, n, config.r)) for n in config.n_values()]
    if config.r_range is not None:
        jobs += [(('r', r), (config, config.n, r)) for r in config.r_values()]
    if not jobs:
        jobs = [(('n', config.n), (config, config.n, config.r))]
    results = run_sweep(jobs, _fig2_point, workers=config.workers or os.cpu_count() or 1)
    rows = [{'sweep': key[0], **value} for key, value in results]
    r_rows = [row for row in rows if row['sweep'] == 'r' and row['final_infidelity']]
    slope = None
    if len(r_rows) >= 2:
        slope = adiabatic.scaling_exponent([row['r'] for row in r_rows], [row['final_infidelity'] for row in r_rows])
    _emit(config, 'fig2', {'rows': rows, 'r_slope': slope}, rows=rows)


@cli.command('prep-adiabatic')
@function_options
@evolution_options
@common_options
@command_body()
def prep_adiabatic(config, progress_logger, **kwargs):
    """
    One adiabatic preparation run. csv output is the per step trace.
    """
    f1 = _target(config)
    schedule = adiabatic.plan(f1, config.r, k_margin=config.k_margin, t_override=config.t_override)
    report = adiabatic.run(
        f1, schedule, backend=config.backend, mode=config.mode, seed=config.seed, digit_bits=config.d,
        log_frequency_in_sec=config.log_frequency_in_sec, progress_logger=progress_logger,
    )
    _emit(config, 'prep-adiabatic', report.without_state(), rows=adiabatic.trace_rows(report))


@cli.command('bounds')
@function_options
@evolution_options
@common_options
@command_body()
def bounds_command(config, **kwargs):
    """
    Closed form bounds and, up to n=8, their empirical counterparts.
    """
    f1 = _target(config)
    report = bounds.eval_bounds(f1, config.r, k_margin=config.k_margin, T=config.t_override, digit_bits=config.d)
    rows = [
        {'quantity': 'gap', 'empirical': report.gap_min_empirical, 'bound': report.gap_bound},
        {'quantity': 'delay_factor', 'empirical': report.delay_max_empirical, 'bound': report.delay_bound},
        {'quantity': 'delta0', 'empirical': report.delta0_empirical, 'bound': report.delta0},
    ]
    _emit(config, 'bounds', report, rows=rows, schema_version=BOUNDS_REPORT_SCHEMA_VERSION)


def _qpe_backend(config, lowrank):
    return parse_backend(config.backend) if lowrank else BackendSpec(kind=Backend.ideal)


@cli.command()
@function_options
@click.option('--m', required=False, default=None, type=int, help='Phase register qubits.')
@click.option('--t', required=False, default=None, type=float,
              help="Base time t. Defaults to half the window's upper end, 1 / (2 c): a target phase of half a turn.")
@click.option('--backend', required=False, default=None, type=str)
@click.option('--lowrank', is_flag=True, help='Build the controlled powers from low-rank steps (n <= 8).')
@common_options
@command_body(m=DEFAULT_QPE_BITS)
def qpe(config, flags, **kwargs):
    """
    One phase estimation preparation from the overlap state of the target.
    """
    f1 = _target(config)
    m = config.m
    h = variants.target_hamiltonian(f1)
    t = config.t if config.t is not None else variants.t_window(h, m)[1] / 2
    initial, _ = variants.overlap_initial(f1)
    result = variants.qpe_prepare(initial, f1, m, t, rng=substream(config.seed, 'qpe'),
                                  backend=_qpe_backend(config, flags.get('lowrank')))
    item = _drop_state(result, 'collapsed_state')
    item['target_gamma'] = t * h.norm_sq
    item['collapsed_fidelity'] = fidelity(result.collapsed_state, target_state(f1))
    _emit(config, 'qpe', item)


@cli.command('estimate-norm')
@function_options
@click.option('--m', required=False, default=None, type=int)
@click.option('--epsilon', required=False, default=None, type=float, help='Failure probability per search stage.')
@common_options
@command_body(m=DEFAULT_QPE_BITS)
def estimate_norm(config, **kwargs):
    """
    Estimates sum |f(x_j)|^2 of the unrescaled target by the phase estimation search.
    """
    f1 = _target(config, rescale=False)
    estimate = variants.estimate_normalization_qpe(f1, config.m, epsilon_fail=config.epsilon,
                                                   rng=substream(config.seed, 'qpe-search'))
    item = estimate._asdict()
    item['norm_sq_exact'] = f1.N * Rank1Hamiltonian(f1, f1, 1.0).norm_sq
    _emit(config, 'estimate-norm', item)


@cli.command()
@function_options
@click.option('--m', required=False, default=None, type=int)
@click.option('--epsilon', required=False, default=None, type=float)
@common_options
@command_body(n=DEFAULT_INTEGRATION_QUBITS, m=DEFAULT_INTEGRATION_BITS)
def integrate(config, **kwargs):
    """
    Integrates the function over the interval with the phase estimation normalization.
    """
    func = parse_function(config.function, interval=config.interval)
    grid = _grid(config)
    m = config.m
    value = variants.integrate_lipschitz(func, grid, m=m, epsilon_fail=config.epsilon,
                                         rng=substream(config.seed, 'integrate'))
    riemann = complex(np.sum(np.asarray(func(grid.points()), dtype=complex)) * grid.delta)
    item = {
        'value': value,
        'riemann_sum': riemann.real if riemann.imag == 0 else riemann,
        'n': grid.n,
        'm': m,
    }
    _emit(config, 'integrate', item)


def _initial_for(f1, lam):
    if lam is None:
        return plus_state(f1.grid)
    return variants.state_with_fidelity(target_state(f1), lam)


@cli.command()
@function_options
@click.option('--mode', required=False, default=None, type=click.Choice([m.value for m in Mode], case_sensitive=True))
@click.option('--lam', required=False, default=None, type=float, help='Input fidelity; |+^n> when omitted.')
@common_options
@command_body()
def hadamard(config, **kwargs):
    """
    The destructive interference preparation at t = pi / c2 plus a normalization sweep and cosine fit.
    """
    f1 = _target(config)
    initial = _initial_for(f1, config.lam)
    result = variants.hadamard_test_prepare(initial, f1, rng=substream(config.seed, 'hadamard'), mode=config.mode)
    c2 = variants.target_hamiltonian(f1).norm_sq
    points = variants.normalization_sweep(initial, f1, np.linspace(0, 4 * math.pi / c2, SWEEP_POINTS))
    fit = variants.fit_c2(points) if result.lambda_in > 0 else None
    item = _drop_state(result, 'state_on_one')
    item['state_fidelity'] = None if result.state_on_one is None else fidelity(result.state_on_one, target_state(f1))
    item['c2_exact'] = c2
    item['fit'] = fit
    item['sweep'] = points
    _emit(config, 'hadamard', item, rows=report_rows(points))


@cli.command()
@function_options
@click.option('--lam', required=False, default=None, type=float, help='Fidelity of the candidate; 1 when omitted.')
@click.option('--trials', required=False, default=None, type=int)
@common_options
@command_body()
def verify(config, **kwargs):
    """
    Verifies a candidate state with repeated Hadamard tests.
    """
    f1 = _target(config)
    candidate = variants.state_with_fidelity(target_state(f1), 1.0 if config.lam is None else config.lam)
    result = variants.verify_state(candidate, f1, config.trials, rng=substream(config.seed, 'verify'))
    _emit(config, 'verify', result)


@cli.command('grover-rudolph')
@function_options
@common_options
@command_body()
def grover_rudolph(config, **kwargs):
    """
    The conditional probability construction of a density, compared with its integral encoding.
    """
    density = parse_function(config.function, interval=config.interval)
    grid = _grid(config)
    state = variants.grover_rudolph_reference(density, grid)
    encoded = target_state(integral_encode(density, grid, quad_points=config.quad_points))
    item = {'n': grid.n, 'infidelity': 1 - fidelity(state, encoded)}
    rows = make_grid_function(grid, state.amplitudes, encoding=Encoding.integral).to_rows()
    _emit(config, 'grover-rudolph', item, rows=rows)
