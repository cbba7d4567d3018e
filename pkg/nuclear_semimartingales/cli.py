"""
Batch experiment runner.

    nuclear-semimartingales run --config experiment.json [--output-dir DIR] [--seed SEED] [--verbose]

The configuration is a flat JSON document. Every run writes its data tables as CSV, the
resolved configuration and a plain-text summary; data files depend on the configuration
and seed only.
"""
import argparse
import datetime
import json
import logging
import os
import sys
from typing import Dict, List

import numpy as np
import pandas as pd
from scipy.stats import linregress
from dessia_common.core import DessiaObject

import nuclear_semimartingales
from nuclear_semimartingales.hermite_core import get_basis
from nuclear_semimartingales.paths import ContractError, SemimartingaleSpec, make_partition, replica_seed
from nuclear_semimartingales.integrate_scalar import (CagladScalarIntegrand, LevelCoefficient,
                                                      ScaledDriverSemimartingale)
from nuclear_semimartingales.integrate_vector import TensorIntegrand, riemann_convergence
from nuclear_semimartingales.dirac_ito import DiracSemimartingale, ito_residual
from nuclear_semimartingales.metrics import (IntegrandDictionary, MetricEstimate, ProcessEnsemble, d_ucp_estimate,
                                             estimates_dataframe, r_em_report, r_ucp_report, r_variation_estimate)
from nuclear_semimartingales.diagnostics import run_probe_suite

logger = logging.getLogger(__name__)

EXPERIMENTS = ('simulate', 'ito-verify', 'riemann-converge', 'metrics', 'integrator-probe')
PARTITION_KINDS = ('dyadic', 'jump-refined', 'hitting')
DEFAULT_TOLERANCES = {'ito_median': 5e-3, 'ito_slope': -0.4, 'riemann_slope': -0.4,
                      'continuity_threshold': 0.1}
EXACT_RESIDUAL = 1e-10


class ConfigError(ValueError):
    """Invalid configuration, the message anchored to a line of the configuration file."""


class ExperimentConfig(DessiaObject):
    """
    One experiment with its model, basis, partitions, ensemble and outputs.
    """
    _standalone_in_db = True

    def __init__(self, experiment: str, z0: float = 0., mu: float = 0., sigma: float = 1.,
                 jump_intensity: float = 0., jump_mean: float = 0., jump_sd: float = 1., horizon: float = 1.,
                 grid_cells: int = 1024, truncation: int = 64, quad_order: int = 160,
                 partition_kind: str = 'jump-refined', partition_levels: List[int] = None,
                 hitting_levels: List[float] = None, replicas: int = 20, seed: int = 0,
                 output_dir: str = 'results', n_max: int = 1, bracket: str = 'model', n_jobs: int = 1,
                 eps: float = 0.01, tolerances: Dict[str, float] = None, name: str = ''):
        self.experiment = experiment
        self.z0 = z0
        self.mu = mu
        self.sigma = sigma
        self.jump_intensity = jump_intensity
        self.jump_mean = jump_mean
        self.jump_sd = jump_sd
        self.horizon = horizon
        self.grid_cells = grid_cells
        self.truncation = truncation
        self.quad_order = quad_order
        self.partition_kind = partition_kind
        self.partition_levels = [6, 7, 8, 9, 10] if partition_levels is None else partition_levels
        self.hitting_levels = [1., 2., 3.] if hitting_levels is None else hitting_levels
        self.replicas = replicas
        self.seed = seed
        self.output_dir = output_dir
        self.n_max = n_max
        self.bracket = bracket
        self.n_jobs = n_jobs
        self.eps = eps
        self.tolerances = {**DEFAULT_TOLERANCES, **(tolerances or {})}
        DessiaObject.__init__(self, name=name or experiment)

    FIELDS = ('experiment', 'z0', 'mu', 'sigma', 'jump_intensity', 'jump_mean', 'jump_sd', 'horizon',
              'grid_cells', 'truncation', 'quad_order', 'partition_kind', 'partition_levels', 'hitting_levels',
              'replicas', 'seed', 'output_dir', 'n_max', 'bracket', 'n_jobs', 'eps', 'tolerances')

    @classmethod
    def from_json_text(cls, text: str, source: str = '<config>', **overrides) -> 'ExperimentConfig':
        """Parses and validates; every error names the field and the line it was found on."""
        try:
            document = json.loads(text)
        except json.JSONDecodeError as error:
            raise ConfigError(f'{source}:{error.lineno}: {error.msg}') from error
        if not isinstance(document, dict):
            raise ConfigError(f'{source}:1: the configuration must be a JSON object')
        document.update({key: value for key, value in overrides.items() if value is not None})
        for key in document:
            if key not in cls.FIELDS:
                raise ConfigError(f'{source}:{_line_of(text, key)}: unknown field {key!r}')
        if 'experiment' not in document:
            raise ConfigError(f"{source}:1: field 'experiment' is required")
        try:
            config = cls(**document)
            config.validate()
        except (TypeError, ValueError) as error:
            field = getattr(error, 'field', None)
            line = _line_of(text, field) if field else 1
            raise ConfigError(f'{source}:{line}: {error}') from error
        return config

    def validate(self):
        def check(field, condition, requirement):
            if not condition:
                error = ValueError(f'field {field!r} {requirement}, got {getattr(self, field)!r}')
                error.field = field
                raise error

        check('experiment', self.experiment in EXPERIMENTS, f'must be one of {EXPERIMENTS}')
        for field in ('z0', 'mu', 'sigma', 'jump_intensity', 'jump_mean', 'jump_sd', 'horizon', 'eps'):
            value = getattr(self, field)
            check(field, isinstance(value, (int, float)) and not isinstance(value, bool), 'must be a number')
        for field in ('sigma', 'jump_intensity', 'jump_sd'):
            check(field, getattr(self, field) >= 0, 'must be nonnegative')
        check('horizon', self.horizon > 0, 'must be positive')
        for field in ('grid_cells', 'truncation', 'quad_order', 'replicas', 'n_max', 'n_jobs', 'seed'):
            value = getattr(self, field)
            check(field, isinstance(value, int) and not isinstance(value, bool), 'must be an integer')
        for field in ('grid_cells', 'truncation', 'replicas', 'n_max'):
            check(field, getattr(self, field) >= 1, 'must be at least 1')
        check('n_jobs', self.n_jobs != 0, 'must be nonzero')
        check('seed', 0 <= self.seed < 2 ** 64, 'must be a 64-bit unsigned integer')
        check('quad_order', self.quad_order >= 2 * self.truncation, 'must be at least twice the truncation')
        check('partition_kind', self.partition_kind in PARTITION_KINDS, f'must be one of {PARTITION_KINDS}')
        check('partition_levels', isinstance(self.partition_levels, list) and len(self.partition_levels) >= 1
              and all(isinstance(level, int) and level >= 0 for level in self.partition_levels),
              'must be a nonempty list of nonnegative integers')
        check('hitting_levels', isinstance(self.hitting_levels, list) and len(self.hitting_levels) >= 1
              and all(isinstance(level, (int, float)) and level > 0 for level in self.hitting_levels),
              'must be a nonempty list of positive levels')
        check('bracket', self.bracket in ('model', 'realized'), "must be 'model' or 'realized'")
        check('eps', self.eps > 0, 'must be positive')
        check('tolerances', all(key in DEFAULT_TOLERANCES for key in self.tolerances),
              f'only accepts the keys {sorted(DEFAULT_TOLERANCES)}')
        if self.experiment == 'metrics':
            check('n_max', self.n_max <= self.horizon, 'must not exceed the horizon')
        if self.experiment == 'ito-verify':
            check('partition_kind', self.partition_kind == 'jump-refined' or self.jump_intensity == 0,
                  "must be 'jump-refined' when the driver jumps")
            check('grid_cells', self.grid_cells >= 2 ** max(self.partition_levels),
                  f'must resolve the finest partition level {max(self.partition_levels)}')
        if self.experiment == 'riemann-converge':
            check('partition_levels', len(self.partition_levels) >= 3, 'needs at least three levels')

    def model(self) -> SemimartingaleSpec:
        return SemimartingaleSpec(z0=self.z0, mu=self.mu, sigma=self.sigma, jump_intensity=self.jump_intensity,
                                  jump_mean=self.jump_mean, jump_sd=self.jump_sd, horizon=self.horizon)

    def resolved(self) -> Dict:
        return {field: getattr(self, field) for field in self.FIELDS}


def _line_of(text: str, key: str) -> int:
    for number, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return number
    return 1


def emit_csv(table: pd.DataFrame, path: str):
    """Header row, '.' decimals and 17 significant digits, so floats read back bit for bit."""
    table.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')


# Experiments. Each returns its data tables and (passed, message) summary lines.

def _simulate(config: ExperimentConfig):
    paths = config.model().simulate_ensemble(config.grid_cells, config.replicas, config.seed, config.n_jobs)
    frames = []
    for index, path in enumerate(paths):
        frame = path.to_dataframe()
        frame.insert(0, 'replica', index)
        frames.append(frame)
    jumps = sum(path.jump_times.size for path in paths)
    return {'simulate': pd.concat(frames, ignore_index=True)}, [(True, f'simulated {len(paths)} paths, {jumps} jumps')]


def _ito_verify(config: ExperimentConfig):
    spec = config.model()
    basis = get_basis(config.truncation, config.quad_order)
    distributions = {'dual_e0': basis.dual_unit(0), 'dual_e1': basis.dual_unit(1)}
    functions = {'e0': basis.unit(0), 'e1': basis.unit(1)}
    paths = spec.simulate_ensemble(config.grid_cells, config.replicas, config.seed, config.n_jobs)
    rows = []
    for index, path in enumerate(paths):
        for level in config.partition_levels:
            partition = make_partition(config.partition_kind, {'level': level, 'levels': config.hitting_levels},
                                       path)
            for T_id, distribution in distributions.items():
                for phi_id, function in functions.items():
                    rows.append({'seed': replica_seed(config.seed, index), 'mesh_level': level, 'phi_id': phi_id,
                                 'T_id': T_id,
                                 'residual': ito_residual(distribution, path, spec, function, partition,
                                                          config.bracket)})
    table = pd.DataFrame(rows, columns=['seed', 'mesh_level', 'phi_id', 'T_id', 'residual'])
    reference = table[(table.T_id == 'dual_e0') & (table.phi_id == 'e0')]
    medians = reference.groupby('mesh_level').residual.median()
    finest = float(medians.iloc[-1])
    lines = [(finest <= config.tolerances['ito_median'] or finest <= EXACT_RESIDUAL,
              f'median residual at level {medians.index[-1]} ({config.bracket} bracket): {finest:.3e}')]
    if len(medians) >= 2 and np.all(medians.values > EXACT_RESIDUAL):
        slope = float(linregress(medians.index.values, np.log2(medians.values)).slope)
        lines.append((slope <= config.tolerances['ito_slope'], f'log2 slope of median residuals: {slope:.3f}'))
    return {'ito-verify': table}, lines


def riemann_integrand(basis) -> TensorIntegrand:
    """tanh(z_{t-}) ⟨·, e_0⟩ δ̂_0, the integrand of the convergence experiment."""
    return TensorIntegrand([CagladScalarIntegrand(LevelCoefficient('tanh'))], [basis.unit(0)],
                           [basis.dual_unit(0)], basis=basis, name='tanh_rank_one')


def _riemann_converge(config: ExperimentConfig):
    basis = get_basis(config.truncation, config.quad_order)
    paths = config.model().simulate_ensemble(config.grid_cells, config.replicas, config.seed, config.n_jobs)
    sequences = [[make_partition(config.partition_kind, {'level': level, 'levels': config.hitting_levels}, path)
                  for level in sorted(config.partition_levels)] for path in paths]
    report = riemann_convergence(riemann_integrand(basis), DiracSemimartingale(basis), paths, sequences,
                                 r=0, eps=config.eps)
    passed = report.exact or report.slope <= config.tolerances['riemann_slope']
    return ({'riemann-converge': report.to_dataframe()},
            [(passed, f'log2 slope of successive differences: {report.slope_text()}')])


def _metrics(config: ExperimentConfig):
    paths = config.model().simulate_ensemble(config.grid_cells, config.replicas, config.seed, config.n_jobs)
    ensemble = ProcessEnsemble.from_paths(paths)
    continuous = ProcessEnsemble(ensemble.times, [path.continuous_part(ensemble.times) for path in paths])
    dictionary = IntegrandDictionary.standard(config.horizon, seed=config.seed)
    estimates = [r_ucp_report(ensemble, config.n_max, config.seed),
                 r_em_report(ensemble, dictionary, config.n_max, config.seed),
                 MetricEstimate('d_ucp_continuous_part', d_ucp_estimate(ensemble, continuous, config.n_max),
                                2. ** -config.n_max, ensemble.count, config.seed),
                 MetricEstimate('r_variation_jump_part', r_variation_estimate(ensemble - continuous, config.n_max),
                                2. ** -config.n_max, ensemble.count, config.seed)]
    lines = [(True, f'{estimate.metric_name} = {estimate.value:.6g} (tail bound {estimate.tail_bound:.3g})')
             for estimate in estimates]
    return {'metrics': estimates_dataframe(estimates)}, lines


def _integrator_probe(config: ExperimentConfig):
    basis = get_basis(config.truncation, config.quad_order)
    paths = config.model().simulate_ensemble(config.grid_cells, config.replicas, config.seed, config.n_jobs)
    reports = run_probe_suite(DiracSemimartingale(basis), ScaledDriverSemimartingale(basis.dual_unit(1)), paths,
                              basis, config.hitting_levels, level=config.partition_levels[0], n_max=config.n_max,
                              threshold=config.tolerances['continuity_threshold'], seed=config.seed)
    cases = pd.concat([report.to_dataframe() for report in reports], ignore_index=True)
    metrics = pd.concat([report.metrics_dataframe() for report in reports if report.metric_rows],
                        ignore_index=True)
    return ({'integrator-probe': cases, 'integrator-probe_metrics': metrics},
            [(report.passed, f'{report.probe_name}: {report.verdict}') for report in reports])


RUNNERS = {'simulate': _simulate,
           'ito-verify': _ito_verify,
           'riemann-converge': _riemann_converge,
           'metrics': _metrics,
           'integrator-probe': _integrator_probe}


def _summary(config: ExperimentConfig, lines) -> str:
    header = ['# metadata',
              f'# created: {datetime.datetime.now().isoformat(timespec="seconds")}',
              f'# version: {nuclear_semimartingales.__version__}',
              f'# experiment: {config.experiment}',
              f'# seed: {config.seed}', '']
    return '\n'.join(header + [f"{'PASS' if passed else 'FAIL'} {message}" for passed, message in lines]) + '\n'


def run(config_path: str, output_dir: str = None, seed: int = None) -> int:
    """
    Runs one experiment. Returns 0 when every check passes, 1 on a failed check or an
    output error, 2 on a configuration error.
    """
    try:
        with open(config_path, 'r', encoding='utf-8') as file:
            text = file.read()
    except OSError as error:
        logger.error('%s: cannot read the configuration: %s', config_path, error)
        return 2
    try:
        config = ExperimentConfig.from_json_text(text, source=config_path, output_dir=output_dir, seed=seed)
    except ConfigError as error:
        logger.error(str(error))
        return 2

    logger.info('Running %s with seed %d', config.experiment, config.seed)
    try:
        tables, lines = RUNNERS[config.experiment](config)
    except ContractError as error:
        logger.error('%s: %s', config.experiment, error)
        return 1

    try:
        os.makedirs(config.output_dir, exist_ok=True)
        for table_name, table in tables.items():
            emit_csv(table, os.path.join(config.output_dir, f'{table_name}.csv'))
        with open(os.path.join(config.output_dir, 'config_resolved.json'), 'w', encoding='utf-8') as file:
            json.dump(config.resolved(), file, indent=2, sort_keys=True)
            file.write('\n')
        with open(os.path.join(config.output_dir, 'summary.txt'), 'w', encoding='utf-8') as file:
            file.write(_summary(config, lines))
    except OSError as error:
        logger.error('cannot write the outputs to %s: %s', config.output_dir, error)
        return 1

    passed = all(ok for ok, _ in lines)
    for ok, message in lines:
        (logger.info if ok else logger.warning)('%s %s', 'PASS' if ok else 'FAIL', message)
    return 0 if passed else 1


def main(argv: List[str] = None) -> int:
    parser = argparse.ArgumentParser(prog='nuclear-semimartingales',
                                     description='Experiments on distribution-valued semimartingales.')
    commands = parser.add_subparsers(dest='command', required=True)
    run_parser = commands.add_parser('run', help='run the experiment described by a configuration file')
    run_parser.add_argument('--config', required=True, help='JSON configuration file')
    run_parser.add_argument('--output-dir', default=None, help='overrides output_dir')
    run_parser.add_argument('--seed', type=int, default=None, help='overrides seed')
    run_parser.add_argument('--verbose', action='store_true', help='debug logging')
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    return run(args.config, output_dir=args.output_dir, seed=args.seed)


if __name__ == '__main__':
    sys.exit(main())
