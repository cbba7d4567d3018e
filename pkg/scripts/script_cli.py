import filecmp
import json
import os
import tempfile

import numpy as np
import pandas as pd

from nuclear_semimartingales.cli import ConfigError, ExperimentConfig, emit_csv, main, run


def write_config(directory, name, document):
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(document, file, indent=2)
    return path


def expect_config_error(text):
    try:
        ExperimentConfig.from_json_text(text, source='test.json')
    except ConfigError as error:
        return str(error)
    raise AssertionError(f'{text!r} was accepted')


pure_jump = {'experiment': 'ito-verify', 'sigma': 0., 'jump_intensity': 3., 'grid_cells': 128,
             'partition_levels': [4, 5], 'replicas': 3, 'truncation': 16}

with tempfile.TemporaryDirectory() as directory:
    # Exact Itô formula on pure-jump drivers, reproducible outputs
    config = write_config(directory, 'pure_jump.json', pure_jump)
    first, second = os.path.join(directory, 'first'), os.path.join(directory, 'second')
    assert run(config, output_dir=first, seed=5) == 0
    assert run(config, output_dir=second, seed=5) == 0
    for file_name in ('ito-verify.csv', 'config_resolved.json'):
        assert filecmp.cmp(os.path.join(first, file_name), os.path.join(second, file_name), shallow=False)
    table = pd.read_csv(os.path.join(first, 'ito-verify.csv'))
    assert list(table.columns) == ['seed', 'mesh_level', 'phi_id', 'T_id', 'residual']
    assert len(table) == 3 * 2 * 4 and table.residual.max() <= 1e-10
    with open(os.path.join(first, 'summary.txt'), encoding='utf-8') as file:
        summary = file.read()
    assert summary.startswith('# metadata') and 'PASS median residual' in summary and 'FAIL' not in summary
    with open(os.path.join(first, 'config_resolved.json'), encoding='utf-8') as file:
        resolved = json.load(file)
    assert resolved['seed'] == 5 and resolved['bracket'] == 'model' and resolved['tolerances']['ito_median'] == 5e-3
    assert main(['run', '--config', config, '--output-dir', os.path.join(directory, 'main')]) == 0
    print('ito-verify runs are reproducible')

    # Configuration errors
    text = json.dumps({'experiment': 'simulate', 'sigma': -1.}, indent=2)
    message = expect_config_error(text)
    assert 'sigma' in message and message.startswith('test.json:3:'), message
    assert run(write_config(directory, 'negative.json', {'experiment': 'simulate', 'sigma': -1.})) == 2
    assert run(os.path.join(directory, 'missing.json')) == 2
    assert 'unknown field' in expect_config_error('{"experiment": "simulate", "colour": 1}')
    assert 'experiment' in expect_config_error('{"experiment": "unknown"}')
    assert expect_config_error('{"experiment": ').startswith('test.json:1:')
    assert 'jump-refined' in expect_config_error('{"experiment": "ito-verify", "jump_intensity": 1.0, '
                                                 '"partition_kind": "dyadic"}')
    assert 'n_max' in expect_config_error('{"experiment": "metrics", "n_max": 3}')
    assert 'grid_cells' in expect_config_error('{"experiment": "ito-verify", "grid_cells": 512}')
    print('Configuration errors ok')

    # CSV format
    path = os.path.join(directory, 'table.csv')
    emit_csv(pd.DataFrame(columns=['a', 'b']), path)
    with open(path, encoding='utf-8') as file:
        assert file.read() == 'a,b\n'
    emit_csv(pd.DataFrame({'a': [1.], 'b': [0.5]}), path)
    with open(path, encoding='utf-8') as file:
        assert file.read() == 'a,b\n1,0.5\n'
    values = np.random.default_rng(0).normal(size=50) * 10. ** np.arange(-25, 25)
    emit_csv(pd.DataFrame({'x': values}), path)
    assert np.array_equal(pd.read_csv(path, float_precision='round_trip').x.values, values)

    # Other experiments
    small = {'grid_cells': 64, 'replicas': 5, 'truncation': 16, 'jump_intensity': 2., 'jump_sd': 0.5}
    output = os.path.join(directory, 'simulate')
    assert run(write_config(directory, 'simulate.json', {'experiment': 'simulate', **small}), output) == 0
    simulated = pd.read_csv(os.path.join(output, 'simulate.csv'))
    assert list(simulated.columns) == ['replica', 't', 'z_t', 'z_tminus', 'jump_flag']
    assert sorted(simulated.replica.unique()) == list(range(5))

    output = os.path.join(directory, 'metrics')
    assert run(write_config(directory, 'metrics.json', {'experiment': 'metrics', **small}), output) == 0
    metrics = pd.read_csv(os.path.join(output, 'metrics.csv'))
    assert list(metrics.metric_name) == ['r_ucp', 'r_em_lower_bound', 'd_ucp_continuous_part',
                                         'r_variation_jump_part']
    assert metrics.value[0] <= metrics.value[1] + 1e-12

    blocked = os.path.join(directory, 'blocked')
    with open(blocked, 'w', encoding='utf-8') as file:
        file.write('not a directory\n')
    assert run(write_config(directory, 'blocked.json', {'experiment': 'simulate', **small}), blocked) == 1

    output = os.path.join(directory, 'probe')
    probe = {'experiment': 'integrator-probe', 'partition_levels': [4], 'tolerances': {'continuity_threshold': 0.5},
             **small}
    assert run(write_config(directory, 'probe.json', probe), output) == 0
    cases = pd.read_csv(os.path.join(output, 'integrator-probe.csv'))
    assert list(cases.columns) == ['probe', 'case', 'deviation', 'tolerance', 'passed']
    assert set(cases.probe) == {'stopping', 'localization', 'linearity', 'image'} and cases.passed.all()
    integrator_metrics = pd.read_csv(os.path.join(output, 'integrator-probe_metrics.csv'))
    assert list(integrator_metrics.columns) == ['probe', 'sequence', 'index', 'r_em_lower_bound', 'r_ucp',
                                                 'standard_error']
    assert len(integrator_metrics) == 12 and set(integrator_metrics.sequence) == {'scaled', 'window'}
    with open(os.path.join(output, 'summary.txt'), encoding='utf-8') as file:
        assert 'FAIL' not in file.read()

    output = os.path.join(directory, 'riemann')
    assert run(write_config(directory, 'riemann.json', {'experiment': 'riemann-converge'}), output) == 0
    converged = pd.read_csv(os.path.join(output, 'riemann-converge.csv'))
    assert list(converged.columns) == ['level', 'mean_sup_difference', 'reference_distance', 'ucp_probability']
    assert list(converged.level) == [6., 7., 8., 9.]
    assert converged.ucp_probability.between(0., 1.).all()
    print('Experiments ok')
