import numpy as np

from nuclear_semimartingales.hermite_core import Distribution, get_basis
from nuclear_semimartingales.paths import SemimartingaleSpec, StoppingTime
from nuclear_semimartingales.integrate_scalar import (ElementaryScalarIntegrand, ScaledDriverSemimartingale,
                                                      StoppedSemimartingale, TestFunctionIntegrand)
from nuclear_semimartingales.dirac_ito import DiracSemimartingale
from nuclear_semimartingales.diagnostics import (CONSISTENT, ProbeReport, continuity_probe, image_probe,
                                                 linearity_probe, localization_probe, probe_integrands,
                                                 probe_stopping_times, probe_tensor_integrands, probe_test_functions,
                                                 shrinking_sequences, stopping_probe)

basis = get_basis(32, 160)
rng = np.random.default_rng(2)
X = ScaledDriverSemimartingale(Distribution(rng.normal(size=32), basis=basis))
Y = ScaledDriverSemimartingale(Distribution(rng.normal(size=32), basis=basis), component='jumps')
paths = SemimartingaleSpec(sigma=1., jump_intensity=2., jump_sd=0.5).simulate_ensemble(256, 50, seed=6)
integrands = probe_integrands(basis)
R, S = probe_tensor_integrands(basis, seed=3)

# Exact identities
for report in (stopping_probe(X, integrands, probe_stopping_times(), paths),
               stopping_probe(DiracSemimartingale(basis), integrands, probe_stopping_times(), paths[:10]),
               localization_probe(X, probe_test_functions(basis), [0.5, 1., 2.], R, paths),
               image_probe(X, integrands, paths)):
    print(report.summary_line())
    assert report.passed, report.to_markdown()
    assert len(report.to_dataframe()) == len(report.cases) > 0

linearity = linearity_probe(X, Y, R, S, [0., -1., 1.7], paths)
assert linearity.passed and linearity.max_deviation <= 1e-12, linearity.max_deviation
print(linearity.summary_line())

empty = ProbeReport('synthetic', [])
assert empty.passed and empty.max_deviation == 0.

# Stopping a deterministic driver at the horizon changes nothing
drift = SemimartingaleSpec(mu=1.).simulate(1024, 0)
stopped = StoppedSemimartingale(X, StoppingTime('deterministic', 1.))
e0 = basis.unit(0)
assert np.array_equal(stopped.pairing(drift, drift.grid, e0), X.pairing(drift, drift.grid, e0))

# Continuity along sequences tending to zero
sequences = shrinking_sequences(basis)
zero = {'zero': [TestFunctionIntegrand([ElementaryScalarIntegrand.indicator(0., 1., 0.)], [e0])] * 3}
report = continuity_probe(X, zero, paths)
assert report.verdict == CONSISTENT
assert all(row['r_ucp'] == 0. and row['r_em_lower_bound'] == 0. for row in report.metric_rows)

driver = ScaledDriverSemimartingale(basis.dual_unit(0))
report = continuity_probe(driver, {'scaled': sequences['scaled']}, paths)
print(report.to_markdown())
assert report.verdict == CONSISTENT, report.metric_rows
rows = report.metric_rows
assert len(rows) == 6 and all(a['r_ucp'] >= b['r_ucp'] for a, b in zip(rows, rows[1:]))
assert all(row['r_ucp'] <= row['r_em_lower_bound'] + 1e-12 for row in rows)
assert list(report.metrics_dataframe().columns) == ['probe', 'sequence', 'index', 'r_em_lower_bound', 'r_ucp',
                                                    'standard_error']

window = continuity_probe(driver, {'window': sequences['window']}, paths, threshold=0.5)
assert window.passed, window.metric_rows
print('Probes ok')
