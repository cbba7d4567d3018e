import numpy as np

from nuclear_semimartingales.hermite_core import DimensionError, get_basis
from nuclear_semimartingales.paths import CadlagPath, SemimartingaleSpec, uniform_grid
from nuclear_semimartingales.integrate_scalar import ElementaryScalarIntegrand
from nuclear_semimartingales.integrate_vector import DistributionPath
from nuclear_semimartingales.metrics import (IntegrandDictionary, ProcessEnsemble, d_ucp_estimate,
                                             estimates_dataframe, r_em_estimate, r_em_report, r_ucp_estimate,
                                             r_ucp_report, r_variation_estimate, standard_error_slope,
                                             ucp_dual_estimate)

# r_ucp of constants
times = uniform_grid(4., 64)
assert abs(r_ucp_estimate(ProcessEnsemble.constant(times, 3., count=5), 4) - 0.9375) <= 1e-15
assert r_ucp_estimate(ProcessEnsemble.constant(times, 0., count=5), 4) == 0.
assert abs(r_ucp_estimate(ProcessEnsemble.constant(times, 0.4), 2) - 0.3) <= 1e-15
try:
    r_ucp_estimate(ProcessEnsemble.constant(times, 1.), 5)
except ValueError:
    pass
else:
    raise AssertionError('n_max beyond the grid horizon was accepted')
try:
    d_ucp_estimate(ProcessEnsemble.constant(times, 1., count=2), ProcessEnsemble.constant(times, 1., count=3), 2)
except ValueError:
    pass
else:
    raise AssertionError('ensembles of different sizes were compared')
print('r_ucp of constants ok')

# Metric properties on simulated ensembles
spec = SemimartingaleSpec(sigma=1., jump_intensity=2., jump_sd=0.5, horizon=2.)
x = ProcessEnsemble.from_paths(spec.simulate_ensemble(128, 100, seed=1))
y = ProcessEnsemble.from_paths(spec.simulate_ensemble(128, 100, seed=2))
z = ProcessEnsemble.from_paths(spec.simulate_ensemble(128, 100, seed=3))
assert d_ucp_estimate(x, y, 2) == d_ucp_estimate(y, x, 2)
assert d_ucp_estimate(x, z, 2) <= d_ucp_estimate(x, y, 2) + d_ucp_estimate(y, z, 2) + 1e-12
assert d_ucp_estimate(x, x, 2) == 0.
scaled = [r_ucp_estimate(c * x, 2) for c in (0.1, 0.5, 1., 2.)]
assert all(a <= b for a, b in zip(scaled, scaled[1:]))

report = r_ucp_report(x, 2, seed=1)
assert report.tail_bound == 0.25 and report.replicas == 100 and report.standard_error > 0.
print('d_ucp properties ok')

# Émery lower bound
grid = uniform_grid(1., 16)
linear = ProcessEnsemble.from_paths([CadlagPath(grid, grid)])
dictionary = IntegrandDictionary.standard(horizon=1.)
assert len(dictionary.elements) == 9 and dictionary.elements[0].name == 'one'
assert abs(r_em_estimate(linear, dictionary, 1) - 0.5) <= 1e-12
assert abs(r_variation_estimate(linear, 1) - 0.5) <= 1e-12

brownian = ProcessEnsemble.from_paths(SemimartingaleSpec(sigma=1.).simulate_ensemble(64, 50, seed=5))
small = IntegrandDictionary([ElementaryScalarIntegrand.indicator(0., 0.5)], horizon=1.)
assert len(small.elements) == 2
bigger = small.extended(dictionary.elements[1:])
lower, upper = r_em_estimate(brownian, small, 1), r_em_estimate(brownian, bigger, 1)
assert r_ucp_estimate(brownian, 1) <= lower + 1e-12 and lower <= upper
em_report = r_em_report(brownian, bigger, 1, seed=5)
assert em_report.value == upper and em_report.metric_name == 'r_em_lower_bound'

for elements in ([], [ElementaryScalarIntegrand.from_constants([0., 1.], [2.])]):
    try:
        IntegrandDictionary(elements)
    except ValueError:
        pass
    else:
        raise AssertionError(f'dictionary {elements} accepted')

frame = estimates_dataframe([report, em_report])
assert list(frame.columns) == ['metric_name', 'value', 'tail_bound', 'replicas', 'seed'] and len(frame) == 2
print('r_em lower bound ok')

# The constant integrand is recognised by its values, not its name
impostor = ElementaryScalarIntegrand.from_constants([0., 1.], [0.5], a0=0.5, name='one')
with_impostor = IntegrandDictionary([impostor], horizon=1.)
assert len(with_impostor.elements) == 2 and with_impostor.elements[0].is_constant(1., 1.)
assert not impostor.is_constant(1., 1.)
unit = ElementaryScalarIntegrand.from_constants([0., 0.5, 1.], [1., 1.], a0=1., name='unit')
assert len(IntegrandDictionary([unit], horizon=1.).elements) == 1
assert len(IntegrandDictionary([ElementaryScalarIntegrand.constant_one(0.5)], horizon=1.).elements) == 2
try:
    r_em_report(x, dictionary, 2)
except ValueError:
    pass
else:
    raise AssertionError('a dictionary shorter than n_max was accepted')
covering = IntegrandDictionary.standard(horizon=2.)
assert r_ucp_estimate(x, 2) <= r_em_estimate(x, covering, 2) + 1e-12
print('Constant integrand membership ok')

# Monte-Carlo error decays like the inverse square root of the replica count
large = ProcessEnsemble.from_paths(SemimartingaleSpec(sigma=1., horizon=2.).simulate_ensemble(256, 4000, seed=9))
slope = standard_error_slope(large, [250, 1000, 4000], 2)
assert abs(slope + 0.5) <= 0.15, slope
print(f'Standard error slope {slope:.3f}')

# UCP in the dual
basis = get_basis(16, 160)
eps = 0.05
base = [DistributionPath(grid, np.random.default_rng(seed).normal(size=(17, 16)), basis) for seed in range(10)]
assert ucp_dual_estimate(base, [p.offset(2. * eps * basis.dual_unit(0)) for p in base], 0, 1., eps) == 1.
for k in (2, 4, 8):
    shifted = [p.offset(eps / k * basis.dual_unit(0)) for p in base]
    assert ucp_dual_estimate(base, shifted, 0, 1., eps) == 0.
try:
    ucp_dual_estimate(base, [DistributionPath(grid, np.zeros((17, 32)), get_basis(32, 160))] * 10, 0, 1., eps)
except DimensionError:
    pass
else:
    raise AssertionError('distribution paths of different truncations were compared')
print('UCP dual distance ok')
