import math

import numpy as np
from scipy.stats import linregress

from nuclear_semimartingales.hermite_core import Distribution, get_basis
from nuclear_semimartingales.paths import (CadlagPath, ContractError, RandomPartition, SemimartingaleSpec,
                                           uniform_grid)
from nuclear_semimartingales.dirac_ito import (ConvolvedDiracSemimartingale, DiracSemimartingale, conv_pair,
                                               dirac_pair, ito_distribution_terms, ito_residual, ito_terms)

basis = get_basis(64, 160)
e0, e1 = basis.unit(0), basis.unit(1)
T0, T1 = basis.dual_unit(0), basis.dual_unit(1)

# Checkpoints
still = SemimartingaleSpec().simulate(64, 0)
assert abs(dirac_pair(still, 0.5, e0) - math.pi ** -0.25) <= 1e-15
assert abs(conv_pair(T0, 1., e0) - math.exp(-0.25)) <= 1e-6
brownian = SemimartingaleSpec(sigma=1., jump_intensity=2., jump_sd=0.5).simulate(256, 1)
times = brownian.grid[::16]
assert np.allclose(DiracSemimartingale(basis).pairing(brownian, times, e1),
                   [dirac_pair(brownian, t, e1) for t in times], rtol=0., atol=1e-14)
convolved = ConvolvedDiracSemimartingale(T1).pairing(brownian, times, e0)
assert np.max(np.abs(convolved - [conv_pair(T1, brownian.value(t), e0) for t in times])) <= 1e-8

terms = ito_terms(T0, still, SemimartingaleSpec(), e0, RandomPartition.dyadic(4))
assert np.all(terms.A == 0.) and np.all(terms.B == 0.) and np.all(terms.C == 0.) and terms.residual == 0.
assert list(terms.to_dataframe().columns) == ['t', 'convolution', 'A', 'B', 'C', 'residual']
try:
    ito_terms(T0, still, SemimartingaleSpec(), e0, RandomPartition.dyadic(4), bracket='empirical')
except ValueError:
    pass
else:
    raise AssertionError('an unknown bracket was accepted')
print('Checkpoints ok')

# Pure-jump drivers: the formula holds exactly on jump-refined partitions
jumps = SemimartingaleSpec(jump_intensity=5., jump_sd=1.)
for seed in range(5):
    path = jumps.simulate(256, seed)
    partition = RandomPartition.jump_refined(6, path)
    for T in (T0, T1, T0 - 0.5 * basis.dual_unit(3)):
        for function in (e0, e1):
            assert ito_residual(T, path, jumps, function, partition) <= 1e-10
    assert np.all(ito_terms(T0, path, jumps, e0, partition).B == 0.)

grid = uniform_grid(1., 16)
single = CadlagPath(grid, np.zeros(17), jump_times=[0.5], jump_sizes=[1.])
try:
    ito_terms(T0, single, jumps, e0, RandomPartition([0., 0.3, 0.75, 1.]))
except ContractError:
    pass
else:
    raise AssertionError('a partition missing a jump time was accepted')
terms = ito_terms(T0, single, jumps, e0, RandomPartition.jump_refined(4, single))
assert abs(terms.at(1.)[2] - (math.exp(-0.25) - 1.)) <= 1e-6
assert terms.at(0.49)[2] == 0. and terms.residual <= 1e-10
print('Pure-jump drivers ok')

# Pure drift: left-point sums converge at rate one
drift_spec = SemimartingaleSpec(mu=1.)
drift = drift_spec.simulate(1024, 0)
levels = list(range(4, 11))
residuals = [ito_residual(T0, drift, drift_spec, e0, RandomPartition.dyadic(level)) for level in levels]
A = ito_terms(T0, drift, drift_spec, e0, RandomPartition.dyadic(10)).at(1.)[0]
assert abs(A - (1. - math.exp(-0.25))) <= 1e-3, A
slope = linregress(levels, np.log2(residuals)).slope
assert slope <= -0.9, slope
print(f'Pure drift: A(1) = {A:.4f}, slope {slope:.3f}')

# Brownian drivers
brownian_spec = SemimartingaleSpec(sigma=1.)
paths = brownian_spec.simulate_ensemble(1024, 200, seed=12)
levels = [6, 8, 10]
medians = {}
for bracket in ('model', 'realized'):
    medians[bracket] = [np.median([ito_residual(T0, path, brownian_spec, e0, RandomPartition.dyadic(level), bracket)
                                   for path in paths]) for level in levels]
    print(bracket, ['%.3e' % value for value in medians[bracket]])
assert linregress(levels, np.log2(medians['model'])).slope <= -0.4
assert medians['realized'][-1] < 5e-3
assert ito_terms(T0, paths[0], brownian_spec, e0, RandomPartition.dyadic(6)).bracket == 'model'

# The model bracket leaves ½Σg″(Δz² - Δτ), of order 2^(-n/2): 5e-3 needs level 13.
fine_paths = brownian_spec.simulate_ensemble(2 ** 13, 200, seed=12)
fine = np.median([ito_residual(T0, path, brownian_spec, e0, RandomPartition.dyadic(13)) for path in fine_paths])
print(f'model bracket median at level 13: {fine:.3e}')
assert fine < 5e-3
print('Brownian drivers ok')

# Linearity in T and distribution-valued terms
small = get_basis(32, 160)
rng = np.random.default_rng(3)
S1, S2 = Distribution(rng.normal(size=32), basis=small), Distribution(rng.normal(size=32), basis=small)
spec = SemimartingaleSpec(sigma=1., jump_intensity=3., jump_sd=0.5)
path = spec.simulate(256, 8)
partition = RandomPartition.jump_refined(7, path)
phi = small.unit(0) - 0.5 * small.unit(2)
combined = ito_terms(2. * S1 - S2, path, spec, phi, partition)
first, second = ito_terms(S1, path, spec, phi, partition), ito_terms(S2, path, spec, phi, partition)
for name in ('A', 'B', 'C'):
    assert np.max(np.abs(getattr(combined, name) - 2. * getattr(first, name) + getattr(second, name))) <= 1e-12

paired = ito_distribution_terms(S1, path, spec, partition).paired(phi)
for name in ('convolution', 'A', 'B', 'C'):
    assert np.max(np.abs(getattr(paired, name) - getattr(first, name))) <= 1e-12, name
assert abs(paired.residual - first.residual) <= 1e-12

no_jumps = SemimartingaleSpec(sigma=1.)
assert np.all(ito_terms(S1, no_jumps.simulate(256, 2), no_jumps, phi, RandomPartition.dyadic(6)).C == 0.)
print('Distribution-valued terms ok')
