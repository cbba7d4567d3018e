import math

import numpy as np

from nuclear_semimartingales.hermite_core import DimensionError, get_basis
from nuclear_semimartingales.paths import (CadlagPath, ContractError, RandomPartition, SemimartingaleSpec,
                                           StoppingTime, stop_path, uniform_grid)
from nuclear_semimartingales.integrate_scalar import (CagladScalarIntegrand, ConstantCoefficient,
                                                      DerivativeSemimartingale, ElementaryScalarIntegrand,
                                                      LevelCoefficient, ScaledDriverSemimartingale,
                                                      StoppedScalarIntegrand, StoppedSemimartingale,
                                                      SumSemimartingale, TestFunctionIntegrand, h_dot_z,
                                                      integrate_elementary, riemann_scalar)

basis = get_basis(16, 160)
e0, e1 = basis.unit(0), basis.unit(1)
X = ScaledDriverSemimartingale(basis.dual_unit(0))
h = ElementaryScalarIntegrand.from_constants([0., 0.25, 0.5, 1.], [1., -0.5, 0.25], a0=0.5)
H = TestFunctionIntegrand([h], [e0])

grid = uniform_grid(1., 8)
drift = CadlagPath(grid, 1. + grid)
single_jump = CadlagPath(grid, np.zeros(9), jump_times=[0.3], jump_sizes=[1.])

# Elementary integrals in closed form
assert np.max(np.abs(h_dot_z(h, drift, [0., 0.375, 1.]) - [0.5, 0.6875, 0.75])) <= 1e-12
assert np.max(np.abs(integrate_elementary(H, X, drift, [0.375, 1.]) - [0.6875, 0.75])) <= 1e-12
assert np.max(np.abs(integrate_elementary(H, X, single_jump, [0.29, 0.3, 1.]) - [0., -0.5, -0.5])) <= 1e-12

aligned = RandomPartition([0., 0.25, 0.5, 1.])
for path in (drift, single_jump):
    times = np.linspace(0., 1., 17)
    deviation = np.max(np.abs(riemann_scalar(H, X, path, aligned, times) - integrate_elementary(H, X, path, times)))
    assert deviation <= 1e-10, deviation
print('Elementary integrals ok')

# Contracts
try:
    h_dot_z(ElementaryScalarIntegrand.from_constants([0., 1.], [2.], bound=1.), drift)
except ContractError:
    pass
else:
    raise AssertionError('a coefficient above its bound was accepted')
try:
    h_dot_z(ElementaryScalarIntegrand.from_constants([0., 2.], [1.]), drift)
except ContractError:
    pass
else:
    raise AssertionError('a block beyond the horizon was accepted')
no_blocks = ElementaryScalarIntegrand(ConstantCoefficient(1.), [], [])
assert np.all(h_dot_z(no_blocks, drift) == 1.)
try:
    TestFunctionIntegrand([h, h], [e0, get_basis(32, 160).unit(0)])
except DimensionError:
    pass
else:
    raise AssertionError('mixed truncations were accepted')
try:
    X.pairing(drift, [0.5], get_basis(32, 160).unit(0))
except DimensionError:
    pass
else:
    raise AssertionError('a pairing across truncations was accepted')
try:
    integrate_elementary(TestFunctionIntegrand.constant(e0), X, drift)
except ContractError:
    pass
else:
    raise AssertionError('a non-elementary integrand was integrated by the elementary formula')
print('Contracts ok')

# Riemann sums of càglàd integrands
path = SemimartingaleSpec(sigma=1., jump_intensity=4., jump_sd=0.5).simulate(256, 5)
partition = RandomPartition.dyadic(3)
constant = TestFunctionIntegrand.constant(e0)
assert np.max(np.abs(riemann_scalar(constant, X, path, partition, path.grid)
                     - X.pairing(path, path.grid, e0))) <= 1e-12

stopped = TestFunctionIntegrand([StoppedScalarIntegrand(CagladScalarIntegrand(ConstantCoefficient(1.)),
                                                        StoppingTime('deterministic', 0.5))], [e0])
expected = X.pairing(path, np.minimum(path.grid, 0.5), e0)
assert np.max(np.abs(riemann_scalar(stopped, X, path, partition, path.grid) - expected)) <= 1e-12

# Left-point sums read z at the left end of every cell
level = TestFunctionIntegrand([CagladScalarIntegrand(LevelCoefficient('identity'))], [e0])
linear = CadlagPath(grid, grid)
assert abs(riemann_scalar(level, X, linear, partition, [1.])[0] - 0.4375) <= 1e-12
print('Riemann sums ok')

# Semimartingale combinators
tau = StoppingTime('deterministic', 0.5)
assert abs(StoppedSemimartingale(X, tau).pairing(path, [0.9], e0)[0] - path.value(0.5)) <= 1e-12
assert np.allclose(SumSemimartingale(X, X).pairing(path, grid, e0), 2. * path.value(grid))
derivative = DerivativeSemimartingale(X).pairing(path, grid, e1)
assert np.max(np.abs(derivative + math.sqrt(0.5) * path.value(grid))) <= 1e-12
print('Semimartingale combinators ok')

# Partitions ending before the horizon freeze the sum at their last time
short = RandomPartition([0., 0.25, 0.5])
frozen = riemann_scalar(constant, X, path, short, path.grid)
assert np.max(np.abs(frozen - X.pairing(path, np.minimum(path.grid, 0.5), e0))) <= 1e-12
tanh = TestFunctionIntegrand([CagladScalarIntegrand(LevelCoefficient('tanh'))], [e0])
frozen = riemann_scalar(tanh, X, path, short, path.grid)
assert np.all(frozen[path.grid >= 0.5] == frozen[path.grid == 0.5][0])
print('Short partitions ok')

# Integrals against the continuous part differ by the jumps sampled on the left
fine = uniform_grid(1., 64)
rng = np.random.default_rng(11)
continuous = np.concatenate([[0.2], 0.2 + np.cumsum(rng.normal(scale=0.125, size=64))])
jumpy = CadlagPath(fine, continuous, jump_times=[0.3, 0.61], jump_sizes=[0.8, -1.2])
D = basis.dual_unit(0) - 0.5 * basis.dual_unit(1)
phi = e0 + e1
H_tanh = TestFunctionIntegrand([CagladScalarIntegrand(LevelCoefficient('tanh'))], [phi])
partition = RandomPartition.jump_refined(4, jumpy)
full = riemann_scalar(H_tanh, ScaledDriverSemimartingale(D, 'full'), jumpy, partition, fine)
cont = riemann_scalar(H_tanh, ScaledDriverSemimartingale(D, 'continuous'), jumpy, partition, fine)
jump_part = riemann_scalar(H_tanh, ScaledDriverSemimartingale(D, 'jumps'), jumpy, partition, fine)
taus = partition.times
values = H_tanh.integrands[0].cell_values(jumpy, taus[:-1], taus[1:])
expected = np.zeros(fine.size)
for s, size in zip(jumpy.jump_times, jumpy.jump_sizes):
    left = values[np.searchsorted(taus, s) - 1]
    assert abs(left - np.tanh(jumpy.value(taus[np.searchsorted(taus, s) - 1]))) <= 1e-15
    expected += np.where(fine >= s, left * size * D.pair(phi), 0.)
assert np.max(np.abs(full - cont - expected)) <= 1e-12
assert np.max(np.abs(full - cont - jump_part)) <= 1e-12
print('Continuous part ok')

# Elementary integrals against stopped paths
for tau in (0.2, 0.5, 0.8):
    stopped_path = stop_path(path, tau)
    assert np.max(np.abs(h_dot_z(h, stopped_path, path.grid) - h_dot_z(h, path, np.minimum(path.grid, tau)))) <= 1e-12
print('Stopped elementary integrals ok')
