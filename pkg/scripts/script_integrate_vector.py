import numpy as np

from nuclear_semimartingales.hermite_core import DimensionError, Distribution, get_basis
from nuclear_semimartingales.paths import ContractError, RandomPartition, SemimartingaleSpec, StoppingTime, stop_path
from nuclear_semimartingales.integrate_scalar import (CagladScalarIntegrand, ConstantCoefficient,
                                                      ElementaryScalarIntegrand, LevelCoefficient,
                                                      ScaledDriverSemimartingale, TestFunctionIntegrand,
                                                      evaluation_times, riemann_scalar)
from nuclear_semimartingales.integrate_vector import (DistributionPath, DistributionPathSemimartingale,
                                                      LocalizedIntegrand, TensorIntegrand, integrate_then_integrate,
                                                      localize_integrate, riemann_convergence, riemann_vector,
                                                      vector_integrate)
from nuclear_semimartingales.metrics import ucp_dual_estimate

basis = get_basis(16, 160)
e0, e1, e2 = basis.unit(0), basis.unit(1), basis.unit(2)
rng = np.random.default_rng(1)
X = ScaledDriverSemimartingale(Distribution(rng.normal(size=16), basis=basis))
spec = SemimartingaleSpec(sigma=1., jump_intensity=2., jump_sd=0.5)
path = spec.simulate(256, 3)
partition = RandomPartition.dyadic(5)

tanh = CagladScalarIntegrand(LevelCoefficient('tanh'))
R = TensorIntegrand([tanh, CagladScalarIntegrand(LevelCoefficient('cos'))], [e0, e1 + e2],
                    [basis.dual_unit(1), basis.dual_unit(0) - basis.dual_unit(3)])

# Weak definition: ⟨Y, ψ⟩ is the scalar integral of R′ψ
Y = vector_integrate(R, X, path, partition)
for psi in (e0, e1, basis.unit(3) - 2. * e0):
    weak = riemann_scalar(R.dual_integrand(psi), X, path, partition, Y.times)
    assert np.max(np.abs(Y.pair(psi) - weak)) <= 1e-12

f = Distribution(rng.normal(size=16), basis=basis)
for t in (0., 0.3, 1.):
    assert abs(R.apply(path, t, f).pair(e1) - f.pair(R.dual_apply(path, t, e1))) <= 1e-12

assert np.all(vector_integrate(TensorIntegrand.zero(basis), X, path, partition).coefficients == 0.)
doubled = vector_integrate(R + R, X, path, partition)
assert np.max(np.abs(doubled.coefficients - 2. * Y.coefficients)) <= 1e-12
assert np.max(np.abs(vector_integrate(3. * R, X, path, partition).coefficients - 3. * Y.coefficients)) <= 1e-12
print('Weak identity ok')

# Distribution paths
stopped = Y.stopped(0.5)
assert np.array_equal(stopped.at(0.75).dual_coefficients, Y.at(0.5).dual_coefficients)
try:
    Y.at(0.123456)
except ContractError:
    pass
else:
    raise AssertionError('a time outside the stored ones was read')
try:
    DistributionPathSemimartingale(Y).dual_coefficients(path, [0.5], left=True)
except ContractError:
    pass
else:
    raise AssertionError('left limits were read from a distribution path')
assert Y.sup_dual_distance(Y, 1) == 0.
assert abs(Y.offset(basis.dual_unit(0)).sup_dual_distance(Y, 0) - 1.) <= 1e-12
try:
    Y.sup_dual_distance(DistributionPath(Y.times, np.zeros((Y.times.size, 32)), get_basis(32, 160)))
except DimensionError:
    pass
else:
    raise AssertionError('distribution paths of different truncations were compared')
frame = Y.to_dataframe()
assert list(frame.columns) == ['t', 'j', 'f_j'] and len(frame) == Y.times.size * 16

# Integrating against the integral
h = ElementaryScalarIntegrand.from_constants([0., 0.25, 0.5, 1.], [1., -0.5, 0.25], a0=0.5)
H = TestFunctionIntegrand([h, ElementaryScalarIntegrand.indicator(0.125, 0.75, -1.)], [e0, e1])
left, right = integrate_then_integrate(H, R, X, path, partition)
assert np.max(np.abs(left - right)) <= 1e-10, np.max(np.abs(left - right))
print('Associativity ok')

# Localization
localized = LocalizedIntegrand(R, [StoppingTime('hitting', 0.5), StoppingTime('hitting', 1.),
                                   StoppingTime('deterministic', 1.)])
pasted = localize_integrate(localized, X, path, partition)
refined = partition.refined([stopping.evaluate(path) for stopping in localized.stopping_times])
direct = vector_integrate(R, X, path, refined, pasted.times)
assert np.max(np.abs(pasted.coefficients - direct.coefficients)) <= 1e-12
try:
    localize_integrate(LocalizedIntegrand(R, [StoppingTime('deterministic', 0.5)]), X, path, partition)
except ContractError:
    pass
else:
    raise AssertionError('localizing times ending before the horizon were accepted')
print('Localization ok')

# Projections P_n ∘ R converge to R
wide = TensorIntegrand([tanh], [e0], [Distribution(rng.normal(size=16), basis=basis)])
distances = [vector_integrate(wide.projected(n_terms), X, path, partition).sup_dual_distance(
    vector_integrate(wide, X, path, partition), 0) for n_terms in (1, 2, 4, 8, 12, 16)]
assert all(later <= earlier + 1e-12 for earlier, later in zip(distances, distances[1:])), distances
assert distances[0] > 0. and distances[-1] == 0.
print('Projections ok')

# Stopping the driver stops the integral
for tau in (0.25, 0.5, 0.75):
    stopped_integral = vector_integrate(R, X, stop_path(path, tau), partition, Y.times)
    assert np.max(np.abs(stopped_integral.coefficients - Y.stopped(tau).coefficients)) <= 1e-12
print('Stopped integrals ok')

# Convergence of Riemann sums under refinement
driver = ScaledDriverSemimartingale(basis.dual_unit(0))
single = TensorIntegrand([tanh], [e0], [basis.dual_unit(1)])
paths = SemimartingaleSpec(sigma=1., jump_intensity=1., jump_sd=0.5).simulate_ensemble(512, 200, seed=4)
report = riemann_convergence(single, driver, paths, RandomPartition.dyadic_sequence([4, 5, 6, 7, 8, 9]))
print(report.to_markdown())
assert report.levels == [4., 5., 6., 7., 8., 9.]
assert report.slope <= -0.4, report.slope
assert all(0. <= p <= 1. for p in report.ucp_probabilities)
assert report.reference_distances[-1] < report.reference_distances[0]
assert 'Fitted log2 slope: -' in report.to_markdown()

few = paths[:20]
sequences = [[RandomPartition.jump_refined(level, p) for level in (4, 5, 6)] for p in few]
report = riemann_convergence(single, driver, few, sequences, eps=1e-3)
for k in range(2):
    first, second = [], []
    for p, sequence in zip(few, sequences):
        times = evaluation_times(p, sequence[-1])
        first.append(vector_integrate(single, driver, p, sequence[k + 1], times))
        second.append(vector_integrate(single, driver, p, sequence[k], times))
    assert report.ucp_probabilities[k] == ucp_dual_estimate(first, second, 0, 1., 1e-3)
assert riemann_vector(single, driver, paths[0], RandomPartition.dyadic_sequence([4, 5, 6])).replicas == 1
try:
    riemann_convergence(single, driver, few, sequences[:3])
except ValueError:
    pass
else:
    raise AssertionError('fewer partition sequences than paths were accepted')

# Constant integrands against a drift telescope at every partition
drift = SemimartingaleSpec(mu=1.).simulate(256, 0)
constant = TensorIntegrand([CagladScalarIntegrand(ConstantCoefficient(1.))], [e0], [basis.dual_unit(0)])
exact = riemann_vector(constant, driver, drift, RandomPartition.dyadic_sequence([3, 4, 5, 6]))
assert exact.exact and np.isnan(exact.slope)
assert 'Fitted log2 slope: exact at every level' in exact.to_markdown()
print('Riemann convergence ok')
