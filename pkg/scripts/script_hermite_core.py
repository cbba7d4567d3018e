import math

import numpy as np

from nuclear_semimartingales.hermite_core import (DimensionError, Distribution, HermiteBasis, TestFunction,
                                                  eval_hermite, get_basis)

basis = get_basis(64, 160)
rng = np.random.default_rng(0)
x = np.array([-2., -1., 0., 1., 2.])

# Eigenrelation of the harmonic oscillator
for n in range(21):
    e_n = basis.unit(n)
    operator = -e_n.differentiate(2).evaluate(x) + x ** 2 * e_n.evaluate(x)
    assert np.max(np.abs(operator - (2 * n + 1) * e_n.evaluate(x))) <= 1e-6, n

assert abs(eval_hermite(0, 0.) - math.pi ** -0.25) < 1e-15
assert abs(basis.unit(0).evaluate(1.) - math.pi ** -0.25 * math.exp(-0.5)) < 1e-15
for bad_index in (-1, 64):
    for call in (lambda: basis.eval_hermite(bad_index, 0.), lambda: eval_hermite(bad_index, 0., truncation=64),
                 lambda: basis.unit(bad_index), lambda: basis.dual_unit(bad_index)):
        try:
            call()
        except IndexError:
            pass
        else:
            raise AssertionError(f'index {bad_index} accepted')
try:
    eval_hermite(-1, 0.)
except IndexError:
    pass
else:
    raise AssertionError('a negative index accepted without a truncation')
assert abs(eval_hermite(70, 0.3)) < 1.
try:
    HermiteBasis(truncation=64, quad_order=100)
except ValueError:
    pass
else:
    raise AssertionError('quadrature order below 2N accepted')
print('Hermite functions: eigenrelation and indices ok')

# Seminorm scale and nuclearity
for _ in range(100):
    phi = TestFunction(rng.normal(size=64), basis=basis)
    assert phi.seminorm(0) <= phi.seminorm(1) <= phi.seminorm(2)
    assert abs(phi.seminorm(0) - np.linalg.norm(phi.coefficients)) < 1e-12
for size in (8, 16, 32):
    gap = HermiteBasis.hilbert_schmidt_partial_sum(2 * size) - HermiteBasis.hilbert_schmidt_partial_sum(size)
    assert 0. < gap < 1. / (4 * size)
assert abs(basis.unit(3).seminorm(1) - 8.) < 1e-12
gram = basis.node_functions.T @ (basis.weights[:, None] * basis.node_functions)
assert np.max(np.abs(gram - np.eye(64))) < 1e-10, np.max(np.abs(gram - np.eye(64)))
for _ in range(100):
    T, phi = Distribution(rng.normal(size=64), basis=basis), TestFunction(rng.normal(size=64), basis=basis)
    for r in (0, 1, 2):
        assert abs(T.pair(phi)) <= T.dual_seminorm(r) * phi.seminorm(r) * (1. + 1e-12)
print('Seminorm scale ok')

# Shifts
coefficients = np.zeros(64)
coefficients[:20] = rng.normal(size=20)
phi = TestFunction(coefficients, basis=basis)
points = np.linspace(-2., 2., 41)
for offset in (-1., -0.5, 0.3, 1.):
    deviation = np.max(np.abs(phi.shift(offset).evaluate(points) - phi.evaluate(points + offset)))
    assert deviation <= 1e-6, (offset, deviation)
    assert abs(phi.shift(offset).seminorm(0) - phi.seminorm(0)) <= 1e-6 * phi.seminorm(0)
assert np.array_equal(phi.shift(0.).coefficients, phi.coefficients)
twice = phi.shift(0.5).shift(0.5)
assert np.max(np.abs(twice.evaluate(points) - phi.shift(1.).evaluate(points))) <= 1e-6
assert abs(basis.unit(0).shift(1.).evaluate(0.) - math.pi ** -0.25 * math.exp(-0.5)) <= 1e-6
print('Shifts ok')

# Ladders, projections and arithmetic
e0 = basis.unit(0)
assert np.max(np.abs(e0.multiply_by_x().evaluate(points) - points * e0.evaluate(points))) < 1e-12
assert np.max(np.abs(e0.differentiate().evaluate(points) + points * e0.evaluate(points))) < 1e-12
projected = phi.project(5)
assert np.all(projected.coefficients[5:] == 0.) and projected.support_size() <= 5
assert np.allclose((phi + phi - phi).coefficients, phi.coefficients)
assert np.allclose((2. * phi).coefficients, 2. * phi.coefficients)
assert abs(phi.inner(phi, 1) - phi.seminorm(1) ** 2) < 1e-9 * phi.seminorm(1) ** 2

# Distributions
T = Distribution(rng.normal(size=64), basis=basis)
assert abs(T.derivative().pair(phi) + T.pair(phi.differentiate())) < 1e-10
dirac = Distribution.dirac(0.5, basis)
assert abs(dirac.pair(phi) - phi.evaluate(0.5)) < 1e-12
assert abs(basis.dual_unit(2).dual_seminorm(1) - 1. / 6.) < 1e-15
assert abs((T + T).pair(phi) - 2. * T.pair(phi)) < 1e-12
assert abs(T.regularity_seminorm - T.dual_seminorm(0)) < 1e-15
assert np.all(T.project(10).dual_coefficients[10:] == 0.)
assert abs(Distribution.from_test_function(e0).pair(e0) - 1.) < 1e-15

short = np.zeros(64)
short[:10] = rng.normal(size=10)
kernel = Distribution(short, basis=basis)
shifts = np.array([-1., 0., 0.7])
profile = kernel.convolution_profile(TestFunction(short, basis=basis), shifts)
for offset, value in zip(shifts, profile):
    assert abs(value - kernel.pair(TestFunction(short, basis=basis).shift(offset))) < 1e-8
matrix = kernel.convolution_matrix(shifts)
assert np.max(np.abs(matrix @ short - profile)) < 1e-10

small = get_basis(32, 160)
for combine in (lambda: Distribution(np.zeros(32), basis=small).pair(e0), lambda: small.unit(0) + e0):
    try:
        combine()
    except DimensionError:
        pass
    else:
        raise AssertionError('truncation mismatch accepted')
print('Distributions ok')

# Projection of pointwise functions
assert abs(eval_hermite(2, 0.) + math.pi ** -0.25 / math.sqrt(2.)) < 1e-15
analyzed = basis.analyze(lambda x: eval_hermite(0, x) + 2. * eval_hermite(3, x))
expected = np.zeros(64)
expected[[0, 3]] = [1., 2.]
assert np.max(np.abs(analyzed.coefficients - expected)) < 1e-10
analyzed = basis.analyze(lambda x: x * np.exp(-0.5 * x ** 2))
assert abs(analyzed.coefficients[1] - math.pi ** 0.25 / math.sqrt(2.)) < 1e-10
assert abs(analyzed.coefficients[0]) < 1e-10
print('Analysis ok')
