"""
Real-valued stochastic integrals ∫H dX of test-function valued predictable integrands
against cylindrical semimartingales in the dual, by the elementary formula and by
Riemann sums over random partitions.
"""
import logging
from typing import List

import numpy as np
from dessia_common.core import DessiaObject

from nuclear_semimartingales.hermite_core import DimensionError, HermiteBasis, TestFunction
from nuclear_semimartingales.paths import CadlagPath, ContractError, PathHistory, RandomPartition, StoppingTime

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-12


# Coefficient functionals: predictable reads of the path history.

class CoefficientFunctional(DessiaObject):
    """A real functional of the path history up to a cutoff time."""
    _standalone_in_db = False
    bound = np.inf

    def evaluate(self, history: PathHistory):
        raise NotImplementedError('the method evaluate must be overloaded by subclasses')


class ConstantCoefficient(CoefficientFunctional):
    """
    :param value: The constant
    :type value: float
    """

    def __init__(self, value: float = 1., name: str = ''):
        self.value = value
        self.bound = abs(value)
        CoefficientFunctional.__init__(self, name=name)

    def evaluate(self, history: PathHistory):
        return np.full(history.cutoffs.shape, float(self.value))


class LevelCoefficient(CoefficientFunctional):
    """
    transform(scale · (z - offset)) read at the cutoff.

    :param transform: One of 'identity', 'tanh', 'clip', 'sign', 'cos'
    :type transform: str
    """
    TRANSFORMS = {'identity': lambda x: x,
                  'tanh': np.tanh,
                  'clip': lambda x: np.clip(x, -1., 1.),
                  'sign': np.sign,
                  'cos': np.cos}

    def __init__(self, transform: str = 'identity', scale: float = 1., offset: float = 0., name: str = ''):
        if transform not in self.TRANSFORMS:
            raise ValueError(f'unknown transform {transform!r}')
        self.transform = transform
        self.scale = scale
        self.offset = offset
        self.bound = np.inf if transform == 'identity' else 1.
        CoefficientFunctional.__init__(self, name=name)

    def evaluate(self, history: PathHistory):
        return self.TRANSFORMS[self.transform](self.scale * (history.value() - self.offset))


class IncrementSignCoefficient(CoefficientFunctional):
    """
    direction · sign(z_t - z_{t-lag}): +1 follows the last move, -1 goes against it.
    """

    def __init__(self, lag: float, direction: float = 1., name: str = ''):
        if lag <= 0.:
            raise ValueError(f'lag must be positive, got {lag}')
        self.lag = lag
        self.direction = direction
        self.bound = abs(direction)
        CoefficientFunctional.__init__(self, name=name)

    def evaluate(self, history: PathHistory):
        return self.direction * np.sign(history.increment(self.lag))


# Scalar predictable integrands.

class ScalarIntegrand(DessiaObject):
    """
    Real predictable process h. Three reads are needed: the value at 0, the value carried
    on each cell (l, r] of a partition, and the predictable value at a time t.
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def initial_value(self, path: CadlagPath) -> float:
        raise NotImplementedError('the method initial_value must be overloaded by subclasses')

    def cell_values(self, path: CadlagPath, lefts, rights):
        raise NotImplementedError('the method cell_values must be overloaded by subclasses')

    def value_at(self, path: CadlagPath, t: float) -> float:
        raise NotImplementedError('the method value_at must be overloaded by subclasses')


class ElementaryScalarIntegrand(ScalarIntegrand):
    """
    h = a_0 1_{0} + Σ_i a_i 1_{(t_i, t_{i+1}]}, each a_i reading the path up to t_i.

    :param a0: Coefficient at time 0
    :type a0: CoefficientFunctional

    :param block_times: Strictly increasing block endpoints t_1 < ... < t_n
    :type block_times: List[float]

    :param coefficients: The n - 1 block coefficients a_i
    :type coefficients: List[CoefficientFunctional]

    :param bound: Bound on every |a_i|
    :type bound: float
    """

    def __init__(self, a0: CoefficientFunctional, block_times: List[float],
                 coefficients: List[CoefficientFunctional], bound: float = 1., name: str = ''):
        block_times = np.asarray(block_times, dtype=float)
        if np.any(np.diff(block_times) <= 0.) or (block_times.size and block_times[0] < 0.):
            raise ValueError('block times must be nonnegative and strictly increasing')
        if len(coefficients) != max(block_times.size - 1, 0):
            raise ValueError(f'{max(block_times.size - 1, 0)} block coefficients expected, got {len(coefficients)}')
        self.a0 = a0
        self.block_times = block_times
        self.coefficients = coefficients
        self.bound = bound
        ScalarIntegrand.__init__(self, name=name)

    @classmethod
    def constant_one(cls, horizon: float) -> 'ElementaryScalarIntegrand':
        """h ≡ 1: a_0 = 1 and a single block (0, T] with coefficient 1."""
        return cls(ConstantCoefficient(1.), [0., horizon], [ConstantCoefficient(1.)], name='one')

    @classmethod
    def from_constants(cls, block_times: List[float], values: List[float], a0: float = 0.,
                       bound: float = None, name: str = '') -> 'ElementaryScalarIntegrand':
        bound = max([abs(a0)] + [abs(v) for v in values]) if bound is None else bound
        return cls(ConstantCoefficient(a0), block_times, [ConstantCoefficient(v) for v in values],
                   bound=bound, name=name)

    @classmethod
    def indicator(cls, start: float, end: float, value: float = 1.) -> 'ElementaryScalarIntegrand':
        """value · 1_{(start, end]}."""
        return cls.from_constants([start, end], [value], name=f'indicator_{start}_{end}')

    def _checked(self, values):
        if np.any(np.abs(values) > self.bound * (1. + BOUND_SLACK)):
            raise ContractError(f'coefficient {np.max(np.abs(values))} exceeds the bound {self.bound}')
        return values

    def is_constant(self, value: float, horizon: float) -> bool:
        """h ≡ value at 0 and on (0, horizon], whatever the path."""
        coefficients = [self.a0] + list(self.coefficients)
        return (self.block_times.size >= 2 and self.block_times[0] == 0. and self.block_times[-1] >= horizon
                and all(isinstance(coefficient, ConstantCoefficient) and coefficient.value == value
                        for coefficient in coefficients))

    def initial_value(self, path: CadlagPath) -> float:
        return float(self._checked(self.a0.evaluate(path.history([0.])))[0])

    def block_values(self, path: CadlagPath):
        """a_i read on the history up to t_i."""
        values = np.array([coefficient.evaluate(path.history([t]))[0]
                           for t, coefficient in zip(self.block_times, self.coefficients)])
        return self._checked(values)

    def cell_values(self, path: CadlagPath, lefts, rights):
        lefts = np.asarray(lefts, dtype=float)
        n_blocks = len(self.coefficients)
        if n_blocks == 0:
            return np.zeros(lefts.shape)
        index = np.searchsorted(self.block_times, lefts, side='right') - 1
        inside = (index >= 0) & (index < n_blocks)
        return np.where(inside, self.block_values(path)[np.clip(index, 0, n_blocks - 1)], 0.)

    def value_at(self, path: CadlagPath, t: float) -> float:
        if t == 0.:
            return self.initial_value(path)
        index = int(np.searchsorted(self.block_times, t, side='left')) - 1
        if 0 <= index < len(self.coefficients):
            return float(self.block_values(path)[index])
        return 0.

    def integrate(self, path: CadlagPath, integrator, times):
        """
        (h·Y)_t = a_0 Y_0 + Σ a_i (Y_{t_{i+1}∧t} - Y_{t_i∧t}) for a scalar process Y
        given as a function of time, adapted to the filtration of path.
        """
        times = np.asarray(times, dtype=float)
        result = self.initial_value(path) * integrator(np.zeros(1))[0] * np.ones(times.shape)
        if not self.coefficients:
            return result
        values = self.block_values(path)
        for a_i, start, end in zip(values, self.block_times[:-1], self.block_times[1:]):
            if a_i != 0.:
                result = result + a_i * (integrator(np.minimum(end, times)) - integrator(np.minimum(start, times)))
        return result


class CagladScalarIntegrand(ScalarIntegrand):
    """
    h(t) = f(history before t) for a coefficient functional f. On a cell (τ_k, τ_{k+1}]
    the value used is f read on the history up to τ_k.
    """

    def __init__(self, functional: CoefficientFunctional, name: str = ''):
        self.functional = functional
        ScalarIntegrand.__init__(self, name=name)

    @property
    def bound(self):
        return self.functional.bound

    def initial_value(self, path: CadlagPath) -> float:
        return float(self.functional.evaluate(path.history([0.]))[0])

    def cell_values(self, path: CadlagPath, lefts, rights):
        return self.functional.evaluate(path.history(lefts))

    def value_at(self, path: CadlagPath, t: float) -> float:
        if t == 0.:
            return self.initial_value(path)
        return float(self.functional.evaluate(path.history([t], strict=True))[0])


class StoppedScalarIntegrand(ScalarIntegrand):
    """h 1_{[0, τ]}."""

    def __init__(self, integrand: ScalarIntegrand, stopping: StoppingTime, name: str = ''):
        self.integrand = integrand
        self.stopping = stopping
        ScalarIntegrand.__init__(self, name=name)

    def initial_value(self, path: CadlagPath) -> float:
        return self.integrand.initial_value(path)

    def cell_values(self, path: CadlagPath, lefts, rights):
        lefts = np.asarray(lefts, dtype=float)
        return np.where(lefts < self.stopping.evaluate(path), self.integrand.cell_values(path, lefts, rights), 0.)

    def value_at(self, path: CadlagPath, t: float) -> float:
        if t <= self.stopping.evaluate(path):
            return self.integrand.value_at(path, t)
        return 0.


class ProductScalarIntegrand(ScalarIntegrand):

    def __init__(self, first: ScalarIntegrand, second: ScalarIntegrand, name: str = ''):
        self.first = first
        self.second = second
        ScalarIntegrand.__init__(self, name=name)

    def initial_value(self, path: CadlagPath) -> float:
        return self.first.initial_value(path) * self.second.initial_value(path)

    def cell_values(self, path: CadlagPath, lefts, rights):
        return self.first.cell_values(path, lefts, rights) * self.second.cell_values(path, lefts, rights)

    def value_at(self, path: CadlagPath, t: float) -> float:
        return self.first.value_at(path, t) * self.second.value_at(path, t)


class TestFunctionIntegrand(DessiaObject):
    """
    H(t) = Σ_k h_k(t) φ_k. With elementary h_k this is an elementary test-function
    valued integrand.

    :param integrands: The scalar processes h_k
    :type integrands: List[ScalarIntegrand]

    :param test_functions: The test functions φ_k
    :type test_functions: List[TestFunction]
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, integrands: List[ScalarIntegrand], test_functions: List[TestFunction], name: str = ''):
        if len(integrands) != len(test_functions):
            raise ValueError('one test function is needed per scalar integrand')
        truncations = {function.truncation for function in test_functions}
        if len(truncations) > 1:
            raise DimensionError(f'test functions with truncations {sorted(truncations)}')
        self.integrands = integrands
        self.test_functions = test_functions
        DessiaObject.__init__(self, name=name)

    @classmethod
    def constant(cls, function: TestFunction) -> 'TestFunctionIntegrand':
        return cls([CagladScalarIntegrand(ConstantCoefficient(1.))], [function])

    @property
    def terms(self):
        return list(zip(self.integrands, self.test_functions))

    @property
    def is_elementary(self) -> bool:
        return all(isinstance(integrand, ElementaryScalarIntegrand) for integrand in self.integrands)

    def value_at(self, path: CadlagPath, t: float, basis: HermiteBasis = None) -> TestFunction:
        """H(t), the predictable value at t; basis is only needed when H has no term."""
        total = (basis or self.test_functions[0].basis).zero()
        for integrand, function in self.terms:
            total = total + integrand.value_at(path, t) * function
        return total

    def mapped(self, operator) -> 'TestFunctionIntegrand':
        """Σ_k h_k A(φ_k) for a linear map A on test functions."""
        return TestFunctionIntegrand(self.integrands, [operator(function) for function in self.test_functions])

    def __add__(self, other: 'TestFunctionIntegrand') -> 'TestFunctionIntegrand':
        return TestFunctionIntegrand(self.integrands + other.integrands, self.test_functions + other.test_functions)

    def __mul__(self, scalar: float) -> 'TestFunctionIntegrand':
        return self.mapped(lambda function: scalar * function)

    __rmul__ = __mul__


# Cylindrical semimartingales: linear rules φ ↦ ⟨X, φ⟩ along a driving path.

class CylindricalSemimartingale(DessiaObject):
    """
    X given through its dual coefficients ⟨X_t, h_j⟩ along a driving path; the pairing with
    φ = Σ c_j h_j is Σ c_j ⟨X_t, h_j⟩.
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, basis: HermiteBasis, name: str = ''):
        self.basis = basis
        DessiaObject.__init__(self, name=name)

    @property
    def truncation(self):
        return self.basis.truncation

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        """(K, N) array of ⟨X_t, h_j⟩ (or left limits)."""
        raise NotImplementedError('the method dual_coefficients must be overloaded by subclasses')

    def pairing(self, path: CadlagPath, times, function: TestFunction, left: bool = False):
        if function.truncation != self.truncation:
            raise DimensionError(f'truncation mismatch: {self.truncation} and {function.truncation}')
        return self.dual_coefficients(path, np.atleast_1d(times), left=left) @ function.coefficients


class ScaledDriverSemimartingale(CylindricalSemimartingale):
    """
    X_t = y_t D with y the driver (component 'full'), its continuous part ('continuous')
    or its jump part ('jumps').
    """
    COMPONENTS = ('full', 'continuous', 'jumps')

    def __init__(self, distribution, component: str = 'full', name: str = ''):
        if component not in self.COMPONENTS:
            raise ValueError(f'component must be one of {self.COMPONENTS}, got {component!r}')
        self.distribution = distribution
        self.component = component
        CylindricalSemimartingale.__init__(self, distribution.basis, name=name)

    def driver_values(self, path: CadlagPath, times, left: bool = False):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.component == 'continuous':
            return path.continuous_part(times)
        full = path.left_limit(times) if left else path.value(times)
        if self.component == 'jumps':
            return full - path.continuous_part(times)
        return full

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        return np.outer(self.driver_values(path, times, left), self.distribution.dual_coefficients)

    def pairing(self, path: CadlagPath, times, function: TestFunction, left: bool = False):
        return self.driver_values(path, times, left) * self.distribution.pair(function)


class SumSemimartingale(CylindricalSemimartingale):

    def __init__(self, first: CylindricalSemimartingale, second: CylindricalSemimartingale, name: str = ''):
        if first.truncation != second.truncation:
            raise DimensionError(f'truncation mismatch: {first.truncation} and {second.truncation}')
        self.first = first
        self.second = second
        CylindricalSemimartingale.__init__(self, first.basis, name=name)

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        return self.first.dual_coefficients(path, times, left) + self.second.dual_coefficients(path, times, left)

    def pairing(self, path: CadlagPath, times, function: TestFunction, left: bool = False):
        return self.first.pairing(path, times, function, left) + self.second.pairing(path, times, function, left)


class StoppedSemimartingale(CylindricalSemimartingale):
    """X^τ: every query at t ∧ τ, frozen at X_τ afterwards."""

    def __init__(self, semimartingale: CylindricalSemimartingale, stopping: StoppingTime, name: str = ''):
        self.semimartingale = semimartingale
        self.stopping = stopping
        CylindricalSemimartingale.__init__(self, semimartingale.basis, name=name)

    def _split(self, path, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        tau = self.stopping.evaluate(path)
        return np.minimum(times, tau), times > tau

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        clamped, after = self._split(path, times)
        values = self.semimartingale.dual_coefficients(path, clamped, left=False)
        if left:
            values = np.where(after[:, None], values, self.semimartingale.dual_coefficients(path, clamped, left=True))
        return values

    def pairing(self, path: CadlagPath, times, function: TestFunction, left: bool = False):
        clamped, after = self._split(path, times)
        values = self.semimartingale.pairing(path, clamped, function, left=False)
        if left:
            values = np.where(after, values, self.semimartingale.pairing(path, clamped, function, left=True))
        return values


class DerivativeSemimartingale(CylindricalSemimartingale):
    """Image ∂X of X under the distributional derivative: ⟨∂X_t, φ⟩ = -⟨X_t, ∂φ⟩."""

    def __init__(self, semimartingale: CylindricalSemimartingale, name: str = ''):
        self.semimartingale = semimartingale
        CylindricalSemimartingale.__init__(self, semimartingale.basis, name=name)

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        return -self.semimartingale.dual_coefficients(path, times, left) @ self.basis.differentiation_matrix


# Integrals.

def evaluation_times(path: CadlagPath, partition: RandomPartition = None, extra=()):
    """Grid times merged with the partition times and any extra times, up to the horizon."""
    times = path.grid
    if partition is not None:
        times = np.union1d(times, partition.times[partition.times <= path.horizon])
    if len(extra):
        times = np.union1d(times, np.asarray(extra, dtype=float))
    return times


def h_dot_z(h: ElementaryScalarIntegrand, path: CadlagPath, times=None):
    """
    Elementary integral (h·z)_t = a_0 z_0 + Σ a_i (z_{t_{i+1}∧t} - z_{t_i∧t}),
    at the grid times unless times are given.
    """
    if h.block_times.size and h.block_times[-1] > path.horizon:
        raise ContractError(f'block time {h.block_times[-1]} beyond the horizon {path.horizon}')
    times = path.grid if times is None else np.asarray(times, dtype=float)
    return h.integrate(path, path.value, times)


def integrate_elementary(H: TestFunctionIntegrand, X: CylindricalSemimartingale, path: CadlagPath, times=None):
    """Σ_k (h_k · ⟨X, φ_k⟩)_t."""
    if not H.is_elementary:
        raise ContractError('integrate_elementary needs elementary scalar integrands')
    times = path.grid if times is None else np.asarray(times, dtype=float)
    result = np.zeros(times.shape)
    for integrand, function in H.terms:
        result = result + integrand.integrate(path, lambda s, f=function: X.pairing(path, s, f), times)
    return result


def riemann_scalar(H: TestFunctionIntegrand, X: CylindricalSemimartingale, path: CadlagPath,
                   partition: RandomPartition, times=None):
    """
    Riemann sum ⟨X_0, H(0)⟩ + Σ_k ⟨X_{τ_{k+1}∧t} - X_{τ_k∧t}, H(τ_k)⟩ where H(τ_k) is
    the value H carries on (τ_k, τ_{k+1}]. The sum stays frozen after the last
    partition time.

    :param partition: Random partition σ evaluated on path
    :type partition: RandomPartition
    :param times: Evaluation times, the grid merged with the partition if None
    """
    times = evaluation_times(path, partition) if times is None else np.asarray(times, dtype=float)
    taus = partition.times
    result = np.zeros(times.shape)
    if taus.size < 2:
        for integrand, function in H.terms:
            result = result + integrand.initial_value(path) * X.pairing(path, np.zeros(1), function)[0]
        return result
    cell = np.clip(np.searchsorted(taus, times, side='left') - 1, 0, taus.size - 2)
    for integrand, function in H.terms:
        at_taus = X.pairing(path, taus, function)
        at_times = X.pairing(path, np.minimum(times, taus[-1]), function)
        values = integrand.cell_values(path, taus[:-1], taus[1:])
        partial = np.concatenate([[0.], np.cumsum(values * np.diff(at_taus))])
        result = result + (integrand.initial_value(path) * at_taus[0] + partial[cell]
                           + values[cell] * (at_times - at_taus[cell]))
    return result
