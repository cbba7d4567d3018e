"""
Hermite-function model of the Schwartz space and of tempered distributions.

Test functions are coefficient vectors in the L²-orthonormal Hermite basis, the
eigenbasis of L = -d²/dx² + x² with eigenvalues 2j + 1. Distributions are dual
coefficient vectors, their values on the basis functions.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, List

import numpy as np
from numpy.polynomial.hermite import hermgauss
from dessia_common.core import DessiaObject

logger = logging.getLogger(__name__)

PI_QUARTER = math.pi ** -0.25
SQRT2 = math.sqrt(2.)
SHIFT_CHUNK = 512


class DimensionError(ValueError):
    """Coefficient vectors of different truncations were combined."""


def iterate_hermite(x, n_functions: int):
    """
    Yields h_0(x), ..., h_{n_functions - 1}(x) with the stable three-term recurrence
    h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1}.
    """
    x = np.asarray(x, dtype=float)
    previous = PI_QUARTER * np.exp(-0.5 * x ** 2)
    yield previous
    if n_functions < 2:
        return
    current = SQRT2 * x * previous
    yield current
    for n in range(1, n_functions - 1):
        previous, current = current, math.sqrt(2. / (n + 1)) * x * current - math.sqrt(n / (n + 1.)) * previous
        yield current


def hermite_functions(x, n_functions: int):
    """Array of shape x.shape + (n_functions,) holding h_j(x)."""
    x = np.asarray(x, dtype=float)
    values = np.empty(x.shape + (n_functions,))
    for j, h_j in enumerate(iterate_hermite(x, n_functions)):
        values[..., j] = h_j
    return values


def hermite_series(x, coefficients):
    """
    Evaluates Σ c_j h_j(x), stopping the recurrence at the last nonzero coefficient.
    Works elementwise on x of any shape.
    """
    x = np.asarray(x, dtype=float)
    coefficients = np.asarray(coefficients, dtype=float)
    nonzero = np.flatnonzero(coefficients)
    if nonzero.size == 0:
        return np.zeros(x.shape)
    total = np.zeros(x.shape)
    for j, h_j in enumerate(iterate_hermite(x, int(nonzero[-1]) + 1)):
        if coefficients[j] != 0.:
            total += coefficients[j] * h_j
    return total


def check_index(n: int, truncation: int = None):
    """Basis indices run over 0 ≤ n, and n < truncation when a truncation is given."""
    if n < 0:
        raise IndexError(f'Hermite index must be nonnegative, got {n}')
    if truncation is not None and n >= truncation:
        raise IndexError(f'basis index {n} outside [0, {truncation})')


def eval_hermite(n: int, x, truncation: int = None):
    """
    Orthonormal Hermite function h_n at x.

    :param n: Basis index, nonnegative
    :type n: int
    :param x: Evaluation point(s)
    :type x: float
    :param truncation: Number of basis functions n must stay below, unbounded if None
    :type truncation: int
    """
    check_index(n, truncation)
    for j, h_j in enumerate(iterate_hermite(x, n + 1)):
        if j == n:
            return h_j if np.ndim(h_j) else float(h_j)


class HermiteBasis(DessiaObject):
    """
    Truncated Hermite basis with its Gauss-Hermite quadrature tables.

    :param truncation: Number N of retained Hermite functions
    :type truncation: int

    :param quad_order: Number Q of quadrature nodes, at least 2N
    :type quad_order: int
    """
    _standalone_in_db = True
    _eq_is_data_eq = False
    _non_serializable_attributes = ['nodes', 'weights', 'node_functions', 'eigenvalues']

    def __init__(self, truncation: int = 64, quad_order: int = 160, name: str = ''):
        if truncation < 1:
            raise ValueError(f'truncation must be positive, got {truncation}')
        if quad_order < 2 * truncation:
            raise ValueError(f'quad_order must be at least 2 * truncation = {2 * truncation}, got {quad_order}')
        self.truncation = truncation
        self.quad_order = quad_order
        DessiaObject.__init__(self, name=name)

        self.nodes, _ = hermgauss(quad_order)
        # w_i exp(x_i²) = 1 / (Q h_{Q-1}(x_i)²), free of the overflow in exp(x_i²)
        last = hermite_functions(self.nodes, quad_order)[:, -1]
        self.weights = 1. / (quad_order * last ** 2)
        self.node_functions = hermite_functions(self.nodes, truncation)
        self.eigenvalues = 2. * np.arange(truncation) + 1.
        self._differentiation_matrix = None
        logger.debug('Hermite basis N=%d Q=%d built', truncation, quad_order)

    def eval_hermite(self, n: int, x):
        return eval_hermite(n, x, self.truncation)

    def functions(self, x):
        return hermite_functions(x, self.truncation)

    def evaluate(self, coefficients, x):
        return hermite_series(x, coefficients)

    def project(self, node_values):
        """
        Quadrature estimate of ∫ f h_j for f given by its values at the nodes.
        A (Q, K) array of values gives an (N, K) array of coefficients.
        """
        node_values = np.asarray(node_values, dtype=float)
        if node_values.ndim == 1:
            return self.node_functions.T @ (self.weights * node_values)
        return self.node_functions.T @ (self.weights[:, None] * node_values)

    def analyze(self, function: Callable) -> 'TestFunction':
        """Projects a pointwise-evaluable function onto span{h_0, ..., h_{N-1}}."""
        return TestFunction(self.project(function(self.nodes)), basis=self)

    def unit(self, index: int) -> 'TestFunction':
        check_index(index, self.truncation)
        coefficients = np.zeros(self.truncation)
        coefficients[index] = 1.
        return TestFunction(coefficients, basis=self, name=f'e{index}')

    def dual_unit(self, index: int) -> 'Distribution':
        check_index(index, self.truncation)
        coefficients = np.zeros(self.truncation)
        coefficients[index] = 1.
        return Distribution(coefficients, basis=self, name=f'dual_e{index}')

    def zero(self) -> 'TestFunction':
        return TestFunction(np.zeros(self.truncation), basis=self)

    def scales(self, r: int):
        """Weights (1 + λ_j)^r of the seminorm scale."""
        return (1. + self.eigenvalues) ** r

    @property
    def differentiation_matrix(self):
        """Matrix D with (D c)_j = sqrt((j+1)/2) c_{j+1} - sqrt(j/2) c_{j-1}."""
        if self._differentiation_matrix is None:
            index = np.arange(self.truncation - 1)
            matrix = np.zeros((self.truncation, self.truncation))
            matrix[index, index + 1] = np.sqrt((index + 1) / 2.)
            matrix[index + 1, index] = -np.sqrt((index + 1) / 2.)
            self._differentiation_matrix = matrix
        return self._differentiation_matrix

    @staticmethod
    def hilbert_schmidt_partial_sum(n_terms: int, beta: float = 1.) -> float:
        """Σ_{j<n_terms} (1 + λ_j)^(-2β), finite for β > 1/4."""
        eigenvalues = 2. * np.arange(n_terms) + 1.
        return float(np.sum((1. + eigenvalues) ** (-2. * beta)))


@lru_cache(maxsize=None)
def get_basis(truncation: int = 64, quad_order: int = 160) -> HermiteBasis:
    """Shared read-only basis for a (truncation, quad_order) pair."""
    return HermiteBasis(truncation=truncation, quad_order=quad_order)


def _default_basis(size: int) -> HermiteBasis:
    return get_basis(size, max(160, 2 * size))


class TestFunction(DessiaObject):
    """
    Test function φ = Σ c_j h_j of the truncated Hermite model.

    :param coefficients: Coefficients c_j of the L²-orthonormal expansion
    :type coefficients: List[float]

    :param basis: Basis the coefficients refer to, the default one of matching size if None
    :type basis: HermiteBasis
    """
    _standalone_in_db = False
    _eq_is_data_eq = False
    _non_serializable_attributes = ['basis']

    def __init__(self, coefficients: List[float], basis: HermiteBasis = None, name: str = ''):
        coefficients = np.array(coefficients, dtype=float)
        if basis is None:
            basis = _default_basis(coefficients.size)
        if coefficients.shape != (basis.truncation,):
            raise DimensionError(f'expected {basis.truncation} coefficients, got {coefficients.shape}')
        self.coefficients = coefficients
        self.basis = basis
        DessiaObject.__init__(self, name=name)

    @property
    def truncation(self):
        return self.basis.truncation

    def _check(self, other):
        if other.truncation != self.truncation:
            raise DimensionError(f'truncation mismatch: {self.truncation} and {other.truncation}')

    def seminorm(self, r: int = 0) -> float:
        """
        Hilbertian seminorm ‖φ‖_r = (Σ (1 + λ_j)^(2r) c_j²)^(1/2).

        :param r: Level of the seminorm scale
        :type r: int
        """
        return float(np.sqrt(np.sum(self.basis.scales(2 * r) * self.coefficients ** 2)))

    def inner(self, other: 'TestFunction', r: int = 0) -> float:
        self._check(other)
        return float(np.sum(self.basis.scales(2 * r) * self.coefficients * other.coefficients))

    def evaluate(self, x):
        return self.basis.evaluate(self.coefficients, x)

    def shift(self, offset: float) -> 'TestFunction':
        """
        Projection of x ↦ φ(x + offset), by evaluation at the shifted nodes and
        re-expansion. Accurate while the shifted function stays resolvable at N.
        """
        if offset == 0.:
            return TestFunction(self.coefficients.copy(), basis=self.basis)
        values = self.basis.evaluate(self.coefficients, self.basis.nodes + offset)
        return TestFunction(self.basis.project(values), basis=self.basis)

    def differentiate(self, order: int = 1) -> 'TestFunction':
        """Ladder rule; the top coefficient leaks out of the truncation at each order."""
        coefficients = self.coefficients
        index = np.arange(self.truncation)
        for _ in range(order):
            derivative = np.zeros(self.truncation)
            derivative[:-1] += np.sqrt((index[:-1] + 1) / 2.) * coefficients[1:]
            derivative[1:] -= np.sqrt(index[1:] / 2.) * coefficients[:-1]
            coefficients = derivative
        return TestFunction(coefficients, basis=self.basis)

    def multiply_by_x(self) -> 'TestFunction':
        """Position ladder x h_n = sqrt(n/2) h_{n-1} + sqrt((n+1)/2) h_{n+1}, truncated."""
        index = np.arange(self.truncation)
        product = np.zeros(self.truncation)
        product[:-1] += np.sqrt((index[:-1] + 1) / 2.) * self.coefficients[1:]
        product[1:] += np.sqrt(index[1:] / 2.) * self.coefficients[:-1]
        return TestFunction(product, basis=self.basis)

    def project(self, n_terms: int) -> 'TestFunction':
        """Hermite projection P_n keeping the first n_terms coefficients."""
        coefficients = self.coefficients.copy()
        coefficients[n_terms:] = 0.
        return TestFunction(coefficients, basis=self.basis)

    def support_size(self) -> int:
        nonzero = np.flatnonzero(self.coefficients)
        return int(nonzero[-1]) + 1 if nonzero.size else 0

    def __add__(self, other: 'TestFunction') -> 'TestFunction':
        self._check(other)
        return TestFunction(self.coefficients + other.coefficients, basis=self.basis)

    def __sub__(self, other: 'TestFunction') -> 'TestFunction':
        self._check(other)
        return TestFunction(self.coefficients - other.coefficients, basis=self.basis)

    def __neg__(self) -> 'TestFunction':
        return TestFunction(-self.coefficients, basis=self.basis)

    def __mul__(self, scalar: float) -> 'TestFunction':
        return TestFunction(scalar * self.coefficients, basis=self.basis)

    __rmul__ = __mul__


class Distribution(DessiaObject):
    """
    Tempered distribution T known through its values f_j = T(h_j).

    :param dual_coefficients: Values of T on the basis functions
    :type dual_coefficients: List[float]

    :param regularity_index: Level r₀ at which the dual seminorm is recorded
    :type regularity_index: int
    """
    _standalone_in_db = False
    _eq_is_data_eq = False
    _non_serializable_attributes = ['basis']

    def __init__(self, dual_coefficients: List[float], basis: HermiteBasis = None,
                 regularity_index: int = 0, name: str = ''):
        dual_coefficients = np.array(dual_coefficients, dtype=float)
        if basis is None:
            basis = _default_basis(dual_coefficients.size)
        if dual_coefficients.shape != (basis.truncation,):
            raise DimensionError(f'expected {basis.truncation} dual coefficients, got {dual_coefficients.shape}')
        self.dual_coefficients = dual_coefficients
        self.basis = basis
        self.regularity_index = regularity_index
        DessiaObject.__init__(self, name=name)
        self.regularity_seminorm = self.dual_seminorm(regularity_index)

    @classmethod
    def dirac(cls, position: float, basis: HermiteBasis = None) -> 'Distribution':
        """Truncated projection of δ_position, the dual coefficients being h_j(position)."""
        basis = basis or get_basis()
        return cls(basis.functions(position), basis=basis, regularity_index=1, name=f'dirac_{position}')

    @classmethod
    def from_test_function(cls, function: TestFunction) -> 'Distribution':
        """The L² functional ψ ↦ ∫ φ ψ."""
        return cls(function.coefficients.copy(), basis=function.basis)

    @property
    def truncation(self):
        return self.basis.truncation

    def _check(self, other):
        if other.truncation != self.truncation:
            raise DimensionError(f'truncation mismatch: {self.truncation} and {other.truncation}')

    def pair(self, function: TestFunction) -> float:
        self._check(function)
        return float(np.dot(self.dual_coefficients, function.coefficients))

    def dual_seminorm(self, r: int = 0) -> float:
        """p′_r(T) = (Σ (1 + λ_j)^(-2r) f_j²)^(1/2)."""
        return float(np.sqrt(np.sum(self.basis.scales(-2 * r) * self.dual_coefficients ** 2)))

    def density(self, x):
        """Values of Σ f_j h_j, the function representing T under the L² pairing."""
        return self.basis.evaluate(self.dual_coefficients, x)

    def derivative(self) -> 'Distribution':
        """Distributional derivative, ⟨∂T, φ⟩ = -T(∂φ)."""
        return Distribution(-self.basis.differentiation_matrix.T @ self.dual_coefficients,
                            basis=self.basis, regularity_index=self.regularity_index + 1)

    def project(self, n_terms: int) -> 'Distribution':
        coefficients = self.dual_coefficients.copy()
        coefficients[n_terms:] = 0.
        return Distribution(coefficients, basis=self.basis, regularity_index=self.regularity_index)

    def _weighted_density(self):
        return self.basis.weights * (self.basis.node_functions @ self.dual_coefficients)

    def convolution_profile(self, function: TestFunction, shifts):
        """
        T(φ(· + a)) for every a in shifts, computed by quadrature against the density
        of T. Equals pair(T, φ.shift(a)) up to quadrature error.
        """
        self._check(function)
        shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
        weighted = self._weighted_density()
        profile = np.empty(shifts.size)
        for start in range(0, shifts.size, SHIFT_CHUNK):
            chunk = shifts[start:start + SHIFT_CHUNK]
            values = hermite_series(self.basis.nodes[:, None] + chunk[None, :], function.coefficients)
            profile[start:start + SHIFT_CHUNK] = weighted @ values
        return profile

    def convolution_matrix(self, shifts):
        """(K, N) array of T(h_j(· + a_k))."""
        shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
        weighted = self._weighted_density()
        matrix = np.empty((shifts.size, self.truncation))
        for start in range(0, shifts.size, SHIFT_CHUNK):
            chunk = shifts[start:start + SHIFT_CHUNK]
            points = self.basis.nodes[:, None] + chunk[None, :]
            for j, h_j in enumerate(iterate_hermite(points, self.truncation)):
                matrix[start:start + SHIFT_CHUNK, j] = weighted @ h_j
        return matrix

    def __add__(self, other: 'Distribution') -> 'Distribution':
        self._check(other)
        return Distribution(self.dual_coefficients + other.dual_coefficients, basis=self.basis,
                            regularity_index=max(self.regularity_index, other.regularity_index))

    def __sub__(self, other: 'Distribution') -> 'Distribution':
        return self + (-other)

    def __neg__(self) -> 'Distribution':
        return Distribution(-self.dual_coefficients, basis=self.basis, regularity_index=self.regularity_index)

    def __mul__(self, scalar: float) -> 'Distribution':
        return Distribution(scalar * self.dual_coefficients, basis=self.basis,
                            regularity_index=self.regularity_index)

    __rmul__ = __mul__
