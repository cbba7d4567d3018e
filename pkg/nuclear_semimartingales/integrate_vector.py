"""
Vector-valued stochastic integral ∫R dX for finite-rank operator integrands
R(t)f = Σ_k h_k(t) ⟨f, H_k⟩ G_k, built coefficient by coefficient from the weak
identity ⟨∫R dX, ψ⟩ = ∫R′ψ dX.
"""
import logging
from typing import List

import numpy as np
import pandas as pd
import plot_data
from plot_data.colors import BLACK, RED
from scipy.stats import linregress
from dessia_common.core import DessiaObject
from dessia_common.decorators import markdown_view, plot_data_view

from nuclear_semimartingales.hermite_core import DimensionError, Distribution, HermiteBasis, TestFunction
from nuclear_semimartingales.paths import CadlagPath, ContractError, RandomPartition, StoppingTime
from nuclear_semimartingales.integrate_scalar import (CylindricalSemimartingale, ProductScalarIntegrand,
                                                      ScalarIntegrand, StoppedScalarIntegrand,
                                                      TestFunctionIntegrand, evaluation_times,
                                                      integrate_elementary, riemann_scalar)

logger = logging.getLogger(__name__)

OVERLAP_TOLERANCE = 1e-12
# successive differences at or below this are rounding of identical sums
EXACT_DIFFERENCE = 1e-12


class TensorIntegrand(DessiaObject):
    """
    Finite-rank integrand R(t)f = Σ_k h_k(t) ⟨f, H_k⟩ G_k, with dual action
    R′(t)ψ = Σ_k h_k(t) ⟨G_k, ψ⟩ H_k.

    :param integrands: Scalar predictable processes h_k
    :type integrands: List[ScalarIntegrand]

    :param test_functions: Test functions H_k
    :type test_functions: List[TestFunction]

    :param distributions: Distributions G_k
    :type distributions: List[Distribution]
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, integrands: List[ScalarIntegrand], test_functions: List[TestFunction],
                 distributions: List[Distribution], basis: HermiteBasis = None, name: str = ''):
        if not len(integrands) == len(test_functions) == len(distributions):
            raise ValueError('every term needs a scalar integrand, a test function and a distribution')
        if basis is None:
            if not test_functions:
                raise ValueError('a basis is needed for an integrand without terms')
            basis = test_functions[0].basis
        for function, distribution in zip(test_functions, distributions):
            if function.truncation != basis.truncation or distribution.truncation != basis.truncation:
                raise DimensionError(f'term truncations differ from {basis.truncation}')
        self.integrands = integrands
        self.test_functions = test_functions
        self.distributions = distributions
        self.basis = basis
        DessiaObject.__init__(self, name=name)

    @classmethod
    def zero(cls, basis: HermiteBasis) -> 'TensorIntegrand':
        return cls([], [], [], basis=basis, name='zero')

    @property
    def terms(self):
        return list(zip(self.integrands, self.test_functions, self.distributions))

    def apply(self, path: CadlagPath, t: float, distribution: Distribution) -> Distribution:
        """R(t)f."""
        total = Distribution(np.zeros(self.basis.truncation), basis=self.basis)
        for integrand, function, target in self.terms:
            total = total + (integrand.value_at(path, t) * distribution.pair(function)) * target
        return total

    def dual_apply(self, path: CadlagPath, t: float, function: TestFunction) -> TestFunction:
        """R′(t)ψ = Σ_k h_k(t) ⟨G_k, ψ⟩ H_k, with h_k read predictably at t."""
        total = self.basis.zero()
        for integrand, test_function, distribution in self.terms:
            total = total + (integrand.value_at(path, t) * distribution.pair(function)) * test_function
        return total

    def dual_integrand(self, function: TestFunction) -> TestFunctionIntegrand:
        """The process R′ψ."""
        return TestFunctionIntegrand(list(self.integrands),
                                     [distribution.pair(function) * test_function
                                      for _, test_function, distribution in self.terms])

    def compose_dual(self, integrand: TestFunctionIntegrand) -> TestFunctionIntegrand:
        """R′(H) for H = Σ_m g_m ψ_m: Σ_{m,k} g_m h_k ⟨G_k, ψ_m⟩ H_k."""
        scalars, functions = [], []
        for outer, function in integrand.terms:
            for inner, test_function, distribution in self.terms:
                scalars.append(ProductScalarIntegrand(outer, inner))
                functions.append(distribution.pair(function) * test_function)
        return TestFunctionIntegrand(scalars, functions)

    def stopped(self, stopping: StoppingTime) -> 'TensorIntegrand':
        """R 1_{[0, τ]}."""
        return TensorIntegrand([StoppedScalarIntegrand(integrand, stopping) for integrand in self.integrands],
                               list(self.test_functions), list(self.distributions), basis=self.basis)

    def projected(self, n_terms: int) -> 'TensorIntegrand':
        """P_n ∘ R."""
        return TensorIntegrand(list(self.integrands), list(self.test_functions),
                               [distribution.project(n_terms) for distribution in self.distributions],
                               basis=self.basis)

    def __add__(self, other: 'TensorIntegrand') -> 'TensorIntegrand':
        return TensorIntegrand(self.integrands + other.integrands, self.test_functions + other.test_functions,
                               self.distributions + other.distributions, basis=self.basis)

    def __mul__(self, scalar: float) -> 'TensorIntegrand':
        return TensorIntegrand(list(self.integrands), list(self.test_functions),
                               [scalar * distribution for distribution in self.distributions], basis=self.basis)

    __rmul__ = __mul__


class LocalizedIntegrand(DessiaObject):
    """
    Possibly unbounded tensor integrand with a localizing sequence of stopping times.

    :param base: Integrand valid on every stochastic interval [0, τ_n]
    :type base: TensorIntegrand

    :param stopping_times: Nondecreasing localizing times, the last one reaching the horizon
    :type stopping_times: List[StoppingTime]
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, base: TensorIntegrand, stopping_times: List[StoppingTime], name: str = ''):
        if not stopping_times:
            raise ValueError('at least one localizing time is needed')
        self.base = base
        self.stopping_times = stopping_times
        DessiaObject.__init__(self, name=name)


class DistributionPath(DessiaObject):
    """
    Trajectory of a distribution-valued process through its dual coefficients f_j(t).

    :param times: Evaluation times
    :type times: List[float]

    :param coefficients: Array of shape (len(times), N)
    :type coefficients: List[List[float]]
    """
    _standalone_in_db = False
    _eq_is_data_eq = False
    _non_serializable_attributes = ['basis']

    def __init__(self, times: List[float], coefficients: List[List[float]], basis: HermiteBasis,
                 name: str = ''):
        times = np.asarray(times, dtype=float)
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (times.size, basis.truncation):
            raise DimensionError(f'expected coefficients of shape {(times.size, basis.truncation)}, '
                                 f'got {coefficients.shape}')
        self.times = times
        self.coefficients = coefficients
        self.basis = basis
        DessiaObject.__init__(self, name=name)

    @property
    def truncation(self):
        return self.basis.truncation

    def _check(self, other: 'DistributionPath'):
        if other.truncation != self.truncation:
            raise DimensionError(f'truncation mismatch: {self.truncation} and {other.truncation}')
        if other.times.shape != self.times.shape or np.any(other.times != self.times):
            raise ValueError('distribution paths are sampled at different times')

    def index_of(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        index = np.clip(np.searchsorted(self.times, times), 0, self.times.size - 1)
        if np.any(self.times[index] != times):
            raise ContractError('requested times are not stored in this distribution path')
        return index

    def pair(self, function: TestFunction):
        """Trajectory t ↦ Σ c_j f_j(t)."""
        if function.truncation != self.truncation:
            raise DimensionError(f'truncation mismatch: {self.truncation} and {function.truncation}')
        return self.coefficients @ function.coefficients

    def at(self, t: float) -> Distribution:
        return Distribution(self.coefficients[self.index_of(t)[0]], basis=self.basis)

    def stopped(self, tau: float) -> 'DistributionPath':
        """t ↦ Y_{t∧τ}; τ must be one of the stored times."""
        return DistributionPath(self.times, self.coefficients[self.index_of(np.minimum(self.times, tau))],
                                basis=self.basis)

    def dual_seminorm_trajectory(self, r: int = 0):
        return np.sqrt(self.coefficients ** 2 @ self.basis.scales(-2 * r))

    def sup_dual_distance(self, other: 'DistributionPath', r: int = 0, horizon: float = None) -> float:
        """sup_{t≤horizon} p′_r(Y_t - Z_t)."""
        self._check(other)
        horizon = self.times[-1] if horizon is None else horizon
        difference = (self - other).dual_seminorm_trajectory(r)
        return float(np.max(difference[self.times <= horizon]))

    def __add__(self, other: 'DistributionPath') -> 'DistributionPath':
        self._check(other)
        return DistributionPath(self.times, self.coefficients + other.coefficients, basis=self.basis)

    def __sub__(self, other: 'DistributionPath') -> 'DistributionPath':
        self._check(other)
        return DistributionPath(self.times, self.coefficients - other.coefficients, basis=self.basis)

    def __mul__(self, scalar: float) -> 'DistributionPath':
        return DistributionPath(self.times, scalar * self.coefficients, basis=self.basis)

    __rmul__ = __mul__

    def offset(self, distribution: Distribution) -> 'DistributionPath':
        """Y_t + D for a constant distribution D."""
        return DistributionPath(self.times, self.coefficients + distribution.dual_coefficients[None, :],
                                basis=self.basis)

    def to_dataframe(self) -> pd.DataFrame:
        n_times, truncation = self.coefficients.shape
        return pd.DataFrame({'t': np.repeat(self.times, truncation),
                             'j': np.tile(np.arange(truncation), n_times),
                             'f_j': self.coefficients.ravel()})

    @plot_data_view("Dual seminorm")
    def plot_data(self):
        elements = [{'t': t, 'p0': value} for t, value in zip(self.times, self.dual_seminorm_trajectory(0))]
        dataset = plot_data.Dataset(elements=elements, name=self.name or 'p′_0',
                                    tooltip=plot_data.Tooltip(attributes=['t', 'p0']),
                                    point_style=plot_data.PointStyle(color_fill=RED, color_stroke=BLACK),
                                    edge_style=plot_data.EdgeStyle(color_stroke=RED))
        return plot_data.Graph2D(graphs=[dataset], x_variable='t', y_variable='p0')


class DistributionPathSemimartingale(CylindricalSemimartingale):
    """A computed DistributionPath used as an integrator; only its stored times can be read."""

    def __init__(self, distribution_path: DistributionPath, name: str = ''):
        self.distribution_path = distribution_path
        CylindricalSemimartingale.__init__(self, distribution_path.basis, name=name)

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        if left:
            raise ContractError('left limits are not stored in a distribution path')
        return self.distribution_path.coefficients[self.distribution_path.index_of(times)]


class ConvergenceReport(DessiaObject):
    """
    Successive-refinement distances of Riemann sums.

    :param levels: Mesh levels -log₂(mesh) of the partitions, the dyadic level for dyadic ones
    :type levels: List[float]

    :param successive_differences: Mean over replicas of sup_t p′_r(Y_{n+1} - Y_n), one per level but the last
    :type successive_differences: List[float]

    :param reference_distances: Mean over replicas of sup_t p′_r(Y_n - Y_ref), Y_ref the jump-refined finest sum
    :type reference_distances: List[float]

    :param ucp_probabilities: Frequency of sup_t p′_r(Y_{n+1} - Y_n) ≥ eps, one per level but the last
    :type ucp_probabilities: List[float]
    """
    _standalone_in_db = True

    def __init__(self, levels: List[float], successive_differences: List[float], reference_distances: List[float],
                 ucp_probabilities: List[float], replicas: int, r: int = 0, eps: float = 0.01, name: str = ''):
        self.levels = levels
        self.successive_differences = successive_differences
        self.reference_distances = reference_distances
        self.ucp_probabilities = ucp_probabilities
        self.replicas = replicas
        self.r = r
        self.eps = eps
        DessiaObject.__init__(self, name=name)

    @property
    def exact(self) -> bool:
        """Every refinement reproduces the same sums."""
        return not np.any(np.asarray(self.successive_differences) > EXACT_DIFFERENCE)

    @property
    def slope(self) -> float:
        """log₂ rate fitted on the successive differences above rounding; nan when fewer than two remain."""
        differences = np.asarray(self.successive_differences, dtype=float)
        positive = differences > EXACT_DIFFERENCE
        if np.count_nonzero(positive) < 2:
            return float('nan')
        levels = np.asarray(self.levels[:-1], dtype=float)[positive]
        return float(linregress(levels, np.log2(differences[positive])).slope)

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({'level': self.levels[:-1],
                             'mean_sup_difference': self.successive_differences,
                             'reference_distance': self.reference_distances[:-1],
                             'ucp_probability': self.ucp_probabilities})

    def slope_text(self) -> str:
        if self.exact:
            return 'exact at every level'
        slope = self.slope
        return 'too few nonzero differences to fit' if np.isnan(slope) else f'{slope:.3f}'

    @markdown_view('Riemann convergence')
    def to_markdown(self, *args, **kwargs) -> str:
        lines = [f'# Riemann sums, {self.replicas} replicas, r = {self.r}', '',
                 '| level | mean sup difference | reference distance | P(≥ eps) |',
                 '|---|---|---|---|']
        for row in self.to_dataframe().itertuples(index=False):
            lines.append(f'| {row.level:g} | {row.mean_sup_difference:.3e} | {row.reference_distance:.3e} '
                         f'| {row.ucp_probability:.3f} |')
        lines.extend(['', f'Fitted log2 slope: {self.slope_text()}'])
        return '\n'.join(lines)


def vector_integrate(R: TensorIntegrand, X: CylindricalSemimartingale, path: CadlagPath,
                     partition: RandomPartition, times=None) -> DistributionPath:
    """
    Y = ∫R dX with f_j(t) = ∫R′h_j dX. Every term contributes I_k(t) G_k where I_k is
    the Riemann integral of h_k H_k.
    """
    if X.truncation != R.basis.truncation:
        raise DimensionError(f'truncation mismatch: {X.truncation} and {R.basis.truncation}')
    times = evaluation_times(path, partition) if times is None else np.asarray(times, dtype=float)
    coefficients = np.zeros((times.size, R.basis.truncation))
    for integrand, function, distribution in R.terms:
        scalar = riemann_scalar(TestFunctionIntegrand([integrand], [function]), X, path, partition, times)
        coefficients += np.outer(scalar, distribution.dual_coefficients)
    return DistributionPath(times, coefficients, basis=R.basis)


def riemann_vector(R: TensorIntegrand, X: CylindricalSemimartingale, path: CadlagPath,
                   partitions: List[RandomPartition], r: int = 0, eps: float = 0.01) -> ConvergenceReport:
    """Riemann sums over a refining sequence of partitions, on one path."""
    return riemann_convergence(R, X, [path], partitions, r=r, eps=eps)


def riemann_convergence(R: TensorIntegrand, X: CylindricalSemimartingale, paths: List[CadlagPath],
                        partitions, r: int = 0, eps: float = 0.01) -> ConvergenceReport:
    """
    Riemann sums over a refining sequence of partitions, compared between successive
    partitions and with the sum over the finest one refined by the jump times.

    :param partitions: One sequence of RandomPartition shared by all paths, or one sequence per path
    """
    # metrics reads DistributionPath from this module
    from nuclear_semimartingales.metrics import ucp_dual_estimate

    sequences = partitions if isinstance(partitions[0], (list, tuple)) else [partitions] * len(paths)
    if len(sequences) != len(paths):
        raise ValueError(f'{len(sequences)} partition sequences for {len(paths)} paths')
    count = len(sequences[0])
    if count < 2 or any(len(sequence) != count for sequence in sequences):
        raise ValueError('every path needs the same number of partitions, at least two')

    sums, successive, reference = [], np.zeros((len(paths), count - 1)), np.zeros((len(paths), count))
    for index, (path, sequence) in enumerate(zip(paths, sequences)):
        finest = sequence[-1].refined(path.jumps_until(sequence[-1].horizon)[0])
        times = evaluation_times(path, finest)
        path_sums = [vector_integrate(R, X, path, partition, times) for partition in sequence]
        limit = vector_integrate(R, X, path, finest, times)
        for k in range(count - 1):
            successive[index, k] = path_sums[k + 1].sup_dual_distance(path_sums[k], r)
        for k, riemann_sum in enumerate(path_sums):
            reference[index, k] = riemann_sum.sup_dual_distance(limit, r)
        sums.append(path_sums)

    horizon = min(path.horizon for path in paths)
    probabilities = [ucp_dual_estimate([path_sums[k + 1] for path_sums in sums], [path_sums[k] for path_sums in sums],
                                       r, horizon, eps) for k in range(count - 1)]
    meshes = np.array([[partition.mesh for partition in sequence] for sequence in sequences]).mean(axis=0)
    levels = (-np.log2(meshes)).tolist()
    logger.info('Riemann sums compared over %d paths at mesh levels %s', len(paths), levels)
    return ConvergenceReport(levels=levels,
                             successive_differences=successive.mean(axis=0).tolist(),
                             reference_distances=reference.mean(axis=0).tolist(),
                             ucp_probabilities=probabilities,
                             replicas=len(paths), r=r, eps=eps)


def localize_integrate(R: LocalizedIntegrand, X: CylindricalSemimartingale, path: CadlagPath,
                       partition: RandomPartition, times=None) -> DistributionPath:
    """
    Pastes the integrals of the stopped integrands R 1_{[0, τ_n]}: the output on
    (τ_{n-1}, τ_n] is the n-th one. The partition is refined by the localizing times.
    """
    taus = [stopping.evaluate(path) for stopping in R.stopping_times]
    if taus[-1] < path.horizon:
        raise ContractError(f'localizing times stop at {taus[-1]} before the horizon {path.horizon}')
    if np.any(np.diff(taus) < 0.):
        raise ContractError('localizing times must be nondecreasing')
    refined = partition.refined(taus)
    times = evaluation_times(path, refined) if times is None else np.asarray(times, dtype=float)
    pasted = np.zeros((times.size, R.base.basis.truncation))
    previous, lower = None, -np.inf
    for stopping, tau in zip(R.stopping_times, taus):
        piece = vector_integrate(R.base.stopped(stopping), X, path, refined, times)
        if previous is not None:
            overlap = times <= lower
            deviation = np.max(np.abs(piece.coefficients[overlap] - previous.coefficients[overlap]), initial=0.)
            if deviation > OVERLAP_TOLERANCE:
                raise ContractError(f'stopped integrals disagree by {deviation} before {lower}')
        window = (times > lower) & (times <= tau)
        pasted[window] = piece.coefficients[window]
        previous, lower = piece, tau
    return DistributionPath(times, pasted, basis=R.base.basis)


def integrate_then_integrate(H: TestFunctionIntegrand, R: TensorIntegrand, X: CylindricalSemimartingale,
                             path: CadlagPath, partition: RandomPartition, times=None):
    """
    Both sides of ∫H dY = ∫R′(H) dX with Y = ∫R dX: the left one integrates H against the
    computed DistributionPath Y, the right one integrates R′(H) against X directly.
    """
    block_times = [t for integrand in H.integrands for t in getattr(integrand, 'block_times', [])]
    times = evaluation_times(path, partition, block_times) if times is None else np.asarray(times, dtype=float)
    Y = vector_integrate(R, X, path, partition, times)
    left = integrate_elementary(H, DistributionPathSemimartingale(Y), path, times)
    right = riemann_scalar(R.compose_dual(H), X, path, partition, times)
    return left, right
