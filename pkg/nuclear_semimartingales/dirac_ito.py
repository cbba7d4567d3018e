"""
Dirac semimartingale X_t = δ_{z_t}, its convolutions T ∗ δ_{z_t}, and a numerical check
of the Itô formula for them.

With g(a) = T(φ(· + a)) the three terms paired with φ read

    A_t = -Σ_k g′(z_{τ_k}) (z_{τ_{k+1}∧t} - z_{τ_k∧t})
    B_t =  Σ_k g″(z_{τ_k}) d⟨z^c⟩ over (τ_k, τ_{k+1}]
    C_t =  Σ_{s≤t} [g(z_s) - g(z_{s-}) - g′(z_{s-}) Δz_s]

and T ∗ δ_{z_t} = T ∗ δ_{z_0} - A_t + ½ B_t + C_t.
"""
import logging
from typing import List

import numpy as np
import pandas as pd
from dessia_common.core import DessiaObject

from nuclear_semimartingales.hermite_core import Distribution, HermiteBasis, TestFunction, hermite_series
from nuclear_semimartingales.paths import CadlagPath, ContractError, RandomPartition, SemimartingaleSpec
from nuclear_semimartingales.integrate_scalar import CylindricalSemimartingale
from nuclear_semimartingales.integrate_vector import DistributionPath

logger = logging.getLogger(__name__)

# 'model' integrates g″ against σ² dτ and is what the verifier uses. 'realized' replaces it with the
# squared continuous increments of the path; it is a diagnostic only and never a default.
BRACKETS = ('model', 'realized')


class DiracSemimartingale(CylindricalSemimartingale):
    """⟨X_t, φ⟩ = φ(z_t); the dual coefficients are h_j(z_t)."""

    def __init__(self, basis: HermiteBasis, name: str = ''):
        CylindricalSemimartingale.__init__(self, basis, name=name)

    def _driver(self, path: CadlagPath, times, left: bool):
        return path.left_limit(times) if left else path.value(times)

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        return self.basis.functions(self._driver(path, np.atleast_1d(times), left))

    def pairing(self, path: CadlagPath, times, function: TestFunction, left: bool = False):
        return hermite_series(self._driver(path, np.atleast_1d(times), left), function.coefficients)


class ConvolvedDiracSemimartingale(CylindricalSemimartingale):
    """X_t = T ∗ δ_{z_t}, so that ⟨X_t, φ⟩ = T(φ(· + z_t))."""

    def __init__(self, distribution: Distribution, name: str = ''):
        self.distribution = distribution
        CylindricalSemimartingale.__init__(self, distribution.basis, name=name)

    def _driver(self, path: CadlagPath, times, left: bool):
        return path.left_limit(times) if left else path.value(times)

    def dual_coefficients(self, path: CadlagPath, times, left: bool = False):
        return self.distribution.convolution_matrix(self._driver(path, np.atleast_1d(times), left))

    def pairing(self, path: CadlagPath, times, function: TestFunction, left: bool = False):
        return self.distribution.convolution_profile(function, self._driver(path, np.atleast_1d(times), left))


def dirac_pair(path: CadlagPath, t: float, function: TestFunction, left: bool = False) -> float:
    """φ(z_t), or φ(z_{t-}) with left=True."""
    z = path.left_limit(t) if left else path.value(t)
    return float(function.evaluate(z))


def conv_pair(distribution: Distribution, offset: float, function: TestFunction) -> float:
    """(T ∗ δ_a)(φ) = T(φ(· + a))."""
    return distribution.pair(function.shift(offset))


class ItoTerms(DessiaObject):
    """
    The Itô terms paired with φ, at the partition times.

    :param convolution: g(z_t) = T(φ(· + z_t))
    :param A: Stochastic-integral term
    :param B: Bracket term
    :param C: Jump-compensation sum, constant between jumps
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, times: List[float], convolution: List[float], A: List[float], B: List[float],
                 C: List[float], bracket: str = 'model', name: str = ''):
        self.times = np.asarray(times, dtype=float)
        self.convolution = np.asarray(convolution, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.bracket = bracket
        DessiaObject.__init__(self, name=name)

    def residuals(self):
        """|g(z_t) - g(z_0) + A_t - ½ B_t - C_t| at every partition time."""
        return np.abs(self.convolution - self.convolution[0] + self.A - 0.5 * self.B - self.C)

    @property
    def residual(self) -> float:
        return float(np.max(self.residuals()))

    def at(self, t: float):
        """(A, B, C) at the last partition time not after t."""
        index = max(int(np.searchsorted(self.times, t, side='right')) - 1, 0)
        return float(self.A[index]), float(self.B[index]), float(self.C[index])

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.times, 'convolution': self.convolution, 'A': self.A, 'B': self.B,
                             'C': self.C, 'residual': self.residuals()})


class ItoDistributionTerms(DessiaObject):
    """The Itô terms as distribution-valued trajectories, before pairing with a test function."""
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, convolution: DistributionPath, A: DistributionPath, B: DistributionPath,
                 C: DistributionPath, bracket: str = 'model', name: str = ''):
        self.convolution = convolution
        self.A = A
        self.B = B
        self.C = C
        self.bracket = bracket
        DessiaObject.__init__(self, name=name)

    def paired(self, function: TestFunction) -> ItoTerms:
        return ItoTerms(self.convolution.times, self.convolution.pair(function), self.A.pair(function),
                        self.B.pair(function), self.C.pair(function), bracket=self.bracket)


def _partition_times(path: CadlagPath, partition: RandomPartition):
    jump_times = path.jump_times[path.jump_times <= path.stop_time]
    missing = ~partition.contains(jump_times)
    if np.any(missing):
        raise ContractError(f'partition misses the jump times {jump_times[missing].tolist()}')
    return partition.times[partition.times <= path.horizon]


def _bracket_increments(path: CadlagPath, spec: SemimartingaleSpec, taus, bracket: str):
    """d⟨z^c⟩ over every partition cell: σ² dτ, or the realized squares for the diagnostic bracket."""
    if bracket not in BRACKETS:
        raise ValueError(f'bracket must be one of {BRACKETS}, got {bracket!r}')
    steps = np.diff(np.minimum(taus, path.stop_time))
    if spec.sigma == 0.:
        return np.zeros(steps.shape)
    if bracket == 'model':
        return spec.sigma ** 2 * steps
    return (np.diff(path.continuous_part(taus)) - spec.mu * steps) ** 2


def _cumulative(increments):
    return np.concatenate([[0.], np.cumsum(increments)])


def _jump_ledger(path: CadlagPath, taus):
    """Jump times up to the stopping time, left limits, sizes and the partition index of each."""
    jump_times, jump_sizes = path.jumps_until(path.stop_time)
    return jump_times, path.left_limit(jump_times), jump_sizes, np.searchsorted(taus, jump_times)


def ito_terms(distribution: Distribution, path: CadlagPath, spec: SemimartingaleSpec, function: TestFunction,
              partition: RandomPartition, bracket: str = 'model') -> ItoTerms:
    """
    Itô terms of T ∗ δ_z paired with φ, as left-point sums over a partition that must
    contain every jump time of the path.
    The bracket term uses σ² dτ unless bracket='realized' asks for the diagnostic variant.
    """
    taus = _partition_times(path, partition)
    z = path.value(taus)
    if bracket == 'realized':
        logger.debug('Realized bracket requested: diagnostic run, not the Itô verifier')
    first, second = function.differentiate(1), function.differentiate(2)
    convolution = distribution.convolution_profile(function, z)
    slope = distribution.convolution_profile(first, z[:-1])
    curvature = distribution.convolution_profile(second, z[:-1])
    A = -_cumulative(slope * np.diff(z))
    B = _cumulative(curvature * _bracket_increments(path, spec, taus, bracket))

    C = np.zeros(taus.size)
    jump_times, lefts, sizes, index = _jump_ledger(path, taus)
    if jump_times.size:
        jumps = (distribution.convolution_profile(function, path.value(jump_times))
                 - distribution.convolution_profile(function, lefts)
                 - distribution.convolution_profile(first, lefts) * sizes)
        np.add.at(C, index, jumps)
        C = np.cumsum(C)
    logger.debug('Itô terms on %d partition times, %d jumps', taus.size, jump_times.size)
    return ItoTerms(taus, convolution, A, B, C, bracket=bracket)


def ito_residual(distribution: Distribution, path: CadlagPath, spec: SemimartingaleSpec, function: TestFunction,
                 partition: RandomPartition, bracket: str = 'model') -> float:
    """sup over the partition times of |T∗δ_{z_t}(φ) - T∗δ_{z_0}(φ) + A_t - ½B_t - C_t|."""
    return ito_terms(distribution, path, spec, function, partition, bracket).residual


def ito_distribution_terms(distribution: Distribution, path: CadlagPath, spec: SemimartingaleSpec,
                           partition: RandomPartition, bracket: str = 'model') -> ItoDistributionTerms:
    """
    The same sums computed on every basis function at once: row k of each trajectory holds
    the dual coefficients against h_j, so that pairing with φ gives ito_terms.
    """
    taus = _partition_times(path, partition)
    basis = distribution.basis
    derivative = basis.differentiation_matrix
    z = path.value(taus)
    convolution = distribution.convolution_matrix(z)
    slope = convolution[:-1] @ derivative
    curvature = slope @ derivative
    A = -np.vstack([np.zeros(basis.truncation), np.cumsum(slope * np.diff(z)[:, None], axis=0)])
    B = np.vstack([np.zeros(basis.truncation),
                   np.cumsum(curvature * _bracket_increments(path, spec, taus, bracket)[:, None], axis=0)])

    C = np.zeros((taus.size, basis.truncation))
    jump_times, lefts, sizes, index = _jump_ledger(path, taus)
    if jump_times.size:
        before = distribution.convolution_matrix(lefts)
        after = distribution.convolution_matrix(path.value(jump_times))
        jumps = after - before - (before @ derivative) * sizes[:, None]
        np.add.at(C, index, jumps)
        C = np.cumsum(C, axis=0)
    return ItoDistributionTerms(*(DistributionPath(taus, values, basis) for values in (convolution, A, B, C)),
                                bracket=bracket)
