"""
Monte-Carlo estimators of the UCP F-seminorm, a dictionary lower bound for the Émery
F-seminorm and UCP-dual distances between distribution-valued processes.
"""
import logging
from typing import List

import numpy as np
import pandas as pd
from scipy.stats import linregress
from dessia_common.core import DessiaObject

from nuclear_semimartingales.paths import CadlagPath
from nuclear_semimartingales.integrate_scalar import (ConstantCoefficient, ElementaryScalarIntegrand,
                                                      IncrementSignCoefficient, LevelCoefficient, h_dot_z)
from nuclear_semimartingales.integrate_vector import DistributionPath

logger = logging.getLogger(__name__)


class ProcessEnsemble(DessiaObject):
    """
    Replicas of a scalar process sampled on one shared time grid.

    :param times: Shared sampling times, starting at 0
    :type times: List[float]

    :param values: Array of shape (replicas, len(times))
    :type values: List[List[float]]
    """
    _standalone_in_db = True
    _eq_is_data_eq = False

    def __init__(self, times: List[float], values: List[List[float]], name: str = ''):
        times = np.asarray(times, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != times.size:
            raise ValueError(f'trajectories have {values.shape[1]} samples for {times.size} times')
        if values.shape[0] < 1:
            raise ValueError('an ensemble needs at least one replica')
        self.times = times
        self.values = values
        DessiaObject.__init__(self, name=name)

    @classmethod
    def from_paths(cls, paths: List[CadlagPath], times=None, name: str = '') -> 'ProcessEnsemble':
        times = paths[0].grid if times is None else np.asarray(times, dtype=float)
        return cls(times, np.array([path.value(times) for path in paths]), name=name)

    @classmethod
    def constant(cls, times, value: float, count: int = 1) -> 'ProcessEnsemble':
        times = np.asarray(times, dtype=float)
        return cls(times, np.full((count, times.size), float(value)))

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def paths(self) -> List[CadlagPath]:
        return [CadlagPath.from_samples(self.times, values) for values in self.values]

    def head(self, count: int) -> 'ProcessEnsemble':
        """The first count replicas."""
        return ProcessEnsemble(self.times, self.values[:count])

    def _check(self, other: 'ProcessEnsemble'):
        if other.count != self.count:
            raise ValueError(f'replica counts differ: {self.count} and {other.count}')
        if other.times.shape != self.times.shape or np.any(other.times != self.times):
            raise ValueError('ensembles are sampled on different grids')

    def __add__(self, other: 'ProcessEnsemble') -> 'ProcessEnsemble':
        self._check(other)
        return ProcessEnsemble(self.times, self.values + other.values)

    def __sub__(self, other: 'ProcessEnsemble') -> 'ProcessEnsemble':
        self._check(other)
        return ProcessEnsemble(self.times, self.values - other.values)

    def __mul__(self, scalar: float) -> 'ProcessEnsemble':
        return ProcessEnsemble(self.times, scalar * self.values)

    __rmul__ = __mul__


class MetricEstimate(DessiaObject):
    """
    One estimated metric with its series tail bound and Monte-Carlo standard error.
    """
    _standalone_in_db = True

    def __init__(self, metric_name: str, value: float, tail_bound: float, replicas: int, seed: int = 0,
                 standard_error: float = 0., name: str = ''):
        self.metric_name = metric_name
        self.value = value
        self.tail_bound = tail_bound
        self.replicas = replicas
        self.seed = seed
        self.standard_error = standard_error
        DessiaObject.__init__(self, name=name or metric_name)

    def to_row(self):
        return {'metric_name': self.metric_name, 'value': self.value, 'tail_bound': self.tail_bound,
                'replicas': self.replicas, 'seed': self.seed}


def _check_horizon(ensemble: ProcessEnsemble, n_max: int):
    if n_max < 1:
        raise ValueError(f'n_max must be at least 1, got {n_max}')
    if ensemble.horizon < n_max:
        raise ValueError(f'grid horizon {ensemble.horizon} is shorter than n_max = {n_max}')


def _series_scores(times, pathwise, n_max: int):
    """Σ_{n ≤ n_max} 2^-n (1 ∧ pathwise sup up to n), pathwise given as running maxima."""
    scores = np.zeros(pathwise.shape[0])
    for n in range(1, n_max + 1):
        last = np.searchsorted(times, n, side='right') - 1
        scores += 2. ** -n * np.minimum(1., pathwise[:, last])
    return scores


def r_ucp_scores(ensemble: ProcessEnsemble, n_max: int):
    """Per-replica terms Σ_{n ≤ n_max} 2^-n (1 ∧ sup_{t ≤ n} |z_t|)."""
    _check_horizon(ensemble, n_max)
    running_sup = np.maximum.accumulate(np.abs(ensemble.values), axis=1)
    return _series_scores(ensemble.times, running_sup, n_max)


def r_ucp_estimate(ensemble: ProcessEnsemble, n_max: int) -> float:
    """
    Empirical r_ucp; the omitted tail of the series is at most 2^-n_max.
    """
    return float(np.mean(r_ucp_scores(ensemble, n_max)))


def standard_error(scores) -> float:
    scores = np.asarray(scores, dtype=float)
    if scores.size < 2:
        return 0.
    return float(np.std(scores, ddof=1) / np.sqrt(scores.size))


def r_ucp_report(ensemble: ProcessEnsemble, n_max: int, seed: int = 0, metric_name: str = 'r_ucp') -> MetricEstimate:
    scores = r_ucp_scores(ensemble, n_max)
    return MetricEstimate(metric_name, float(np.mean(scores)), 2. ** -n_max, ensemble.count, seed,
                          standard_error(scores))


def d_ucp_estimate(first: ProcessEnsemble, second: ProcessEnsemble, n_max: int) -> float:
    """d_ucp(y, z) = r_ucp(y - z) on replicas paired by index."""
    return r_ucp_estimate(first - second, n_max)


def r_variation_estimate(ensemble: ProcessEnsemble, n_max: int) -> float:
    """Σ 2^-n E[1 ∧ total variation on [0, n]] of the sampled trajectories."""
    _check_horizon(ensemble, n_max)
    variation = np.concatenate([np.zeros((ensemble.count, 1)),
                                np.cumsum(np.abs(np.diff(ensemble.values, axis=1)), axis=1)], axis=1)
    return float(np.mean(_series_scores(ensemble.times, variation, n_max)))


def standard_error_slope(ensemble: ProcessEnsemble, sizes: List[int], n_max: int) -> float:
    """
    log-log slope of the r_ucp standard error against the replica count, the estimate
    at each size using the first replicas of the ensemble.
    """
    if max(sizes) > ensemble.count:
        raise ValueError(f'{max(sizes)} replicas requested from an ensemble of {ensemble.count}')
    scores = r_ucp_scores(ensemble, n_max)
    errors = [standard_error(scores[:size]) for size in sizes]
    return float(linregress(np.log2(sizes), np.log2(errors)).slope)


class IntegrandDictionary(DessiaObject):
    """
    Finite family of elementary integrands bounded by 1. The constant integrand h ≡ 1 is
    always a member.

    :param elements: Elementary integrands with |h| ≤ 1
    :type elements: List[ElementaryScalarIntegrand]

    :param horizon: Horizon the constant integrand covers
    :type horizon: float
    """
    _standalone_in_db = True
    _eq_is_data_eq = False

    def __init__(self, elements: List[ElementaryScalarIntegrand], horizon: float = 1., name: str = ''):
        if not elements:
            raise ValueError('an integrand dictionary cannot be empty')
        for element in elements:
            if element.bound > 1.:
                raise ValueError(f'dictionary element {element.name!r} has bound {element.bound} > 1')
        if not any(element.is_constant(1., horizon) for element in elements):
            elements = [ElementaryScalarIntegrand.constant_one(horizon)] + list(elements)
        self.elements = elements
        self.horizon = horizon
        DessiaObject.__init__(self, name=name)

    @classmethod
    def standard(cls, horizon: float = 1., n_blocks: int = 8, n_random: int = 4,
                 seed: int = 0) -> 'IntegrandDictionary':
        """
        Constants, random-sign blocks, greedy momentum and contrarian blocks on the sign of
        the last block increment, and a tanh level block.
        """
        block_times = np.linspace(0., horizon, n_blocks + 1)
        lag = horizon / n_blocks
        rng = np.random.default_rng(seed)
        elements = [ElementaryScalarIntegrand.constant_one(horizon),
                    ElementaryScalarIntegrand.from_constants(block_times, [-1.] * n_blocks, a0=-1., name='minus_one')]
        for index in range(n_random):
            signs = rng.choice([-1., 1.], size=n_blocks)
            elements.append(ElementaryScalarIntegrand.from_constants(block_times, signs, a0=float(signs[0]),
                                                                     name=f'random_signs_{index}'))
        for direction, label in [(1., 'momentum'), (-1., 'contrarian')]:
            elements.append(ElementaryScalarIntegrand(ConstantCoefficient(direction), block_times,
                                                      [IncrementSignCoefficient(lag, direction)
                                                       for _ in range(n_blocks)],
                                                      name=label))
        elements.append(ElementaryScalarIntegrand(LevelCoefficient('tanh'), block_times,
                                                  [LevelCoefficient('tanh') for _ in range(n_blocks)],
                                                  name='tanh_level'))
        return cls(elements, horizon=horizon, name='standard')

    def extended(self, elements: List[ElementaryScalarIntegrand]) -> 'IntegrandDictionary':
        return IntegrandDictionary(self.elements + list(elements), horizon=self.horizon)


def r_em_report(ensemble: ProcessEnsemble, dictionary: IntegrandDictionary, n_max: int, seed: int = 0,
                metric_name: str = 'r_em_lower_bound') -> MetricEstimate:
    """
    Lower bound of r_em: the largest r_ucp of the elementary integrals (h·z) over the
    dictionary, with the standard error of the maximizing element. Each coefficient reads
    the history of the integrated process.
    """
    if not dictionary.elements:
        raise ValueError('an integrand dictionary cannot be empty')
    if dictionary.horizon < n_max:
        raise ValueError(f'the dictionary covers [0, {dictionary.horizon}], not [0, {n_max}]')
    _check_horizon(ensemble, n_max)
    paths = ensemble.paths()
    best, best_scores = 0., np.zeros(ensemble.count)
    for element in dictionary.elements:
        integrals = ProcessEnsemble(ensemble.times, [h_dot_z(element, path, ensemble.times) for path in paths])
        scores = r_ucp_scores(integrals, n_max)
        value = float(np.mean(scores))
        logger.debug('dictionary element %s: r_ucp %.6g', element.name, value)
        if value > best:
            best, best_scores = value, scores
    return MetricEstimate(metric_name, best, 2. ** -n_max, ensemble.count, seed, standard_error(best_scores))


def r_em_estimate(ensemble: ProcessEnsemble, dictionary: IntegrandDictionary, n_max: int) -> float:
    return r_em_report(ensemble, dictionary, n_max).value


def ucp_dual_estimate(first: List[DistributionPath], second: List[DistributionPath], r: int, horizon: float,
                      eps: float) -> float:
    """Frequency over paired replicas of sup_{t ≤ horizon} p′_r(X_t - Y_t) ≥ eps."""
    if len(first) != len(second):
        raise ValueError(f'replica counts differ: {len(first)} and {len(second)}')
    distances = np.array([x.sup_dual_distance(y, r, horizon) for x, y in zip(first, second)])
    return float(np.mean(distances >= eps))


def estimates_dataframe(estimates: List[MetricEstimate]) -> pd.DataFrame:
    return pd.DataFrame([estimate.to_row() for estimate in estimates],
                        columns=['metric_name', 'value', 'tail_bound', 'replicas', 'seed'])
