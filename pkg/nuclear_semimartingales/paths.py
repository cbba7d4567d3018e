"""
Real-valued càdlàg semimartingales built from a drift, a Brownian part and a compound
Poisson part, with their brackets, stopping times and random partitions.
"""
import logging
from typing import Dict, List

import numpy as np
import pandas as pd
import plot_data
from joblib import Parallel, delayed
from plot_data.colors import BLACK, BLUE
from dessia_common.core import DessiaObject
from dessia_common.decorators import plot_data_view

logger = logging.getLogger(__name__)

GRID_JITTER = 1e-6


class ContractError(ValueError):
    """The caller broke the contract of an operation."""


def replica_seed(master_seed: int, index: int) -> int:
    """Seed of one replica; it does not depend on the order replicas are computed in."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def uniform_grid(horizon: float, cells: int):
    grid = np.arange(cells + 1) * (horizon / cells)
    grid[-1] = horizon
    return grid


class SemimartingaleSpec(DessiaObject):
    """
    Law of z_t = z0 + mu t + sigma W_t + Σ_{s≤t} Δz_s, the jumps arriving at rate
    jump_intensity with normal sizes.

    :param z0: Initial value
    :type z0: float

    :param mu: Drift rate per unit time
    :type mu: float

    :param sigma: Diffusion coefficient, nonnegative
    :type sigma: float

    :param jump_intensity: Poisson rate of jumps per unit time, nonnegative
    :type jump_intensity: float

    :param jump_mean: Mean jump size
    :type jump_mean: float

    :param jump_sd: Standard deviation of jump sizes, nonnegative
    :type jump_sd: float

    :param horizon: Time horizon T, positive
    :type horizon: float
    """
    _standalone_in_db = True

    def __init__(self, z0: float = 0., mu: float = 0., sigma: float = 0., jump_intensity: float = 0.,
                 jump_mean: float = 0., jump_sd: float = 0., horizon: float = 1., name: str = ''):
        for field, value in (('sigma', sigma), ('jump_intensity', jump_intensity), ('jump_sd', jump_sd)):
            if value < 0:
                raise ValueError(f'{field} must be nonnegative, got {value}')
        if horizon <= 0:
            raise ValueError(f'horizon must be positive, got {horizon}')
        self.z0 = z0
        self.mu = mu
        self.sigma = sigma
        self.jump_intensity = jump_intensity
        self.jump_mean = jump_mean
        self.jump_sd = jump_sd
        self.horizon = horizon
        DessiaObject.__init__(self, name=name)

    def bracket_continuous(self, t: float) -> float:
        """⟨z^c, z^c⟩_t = σ² t for this model."""
        if not 0. <= t <= self.horizon:
            raise ValueError(f'time {t} outside [0, {self.horizon}]')
        return self.sigma ** 2 * t

    def expected_value(self, t: float) -> float:
        return self.z0 + (self.mu + self.jump_intensity * self.jump_mean) * t

    def simulate(self, grid_cells: int, seed: int) -> 'CadlagPath':
        """
        Samples one path: the continuous part exactly in law on a uniform grid, the jumps
        at uniform times moved off the grid points.

        :param grid_cells: Number M of grid cells
        :type grid_cells: int

        :param seed: Seed of the random stream
        :type seed: int
        """
        if grid_cells < 1:
            raise ValueError(f'grid_cells must be at least 1, got {grid_cells}')
        rng = np.random.default_rng(seed)
        grid = uniform_grid(self.horizon, grid_cells)
        step = self.horizon / grid_cells
        brownian = np.concatenate([[0.], np.cumsum(rng.standard_normal(grid_cells) * np.sqrt(step))])
        continuous = self.z0 + self.mu * grid + self.sigma * brownian

        count = rng.poisson(self.jump_intensity * self.horizon)
        jump_times = np.sort(rng.uniform(0., self.horizon, count))
        jump_sizes = rng.normal(self.jump_mean, self.jump_sd, count)
        jump_times = _move_off_grid(jump_times, step, self.horizon)
        return CadlagPath(grid=grid, continuous_values=continuous, jump_times=jump_times,
                          jump_sizes=jump_sizes)

    def simulate_ensemble(self, grid_cells: int, replicas: int, seed: int, n_jobs: int = 1) -> List['CadlagPath']:
        """Replica i is simulated from replica_seed(seed, i)."""
        logger.info('Simulating %d paths on %d grid cells (n_jobs=%d)', replicas, grid_cells, n_jobs)
        seeds = [replica_seed(seed, index) for index in range(replicas)]
        return Parallel(n_jobs=n_jobs)(delayed(self.simulate)(grid_cells, replica) for replica in seeds)


def _move_off_grid(jump_times, step, horizon):
    offsets = jump_times / step
    on_grid = np.abs(offsets - np.round(offsets)) < 1e-9
    moved = np.where(jump_times + GRID_JITTER * step < horizon,
                     jump_times + GRID_JITTER * step, jump_times - GRID_JITTER * step)
    jump_times = np.sort(np.where(on_grid, moved, jump_times))
    for i in range(1, jump_times.size):
        if jump_times[i] <= jump_times[i - 1]:
            jump_times[i] = jump_times[i - 1] + GRID_JITTER * step
    return jump_times


class CadlagPath(DessiaObject):
    """
    One càdlàg trajectory: the continuous part sampled on a grid and interpolated linearly
    between grid points, plus a ledger of jumps. A path stopped at τ answers every query
    at t ∧ τ.

    :param grid: Strictly increasing times 0 = t_0 < ... < t_M = T
    :type grid: List[float]

    :param continuous_values: Continuous part at the grid times, z_0 included
    :type continuous_values: List[float]

    :param jump_times: Sorted distinct jump times in (0, T]
    :type jump_times: List[float]

    :param jump_sizes: Jump sizes Δz_s
    :type jump_sizes: List[float]

    :param stop_time: Time the path is stopped at, T if None
    :type stop_time: float
    """
    _standalone_in_db = True
    _eq_is_data_eq = False

    def __init__(self, grid: List[float], continuous_values: List[float], jump_times: List[float] = None,
                 jump_sizes: List[float] = None, stop_time: float = None, name: str = ''):
        grid = np.asarray(grid, dtype=float)
        continuous_values = np.asarray(continuous_values, dtype=float)
        jump_times = np.asarray([] if jump_times is None else jump_times, dtype=float)
        jump_sizes = np.asarray([] if jump_sizes is None else jump_sizes, dtype=float)
        if grid.size < 2 or grid[0] != 0. or np.any(np.diff(grid) <= 0.):
            raise ValueError('grid must start at 0 and be strictly increasing')
        if continuous_values.shape != grid.shape:
            raise ValueError('one continuous value is needed per grid time')
        if jump_times.shape != jump_sizes.shape:
            raise ValueError('jump times and sizes differ in length')
        if jump_times.size and (np.any(np.diff(jump_times) <= 0.) or jump_times[0] <= 0.
                                or jump_times[-1] > grid[-1]):
            raise ValueError('jump times must be distinct, sorted and inside (0, T]')
        self.grid = grid
        self.continuous_values = continuous_values
        self.jump_times = jump_times
        self.jump_sizes = jump_sizes
        self.stop_time = grid[-1] if stop_time is None else min(float(stop_time), grid[-1])
        DessiaObject.__init__(self, name=name)
        self._jump_levels = np.concatenate([[0.], np.cumsum(jump_sizes)])

    @classmethod
    def from_samples(cls, times: List[float], values: List[float], name: str = '') -> 'CadlagPath':
        """Trajectory known only at sample times, read as a jump-free path."""
        return cls(grid=times, continuous_values=values, name=name)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def _query(self, times, left: bool):
        scalar = np.ndim(times) == 0
        times = np.atleast_1d(np.asarray(times, dtype=float))
        clamped = np.minimum(times, self.stop_time)
        continuous = np.interp(clamped, self.grid, self.continuous_values)
        index = np.searchsorted(self.jump_times, clamped, side='right')
        if left:
            # past the stopping time the path is frozen at z_τ, left limits included
            index = np.where(times <= self.stop_time,
                             np.searchsorted(self.jump_times, clamped, side='left'), index)
        values = continuous + self._jump_levels[index]
        return float(values[0]) if scalar else values

    def value(self, times):
        """z_t at the given time(s)."""
        return self._query(times, left=False)

    def left_limit(self, times):
        """z_{t-} at the given time(s)."""
        return self._query(times, left=True)

    def continuous_part(self, times):
        clamped = np.minimum(np.asarray(times, dtype=float), self.stop_time)
        return np.interp(clamped, self.grid, self.continuous_values)

    def jump_part(self, times):
        clamped = np.minimum(np.asarray(times, dtype=float), self.stop_time)
        return self._jump_levels[np.searchsorted(self.jump_times, clamped, side='right')]

    def grid_values(self):
        return self.value(self.grid)

    def jumps_until(self, t: float):
        keep = self.jump_times <= t
        return self.jump_times[keep], self.jump_sizes[keep]

    def jump_sum_squares(self, t: float) -> float:
        _, sizes = self.jumps_until(t)
        return float(np.sum(sizes ** 2))

    def realized_variance(self, t: float = None, continuous_only: bool = False) -> float:
        """Sum of squared grid increments up to t."""
        t = self.horizon if t is None else t
        times = self.grid[self.grid <= t]
        values = self.continuous_part(times) if continuous_only else self.value(times)
        return float(np.sum(np.diff(values) ** 2))

    def event_times(self):
        """Grid times and jump times up to the stopping time."""
        grid = self.grid[self.grid <= self.stop_time]
        return np.union1d(np.union1d(grid, self.jump_times), [self.stop_time])

    def first_passage(self, level: float) -> float:
        """
        First time |z| reaches level, T if it never does. Crossings by the continuous
        motion are located exactly on the linear piece they happen on.
        """
        events = self.event_times()
        right = self.value(events)
        left = self.left_limit(events)
        hits = np.flatnonzero(np.abs(right) >= level)
        if hits.size == 0:
            return self.horizon
        i = hits[0]
        if i == 0 or abs(left[i]) < level:
            return float(events[i])
        start, end = right[i - 1], left[i]
        target = level if end >= level else -level
        fraction = (target - start) / (end - start)
        return float(events[i - 1] + fraction * (events[i] - events[i - 1]))

    def stop(self, tau: float) -> 'CadlagPath':
        if not 0. <= tau <= self.horizon:
            raise ContractError(f'stopping time {tau} outside [0, {self.horizon}]')
        keep = self.jump_times <= tau
        return CadlagPath(grid=self.grid, continuous_values=self.continuous_values,
                          jump_times=self.jump_times[keep], jump_sizes=self.jump_sizes[keep],
                          stop_time=min(self.stop_time, tau), name=self.name)

    def history(self, cutoffs, strict: bool = False) -> 'PathHistory':
        return PathHistory(self, cutoffs, strict=strict)

    def to_dataframe(self) -> pd.DataFrame:
        times = self.event_times()
        jump_flag = np.isin(times, self.jump_times).astype(int)
        return pd.DataFrame({'t': times, 'z_t': self.value(times), 'z_tminus': self.left_limit(times),
                             'jump_flag': jump_flag})

    @plot_data_view("Trajectory")
    def plot_data(self):
        times = self.event_times()
        elements = [{'t': t, 'z': z} for t, z in zip(times, self.value(times))]
        tooltip = plot_data.Tooltip(attributes=['t', 'z'])
        point_style = plot_data.PointStyle(color_fill=BLUE, color_stroke=BLACK)
        edge_style = plot_data.EdgeStyle(color_stroke=BLUE)
        dataset = plot_data.Dataset(elements=elements, name=self.name or 'z', tooltip=tooltip,
                                    point_style=point_style, edge_style=edge_style)
        return plot_data.Graph2D(graphs=[dataset], x_variable='t', y_variable='z')


class PathHistory:
    """
    A path seen up to a batch of cutoff times. Only times before the cutoffs can be
    read; with strict=True the cutoff itself is read through its left limit.
    """

    def __init__(self, path: CadlagPath, cutoffs, strict: bool = False):
        self.path = path
        self.cutoffs = np.atleast_1d(np.asarray(cutoffs, dtype=float))
        self.strict = strict

    def _lagged(self, lag):
        if lag < 0.:
            raise ContractError(f'a predictable functional cannot read ahead of its cutoff (lag {lag})')
        return np.maximum(self.cutoffs - lag, 0.)

    def value(self, lag: float = 0.):
        times = self._lagged(lag)
        if lag == 0. and self.strict:
            return self.path.left_limit(times)
        return self.path.value(times)

    def left_limit(self, lag: float = 0.):
        return self.path.left_limit(self._lagged(lag))

    def increment(self, lag: float):
        return self.value() - self.value(lag)


class StoppingTime(DessiaObject):
    """
    Deterministic time or first passage of |z| through a level, capped at the horizon.

    :param kind: 'deterministic' or 'hitting'
    :type kind: str

    :param value: The time, or the level
    :type value: float
    """
    _standalone_in_db = False
    KINDS = ('deterministic', 'hitting')

    def __init__(self, kind: str, value: float, name: str = ''):
        if kind not in self.KINDS:
            raise ValueError(f'stopping time kind must be one of {self.KINDS}, got {kind!r}')
        self.kind = kind
        self.value = value
        DessiaObject.__init__(self, name=name)

    def evaluate(self, path: CadlagPath) -> float:
        if self.kind == 'deterministic':
            return float(min(max(self.value, 0.), path.horizon))
        return path.first_passage(self.value)


class RandomPartition(DessiaObject):
    """
    Nondecreasing sequence of stopping times 0 = τ_0 ≤ τ_1 ≤ ... ≤ τ_{m+1}.

    :param times: The partition times, evaluated on one path
    :type times: List[float]
    """
    _standalone_in_db = False
    _eq_is_data_eq = False

    def __init__(self, times: List[float], name: str = ''):
        times = np.asarray(times, dtype=float)
        if times.size == 0 or times[0] != 0. or np.any(np.diff(times) < 0.):
            raise ValueError('partition times must start at 0 and be nondecreasing')
        self.times = times
        DessiaObject.__init__(self, name=name)

    @classmethod
    def dyadic(cls, level: int, horizon: float = 1.) -> 'RandomPartition':
        return cls(uniform_grid(horizon, 2 ** level), name=f'dyadic_{level}')

    @classmethod
    def dyadic_sequence(cls, levels: List[int], horizon: float = 1.) -> List['RandomPartition']:
        return [cls.dyadic(level, horizon) for level in sorted(levels)]

    @classmethod
    def jump_refined(cls, level: int, path: CadlagPath) -> 'RandomPartition':
        return cls.dyadic(level, path.horizon).refined(path.jump_times)

    @classmethod
    def hitting(cls, levels: List[float], path: CadlagPath) -> 'RandomPartition':
        """First passages of |z| through increasing levels, closed by the horizon."""
        passages = [path.first_passage(level) for level in sorted(levels)]
        return cls([0.] + passages + [path.horizon], name='hitting')

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.times))) if self.times.size > 1 else 0.

    def refined(self, times) -> 'RandomPartition':
        """Sorted merge with extra times (duplicates dropped)."""
        return RandomPartition(np.union1d(self.times, np.asarray(times, dtype=float)), name=self.name)

    def contains(self, times):
        return np.isin(np.asarray(times, dtype=float), self.times)


def make_partition(kind: str, params: Dict[str, float], path: CadlagPath = None) -> RandomPartition:
    """
    Builds a partition of kind 'dyadic' (params: level, horizon), 'jump-refined'
    (params: level) or 'hitting' (params: levels).
    """
    if kind == 'dyadic':
        horizon = params.get('horizon', path.horizon if path is not None else 1.)
        return RandomPartition.dyadic(int(params['level']), horizon)
    if kind in ('jump-refined', 'hitting') and path is None:
        raise ContractError(f'a {kind} partition needs a path')
    if kind == 'jump-refined':
        return RandomPartition.jump_refined(int(params['level']), path)
    if kind == 'hitting':
        return RandomPartition.hitting(params['levels'], path)
    raise ValueError(f'unknown partition kind {kind!r}')


def stop_path(path: CadlagPath, tau: float) -> CadlagPath:
    """The path t ↦ z_{t∧τ}."""
    return path.stop(tau)


def quadratic_variation(path: CadlagPath, spec: SemimartingaleSpec, t: float) -> float:
    """[z, z]_t = σ² t + Σ_{s≤t} (Δz_s)²."""
    return spec.bracket_continuous(t) + path.jump_sum_squares(t)
