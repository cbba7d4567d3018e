import numpy as np

from nuclear_semimartingales.paths import (CadlagPath, ContractError, RandomPartition, SemimartingaleSpec,
                                           StoppingTime, make_partition, quadratic_variation, replica_seed,
                                           stop_path, uniform_grid)

try:
    SemimartingaleSpec(sigma=-1.)
except ValueError as error:
    assert 'sigma' in str(error)
else:
    raise AssertionError('negative sigma accepted')

spec = SemimartingaleSpec(mu=0.2, sigma=1., jump_intensity=3., jump_sd=0.5)
first, second = spec.simulate(64, 7), spec.simulate(64, 7)
assert np.array_equal(first.grid_values(), second.grid_values())
assert np.array_equal(first.jump_times, second.jump_times)
assert not np.any(np.isin(first.jump_times, first.grid))

ensemble = spec.simulate_ensemble(64, 4, seed=11)
for index, path in enumerate(ensemble):
    assert np.array_equal(path.grid_values(), spec.simulate(64, replica_seed(11, index)).grid_values())
parallel = spec.simulate_ensemble(64, 4, seed=11, n_jobs=2)
assert all(np.array_equal(a.grid_values(), b.grid_values()) for a, b in zip(ensemble, parallel))
print('Simulation is seeded per replica')

# Jump ledger
grid = uniform_grid(1., 8)
path = CadlagPath(grid, np.zeros(9), jump_times=[0.3, 0.6], jump_sizes=[1., -0.25])
assert path.value(0.3) == 1. and path.left_limit(0.3) == 0. and path.value(0.2) == 0.
assert path.value(1.) == 0.75 and path.left_limit(0.6) == 1.
assert np.array_equal(path.jump_part(np.array([0.1, 0.5, 0.9])), [0., 1., 0.75])
assert path.jump_sum_squares(1.) == 1.0625
assert quadratic_variation(path, SemimartingaleSpec(sigma=2.), 0.5) == 2. + 1.
assert SemimartingaleSpec(sigma=2.).bracket_continuous(0.25) == 1.
frame = path.to_dataframe()
assert list(frame.columns) == ['t', 'z_t', 'z_tminus', 'jump_flag'] and frame.jump_flag.sum() == 2

stopped = path.stop(0.45)
assert stopped.value(0.9) == path.value(0.45) and stopped.left_limit(0.9) == path.value(0.45)
assert stopped.jump_times.size == 1 and stop_path(path, 0.45).stop_time == 0.45
try:
    path.stop(2.)
except ContractError:
    pass
else:
    raise AssertionError('stopping beyond the horizon accepted')
print('Jump ledger ok')

# First passages
drift = CadlagPath(uniform_grid(1., 4), uniform_grid(1., 4))
assert abs(drift.first_passage(0.5) - 0.5) < 1e-12
assert abs(drift.first_passage(0.6) - 0.6) < 1e-12
assert drift.first_passage(2.) == 1.
assert path.first_passage(0.5) == 0.3
assert StoppingTime('hitting', 0.6).evaluate(drift) == drift.first_passage(0.6)
assert StoppingTime('deterministic', 3.).evaluate(drift) == 1.

# Histories are predictable
history = path.history([0.3], strict=True)
assert history.value()[0] == 0. and path.history([0.3]).value()[0] == 1.
try:
    history.value(-0.1)
except ContractError:
    pass
else:
    raise AssertionError('a history read ahead of its cutoff')

# Partitions
for bad in ([0.5, 1.], [0., 0.6, 0.4]):
    try:
        RandomPartition(bad)
    except ValueError:
        pass
    else:
        raise AssertionError(f'{bad} accepted as a partition')
assert RandomPartition.dyadic(3).times.size == 9 and RandomPartition.dyadic(3).mesh == 0.125
refined = RandomPartition.jump_refined(2, path)
assert np.all(refined.contains(path.jump_times)) and refined.times.size == 7
hitting = RandomPartition.hitting([0.25, 0.5], drift)
assert np.allclose(hitting.times, [0., 0.25, 0.5, 1.])
assert make_partition('dyadic', {'level': 2}).times.size == 5
try:
    make_partition('jump-refined', {'level': 3})
except ContractError:
    pass
else:
    raise AssertionError('a jump-refined partition was built without a path')

brownian = SemimartingaleSpec(sigma=1.).simulate(4096, 3)
assert abs(brownian.realized_variance() - 1.) < 0.15
assert brownian.realized_variance(continuous_only=True) == brownian.realized_variance()
print('Paths and partitions ok')

# Càdlàg consistency: left limits differ from values exactly at the jumps
brownian_part = SemimartingaleSpec(sigma=1.).simulate(256, 21)
jumpy = CadlagPath(brownian_part.grid, brownian_part.continuous_values, jump_times=[0.1003, 0.4003, 0.7503],
                   jump_sizes=[0.5, -1., 0.7])
assert np.allclose(jumpy.value(jumpy.jump_times) - jumpy.left_limit(jumpy.jump_times), jumpy.jump_sizes,
                   rtol=0., atol=1e-12)
assert np.array_equal(jumpy.value(jumpy.grid), jumpy.left_limit(jumpy.grid))
right = jumpy.value(jumpy.jump_times + 1e-12)
assert np.max(np.abs(right - jumpy.value(jumpy.jump_times))) <= 1e-8
print('Càdlàg consistency ok')

# Stopping is idempotent
for tau in (0.1, 0.4003, 0.77):
    once = stop_path(jumpy, tau)
    twice = stop_path(once, tau)
    assert twice.stop_time == once.stop_time and np.array_equal(twice.jump_times, once.jump_times)
    times = np.union1d(jumpy.grid, jumpy.jump_times)
    assert np.array_equal(twice.value(times), once.value(times))
    assert np.array_equal(twice.left_limit(times), once.left_limit(times))
print('Stopping idempotence ok')

# Moments at the horizon: z_0 + (μ + λ m) t and σ² t + λ (s² + m²) t
moments = SemimartingaleSpec(z0=0.5, mu=0.2, sigma=0.8, jump_intensity=2., jump_mean=0.3, jump_sd=0.4)
terminal = np.array([p.value(1.) for p in moments.simulate_ensemble(16, 20000, seed=5)])
print(f'terminal mean {terminal.mean():.4f}, variance {terminal.var():.4f}')
assert abs(terminal.mean() - 1.3) < 0.04
assert abs(terminal.var() - 1.14) < 0.08
print('Monte-Carlo moments ok')
