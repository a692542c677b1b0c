import math

import numpy as np
import pytest
from scipy import stats

from hcvsim import JumpType, ModelParams, State, simulate, simulate_batch
from hcvsim import _kernels
from hcvsim.ssa import (
    DISPLACEMENTS,
    Trajectory,
    count_jumps,
    integrated_rate,
    state_at,
    trajectory_csv_text,
)
from hcvsim.model import rates

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK


def _reference_stream(seed: int, path: int, n: int) -> list[int]:
    """Pure-Python mirror of the compiled generator, written from the
    published splitmix64/xoshiro256++ definitions."""
    z = seed ^ _mix64((path + GOLDEN) & MASK)
    s = []
    for _ in range(4):
        z = (z + GOLDEN) & MASK
        s.append(_mix64(z))
    if not any(s):
        s[0] = GOLDEN
    s0, s1, s2, s3 = s
    out = []
    for _ in range(n):
        out.append((_rotl((s0 + s3) & MASK, 23) + s0) & MASK)
        t = (s1 << 17) & MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    return out


@pytest.mark.parametrize("seed,path", [(0, 0), (0, 1), (12345, 0), (2**63 - 1, 7)])
def test_generator_matches_reference(seed, path):
    got = _kernels._u64_stream(seed, path, 64)
    assert [int(x) for x in got] == _reference_stream(seed, path, 64)


def test_simulate_deterministic(ref_params):
    a = simulate(ref_params, State(50, 50), 5.0, seed=9)
    b = simulate(ref_params, State(50, 50), 5.0, seed=9)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.types, b.types)
    c = simulate(ref_params, State(50, 50), 5.0, seed=10)
    assert not np.array_equal(a.times, c.times)


def test_absorbing_empty_chain():
    dead = ModelParams(r=0, lam=0, p_i=0.5, alpha=1, p=0.5, mu1=1, mu2=1)
    traj = simulate(dead, State(0, 0), 10.0, seed=3)
    assert traj.n_events == 0


def test_pure_death_chain():
    p = ModelParams(r=0, lam=0, p_i=0.5, alpha=0, p=0.5, mu1=1, mu2=0.7)
    traj = simulate(p, State(0, 3), 1e6, seed=4)
    assert traj.n_events == 3
    assert list(traj.types) == [int(JumpType.SUSCEPTIBLE_EXIT)] * 3


def _single_jump_traj(params) -> Trajectory:
    return Trajectory(params=params, x0=State(2, 2), horizon=2.0, seed=0,
                      path_index=0, times=np.array([1.0]),
                      types=np.array([int(JumpType.SUSCEPTIBLE_ARRIVAL)],
                                     dtype=np.int8))


def test_state_at(ref_params):
    traj = simulate(ref_params, State(50, 50), 5.0, seed=1)
    assert state_at(traj, 0.0) == State(50, 50)
    single = _single_jump_traj(ref_params)
    # the sample path is right-continuous at the jump
    assert state_at(single, 1.0) == State(2, 3)
    assert state_at(single, 0.999) == State(2, 2)
    with pytest.raises(ValueError):
        state_at(single, 2.5)


def test_count_jumps_empty(ref_params):
    dead = ModelParams(r=0, lam=0, p_i=0.5, alpha=1, p=0.5, mu1=1, mu2=1)
    traj = simulate(dead, State(0, 0), 1.0, seed=0)
    for jt in JumpType:
        assert count_jumps(traj, jt) == 0


def test_reconstruction_identity(ref_params):
    traj = simulate(ref_params, State(50, 50), 10.0, seed=21)
    for t in [0.0, 1.7, 4.2, 10.0]:
        counts = np.array([count_jumps(traj, jt, t) for jt in JumpType])
        displaced = np.array([50, 50]) + counts @ DISPLACEMENTS
        s = state_at(traj, t)
        assert (s.n1, s.n2) == tuple(displaced)


def test_nonnegative_states_and_domination(ref_params):
    for seed in range(3):
        traj = simulate(ref_params, State(5, 5), 20.0, seed=seed)
        n1, n2 = traj.step_states()
        assert (n1 >= 0).all() and (n2 >= 0).all()
        arrivals = np.isin(traj.types, (int(JumpType.INFECTED_ARRIVAL),
                                        int(JumpType.SUSCEPTIBLE_ARRIVAL)))
        growth = (n1[1:] + n2[1:]) - traj.x0.total
        assert (growth <= np.cumsum(arrivals)).all()


def test_arrival_count_mean(ref_params):
    # arrivals of both kinds merge to a Poisson stream of rate r + lam
    t = 10.0
    batch = simulate_batch(ref_params, State(50, 50), t, 400, seed=5)
    arrivals = batch.counts[:, 0] + batch.counts[:, 3]
    expected = (ref_params.r + ref_params.lam) * t
    se = arrivals.std(ddof=1) / math.sqrt(len(arrivals))
    assert abs(arrivals.mean() - expected) < 3 * se


def test_merged_arrivals_exponential(ref_params):
    rate = ref_params.r + ref_params.lam
    gaps = []
    for path in range(20):
        traj = simulate(ref_params, State(50, 50), 20.0, seed=77,
                        path_index=path)
        at = traj.times[np.isin(traj.types,
                                (int(JumpType.INFECTED_ARRIVAL),
                                 int(JumpType.SUSCEPTIBLE_ARRIVAL)))]
        gaps.append(np.diff(np.concatenate(([0.0], at))))
    sample = np.concatenate(gaps)
    assert len(sample) > 2000
    res = stats.kstest(sample, "expon", args=(0, 1 / rate))
    assert res.pvalue > 0.01


def test_integrated_rate_constant_integrand(ref_params):
    empty = Trajectory(params=ref_params, x0=State(0, 10), horizon=2.0,
                       seed=0, path_index=0, times=np.array([]),
                       types=np.array([], dtype=np.int8))
    got = integrated_rate(empty, JumpType.SUSCEPTIBLE_EXIT, 2.0)
    assert got == pytest.approx(ref_params.mu2 * 10 * 2.0, rel=1e-14)


def test_integrated_rate_no_infected():
    # with r = 0 and p_i = 0 the infected side can never be seeded
    p = ModelParams(r=0, lam=5, p_i=0, alpha=1, p=0.9, mu1=1, mu2=0.5)
    traj = simulate(p, State(0, 10), 20.0, seed=6)
    assert traj.n_events > 0
    assert integrated_rate(traj, JumpType.INFECTION) == 0.0


def _walk_integrals(traj, t):
    """Independent event-walk oracle for the five rate integrals."""
    params = traj.params
    n1, n2 = traj.x0.n1, traj.x0.n2
    acc = np.zeros(5)
    prev = 0.0
    for j in range(traj.n_events):
        tj = min(float(traj.times[j]), t)
        if tj > prev:
            acc += rates(params, State(n1, n2)) * (tj - prev)
            prev = tj
        if traj.times[j] > t:
            return acc
        dn1, dn2 = DISPLACEMENTS[int(traj.types[j]) - 1]
        n1 += dn1
        n2 += dn2
    if t > prev:
        acc += rates(params, State(n1, n2)) * (t - prev)
    return acc


@pytest.mark.parametrize("t_frac", [0.31, 1.0])
def test_integrated_rate_exact_oracle(ref_params, t_frac):
    traj = simulate(ref_params, State(50, 50), 10.0, seed=8)
    t = t_frac * traj.horizon
    oracle = _walk_integrals(traj, t)
    for jt in JumpType:
        got = integrated_rate(traj, jt, t)
        assert got == pytest.approx(oracle[jt - 1], rel=1e-12, abs=1e-12)


def test_integrated_rate_grid_quadrature(ref_params):
    # a left-endpoint Riemann sum over state_at carries O(events * step)
    # error against the exact piecewise-constant integral; check the
    # agreement within that provable envelope
    traj = simulate(ref_params, State(50, 50), 10.0, seed=13)
    step = 1e-4 * traj.horizon
    grid = np.arange(0.0, traj.horizon, step)
    n1, n2 = traj.step_states()
    max_rates = np.array(
        [max(rates(ref_params, State(a, b))[k] for a, b in zip(n1, n2))
         for k in range(5)])
    states = [state_at(traj, t) for t in grid]
    for jt in JumpType:
        riemann = sum(rates(ref_params, s)[jt - 1] for s in states) * step
        exact = integrated_rate(traj, jt)
        envelope = (traj.n_events + 1) * step * max_rates[jt - 1]
        assert abs(riemann - exact) <= envelope


def test_batch_rows_do_not_depend_on_batch_size(ref_params):
    small = simulate_batch(ref_params, State(20, 20), 4.0, 30, seed=11)
    large = simulate_batch(ref_params, State(20, 20), 4.0, 120, seed=11)
    assert np.array_equal(small.terminal, large.terminal[:30])
    assert np.array_equal(small.counts, large.counts[:30])
    assert np.array_equal(small.rate_integrals, large.rate_integrals[:30])


def test_batch_matches_single_paths(ref_params):
    batch = simulate_batch(ref_params, State(20, 20), 4.0, 5, seed=14)
    for i in range(5):
        traj = simulate(ref_params, State(20, 20), 4.0, seed=14, path_index=i)
        end = state_at(traj, 4.0)
        assert (end.n1, end.n2) == tuple(batch.terminal[i])
        for jt in JumpType:
            assert count_jumps(traj, jt) == batch.counts[i, jt - 1]
            assert integrated_rate(traj, jt) == pytest.approx(
                batch.rate_integrals[i, jt - 1], rel=1e-11, abs=1e-11)


def test_window_mean_prevalence(ref_params):
    batch = simulate_batch(ref_params, State(20, 20), 4.0, 8, seed=15,
                           window=(2.0, 4.0))
    vals = batch.window_mean_prevalence()
    assert ((0 <= vals) & (vals <= 1)).all()
    # cross-check one path against a fine Riemann sum of the infected fraction
    traj = simulate(ref_params, State(20, 20), 4.0, seed=15, path_index=0)
    grid = np.linspace(2.0, 4.0, 20001)[:-1]
    frac = np.array([state_at(traj, t).n1 / max(state_at(traj, t).total, 1)
                     for t in grid])
    assert vals[0] == pytest.approx(frac.mean(), abs=2e-3)


def test_simulate_batch_window_validation(ref_params):
    with pytest.raises(ValueError):
        simulate_batch(ref_params, State(5, 5), 4.0, 2, seed=0, window=(3.0, 5.0))
    with pytest.raises(ValueError):
        simulate_batch(ref_params, State(5, 5), 4.0, 2, seed=0, window=(3.0, 2.0))


def test_seed_validation(ref_params):
    with pytest.raises(ValueError):
        simulate(ref_params, State(1, 1), 1.0, seed=-1)
    with pytest.raises(ValueError):
        simulate_batch(ref_params, State(1, 1), 1.0, 2, seed=2**63)


def test_csv_export(ref_params):
    traj = simulate(ref_params, State(5, 5), 2.0, seed=16)
    text = trajectory_csv_text(traj)
    lines = text.strip().split("\n")
    assert lines[0] == "time,jump_type,n1,n2"
    assert len(lines) == traj.n_events + 1
    first = lines[1].split(",")
    assert float(first[0]) == traj.times[0]
    assert int(first[1]) == traj.types[0]
