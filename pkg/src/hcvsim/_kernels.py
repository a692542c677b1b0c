"""Compiled jump-process kernels.

All kernels draw from a splittable 64-bit generator (xoshiro256++ streams,
one per path, derived by mixing the batch seed with the path index through
a splitmix64 finalizer).  Path i of a batch therefore produces the same
events regardless of batch size, execution order, or which kernel runs it.

Rate computation is duplicated from :mod:`hcvsim.model` because these loops
cannot call into Python; the test suite cross-checks the two.
"""
from __future__ import annotations

import warnings

import numpy as np

# an outdated TBB install downgrades the threading layer with a warning;
# harmless here because results never depend on the layer
warnings.filterwarnings(
    "ignore", message="The TBB threading layer requires TBB version"
)

from numba import float64, njit, prange  # noqa: E402

U = np.uint64

_GOLDEN = U(0x9E3779B97F4A7C15)
_MIX1 = U(0xBF58476D1CE4E5B9)
_MIX2 = U(0x94D049BB133111EB)
_S30 = U(30)
_S27 = U(27)
_S31 = U(31)
_S11 = U(11)
_S17 = U(17)
_S45 = U(45)
_S23 = U(23)
_S64 = U(64)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _mix64(z):
    # splitmix64 finalizer
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (_S64 - k))


@njit(cache=True)
def _seed_state(seed, path):
    """xoshiro256++ state for one path: batch seed xor splitmix64(path index)."""
    z = U(seed) ^ _mix64(U(path) + _GOLDEN)
    z = z + _GOLDEN
    s0 = _mix64(z)
    z = z + _GOLDEN
    s1 = _mix64(z)
    z = z + _GOLDEN
    s2 = _mix64(z)
    z = z + _GOLDEN
    s3 = _mix64(z)
    if (s0 | s1 | s2 | s3) == U(0):
        s0 = _GOLDEN
    return s0, s1, s2, s3


@njit(cache=True)
def _next_u64(s0, s1, s2, s3):
    out = _rotl(s0 + s3, _S23) + s0
    t = s1 << _S17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, _S45)
    return out, s0, s1, s2, s3


@njit(cache=True)
def _u64_stream(seed, path, n):
    """Raw generator output, exposed for validation against a reference."""
    s0, s1, s2, s3 = _seed_state(seed, path)
    out = np.empty(n, np.uint64)
    for i in range(n):
        out[i], s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
    return out


@njit(cache=True)
def sim_events(r, lam, p_i, alpha, p, mu1, mu2, n1_0, n2_0, t_max, seed, path):
    """One exact path; returns (event times, jump types) in time order.

    Jump types are coded 1..5: infected arrival, infected exit, infection,
    susceptible arrival, susceptible exit.  Waiting times are inverse-CDF
    exponentials from a uniform confined to the open unit interval, so
    event times are strictly increasing.  Simulation stops early if every
    rate vanishes (possible only at (0, 0) with r = lam = 0).
    """
    s0, s1, s2, s3 = _seed_state(seed, path)
    cap = 4096
    times = np.empty(cap, np.float64)
    types = np.empty(cap, np.int8)
    n = 0
    n1 = n1_0
    n2 = n2_0
    t = 0.0
    while True:
        pop = n1 + n2
        f = n1 / pop if pop > 0 else 0.0
        mix = lam * p_i * f
        q1 = r + mix
        q2 = mu1 * n1
        q3 = alpha * p * n2 * f
        q4 = lam - mix
        q5 = mu2 * n2
        total = q1 + q2 + q3 + q4 + q5
        if total <= 0.0:
            break
        x, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        u = (float64(x >> _S11) + 0.5) * _INV53
        t -= np.log(u) / total
        if t > t_max:
            break
        x, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        v = float64(x >> _S11) * _INV53 * total
        if v < q1:
            n1 += 1
            k = 1
        elif v < q1 + q2:
            n1 -= 1
            k = 2
        elif v < q1 + q2 + q3:
            n1 += 1
            n2 -= 1
            k = 3
        elif v < q1 + q2 + q3 + q4:
            n2 += 1
            k = 4
        else:
            n2 -= 1
            k = 5
        if n == cap:
            cap *= 2
            new_times = np.empty(cap, np.float64)
            new_types = np.empty(cap, np.int8)
            new_times[:n] = times
            new_types[:n] = types
            times = new_times
            types = new_types
        times[n] = t
        types[n] = k
        n += 1
    return times[:n], types[:n]


@njit(cache=True)
def _summary_one(r, lam, p_i, alpha, p, mu1, mu2, n1_0, n2_0, t_max,
                 w_lo, w_hi, seed, path):
    """Summary statistics of one path: terminal state, per-type jump
    counts, exact rate integrals over [0, t_max], and the integral of the
    infected fraction over [w_lo, w_hi]."""
    c = np.zeros(5, np.int64)
    q = np.zeros(5, np.float64)
    s0, s1, s2, s3 = _seed_state(seed, path)
    n1 = n1_0
    n2 = n2_0
    t = 0.0
    wp = 0.0
    while True:
        pop = n1 + n2
        f = n1 / pop if pop > 0 else 0.0
        mix = lam * p_i * f
        q1 = r + mix
        q2 = mu1 * n1
        q3 = alpha * p * n2 * f
        q4 = lam - mix
        q5 = mu2 * n2
        total = q1 + q2 + q3 + q4 + q5
        if total <= 0.0:
            break
        x, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        u = (float64(x >> _S11) + 0.5) * _INV53
        dt = -np.log(u) / total
        seg = dt if t + dt <= t_max else t_max - t
        q[0] += q1 * seg
        q[1] += q2 * seg
        q[2] += q3 * seg
        q[3] += q4 * seg
        q[4] += q5 * seg
        lo = t if t > w_lo else w_lo
        hi = t + seg if t + seg < w_hi else w_hi
        if hi > lo:
            wp += f * (hi - lo)
        t += dt
        if t > t_max:
            break
        x, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        v = float64(x >> _S11) * _INV53 * total
        if v < q1:
            n1 += 1
            c[0] += 1
        elif v < q1 + q2:
            n1 -= 1
            c[1] += 1
        elif v < q1 + q2 + q3:
            n1 += 1
            n2 -= 1
            c[2] += 1
        elif v < q1 + q2 + q3 + q4:
            n2 += 1
            c[3] += 1
        else:
            n2 -= 1
            c[4] += 1
    return n1, n2, c, q, wp


@njit(cache=True, parallel=True)
def batch_summaries(r, lam, p_i, alpha, p, mu1, mu2, n1_0, n2_0, t_max,
                    w_lo, w_hi, seed, n_paths):
    """Per-path summary statistics for a batch of exact paths.

    Returns terminal states, jump counts per type, exact time integrals of
    each rate over [0, t_max], and the time integral of the infected
    fraction over the window [w_lo, w_hi].  Nothing path-local is stored,
    so arbitrarily long paths cost O(1) memory.  Paths are independent and
    each writes only its own row, so the worker schedule cannot change any
    result.
    """
    term = np.empty((n_paths, 2), np.int64)
    counts = np.empty((n_paths, 5), np.int64)
    ints = np.empty((n_paths, 5), np.float64)
    wprev = np.empty(n_paths, np.float64)
    for i in prange(n_paths):
        n1, n2, c, q, wp = _summary_one(
            r, lam, p_i, alpha, p, mu1, mu2, n1_0, n2_0, t_max,
            w_lo, w_hi, seed, i)
        term[i, 0] = n1
        term[i, 1] = n2
        for k in range(5):
            counts[i, k] = c[k]
            ints[i, k] = q[k]
        wprev[i] = wp
    return term, counts, ints, wprev


@njit(cache=True)
def sample_path(r, lam, p_i, alpha, p, mu1, mu2, n1_0, n2_0, sample_times,
                seed, path):
    """States of one exact path observed at the given increasing times.

    The path is right-continuous; each observation records the state just
    before the first event past the observation time.  If the path is
    absorbed, the absorbing state fills the remaining observations.
    """
    n_obs = sample_times.shape[0]
    obs = np.empty((n_obs, 2), np.int64)
    s0, s1, s2, s3 = _seed_state(seed, path)
    n1 = n1_0
    n2 = n2_0
    t = 0.0
    j = 0
    while j < n_obs:
        pop = n1 + n2
        f = n1 / pop if pop > 0 else 0.0
        mix = lam * p_i * f
        q1 = r + mix
        q2 = mu1 * n1
        q3 = alpha * p * n2 * f
        q4 = lam - mix
        q5 = mu2 * n2
        total = q1 + q2 + q3 + q4 + q5
        if total <= 0.0:
            break
        x, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        u = (float64(x >> _S11) + 0.5) * _INV53
        t -= np.log(u) / total
        while j < n_obs and sample_times[j] < t:
            obs[j, 0] = n1
            obs[j, 1] = n2
            j += 1
        if j == n_obs:
            break
        x, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        v = float64(x >> _S11) * _INV53 * total
        if v < q1:
            n1 += 1
        elif v < q1 + q2:
            n1 -= 1
        elif v < q1 + q2 + q3:
            n1 += 1
            n2 -= 1
        elif v < q1 + q2 + q3 + q4:
            n2 += 1
        else:
            n2 -= 1
    while j < n_obs:
        obs[j, 0] = n1
        obs[j, 1] = n2
        j += 1
    return obs
