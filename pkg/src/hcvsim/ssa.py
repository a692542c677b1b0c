"""Exact stochastic simulation of the jump model.

A path is generated event by event: exponential waiting time at the total
rate, then a jump chosen proportionally to the five individual rates.
:class:`Trajectory` stores the full event log of one path; the batch driver
reduces many paths to per-path summary statistics without storing them.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import IntEnum
from typing import IO

import numpy as np

from . import _kernels
from .model import ModelParams, State, rates_along

MAX_SEED = 2**63 - 1


class JumpType(IntEnum):
    INFECTED_ARRIVAL = 1
    INFECTED_EXIT = 2
    INFECTION = 3
    SUSCEPTIBLE_ARRIVAL = 4
    SUSCEPTIBLE_EXIT = 5


# state displacement of each jump type, indexed by JumpType - 1
DISPLACEMENTS = np.array(
    [[1, 0], [-1, 0], [1, -1], [0, 1], [0, -1]], dtype=np.int64
)


def _check_seed(seed: int) -> None:
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2**63 - 1], got {seed}")


def set_threads(n: int) -> int:
    """Set the worker count for batch simulation; returns the value applied.

    Requests are clamped to the number of threads the compiled layer was
    launched with.  Results never depend on this setting: every path derives
    its own random stream from (seed, path index) and writes its own output
    row.
    """
    import numba

    if n < 1:
        raise ValueError(f"thread count must be positive, got {n}")
    applied = min(int(n), numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(applied)
    return applied


@dataclass(frozen=True)
class Trajectory:
    """One exact path on [0, horizon].

    ``times`` and ``types`` hold the event log in time order; the state is
    right-continuous and constant between events.
    """

    params: ModelParams
    x0: State
    horizon: float
    seed: int
    path_index: int
    times: np.ndarray
    types: np.ndarray
    _states: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_events(self) -> int:
        return len(self.times)

    def step_states(self) -> tuple[np.ndarray, np.ndarray]:
        """State after each event, prepended with the initial state.

        Entry j is the state on the half-open interval from event j to
        event j+1 (from 0 for j = 0).
        """
        if "steps" not in self._states:
            disp = DISPLACEMENTS[np.asarray(self.types, dtype=np.int64) - 1]
            n1 = np.concatenate(([self.x0.n1], self.x0.n1 + np.cumsum(disp[:, 0])))
            n2 = np.concatenate(([self.x0.n2], self.x0.n2 + np.cumsum(disp[:, 1])))
            self._states["steps"] = (n1, n2)
        return self._states["steps"]


def simulate(p: ModelParams, x0: State, t_max: float, seed: int,
             path_index: int = 0) -> Trajectory:
    """Simulate one exact path of the model on [0, t_max].

    The same (p, x0, t_max, seed, path_index) always yields the identical
    event log.  If every rate vanishes the path is absorbed and the log
    simply ends early.
    """
    if t_max < 0:
        raise ValueError(f"t_max must be nonnegative, got {t_max}")
    _check_seed(seed)
    times, types = _kernels.sim_events(
        p.r, p.lam, p.p_i, p.alpha, p.p, p.mu1, p.mu2,
        x0.n1, x0.n2, float(t_max), seed, path_index,
    )
    return Trajectory(params=p, x0=x0, horizon=float(t_max), seed=seed,
                      path_index=path_index, times=times, types=types)


def state_at(traj: Trajectory, t: float) -> State:
    """State of the path at time t (right-continuous)."""
    if not 0 <= t <= traj.horizon:
        raise ValueError(f"t must lie in [0, {traj.horizon}], got {t}")
    k = int(np.searchsorted(traj.times, t, side="right"))
    if k == 0:
        return traj.x0
    n1, n2 = traj.step_states()
    return State(int(n1[k]), int(n2[k]))


def count_jumps(traj: Trajectory, jump_type: JumpType, t: float | None = None) -> int:
    """Number of jumps of one type in [0, t] (whole horizon by default)."""
    if t is None:
        t = traj.horizon
    if not 0 <= t <= traj.horizon:
        raise ValueError(f"t must lie in [0, {traj.horizon}], got {t}")
    k = int(np.searchsorted(traj.times, t, side="right"))
    return int(np.count_nonzero(traj.types[:k] == int(jump_type)))


def integrated_rate(traj: Trajectory, jump_type: JumpType, t: float | None = None) -> float:
    """Exact time integral of one transition rate along the path.

    The integrand is piecewise constant between events, so the integral is
    a finite sum of rate times segment length; no quadrature error.
    """
    if t is None:
        t = traj.horizon
    if not 0 <= t <= traj.horizon:
        raise ValueError(f"t must lie in [0, {traj.horizon}], got {t}")
    k = int(np.searchsorted(traj.times, t, side="right"))
    bounds = np.concatenate(([0.0], traj.times[:k], [t]))
    durations = np.diff(bounds)
    n1, n2 = traj.step_states()
    q = rates_along(traj.params, n1[: k + 1], n2[: k + 1])[:, int(jump_type) - 1]
    return float(q @ durations)


def trajectory_to_csv(traj: Trajectory, dest: str | IO[str]) -> None:
    """Write the event log as CSV rows time,jump_type,n1,n2.

    One row per event with the post-event state; floats use shortest
    round-trip formatting so identical paths produce identical bytes.
    """
    own = isinstance(dest, str)
    fh: IO[str] = open(dest, "w", newline="") if own else dest
    try:
        fh.write("time,jump_type,n1,n2\n")
        n1, n2 = traj.step_states()
        for j in range(traj.n_events):
            fh.write(f"{float(traj.times[j])!r},{int(traj.types[j])},"
                     f"{n1[j + 1]},{n2[j + 1]}\n")
    finally:
        if own:
            fh.close()


def trajectory_csv_text(traj: Trajectory) -> str:
    buf = io.StringIO()
    trajectory_to_csv(traj, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class PathBatch:
    """Summary statistics of n_paths independent exact paths.

    Row i of every array belongs to the path with index i, so any slice of
    a batch is reproducible on its own.  ``rate_integrals`` holds the exact
    integral of each of the five rates over [0, horizon];
    ``window_infected_integral`` the integral of the infected fraction over
    ``window``.
    """

    params: ModelParams
    x0: State
    horizon: float
    seed: int
    n_paths: int
    window: tuple[float, float]
    terminal: np.ndarray
    counts: np.ndarray
    rate_integrals: np.ndarray
    window_infected_integral: np.ndarray

    def terminal_prevalence(self) -> np.ndarray:
        """Infected fraction of each terminal state (0 for an empty state)."""
        pop = self.terminal.sum(axis=1)
        return np.divide(self.terminal[:, 0], pop,
                         out=np.zeros(self.n_paths), where=pop > 0)

    def window_mean_prevalence(self) -> np.ndarray:
        """Per-path time average of the infected fraction over the window."""
        lo, hi = self.window
        if hi == lo:
            raise ValueError("window has zero length")
        return self.window_infected_integral / (hi - lo)


def simulate_batch(p: ModelParams, x0: State, t_max: float, n_paths: int,
                   seed: int, window: tuple[float, float] | None = None) -> PathBatch:
    """Summary statistics of n_paths exact paths sharing one batch seed.

    Path i uses the stream derived from (seed, i); results do not depend
    on n_paths beyond which paths exist.
    """
    if t_max < 0:
        raise ValueError(f"t_max must be nonnegative, got {t_max}")
    if n_paths < 1:
        raise ValueError(f"n_paths must be positive, got {n_paths}")
    _check_seed(seed)
    if window is None:
        window = (t_max / 2.0, t_max)
    w_lo, w_hi = window
    if not 0 <= w_lo <= w_hi <= t_max:
        raise ValueError(f"window must satisfy 0 <= lo <= hi <= t_max, got {window}")
    term, counts, ints, wprev = _kernels.batch_summaries(
        p.r, p.lam, p.p_i, p.alpha, p.p, p.mu1, p.mu2,
        x0.n1, x0.n2, float(t_max), float(w_lo), float(w_hi), seed, n_paths,
    )
    return PathBatch(params=p, x0=x0, horizon=float(t_max), seed=seed,
                     n_paths=n_paths, window=(float(w_lo), float(w_hi)),
                     terminal=term, counts=counts, rate_integrals=ints,
                     window_infected_integral=wprev)
