"""Law-of-large-numbers checks: scaled paths against the deterministic limit.

For system size N the jump chain starts from the integer rounding of
N * x0 and its density Y = X/N is compared pathwise with the solution of
the limit system started at x0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import odesys
from .model import ModelParams, State, scale
from .odesys import PsiState
from .ssa import simulate

DEFAULT_GRID = 1000


def scaled_initial(x0: PsiState, n: int) -> State:
    """Integer initial state of the size-N system: componentwise rounding of N*x0."""
    return State(int(round(n * x0.psi1)), int(round(n * x0.psi2)))


def error_bound(p: ModelParams, x0: PsiState, n: int, t: float,
                tol: float = odesys.DEFAULT_TOL, n_panels: int = 1000) -> float:
    """A priori bound on the mean squared sup-distance between Y and psi.

    The bound is the product of an initial-condition-plus-noise term,

        ||X(0)/N - x0||^2 + (T + T^2 * ||X(0)|| / N) / N,

    and the Gronwall factor exp(T * int_0^T (1 + 1/||psi(s)||)^2 ds), with
    L1 norms throughout.  The integral uses composite Simpson on the dense
    ODE output.  The factor grows so fast in T that the bound is loose at
    moderate horizons; it is still a valid ceiling for the simulated mean.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    x0n = scaled_initial(x0, n)
    init_sq = (abs(x0n.n1 / n - x0.psi1) + abs(x0n.n2 / n - x0.psi2)) ** 2
    noise = (t + t * t * (x0n.n1 + x0n.n2) / n) / n
    path = odesys.integrate(p, x0, t, tol)
    grow = path.integral_of(lambda a, b: (1.0 + 1.0 / (a + b)) ** 2,
                            t, n_panels=n_panels)
    return (init_sq + noise) * math.exp(t * grow)


@dataclass(frozen=True)
class LLNReport:
    """Per-path squared sup-deviations of one batch and the a priori bound."""

    n: int
    t: float
    n_paths: int
    seed: int
    sup_sq: np.ndarray
    bound: float

    @property
    def sup_sq_mean(self) -> float:
        return float(self.sup_sq.mean())

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.sup_sq, q))

    @property
    def bound_exceeded(self) -> bool:
        return self.sup_sq_mean > self.bound

    def to_json(self) -> str:
        return json.dumps(
            {
                "N": self.n,
                "T": self.t,
                "n_paths": self.n_paths,
                "seed": self.seed,
                "sup_err_sq_mean": self.sup_sq_mean,
                "bound": self.bound,
                "quantiles": {
                    "q50": self.quantile(0.50),
                    "q90": self.quantile(0.90),
                    "q99": self.quantile(0.99),
                },
                "bound_exceeded": self.bound_exceeded,
            },
            indent=2,
        )


def lln_experiment(p: ModelParams, x0: PsiState, n: int, t: float,
                   n_paths: int, seed: int, tol: float = odesys.DEFAULT_TOL,
                   grid_points: int = DEFAULT_GRID) -> LLNReport:
    """Simulate n_paths size-N paths and measure sup_t ||X(t)/N - psi(t)||^2.

    The deviation of the piecewise-constant path is checked at both sides
    of every jump and at ``grid_points`` uniform times where only the
    smooth solution moves; the maximum over all checks is reported per
    path.  L1 norm, squared.
    """
    ps = scale(p, n)
    x0n = scaled_initial(x0, n)
    path = odesys.integrate(p, x0, t, tol)
    grid = np.linspace(0.0, t, grid_points + 1)
    psi_grid = path.sample(grid)
    # dense samples for interpolating psi at event times
    fine = np.linspace(0.0, t, 20 * grid_points + 1)
    psi_fine = path.sample(fine)

    sup_sq = np.empty(n_paths)
    for i in range(n_paths):
        traj = simulate(ps, x0n, t, seed, path_index=i)
        n1, n2 = traj.step_states()
        y1 = n1 / n
        y2 = n2 / n
        p1 = np.interp(traj.times, fine, psi_fine[:, 0])
        p2 = np.interp(traj.times, fine, psi_fine[:, 1])
        dev_after = np.abs(y1[1:] - p1) + np.abs(y2[1:] - p2)
        dev_before = np.abs(y1[:-1] - p1) + np.abs(y2[:-1] - p2)
        k = np.searchsorted(traj.times, grid, side="right")
        dev_grid = np.abs(y1[k] - psi_grid[:, 0]) + np.abs(y2[k] - psi_grid[:, 1])
        worst = max(dev_grid.max(initial=0.0), dev_after.max(initial=0.0),
                    dev_before.max(initial=0.0))
        sup_sq[i] = worst * worst

    bound = error_bound(p, x0, n, t, tol)
    return LLNReport(n=n, t=t, n_paths=n_paths, seed=seed,
                     sup_sq=sup_sq, bound=bound)
