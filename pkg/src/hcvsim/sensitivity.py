"""Derivative of path-functional expectations in the transmission probability.

Tilting the intensity of infection jumps gives an unbiased likelihood-ratio
estimator: the derivative of E[F] in p equals E[F * score] / p, where the
score is the infection-jump count minus its compensator (the integrated
infection rate).  The score has zero mean, so centering both factors gives
an estimator of the same quantity with lower variance.  A finite difference
of the deterministic equilibrium prevalence provides the large-population
baseline.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from . import odesys
from .model import ModelParams, State
from .ssa import JumpType, Trajectory, count_jumps, integrated_rate, simulate, simulate_batch

SHIPPED_FUNCTIONALS = ("terminal_prevalence", "terminal_infected", "window_prevalence")

FORMS = ("product", "covariance")


def score(traj: Trajectory, t: float | None = None) -> float:
    """Compensated infection-jump count of one path at time t.

    Zero mean for every t; the likelihood-ratio weight of the path.
    """
    return count_jumps(traj, JumpType.INFECTION, t) - integrated_rate(
        traj, JumpType.INFECTION, t
    )


@dataclass(frozen=True)
class GreekEstimate:
    """Monte-Carlo derivative estimate with its standard error."""

    functional: str
    form: str
    t: float
    n_paths: int
    seed: int
    estimate: float
    se: float

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        z = float(norm.ppf(0.5 + level / 2.0))
        return self.estimate - z * self.se, self.estimate + z * self.se

    def to_json(self) -> str:
        lo, hi = self.ci()
        return json.dumps(
            {
                "functional": self.functional,
                "form": self.form,
                "T": self.t,
                "n_paths": self.n_paths,
                "seed": self.seed,
                "estimate": self.estimate,
                "se": self.se,
                "ci95": [lo, hi],
            },
            indent=2,
        )


def _estimate(f_vals: np.ndarray, score_vals: np.ndarray, p_val: float,
              form: str) -> tuple[float, float]:
    n = len(f_vals)
    if form == "product":
        vals = f_vals * score_vals
        return float(vals.mean() / p_val), float(vals.std(ddof=1) / math.sqrt(n) / p_val)
    if form == "covariance":
        vals = (f_vals - f_vals.mean()) * (score_vals - score_vals.mean())
        est = vals.sum() / (n - 1) / p_val
        return float(est), float(vals.std(ddof=1) / math.sqrt(n) / p_val)
    raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def greek(p: ModelParams, x0: State, t: float, n_paths: int, seed: int,
          functional: str | Callable[[Trajectory], float] = "terminal_prevalence",
          form: str = "covariance") -> GreekEstimate:
    """Likelihood-ratio estimate of d/dp E[F] for the chain with parameters p.

    ``functional`` is one of the shipped names (evaluated from batch
    summaries, so paths are never stored) or any callable on a
    :class:`Trajectory` (paths are then simulated one by one).  The
    product form averages F * score / p; the covariance form centers both
    factors first, same limit, smaller variance.  Pass scaled parameters
    and a scaled initial state to differentiate a size-N system.
    """
    if p.p <= 0:
        raise ValueError("the derivative weight divides by p; need p > 0")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    if callable(functional):
        f_vals = np.empty(n_paths)
        score_vals = np.empty(n_paths)
        for i in range(n_paths):
            traj = simulate(p, x0, t, seed, path_index=i)
            f_vals[i] = functional(traj)
            score_vals[i] = score(traj)
        name = getattr(functional, "__name__", "custom")
    else:
        if functional not in SHIPPED_FUNCTIONALS:
            raise ValueError(
                f"functional must be callable or one of {SHIPPED_FUNCTIONALS}, "
                f"got {functional!r}"
            )
        batch = simulate_batch(p, x0, t, n_paths, seed)
        if functional == "terminal_prevalence":
            f_vals = batch.terminal_prevalence()
        elif functional == "terminal_infected":
            f_vals = batch.terminal[:, 0].astype(float)
        else:
            f_vals = batch.window_mean_prevalence()
        score_vals = batch.counts[:, 2] - batch.rate_integrals[:, 2]
        name = functional
    est, se = _estimate(f_vals, score_vals, p.p, form)
    return GreekEstimate(functional=name, form=form, t=float(t),
                         n_paths=n_paths, seed=seed, estimate=est, se=se)


def deterministic_greek(p: ModelParams, step: float = 1e-5) -> float:
    """Central finite difference of the equilibrium prevalence in p.

    The two shifted parameter sets must stay in [0, 1] and produce the
    same equilibrium branch; a branch change across the stencil means the
    derivative does not exist there.
    """
    if not 0 <= p.p - step <= p.p + step <= 1:
        raise ValueError(f"stencil p +- {step} leaves [0, 1] for p = {p.p}")
    from dataclasses import replace

    lo = odesys.equilibrium(replace(p, p=p.p - step))
    mid = odesys.equilibrium(p)
    hi = odesys.equilibrium(replace(p, p=p.p + step))
    if not lo.branch == mid.branch == hi.branch:
        raise ValueError(
            f"equilibrium branch changes across the stencil "
            f"({lo.branch}, {mid.branch}, {hi.branch}); derivative undefined"
        )
    return (odesys.prevalence(hi) - odesys.prevalence(lo)) / (2.0 * step)


@dataclass(frozen=True)
class FiniteDifference:
    """Monte-Carlo central finite difference of E[F] in p."""

    eps: float
    n_paths_per_batch: int
    estimate: float
    se: float


def mc_finite_difference(p: ModelParams, x0: State, t: float, n_paths: int,
                         seed: int, eps: float | None = None,
                         functional: str = "terminal_prevalence") -> FiniteDifference:
    """Independent-batch finite difference (E_{p+eps}[F] - E_{p-eps}[F]) / (2 eps).

    Two independent batches per side; the default offset is one tenth of
    p.  Serves as a derivative oracle that involves no likelihood ratio.
    """
    from dataclasses import replace

    if eps is None:
        eps = 0.1 * p.p
    if not 0 <= p.p - eps <= p.p + eps <= 1:
        raise ValueError(f"offset p +- {eps} leaves [0, 1] for p = {p.p}")
    if functional not in SHIPPED_FUNCTIONALS:
        raise ValueError(f"functional must be one of {SHIPPED_FUNCTIONALS}")

    def side(pp: ModelParams, seeds: tuple[int, int]) -> tuple[float, float]:
        vals = []
        for s in seeds:
            batch = simulate_batch(pp, x0, t, n_paths, s)
            if functional == "terminal_prevalence":
                vals.append(batch.terminal_prevalence())
            elif functional == "terminal_infected":
                vals.append(batch.terminal[:, 0].astype(float))
            else:
                vals.append(batch.window_mean_prevalence())
        allv = np.concatenate(vals)
        return float(allv.mean()), float(allv.var(ddof=1) / len(allv))

    m_hi, v_hi = side(replace(p, p=p.p + eps), (seed + 1, seed + 2))
    m_lo, v_lo = side(replace(p, p=p.p - eps), (seed + 3, seed + 4))
    return FiniteDifference(
        eps=float(eps),
        n_paths_per_batch=n_paths,
        estimate=(m_hi - m_lo) / (2.0 * eps),
        se=math.sqrt(v_hi + v_lo) / (2.0 * eps),
    )
