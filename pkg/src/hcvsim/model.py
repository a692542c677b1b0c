"""Parameters and transition structure of the two-compartment jump model.

The state (n1, n2) counts infected and susceptible injecting drug users.
Five jump types drive the dynamics: arrival of an already-infected user,
exit of an infected user, infection of a susceptible, arrival of a
susceptible user, and exit of a susceptible.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Model parameters.

    r      exogenous arrival rate of already-infected users
    lam    arrival rate of users recruited from the general population
    p_i    probability that a recruited user joins already infected
    alpha  contact rate of a susceptible user
    p      transmission probability per contact with an infected user
    mu1    exit rate per infected user
    mu2    exit rate per susceptible user
    """

    r: float
    lam: float
    p_i: float
    alpha: float
    p: float
    mu1: float
    mu2: float

    def __post_init__(self) -> None:
        if self.r < 0 or self.lam < 0 or self.alpha < 0:
            raise ValueError("rates r, lam, alpha must be nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.p_i <= 1.0:
            raise ValueError(f"p_i must lie in [0, 1], got {self.p_i}")
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("exit rates mu1, mu2 must be positive")


@dataclass(frozen=True)
class State:
    """Population state: n1 infected users, n2 susceptible users."""

    n1: int
    n2: int

    def __post_init__(self) -> None:
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"state counts must be nonnegative, got {(self.n1, self.n2)}")

    @property
    def total(self) -> int:
        return self.n1 + self.n2


def infected_fraction(s: State) -> float:
    """Fraction of the current population that is infected; 0 for an empty population."""
    if s.total == 0:
        return 0.0
    return s.n1 / s.total


def rates(p: ModelParams, s: State) -> np.ndarray:
    """Transition rates out of state ``s``, one per jump type.

    Order: infected arrival, infected exit, infection, susceptible
    arrival, susceptible exit.  New recruits join the infected side with
    probability p_i times the infected fraction, so the two arrival
    rates always sum to r + lam.
    """
    f = infected_fraction(s)
    mix = p.lam * p.p_i * f
    return np.array(
        [
            p.r + mix,
            p.mu1 * s.n1,
            p.alpha * p.p * s.n2 * f,
            p.lam - mix,
            p.mu2 * s.n2,
        ]
    )


def rates_along(p: ModelParams, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    """Transition rates at each state of a sequence, shape (len, 5).

    Vectorized companion of :func:`rates` for whole-path computations.
    """
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    pop = n1 + n2
    f = np.divide(n1, pop, out=np.zeros_like(pop), where=pop > 0)
    mix = p.lam * p.p_i * f
    return np.column_stack(
        [
            p.r + mix,
            p.mu1 * n1,
            p.alpha * p.p * n2 * f,
            p.lam - mix,
            p.mu2 * n2,
        ]
    )


def scale(p: ModelParams, n: int) -> ModelParams:
    """Parameters of the density-scaled system of size ``n``.

    Only the two population-independent arrival rates grow with system
    size; per-capita rates are untouched.
    """
    if n < 1:
        raise ValueError(f"system size must be a positive integer, got {n}")
    return replace(p, r=p.r * n, lam=p.lam * n)


def incidence(p: ModelParams, s: State) -> float:
    """Per-capita arrival rate (r + lam) / (n1 + n2) at state ``s``."""
    if s.total == 0:
        raise ValueError("incidence is undefined for an empty population")
    return (p.r + p.lam) / s.total
