"""Deterministic large-population limit: ODE system and its fixed point.

The limit densities (psi1, psi2) of infected and susceptible users obey

    psi1' = r + lam*p_i*phi - mu1*psi1 + alpha*p*psi1*psi2/(psi1+psi2)
    psi2' = lam*(1 - p_i*phi) - mu2*psi2 - alpha*p*psi1*psi2/(psi1+psi2)

with phi = psi1/(psi1+psi2).  Adding the two lines, the total population
follows psi1' + psi2' = r + lam - mu1*psi1 - mu2*psi2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Callable

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .model import ModelParams

DEFAULT_TOL = 1e-9

BRANCH_INTERIOR = "interior"
BRANCH_R0_ENDEMIC = "r0_endemic"
BRANCH_R0_DISEASE_FREE = "r0_disease_free"


@dataclass(frozen=True)
class PsiState:
    """Density state of the limit system; the population never vanishes."""

    psi1: float
    psi2: float

    def __post_init__(self) -> None:
        if self.psi1 < 0 or self.psi2 < 0:
            raise ValueError(f"densities must be nonnegative, got {(self.psi1, self.psi2)}")
        if self.psi1 + self.psi2 <= 0:
            raise ValueError("total density must be positive")

    @property
    def total(self) -> float:
        return self.psi1 + self.psi2


@dataclass(frozen=True)
class EquilibriumPoint:
    """Fixed point of the limit system with the branch that produced it."""

    xi1: float
    xi2: float
    branch: str


def rhs(p: ModelParams, psi) -> np.ndarray:
    """Right-hand side of the limit system at the point ``psi``.

    The mixing terms divide by the total density, so a zero total is
    rejected rather than patched over.
    """
    psi1, psi2 = float(psi[0]), float(psi[1])
    s = psi1 + psi2
    if s <= 0:
        raise ValueError(f"total density must be positive, got {s}")
    phi = psi1 / s
    cross = p.alpha * p.p * psi1 * psi2 / s
    return np.array(
        [
            p.r + p.lam * p.p_i * phi - p.mu1 * psi1 + cross,
            p.lam * (1.0 - p.p_i * phi) - p.mu2 * psi2 - cross,
        ]
    )


@dataclass(frozen=True)
class PsiPath:
    """Dense solution of the limit system on [0, t_max]."""

    params: ModelParams
    x0: PsiState
    t_max: float
    tol: float
    _sol: object

    def at(self, t: float) -> tuple[float, float]:
        """Solution value at one time."""
        self._check(t)
        v = self._sol(t)
        return float(v[0]), float(v[1])

    def sample(self, ts: np.ndarray) -> np.ndarray:
        """Solution values at an array of times, shape (len(ts), 2)."""
        ts = np.asarray(ts, dtype=float)
        if ts.size:
            self._check(ts.min())
            self._check(ts.max())
        return self._sol(ts).T

    def integral_of(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                    t: float | None = None, n_panels: int = 1000) -> float:
        """Composite-Simpson integral of fn(psi1, psi2) over [0, t].

        The integrand is sampled from the dense output at 2*n_panels + 1
        uniform points.
        """
        if t is None:
            t = self.t_max
        self._check(t)
        ts = np.linspace(0.0, t, 2 * n_panels + 1)
        vals = self.sample(ts)
        return float(simpson(fn(vals[:, 0], vals[:, 1]), x=ts))

    def to_csv(self, ts: np.ndarray, dest: str | IO[str]) -> None:
        """Write rows t,psi1,psi2 at the given times."""
        vals = self.sample(np.asarray(ts, dtype=float))
        own = isinstance(dest, str)
        fh: IO[str] = open(dest, "w", newline="") if own else dest
        try:
            fh.write("t,psi1,psi2\n")
            for t, (v1, v2) in zip(ts, vals):
                fh.write(f"{float(t)!r},{float(v1)!r},{float(v2)!r}\n")
        finally:
            if own:
                fh.close()

    def _check(self, t: float) -> None:
        if not 0 <= t <= self.t_max:
            raise ValueError(f"t must lie in [0, {self.t_max}], got {t}")


def integrate(p: ModelParams, x0: PsiState, t_max: float,
              tol: float = DEFAULT_TOL) -> PsiPath:
    """Solve the limit system forward with dense output.

    Uses an adaptive explicit Runge-Kutta 4(5) pair with absolute and
    relative local error control at ``tol``.  When r = 0 and the path
    starts on the infection-free axis, psi1 = 0 is an invariant; its
    derivative is pinned to zero so roundoff cannot push the solution off
    the axis.
    """
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    axis_locked = p.r == 0.0 and x0.psi1 == 0.0

    def f(_t: float, y: np.ndarray) -> np.ndarray:
        out = rhs(p, y)
        if axis_locked:
            out[0] = 0.0
        return out

    sol = solve_ivp(f, (0.0, t_max), [x0.psi1, x0.psi2], method="RK45",
                    dense_output=True, rtol=tol, atol=tol)
    if not sol.success:  # pragma: no cover - defensive; the field is smooth
        raise RuntimeError(f"integration failed: {sol.message}")
    return PsiPath(params=p, x0=x0, t_max=float(t_max), tol=tol, _sol=sol.sol)


def equilibrium(p: ModelParams) -> EquilibriumPoint:
    """Fixed point of the limit system in the closed positive quadrant.

    For r > 0 the infected coordinate solves
    a*mu1*xi1**2 - (a*b - c)*xi1 - b*r = 0 with a = alpha*p - mu1 + mu2,
    b = r + lam, c = r*mu1 + lam*(1 - p_i)*mu2, and xi2 follows from the
    total-population balance mu1*xi1 + mu2*xi2 = r + lam.  Of the two
    quadratic roots only one keeps xi2 nonnegative; that root is returned
    (both roots are positive when a < 0, and the selected one is the ODE
    attractor).  For r = 0 the system settles on the infection-free point
    unless the growth indicator rho = alpha*p + mu2*p_i - mu1 is positive.
    """
    if p.r == 0.0:
        rho = p.alpha * p.p + p.mu2 * p.p_i - p.mu1
        if rho > 0:
            a = p.alpha * p.p - p.mu1 + p.mu2
            xi1 = p.lam * rho / (a * p.mu1)
            xi2 = max((p.lam - p.mu1 * xi1) / p.mu2, 0.0)
            return EquilibriumPoint(xi1, xi2, BRANCH_R0_ENDEMIC)
        return EquilibriumPoint(0.0, p.lam / p.mu2, BRANCH_R0_DISEASE_FREE)

    a = p.alpha * p.p - p.mu1 + p.mu2
    b = p.r + p.lam
    c = p.r * p.mu1 + p.lam * (1.0 - p.p_i) * p.mu2
    if a == 0.0:
        xi1 = b * p.r / c
    else:
        d = a * b - c
        disc = max(d * d + 4.0 * a * b * p.r * p.mu1, 0.0)
        sq = math.sqrt(disc)
        # both expressions give the same root; pick the one whose
        # numerator adds terms of equal sign
        if d >= 0:
            xi1 = (d + sq) / (2.0 * a * p.mu1)
        else:
            xi1 = 2.0 * b * p.r / (sq - d)
    xi2 = max((b - p.mu1 * xi1) / p.mu2, 0.0)
    return EquilibriumPoint(xi1, xi2, BRANCH_INTERIOR)


def prevalence(e: EquilibriumPoint) -> float:
    """Infected fraction at the fixed point (0 if the point is empty)."""
    s = e.xi1 + e.xi2
    if s == 0:
        return 0.0
    return e.xi1 / s


def total_equal_exit(p: ModelParams, x0: PsiState, ts: np.ndarray) -> np.ndarray:
    """Closed-form total density when both exit rates coincide.

    With mu1 = mu2 = mu the total S = psi1 + psi2 obeys the linear
    equation S' = r + lam - mu*S, so
    S(t) = S(0)*exp(-mu*t) + (r + lam)/mu * (1 - exp(-mu*t)).
    """
    if p.mu1 != p.mu2:
        raise ValueError("closed form requires mu1 == mu2")
    ts = np.asarray(ts, dtype=float)
    decay = np.exp(-p.mu1 * ts)
    return x0.total * decay + (p.r + p.lam) / p.mu1 * (1.0 - decay)
