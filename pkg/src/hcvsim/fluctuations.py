"""Martingale structure of the chain and the Gaussian fluctuation limit.

Subtracting the integrated drift from the centered path leaves a
martingale M whose predictable quadratic covariation has entries built
from the same rate integrals; rescaled by sqrt(N), the deviation of the
density path from the deterministic limit converges to a centered
Gaussian process whose covariance Gamma(t) integrates the limit rates.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import IO

import numpy as np
from scipy.integrate import simpson

from . import odesys
from .model import ModelParams, rates_along, scale
from .odesys import PsiState
from .ssa import JumpType, Trajectory, integrated_rate, simulate_batch
from .meanfield import scaled_initial


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric 2x2 covariance matrix."""

    g11: float
    g12: float
    g22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def is_psd(self, tol: float = 1e-12) -> bool:
        """Positive semidefinite up to a relative tolerance on the determinant."""
        if self.g11 < -tol or self.g22 < -tol:
            return False
        det = self.g11 * self.g22 - self.g12 * self.g12
        return det >= -tol * max(1.0, abs(self.g11 * self.g22))


def martingale_residual(traj: Trajectory, t: float | None = None) -> np.ndarray:
    """Path minus initial state minus integrated drift, at time t.

    Component 1 compensates with the integral of q1 + q3 - q2, component 2
    with q4 - q3 - q5.  The result has zero mean at every t and its second
    moments are the bracket entries.
    """
    if t is None:
        t = traj.horizon
    ints = [integrated_rate(traj, k, t) for k in JumpType]
    n1, n2 = traj.step_states()
    k = int(np.searchsorted(traj.times, t, side="right"))
    return np.array(
        [
            (n1[k] - traj.x0.n1) - (ints[0] + ints[2] - ints[1]),
            (n2[k] - traj.x0.n2) - (ints[3] - ints[2] - ints[4]),
        ]
    )


def bracket(traj: Trajectory, t: float | None = None) -> CovMatrix:
    """Predictable quadratic covariation of the martingale part at time t.

    Diagonal entries integrate the rates moving each component (all with
    positive sign); the off-diagonal entry is minus the integrated
    infection rate, the only jump moving both components.
    """
    if t is None:
        t = traj.horizon
    ints = [integrated_rate(traj, k, t) for k in JumpType]
    return CovMatrix(
        g11=ints[0] + ints[1] + ints[2],
        g12=-ints[2],
        g22=ints[2] + ints[3] + ints[4],
    )


def gamma(p: ModelParams, x0: PsiState, t: float,
          tol: float = odesys.DEFAULT_TOL, n_panels: int = 1000) -> CovMatrix:
    """Covariance of the Gaussian fluctuation limit at time t.

    Entries integrate the limit-system rates along psi(x0, .):
    the first diagonal entry accumulates the three rates that move the
    infected coordinate, the second the three that move the susceptible
    coordinate, and the off-diagonal entry is minus the integrated
    infection rate.
    """
    path = odesys.integrate(p, x0, t, tol)
    ts = np.linspace(0.0, t, 2 * n_panels + 1)
    vals = path.sample(ts)
    q = rates_along(p, vals[:, 0], vals[:, 1])
    g11 = float(simpson(q[:, 0] + q[:, 1] + q[:, 2], x=ts))
    g12 = -float(simpson(q[:, 2], x=ts))
    g22 = float(simpson(q[:, 2] + q[:, 3] + q[:, 4], x=ts))
    return CovMatrix(g11=g11, g12=g12, g22=g22)


@dataclass(frozen=True)
class CLTReport:
    """Empirical versus limiting covariance of W = sqrt(N) (X/N - psi) at one time."""

    n: int
    t: float
    n_paths: int
    seed: int
    w: np.ndarray
    empirical: CovMatrix
    theoretical: CovMatrix

    @property
    def mean_w(self) -> np.ndarray:
        return self.w.mean(axis=0)

    def relative_errors(self) -> np.ndarray:
        """|empirical - theoretical| / |theoretical| entrywise (g11, g12, g22)."""
        e = np.array([self.empirical.g11, self.empirical.g12, self.empirical.g22])
        th = np.array([self.theoretical.g11, self.theoretical.g12, self.theoretical.g22])
        return np.abs(e - th) / np.abs(th)

    def w_to_csv(self, dest: str | IO[str]) -> None:
        own = isinstance(dest, str)
        fh: IO[str] = open(dest, "w", newline="") if own else dest
        try:
            fh.write("w1,w2\n")
            for w1, w2 in self.w:
                fh.write(f"{float(w1)!r},{float(w2)!r}\n")
        finally:
            if own:
                fh.close()

    def w_csv_text(self) -> str:
        buf = io.StringIO()
        self.w_to_csv(buf)
        return buf.getvalue()


def clt_experiment(p: ModelParams, x0: PsiState, n: int, t: float,
                   n_paths: int, seed: int,
                   tol: float = odesys.DEFAULT_TOL) -> CLTReport:
    """Sample W at time t over a batch and compare covariances.

    The batch runs the size-N chain from the rounded initial state; the
    empirical covariance (unbiased normalization) is set against the
    quadrature value of Gamma(t).
    """
    ps = scale(p, n)
    x0n = scaled_initial(x0, n)
    batch = simulate_batch(ps, x0n, t, n_paths, seed)
    path = odesys.integrate(p, x0, t, tol)
    psi_t = np.array(path.at(t))
    w = np.sqrt(n) * (batch.terminal / n - psi_t)
    cov = np.cov(w, rowvar=False, ddof=1)
    emp = CovMatrix(g11=float(cov[0, 0]), g12=float(cov[0, 1]), g22=float(cov[1, 1]))
    theo = gamma(p, x0, t, tol)
    return CLTReport(n=n, t=t, n_paths=n_paths, seed=seed, w=w,
                     empirical=emp, theoretical=theo)
