"""Stationary regime: long-run simulation, exact truncated solve, tail bound.

The chain is ergodic whenever it cannot die out, so one long path with a
burn-in yields stationary samples; their standard errors use batch means
to absorb autocorrelation.  On a truncated state simplex the stationary
law is also available exactly from a sparse linear solve, providing the
small-scale oracle, and a Chernoff-style bound controls the mass that the
truncation can miss.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import IO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import _kernels, odesys
from .model import ModelParams, State, rates, scale

E_MINUS_1 = math.e - 1.0
INV_E_MINUS_1 = math.exp(-1.0) - 1.0


def batch_means_se(values: np.ndarray, n_batches: int = 32) -> float:
    """Standard error of the mean of a correlated sequence via batch means."""
    values = np.asarray(values, dtype=float)
    m = len(values)
    if m < 4:
        raise ValueError(f"need at least 4 values, got {m}")
    b = max(2, min(n_batches, m // 2))
    size = m // b
    means = values[: b * size].reshape(b, size).mean(axis=1)
    # normalize before the spread: squaring values near 1e-200 underflows
    # the variance to zero even though the ratio of spread to mean is fine
    top = float(np.abs(means).max())
    if top == 0.0:
        return 0.0
    return float((means / top).std(ddof=1) * top / math.sqrt(b))


@dataclass(frozen=True)
class StationaryEstimate:
    """Stationary summary of one long size-N path sampled after burn-in."""

    params: ModelParams
    n: int
    x0: State
    burn_in: float
    spacing: float
    n_samples: int
    seed: int
    samples: np.ndarray

    def density_samples(self) -> np.ndarray:
        return self.samples / self.n

    @property
    def mean_y(self) -> np.ndarray:
        return self.samples.mean(axis=0) / self.n

    @property
    def mean_y_se(self) -> np.ndarray:
        return np.array([batch_means_se(self.samples[:, 0] / self.n),
                         batch_means_se(self.samples[:, 1] / self.n)])

    def prevalence_samples(self) -> np.ndarray:
        pop = self.samples.sum(axis=1)
        return np.divide(self.samples[:, 0], pop,
                         out=np.zeros(len(self.samples)), where=pop > 0)

    @property
    def prevalence(self) -> float:
        return float(self.prevalence_samples().mean())

    @property
    def prevalence_se(self) -> float:
        return batch_means_se(self.prevalence_samples())


def estimate_stationary(p: ModelParams, n: int, n_samples: int = 2000,
                        burn_in: float | None = None,
                        spacing: float | None = None,
                        horizon: float | None = None, seed: int = 0,
                        x0: State | None = None) -> StationaryEstimate:
    """Sample the stationary regime of the size-N chain from one long path.

    States are recorded at n_samples equally spaced times in
    (burn_in, horizon]; passing ``spacing`` instead of ``horizon`` fixes
    the gap directly.  Defaults: burn-in 10/min(mu1, mu2), spacing
    1/min(mu1, mu2) (about one relaxation time, to tame autocorrelation),
    start at the rounding of N times the deterministic fixed point so the
    burn-in only has local fluctuations to forget.
    """
    if n_samples < 4:
        raise ValueError(f"n_samples must be at least 4, got {n_samples}")
    mu_minus = min(p.mu1, p.mu2)
    if burn_in is None:
        burn_in = 10.0 / mu_minus
    if horizon is not None:
        if spacing is not None:
            raise ValueError("give spacing or horizon, not both")
        if horizon <= burn_in:
            raise ValueError(
                f"horizon must exceed burn_in {burn_in}, got {horizon}")
        spacing = (horizon - burn_in) / n_samples
    if spacing is None:
        spacing = 1.0 / mu_minus
    if x0 is None:
        e = odesys.equilibrium(p)
        x0 = State(int(round(n * e.xi1)), int(round(n * e.xi2)))
    ps = scale(p, n)
    times = burn_in + spacing * np.arange(1, n_samples + 1)
    samples = _kernels.sample_path(
        ps.r, ps.lam, ps.p_i, ps.alpha, ps.p, ps.mu1, ps.mu2,
        x0.n1, x0.n2, times, seed, 0,
    )
    return StationaryEstimate(params=p, n=n, x0=x0, burn_in=float(burn_in),
                              spacing=float(spacing), n_samples=n_samples,
                              seed=seed, samples=samples)


def generator_exp_decay(p: ModelParams, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    """Generator of the chain applied to x -> exp(-||x||), elementwise.

    Arrivals shift the test function by a factor e^-1, exits by a factor
    e, and infections leave the total unchanged, which collapses the sum
    over jumps to

        exp(-(x1+x2)) * [(lam+r)(e^-1 - 1) + (mu1*x1 + mu2*x2)(e - 1)].

    Its stationary expectation is exactly zero.  Pass the parameters of
    the chain the samples came from (the scaled ones for a size-N chain).
    """
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    return np.exp(-(n1 + n2)) * (
        (p.lam + p.r) * INV_E_MINUS_1 + (p.mu1 * n1 + p.mu2 * n2) * E_MINUS_1
    )


def moment_identity_residual(samples: np.ndarray, p: ModelParams,
                             n_batches: int = 32) -> tuple[float, float]:
    """Mean and batch-means SE of the stationary moment identity over samples.

    The mean should sit within a few standard errors of zero when the
    samples are stationary for the chain with parameters ``p``.
    """
    samples = np.asarray(samples)
    vals = generator_exp_decay(p, samples[:, 0], samples[:, 1])
    return float(vals.mean()), batch_means_se(vals, n_batches)


def zeta(p: ModelParams) -> float:
    """Mean of the dominating M/M/inf population used by the tail bound."""
    return (p.r + p.lam * p.p_i) / min(p.mu1, p.mu2)


def tail_bound(p: ModelParams, n: int, k: float) -> float:
    """Optimized Chernoff bound on P(||Y_N(inf)|| > K) for K above zeta.

    The infimum over theta of exp(N(-theta*K + zeta*(e^theta - 1))) is
    attained at theta = ln(K/zeta), giving
    exp(-N*(K*ln(K/zeta) - K + zeta)).
    """
    if n < 1:
        raise ValueError(f"system size must be positive, got {n}")
    z = zeta(p)
    if k <= z:
        raise ValueError(f"bound requires K > zeta = {z}, got K = {k}")
    if z == 0.0:
        return 0.0
    return math.exp(-n * (k * math.log(k / z) - k + z))


@dataclass(frozen=True)
class TruncatedStationary:
    """Exact stationary law of the chain truncated to n1 + n2 <= k.

    States are enumerated lexicographically by (n1 + n2, n1) so vectors
    are comparable across implementations.  ``residual`` is the largest
    balance-equation violation of the returned probabilities;
    ``tail_mass_bound`` bounds the stationary mass the truncation cut off
    (None when the bound's precondition k > zeta fails).
    """

    params: ModelParams
    k: int
    states: np.ndarray
    probs: np.ndarray
    residual: float
    tail_mass_bound: float | None

    def index_of(self, n1: int, n2: int) -> int:
        s = n1 + n2
        if n1 < 0 or n2 < 0 or s > self.k:
            raise ValueError(f"state {(n1, n2)} outside the truncated simplex")
        return s * (s + 1) // 2 + n1

    def mean(self) -> np.ndarray:
        return self.probs @ self.states

    def prevalence(self) -> float:
        pop = self.states.sum(axis=1)
        f = np.divide(self.states[:, 0], pop,
                      out=np.zeros(len(self.states), dtype=float), where=pop > 0)
        return float(self.probs @ f)

    def tv_against_samples(self, samples: np.ndarray) -> float:
        """Total variation between this law and an empirical sample.

        Sample states outside the simplex keep their full mass as
        discrepancy.
        """
        samples = np.asarray(samples)
        emp = np.zeros(len(self.probs))
        outside = 0
        for n1, n2 in samples:
            if n1 + n2 <= self.k:
                emp[self.index_of(int(n1), int(n2))] += 1.0
            else:
                outside += 1
        emp /= len(samples)
        return 0.5 * (float(np.abs(self.probs - emp).sum()) + outside / len(samples))

    def to_csv(self, dest: str | IO[str]) -> None:
        own = isinstance(dest, str)
        fh: IO[str] = open(dest, "w", newline="") if own else dest
        try:
            fh.write("n1,n2,prob\n")
            for (n1, n2), q in zip(self.states, self.probs):
                fh.write(f"{n1},{n2},{float(q)!r}\n")
        finally:
            if own:
                fh.close()

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def truncated_solve(p: ModelParams, k: int) -> TruncatedStationary:
    """Exact stationary distribution on the simplex n1 + n2 <= k.

    The two arrival rates are set to zero on the boundary n1 + n2 = k,
    which keeps the truncated matrix a proper generator; the balance
    equations (one replaced by the normalization) are solved sparsely and
    the worst residual is reported.
    """
    if k < 0:
        raise ValueError(f"truncation level must be nonnegative, got {k}")
    m = (k + 1) * (k + 2) // 2
    states = np.empty((m, 2), dtype=np.int64)
    for s in range(k + 1):
        base = s * (s + 1) // 2
        for n1 in range(s + 1):
            states[base + n1] = (n1, s - n1)

    disp = [(1, 0), (-1, 0), (1, -1), (0, 1), (0, -1)]
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    for i in range(m):
        n1, n2 = int(states[i, 0]), int(states[i, 1])
        q = rates(p, State(n1, n2))
        if n1 + n2 == k:
            q[0] = 0.0
            q[3] = 0.0
        out_rate = 0.0
        for jt in range(5):
            if q[jt] <= 0.0:
                continue
            t1, t2 = n1 + disp[jt][0], n2 + disp[jt][1]
            s = t1 + t2
            j = s * (s + 1) // 2 + t1
            rows.append(i)
            cols.append(j)
            data.append(float(q[jt]))
            out_rate += float(q[jt])
        rows.append(i)
        cols.append(i)
        data.append(-out_rate)
    gen = sp.csr_matrix((data, (rows, cols)), shape=(m, m))

    a = gen.T.tolil()
    a[0, :] = 1.0
    b = np.zeros(m)
    b[0] = 1.0
    pi = spsolve(a.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ gen).max())

    z = zeta(p)
    mass_bound = tail_bound(p, 1, k) if k > z else None
    return TruncatedStationary(params=p, k=k, states=states, probs=pi,
                               residual=residual, tail_mass_bound=mass_bound)
