"""Simulation and numerical analysis of a two-compartment jump model of
HCV spread among injecting drug users.

Submodules: exact event-by-event simulation (ssa), the deterministic
large-population limit and its fixed point (odesys), law-of-large-numbers
and Gaussian-fluctuation checks (meanfield, fluctuations), stationary
analysis with an exact truncated oracle (stationary), and
likelihood-ratio sensitivity in the transmission probability
(sensitivity).
"""
from .fluctuations import (
    CLTReport,
    CovMatrix,
    bracket,
    clt_experiment,
    gamma,
    martingale_residual,
)
from .meanfield import LLNReport, error_bound, lln_experiment, scaled_initial
from .model import ModelParams, State, incidence, infected_fraction, rates, scale
from .odesys import EquilibriumPoint, PsiState, equilibrium, integrate, prevalence, rhs
from .sensitivity import (
    GreekEstimate,
    deterministic_greek,
    greek,
    mc_finite_difference,
    score,
)
from .ssa import (
    JumpType,
    PathBatch,
    Trajectory,
    set_threads,
    simulate,
    simulate_batch,
)
from .stationary import (
    StationaryEstimate,
    TruncatedStationary,
    estimate_stationary,
    moment_identity_residual,
    tail_bound,
    truncated_solve,
    zeta,
)

__version__ = "0.1.0"

__all__ = [
    "CLTReport",
    "CovMatrix",
    "EquilibriumPoint",
    "GreekEstimate",
    "JumpType",
    "LLNReport",
    "ModelParams",
    "PathBatch",
    "PsiState",
    "State",
    "StationaryEstimate",
    "Trajectory",
    "TruncatedStationary",
    "__version__",
    "bracket",
    "clt_experiment",
    "deterministic_greek",
    "equilibrium",
    "error_bound",
    "estimate_stationary",
    "gamma",
    "greek",
    "incidence",
    "infected_fraction",
    "integrate",
    "lln_experiment",
    "martingale_residual",
    "mc_finite_difference",
    "moment_identity_residual",
    "prevalence",
    "rates",
    "rhs",
    "scale",
    "scaled_initial",
    "score",
    "set_threads",
    "simulate",
    "simulate_batch",
    "tail_bound",
    "truncated_solve",
    "zeta",
]
