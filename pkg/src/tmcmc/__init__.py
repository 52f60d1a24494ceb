"""Transformation-based MCMC samplers, diagnostics and an experiment harness."""
from .diagnostics import (
    CoordinatePolicy,
    DriftReport,
    KSCurve,
    PiN0Estimate,
    acceptance_rate,
    convergence_iteration,
    drift_ratio,
    estimate_pi_N0,
    ks_curve,
    ks_distance,
)
from .diffeo import IsotropicMap, RadialProfile, TransformedTarget
from .kernels import (
    AcceptanceStats,
    ChainState,
    EssentialPState,
    KernelKind,
    KernelSpec,
    init_state,
    run_chains,
    step,
)
from .proposals import EpsilonKind, EpsilonProposal, MoveType
from .targets import (
    GaussianTarget,
    LogTarget,
    MixtureFormTarget,
    StudentTTarget,
    TailClass,
    compound_symmetric,
)

__version__ = "0.1.0"
