"""Numerical laboratory for fast- and slow-decaying ground states of a quasilinear Schrödinger equation."""

from .errors import (
    BracketInvalid, ContractionFailure, ConvergenceFailure, DegenerateFit, DivergentIntegral,
    InconsistentProfile, InvalidArgument, NumericalFailure, PositivityViolation,
    PotentialSpecViolation, QuasiDecayError, SolverDegeneracy,
)
from .transform import Nonlinearity
from .radial_ode import Profile, RadialProblem, StepControls
from .shooting import ShootConfig, ShotClass, classify_shot, find_fast_decay, scan_structure, shoot
from .profiles import ScalingFamily, lane_emden, singular_constant
from .norms import WeightedNormSpec
from .potentials import PotentialSpec
from .pohozaev import energy_balance, pohozaev_residual, regime_verdict
from .perturbation import FixedPointConfig, linear_solve, solve_slow_decay
from .reduction import E_error_norm, ReductionResult, find_critical_xi, reduced_functional

__version__ = "0.1.0"
