"""Entropy-stable adaptive moving-mesh finite difference solver for special
relativistic hydrodynamics and magnetohydrodynamics."""

from .states import (ConsState, EntropyVars, NonConvergenceError, PotentialSet,
                     PrimState, UnphysicalStateError, cons_to_prim,
                     entropy_quantities, max_signal_speed, physical_flux,
                     prim_to_cons)
from .ecflux import CombinationCoeffs, highorder_coeffs, log_mean
from .config import ConfigError, OutputPlan, SimulationConfig, parse_config
from .problems import PRESETS, ProblemSetup, make_problem
from .solver import RunArtifacts, Simulation, StepFailure, convergence_study

__version__ = "0.1.0"
