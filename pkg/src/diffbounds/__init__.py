"""Numerical laboratory for off-diagonal diffusion bounds of degenerate parabolic equations."""

from .bounds import (AssumptionError, BoundComparison, CertificationError, certify_dg_bound,
                     certify_dg_bounds, check_tilted_propagator_inequality, constant_k,
                     decay_rate_G, measure_opnorm, optimize_G, sharp_bound, tail_bound,
                     theorem1_bound, tilted_generator_sup, validity_interval_ok)
from .coefficients import (AssumptionReport, CoefficientError, CoefficientSet, compute_alpha_beta,
                           validate_assumptions)
from .cutoff import (CutoffCertificate, CutoffError, build_phi, build_regularized_distance,
                     build_xi_general, build_xi_sharp)
from .evolution import (PropagatorMatrix, SolverConfig, SolverError, apply_adjoint,
                        apply_propagator, assemble_adjoint_propagator, assemble_propagator, solve,
                        step)
from .grid import Grid, GridError, Region, indicator, lp_norm, region_distance

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
