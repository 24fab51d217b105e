"""Rough delay equations: delayed rough paths, segment solver, derivative
cocycle, Lyapunov spectra, stationary trajectories and manifold probes."""
from .controlled import (DelayedControlledSegment, compose_sigma, constant_segment,
                         controlled_segment, norm_controlled, norm_delayed, rebase)
from .errors import (ConfigError, ContractionError, DivergenceError, GridMismatchError,
                     OutOfWindowError, RoughDelayError, WrongKindError)
from .ergodic import (LyapunovReport, StationaryTrajectory, System, contraction_condition,
                      find_stationary, lyapunov_spectrum, stable_rate_probe,
                      stationary_zero_check, unstable_rate_probe, unstable_subspace_pullback)
from .fields import VectorFieldBundle, from_registry, scalar_field
from .integrate import delayed_rough_integral, sewing_defect
from .kernels import BACKEND
from .linearize import SegmentBasis, cocycle_matrix, derivative_segment, growth_diagnostics
from .noise import SamplePath, sample_brownian, wiener_shift
from .roughpath import (DelayedRoughPath, augment_time, hoelder_norm, lift, lift_ito,
                        lift_stratonovich, validate_exponents)
from .solve import semiflow, solution_norm_diagnostic, solve_segment

__version__ = "0.1.0"
