"""Wave propagation through purely time-modulated step media."""
from .effective import classify, coefficients, effective_field_at, effective_solution, lambda_of
from .errors import CapacityError, ConfigError, NearSingularError, NumericalError, ReproductionMismatch
from .model import Layout, RegimeParams, StepProfile, WaveVectorSetup, build_profile, omega_p_squared, scalar_reduction
from .oracle import FieldTrace, ScatteringCoeffs, field_at, solve_scattering, trace

__version__ = "0.1.0"
