"""Exact Monte Carlo simulation of OU stochastic-volatility models.

The public surface is re-exported here; the kernels are selected at import
(compiled extension when available, pure Python otherwise, see
``exactsv.BACKEND``).
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .calibration import (CalibrationProblem, CalibrationResult, OptionQuote,
                          ParameterTransform, calibrate, mse_objective)
from .cftp import CftpConfig, CftpStats, sample_exact, sample_exact_batch, sample_exact_composite
from .errors import (DegenerateYError, ExactSvError, InvalidDeltaError,
                     IterationCapError, ValidationError)
from .ggc import (Constant, DirichletMeanSpec, GgcExampleSpec, KernelKind,
                  ScaledBeta, dirichlet_mean_moments, sample_bfry,
                  sample_tilted_bfry)
from .model import (Exact, Factor, ModelSpec, PathBatch, Truncated, Variant,
                    kappa, leverage_covariance, model_return_moments,
                    sample_path, sample_superposed_transition,
                    sample_transition, simulate)
from .optimize import NelderMeadConfig, NelderMeadResult, nelder_mead
from .pricing import (EuropeanCall, ForwardStartOption, MonteCarloResult,
                      black_scholes_call, price_european, price_forward_start,
                      price_path_dependent)
from .rng import RandomStream
from .truncation import (FixedN, StoppingBounded, StoppingMean,
                         l1_error_bound, sample_truncated,
                         sample_truncated_batch)

__all__ = [name for name in dir() if not name.startswith("_")]
