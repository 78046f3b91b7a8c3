"""Generalized-Lasso recovery of 1D piecewise-smooth signals with a residual
(local minus global) edge-detection operator."""

from .grid_signals import (F1, F2, EdgeVector, PiecewiseSignal, SignalVector,
                           UniformGrid, build_grid, jump_vector, sample,
                           sample_f1, sample_f2)
from .operators import (DEFAULT_ZETA, EdgeOperator, OperatorKind, RankReport,
                        binom_q, build_operator, concentration_factor,
                        dft_coefficients, global_edge_matrix, local_diff_matrix,
                        apply_local_diff, rank_diagnostics, residual_operator)
from .forward_models import (ForwardModel, NoiseSpec, add_noise,
                             gaussian_blur_model, identity_model,
                             sigma2_from_snr, undersample_model)
from .solver import (EstimateConfig, LassoProblem, SolverConfig, SolverError,
                     SolverReport, lasso_alpha, least_squares_estimate,
                     soft_threshold, solve_generalized_lasso)
from .metrics import (ErrorWindow, abs_error, rel_error, snr_db,
                      sparsity_profile, window_preset)

__version__ = "0.1.0"
