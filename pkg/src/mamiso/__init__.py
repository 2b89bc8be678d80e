"""Joint transmit beamforming and movable-antenna placement for MU-MISO downlinks."""

__version__ = "0.1.0"

from . import kernels
from .channel import (AntennaLayout, PathSet, Scenario, channel_matrix, channel_response,
                      direction_vector, path_loss_db, sample_scenario)
from .errors import BracketingError, MamisoError, SingularGramError
from .fp import (BeamMatrix, FpAuxiliaries, build_quadratic_terms, compute_sinr, fp_objective,
                 ridge_power, solve_ridge_multiplier, sum_rate, update_auxiliaries,
                 update_beamformer)
from .harness import (ExperimentConfig, MetricsRecord, MonteCarloReport, monte_carlo,
                      run_fp, run_fpa_baseline, run_zf, stream_seed, write_outputs)
from .positions import (LineSearchConfig, LocalCoefficients, grad_local_objective,
                        grad_zf_objective, is_feasible, local_coefficients, local_objective,
                        optimize_layout, optimize_position, zf_objective)
from .zf import zf_beamformer, zf_sum_rate

__all__ = [
    "AntennaLayout", "BeamMatrix", "BracketingError", "ExperimentConfig", "FpAuxiliaries",
    "LineSearchConfig", "LocalCoefficients", "MamisoError", "MetricsRecord", "MonteCarloReport",
    "PathSet", "Scenario", "SingularGramError", "build_quadratic_terms", "channel_matrix",
    "channel_response", "compute_sinr", "direction_vector", "fp_objective",
    "grad_local_objective", "grad_zf_objective", "is_feasible", "kernels",
    "local_coefficients", "local_objective", "monte_carlo", "optimize_layout",
    "optimize_position", "path_loss_db", "ridge_power", "run_fp", "run_fpa_baseline", "run_zf",
    "sample_scenario", "solve_ridge_multiplier", "stream_seed", "sum_rate",
    "update_auxiliaries", "update_beamformer", "write_outputs", "zf_beamformer",
    "zf_objective", "zf_sum_rate",
]
