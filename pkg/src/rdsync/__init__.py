"""Certification and simulation of complete synchronization for linearly
coupled delayed reaction-diffusion neural networks under aperiodically
intermittent pinning control."""

from .model import (ActivationSpec, CouplingTopology, DelaySpec, NodeDynamics,
                    SpatialDomain, is_irreducible, validate_model)
from .schedule import (IntermittentSchedule, ScheduleError, ScheduleWarning,
                       generate_random, in_control, rho_star, small_delay_ok,
                       theta_omega)
from .graph import (GraphAnalysisError, PerronWeights, left_null_vector,
                    lyapunov_stability_check, pinned_matrix, sym_part_max_eig)
from .criterion import (CriterionInputs, CriterionReport, comparison_bound_check,
                        compute_alphas, compute_d, solve_lambda,
                        theorem1_certificate, tune_epsilons)
from .sim import (ErrorTrajectory, Grid1D, SimConfig, SimulationDivergence,
                  Simulator, build_laplacian, delayed_field, error_norm,
                  laplacian_eigenvalues, make_grid, poincare_residual,
                  simulate, simulate_uncoupled, write_trajectory_csv)
from .config import (ConfigError, ExperimentConfig, dump_config, fit_decay_rate,
                     load_config, loads_config, preset, preset_adaptive,
                     preset_static, preset_static_certification)

__version__ = "0.1.0"
