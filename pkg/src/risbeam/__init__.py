"""Double-RIS aided multi-user MIMO downlink: channel simulation and
sum-MSE transceiver design by MM-based alternating optimization."""

from .baselines import (SchemeId, SeparateBeamformingState, solve_double_separate,
                        solve_scheme, solve_single_ris, truncate_channels)
from .channel import (GeometryError, LinkGeometry, cascaded_channel,
                      cascaded_channel_separate, generate_channels,
                      generate_channels_seeded, make_link_geometry)
from .config import (ConfigError, SystemConfig, config_digest, db_to_linear,
                     dbm_to_watt, derive_seed, load_config, save_config,
                     seeded_rng, validate_config, watt_to_dbm, with_overrides)
from .equalizer import lmmse_equalizers, update_equalizers
from .harness import (ResultRow, SweepSpec, channel_digest, emit_outputs,
                      parse_results_csv, run_sweep, summarize)
from .objective import (mse_matrix, mse_matrix_from_channel, sum_mse,
                        sum_mse_from_channels, vectorized_theta_objective)
from .precoder import (KktContext, SingularGramError, build_kkt_context,
                       precoder_for_mu, precoder_update_from_channels,
                       solve_power_constrained, transmit_power, update_precoder)
from .reflection import (ReflectionWorkspace, SurrogateState, build_workspace,
                         lambda_max_w, mm_stage1, mm_stage2, phase_update,
                         quadratic_phase_step, quartic_objective,
                         update_reflection)
from .solver import SolverOptions, flop_estimate, initial_state, solve
from .types import (BeamformingState, ChannelSet, DimensionMismatchError,
                    IterationTrace, MseReport, load_channels, save_channels)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
