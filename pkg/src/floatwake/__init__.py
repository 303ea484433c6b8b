"""Free-vortex wake simulation with floating-platform coupling and
gradient-based dynamic induction control."""

__version__ = "0.1.0"

from .config import (ConfigError, LayoutParams, MissingKeyError,
                     NumericalParams, PlatformParams, SimConfig,
                     TurbineParams, ValidationError, config_from_dict,
                     config_to_dict, load_config, save_config, table1_config)
from .wake import (DomainError, VortexPoint, WakeState, empty_wake,
                   glauert_transition, induced_velocity, power,
                   power_coefficient, propagate, release_vortex_pair,
                   rotor_average_velocity, thrust, thrust_coefficient,
                   total_velocity, virtual_rotor_power)
from .platform import (DiscretePlatform, PlatformState, assemble_continuous,
                       build_discrete, discretize_zoh, equilibrium_state,
                       nacelle_kinematics, step_platform)
from .coupled import (A_MAX, A_MIN, ControlSequence, CoupledState, StepOutput,
                      discrete_platform, initial_state, rollout,
                      set_bottom_fixed, spin_up, step_coupled)
from .objective import (GradientError, GradientRecord, ObjectiveWeights,
                        finite_difference_gradient, gradient, horizon_cost,
                        stage_cost)
from .empc import (AdamState, EmpcConfig, EmpcTrace, adam_init, adam_update,
                   optimize_horizon, receding_horizon)
from .analysis import (AnalysisError, ChirpSpec, FrfEstimate, SweepResult,
                       chirp_response, chirp_signal, dft, dominant_frequency,
                       estimate_frf, run_control_signal, static_power,
                       stepped_sine_sweep, strouhal)
