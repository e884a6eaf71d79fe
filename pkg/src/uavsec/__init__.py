"""Energy-efficient secure UAV-OFDMA downlink planner.

Joint design of the information UAV's path and speed, per-subcarrier user
scheduling and transmit power, and the multi-antenna jammer UAV's
artificial-noise covariances, maximizing delivered bits per Joule under
per-user rate floors and worst-case eavesdropper-leakage caps.
"""

from .scenario import (ArrayParams, Eavesdropper, FlightPowerParams, GroundUser,
                       JammerPlan, ScenarioConfig, ScenarioError, Trajectory,
                       generate_jammer_trajectory, initial_info_trajectory,
                       load_scenario, materialize_jammer_plan, save_scenario,
                       serialize_scenario)
from .channel import (ChannelSet, UncertaintySample, build_channels, distance3d,
                      info_channel_gain, jammer_channel_matrix, steering_vector,
                      uncertainty_samples, worst_case_info_gain)
from .power import (FlightModelError, PowerBreakdown, V_FLOOR, flight_power,
                    info_total_power, jammer_total_power, most_efficient_speed)
from .metrics import (AllocationState, AuditResult, audit, energy_efficiency,
                      leakage_sinr, user_rate)
from .fractional import RatioResult, SubproblemInfeasible, maximize_ratio
from .allocation import AllocationInfeasible, Sp1Params, solve_sp1
from .trajopt import Sp2Params, TrajectoryInfeasible, solve_sp2
from .orchestrate import (RunParams, RunSpec, SolveReport, alternate_optimize,
                          export_results, load_solution, run_baseline, run_sweep)

__version__ = "0.1.0"
