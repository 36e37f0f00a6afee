"""Configuration sequencing, syringe-pump simulation and timed orchestration
for a single-arm robot chemist."""
from .kinematics import (
    CartesianPose,
    ContractError,
    JointConfig,
    JointLimits,
    VelocityLimits,
    interpolate,
    motion_duration,
    tilt_from_vertical,
)
from .sequencer import (
    InfeasibleError,
    SequenceInstance,
    SequencePlan,
    TargetLayer,
    TaskSpec,
    brute_force,
    compare_methods,
    solve_global,
    solve_per_task,
)
from .skills import TwistProfile, UprightConstraint, generate_pour_waypoints, stir_bar_profile, validate_upright
from .pump import PumpConfig, PumpState, apply_command, transfer_duration, volume_to_microsteps
from .orchestrator import RunReport, compile, execute, michael_procedure
from .analysis import GcmsSample, fit_proportionality, predict_yield, summarize

__version__ = "0.1.0"
