"""Deterministic multirate simulator for position-coupled bilateral rigs.

A leader joint driven by an operator force and a follower joint meeting a
stiff wall each run their own fixed-rate position servo, while a slower
coordinator exchanges positions and effort between them under one of three
couplings: symmetric position tracking, force reflection, or effort-gated
position tracking. The package simulates the pair at register-level
fidelity, extracts operability and contact-stability metrics from the
traces, and ships a CLI that writes delimited traces, metric tables, and
vector figures.
"""

from .actuator import (
    ActuatorSim,
    RegisterFile,
    actuator_edge_step,
    read_register,
    register_coordinator_tick,
    run_register_scenario,
    write_register,
)
from .config import CONFIG_KEYS, parse_config, render_config
from .engine import (
    FRBT,
    IGBT,
    SCHEMES,
    SPBT,
    RateConfig,
    ScenarioConfig,
    SchemeConfig,
    Trace,
    run_scenario,
)
from .errors import (
    AnalysisError,
    BilatsimError,
    ConfigError,
    DivergenceError,
    NonFiniteInputError,
    ReadOnlyRegisterError,
    StateError,
    TraceFormatError,
    UnknownRegisterError,
    ValidationError,
)
from .metrics import (
    MetricReport,
    action_reaction_residual,
    bounce_events,
    build_report,
    contact_force_peak_to_peak,
    error_peak_to_peak,
    free_motion_speed,
    rate_sensitivity,
    steady_state_error,
)
from .model import (
    AxisState,
    EnvironmentModel,
    GainSet,
    PlantParams,
    Scaling,
    StepForce,
    ZeroForce,
    gate_input,
    pd_control,
    plant_step,
    scaled_follower_input,
)
from .traceio import parse_trace, read_trace, render_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "ActuatorSim",
    "AnalysisError",
    "AxisState",
    "BilatsimError",
    "CONFIG_KEYS",
    "ConfigError",
    "DivergenceError",
    "EnvironmentModel",
    "FRBT",
    "GainSet",
    "IGBT",
    "MetricReport",
    "NonFiniteInputError",
    "PlantParams",
    "RateConfig",
    "ReadOnlyRegisterError",
    "RegisterFile",
    "SCHEMES",
    "SPBT",
    "Scaling",
    "ScenarioConfig",
    "SchemeConfig",
    "StateError",
    "StepForce",
    "Trace",
    "TraceFormatError",
    "UnknownRegisterError",
    "ValidationError",
    "ZeroForce",
    "action_reaction_residual",
    "actuator_edge_step",
    "bounce_events",
    "build_report",
    "contact_force_peak_to_peak",
    "error_peak_to_peak",
    "free_motion_speed",
    "gate_input",
    "parse_config",
    "parse_trace",
    "pd_control",
    "plant_step",
    "rate_sensitivity",
    "read_register",
    "read_trace",
    "register_coordinator_tick",
    "render_config",
    "render_trace",
    "run_register_scenario",
    "run_scenario",
    "scaled_follower_input",
    "steady_state_error",
    "write_register",
    "write_trace",
]
