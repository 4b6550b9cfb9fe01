"""Servo module emulation behind a register map.

Models a commodity smart servo: an internal position or current loop running
at the edge rate, configured and observed purely through named registers. The
three coupling schemes are then rebuilt on top of nothing but register reads
and writes, showing that the gated coupling needs only a stock position servo
with a current-limit function.

Registers
---------
``operating_mode``    "position" or "current"; selects the internal loop
``goal_position``     position setpoint, rad (position mode)
``goal_current``      current command, A (current mode)
``current_limit``     symmetric bound on the applied current, A, >= 0;
                      ``inf`` (the default) disables the limit
``torque_constant``   N*m/A, > 0; ideal current-torque proportionality
``kp``, ``kd``        internal loop gains (position mode)
``present_position``  rad, read-only
``present_velocity``  rad/s, read-only
``present_current``   applied control current of the last completed step, A,
                      read-only; external torque is not sensed

Writes land immediately in the file and are picked up by the next executed
servo step; present_* always reflect the last completed step.

The register realization drives the servo loop with a plain position goal, so
it reproduces engine runs that use ``derivative_mode="measurement_only"``
(there is no velocity-reference register on a stock servo). With a transport
delay the bus carries values computed at read time, while the engine
evaluates the gravity feedforward at the current follower position; the two
paths therefore coincide exactly whenever the gravity feedforward is zero,
and for any delay when no gravity model is configured.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    FRBT,
    IGBT,
    SPBT,
    SCHEMES,
    DIVERGENCE_LIMIT,
    ScenarioConfig,
    Trace,
    TRACE_COLUMNS,
)
from .errors import (
    DivergenceError,
    NonFiniteInputError,
    ReadOnlyRegisterError,
    StateError,
    UnknownRegisterError,
    ValidationError,
)
from .model import (
    AxisState,
    GainSet,
    GravityModel,
    PlantParams,
    Scaling,
    environment_force,
    force_at,
    gate_input,
    gravity_feedforward,
    pd_control,
    plant_step,
    scaled_follower_input,
)

__all__ = [
    "CURRENT_MODE",
    "OPERATING_MODES",
    "POSITION_MODE",
    "READ_ONLY_REGISTERS",
    "REGISTER_NAMES",
    "WRITABLE_REGISTERS",
    "ActuatorSim",
    "RegisterFile",
    "actuator_edge_step",
    "read_register",
    "register_coordinator_tick",
    "run_register_scenario",
    "write_register",
]

POSITION_MODE = "position"
CURRENT_MODE = "current"
OPERATING_MODES = (POSITION_MODE, CURRENT_MODE)

WRITABLE_REGISTERS = (
    "operating_mode",
    "goal_position",
    "goal_current",
    "current_limit",
    "torque_constant",
    "kp",
    "kd",
)
READ_ONLY_REGISTERS = ("present_position", "present_velocity", "present_current")
REGISTER_NAMES = WRITABLE_REGISTERS + READ_ONLY_REGISTERS


@dataclass
class RegisterFile:
    """Raw register storage with the factory defaults preloaded.

    The defaults match the baseline servo: kp=10, kd=2, position mode, no
    current limit, unit torque constant.
    """

    operating_mode: str = POSITION_MODE
    goal_position: float = 0.0
    goal_current: float = 0.0
    current_limit: float = math.inf
    torque_constant: float = 1.0
    kp: float = 10.0
    kd: float = 2.0
    present_position: float = 0.0
    present_velocity: float = 0.0
    present_current: float = 0.0

    def __post_init__(self):
        _validate_register("operating_mode", self.operating_mode)
        _validate_register("current_limit", self.current_limit)
        _validate_register("torque_constant", self.torque_constant)
        _validate_register("kp", self.kp)
        _validate_register("kd", self.kd)

    @property
    def gains(self) -> GainSet:
        return GainSet(kp=self.kp, kd=self.kd)


def _validate_register(name: str, value) -> None:
    if name == "operating_mode":
        if value not in OPERATING_MODES:
            raise ValidationError(
                f"operating_mode must be one of {', '.join(OPERATING_MODES)}, "
                f"got {value!r}"
            )
        return
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"register {name} takes a number, got {value!r}")
    value = float(value)
    if name == "current_limit":
        if math.isnan(value) or value < 0.0:
            raise ValidationError(f"current_limit must be >= 0, got {value}")
        return
    if not math.isfinite(value):
        raise NonFiniteInputError(f"register {name} must be finite, got {value}")
    if name == "torque_constant" and value <= 0.0:
        raise ValidationError(f"torque_constant must be > 0, got {value}")
    if name in ("kp", "kd") and value < 0.0:
        raise ValidationError(f"{name} must be >= 0, got {value}")


@dataclass
class ActuatorSim:
    """One servo module: a register file in front of a position/current loop
    and the joint it drives."""

    plant: PlantParams = field(default_factory=lambda: PlantParams(1.0e-3, 1.0e-2))
    registers: RegisterFile = field(default_factory=RegisterFile)
    state: AxisState = field(default_factory=AxisState)
    actuator_id: str = "servo"
    last_servo_output: float = 0.0  # loop output before the limit, diagnostics


def read_register(act: ActuatorSim, name: str):
    """Return a register's current value."""
    if name not in REGISTER_NAMES:
        raise UnknownRegisterError(f"unknown register {name!r}")
    return getattr(act.registers, name)


def write_register(act: ActuatorSim, name: str, value) -> None:
    """Write a register; the value is picked up by the next executed step."""
    if name not in REGISTER_NAMES:
        raise UnknownRegisterError(f"unknown register {name!r}")
    if name in READ_ONLY_REGISTERS:
        raise ReadOnlyRegisterError(f"register {name} is read-only")
    _validate_register(name, value)
    if name != "operating_mode":
        value = float(value)
    setattr(act.registers, name, value)


def actuator_edge_step(act: ActuatorSim, external_torque: float, dt: float) -> float:
    """Run one internal servo step and advance the joint.

    Position mode runs the register-gain PD loop against goal_position (no
    velocity reference); current mode applies goal_current * torque_constant.
    Either output is clamped to +-current_limit * torque_constant before it
    reaches the joint, which also sees ``external_torque``. Returns the
    applied control torque; present_* are updated to the new step.
    """
    if not (math.isfinite(external_torque) and math.isfinite(dt)) or dt <= 0.0:
        raise NonFiniteInputError(
            f"actuator_edge_step needs finite external_torque and dt > 0, "
            f"got {external_torque}, {dt}"
        )
    regs = act.registers
    y = act.state.position
    v = act.state.velocity
    if regs.operating_mode == POSITION_MODE:
        u = pd_control(regs.gains, regs.goal_position, 0.0, y, v)
    else:
        u = regs.goal_current * regs.torque_constant
    act.last_servo_output = u
    limit = regs.current_limit
    if math.isinf(limit):
        applied = u
    else:
        applied = gate_input(u, limit * regs.torque_constant)
    act.state = plant_step(act.state, external_torque + applied, act.plant, dt)
    regs.present_position = act.state.position
    regs.present_velocity = act.state.velocity
    regs.present_current = applied / regs.torque_constant
    return applied


# --- scheme realization over the register bus ---------------------------------------


def _log(bus_log, step: int, actuator_id: str, op: str, name: str, value) -> None:
    if bus_log is not None:
        bus_log.append(f"{step},{actuator_id},{op},{name},{value!r}")


def _goal_writes(
    leader: ActuatorSim,
    follower: ActuatorSim,
    scaling: Scaling,
    bus_log,
    step: int,
) -> list:
    """Position exchange: each side's goal becomes the other's present position."""
    y_l = read_register(leader, "present_position")
    _log(bus_log, step, leader.actuator_id, "R", "present_position", y_l)
    y_f = read_register(follower, "present_position")
    _log(bus_log, step, follower.actuator_id, "R", "present_position", y_f)
    return [
        (follower, "goal_position", scaling.beta * y_l),
        (leader, "goal_position", y_f / scaling.beta),
    ]


def _effort_write(
    scheme: str,
    leader: ActuatorSim,
    follower: ActuatorSim,
    scaling: Scaling,
    gravity: GravityModel,
    bus_log,
    step: int,
) -> list:
    """Follower-effort transfer: present current, feedforward-corrected and
    scaled, becomes the leader's limit (gated) or command (reflected)."""
    if scheme == SPBT:
        return []
    i_f = read_register(follower, "present_current")
    _log(bus_log, step, follower.actuator_id, "R", "present_current", i_f)
    y_f = read_register(follower, "present_position")
    _log(bus_log, step, follower.actuator_id, "R", "present_position", y_f)
    # the motor constant comes off the datasheet, not the bus
    kt = follower.registers.torque_constant
    ff_current = gravity_feedforward(gravity, y_f) / kt
    i_f_star = scaled_follower_input(i_f, ff_current, scaling.alpha)
    if scheme == IGBT:
        return [(leader, "current_limit", abs(i_f_star))]
    return [(leader, "goal_current", -i_f_star)]


def _apply_writes(writes, bus_log, step: int) -> None:
    for act, name, value in writes:
        write_register(act, name, value)
        _log(bus_log, step, act.actuator_id, "W", name, value)


def _check_modes(scheme: str, leader: ActuatorSim, follower: ActuatorSim) -> None:
    want_leader = CURRENT_MODE if scheme == FRBT else POSITION_MODE
    if leader.registers.operating_mode != want_leader:
        raise StateError(
            f"{scheme} needs the leader in {want_leader} mode, "
            f"got {leader.registers.operating_mode}"
        )
    if follower.registers.operating_mode != POSITION_MODE:
        raise StateError(
            f"the follower must run in position mode, "
            f"got {follower.registers.operating_mode}"
        )


def register_coordinator_tick(
    scheme: str,
    leader: ActuatorSim,
    follower: ActuatorSim,
    scaling: Scaling,
    gravity: GravityModel,
    bus_log: list | None = None,
    step: int = 0,
) -> None:
    """One coordinator exchange expressed purely as register traffic.

    Fixed order: read both present positions, write the follower goal, the
    leader goal, then the leader current register (limit for the gated
    scheme, command for reflection; nothing for the symmetric scheme).
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown scheme {scheme!r}")
    _check_modes(scheme, leader, follower)
    writes = _goal_writes(leader, follower, scaling, bus_log, step)
    writes += _effort_write(scheme, leader, follower, scaling, gravity, bus_log, step)
    _apply_writes(writes, bus_log, step)


def run_register_scenario(
    config: ScenarioConfig,
    torque_constant: float = 1.0,
    bus_log: list | None = None,
) -> Trace:
    """Run a scenario through the register realization and return its trace.

    The servo loop offers no velocity reference, so only configs with
    derivative_mode="measurement_only" are reproducible here; anything else
    is rejected. With equal gains and torque_constant=1 the resulting trace
    is bit-identical to run_scenario on the same config.

    ``bus_log``, if given, collects one ``step,actuator_id,R|W,register,value``
    line per register transaction.
    """
    config.validate()
    if config.derivative_mode != "measurement_only":
        raise ValidationError(
            "the register path has no velocity-reference register; "
            'use derivative_mode="measurement_only"'
        )
    rates = config.rates
    scheme_cfg = config.scheme
    tag = scheme_cfg.scheme
    scaling = scheme_cfg.scaling
    gravity = scheme_cfg.follower_gravity
    f_edge = rates.f_edge
    dt = 1.0 / f_edge
    steps = int(round(config.duration * f_edge))
    m = rates.steps_per_tick
    delay_steps = rates.extra_delay_ticks * m
    refresh_each_step = config.bound_refresh == "edge_step"
    alpha = scaling.alpha
    leader_force = config.leader_force
    extra_force = config.follower_extra_force
    env = config.environment.copy()

    leader = ActuatorSim(
        plant=config.leader_plant,
        registers=RegisterFile(
            operating_mode=CURRENT_MODE if tag == FRBT else POSITION_MODE,
            torque_constant=torque_constant,
            kp=config.leader_gains.kp,
            kd=config.leader_gains.kd,
        ),
        actuator_id="leader",
    )
    follower = ActuatorSim(
        plant=config.follower_plant,
        registers=RegisterFile(
            torque_constant=torque_constant,
            kp=config.follower_gains.kp,
            kd=config.follower_gains.kd,
        ),
        actuator_id="follower",
    )
    _check_modes(tag, leader, follower)
    if delay_steps > 0:
        # until the first delayed exchange lands, the leader must be held at
        # the zero-state command, not at factory defaults (unbounded limit)
        init = _goal_writes(leader, follower, scaling, None, 0)
        init += _effort_write(tag, leader, follower, scaling, gravity, None, 0)
        for act, name, value in init:
            write_register(act, name, value)

    pending: deque = deque()

    rows = steps + 1
    cols = {name: [0.0] * rows for name in TRACE_COLUMNS}
    c_t = cols["t"]
    c_y_l, c_v_l = cols["y_l"], cols["v_l"]
    c_y_f, c_v_f = cols["y_f"], cols["v_f"]
    c_u_l, c_u_l_star = cols["u_l"], cols["u_l_star"]
    c_u_f, c_u_f_star = cols["u_f"], cols["u_f_star"]
    c_f_l, c_f_f = cols["f_l"], cols["f_f"]
    held_goal_l = [0.0] * rows
    held_goal_f = [0.0] * rows
    held_bound = [0.0] * rows

    for k in range(rows):
        t = k / f_edge
        if env.wall_position is None and t >= env.engage_time:
            env.capture(follower.state.position)
        if k % m == 0:
            writes = _goal_writes(leader, follower, scaling, bus_log, k)
            if not refresh_each_step:
                writes += _effort_write(
                    tag, leader, follower, scaling, gravity, bus_log, k
                )
            pending.append((k + delay_steps, writes))
        if refresh_each_step and tag != SPBT:
            writes = _effort_write(tag, leader, follower, scaling, gravity, bus_log, k)
            pending.append((k + delay_steps, writes))
        while pending and pending[0][0] <= k:
            _apply_writes(pending.popleft()[1], bus_log, k)

        y_l, v_l = leader.state.position, leader.state.velocity
        y_f, v_f = follower.state.position, follower.state.velocity
        f_l_now = force_at(leader_force, t)
        f_env = environment_force(env, y_f, t)
        u_ff_now = gravity_feedforward(gravity, y_f)
        # previews of the servo outputs for the record; the actuators
        # recompute the same expressions internally when stepped
        l_regs = leader.registers
        f_regs = follower.registers
        u_l = pd_control(l_regs.gains, l_regs.goal_position, 0.0, y_l, v_l)
        u_f = pd_control(f_regs.gains, f_regs.goal_position, 0.0, y_f, v_f)
        u_f_star_now = scaled_follower_input(u_f, u_ff_now, alpha)
        if tag == SPBT:
            u_l_star = u_l
            bound_now = 0.0
        elif tag == IGBT:
            limit = l_regs.current_limit
            bound_now = (
                limit * l_regs.torque_constant if not math.isinf(limit) else math.inf
            )
            u_l_star = u_l if math.isinf(limit) else gate_input(u_l, bound_now)
        else:
            u_l_star = l_regs.goal_current * l_regs.torque_constant
            bound_now = -u_l_star

        c_t[k] = t
        c_y_l[k] = y_l
        c_v_l[k] = v_l
        c_y_f[k] = y_f
        c_v_f[k] = v_f
        c_u_l[k] = u_l
        c_u_l_star[k] = u_l_star
        c_u_f[k] = u_f
        c_u_f_star[k] = u_f_star_now
        c_f_l[k] = f_l_now
        c_f_f[k] = f_env
        held_goal_l[k] = l_regs.goal_position
        held_goal_f[k] = f_regs.goal_position
        held_bound[k] = bound_now

        if k == steps:
            break
        actuator_edge_step(leader, f_l_now, dt)
        f_extra = force_at(extra_force, t)
        actuator_edge_step(follower, f_env + f_extra, dt)
        if not (abs(leader.state.position) <= DIVERGENCE_LIMIT) or not (
            abs(follower.state.position) <= DIVERGENCE_LIMIT
        ):
            name, y = (
                ("y_l", leader.state.position)
                if not (abs(leader.state.position) <= DIVERGENCE_LIMIT)
                else ("y_f", follower.state.position)
            )
            raise DivergenceError(
                f"{name} = {y!r} left +-{DIVERGENCE_LIMIT:g} rad at edge step "
                f"{k + 1} (t = {(k + 1) / f_edge:.6g} s)",
                step=k + 1,
            )

    return Trace(
        **{name: np.asarray(cols[name]) for name in TRACE_COLUMNS},
        held_leader_goal=np.asarray(held_goal_l),
        held_follower_goal=np.asarray(held_goal_f),
        held_bound=np.asarray(held_bound),
        scheme=tag,
        f_edge=f_edge,
        f_high=rates.f_high,
        wall_position=env.wall_position,
    )
