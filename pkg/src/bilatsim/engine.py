"""Two-rate closed-loop simulation of a position-coupled leader/follower pair.

Both joints run a position servo at the edge rate F2. A coordinator running at
the lower rate F1 (F2 an integral multiple of F1) exchanges goals between the
two sides and, depending on the coupling scheme, a follower-effort value for
the leader:

* ``SPBT``  both sides servo toward the other's last exchanged position.
* ``FRBT``  the leader is torque-commanded with the negated, scaled follower
  effort; its own position loop output is ignored.
* ``IGBT``  the leader keeps its position loop, but the applied command is
  clamped into the band spanned by the scaled follower effort.

Timing model: edge step k covers [k/F2, (k+1)/F2). A coordinator exchange at
step k reads the joint states at k/F2 and the follower servo output of the
most recently completed edge step; its outputs are held constant (zero-order
hold) for the next F2/F1 edge steps. ``extra_delay_ticks`` delays activation
of each exchange by whole coordinator periods.

The follower-effort value the leader clamps against (IGBT) or is driven by
(FRBT) can be refreshed at two cadences, selected by
``ScenarioConfig.bound_refresh``. ``edge_step`` (default) re-evaluates it
every edge step from the follower output of the most recently completed step,
so it tracks the follower servo's intra-tick ripple; ``tick`` freezes the
value sampled at each coordinator exchange. Position goals are zero-order
held either way. The two modes coincide when F1 = F2. With position goals
held over a tick, the follower output decays within the hold interval as the
error is absorbed, so a tick-sampled value systematically reads the bottom of
that ripple and under-reports the mean effort; the per-step mode keeps the
reflected torque equal to the follower's actual running effort.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, NonFiniteInputError, ValidationError
from .model import (
    AxisState,
    EnvironmentModel,
    ForceProfile,
    GainSet,
    GravityModel,
    NoGravity,
    PlantParams,
    Scaling,
    StepForce,
    ZeroForce,
    environment_force,
    force_at,
    gate_input,
    gravity_feedforward,
    pd_control,
    plant_step,
    scaled_follower_input,
)

__all__ = [
    "BOUND_REFRESH_MODES",
    "DERIVATIVE_MODES",
    "DIVERGENCE_LIMIT",
    "FRBT",
    "IGBT",
    "SCHEMES",
    "SPBT",
    "HeldCommand",
    "RateConfig",
    "ScenarioConfig",
    "SchemeConfig",
    "Trace",
    "coordinator_tick",
    "edge_leader_torque",
    "reference_velocity_estimate",
    "run_scenario",
]

SPBT = "SPBT"
FRBT = "FRBT"
IGBT = "IGBT"
SCHEMES = (SPBT, FRBT, IGBT)

DERIVATIVE_MODES = ("ref_rate_estimate", "measurement_only")

BOUND_REFRESH_MODES = ("edge_step", "tick")

DIVERGENCE_LIMIT = 1.0e6  # rad; beyond this the run is declared divergent


@dataclass(frozen=True)
class RateConfig:
    """Coordinator rate F1 and edge servo rate F2, both in Hz."""

    f_high: float = 1.0e3
    f_edge: float = 1.0e4
    extra_delay_ticks: int = 0

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.f_high) and self.f_high > 0.0):
            problems.append(f"f_high must be finite and > 0, got {self.f_high}")
        if not (math.isfinite(self.f_edge) and self.f_edge > 0.0):
            problems.append(f"f_edge must be finite and > 0, got {self.f_edge}")
        if not problems:
            if self.f_high > self.f_edge:
                problems.append(
                    f"f_high ({self.f_high}) must not exceed f_edge ({self.f_edge})"
                )
            else:
                ratio = self.f_edge / self.f_high
                if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                    problems.append(
                        f"f_edge must be an integral multiple of f_high, ratio {ratio}"
                    )
        if not isinstance(self.extra_delay_ticks, int) or self.extra_delay_ticks < 0:
            problems.append(
                f"extra_delay_ticks must be a non-negative int, got {self.extra_delay_ticks!r}"
            )
        if problems:
            raise ValidationError("; ".join(problems))

    @property
    def steps_per_tick(self) -> int:
        return int(round(self.f_edge / self.f_high))


@dataclass(frozen=True)
class SchemeConfig:
    """Coupling scheme selection plus the scale factors and gravity models."""

    scheme: str = IGBT
    scaling: Scaling = field(default_factory=Scaling)
    leader_gravity: GravityModel = field(default_factory=NoGravity)
    follower_gravity: GravityModel = field(default_factory=NoGravity)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(
                f"scheme must be one of {', '.join(SCHEMES)}, got {self.scheme!r}"
            )


@dataclass(frozen=True)
class HeldCommand:
    """One coordinator exchange, held over the following edge steps.

    ``leader_bound_or_current`` is the scaled follower effort: the clamp band
    for IGBT, the (negated) torque command for FRBT, unused for SPBT.
    """

    leader_goal_pos: float
    follower_goal_pos: float
    leader_bound_or_current: float
    timestamp: float


@dataclass
class ScenarioConfig:
    """Complete description of one simulation run.

    Defaults describe the baseline contact scenario: identical 1e-3 kg m^2 /
    1e-2 N m s/rad joints with kp=10, kd=2 servos, a 1e-2 N m step force on
    the leader from t=0, and a 1e4 N m/rad wall engaged at t=1 s.
    """

    leader_plant: PlantParams = field(
        default_factory=lambda: PlantParams(inertia=1.0e-3, viscous_friction=1.0e-2)
    )
    follower_plant: PlantParams = field(
        default_factory=lambda: PlantParams(inertia=1.0e-3, viscous_friction=1.0e-2)
    )
    leader_gains: GainSet = field(default_factory=lambda: GainSet(kp=10.0, kd=2.0))
    follower_gains: GainSet = field(default_factory=lambda: GainSet(kp=10.0, kd=2.0))
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    rates: RateConfig = field(default_factory=RateConfig)
    environment: EnvironmentModel = field(
        default_factory=lambda: EnvironmentModel(stiffness=1.0e4, engage_time=1.0)
    )
    leader_force: ForceProfile = field(
        default_factory=lambda: StepForce(magnitude=1.0e-2, onset=0.0)
    )
    follower_extra_force: ForceProfile = field(default_factory=ZeroForce)
    duration: float = 3.0  # s
    derivative_mode: str = "ref_rate_estimate"
    bound_refresh: str = "edge_step"

    def validate(self) -> None:
        """Check cross-field invariants; raises listing every violation."""
        problems = []
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            problems.append(f"duration must be finite and > 0, got {self.duration}")
        else:
            steps = self.duration * self.rates.f_edge
            if abs(steps - round(steps)) > 1e-6:
                problems.append(
                    f"duration * f_edge must be integral, got {steps}"
                )
            elif round(steps) < 1:
                problems.append("duration must cover at least one edge step")
            elif round(steps) > 5e7:
                problems.append(f"run too long: {round(steps)} edge steps")
        if self.derivative_mode not in DERIVATIVE_MODES:
            problems.append(
                f"derivative_mode must be one of {', '.join(DERIVATIVE_MODES)}, "
                f"got {self.derivative_mode!r}"
            )
        if self.bound_refresh not in BOUND_REFRESH_MODES:
            problems.append(
                f"bound_refresh must be one of {', '.join(BOUND_REFRESH_MODES)}, "
                f"got {self.bound_refresh!r}"
            )
        if problems:
            raise ValidationError("; ".join(problems))


TRACE_COLUMNS = (
    "t",
    "y_l",
    "v_l",
    "y_f",
    "v_f",
    "u_l",
    "u_l_star",
    "u_f",
    "u_f_star",
    "f_l",
    "f_f",
)


@dataclass
class Trace:
    """Fixed-step simulation record, one row per edge step.

    Column semantics: row k holds the joint states at t = k/F2 and the control
    and force values computed from them, i.e. the signals applied over the
    step that starts at t. ``u_l``/``u_f`` are the raw servo outputs,
    ``u_l_star`` the torque actually applied to the leader, ``u_f_star`` the
    scaled follower effort, ``f_l`` the external drive torque on the leader,
    and ``f_f`` the wall reaction on the follower. The ``held_*`` arrays
    expose the zero-order-hold
    coordinator values active at each row; they are diagnostics and are not
    part of the delimited on-disk schema.
    """

    t: np.ndarray
    y_l: np.ndarray
    v_l: np.ndarray
    y_f: np.ndarray
    v_f: np.ndarray
    u_l: np.ndarray
    u_l_star: np.ndarray
    u_f: np.ndarray
    u_f_star: np.ndarray
    f_l: np.ndarray
    f_f: np.ndarray
    held_leader_goal: np.ndarray | None = None
    held_follower_goal: np.ndarray | None = None
    held_bound: np.ndarray | None = None
    scheme: str = ""
    f_edge: float = 0.0
    f_high: float = 0.0
    wall_position: float | None = None

    COLUMNS = TRACE_COLUMNS

    @property
    def n_rows(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name not in TRACE_COLUMNS:
            raise KeyError(f"unknown trace column {name!r}")
        return getattr(self, name)

    def decimate(self, factor: int) -> "Trace":
        """Keep every ``factor``-th row, always including row 0."""
        if not isinstance(factor, int) or factor < 1:
            raise ValidationError(f"decimation factor must be an int >= 1, got {factor!r}")
        if factor == 1:
            return self
        pick = slice(None, None, factor)
        extras = {
            name: (getattr(self, name)[pick] if getattr(self, name) is not None else None)
            for name in ("held_leader_goal", "held_follower_goal", "held_bound")
        }
        return Trace(
            **{name: getattr(self, name)[pick] for name in TRACE_COLUMNS},
            **extras,
            scheme=self.scheme,
            f_edge=self.f_edge,
            f_high=self.f_high,
            wall_position=self.wall_position,
        )


def reference_velocity_estimate(new_goal: float, prev_goal: float, f_high: float) -> float:
    """Goal slew rate over one coordinator period, used as the servo velocity
    reference until the next exchange."""
    if not (math.isfinite(new_goal) and math.isfinite(prev_goal) and math.isfinite(f_high)):
        raise NonFiniteInputError("reference_velocity_estimate needs finite inputs")
    return (new_goal - prev_goal) * f_high


def coordinator_tick(
    scheme: SchemeConfig,
    leader_state: AxisState,
    follower_state: AxisState,
    last_u_f: float,
    timestamp: float = 0.0,
) -> HeldCommand:
    """One coordinator exchange from the latest states and follower effort."""
    scaling = scheme.scaling
    u_ff = gravity_feedforward(scheme.follower_gravity, follower_state.position)
    return HeldCommand(
        leader_goal_pos=follower_state.position / scaling.beta,
        follower_goal_pos=scaling.beta * leader_state.position,
        leader_bound_or_current=scaled_follower_input(last_u_f, u_ff, scaling.alpha),
        timestamp=timestamp,
    )


def edge_leader_torque(scheme: str, u_l: float, held_u_f_star: float) -> float:
    """Torque applied to the leader under the given coupling scheme."""
    if scheme == SPBT:
        return u_l
    if scheme == IGBT:
        return gate_input(u_l, held_u_f_star)
    if scheme == FRBT:
        return -held_u_f_star
    raise ValidationError(f"unknown scheme {scheme!r}")


def run_scenario(config: ScenarioConfig) -> Trace:
    """Simulate one scenario and return the full-rate trace.

    Deterministic: identical configs produce bit-identical traces. Raises
    ``DivergenceError`` if either position leaves +-1e6 rad.
    """
    config.validate()
    rates = config.rates
    scheme_cfg = config.scheme
    tag = scheme_cfg.scheme
    f_edge = rates.f_edge
    f_high = rates.f_high
    dt = 1.0 / f_edge
    steps = int(round(config.duration * f_edge))
    m = rates.steps_per_tick
    delay_steps = rates.extra_delay_ticks * m

    leader_gains = config.leader_gains
    follower_gains = config.follower_gains
    leader_plant = config.leader_plant
    follower_plant = config.follower_plant
    follower_gravity = scheme_cfg.follower_gravity
    alpha = scheme_cfg.scaling.alpha
    use_ref_rate = config.derivative_mode == "ref_rate_estimate"
    refresh_each_step = config.bound_refresh == "edge_step"
    leader_force = config.leader_force
    extra_force = config.follower_extra_force
    env = config.environment.copy()  # wall capture must not leak into the config

    leader = AxisState()
    follower = AxisState()
    last_u_f = 0.0
    # follower outputs in transit to the leader side; [0] is the value that
    # has just arrived (one completed step plus any configured whole-tick lag)
    u_f_hist = deque([0.0] * (delay_steps + 1), maxlen=delay_steps + 1)

    active = coordinator_tick(scheme_cfg, leader, follower, last_u_f, timestamp=0.0)
    goal_l = active.leader_goal_pos
    goal_f = active.follower_goal_pos
    bound = active.leader_bound_or_current
    ref_vel_l = 0.0
    ref_vel_f = 0.0
    pending: list[tuple[int, HeldCommand]] = []

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
            env.capture(follower.position)
        if k % m == 0:
            cmd = coordinator_tick(scheme_cfg, leader, follower, last_u_f, timestamp=t)
            pending.append((k + delay_steps, cmd))
        while pending and pending[0][0] <= k:
            cmd = pending.pop(0)[1]
            if use_ref_rate:
                ref_vel_l = reference_velocity_estimate(
                    cmd.leader_goal_pos, goal_l, f_high
                )
                ref_vel_f = reference_velocity_estimate(
                    cmd.follower_goal_pos, goal_f, f_high
                )
            goal_l = cmd.leader_goal_pos
            goal_f = cmd.follower_goal_pos
            bound = cmd.leader_bound_or_current

        y_l, v_l = leader.position, leader.velocity
        y_f, v_f = follower.position, follower.velocity
        f_l_now = force_at(leader_force, t)
        f_env = environment_force(env, y_f, t)
        u_ff_now = gravity_feedforward(follower_gravity, y_f)
        if refresh_each_step:
            bound = scaled_follower_input(u_f_hist[0], u_ff_now, alpha)
        u_l = pd_control(leader_gains, goal_l, ref_vel_l, y_l, v_l)
        u_f = pd_control(follower_gains, goal_f, ref_vel_f, y_f, v_f)
        u_f_star_now = scaled_follower_input(u_f, u_ff_now, alpha)
        u_l_star = edge_leader_torque(tag, u_l, bound)

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
        held_goal_l[k] = goal_l
        held_goal_f[k] = goal_f
        held_bound[k] = bound

        if k == steps:
            break
        leader = plant_step(leader, f_l_now + u_l_star, leader_plant, dt)
        f_extra = force_at(extra_force, t)
        follower = plant_step(follower, (f_env + f_extra) + u_f, follower_plant, dt)
        last_u_f = u_f
        u_f_hist.append(u_f)
        if not (abs(leader.position) <= DIVERGENCE_LIMIT) or not (
            abs(follower.position) <= DIVERGENCE_LIMIT
        ):
            name, y = (
                ("y_l", leader.position)
                if not (abs(leader.position) <= DIVERGENCE_LIMIT)
                else ("y_f", follower.position)
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
        f_high=f_high,
        wall_position=env.wall_position,
    )
