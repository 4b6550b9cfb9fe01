"""Single-axis building blocks: plant integration, PD control, input gating,
environment contact, gravity feedforward, and external force profiles.

Everything here is a pure function over small value types; the only stateful
object is :class:`EnvironmentModel`, whose wall position is captured once by
the simulation engine at the engage instant.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace

from .errors import NonFiniteInputError, StateError, ValidationError

__all__ = [
    "AxisState",
    "EnvironmentModel",
    "ForceProfile",
    "GainSet",
    "GravityModel",
    "NoGravity",
    "OneLinkGravity",
    "PiecewiseLinearForce",
    "PlantParams",
    "Scaling",
    "StepForce",
    "TableGravity",
    "ZeroForce",
    "environment_force",
    "force_at",
    "gate_input",
    "gravity_feedforward",
    "pd_control",
    "plant_step",
    "scaled_follower_input",
]

_isfinite = math.isfinite


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not _isfinite(value):
            raise NonFiniteInputError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PlantParams:
    """Rigid rotary joint: inertia J [kg m^2] and viscous friction D [N m s/rad]."""

    inertia: float
    viscous_friction: float

    def __post_init__(self):
        _require_finite(inertia=self.inertia, viscous_friction=self.viscous_friction)
        if self.inertia <= 0.0:
            raise ValidationError(f"inertia must be > 0, got {self.inertia}")
        if self.viscous_friction < 0.0:
            raise ValidationError(
                f"viscous_friction must be >= 0, got {self.viscous_friction}"
            )


@dataclass(frozen=True)
class GainSet:
    """Proportional-derivative gains of a position servo loop."""

    kp: float  # N m / rad
    kd: float  # N m s / rad

    def __post_init__(self):
        _require_finite(kp=self.kp, kd=self.kd)
        if self.kp < 0.0 or self.kd < 0.0:
            raise ValidationError(f"gains must be >= 0, got kp={self.kp} kd={self.kd}")


@dataclass(slots=True)
class AxisState:
    """Instantaneous kinematic state of one joint."""

    position: float = 0.0  # rad
    velocity: float = 0.0  # rad/s


@dataclass(frozen=True)
class Scaling:
    """Leader/follower coupling scale factors.

    ``beta`` maps leader position into follower position units; ``alpha`` maps
    follower effort into leader effort units for feedback and gating.
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        _require_finite(alpha=self.alpha, beta=self.beta)
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValidationError(
                f"scale factors must be > 0, got alpha={self.alpha} beta={self.beta}"
            )

    @classmethod
    def from_nominal_torques(
        cls, leader_torque: float, follower_torque: float, beta: float = 1.0
    ) -> "Scaling":
        """Effort scale from the two actuators' nominal torque ratings."""
        _require_finite(leader_torque=leader_torque, follower_torque=follower_torque)
        if leader_torque <= 0.0 or follower_torque <= 0.0:
            raise ValidationError("nominal torques must be > 0")
        return cls(alpha=leader_torque / follower_torque, beta=beta)


@dataclass
class EnvironmentModel:
    """Unilateral spring wall engaged at a fixed time.

    The wall position is unknown until the engage instant; the engine captures
    it exactly once from the follower position at the first step whose time is
    at or past ``engage_time``.
    """

    stiffness: float = 0.0  # N m / rad
    engage_time: float = math.inf  # s
    wall_position: float | None = None  # rad, None until captured

    def __post_init__(self):
        if not _isfinite(self.stiffness) or self.stiffness < 0.0:
            raise ValidationError(f"stiffness must be finite and >= 0, got {self.stiffness}")
        if math.isnan(self.engage_time):
            raise ValidationError("engage_time must not be NaN")
        if self.wall_position is not None:
            _require_finite(wall_position=self.wall_position)

    @property
    def captured(self) -> bool:
        return self.wall_position is not None

    def capture(self, follower_position: float) -> None:
        """Pin the wall at the follower's current position; allowed once."""
        _require_finite(follower_position=follower_position)
        if self.wall_position is not None:
            raise StateError("wall position already captured")
        self.wall_position = follower_position

    def copy(self) -> "EnvironmentModel":
        return replace(self)


# --- gravity feedforward models ---------------------------------------------


@dataclass(frozen=True)
class NoGravity:
    """Gravity-free axis; feedforward is identically zero."""


@dataclass(frozen=True)
class OneLinkGravity:
    """Single link of mass m at distance l from the joint, horizontal at angle 0."""

    mass: float  # kg
    length: float  # m
    gravity: float = 9.81  # m/s^2

    def __post_init__(self):
        _require_finite(mass=self.mass, length=self.length, gravity=self.gravity)
        if self.mass < 0.0 or self.length < 0.0 or self.gravity < 0.0:
            raise ValidationError("one-link gravity parameters must be >= 0")


@dataclass(frozen=True)
class TableGravity:
    """Lookup table of (angle, torque) samples, linearly interpolated."""

    angles: tuple[float, ...]  # rad, strictly increasing
    torques: tuple[float, ...]  # N m

    def __post_init__(self):
        if len(self.angles) < 2 or len(self.angles) != len(self.torques):
            raise ValidationError("table needs >= 2 samples with matching lengths")
        for value in (*self.angles, *self.torques):
            if not _isfinite(value):
                raise NonFiniteInputError("table entries must be finite")
        if any(a >= b for a, b in zip(self.angles, self.angles[1:])):
            raise ValidationError("table angles must be strictly increasing")


GravityModel = NoGravity | OneLinkGravity | TableGravity


# --- external force profiles -------------------------------------------------


@dataclass(frozen=True)
class ZeroForce:
    """No externally applied torque."""


@dataclass(frozen=True)
class StepForce:
    """Zero before ``onset``, constant ``magnitude`` at and after it."""

    magnitude: float  # N m
    onset: float = 0.0  # s

    def __post_init__(self):
        _require_finite(magnitude=self.magnitude, onset=self.onset)


@dataclass(frozen=True)
class PiecewiseLinearForce:
    """Torque interpolated linearly between (time, torque) breakpoints.

    Outside the covered time range the nearest endpoint value is held.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.breakpoints:
            raise ValidationError("piecewise profile needs at least one breakpoint")
        for t, tau in self.breakpoints:
            _require_finite(time=t, torque=tau)
        times = [t for t, _ in self.breakpoints]
        if any(a >= b for a, b in zip(times, times[1:])):
            raise ValidationError("breakpoint times must be strictly increasing")


ForceProfile = ZeroForce | StepForce | PiecewiseLinearForce


# --- operations ---------------------------------------------------------------


def plant_step(state: AxisState, torque: float, params: PlantParams, dt: float) -> AxisState:
    """Advance the joint one step with semi-implicit Euler.

    Acceleration uses the current velocity, the velocity update feeds the
    position update, which keeps the integrator stable for stiff contact at
    the step sizes used here.
    """
    y = state.position
    v = state.velocity
    if not (_isfinite(y) and _isfinite(v) and _isfinite(torque) and _isfinite(dt)):
        _require_finite(position=y, velocity=v, torque=torque, dt=dt)
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    accel = (torque - params.viscous_friction * v) / params.inertia
    v_next = v + accel * dt
    return AxisState(y + v_next * dt, v_next)


def pd_control(
    gains: GainSet, ref_pos: float, ref_vel: float, pos: float, vel: float
) -> float:
    """Servo torque: kp * position error + kd * velocity error."""
    if not (
        _isfinite(ref_pos) and _isfinite(ref_vel) and _isfinite(pos) and _isfinite(vel)
    ):
        _require_finite(ref_pos=ref_pos, ref_vel=ref_vel, pos=pos, vel=vel)
    return gains.kp * (ref_pos - pos) + gains.kd * (ref_vel - vel)


def scaled_follower_input(u_f: float, u_ff: float, alpha: float) -> float:
    """Follower effort with feedforward removed, mapped into leader units."""
    if not (_isfinite(u_f) and _isfinite(u_ff) and _isfinite(alpha)):
        _require_finite(u_f=u_f, u_ff=u_ff, alpha=alpha)
    return alpha * (u_f - u_ff)


def gate_input(u_l: float, u_f_star: float) -> float:
    """Clamp the leader command into the band the follower effort spans.

    The band is symmetric: [-|u_f_star|, +|u_f_star|]. Inside the band the
    command passes through unchanged.
    """
    if not (_isfinite(u_l) and _isfinite(u_f_star)):
        _require_finite(u_l=u_l, u_f_star=u_f_star)
    bound = u_f_star if u_f_star >= 0.0 else -u_f_star
    if u_l > bound:
        return bound
    if u_l < -bound:
        return -bound
    return u_l


def environment_force(env: EnvironmentModel, y_f: float, t: float) -> float:
    """Wall reaction on the follower: spring when penetrating, zero otherwise."""
    if not (_isfinite(y_f) and _isfinite(t)):
        _require_finite(y_f=y_f, t=t)
    if t < env.engage_time:
        return 0.0
    if env.wall_position is None:
        raise StateError("environment engaged but wall position never captured")
    e = env.wall_position - y_f
    if e < 0.0:
        return env.stiffness * e
    return 0.0


def gravity_feedforward(model: GravityModel, angle: float) -> float:
    """Holding torque the model predicts at the given joint angle."""
    if not _isfinite(angle):
        _require_finite(angle=angle)
    if isinstance(model, NoGravity):
        return 0.0
    if isinstance(model, OneLinkGravity):
        return model.mass * model.gravity * model.length * math.cos(angle)
    if isinstance(model, TableGravity):
        angles = model.angles
        if angle < angles[0] or angle > angles[-1]:
            raise ValidationError(
                f"angle {angle} outside table range [{angles[0]}, {angles[-1]}]"
            )
        i = bisect.bisect_right(angles, angle)
        if i == len(angles):
            return model.torques[-1]
        lo, hi = angles[i - 1], angles[i]
        w = (angle - lo) / (hi - lo)
        return model.torques[i - 1] + w * (model.torques[i] - model.torques[i - 1])
    raise TypeError(f"unknown gravity model {type(model).__name__}")


def force_at(profile: ForceProfile, t: float) -> float:
    """Externally applied torque of the profile at time t."""
    if not _isfinite(t):
        _require_finite(t=t)
    if isinstance(profile, ZeroForce):
        return 0.0
    if isinstance(profile, StepForce):
        return profile.magnitude if t >= profile.onset else 0.0
    if isinstance(profile, PiecewiseLinearForce):
        points = profile.breakpoints
        if t <= points[0][0]:
            return points[0][1]
        if t >= points[-1][0]:
            return points[-1][1]
        times = [p[0] for p in points]
        i = bisect.bisect_right(times, t)
        (t0, f0), (t1, f1) = points[i - 1], points[i]
        return f0 + (t - t0) / (t1 - t0) * (f1 - f0)
    raise TypeError(f"unknown force profile {type(profile).__name__}")
