"""Human-editable scenario configuration files.

One assignment per line, ``key = value``. Blank lines and lines starting
with ``#`` are ignored, and a ``#`` comment may follow a value. Values are
numbers (decimal or scientific notation) or strings, either bare words or
double quoted: ``scheme = "FRBT"`` and ``scheme = FRBT`` are equivalent.
Every key is optional; anything missing keeps the baseline default, so the
empty file is the baseline contact scenario itself.

The format describes symmetric rigs: one set of joint parameters and servo
gains covers both sides. Asymmetric setups, gravity models, extra forces on
the follower, transport delay, and the tick-held bound cadence are available
only through the :class:`~bilatsim.engine.ScenarioConfig` API.

Keys::

    inertia                   joint inertia, kg m^2           (0.001)
    viscous_friction          joint damping, N m s/rad        (0.01)
    kp                        servo proportional gain         (10.0)
    kd                        servo derivative gain           (2.0)
    k_env                     wall stiffness, N m/rad         (10000.0)
    f_edge                    servo loop rate, Hz             (10000.0)
    f_high                    coordinator rate, Hz            (1000.0)
    alpha                     effort scale follower -> leader (1.0)
    beta                      position scale leader -> follower (1.0)
    scheme                    SPBT | FRBT | IGBT              (IGBT)
    duration                  run length, s                   (3.0)
    force.magnitude           leader drive step, N m          (0.01)
    force.onset               leader drive start, s           (0.0)
    environment.engage_time   wall engage instant, s          (1.0)
    derivative_mode           ref_rate_estimate | measurement_only
"""

from __future__ import annotations

import math

from .engine import ScenarioConfig, SchemeConfig, RateConfig
from .errors import ConfigError, ValidationError
from .model import (
    EnvironmentModel,
    GainSet,
    NoGravity,
    PlantParams,
    Scaling,
    StepForce,
    ZeroForce,
)

__all__ = ["CONFIG_KEYS", "parse_config", "render_config"]

# key -> expected value kind; order is the canonical render order
CONFIG_KEYS = {
    "inertia": float,
    "viscous_friction": float,
    "kp": float,
    "kd": float,
    "k_env": float,
    "f_edge": float,
    "f_high": float,
    "alpha": float,
    "beta": float,
    "scheme": str,
    "duration": float,
    "force.magnitude": float,
    "force.onset": float,
    "environment.engage_time": float,
    "derivative_mode": str,
}


def _parse_value(raw: str, line_no: int):
    """One right-hand side: quoted string, bare word, or number."""
    raw = raw.strip()
    if raw.startswith('"'):
        end = raw.find('"', 1)
        if end < 0:
            raise ConfigError("unterminated string", line_no)
        tail = raw[end + 1 :].strip()
        if tail and not tail.startswith("#"):
            raise ConfigError(f"unexpected text after string: {tail!r}", line_no)
        return raw[1:end]
    cut = raw.find("#")
    if cut >= 0:
        raw = raw[:cut].strip()
    if not raw:
        raise ConfigError("missing value", line_no)
    try:
        number = float(raw)
    except ValueError:
        if raw.replace("_", "").isalnum():
            return raw
        raise ConfigError(f"cannot parse value {raw!r}", line_no) from None
    if not math.isfinite(number):
        raise ConfigError(f"value must be finite, got {raw!r}", line_no)
    return number


def _parse_pairs(text: str) -> dict:
    pairs = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, rhs = stripped.partition("=")
        if not sep:
            raise ConfigError("expected 'key = value'", line_no)
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", line_no)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        value = _parse_value(rhs, line_no)
        want = CONFIG_KEYS[key]
        if want is float and not isinstance(value, float):
            raise ConfigError(f"{key} expects a number, got {value!r}", line_no)
        if want is str and not isinstance(value, str):
            raise ConfigError(f"{key} expects a name, got {value!r}", line_no)
        pairs[key] = value
    return pairs


def parse_config(text: str) -> ScenarioConfig:
    """Parse configuration text into a validated scenario.

    Raises :class:`ConfigError` (with the line number) on malformed text or
    unknown keys, and :class:`ValidationError` naming the offending key when
    a value breaks a model constraint.
    """
    pairs = _parse_pairs(text)
    base = ScenarioConfig()

    def get(key, fallback):
        return pairs.get(key, fallback)

    if get("k_env", 0.0) < 0.0:
        raise ValidationError(f"k_env must be >= 0, got {pairs['k_env']}")
    plant = PlantParams(
        inertia=get("inertia", base.leader_plant.inertia),
        viscous_friction=get("viscous_friction", base.leader_plant.viscous_friction),
    )
    gains = GainSet(
        kp=get("kp", base.leader_gains.kp), kd=get("kd", base.leader_gains.kd)
    )
    config = ScenarioConfig(
        leader_plant=plant,
        follower_plant=plant,
        leader_gains=gains,
        follower_gains=gains,
        scheme=SchemeConfig(
            scheme=get("scheme", base.scheme.scheme),
            scaling=Scaling(
                alpha=get("alpha", base.scheme.scaling.alpha),
                beta=get("beta", base.scheme.scaling.beta),
            ),
        ),
        rates=RateConfig(
            f_high=get("f_high", base.rates.f_high),
            f_edge=get("f_edge", base.rates.f_edge),
        ),
        environment=EnvironmentModel(
            stiffness=get("k_env", base.environment.stiffness),
            engage_time=get("environment.engage_time", base.environment.engage_time),
        ),
        leader_force=StepForce(
            magnitude=get("force.magnitude", base.leader_force.magnitude),
            onset=get("force.onset", base.leader_force.onset),
        ),
        duration=get("duration", base.duration),
        derivative_mode=get("derivative_mode", base.derivative_mode),
    )
    config.validate()
    return config


def render_config(config: ScenarioConfig) -> str:
    """Render a scenario back to configuration text.

    Inverse of :func:`parse_config` up to formatting: parsing the result
    reproduces the scenario exactly. Refuses scenarios the flat symmetric
    format cannot express.
    """
    blockers = []
    if config.follower_plant != config.leader_plant:
        blockers.append("asymmetric plants")
    if config.follower_gains != config.leader_gains:
        blockers.append("asymmetric gains")
    if not isinstance(config.leader_force, StepForce):
        blockers.append("non-step leader force")
    if not isinstance(config.follower_extra_force, ZeroForce):
        blockers.append("extra follower force")
    if not isinstance(config.scheme.leader_gravity, NoGravity) or not isinstance(
        config.scheme.follower_gravity, NoGravity
    ):
        blockers.append("gravity models")
    if config.rates.extra_delay_ticks:
        blockers.append("transport delay")
    if config.bound_refresh != "edge_step":
        blockers.append("tick-held bound cadence")
    if not math.isfinite(config.environment.engage_time):
        blockers.append("never-engaging environment")
    if blockers:
        raise ValidationError(
            "scenario not expressible as flat config: " + ", ".join(blockers)
        )
    values = {
        "inertia": config.leader_plant.inertia,
        "viscous_friction": config.leader_plant.viscous_friction,
        "kp": config.leader_gains.kp,
        "kd": config.leader_gains.kd,
        "k_env": config.environment.stiffness,
        "f_edge": config.rates.f_edge,
        "f_high": config.rates.f_high,
        "alpha": config.scheme.scaling.alpha,
        "beta": config.scheme.scaling.beta,
        "scheme": config.scheme.scheme,
        "duration": config.duration,
        "force.magnitude": config.leader_force.magnitude,
        "force.onset": config.leader_force.onset,
        "environment.engage_time": config.environment.engage_time,
        "derivative_mode": config.derivative_mode,
    }
    lines = []
    for key in CONFIG_KEYS:
        value = values[key]
        rendered = f'"{value}"' if isinstance(value, str) else repr(float(value))
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"
