"""Unit tests for the two-rate simulation engine."""

import dataclasses
import math

import numpy as np
import pytest

from bilatsim.engine import (
    FRBT,
    IGBT,
    SPBT,
    HeldCommand,
    RateConfig,
    ScenarioConfig,
    SchemeConfig,
    coordinator_tick,
    edge_leader_torque,
    reference_velocity_estimate,
    run_scenario,
)
from bilatsim.errors import DivergenceError, ValidationError
from bilatsim.model import (
    AxisState,
    EnvironmentModel,
    GainSet,
    Scaling,
    StepForce,
    ZeroForce,
)
from reference_sims import single_rate_reference


def scenario(**overrides) -> ScenarioConfig:
    cfg = ScenarioConfig()
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def short_scenario(**overrides) -> ScenarioConfig:
    overrides.setdefault("duration", 0.2)
    overrides.setdefault(
        "environment", EnvironmentModel(stiffness=1.0e4, engage_time=0.1)
    )
    return scenario(**overrides)


# --- small operations ---------------------------------------------------------


def test_coordinator_tick_exchanges_scaled_goals_and_bound():
    scheme = SchemeConfig(scheme=IGBT, scaling=Scaling(alpha=2.0, beta=2.0))
    cmd = coordinator_tick(scheme, AxisState(0.2, 0.0), AxisState(0.1, 0.0), 0.5, 1.25)
    assert cmd.follower_goal_pos == pytest.approx(0.4)
    assert cmd.leader_goal_pos == pytest.approx(0.05)
    assert cmd.leader_bound_or_current == pytest.approx(1.0)
    assert cmd.timestamp == 1.25


def test_edge_leader_torque_per_scheme():
    assert edge_leader_torque(SPBT, 0.7, 0.1) == 0.7
    assert edge_leader_torque(FRBT, 0.7, 0.1) == -0.1
    assert edge_leader_torque(IGBT, 0.7, 0.1) == pytest.approx(0.1)
    assert edge_leader_torque(IGBT, -0.7, 0.1) == pytest.approx(-0.1)
    assert edge_leader_torque(IGBT, 0.05, 0.1) == 0.05
    with pytest.raises(ValidationError):
        edge_leader_torque("XXXX", 0.0, 0.0)


def test_reference_velocity_estimate_is_goal_slew():
    assert reference_velocity_estimate(0.105, 0.1, 1000.0) == pytest.approx(5.0)
    assert reference_velocity_estimate(0.1, 0.1, 1000.0) == 0.0


# --- config validation ----------------------------------------------------------


def test_rate_config_rejects_non_integral_ratio():
    with pytest.raises(ValidationError):
        RateConfig(f_high=300.0, f_edge=1.0e4)
    with pytest.raises(ValidationError):
        RateConfig(f_high=2.0e4, f_edge=1.0e4)
    with pytest.raises(ValidationError):
        RateConfig(f_high=1000.0, f_edge=1.0e4, extra_delay_ticks=-1)
    assert RateConfig(f_high=1.0e4, f_edge=1.0e4).steps_per_tick == 1


def test_scheme_config_rejects_unknown_tag():
    with pytest.raises(ValidationError):
        SchemeConfig(scheme="ABCD")


def test_scenario_validation_lists_every_violation():
    cfg = scenario(duration=-1.0, derivative_mode="bogus")
    with pytest.raises(ValidationError) as err:
        cfg.validate()
    message = str(err.value)
    assert "duration" in message and "derivative_mode" in message


def test_scenario_rejects_fractional_step_count():
    with pytest.raises(ValidationError):
        scenario(duration=0.00015).validate()  # 1.5 edge steps


# --- trace shape and zero dynamics ----------------------------------------------


def test_trace_shape_and_time_axis():
    trace = run_scenario(short_scenario())
    assert trace.n_rows == 2001
    assert trace.t[0] == 0.0
    assert trace.t[-1] == pytest.approx(0.2)
    assert np.allclose(np.diff(trace.t), 1.0e-4)
    assert trace.scheme == IGBT
    assert trace.f_edge == 1.0e4 and trace.f_high == 1.0e3


def test_zero_force_keeps_every_signal_at_zero():
    trace = run_scenario(short_scenario(leader_force=ZeroForce()))
    for name in trace.COLUMNS:
        if name == "t":
            continue
        assert not np.any(trace.column(name)), name
    assert trace.wall_position == 0.0


def test_identical_configs_give_bit_identical_traces():
    a = run_scenario(short_scenario())
    b = run_scenario(short_scenario())
    for name in a.COLUMNS:
        assert np.array_equal(a.column(name), b.column(name)), name


def test_run_does_not_mutate_the_config_environment():
    cfg = short_scenario()
    run_scenario(cfg)
    assert cfg.environment.wall_position is None


def test_wall_captured_at_first_step_at_or_past_engage_time():
    cfg = short_scenario()
    trace = run_scenario(cfg)
    engage_row = int(round(cfg.environment.engage_time * cfg.rates.f_edge))
    assert trace.wall_position == trace.y_f[engage_row]
    assert not np.any(trace.f_f[: engage_row + 1])  # zero through the capture row
    assert np.any(trace.f_f[engage_row + 1 :] < 0.0)  # contact afterwards


# --- zero-order hold behaviour -----------------------------------------------------


def test_held_goals_form_a_staircase_constant_between_ticks():
    trace = run_scenario(short_scenario(scheme=SchemeConfig(scheme=IGBT)))
    m = 10  # f_edge / f_high
    for held in (trace.held_leader_goal, trace.held_follower_goal):
        changes = np.flatnonzero(np.diff(held)) + 1
        assert np.all(changes % m == 0)
    # tick rows re-exchange current positions
    ticks = np.arange(0, trace.n_rows, m)
    assert np.array_equal(trace.held_follower_goal[ticks], trace.y_l[ticks])
    assert np.array_equal(trace.held_leader_goal[ticks], trace.y_f[ticks] / 1.0)


def test_tick_mode_holds_the_bound_constant_between_ticks():
    trace = run_scenario(
        short_scenario(scheme=SchemeConfig(scheme=IGBT), bound_refresh="tick")
    )
    changes = np.flatnonzero(np.diff(trace.held_bound)) + 1
    assert np.all(changes % 10 == 0)


def test_edge_step_mode_tracks_the_latest_completed_follower_output():
    trace = run_scenario(short_scenario(scheme=SchemeConfig(scheme=IGBT)))
    assert trace.held_bound[0] == 0.0
    assert np.array_equal(trace.held_bound[1:], trace.u_f[:-1])


def test_bound_refresh_modes_coincide_when_rates_are_equal():
    rates = RateConfig(f_high=1.0e4, f_edge=1.0e4)
    per_step = run_scenario(short_scenario(scheme=SchemeConfig(scheme=IGBT), rates=rates))
    per_tick = run_scenario(
        short_scenario(scheme=SchemeConfig(scheme=IGBT), rates=rates, bound_refresh="tick")
    )
    for name in ("y_l", "y_f", "u_l_star", "u_f"):
        assert np.array_equal(per_step.column(name), per_tick.column(name))


def test_bound_refresh_modes_differ_between_ticks():
    per_step = run_scenario(short_scenario(scheme=SchemeConfig(scheme=IGBT)))
    per_tick = run_scenario(
        short_scenario(scheme=SchemeConfig(scheme=IGBT), bound_refresh="tick")
    )
    assert not np.array_equal(per_step.y_f, per_tick.y_f)


def test_unknown_bound_refresh_mode_is_rejected():
    with pytest.raises(ValidationError, match="bound_refresh"):
        run_scenario(short_scenario(bound_refresh="hourly"))


def test_extra_delay_shifts_activation_by_whole_ticks():
    m = 10
    base = short_scenario()
    delayed = short_scenario(
        rates=RateConfig(f_high=1.0e3, f_edge=1.0e4, extra_delay_ticks=1)
    )
    trace = run_scenario(delayed)
    # the exchange read at tick i activates one full tick later
    assert np.all(trace.held_follower_goal[:m] == 0.0)
    for tick_row in (m, 5 * m, 20 * m):
        np.testing.assert_array_equal(
            trace.held_follower_goal[tick_row + m : tick_row + 2 * m],
            np.full(m, trace.y_l[tick_row]),
        )
    undelayed = run_scenario(base)
    assert not np.array_equal(undelayed.y_f, trace.y_f)


# --- scheme behaviour ---------------------------------------------------------------


def test_spbt_applies_its_servo_output_unmodified():
    trace = run_scenario(short_scenario(scheme=SchemeConfig(scheme=SPBT)))
    assert np.array_equal(trace.u_l_star, trace.u_l)


def test_frbt_applies_negated_held_effort():
    trace = run_scenario(short_scenario(scheme=SchemeConfig(scheme=FRBT)))
    assert np.array_equal(trace.u_l_star, -trace.held_bound)


def test_igbt_never_exceeds_the_held_band():
    trace = run_scenario(scenario(duration=1.5, scheme=SchemeConfig(scheme=IGBT)))
    assert np.all(np.abs(trace.u_l_star) <= np.abs(trace.held_bound))
    assert np.any(np.abs(trace.u_l) > np.abs(trace.held_bound))  # the gate did work


def test_igbt_equals_spbt_while_the_gate_never_binds():
    # push the follower instead of the leader and give the leader a weak servo:
    # the follower effort band then dwarfs the leader command at every step.
    common = dict(
        leader_force=ZeroForce(),
        follower_extra_force=StepForce(magnitude=1.0e-2, onset=0.0),
        leader_gains=GainSet(kp=1.0, kd=0.2),
        duration=0.2,
        environment=EnvironmentModel(stiffness=0.0, engage_time=math.inf),
    )
    gated = run_scenario(
        scenario(scheme=SchemeConfig(scheme=IGBT, scaling=Scaling(alpha=10.0)), **common)
    )
    plain = run_scenario(
        scenario(scheme=SchemeConfig(scheme=SPBT, scaling=Scaling(alpha=10.0)), **common)
    )
    for name in gated.COLUMNS:
        assert np.array_equal(gated.column(name), plain.column(name)), name


def test_derivative_mode_changes_the_response():
    a = run_scenario(short_scenario())
    b = run_scenario(short_scenario(derivative_mode="measurement_only"))
    assert not np.array_equal(a.y_f, b.y_f)


def test_measurement_only_tracks_with_visible_lag():
    fast = run_scenario(scenario(duration=1.0, environment=EnvironmentModel()))
    lagged = run_scenario(
        scenario(
            duration=1.0,
            environment=EnvironmentModel(),
            derivative_mode="measurement_only",
        )
    )
    assert lagged.y_f[-1] < fast.y_f[-1]


# --- degenerate single-rate equivalence -------------------------------------------


@pytest.mark.parametrize("scheme", [SPBT, FRBT, IGBT])
def test_single_rate_engine_matches_reference_loop_bitwise(scheme):
    duration = 0.3
    cfg = scenario(
        duration=duration,
        scheme=SchemeConfig(scheme=scheme),
        rates=RateConfig(f_high=1.0e4, f_edge=1.0e4),
        environment=EnvironmentModel(stiffness=1.0e4, engage_time=0.15),
    )
    trace = run_scenario(cfg)
    columns, _ = single_rate_reference(
        scheme, 1.0e4, duration, engage_time=0.15, ref_rate=True
    )
    for name in trace.COLUMNS:
        assert np.array_equal(trace.column(name), np.asarray(columns[name])), name


# --- free motion sanity --------------------------------------------------------------


def test_frbt_free_motion_approaches_half_force_over_friction():
    cfg = scenario(
        duration=1.0,
        scheme=SchemeConfig(scheme=FRBT),
        environment=EnvironmentModel(),  # never engages
    )
    trace = run_scenario(cfg)
    assert trace.v_f[-1] == pytest.approx(0.5, rel=0.02)
    assert trace.v_l[-1] == pytest.approx(0.5, rel=0.02)


# --- divergence ---------------------------------------------------------------------


def test_divergent_run_raises_with_step_number():
    cfg = scenario(leader_force=StepForce(magnitude=1.0e12, onset=0.0), duration=0.01)
    with pytest.raises(DivergenceError) as err:
        run_scenario(cfg)
    assert err.value.step >= 1
    assert "edge step" in str(err.value)


# --- trace decimation ----------------------------------------------------------------


def test_decimate_keeps_first_row_and_every_nth():
    trace = run_scenario(short_scenario())
    thin = trace.decimate(10)
    assert thin.n_rows == 201
    assert thin.t[0] == 0.0
    assert np.array_equal(thin.y_f, trace.y_f[::10])
    assert np.array_equal(thin.held_bound, trace.held_bound[::10])
    assert thin.wall_position == trace.wall_position
    with pytest.raises(ValidationError):
        trace.decimate(0)
    assert trace.decimate(1) is trace
