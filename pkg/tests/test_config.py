"""Unit tests for the scenario configuration format."""

import dataclasses

import pytest

from bilatsim.config import CONFIG_KEYS, parse_config, render_config
from bilatsim.engine import FRBT, ScenarioConfig, SchemeConfig
from bilatsim.errors import ConfigError, ValidationError
from bilatsim.model import GainSet


def test_empty_text_yields_the_baseline_scenario():
    assert parse_config("") == ScenarioConfig()


def test_single_key_overrides_only_that_field():
    parsed = parse_config('scheme = "FRBT"')
    expected = dataclasses.replace(ScenarioConfig(), scheme=SchemeConfig(scheme=FRBT))
    assert parsed == expected


def test_bare_words_and_quoted_strings_are_equivalent():
    assert parse_config("scheme = FRBT") == parse_config('scheme = "FRBT"')


def test_numbers_accept_scientific_notation():
    parsed = parse_config("k_env = 2.5e3\ninertia = 1E-3")
    assert parsed.environment.stiffness == 2.5e3
    assert parsed.leader_plant.inertia == 1.0e-3


def test_comments_and_blank_lines_are_ignored():
    text = (
        "# a full-line comment\n"
        "\n"
        "kp = 12.5  # trailing comment\n"
        'scheme = "SPBT"  # after a string too\n'
    )
    parsed = parse_config(text)
    assert parsed.leader_gains.kp == 12.5
    assert parsed.scheme.scheme == "SPBT"


def test_unknown_key_is_rejected_with_its_line_number():
    with pytest.raises(ConfigError, match="unknown key") as info:
        parse_config("kp = 1\n\nstiffness = 2")
    assert info.value.line == 3


def test_duplicate_key_is_rejected():
    with pytest.raises(ConfigError, match="duplicate") as info:
        parse_config("kp = 1\nkp = 2")
    assert info.value.line == 2


def test_assignment_without_equals_is_rejected():
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("kp 10")


def test_missing_value_is_rejected():
    with pytest.raises(ConfigError, match="missing value"):
        parse_config("kp =   # nothing here")


def test_unterminated_string_is_rejected():
    with pytest.raises(ConfigError, match="unterminated"):
        parse_config('scheme = "FRBT')


def test_non_finite_numbers_are_rejected():
    for bad in ("inf", "-inf", "nan"):
        with pytest.raises(ConfigError, match="finite"):
            parse_config(f"kp = {bad}")


def test_type_mismatches_are_rejected():
    with pytest.raises(ConfigError, match="expects a number"):
        parse_config('kp = "soft"')
    with pytest.raises(ConfigError, match="expects a name"):
        parse_config("scheme = 3.0")


def test_non_divisor_coordinator_rate_fails_validation():
    with pytest.raises(ValidationError, match="integral multiple"):
        parse_config("f_high = 300")


def test_negative_wall_stiffness_names_the_key():
    with pytest.raises(ValidationError, match="k_env"):
        parse_config("k_env = -1")


def test_bad_scheme_name_fails_validation():
    with pytest.raises(ValidationError, match="scheme"):
        parse_config("scheme = WXYZ")


def test_render_emits_every_canonical_key():
    rendered = render_config(ScenarioConfig())
    keys = [line.split(" = ")[0] for line in rendered.strip().splitlines()]
    assert keys == list(CONFIG_KEYS)


def test_parse_render_parse_is_idempotent():
    text = 'scheme = "FRBT"\nf_high = 500\nkd = 1.5\nforce.magnitude = 2e-2\n'
    once = parse_config(text)
    assert parse_config(render_config(once)) == once
    assert render_config(parse_config(render_config(once))) == render_config(once)


def test_render_rejects_scenarios_the_format_cannot_express():
    asymmetric = dataclasses.replace(
        ScenarioConfig(), follower_gains=GainSet(kp=99.0, kd=2.0)
    )
    with pytest.raises(ValidationError, match="asymmetric gains"):
        render_config(asymmetric)
