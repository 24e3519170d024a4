import json
from pathlib import Path

import pytest

from oridt.config import (
    REPORT_MODELS,
    OracleSettings,
    RunConfig,
    SeriesReport,
    Term,
    load_config,
    parse_config,
    schemas,
)
from oridt.exceptions import ConfigError

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


def _config(**overrides):
    data = json.loads((CONFIGS / "a2_symplectic.json").read_text(encoding="utf-8"))
    data.update(overrides)
    return json.dumps(data)


@pytest.mark.parametrize("name", ["a2_symplectic.json", "a2_orthogonal.json", "k2_symplectic.json"])
def test_shipped_configs_load(name):
    config = load_config(CONFIGS / name)
    assert config.schema_version == 1
    assert config.stabilities["plus"] == [1, -1]
    assert config.oracle.primes == [3, 5]


def test_defaults():
    config = parse_config(json.dumps({"quiver": {"nodes": ["0"], "sigma": {"nodes": {"0": "0"}}}}))
    assert config.bound == 4
    assert config.oracle == OracleSettings()
    assert config.oracle.max_prime == 13


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config(_config(colour="blue"))
    assert info.value.errors
    assert info.value.exit_code == 2


@pytest.mark.parametrize("oracle", [{"primes": [4]}, {"primes": [2]}, {"primes": [17]}, {"workers": 0}])
def test_oracle_settings_are_checked(oracle):
    with pytest.raises(ConfigError):
        parse_config(_config(oracle=oracle))


def test_stability_length_is_checked():
    with pytest.raises(ConfigError):
        parse_config(_config(stabilities={"plus": [1, -1, 0]}))
    with pytest.raises(ConfigError):
        parse_config(_config(stabilities={"plus": {"7": 1}}))


def test_bound_range():
    with pytest.raises(ConfigError):
        parse_config(_config(bound=13))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_shipped_schema_matches_model():
    shipped = json.loads((ROOT / "schema" / "run_config.schema.json").read_text(encoding="utf-8"))
    generated = RunConfig.model_json_schema()
    assert set(shipped["properties"]) == set(generated["properties"])
    assert shipped["required"] == generated["required"]
    assert shipped["additionalProperties"] is False


def test_schema_listing_covers_reports():
    listing = schemas()
    assert "run_config" in listing and "error_report" in listing
    for name in REPORT_MODELS:
        assert f"{name}_report" in listing


def test_reports_round_trip_through_json():
    report = SeriesReport(kind="orientifold", theta="plus", bound=2, variable="v = q^(1/2)",
                          terms=[Term(dim=[0, 0], value="1"), Term(dim=[1, 1], value="1")])
    assert SeriesReport.model_validate_json(report.model_dump_json()) == report
