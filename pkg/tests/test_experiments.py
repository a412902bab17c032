"""Tests for the parameter registry and the experiment presets."""

import pytest

from src.data.experiment_config import build_config, validate_value
from src.models.errors import ConfigError
from src.models.experiments import (
    EXPERIMENTS,
    get_default_medium,
    get_experiment_descriptions,
    get_experiment_params,
)
from src.references.parameters import PARAMETERS, get_all_parameters, get_parameter, get_parameters_for


class TestRegistry:
    def test_entries_complete(self):
        """Every entry has the same fields and names at least one command."""
        fields = {"default", "type", "min", "max", "unit", "label", "notes", "commands"}
        for name, entry in PARAMETERS.items():
            assert set(entry) == fields, name
            assert entry["commands"], name
            assert set(entry["commands"]) <= set(EXPERIMENTS), name

    def test_defaults_validate(self):
        """Registry defaults pass their own range checks."""
        for name, entry in PARAMETERS.items():
            assert validate_value(name, entry["default"]) == entry["default"], name

    def test_lookup(self):
        """Unknown names give an empty entry."""
        assert get_parameter("degree_cap")["default"] == 30
        assert get_parameter("nope") == {}
        assert len(get_all_parameters()) == len(PARAMETERS)
        assert get_parameters_for("verify-all") == {"quick": False}

    def test_type_checks(self):
        """Booleans are not numbers and numbers are not booleans."""
        with pytest.raises(ConfigError):
            validate_value("degree_cap", True)
        with pytest.raises(ConfigError):
            validate_value("quick", 1)
        with pytest.raises(ConfigError):
            validate_value("probes", [0.5, "far"])


class TestPresets:
    @pytest.mark.parametrize("command", list(EXPERIMENTS))
    def test_presets_resolve(self, command):
        """Every preset builds into a valid config."""
        config = build_config({}, command)
        assert set(config.params) == set(get_parameters_for(command))
        assert (config.medium is None) == (get_default_medium(command) is None)

    def test_preset_overrides_registry(self):
        """Presets win over registry defaults, overrides over presets."""
        assert get_experiment_params("counterexample")["n_max"] == 4096
        assert get_experiment_params("counterexample", {"n_max": 64})["n_max"] == 64
        assert get_experiment_params("fr-table")["n_max"] == 20

    def test_shared_budgets_only_where_accepted(self):
        """degree_cap is not pushed onto commands that do not take it."""
        assert "degree_cap" not in get_experiment_params("oracle-test")
        assert "floor" not in get_experiment_params("fr-table")

    def test_descriptions(self):
        """One description per command, in registry order."""
        descriptions = get_experiment_descriptions()
        assert len(descriptions) == 7
        assert [d["key"] for d in descriptions] == list(EXPERIMENTS)
