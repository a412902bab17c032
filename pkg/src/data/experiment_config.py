"""
Experiment configuration: JSON files, key=value overrides and validation.

A config file looks like

    {"command": "fr-table", "seed": 0, "output_dir": "output/fr",
     "params": {"x": 1.0, "n_max": 12},
     "medium": {"a_values": [1, 0.25], "interfaces": [0.0]}}

with "medium_file" as an alternative to an inline "medium". Errors carry a
JSON pointer to the offending entry.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from src.data.medium_store import load_medium, medium_from_record, medium_to_record
from src.models.errors import ConfigError, MediumError
from src.models.experiments import get_default_medium, get_experiment_params
from src.models.medium import LaminarMedium
from src.references.parameters import PARAMETERS

TOP_LEVEL_KEYS = {"command", "seed", "output_dir", "params", "medium", "medium_file"}
WORKERS_ENV = "DISPERSION_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict = field(hash=False)
    medium: LaminarMedium | None = None
    medium_file: str | None = None
    output_dir: str = "output"
    seed: int = 0

    def to_dict(self) -> dict:
        """The resolved config, as echoed into the output directory."""
        return {
            "command": self.command,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "params": dict(self.params),
            "medium": medium_to_record(self.medium) if self.medium is not None else None,
            "medium_file": self.medium_file,
        }


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with a JSON value, or the raw string when it is not JSON."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value", path="/params")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config_file(path: str | Path) -> dict:
    try:
        with open(path) as f:
            raw = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", path="")
    return raw


def _number(value, name: str, integer: bool):
    path = f"/params/{name}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path=path)
    if integer:
        if float(value) != int(value):
            raise ConfigError(f"expected an integer, got {value!r}", path=path)
        return int(value)
    return float(value)


def _in_range(value, name: str, entry: dict) -> None:
    low, high = entry["min"], entry["max"]
    if (low is not None and value < low) or (high is not None and value > high):
        raise ConfigError(f"{value!r} outside [{low}, {high}]", path=f"/params/{name}")


def validate_value(name: str, value):
    """Coerce one parameter to its registry type and check its range."""
    entry = PARAMETERS[name]
    kind = entry["type"]
    if value is None and entry["default"] is None:
        return None
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"expected true or false, got {value!r}", path=f"/params/{name}")
        return value
    if kind in ("int_list", "float_list"):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"expected a non-empty list, got {value!r}", path=f"/params/{name}")
        items = [_number(v, name, kind == "int_list") for v in value]
        for v in items:
            _in_range(v, name, entry)
        return items
    number = _number(value, name, kind == "int")
    _in_range(number, name, entry)
    return number


def _resolve_medium(raw: dict, command: str) -> tuple[LaminarMedium | None, str | None]:
    if "medium" in raw and "medium_file" in raw:
        raise ConfigError("give either medium or medium_file, not both", path="/medium_file")
    try:
        if raw.get("medium_file"):
            return load_medium(raw["medium_file"]), str(raw["medium_file"])
        record = raw.get("medium") or get_default_medium(command)
        return (medium_from_record(record) if record else None), None
    except FileNotFoundError as exc:
        raise ConfigError(f"medium file {raw['medium_file']} not found", path="/medium_file") from exc
    except (MediumError, json.JSONDecodeError, AttributeError, TypeError) as exc:
        where = "/medium_file" if raw.get("medium_file") else "/medium"
        raise ConfigError(str(exc), path=where) from exc


def build_config(
    raw: dict | None = None,
    command: str | None = None,
    overrides: dict | None = None,
    output_dir: str | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    """
    Resolve a raw config dict plus command-line values into an ExperimentConfig.

    Command-line values win over the file; overrides win over the file's params.
    """
    raw = dict(raw or {})
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError("unknown key", path=f"/{key}")
    command = command or raw.get("command")
    if not command:
        raise ConfigError("no command given", path="/command")
    if raw.get("command") and raw["command"] != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}", path="/command")
    file_params = raw.get("params") or {}
    if not isinstance(file_params, dict):
        raise ConfigError("params must be an object", path="/params")

    merged = get_experiment_params(command, {**file_params, **(overrides or {})})
    params = {name: validate_value(name, value) for name, value in merged.items()}

    seed = raw.get("seed", 0) if seed is None else seed
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}", path="/seed")
    medium, medium_file = _resolve_medium(raw, command)
    return ExperimentConfig(
        command=command,
        params=params,
        medium=medium,
        medium_file=medium_file,
        output_dir=str(output_dir or raw.get("output_dir") or Path("output") / command),
        seed=seed,
    )


def worker_count() -> int:
    """Worker processes for sweeps, from DISPERSION_WORKERS (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer", path=f"${WORKERS_ENV}") from exc
    if count < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1", path=f"${WORKERS_ENV}")
    return count
