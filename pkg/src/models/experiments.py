"""
Preset experiment definitions, one per cli command.

Each preset fixes the parameters that differ from the registry defaults and,
for commands that act on a medium, a default medium.
"""

import math

from src.models.errors import ConfigError
from src.references.parameters import PARAMETERS, get_parameters_for

EXPERIMENTS = {
    "bound-check": {
        "name": "Tan Bound",
        "description": "Certified ||Q_n||_AP bracket against tan(sum arctanh|d_k|).",
        "params": {},
        "medium": {"a_values": [1.0, 1.0 / 9.0], "interfaces": [0.0]},
        "color": "#3498db",
    },
    "fr-table": {
        "name": "f_r Table",
        "description": "Uniform-partition lower bounds of ||R(t)^r|| approaching tan^r x.",
        "params": {"x": math.pi / 4, "r": 1, "n_max": 20},
        "medium": None,
        "color": "#2ecc71",
    },
    "counterexample": {
        "name": "Counterexample",
        "description": "Heavy partition of alpha >= pi/2 and the medium it induces.",
        "params": {"alpha": math.pi / 2, "N": 10.0, "n_max": 4096},
        "medium": None,
        "color": "#e74c3c",
    },
    "oracle-test": {
        "name": "Resolvent Oracle",
        "description": "Closed-form c_2n and det D_n against dense LU solves on random media.",
        "params": {},
        "medium": None,
        "color": "#9b59b6",
    },
    "simulate-wave": {
        "name": "Wave Rays",
        "description": "Exact impulse trains and the time-integral dispersion ratio.",
        "params": {"y": -0.5, "probes": [-2.0, 0.5, 3.0], "t_max": 40.0},
        # Var(log a) / 4 = 0.3
        "medium": {"a_values": [1.0, math.exp(-0.6), 1.0], "interfaces": [0.0, 1.0]},
        "color": "#e67e22",
    },
    "simulate-schrodinger": {
        "name": "Schrodinger Decay",
        "description": "sqrt(t) ||u(t)||_inf / ||u0||_1 from a Crank-Nicolson run.",
        "params": {},
        "medium": {"a_values": [1.0, math.exp(0.6), 1.0], "interfaces": [-1.0, 1.0]},
        "color": "#1abc9c",
    },
    "verify-all": {
        "name": "Acceptance Suite",
        "description": "Every acceptance criterion as one PASS/FAIL row.",
        "params": {},
        "medium": None,
        "color": "#34495e",
    },
}

# Budgets shared by every command that accepts them
COMMON_PARAMS = {
    "degree_cap": 30,
    "floor": 0.0,
}


def get_experiment_params(command: str, overrides: dict | None = None) -> dict:
    """
    Full parameter dict for a command.

    Merges registry defaults, the shared budgets, the preset and the overrides,
    in that order.

    Raises:
        ConfigError: unknown command, or an override the command does not accept.
    """
    if command not in EXPERIMENTS:
        raise ConfigError(f"unknown command {command!r}", path="/command")
    accepted = get_parameters_for(command)
    common = {k: v for k, v in COMMON_PARAMS.items() if k in accepted}
    for key in overrides or {}:
        if key not in accepted:
            known = "unknown parameter" if key not in PARAMETERS else f"not accepted by {command}"
            raise ConfigError(known, path=f"/params/{key}")
    return {**accepted, **common, **EXPERIMENTS[command]["params"], **(overrides or {})}


def get_default_medium(command: str) -> dict | None:
    return EXPERIMENTS[command]["medium"]


def get_experiment_descriptions() -> list:
    """Get list of experiment descriptions for display."""
    return [
        {
            "key": key,
            "name": e["name"],
            "description": e["description"],
            "color": e["color"],
        }
        for key, e in EXPERIMENTS.items()
    ]
