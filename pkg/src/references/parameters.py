"""
Every experiment parameter with its type, admissible range, unit and notes.

Each entry lists the commands that accept it; the config loader validates
against this registry.
"""

import math

PARAMETERS = {
    # --- Series budgets ---
    "degree_cap": {
        "default": 30,
        "type": "int",
        "min": 1,
        "max": 400,
        "unit": "total degree",
        "label": "Degree Cap",
        "notes": "Multi-indices above this total degree are moved into the certified tail.",
        "commands": ["bound-check", "fr-table", "counterexample", "simulate-wave"],
    },
    "floor": {
        "default": 0.0,
        "type": "float",
        "min": 0.0,
        "max": 1e-3,
        "unit": "absolute",
        "label": "Coefficient Floor",
        "notes": "Series coefficients below the floor are pruned into the tail. 0 keeps everything.",
        "commands": ["bound-check"],
    },
    "power_levels": {
        "default": 64,
        "type": "int",
        "min": 8,
        "max": 512,
        "unit": "powers",
        "label": "Power Levels",
        "notes": "Powers ||R^m||, m <= levels, carried by the recursion for partitions past three generators.",
        "commands": ["fr-table", "counterexample"],
    },

    # --- f_r tables ---
    "x": {
        "default": math.pi / 4,
        "type": "float",
        "min": 0.0,
        "max": math.pi / 2,
        "unit": "radians",
        "label": "Partition Total",
        "notes": "Must be strictly inside (0, pi/2).",
        "commands": ["fr-table"],
    },
    "r": {
        "default": 1,
        "type": "int",
        "min": 1,
        "max": 4,
        "unit": "power",
        "label": "Series Power",
        "notes": "f_r compares ||R(t)^r|| against tan^r x.",
        "commands": ["fr-table"],
    },
    "n_max": {
        "default": 8,
        "type": "int",
        "min": 1,
        "max": 4096,
        "unit": "parts",
        "label": "Largest Partition",
        "notes": "fr-table: rows n = 1..n_max. counterexample: search budget.",
        "commands": ["fr-table", "counterexample"],
    },

    # --- Counterexample ---
    "alpha": {
        "default": math.pi / 2,
        "type": "float",
        "min": math.pi / 2,
        "max": 10.0,
        "unit": "radians",
        "label": "Variation Quarter",
        "notes": "Var(log a) of the synthesized medium is 4 alpha.",
        "commands": ["counterexample"],
    },
    "N": {
        "default": 10.0,
        "type": "float",
        "min": 0.0,
        "max": 1e6,
        "unit": "norm",
        "label": "Target Norm",
        "notes": "Certified lower bound the heavy partition must reach.",
        "commands": ["counterexample"],
    },
    "n_start": {
        "default": 2,
        "type": "int",
        "min": 1,
        "max": 4096,
        "unit": "parts",
        "label": "First Partition Size",
        "notes": "Starting point of the doubling search.",
        "commands": ["counterexample"],
    },
    "width_scale": {
        "default": 1.0,
        "type": "float",
        "min": 1e-6,
        "max": 1e6,
        "unit": "time",
        "label": "Round-Trip Scale",
        "notes": "Interior round-trip times are width_scale * sqrt(p) for distinct primes p.",
        "commands": ["counterexample"],
    },

    # --- Oracle sweep ---
    "n_values": {
        "default": [2, 3, 4, 5, 6],
        "type": "int_list",
        "min": 2,
        "max": 50,
        "unit": "layers",
        "label": "Layer Counts",
        "notes": "One batch of random media per entry.",
        "commands": ["oracle-test"],
    },
    "media_per_n": {
        "default": 2,
        "type": "int",
        "min": 1,
        "max": 1000,
        "unit": "media",
        "label": "Media per Layer Count",
        "notes": "",
        "commands": ["oracle-test"],
    },
    "frequency_count": {
        "default": 20,
        "type": "int",
        "min": 1,
        "max": 10000,
        "unit": "frequencies",
        "label": "Frequencies per Medium",
        "notes": "Drawn uniformly from [xi_min, xi_max].",
        "commands": ["oracle-test"],
    },
    "xi_min": {
        "default": 0.1,
        "type": "float",
        "min": 1e-6,
        "max": 1e4,
        "unit": "1/time",
        "label": "Lowest Frequency",
        "notes": "",
        "commands": ["oracle-test"],
    },
    "xi_max": {
        "default": 20.0,
        "type": "float",
        "min": 1e-6,
        "max": 1e4,
        "unit": "1/time",
        "label": "Highest Frequency",
        "notes": "",
        "commands": ["oracle-test"],
    },
    "condition_limit": {
        "default": 1e12,
        "type": "float",
        "min": 1.0,
        "max": 1e300,
        "unit": "condition number",
        "label": "Condition Limit",
        "notes": "Dense solves above this are flagged, not failed.",
        "commands": ["oracle-test"],
    },

    # --- Wave ray tracer ---
    "y": {
        "default": 0.5,
        "type": "float",
        "min": -1e6,
        "max": 1e6,
        "unit": "length",
        "label": "Source Position",
        "notes": "Must not lie on an interface.",
        "commands": ["simulate-wave"],
    },
    "probes": {
        "default": [1.0],
        "type": "float_list",
        "min": -1e6,
        "max": 1e6,
        "unit": "length",
        "label": "Probe Positions",
        "notes": "The dispersion ratio is the maximum over probes.",
        "commands": ["simulate-wave"],
    },
    "t_max": {
        "default": 40.0,
        "type": "float",
        "min": 0.0,
        "max": 1e6,
        "unit": "time",
        "label": "Trace Horizon",
        "notes": "",
        "commands": ["simulate-wave"],
    },
    "pruning_floor": {
        "default": 1e-12,
        "type": "float",
        "min": 1e-300,
        "max": 1.0,
        "unit": "relative to the initial pulse",
        "label": "Pulse Floor",
        "notes": "Pruned pulses are accounted in truncation_mass.",
        "commands": ["simulate-wave"],
    },
    "max_events": {
        "default": 500_000,
        "type": "int",
        "min": 1,
        "max": 10**9,
        "unit": "interface hits",
        "label": "Event Budget",
        "notes": "Exhausting it flags the impulse train as partial.",
        "commands": ["simulate-wave"],
    },

    # --- Schrodinger solver ---
    "t_final": {
        "default": 10.0,
        "type": "float",
        "min": 0.0,
        "max": 1e4,
        "unit": "time",
        "label": "Final Time",
        "notes": "",
        "commands": ["simulate-schrodinger"],
    },
    "dx": {
        "default": 0.05,
        "type": "float",
        "min": 1e-5,
        "max": 10.0,
        "unit": "length",
        "label": "Grid Spacing",
        "notes": "Every finite layer needs at least 16 cells.",
        "commands": ["simulate-schrodinger"],
    },
    "dt": {
        "default": None,
        "type": "float",
        "min": 1e-6,
        "max": 10.0,
        "unit": "time",
        "label": "Time Step",
        "notes": "null picks the largest step with dt * max(a) / dx^2 <= 0.5 that divides t_final; larger explicit steps only warn.",
        "commands": ["simulate-schrodinger"],
    },
    "half_width": {
        "default": 80.0,
        "type": "float",
        "min": 1.0,
        "max": 1e5,
        "unit": "length",
        "label": "Domain Half-Width",
        "notes": "",
        "commands": ["simulate-schrodinger"],
    },
    "sponge_width": {
        "default": 30.0,
        "type": "float",
        "min": 0.0,
        "max": 1e5,
        "unit": "length",
        "label": "Sponge Width",
        "notes": "0 disables absorption; the discrete L2 norm is then conserved.",
        "commands": ["simulate-schrodinger"],
    },
    "sigma_max": {
        "default": None,
        "type": "float",
        "min": 0.0,
        "max": 1e8,
        "unit": "1/time",
        "label": "Sponge Strength",
        "notes": "null means 10 * max(a).",
        "commands": ["simulate-schrodinger"],
    },
    "center": {
        "default": 0.0,
        "type": "float",
        "min": -1e5,
        "max": 1e5,
        "unit": "length",
        "label": "Gaussian Centre",
        "notes": "",
        "commands": ["simulate-schrodinger"],
    },
    "s": {
        "default": 0.05,
        "type": "float",
        "min": 1e-6,
        "max": 1e3,
        "unit": "length^2",
        "label": "Gaussian Spread",
        "notes": "u0 = exp(-(x - c)^2 / (4 s)).",
        "commands": ["simulate-schrodinger"],
    },
    "snapshot_every": {
        "default": 10,
        "type": "int",
        "min": 1,
        "max": 10**7,
        "unit": "steps",
        "label": "Snapshot Interval",
        "notes": "",
        "commands": ["simulate-schrodinger"],
    },

    # --- Acceptance suite ---
    "quick": {
        "default": False,
        "type": "bool",
        "min": None,
        "max": None,
        "unit": "",
        "label": "Quick Mode",
        "notes": "Smaller sweeps and a lower counterexample target, for smoke runs.",
        "commands": ["verify-all"],
    },
}


def get_parameter(name: str) -> dict:
    """Get a single registry entry."""
    return PARAMETERS.get(name, {})


def get_parameters_for(command: str) -> dict:
    """Default values of every parameter a command accepts."""
    return {k: v["default"] for k, v in PARAMETERS.items() if command in v["commands"]}


def get_all_parameters() -> list:
    """Get all parameters as a list."""
    return [{"key": k, **v} for k, v in PARAMETERS.items()]
