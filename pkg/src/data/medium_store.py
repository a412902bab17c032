"""
JSON storage for laminar media.

Numbers are written as the shortest decimal strings that round-trip
(``repr(float)``), so a saved medium reloads bit-for-bit.
"""

import json
from pathlib import Path

from src.models.errors import MediumError
from src.models.medium import LaminarMedium, build_medium


def medium_to_record(medium: LaminarMedium) -> dict:
    """Flat record {a_values, interfaces, metadata} with decimal strings."""
    return {
        "a_values": [repr(float(a)) for a in medium.a_values],
        "interfaces": [repr(float(x)) for x in medium.interfaces],
        "metadata": dict(medium.metadata),
    }


def medium_from_record(record: dict) -> LaminarMedium:
    """Inverse of medium_to_record; also accepts plain numbers."""
    try:
        a_values = [float(v) for v in record["a_values"]]
        interfaces = [float(v) for v in record.get("interfaces", [])]
    except KeyError as exc:
        raise MediumError(f"medium record is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise MediumError(f"medium record holds a non-numeric entry: {exc}") from exc
    return build_medium(a_values, interfaces, record.get("metadata") or {})


def save_medium(medium: LaminarMedium, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(medium_to_record(medium), indent=2, sort_keys=True) + "\n")
    return path


def load_medium(path: str | Path) -> LaminarMedium:
    with open(path) as f:
        return medium_from_record(json.load(f))
