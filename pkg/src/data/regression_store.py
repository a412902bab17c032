"""
Frozen regression constants (first-run values of empirically defined targets).

Stored as JSON with repr-exact floats; a missing key means the constant has
not been recorded yet.
"""

import json
import logging
from pathlib import Path

logger = logging.getLogger(__name__)

DEFAULT_PATH = Path(__file__).resolve().parents[2] / "data" / "regression" / "constants.json"


def load_constants(path: str | Path = DEFAULT_PATH) -> dict:
    path = Path(path)
    if not path.exists():
        return {}
    with open(path) as f:
        return json.load(f)


def record_constants(updates: dict, path: str | Path = DEFAULT_PATH) -> dict:
    """Add keys that are not yet present; recorded values are never overwritten."""
    path = Path(path)
    constants = load_constants(path)
    added = {k: v for k, v in updates.items() if k not in constants}
    if added:
        constants.update(added)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(constants, indent=2, sort_keys=True) + "\n")
        logger.info("Recorded regression constants: %s", ", ".join(sorted(added)))
    return constants
