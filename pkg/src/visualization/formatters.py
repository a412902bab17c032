"""
Number formatting and tabular output.
"""

from pathlib import Path

import pandas as pd

from src.models.series import NormInterval

FLOAT_FORMAT = "%.17g"


def format_float17(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return FLOAT_FORMAT % value


def format_interval(interval: NormInterval, decimals: int = 6) -> str:
    """Format a norm bracket as [lower, upper]."""
    return f"[{interval.lower:.{decimals}f}, {interval.upper:.{decimals}f}]"


def format_verdict(passed: bool) -> str:
    return "PASS" if passed else "FAIL"


def format_complex(value: complex, decimals: int = 6) -> str:
    sign = "+" if value.imag >= 0 else "-"
    return f"{value.real:.{decimals}g} {sign} {abs(value.imag):.{decimals}g}i"


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """CSV with every float at 17 significant digits, so reruns compare byte for byte."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
