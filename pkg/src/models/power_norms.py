"""
Norms of the powers of a Möbius chain, carried one step at a time.

For the chain R_1 = beta(d_1)(0), R_{k+1} = beta(d_{k+1})(q_k R_k), with a
fresh generator q_k at every step,

    R_{k+1}^r = sum_m c_m^(r) q_k^m R_k^m,     c_m^(r) = [s^m] beta(d_{k+1})(s)^r,

and the terms sit on disjoint powers of q_k, so

    ||R_{k+1}^r||_AP = sum_m |c_m^(r)| ||R_k^m||_AP

exactly. The vector P_m = ||R^m|| therefore evolves linearly, at a cost that
does not depend on how many generators the chain has. Keeping the levels
m <= M and dropping the rest gives lower bounds. Upper bounds add the dropped
columns using P_m <= P_M P_{m-M} and P_m <= P_1^m, and a geometric remainder
past the last stored column.

Only |d_k| enters, so the same brackets hold for E(d; q) with signed d and
for Q_n.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from src.data.numerics import DEFAULT_POWER_LEVELS, POWER_COLUMN_FACTOR
from src.models.errors import PreconditionError
from src.models.series import NormInterval

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)
# candidate radii for the remainder past the last stored column
REMAINDER_GRID = 256


@dataclass(frozen=True, eq=False)
class PowerNorms:
    """Brackets lower[m] <= ||R^m||_AP <= upper[m] for m = 0..levels."""

    lower: np.ndarray
    upper: np.ndarray
    steps: int

    @property
    def levels(self) -> int:
        return len(self.lower) - 1

    def bracket(self, r: int = 1) -> NormInterval:
        if not 0 <= r <= self.levels:
            raise PreconditionError(f"power {r} outside 0..{self.levels}")
        lower = float(self.lower[r])
        return NormInterval(lower, max(float(self.upper[r]), lower))


@dataclass(frozen=True, eq=False)
class StepMatrices:
    """Certified entrywise brackets of |[s^m] beta(d)(s)^r|, r = 0..levels."""

    low: np.ndarray  # (levels + 1, levels + 1)
    high: np.ndarray  # (levels + 1, columns)
    d: float


@lru_cache(maxsize=128)
def step_matrices(d: float, levels: int) -> StepMatrices:
    """
    Coefficient magnitudes of beta(d)(s)^r with rounding allowances.

    The majorant (|d| + s)/(1 - |d| s) dominates beta(d)(s) termwise, so the
    rounding of every convolution is bounded by a multiple of its powers.
    """
    d = abs(float(d))
    if not d < 1.0:
        raise PreconditionError(f"|d| = {d} must be below 1")
    columns = POWER_COLUMN_FACTOR * levels + 1
    m = np.arange(1, columns)
    beta = np.empty(columns)
    beta[0] = d
    beta[1:] = (1.0 - d * d) * (-d) ** (m - 1)
    majorant = np.empty(columns)
    majorant[0] = d
    majorant[1:] = (1.0 + d * d) * d ** (m - 1)

    signed = np.zeros((levels + 1, columns))
    bound = np.zeros((levels + 1, columns))
    signed[0, 0] = bound[0, 0] = 1.0
    for r in range(1, levels + 1):
        signed[r] = np.convolve(signed[r - 1], beta)[:columns]
        bound[r] = np.convolve(bound[r - 1], majorant)[:columns]

    allowance = 4.0 * levels * (columns + 1) * EPS * bound
    magnitude = np.abs(signed)
    low = np.clip(magnitude[:, : levels + 1] - allowance[:, : levels + 1], 0.0, None)
    high = magnitude + allowance
    low.setflags(write=False)
    high.setflags(write=False)
    return StepMatrices(low=low, high=high, d=d)


def _remainder(u: float, d: float, levels: int, first: int) -> np.ndarray:
    """
    Bound on sum_{m >= first} g_m^(r) u^m for every r, g^(r) the majorant coefficients.

    For any v in [u, 1/d) the sum is at most (u/v)^first h(v)^r with
    h(v) = (d + v)/(1 - d v); the best v on a grid is taken.
    """
    out = np.zeros(levels + 1)
    if u == 0.0 or d == 0.0:
        return out
    top = (1.0 - 1e-9) / d
    if not u < top:
        out[1:] = math.inf
        return out
    v = np.geomspace(u, top, REMAINDER_GRID)
    r = np.arange(levels + 1, dtype=float)[:, None]
    log_h = np.log((d + v) / (1.0 - d * v))[None, :]
    log_bound = first * (math.log(u) - np.log(v))[None, :] + r * log_h
    with np.errstate(over="ignore"):
        out = np.exp(log_bound.min(axis=1)) * (1.0 + 1e-12)
    out[0] = 0.0
    return out


def _extend(upper: np.ndarray, columns: int) -> np.ndarray:
    """Upper bounds on P_m for m < columns from the stored levels by submultiplicativity."""
    levels = len(upper) - 1
    extended = np.empty(columns)
    extended[: levels + 1] = upper
    with np.errstate(over="ignore", invalid="ignore"):
        # block by block, each block reads only the one before it
        for start in range(levels + 1, columns, levels):
            m = np.arange(start, min(start + levels, columns))
            extended[m] = np.minimum(extended[levels] * extended[m - levels], upper[1] ** m)
    return extended


def _propagate(lower: np.ndarray, upper: np.ndarray, d: float, levels: int, drift: float):
    matrices = step_matrices(d, levels)
    new_lower = matrices.low @ lower * (1.0 - drift)
    new_lower[0] = 1.0

    columns = matrices.high.shape[1]
    if np.all(np.isfinite(upper)):
        remainder = _remainder(float(upper[1]), matrices.d, levels, columns)
        with np.errstate(over="ignore", invalid="ignore"):
            new_upper = (matrices.high @ _extend(upper, columns) + remainder) * (1.0 + drift)
        new_upper = np.where(np.isnan(new_upper), math.inf, new_upper)
        with np.errstate(over="ignore"):
            new_upper = np.minimum(new_upper, new_upper[1] ** np.arange(levels + 1))
    else:
        new_upper = np.full(levels + 1, math.inf)
    new_upper[0] = 1.0
    return new_lower, np.maximum(new_upper, new_lower)


def chain_power_norms(d_values: Sequence[float], levels: int = DEFAULT_POWER_LEVELS) -> PowerNorms:
    """
    Brackets of ||R^m||_AP, m = 0..levels, for the chain beta(d_n) alpha(q_{n-1}) ... beta(d_1) (0).

    Raises:
        PreconditionError: empty chain, levels < 1, or some |d_k| >= 1.
    """
    d = [abs(float(v)) for v in d_values]
    if not d:
        raise PreconditionError("at least one Möbius step required")
    if levels < 1:
        raise PreconditionError("at least one power level required")
    for k, v in enumerate(d):
        if not v < 1.0:
            raise PreconditionError(f"|d[{k}]| = {v} must be below 1")

    columns = POWER_COLUMN_FACTOR * levels + 1
    drift = (columns + 2) * EPS
    start = d[0] ** np.arange(levels + 1, dtype=float)
    lower, upper = start * (1.0 - drift), start * (1.0 + drift)
    lower[0] = upper[0] = 1.0
    for value in d[1:]:
        lower, upper = _propagate(lower, upper, value, levels, drift)
    logger.debug("power norms over %d steps: ||R|| in [%.9g, %.9g]", len(d) - 1, lower[1], upper[1])
    return PowerNorms(lower=lower, upper=upper, steps=len(d) - 1)
