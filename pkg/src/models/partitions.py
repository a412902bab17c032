"""
Partition series: E(d; q), R(t; q), transfer-matrix norms, f_r tables and the
heavy-partition search.

For a partition t = (t_1, ..., t_n) of x,

    R(t; q) = (gamma(t_n) alpha(q_{n-1}) gamma(t_{n-1}) ... alpha(q_1) gamma(t_1))(0),

with alpha(q)(z) = q z and gamma(t) = beta(tanh t). f_r(x) is the supremum of
||R(t)^r||_AP over partitions of x; it equals tan^r x on (0, pi/2) and the
norms grow without bound at pi/2.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from src.data.numerics import (
    DEFAULT_DEGREE_CAP,
    DEFAULT_POWER_LEVELS,
    EXACT_GENERATOR_LIMIT,
    MAX_POWER,
    PARTIAL_SUM_LIMIT,
    ROUNDING_SLACK,
    TAN_BOUND_SLACK,
)
from src.models.errors import PreconditionError, SearchBudgetError
from src.models.power_norms import chain_power_norms
from src.models.series import (
    MultiSeries,
    ap_norm,
    constant,
    evaluate,
    mobius_beta,
    modulate,
    monomial,
    power,
    zero,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Partition:
    """Positive parts t_1, ..., t_n of the total x."""

    parts: tuple[float, ...]

    def __post_init__(self):
        if not self.parts:
            raise PreconditionError("a partition needs at least one part")
        for k, t in enumerate(self.parts):
            if not t > 0.0:
                raise PreconditionError(f"part t[{k}] = {t} must be positive")

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    @property
    def total(self) -> float:
        return math.fsum(self.parts)

    @property
    def partial_sums(self) -> np.ndarray:
        """Interior partial sums t_1, t_1 + t_2, ..., excluding the total."""
        return np.cumsum(self.parts)[:-1]


@dataclass(frozen=True)
class TransferMatrixNorms:
    norm_a: float
    norm_b: float
    norm_c: float
    norm_d: float
    P: float
    p: float
    top_coefficient_a: float
    constant_term_d: float

    @property
    def identities_hold(self) -> bool:
        """||a|| = ||d|| = (P+p)/2, ||b|| = ||c|| = (P-p)/2 and both unit coefficients."""
        tol = ROUNDING_SLACK * max(1.0, self.P)
        half_sum, half_diff = 0.5 * (self.P + self.p), 0.5 * (self.P - self.p)
        return (
            abs(self.norm_a - half_sum) <= tol
            and abs(self.norm_d - half_sum) <= tol
            and abs(self.norm_b - half_diff) <= tol
            and abs(self.norm_c - half_diff) <= tol
            and abs(self.top_coefficient_a - 1.0) <= tol
            and abs(self.constant_term_d - 1.0) <= tol
        )


# --- Partitions ---

def uniform_partition(x: float, n: int) -> Partition:
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if not x > 0.0:
        raise PreconditionError("the total must be positive")
    return Partition((x / n,) * n)


def dyadic_refinement(t: Partition) -> Partition:
    """Every part split in two halves."""
    return Partition(tuple(h for part in t.parts for h in (part / 2, part / 2)))


def _matches(value: float, candidates: np.ndarray, tol: float) -> int | None:
    if len(candidates) == 0:
        return None
    k = int(np.argmin(np.abs(candidates - value)))
    return k if abs(candidates[k] - value) <= tol else None


def is_refinement(t: Partition, s: Partition) -> bool:
    """t < s: same total and every partial sum of t is a partial sum of s."""
    tol = ROUNDING_SLACK * max(1.0, t.total)
    if abs(t.total - s.total) > tol:
        return False
    fine = s.partial_sums
    return all(_matches(v, fine, tol) is not None for v in t.partial_sums)


# --- Series ---

def e_series(d: Sequence[float], degree_cap: int = DEFAULT_DEGREE_CAP, floor: float = 0.0) -> MultiSeries:
    """E(d; q) = (beta(d_n) alpha(q_{n-1}) ... alpha(q_1) beta(d_1))(0) in n-1 generators."""
    d = [float(v) for v in d]
    if not d:
        raise PreconditionError("E needs at least one coefficient")
    generators = len(d) - 1
    current = mobius_beta(d[0], zero(generators, degree_cap), floor=floor, step=1)
    for j in range(1, len(d)):
        current = mobius_beta(d[j], modulate(current, j - 1), floor=floor, step=j + 1)
    return current


def r_series(t: Partition, degree_cap: int = DEFAULT_DEGREE_CAP, floor: float = 0.0) -> MultiSeries:
    """R(t; q) = E(tanh t_1, ..., tanh t_n; q)."""
    return e_series([math.tanh(v) for v in t.parts], degree_cap, floor)


def r_power(t: Partition, r: int, degree_cap: int = DEFAULT_DEGREE_CAP, floor: float = 0.0) -> MultiSeries:
    if not 1 <= r <= MAX_POWER:
        raise PreconditionError(f"r = {r} outside 1..{MAX_POWER}")
    return power(r_series(t, degree_cap, floor), r)


def _factor(d: float, index: int, m: int) -> list[list[MultiSeries]]:
    # (I + d A)(B_0 + q B_1) = [[q, d], [d q, 1]]
    q = monomial(_unit(index, m), 1.0, m)
    return [
        [q, constant(d, m, m)],
        [monomial(_unit(index, m), d, m), constant(1.0, m, m)],
    ]


def _unit(index: int, m: int) -> tuple[int, ...]:
    return tuple(1 if k == index else 0 for k in range(m))


def transfer_matrix_norms(d: Sequence[float]) -> TransferMatrixNorms:
    """
    Entrywise AP norms of M = (I + d_n A)(B_0 + q_{n-1} B_1) ... (I + d_1 A)(B_0 + q_0 B_1).

    A = [[0, 1], [1, 0]], B_0 = diag(0, 1), B_1 = diag(1, 0). The entries are
    polynomials of degree at most n, expanded exactly.
    """
    d = [float(v) for v in d]
    if not d:
        raise PreconditionError("at least one factor required")
    for k, v in enumerate(d):
        if not 0.0 <= v < 1.0:
            raise PreconditionError(f"d[{k}] = {v} outside [0, 1)")
    m = len(d)
    matrix = [[constant(1.0, m, m), zero(m, m)], [zero(m, m), constant(1.0, m, m)]]
    for index, value in enumerate(d):
        f = _factor(value, index, m)
        matrix = [
            [f[i][0] * matrix[0][j] + f[i][1] * matrix[1][j] for j in range(2)]
            for i in range(2)
        ]
    (a, b), (c, dd) = matrix
    return TransferMatrixNorms(
        norm_a=ap_norm(a).upper,
        norm_b=ap_norm(b).upper,
        norm_c=ap_norm(c).upper,
        norm_d=ap_norm(dd).upper,
        P=math.prod(1.0 + v for v in d),
        p=math.prod(1.0 - v for v in d),
        top_coefficient_a=abs(a.coefficient((1,) * m)),
        constant_term_d=abs(dd.coefficient((0,) * m)),
    )


def hyperbolic_check(t: Partition) -> dict:
    """
    Transfer-matrix norms after d_j = tanh t_j against cosh x and sinh x.

    ||a|| = cosh x / prod cosh t_j and ||b|| = sinh x / prod cosh t_j, so
    both bounds are strict for any partition.
    """
    norms = transfer_matrix_norms([math.tanh(v) for v in t.parts])
    x = t.total
    return {
        "norms": norms,
        "cosh_x": math.cosh(x),
        "sinh_x": math.sinh(x),
        "passed": norms.norm_a < math.cosh(x) and norms.norm_b < math.sinh(x) and norms.identities_hold,
    }


# --- Identities ---

def _refinement_point(t: Partition, s: Partition, point: np.ndarray) -> np.ndarray:
    tol = ROUNDING_SLACK * max(1.0, t.total)
    coarse = t.partial_sums
    out = np.ones(s.n_parts - 1, dtype=complex)
    for l, value in enumerate(s.partial_sums):
        k = _matches(value, coarse, tol)
        if k is not None:
            out[l] = point[k]
    return out


def check_refinement(
    t: Partition,
    s: Partition,
    r: int = 1,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    seed: int = 0,
    n_points: int = 5,
) -> dict:
    """
    ||R(t)^r|| <= ||R(s)^r|| for t < s, with the substitution identity
    R(t; q) = R(s; q') checked at random unit-modulus points. q'_l is q_k
    when the l-th partial sum of s is the k-th of t, and 1 otherwise.

    Returns:
        Dict with both norm brackets, max_substitution_gap, its tolerance and passed.
    """
    if not is_refinement(t, s):
        raise PreconditionError("the second partition does not refine the first")
    coarse = r_power(t, r, degree_cap)
    fine = r_power(s, r, degree_cap)
    norm_t, norm_s = ap_norm(coarse), ap_norm(fine)

    rng = np.random.default_rng(seed)
    gap = 0.0
    for _ in range(n_points):
        point = np.exp(2j * math.pi * rng.random(t.n_parts - 1))
        value_t, _ = evaluate(coarse, point)
        value_s, _ = evaluate(fine, _refinement_point(t, s, point))
        gap = max(gap, abs(value_t - value_s))
    tolerance = coarse.tail_bound + fine.tail_bound + 1e-9
    return {
        "norm_t": norm_t,
        "norm_s": norm_s,
        "max_substitution_gap": gap,
        "gap_tolerance": tolerance,
        "passed": norm_t.lower <= norm_s.upper + ROUNDING_SLACK and gap <= tolerance,
    }


def gamma_additivity_gap(a: float, b: float, value: float = 0.0) -> float:
    """|gamma(a)(gamma(b)(c)) - gamma(a + b)(c)| for a constant series c."""
    c = constant(value, 0)
    composed = mobius_beta(math.tanh(a), mobius_beta(math.tanh(b), c))
    direct = mobius_beta(math.tanh(a + b), c)
    left, tail_left = evaluate(composed, [])
    right, tail_right = evaluate(direct, [])
    return max(0.0, abs(left - right) - tail_left - tail_right)


def extension_identity_gap(t: Partition, point: Sequence[complex], z: float, degree_cap: int = DEFAULT_DEGREE_CAP) -> float:
    """
    |R(t; q) - R((t, z/2, z/2); (q, -1, -1))| beyond the truncation tails.

    Two extra half parts joined through q = -1 cancel each other, which is
    why f is nondecreasing in x.
    """
    extended = Partition(t.parts + (z / 2, z / 2))
    base = r_series(t, degree_cap)
    longer = r_series(extended, degree_cap)
    point = np.asarray(point, dtype=complex)
    left, tail_left = evaluate(base, point)
    right, tail_right = evaluate(longer, np.concatenate([point, [-1.0, -1.0]]))
    return max(0.0, abs(left - right) - tail_left - tail_right)


# --- f_r tables ---

def elementary_bound(x: float) -> float:
    """sinh x / (2 - cosh x), an upper bound for f_1 while cosh x < 2; inf beyond."""
    if x >= math.log(2.0 + math.sqrt(3.0)):
        return math.inf
    return math.sinh(x) / (2.0 - math.cosh(x))


def partition_bound(
    t: Partition,
    r: int = 1,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    power_levels: int = DEFAULT_POWER_LEVELS,
) -> dict:
    """
    Certified bracket of ||R(t)^r||.

    Up to EXACT_GENERATOR_LIMIT generators the multi-index series is expanded;
    beyond that the power-norm recursion brackets the norm. Its upper end is
    inf once the chain leaves the region where the Möbius steps stay
    contractive on the bracket.
    """
    if t.n_parts - 1 <= EXACT_GENERATOR_LIMIT:
        norm = ap_norm(r_power(t, r, degree_cap))
        return {"lower": norm.lower, "upper": norm.upper, "method": "exact"}
    d = [math.tanh(v) for v in t.parts]
    norm = chain_power_norms(d, power_levels).bracket(r)
    return {"lower": norm.lower, "upper": norm.upper, "method": "recursion"}


def _table_row(job: tuple) -> dict:
    x, r, n, degree_cap, power_levels = job
    bound = partition_bound(uniform_partition(x, n), r, degree_cap, power_levels)
    return {"n": n, **bound}


def f_lower_table(
    x: float,
    r: int = 1,
    n_max: int = 8,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    power_levels: int = DEFAULT_POWER_LEVELS,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Norm brackets of R(t)^r over uniform partitions of x into n = 1..n_max parts.

    Returns:
        DataFrame with columns x, r, n, lower, upper, target_tan_r_x, f_lower
        (running maximum of lower), elementary_bound and method.
    """
    if not 0.0 < x < math.pi / 2:
        raise PreconditionError(f"x = {x} outside (0, pi/2); f_r is infinite there")
    if not 1 <= r <= MAX_POWER:
        raise PreconditionError(f"r = {r} outside 1..{MAX_POWER}")
    jobs = [(x, r, n, degree_cap, power_levels) for n in range(1, n_max + 1)]
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_table_row, jobs))
    else:
        rows = [_table_row(job) for job in jobs]
    table = pd.DataFrame(rows).sort_values("n").reset_index(drop=True)
    table.insert(0, "x", x)
    table.insert(1, "r", r)
    table["target_tan_r_x"] = math.tan(x) ** r
    table["f_lower"] = table["lower"].cummax()
    table["elementary_bound"] = elementary_bound(x) ** r
    logger.info(
        "f-table x=%.6g r=%d: %d rows in %.2fs, best lower %.6g vs target %.6g",
        x, r, len(table), time.perf_counter() - start, table["f_lower"].iloc[-1], math.tan(x) ** r,
    )
    return table[["x", "r", "n", "lower", "upper", "target_tan_r_x", "f_lower", "elementary_bound", "method"]]


def upper_bounds_respect_tan(table: pd.DataFrame, slack: float = TAN_BOUND_SLACK) -> bool:
    """Every finite upper bound lies below tan^r x; inf uppers certify nothing."""
    uppers = table["upper"][np.isfinite(table["upper"])]
    return bool((uppers <= table.loc[uppers.index, "target_tan_r_x"] + slack).all())


def derivative_check(
    x_grid: Sequence[float],
    n: int = 4,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    step: float = 1e-3,
    power_levels: int = DEFAULT_POWER_LEVELS,
) -> pd.DataFrame:
    """
    Central differences of the f_1 lower values against 1 + f_2.

    Reported only: the gap is dominated by how far n parts are from saturation.
    """
    rows = []
    for x in x_grid:
        if not step < x < math.pi / 2 - step:
            raise PreconditionError(f"grid point {x} too close to the ends of (0, pi/2)")
        above = partition_bound(uniform_partition(x + step, n), 1, degree_cap, power_levels)["lower"]
        below = partition_bound(uniform_partition(x - step, n), 1, degree_cap, power_levels)["lower"]
        f2 = partition_bound(uniform_partition(x, n), 2, degree_cap, power_levels)["lower"]
        derivative = (above - below) / (2 * step)
        rows.append({
            "x": x,
            "derivative": derivative,
            "one_plus_f2": 1.0 + f2,
            "gap": abs(derivative - (1.0 + f2)),
            "exact": 1.0 / math.cos(x) ** 2,
        })
    return pd.DataFrame(rows)


# --- Heavy partitions ---

def search_uniform_partition(
    total: float,
    target: float,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    n_start: int = 2,
    n_max: int = 4096,
    min_parts: int = 1,
    power_levels: int = DEFAULT_POWER_LEVELS,
) -> dict:
    """
    Fewest uniform parts of ``total`` whose certified lower bound on ||R(t)|| reaches target.

    The part count doubles from max(n_start, min_parts) until the target is
    met, then bisects between the last failure and the first success.

    Returns:
        Dict with partition, lower_bound, method, n_parts and history (DataFrame).

    Raises:
        SearchBudgetError: no n <= n_max reaches the target.
    """
    history = []
    cache = {}

    def bound(n: int) -> float:
        if n not in cache:
            cache[n] = partition_bound(uniform_partition(total, n), 1, degree_cap, power_levels)
            history.append({"n": n, **cache[n]})
            logger.info("partition search: n=%d lower=%.6g (%s)", n, cache[n]["lower"], cache[n]["method"])
        return cache[n]["lower"]

    floor_n = max(min_parts, 1)
    n = max(n_start, floor_n)
    failed = floor_n - 1
    while bound(n) < target:
        failed = n
        if n >= n_max:
            best_n = max(cache, key=lambda k: cache[k]["lower"])
            raise SearchBudgetError(
                f"no uniform partition with at most {n_max} parts reaches {target}",
                best_bound=cache[best_n]["lower"],
                best_partition=uniform_partition(total, best_n),
            )
        n = min(2 * n, n_max)

    found = n
    while found - failed > 1:
        mid = (failed + found) // 2
        if bound(mid) >= target:
            found = mid
        else:
            failed = mid

    logger.info("Uniform partition of %.6g: %d parts, lower bound %.6g >= %.6g",
                total, found, cache[found]["lower"], target)
    return {
        "partition": uniform_partition(total, found),
        "lower_bound": cache[found]["lower"],
        "method": cache[found]["method"],
        "n_parts": found,
        "history": pd.DataFrame(history, columns=["n", "lower", "upper", "method"]),
    }


def find_heavy_partition(
    alpha: float,
    target: float,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    n_start: int = 2,
    n_max: int = 4096,
    min_parts: int = 1,
    power_levels: int = DEFAULT_POWER_LEVELS,
) -> dict:
    """
    Partition of alpha >= pi/2 with certified ||R(t)||_AP >= target.

    Only lower bounds enter the certificate. ``min_parts`` lets callers
    demand parts small enough for counterexample synthesis.

    Raises:
        PreconditionError: alpha < pi/2, where every norm stays below tan(alpha).
        SearchBudgetError: no n <= n_max reaches the target.
    """
    if alpha < math.pi / 2 - 1e-12:
        raise PreconditionError(
            f"alpha = {alpha} < pi/2: ||R(t)|| <= tan(alpha) = {math.tan(alpha):.6g} for every partition"
        )
    return search_uniform_partition(alpha, target, degree_cap, n_start, n_max, min_parts, power_levels)


def counterexample_min_parts(alpha: float) -> int:
    """Fewest uniform parts of alpha each below (log 2)/2."""
    return math.floor(alpha / PARTIAL_SUM_LIMIT) + 1
