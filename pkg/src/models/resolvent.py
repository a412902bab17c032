"""
Laminar resolvent: Q-recursion series, the interface linear system and its
closed-form solutions.

On layer k the resolvent R_w g = (w^2 - d_x a d_x)^{-1} g is

    c_{2k-1} e^{w b_k x} + c_{2k} e^{-w b_k x} + (b_k / 2w) int_{I_k} e^{-w b_k |x-y|} g(y) dy,

with c_2 = c_{2n-1} = 0. Continuity of R_w g and a d_x R_w g at the n-1
interfaces gives the block-bidiagonal system D_n C = T solved here densely
(the oracle) and in closed form through Q_k(w) and the determinant product.

Frequencies: ``omega`` is always the resolvent parameter. The real-frequency
quantities are evaluated at omega = i xi.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.linalg import lu_factor, lu_solve

from src.data.numerics import CONDITION_LIMIT, DEFAULT_DEGREE_CAP, TAN_BOUND_SLACK
from src.models.errors import ContractionError, PreconditionError, SourceError
from src.models.medium import LaminarMedium, ReflectionProfile, random_medium
from src.models.series import MultiSeries, NormInterval, ap_norm, evaluate, mobius_beta, modulate, zero

logger = logging.getLogger(__name__)


# --- Sources ---

@dataclass(frozen=True)
class SourceSpec:
    """
    Initial datum supported in one layer.

    ``kind`` is "dirac" (unit mass at ``position``), "box" (``height`` on
    [left, right]) or "sampled" (trapezoid data ``values`` on ``grid``).
    """

    kind: str
    position: float = 0.0
    left: float = 0.0
    right: float = 0.0
    height: float = 1.0
    grid: tuple[float, ...] = field(default=(), repr=False)
    values: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("dirac", "box", "sampled"):
            raise SourceError(f"unknown source kind {self.kind!r}")
        if self.kind == "box" and not self.right > self.left:
            raise SourceError("box source needs left < right")
        if self.kind == "sampled":
            if len(self.grid) < 2 or len(self.grid) != len(self.values):
                raise SourceError("sampled source needs matching grid and values (>= 2 points)")
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise SourceError("sampled source grid must increase strictly")

    @classmethod
    def dirac(cls, position: float) -> "SourceSpec":
        return cls("dirac", position=float(position))

    @classmethod
    def box(cls, left: float, right: float, height: float = 1.0) -> "SourceSpec":
        return cls("box", left=float(left), right=float(right), height=float(height))

    @classmethod
    def sampled(cls, grid, values) -> "SourceSpec":
        return cls("sampled", grid=tuple(map(float, grid)), values=tuple(map(float, values)))

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "dirac":
            return self.position, self.position
        if self.kind == "box":
            return self.left, self.right
        return self.grid[0], self.grid[-1]

    @property
    def mass(self) -> float:
        """L1 norm of the datum."""
        if self.kind == "dirac":
            return 1.0
        if self.kind == "box":
            return abs(self.height) * (self.right - self.left)
        return float(trapezoid(np.abs(self.values), self.grid))

    def exp_moment(self, rate: complex, anchor: float) -> complex:
        """int g(y) exp(rate (y - anchor)) dy."""
        if self.kind == "dirac":
            return complex(np.exp(rate * (self.position - anchor)))
        if self.kind == "box":
            if rate == 0:
                return self.height * (self.right - self.left)
            upper = np.exp(rate * (self.right - anchor))
            lower = np.exp(rate * (self.left - anchor))
            return complex(self.height * (upper - lower) / rate)
        y = np.asarray(self.grid)
        return complex(trapezoid(np.asarray(self.values) * np.exp(rate * (y - anchor)), y))


def locate_source(medium: LaminarMedium, source: SourceSpec) -> int:
    """1-based layer containing the source support strictly inside."""
    lo, hi = source.support
    k = int(medium.layer_of(lo))
    left, right = medium.layer_bounds(k)
    if not (left < lo and hi < right):
        raise SourceError(
            f"source support [{lo}, {hi}] is not strictly inside layer {k + 1} ({left}, {right})"
        )
    return k + 1


# --- Q recursion ---

def q_sequence(profile: ReflectionProfile, degree_cap: int = DEFAULT_DEGREE_CAP, floor: float = 0.0) -> list[MultiSeries]:
    """
    Q_2, ..., Q_n as series in the generators lambda_1, ..., lambda_{n-2}.

    Q_1 = 0 and Q_k = q_{k-1} beta(-d_{k-1})(Q_{k-1}) for k < n; the last
    member Q_n = beta(-d_{n-1})(Q_{n-1}) carries no modulation. ``result[k-2]``
    is Q_k.

    Raises:
        ContractionError: |d_{k-1}| ||Q_{k-1}|| >= 1, with ``step`` = k.
    """
    d = profile.coefficients
    n = profile.n_layers
    if n < 2:
        return []
    generators = profile.generator_count
    current = zero(generators, degree_cap)
    sequence = []
    for k in range(2, n + 1):
        current = mobius_beta(-d[k - 2], current, floor=floor, step=k)
        if k < n:
            current = modulate(current, k - 2, 1)
        sequence.append(current)
        logger.debug("Q_%d: %d terms, tail %.3g", k, current.size, current.tail_bound)
    return sequence


def verify_tan_bound(profile: ReflectionProfile, degree_cap: int = DEFAULT_DEGREE_CAP, floor: float = 0.0) -> dict:
    """
    Check ||Q_n||_AP <= tan(sum arctanh|d_k|).

    Returns:
        Dict with norm (NormInterval), lower, upper, bound, arctanh_sum,
        n_layers and passed.
    """
    total = profile.arctanh_sum
    if total >= math.pi / 2:
        raise PreconditionError(
            f"sum of arctanh|d_k| = {total:.6f} >= pi/2; the tan bound is infinite"
        )
    sequence = q_sequence(profile, degree_cap, floor)
    norm = ap_norm(sequence[-1]) if sequence else NormInterval(0.0, 0.0)
    bound = math.tan(total)
    return {
        "norm": norm,
        "lower": norm.lower,
        "upper": norm.upper,
        "bound": bound,
        "arctanh_sum": total,
        "n_layers": profile.n_layers,
        "passed": norm.upper <= bound + TAN_BOUND_SLACK,
    }


def q_values(medium: LaminarMedium, omega: complex) -> np.ndarray:
    """Q_1(w), ..., Q_n(w) from the scalar recursion; entry k-1 is Q_k."""
    b, x, d = medium.slowness, medium.interfaces, medium.profile.coefficients
    n = medium.n_layers
    values = np.zeros(n, dtype=complex)
    for k in range(2, n + 1):
        previous = values[k - 2]
        beta = (previous - d[k - 2]) / (1.0 - d[k - 2] * previous)
        if k < n:
            phase = np.exp(-2.0 * omega * b[k - 1] * (x[k - 1] - x[k - 2]))
        else:
            phase = np.exp(2.0 * omega * b[n - 1] * x[n - 2])
        values[k - 1] = phase * beta
    return values


def determinant_product(medium: LaminarMedium, omega: complex, k: int | None = None) -> complex:
    """
    det D_k(w) = (-1)^k prod_{j<k} (b_j + b_{j+1}) e^{w (b_j - b_{j+1}) x_j} (1 - d_j Q_j(w)).

    The sign comes from the column order c_1, c_3, c_4, ..., c_{2k}.
    """
    n = medium.n_layers
    k = n if k is None else k
    if not 2 <= k <= n:
        raise PreconditionError(f"determinant index {k} outside 2..{n}")
    b, x, d = medium.slowness, medium.interfaces, medium.profile.coefficients
    q = q_values(medium, omega)
    product = complex((-1) ** k)
    for j in range(1, k):
        product *= (b[j - 1] + b[j]) * np.exp(omega * (b[j - 1] - b[j]) * x[j - 1]) * (1.0 - d[j - 1] * q[j - 1])
    return product


# --- Linear system ---

@dataclass(frozen=True, eq=False)
class ResolventSystem:
    """D_n(w) C = T at one frequency; C = [c_1, c_3, c_4, ..., c_{2n-2}, c_{2n}]."""

    frequency: complex
    matrix: np.ndarray
    rhs: np.ndarray
    n_layers: int
    source_layer: int


@dataclass(frozen=True, eq=False)
class OracleSolution:
    vector: np.ndarray
    c2n: complex
    determinant: complex
    condition: float
    flagged: bool

    def layer_coefficients(self) -> list[tuple[complex, complex]]:
        """(c_{2k-1}, c_{2k}) per layer, with the excluded c_2 and c_{2n-1} as 0."""
        v = self.vector
        n = len(v) // 2 + 1
        layers = [(complex(v[0]), 0j)]
        for j in range(2, n):
            layers.append((complex(v[2 * j - 3]), complex(v[2 * j - 2])))
        layers.append((0j, complex(v[-1])))
        return layers


def rhs_blocks(medium: LaminarMedium, omega: complex, source: SourceSpec) -> np.ndarray:
    """
    (t_{j,1}, t_{j,2}) for each interface j, shape (n-1, 2).

    With P the source integrals from the left and right of x_j:
    t_{j,1} = -b_j P_j + b_{j+1} P_{j+1}, t_{j,2} = b_j b_{j+1} (P_j + P_{j+1}).
    """
    if omega == 0:
        raise PreconditionError("omega must be nonzero")
    k = locate_source(medium, source)
    b, x = medium.slowness, medium.interfaces
    t = np.zeros((medium.n_layers - 1, 2), dtype=complex)
    for j in range(1, medium.n_layers):
        p_left = source.exp_moment(omega * b[j - 1], x[j - 1]) / (2 * omega) if k == j else 0j
        p_right = source.exp_moment(-omega * b[j], x[j - 1]) / (2 * omega) if k == j + 1 else 0j
        t[j - 1, 0] = -b[j - 1] * p_left + b[j] * p_right
        t[j - 1, 1] = b[j - 1] * b[j] * (p_left + p_right)
    return t


def assemble_system(medium: LaminarMedium, omega: complex, source: SourceSpec) -> ResolventSystem:
    """
    Dense D_n(w) and T.

    Block row j (interface x_j) holds A_j on the layer-j columns and B_j on
    the layer-(j+1) columns; layer 1 keeps only the first column of A_1 and
    layer n only the second column of B_{n-1}.
    """
    n = medium.n_layers
    if n < 2:
        raise PreconditionError("the interface system needs at least two layers")
    b, x = medium.slowness, medium.interfaces
    size = 2 * (n - 1)
    matrix = np.zeros((size, size), dtype=complex)

    def columns(layer: int) -> list[tuple[int, int]]:
        # (column, which) pairs; which = 0 for c_{2k-1}, 1 for c_{2k}
        if layer == 1:
            return [(0, 0)]
        if layer == n:
            return [(size - 1, 1)]
        return [(2 * layer - 3, 0), (2 * layer - 2, 1)]

    for j in range(1, n):
        row = 2 * (j - 1)
        xj, bl, br = x[j - 1], b[j - 1], b[j]
        grow, decay = np.exp(omega * bl * xj), np.exp(-omega * bl * xj)
        for col, which in columns(j):
            matrix[row, col] = grow if which == 0 else decay
            matrix[row + 1, col] = br * grow if which == 0 else -br * decay
        grow, decay = np.exp(omega * br * xj), np.exp(-omega * br * xj)
        for col, which in columns(j + 1):
            matrix[row, col] = -grow if which == 0 else -decay
            matrix[row + 1, col] = -bl * grow if which == 0 else bl * decay

    rhs = rhs_blocks(medium, omega, source).ravel()
    return ResolventSystem(complex(omega), matrix, rhs, n, locate_source(medium, source))


def spectral_system(medium: LaminarMedium, xi: float, source: SourceSpec) -> ResolventSystem:
    """The system at the real frequency xi, i.e. omega = i xi."""
    return assemble_system(medium, 1j * xi, source)


def oracle_coefficients(system: ResolventSystem, condition_limit: float = CONDITION_LIMIT) -> OracleSolution:
    """Dense LU solve of D_n C = T; the determinant comes from the same factorization."""
    condition = float(np.linalg.cond(system.matrix))
    lu, piv = lu_factor(system.matrix, check_finite=True)
    vector = lu_solve((lu, piv), system.rhs)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    determinant = complex(np.prod(np.diag(lu)) * (-1) ** swaps)
    flagged = not condition < condition_limit
    if flagged:
        logger.warning("Oracle solve flagged: condition number %.3g at omega=%s", condition, system.frequency)
    return OracleSolution(vector, complex(vector[-1]), determinant, condition, flagged)


# --- Closed forms ---

def c2n_case_formula(medium: LaminarMedium, omega: complex, source: SourceSpec) -> complex:
    """
    c_{2n}(w) from the closed forms, selected by the source layer k.

    k = n:     c_{2n} = -t_{n-1,1} e^{-w b_n x_{n-1}} Q_n
    k = 1:     c_{2n} = det A_1 ... det A_{n-1} e^{w b_1 x_1} t_{1,1} / det D_n
    otherwise: c_{2n} = -(det A_k ... det A_{n-1} det D_k / det D_n)
                        (t_{k-1,1} e^{w b_k (x_k - x_{k-1})} Q_k + t_{k,1}) e^{w b_k x_k}

    with det A_j = -2 b_{j+1}.
    """
    n = medium.n_layers
    k = locate_source(medium, source)
    b, x = medium.slowness, medium.interfaces
    t = rhs_blocks(medium, omega, source)
    q = q_values(medium, omega)
    if k == n:
        return complex(-t[n - 2, 0] * np.exp(-omega * b[n - 1] * x[n - 2]) * q[n - 1])

    det_a = math.prod(-2.0 * b[j] for j in range(k, n))
    det_n = determinant_product(medium, omega, n)
    if k == 1:
        return complex(det_a * np.exp(omega * b[0] * x[0]) * t[0, 0] / det_n)
    det_k = determinant_product(medium, omega, k)
    bracket = t[k - 2, 0] * np.exp(omega * b[k - 1] * (x[k - 1] - x[k - 2])) * q[k - 1] + t[k - 1, 0]
    return complex(-det_a * det_k / det_n * bracket * np.exp(omega * b[k - 1] * x[k - 1]))


def c2n_closed_form(
    medium: LaminarMedium,
    omega: complex,
    source: SourceSpec,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    sequence: list[MultiSeries] | None = None,
) -> tuple[complex, float]:
    """
    c_{2n}(w) from the certified Q_n series, for a source in the last layer.

    The series is summed at q_j = exp(-w lambda_j), which lies in the closed
    unit polydisc for Re w >= 0; its tail becomes the error radius. The
    real-frequency value is omega = i xi.

    Returns:
        (value, radius).

    Raises:
        SourceError: the source is not in the last layer.
        PreconditionError: omega = 0 or Re omega < 0.
    """
    omega = complex(omega)
    if omega.real < 0.0:
        raise PreconditionError(f"Re omega = {omega.real} < 0: the series does not converge there")
    n = medium.n_layers
    if locate_source(medium, source) != n:
        raise SourceError("the series closed form needs the source in the last layer")
    sequence = sequence if sequence is not None else q_sequence(medium.profile, degree_cap)
    point = np.exp(-omega * np.asarray(medium.profile.generators, dtype=float))
    value, tail = evaluate(sequence[-1], point)
    t = rhs_blocks(medium, omega, source)
    factor = -t[n - 2, 0] * np.exp(omega * medium.slowness[n - 1] * medium.interfaces[n - 2])
    return complex(factor * value), float(abs(factor) * tail)


def back_substitute(medium: LaminarMedium, omega: complex, c2n: complex, source: SourceSpec) -> dict[int, tuple[complex, complex]]:
    """
    Layer coefficients right of the source from c_{2n} alone.

    Block rows j > k have zero right-hand side, so
    (c_{2j-1}, c_{2j}) = -A_j^{-1} B_j (c_{2j+1}, c_{2j+2}) with layer n read
    as (0, c_{2n}). Returns {layer: (c_{2j-1}, c_{2j})} for j = n-1 .. k+1.
    """
    n = medium.n_layers
    k = locate_source(medium, source)
    b, x = medium.slowness, medium.interfaces
    vector = np.array([0j, c2n])
    layers = {}
    for j in range(n - 1, k, -1):
        bl, br, xj = b[j - 1], b[j], x[j - 1]
        step = np.array([
            [(br + bl) * np.exp(omega * (br - bl) * xj), (br - bl) * np.exp(-omega * (bl + br) * xj)],
            [(br - bl) * np.exp(omega * (bl + br) * xj), (br + bl) * np.exp(-omega * (br - bl) * xj)],
        ]) / (2.0 * br)
        vector = step @ vector
        layers[j] = (complex(vector[0]), complex(vector[1]))
    return layers


def transmission_factors(medium: LaminarMedium, omega: complex) -> pd.DataFrame:
    """
    Per interface, (1 - d_j)/(1 - d_j Q_j) against (1 + d_j beta(-d_j)(Q_j))/(1 + d_j).
    """
    d = medium.profile.coefficients
    q = q_values(medium, omega)
    rows = []
    for j in range(1, medium.n_layers):
        dj, qj = d[j - 1], q[j - 1]
        lhs = (1.0 - dj) / (1.0 - dj * qj)
        rhs = (1.0 + dj * (qj - dj) / (1.0 - dj * qj)) / (1.0 + dj)
        rows.append({"interface": j, "lhs": lhs, "rhs": rhs, "gap": abs(lhs - rhs)})
    return pd.DataFrame(rows, columns=["interface", "lhs", "rhs", "gap"])


def _random_source(rng: np.random.Generator, medium: LaminarMedium, layer: int) -> SourceSpec:
    left, right = medium.layer_bounds(layer - 1)
    if math.isinf(left):
        return SourceSpec.dirac(right - rng.uniform(0.2, 1.0))
    if math.isinf(right):
        return SourceSpec.dirac(left + rng.uniform(0.2, 1.0))
    return SourceSpec.dirac(left + (right - left) * rng.uniform(0.2, 0.8))


def oracle_sweep(
    rng: np.random.Generator,
    n_values=(2, 3, 4, 5, 6),
    media_per_n: int = 2,
    frequency_count: int = 20,
    xi_range: tuple[float, float] = (0.1, 20.0),
    a_range: tuple[float, float] = (0.5, 2.0),
    condition_limit: float = CONDITION_LIMIT,
) -> pd.DataFrame:
    """
    Closed forms against the dense solve over random media and frequencies.

    One row per (medium, frequency, source case) with relative errors of
    c_{2n}, of det D_n and of the back-substituted layer coefficients.
    """
    rows = []
    for n in n_values:
        for medium_index in range(media_per_n):
            medium = random_medium(rng, n, a_range=a_range)
            layers = {"first": 1, "last": n}
            if n > 2:
                layers["interior"] = int(rng.integers(2, n))
            sources = {case: _random_source(rng, medium, layer) for case, layer in layers.items()}
            for xi in rng.uniform(xi_range[0], xi_range[1], size=frequency_count):
                omega = 1j * float(xi)
                for case, source in sources.items():
                    system = assemble_system(medium, omega, source)
                    solution = oracle_coefficients(system, condition_limit)
                    closed = c2n_case_formula(medium, omega, source)
                    det = determinant_product(medium, omega)
                    oracle_layers = solution.layer_coefficients()
                    substituted = back_substitute(medium, omega, solution.c2n, source)
                    scale = max(abs(c) for pair in oracle_layers for c in pair) or 1.0
                    backsub_err = max(
                        (abs(np.array(pair) - np.array(oracle_layers[j - 1])).max() / scale
                         for j, pair in substituted.items()),
                        default=0.0,
                    )
                    rows.append({
                        "n": n,
                        "medium": medium_index,
                        "case": case,
                        "omega_re": omega.real,
                        "omega_im": omega.imag,
                        "closed_form_abs": abs(closed),
                        "oracle_abs": abs(solution.c2n),
                        "rel_err": abs(closed - solution.c2n) / max(abs(solution.c2n), 1e-300),
                        "det_rel_err": abs(det - solution.determinant) / abs(solution.determinant),
                        "backsub_err": backsub_err,
                        "flagged": solution.flagged,
                    })
    logger.info("Oracle sweep: %d comparisons", len(rows))
    return pd.DataFrame(rows)
