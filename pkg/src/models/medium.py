"""
Laminar (piecewise-constant) media.

A medium is a partition x_1 < ... < x_{n-1} of the line into layers
I_1 = (-inf, x_1), ..., I_n = (x_{n-1}, inf) with a(x) = b_k^{-2} on I_k.
Everything downstream treats a medium as an immutable value.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from src.data.numerics import ALPHA_MIN, COEFFICIENT_RANGE, PARTIAL_SUM_LIMIT
from src.models.errors import MediumError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReflectionProfile:
    """
    Interface reflection data of a medium.

    ``coefficients`` are d_k = (b_k - b_{k+1}) / (b_k + b_{k+1}); ``generators``
    are the round-trip times lambda_k = 2 b_{k+1} (x_{k+1} - x_k) of the
    interior layers, one per Q-recursion modulation.
    """

    coefficients: tuple[float, ...]
    generators: tuple[float, ...] = ()

    def __post_init__(self):
        for k, d in enumerate(self.coefficients):
            if not abs(d) < 1.0:
                raise MediumError(f"reflection coefficient {d} outside (-1, 1)", index=k)
        expected = max(len(self.coefficients) - 1, 0)
        if len(self.generators) != expected:
            raise MediumError(
                f"{len(self.coefficients)} coefficients need {expected} generators, "
                f"got {len(self.generators)}"
            )
        for k, lam in enumerate(self.generators):
            if not lam > 0.0:
                raise MediumError(f"generator {lam} must be positive", index=k)

    @property
    def n_layers(self) -> int:
        return len(self.coefficients) + 1

    @property
    def generator_count(self) -> int:
        return len(self.generators)

    @cached_property
    def arctanh_sum(self) -> float:
        return math.fsum(math.atanh(abs(d)) for d in self.coefficients)


@dataclass(frozen=True)
class LaminarMedium:
    """Layer coefficients a_k, slownesses b_k = a_k^{-1/2} and the bounds m <= a <= M."""

    interfaces: tuple[float, ...]
    a_values: tuple[float, ...]
    slowness: tuple[float, ...]
    lower: float
    upper: float
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        _check_layers(self.a_values, self.interfaces)
        if len(self.slowness) != len(self.a_values):
            raise MediumError("one slowness per layer required")

    @property
    def n_layers(self) -> int:
        return len(self.a_values)

    @cached_property
    def profile(self) -> ReflectionProfile:
        return reflection_profile(self)

    def layer_of(self, x):
        """0-based layer index of x (vectorized); points on x_k belong to the right layer."""
        return np.searchsorted(np.asarray(self.interfaces, dtype=float), x, side="right")

    def a_at(self, x) -> np.ndarray:
        return np.asarray(self.a_values, dtype=float)[self.layer_of(x)]

    def layer_bounds(self, k: int) -> tuple[float, float]:
        """Closure endpoints of 0-based layer k, infinite for the two outer layers."""
        left = self.interfaces[k - 1] if k > 0 else -math.inf
        right = self.interfaces[k] if k < len(self.interfaces) else math.inf
        return left, right


def _check_layers(a_values: Sequence[float], interfaces: Sequence[float]) -> None:
    if len(a_values) < 1:
        raise MediumError("a medium needs at least one layer")
    if len(a_values) != len(interfaces) + 1:
        raise MediumError(
            f"{len(a_values)} layers need {len(a_values) - 1} interfaces, got {len(interfaces)}"
        )
    for k, a in enumerate(a_values):
        if not (math.isfinite(a) and a > 0.0):
            raise MediumError(f"coefficient a[{k}] = {a} must be positive and finite", index=k)
    for k, x in enumerate(interfaces):
        if not math.isfinite(x):
            raise MediumError(f"interface x[{k}] = {x} is not finite", index=k)
        if k > 0 and not x > interfaces[k - 1]:
            raise MediumError(
                f"interfaces must increase strictly, x[{k}] = {x} <= x[{k - 1}]", index=k
            )


def build_medium(
    a_values: Iterable[float],
    interfaces: Iterable[float],
    metadata: dict | None = None,
) -> LaminarMedium:
    """
    Build a medium from per-layer coefficients.

    Args:
        a_values: Positive a_k, one per layer.
        interfaces: Strictly increasing positions, one fewer than layers.
        metadata: Free-form provenance stored alongside (not compared).

    Returns:
        LaminarMedium with b_k = a_k^{-1/2}, m = min a_k and M = max a_k.
    """
    a = tuple(float(v) for v in a_values)
    x = tuple(float(v) for v in interfaces)
    _check_layers(a, x)
    return LaminarMedium(
        interfaces=x,
        a_values=a,
        slowness=tuple(1.0 / math.sqrt(v) for v in a),
        lower=min(a),
        upper=max(a),
        metadata=dict(metadata or {}),
    )


def medium_from_slowness(
    slowness: Iterable[float],
    interfaces: Iterable[float],
    metadata: dict | None = None,
) -> LaminarMedium:
    """Same as build_medium but from b_k; the slownesses are kept exactly."""
    b = tuple(float(v) for v in slowness)
    for k, v in enumerate(b):
        if not (math.isfinite(v) and v > 0.0):
            raise MediumError(f"slowness b[{k}] = {v} must be positive and finite", index=k)
    a = tuple(v ** -2 for v in b)
    x = tuple(float(v) for v in interfaces)
    _check_layers(a, x)
    return LaminarMedium(
        interfaces=x,
        a_values=a,
        slowness=b,
        lower=min(a),
        upper=max(a),
        metadata=dict(metadata or {}),
    )


def reflection_profile(medium: LaminarMedium) -> ReflectionProfile:
    """
    Reflection coefficients and Q-recursion generators of a medium.

    A single-layer medium gives the empty profile.
    """
    b = medium.slowness
    x = medium.interfaces
    n = medium.n_layers
    coefficients = tuple((b[k] - b[k + 1]) / (b[k] + b[k + 1]) for k in range(n - 1))
    generators = tuple(2.0 * b[k + 1] * (x[k + 1] - x[k]) for k in range(n - 2))
    return ReflectionProfile(coefficients=coefficients, generators=generators)


def log_variation(medium: LaminarMedium) -> float:
    """Var(log a) = sum_k |log a_k - log a_{k+1}|."""
    logs = [math.log(a) for a in medium.a_values]
    return math.fsum(abs(logs[k] - logs[k + 1]) for k in range(len(logs) - 1))


def coefficient_variation(medium: LaminarMedium) -> float:
    """Var(a) = sum_k |a_k - a_{k+1}|."""
    a = medium.a_values
    return math.fsum(abs(a[k] - a[k + 1]) for k in range(len(a) - 1))


def arctanh_sum(profile: ReflectionProfile) -> float:
    """sum_k arctanh|d_k|; a quarter of Var(log a)."""
    return profile.arctanh_sum


def first_primes(count: int) -> list[int]:
    """The first ``count`` primes."""
    if count <= 0:
        return []
    limit = max(16, int(count * (math.log(count + 1) + math.log(math.log(count + 2)) + 2)))
    while True:
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, int(limit**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        primes = np.flatnonzero(sieve)
        if len(primes) >= count:
            return [int(p) for p in primes[:count]]
        limit *= 2


def greedy_signs(parts: Sequence[float]) -> list[int]:
    """
    Signs keeping the running sum of eps_k t_k near zero.

    eps_1 = +1; afterwards eps_k = -1 while the running sum is positive and +1
    otherwise. With every part at most L the running sums stay in [-L, L].
    """
    signs = []
    running = 0.0
    for k, t in enumerate(parts):
        eps = 1 if k == 0 or running <= 0.0 else -1
        signs.append(eps)
        running += eps * t
    return signs


def synthesize_counterexample(alpha: float, parts, width_scale: float = 1.0) -> LaminarMedium:
    """
    Medium whose reflection coefficients are d_k = eps_k tanh(t_k).

    The log-coefficient jumps are 4 eps_k t_k, so Var(log a) = 4 alpha. The
    a-values are rescaled by one constant so that their log-range is centred,
    which keeps them inside (1/2, 2) whenever the greedy partial sums span less
    than (log 2)/2. Interior round-trip times are width_scale * sqrt(p) for
    distinct primes p; the widths follow from them and are stored in metadata.

    Args:
        alpha: Target sum of parts, at least pi/2.
        parts: A Partition or a sequence of positive parts summing to alpha.
        width_scale: Scale of the interior round-trip times.

    Returns:
        LaminarMedium with metadata {alpha, parts, signs, widths, generators}.
    """
    t = [float(v) for v in getattr(parts, "parts", parts)]
    if alpha < ALPHA_MIN - 1e-12:
        raise PreconditionError(f"alpha = {alpha} is below pi/2")
    if not width_scale > 0.0:
        raise PreconditionError("width_scale must be positive")
    if not t:
        raise PreconditionError("empty partition")
    if abs(math.fsum(t) - alpha) > 1e-9 * max(1.0, alpha):
        raise PreconditionError(f"parts sum to {math.fsum(t)}, not alpha = {alpha}")
    for k, part in enumerate(t):
        if not 0.0 < part < PARTIAL_SUM_LIMIT:
            raise PreconditionError(
                f"part t[{k}] = {part} is not below (log 2)/2 = {PARTIAL_SUM_LIMIT:.6f}; "
                "refine the partition"
            )

    signs = greedy_signs(t)
    log_b = [0.0]
    for eps, part in zip(signs, t):
        log_b.append(log_b[-1] - 2.0 * eps * part)
    log_a = np.array([-2.0 * v for v in log_b])
    log_a -= 0.5 * (log_a.max() + log_a.min())
    a = np.exp(log_a)
    low, high = COEFFICIENT_RANGE
    if not (a.min() > low and a.max() < high):
        raise PreconditionError(
            f"synthesized coefficients span [{a.min():.6f}, {a.max():.6f}], outside (1/2, 2); "
            "refine the partition"
        )

    b = a ** -0.5
    generators = [width_scale * math.sqrt(p) for p in first_primes(len(t) - 1)]
    widths = [lam / (2.0 * b[j + 1]) for j, lam in enumerate(generators)]
    interfaces = [0.0]
    for w in widths:
        interfaces.append(interfaces[-1] + w)

    logger.info(
        "Synthesized counterexample: alpha=%.6f, %d parts, a in [%.4f, %.4f]",
        alpha, len(t), a.min(), a.max(),
    )
    metadata = {
        "alpha": alpha,
        "parts": t,
        "signs": signs,
        "widths": widths,
        "generators": generators,
    }
    return build_medium(a.tolist(), interfaces, metadata)


def random_medium(
    rng: np.random.Generator,
    n_layers: int,
    a_range: tuple[float, float] = (0.5, 2.0),
    width_range: tuple[float, float] = (0.5, 2.0),
    start: float = 0.0,
) -> LaminarMedium:
    """Random medium for property sweeps: uniform a_k and layer widths."""
    if n_layers < 1:
        raise MediumError("a medium needs at least one layer")
    a = rng.uniform(a_range[0], a_range[1], size=n_layers)
    widths = rng.uniform(width_range[0], width_range[1], size=max(n_layers - 2, 0))
    interfaces = [start] if n_layers > 1 else []
    for w in widths:
        interfaces.append(interfaces[-1] + float(w))
    return build_medium(a.tolist(), interfaces)
