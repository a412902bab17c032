"""
Sparse multi-index series with certified truncation tails.

A MultiSeries holds finitely many terms c_j q^j (j a multi-index over m
generators) of a formal series T, plus two bounds on what was left out:

- ``tail_bound``: certified upper bound on ||T - S||, the AP norm of the
  difference between the true series and the stored terms;
- ``overlap_bound``: the part of that tail which may sit on stored
  multi-indices. The rest lives strictly above ``degree_cap``.

Hence ||T|| lies in [sum|c| - overlap_bound, sum|c| + tail_bound]. Pure degree
truncation never creates overlap, so for such series the lower end is exactly
the stored norm.

Terms are kept as an integer exponent matrix and a complex coefficient vector;
products are computed by packing exponent rows into integer keys and
aggregating with numpy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from src.data.numerics import (
    DEFAULT_DEGREE_CAP,
    GEOMETRIC_TAIL_TOL,
    MAX_GEOMETRIC_TERMS,
    MUL_CHUNK_PAIRS,
    PACKED_KEY_LIMIT,
)
from src.models.errors import ContractionError, PreconditionError, SeriesShapeError

logger = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class NormInterval:
    """Certified bracket lower <= ||.||_AP <= upper."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(f"invalid norm interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack


def _pack(exponents: np.ndarray, radix: int) -> np.ndarray:
    weights = radix ** np.arange(exponents.shape[1], dtype=np.int64)
    return exponents @ weights


def _unpack(keys: np.ndarray, radix: int, m: int) -> np.ndarray:
    out = np.empty((len(keys), m), dtype=np.int64)
    rest = keys.copy()
    for i in range(m):
        rest, out[:, i] = np.divmod(rest, radix)
    return out


def _aggregate(exponents: np.ndarray, coefficients: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum coefficients of repeated multi-indices; output order is deterministic."""
    m = exponents.shape[1]
    if len(coefficients) == 0:
        return np.zeros((0, m), dtype=np.int64), np.zeros(0, dtype=complex)
    radix = int(exponents.max()) + 1 if m else 1
    if m == 0 or radix**m < PACKED_KEY_LIMIT:
        keys = _pack(exponents, radix)
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        unique_rows = _unpack(unique_keys, radix, m)
    else:
        unique_rows, inverse = np.unique(exponents, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    size = len(unique_rows)
    summed = np.bincount(inverse, weights=coefficients.real, minlength=size) + 1j * np.bincount(
        inverse, weights=coefficients.imag, minlength=size
    )
    return unique_rows, summed


class MultiSeries:
    """
    Immutable truncated series sum_j c_j q^j over ``generator_count`` generators.

    Build instances with the module constructors (``constant``, ``monomial``,
    ``from_terms``); every instance is normalized: repeated indices merged,
    exact zeros dropped and terms above ``degree_cap`` moved into the tail.
    """

    __slots__ = ("generator_count", "degree_cap", "tail_bound", "overlap_bound",
                 "exponents", "coefficients")

    def __init__(
        self,
        generator_count: int,
        exponents: np.ndarray,
        coefficients: np.ndarray,
        degree_cap: int = DEFAULT_DEGREE_CAP,
        tail_bound: float = 0.0,
        overlap_bound: float = 0.0,
    ):
        if generator_count < 0 or degree_cap < 0:
            raise SeriesShapeError("generator_count and degree_cap must be nonnegative")
        coeffs = np.asarray(coefficients, dtype=complex).ravel()
        try:
            exps = np.asarray(exponents, dtype=np.int64).reshape(len(coeffs), generator_count)
        except ValueError as exc:
            raise SeriesShapeError("one coefficient per multi-index required") from exc
        if exps.size and exps.min() < 0:
            raise SeriesShapeError("multi-indices must be nonnegative")
        if not (tail_bound >= 0.0 and overlap_bound >= 0.0):
            raise SeriesShapeError("tail bounds must be nonnegative")

        exps, coeffs = _aggregate(exps, coeffs)
        degrees = exps.sum(axis=1)
        above = degrees > degree_cap
        tail_bound = float(tail_bound) + float(np.abs(coeffs[above]).sum())
        keep = ~above & (coeffs != 0)
        exps, coeffs = exps[keep], coeffs[keep]
        exps.setflags(write=False)
        coeffs.setflags(write=False)

        object.__setattr__(self, "generator_count", int(generator_count))
        object.__setattr__(self, "degree_cap", int(degree_cap))
        object.__setattr__(self, "tail_bound", tail_bound)
        object.__setattr__(self, "overlap_bound", min(float(overlap_bound), tail_bound))
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("MultiSeries is immutable")

    @property
    def size(self) -> int:
        return len(self.coefficients)

    @property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    @property
    def min_degree(self) -> int | None:
        return int(self.degrees.min()) if self.size else None

    @property
    def terms(self) -> dict[MultiIndex, complex]:
        return {
            tuple(int(e) for e in row): complex(c)
            for row, c in zip(self.exponents, self.coefficients)
        }

    def coefficient(self, index: Sequence[int]) -> complex:
        if len(index) != self.generator_count:
            raise SeriesShapeError(f"index {tuple(index)} has the wrong length")
        hits = np.all(self.exponents == np.asarray(index, dtype=np.int64), axis=1)
        return complex(self.coefficients[hits].sum()) if hits.any() else 0j

    def norm(self) -> "NormInterval":
        return ap_norm(self)

    def __add__(self, other):
        if isinstance(other, MultiSeries):
            return add(self, other)
        return add(self, constant(other, self.generator_count, self.degree_cap))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, MultiSeries) else -complex(other))

    def __mul__(self, other):
        if isinstance(other, MultiSeries):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __repr__(self):
        return (
            f"MultiSeries(generators={self.generator_count}, terms={self.size}, "
            f"cap={self.degree_cap}, tail={self.tail_bound:.3g})"
        )


def zero(generator_count: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> MultiSeries:
    return MultiSeries(generator_count, np.zeros((0, generator_count)), np.zeros(0), degree_cap)


def constant(value: complex, generator_count: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> MultiSeries:
    return MultiSeries(generator_count, np.zeros((1, generator_count)), [value], degree_cap)


def monomial(
    index: Sequence[int],
    coefficient: complex = 1.0,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> MultiSeries:
    return MultiSeries(len(index), np.array([index]), [coefficient], degree_cap)


def from_terms(
    generator_count: int,
    terms: Mapping[MultiIndex, complex],
    degree_cap: int = DEFAULT_DEGREE_CAP,
    tail_bound: float = 0.0,
) -> MultiSeries:
    """Series from a {multi-index: coefficient} map."""
    keys = list(terms)
    for key in keys:
        if len(key) != generator_count:
            raise SeriesShapeError(f"index {key} does not have {generator_count} entries")
    exps = np.array(keys, dtype=np.int64).reshape(len(keys), generator_count)
    return MultiSeries(generator_count, exps, [terms[k] for k in keys], degree_cap, tail_bound)


def ap_norm(s: MultiSeries) -> NormInterval:
    """Certified bracket of the AP norm sum_j |c_j| of the untruncated series."""
    stored = math.fsum(np.abs(s.coefficients))
    return NormInterval(max(0.0, stored - s.overlap_bound), stored + s.tail_bound)


def _check_shapes(s1: MultiSeries, s2: MultiSeries) -> None:
    if s1.generator_count != s2.generator_count:
        raise SeriesShapeError(
            f"generator_count mismatch: {s1.generator_count} vs {s2.generator_count}"
        )


def add(s1: MultiSeries, s2: MultiSeries) -> MultiSeries:
    _check_shapes(s1, s2)
    return MultiSeries(
        s1.generator_count,
        np.vstack([s1.exponents, s2.exponents]),
        np.concatenate([s1.coefficients, s2.coefficients]),
        degree_cap=min(s1.degree_cap, s2.degree_cap),
        tail_bound=s1.tail_bound + s2.tail_bound,
        overlap_bound=s1.overlap_bound + s2.overlap_bound,
    )


def scale(s: MultiSeries, factor: complex) -> MultiSeries:
    factor = complex(factor)
    size = abs(factor)
    return MultiSeries(
        s.generator_count,
        s.exponents,
        s.coefficients * factor,
        degree_cap=s.degree_cap,
        tail_bound=s.tail_bound * size,
        overlap_bound=s.overlap_bound * size,
    )


def mul(s1: MultiSeries, s2: MultiSeries) -> MultiSeries:
    """
    Product with truncation at the smaller degree cap.

    Products landing above the cap go to the tail as the sum of their
    |c1 c2|; input tails propagate as L1 u2 + L2 u1 + u1 u2.
    """
    _check_shapes(s1, s2)
    cap = min(s1.degree_cap, s2.degree_cap)
    m = s1.generator_count
    abs1, abs2 = np.abs(s1.coefficients), np.abs(s2.coefficients)
    l1, l2 = math.fsum(abs1), math.fsum(abs2)
    u1, u2 = s1.tail_bound, s2.tail_bound
    o1, o2 = s1.overlap_bound, s2.overlap_bound

    order = np.argsort(s2.degrees, kind="stable")
    e2, c2, a2 = s2.exponents[order], s2.coefficients[order], abs2[order]
    d2 = e2.sum(axis=1)
    suffix = np.concatenate([np.cumsum(a2[::-1])[::-1], [0.0]])

    d1 = s1.degrees
    counts = np.searchsorted(d2, cap - d1, side="right")
    discarded = float(np.dot(abs1, suffix[counts])) if len(d1) else 0.0

    parts_e, parts_c = [], []
    start = 0
    while start < len(counts):
        stop = start + 1
        budget = counts[start]
        while stop < len(counts) and budget + counts[stop] <= MUL_CHUNK_PAIRS:
            budget += counts[stop]
            stop += 1
        chunk = counts[start:stop]
        total = int(chunk.sum())
        if total:
            rows = np.repeat(np.arange(start, stop), chunk)
            offsets = np.repeat(np.cumsum(chunk) - chunk, chunk)
            cols = np.arange(total) - offsets
            exps, coeffs = _aggregate(
                s1.exponents[rows] + e2[cols], s1.coefficients[rows] * c2[cols]
            )
            parts_e.append(exps)
            parts_c.append(coeffs)
        start = stop

    exps = np.vstack(parts_e) if parts_e else np.zeros((0, m), dtype=np.int64)
    coeffs = np.concatenate(parts_c) if parts_c else np.zeros(0, dtype=complex)
    # Tail pieces multiplying an above-cap remainder stay above the cap.
    overlap = l1 * o2 + l2 * o1 + o1 * o2
    tail = discarded + l1 * u2 + l2 * u1 + u1 * u2
    return MultiSeries(m, exps, coeffs, degree_cap=cap, tail_bound=tail, overlap_bound=overlap)


def power(s: MultiSeries, r: int) -> MultiSeries:
    """s**r for a nonnegative integer r."""
    if r < 0:
        raise PreconditionError("power must be nonnegative")
    result = constant(1.0, s.generator_count, s.degree_cap)
    for _ in range(r):
        result = mul(result, s)
    return result


def prune(s: MultiSeries, floor: float) -> MultiSeries:
    """Move coefficients with |c| < floor into the tail."""
    if floor <= 0.0 or s.size == 0:
        return s
    small = np.abs(s.coefficients) < floor
    if not small.any():
        return s
    mass = float(np.abs(s.coefficients[small]).sum())
    return MultiSeries(
        s.generator_count,
        s.exponents[~small],
        s.coefficients[~small],
        degree_cap=s.degree_cap,
        tail_bound=s.tail_bound + mass,
        overlap_bound=s.overlap_bound + mass,
    )


def modulate(s: MultiSeries, generator_index: int, power: int = 1) -> MultiSeries:
    """Multiply by q_g**power; terms pushed above the cap move into the tail."""
    if not 0 <= generator_index < s.generator_count:
        raise SeriesShapeError(
            f"generator index {generator_index} out of range for {s.generator_count} generators"
        )
    if power < 1:
        raise PreconditionError("modulation power must be positive")
    exps = s.exponents.copy()
    exps[:, generator_index] += power
    return MultiSeries(
        s.generator_count, exps, s.coefficients,
        degree_cap=s.degree_cap, tail_bound=s.tail_bound, overlap_bound=s.overlap_bound,
    )


def mobius_beta(d: float, s: MultiSeries, *, floor: float = 0.0, step: int | None = None) -> MultiSeries:
    """
    beta(d)(s) = (s + d) / (1 + d s) by geometric expansion of the denominator.

    With rho = |d| ||s||_upper < 1 the powers (-d s)^j are summed until the
    remainder rho^(K+1) / (1 - rho) is negligible, or up to the degree cap when
    s has no constant term (later powers lie entirely above the cap).

    Raises:
        ContractionError: rho >= 1; ``step`` is passed through for callers
            running a recursion.
    """
    if not -1.0 < d < 1.0:
        raise PreconditionError(f"Möbius parameter {d} outside (-1, 1)")
    upper = ap_norm(s).upper
    rho = abs(d) * upper
    if rho >= 1.0:
        where = f" at step {step}" if step is not None else ""
        raise ContractionError(f"contraction fails{where}: rho = {rho:.6g} >= 1", rho=rho, step=step)

    m, cap = s.generator_count, s.degree_cap
    ratio = scale(s, -d)
    one = constant(1.0, m, cap)
    no_constant = s.overlap_bound == 0.0 and (s.size == 0 or s.min_degree >= 1)
    limit = cap if no_constant else MAX_GEOMETRIC_TERMS

    geometric, term, retained = one, one, 0
    while retained < limit and rho ** (retained + 1) / (1.0 - rho) > GEOMETRIC_TAIL_TOL:
        term = prune(mul(term, ratio), floor)
        retained += 1
        geometric = add(geometric, term)

    remainder = rho ** (retained + 1) / (1.0 - rho) if rho > 0.0 else 0.0
    above_cap = no_constant and retained >= cap
    geometric = MultiSeries(
        m, geometric.exponents, geometric.coefficients, degree_cap=cap,
        tail_bound=geometric.tail_bound + remainder,
        overlap_bound=geometric.overlap_bound + (0.0 if above_cap else remainder),
    )
    logger.debug("beta(%.6g): rho=%.4g, %d geometric terms, remainder %.3g", d, rho, retained, remainder)
    return prune(mul(add(s, constant(d, m, cap)), geometric), floor)


def evaluate(s: MultiSeries, point: Sequence[complex]) -> tuple[complex, float]:
    """
    Sum of the stored terms at q = point, with the tail as error radius.

    The radius is valid whenever every |q_k| <= 1.
    """
    z = np.asarray(point, dtype=complex).ravel()
    if len(z) != s.generator_count:
        raise SeriesShapeError(f"point has {len(z)} entries, series has {s.generator_count} generators")
    if s.size == 0:
        return 0j, s.tail_bound
    monomials = np.prod(z[None, :] ** s.exponents, axis=1)
    return complex(np.dot(s.coefficients, monomials)), s.tail_bound


def dumps(s: MultiSeries) -> str:
    """Text dump: header ``generators m cap K tail t overlap o``, then ``j_1 .. j_m re im`` lines."""
    lines = [
        f"generators {s.generator_count} cap {s.degree_cap} "
        f"tail {s.tail_bound!r} overlap {s.overlap_bound!r}"
    ]
    for row, c in zip(s.exponents, s.coefficients):
        index = " ".join(str(int(e)) for e in row)
        lines.append(f"{index}  {float(c.real)!r} {float(c.imag)!r}".lstrip())
    return "\n".join(lines) + "\n"


def loads(text: str) -> MultiSeries:
    """Inverse of dumps."""
    lines = [line for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise SeriesShapeError("empty series dump")
    header = lines[0].split()
    try:
        fields = dict(zip(header[0::2], header[1::2]))
        m = int(fields["generators"])
        cap = int(fields["cap"])
        tail = float(fields["tail"])
        overlap = float(fields.get("overlap", 0.0))
    except (KeyError, ValueError) as exc:
        raise SeriesShapeError(f"malformed series header: {lines[0]!r}") from exc
    exps, coeffs = [], []
    for line in lines[1:]:
        tokens = line.split()
        if len(tokens) != m + 2:
            raise SeriesShapeError(f"expected {m + 2} fields, got {line!r}")
        exps.append([int(v) for v in tokens[:m]])
        coeffs.append(complex(float(tokens[m]), float(tokens[m + 1])))
    return MultiSeries(
        m, np.array(exps, dtype=np.int64).reshape(len(coeffs), m), coeffs,
        degree_cap=cap, tail_bound=tail, overlap_bound=overlap,
    )

