"""
Numeric constants shared by the dispersion models.

Tolerances, pruning floors and thresholds in one place, with the unit or
scale each one is measured against.
"""

import math

# --- Series truncation ---

DEFAULT_DEGREE_CAP = 30  # total degree kept in MultiSeries
MAX_GEOMETRIC_TERMS = 400  # hard limit for the Möbius geometric expansion
GEOMETRIC_TAIL_TOL = 1e-17  # remainder target when the input has a constant term
PACKED_KEY_LIMIT = 2**62  # largest packed multi-index key before falling back to row sorting
MUL_CHUNK_PAIRS = 2_000_000  # coefficient pairs per convolution chunk

# --- Certification slack ---

TAN_BOUND_SLACK = 1e-6  # absolute, on top of tan(sum arctanh|d|)
ROUNDING_SLACK = 1e-12  # relative, for float sums of many coefficients

# --- Resolvent oracle ---

CONDITION_LIMIT = 1e12  # 2-norm condition number above which a solve is flagged

# --- Counterexample synthesis ---

PARTIAL_SUM_LIMIT = math.log(2) / 2  # bound on greedy partial sums and on each part
COEFFICIENT_RANGE = (0.5, 2.0)  # open interval every synthesized a-value must lie in
ALPHA_MIN = math.pi / 2

# --- Partitions ---

MAX_POWER = 4  # largest r for R(t)^r
EXACT_GENERATOR_LIMIT = 3  # above this, f-tables switch to the power-norm recursion
DEFAULT_POWER_LEVELS = 64  # powers ||R^m||, m <= levels, carried by the recursion
POWER_COLUMN_FACTOR = 4  # exact coefficient columns per stored level

# --- Wave ray tracer ---

PRUNING_FLOOR = 1e-12  # relative to the initial pulse amplitude
MAX_EVENTS = 500_000  # interface hits processed before the run is flagged partial
TIME_TOLERANCE = 1e-9  # arrivals closer than this on the scale t (t <= 1) or 1 + log t are merged
FLUX_TOLERANCE = 1e-12

# --- Schrodinger solver ---

MIN_CELLS_PER_LAYER = 16
BALANCE_TOLERANCE = 1e-10  # per-step discrete L2 balance defect
SPONGE_MONITOR_LIMIT = 1e-8  # wall-node amplitude relative to the field maximum, walled runs only
SPONGE_REFLECTION_LIMIT = 1e-6  # inward flux through the sponge edges, relative to ||u0||^2
SPONGE_STRENGTH = 10.0  # default sigma_max in units of max(a)
CFL_HEURISTIC = 0.5  # largest default dt * max(a) / dx**2; explicit steps above it only warn
FREE_DECAY_CONSTANT = 1.0 / math.sqrt(4.0 * math.pi)  # (4 pi)^(-1/2) = 0.28209...
