"""
Crank-Nicolson solver for i u_t + d_x(a d_x u) = 0 on a layered medium.

Nodes x_i = -L + i dx with u = 0 at both ends. The flux-form operator
H_0 u = -d_x(a d_x u) uses, on each cell, the harmonic mean of a over the
cell, which is exact flux continuity for piecewise-constant a. Outside
|x| < L - w an absorbing sponge -i sigma(x), sigma = sigma_max ((|x| - x_s)/w)^2,
damps outgoing waves. Each step solves

    (I + i dt/2 H) u^{n+1} = (I - i dt/2 H) u^n,   H = H_0 - i sigma

and logs the discrete balance ||u^{n+1}||^2 - ||u^n||^2 + 2 dt <m, sigma m> = 0,
m = (u^{n+1} + u^n)/2. Without a sponge this is exact norm conservation.

The sponge is monitored at its inner edges |x| = L - w, where the discrete
flux J = 2 a Im(conj(m_i) m_{i+1}) / dx may only point outwards; any inward
flux is mass coming back from the sponge. Walled runs (w = 0) watch the
amplitude next to the walls instead.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded

from src.data.numerics import (
    BALANCE_TOLERANCE,
    CFL_HEURISTIC,
    FREE_DECAY_CONSTANT,
    MIN_CELLS_PER_LAYER,
    SPONGE_MONITOR_LIMIT,
    SPONGE_REFLECTION_LIMIT,
    SPONGE_STRENGTH,
)
from src.models.errors import PreconditionError
from src.models.medium import LaminarMedium

logger = logging.getLogger(__name__)

# nodes next to each wall watched in walled runs
MONITOR_NODES = 5


@dataclass(frozen=True, eq=False)
class SchrodingerRun:
    grid: np.ndarray
    dx: float
    dt: float
    t_final: float
    times: np.ndarray  # snapshot times
    sup_norms: np.ndarray  # max |u| at each snapshot
    snapshots: np.ndarray | None  # fields at the snapshot times, when stored
    norm_log: pd.DataFrame  # step, t, norm2, absorbed, defect
    initial_l1: float
    max_balance_defect: float
    boundary_ratio: float
    inward_flux: float  # cumulative, relative to ||u0||^2; 0 for walled runs
    sponge_ok: bool


def gaussian_profile(x, center: float = 0.0, s: float = 0.05) -> np.ndarray:
    """exp(-(x - center)^2 / (4 s))."""
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - center) ** 2) / (4.0 * s))


def face_coefficients(medium: LaminarMedium, grid: np.ndarray) -> np.ndarray:
    """Harmonic mean of a over each cell [x_i, x_{i+1}]."""
    lo, hi = grid[0], grid[-1]
    inner = [x for x in medium.interfaces if lo < x < hi]
    breaks = np.array([lo, *inner, hi])
    inverse_a = np.asarray(medium.a_at(0.5 * (breaks[:-1] + breaks[1:])), dtype=float) ** -1
    cumulative = np.concatenate([[0.0], np.cumsum(inverse_a * np.diff(breaks))])
    at_nodes = np.interp(grid, breaks, cumulative)
    return np.diff(grid) / np.diff(at_nodes)


def sponge_profile(grid: np.ndarray, half_width: float, width: float, sigma_max: float) -> np.ndarray:
    if width <= 0.0 or sigma_max <= 0.0:
        return np.zeros_like(grid)
    start = half_width - width
    depth = np.clip((np.abs(grid) - start) / width, 0.0, None)
    return sigma_max * depth**2


def _check_grid(medium: LaminarMedium, half_width: float, sponge_width: float, dx: float, dt: float) -> None:
    if not (dx > 0.0 and dt > 0.0):
        raise PreconditionError("dx and dt must be positive")
    if not 0.0 <= sponge_width < half_width:
        raise PreconditionError("sponge width must lie in [0, half_width)")
    interior = half_width - sponge_width
    for x in medium.interfaces:
        if not -interior < x < interior:
            raise PreconditionError(f"interface {x} lies outside the sponge-free interior (-{interior}, {interior})")
    for k in range(1, medium.n_layers - 1):
        left, right = medium.layer_bounds(k)
        cells = (right - left) / dx
        if cells < MIN_CELLS_PER_LAYER:
            raise PreconditionError(
                f"layer {k + 1} has {cells:.1f} cells; at least {MIN_CELLS_PER_LAYER} required, reduce dx"
            )
    quality = dt * medium.upper / dx**2
    if quality > CFL_HEURISTIC * (1.0 + 1e-9):
        logger.warning(
            "dt * max(a) / dx^2 = %.3g exceeds %.3g; high frequencies will be phase-inaccurate",
            quality, CFL_HEURISTIC,
        )


def default_time_step(medium: LaminarMedium, dx: float, t_final: float) -> float:
    """Largest dt <= CFL_HEURISTIC dx^2 / max(a) that divides t_final into whole steps."""
    if not (dx > 0.0 and t_final > 0.0):
        raise PreconditionError("dx and t_final must be positive")
    dt_max = CFL_HEURISTIC * dx**2 / medium.upper
    return t_final / math.ceil(t_final / dt_max)


def _edge_faces(grid: np.ndarray, edge: float) -> tuple[int, int]:
    """Cells [x_i, x_{i+1}] straddling -edge and +edge."""
    left = int(np.searchsorted(grid, -edge, side="left")) - 1
    right = int(np.searchsorted(grid, edge, side="right")) - 1
    return max(left, 0), min(right, len(grid) - 2)


def _cell_flux(faces: np.ndarray, mid: np.ndarray, cell: int, dx: float) -> float:
    """2 a Im(conj(m_i) m_{i+1}) / dx on cell i; mid holds the interior nodes 1..N-1."""
    left = mid[cell - 1] if cell >= 1 else 0.0
    right = mid[cell] if cell < len(mid) else 0.0
    return 2.0 * faces[cell] * float(np.imag(np.conj(left) * right)) / dx


def schrodinger_evolve(
    medium: LaminarMedium,
    u0: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    t_final: float,
    dx: float = 0.05,
    dt: float | None = None,
    half_width: float = 80.0,
    sponge_width: float = 30.0,
    sigma_max: float | None = None,
    snapshot_every: int = 10,
    store_fields: bool = False,
) -> SchrodingerRun:
    """
    Evolve u0 to t_final.

    Args:
        medium: Layered coefficient a(x).
        u0: Callable on the node grid, or values at the nodes.
        t_final: Final time; the step count is round(t_final / dt).
        dx: Grid spacing.
        dt: Time step; defaults to default_time_step(medium, dx, t_final).
        half_width: Domain [-half_width, half_width].
        sponge_width: Width of each absorbing layer; 0 disables the sponge.
        sigma_max: Sponge strength; defaults to SPONGE_STRENGTH * max(a).
        snapshot_every: Steps between recorded snapshots.
        store_fields: Keep the full field at each snapshot.

    Returns:
        SchrodingerRun with sup norms at the snapshots and the balance log.
    """
    if dt is None:
        dt = default_time_step(medium, dx, t_final)
    _check_grid(medium, half_width, sponge_width, dx, dt)
    count = int(round(2.0 * half_width / dx))
    grid = np.linspace(-half_width, half_width, count + 1)
    dx = float(grid[1] - grid[0])
    sigma_max = SPONGE_STRENGTH * medium.upper if sigma_max is None else sigma_max
    sigma = sponge_profile(grid, half_width, sponge_width, sigma_max)[1:-1]

    u = np.asarray(u0(grid) if callable(u0) else u0, dtype=complex).copy()
    if u.shape != grid.shape:
        raise PreconditionError(f"u0 has {u.shape[0]} values, grid has {grid.shape[0]} nodes")
    u[0] = u[-1] = 0.0
    initial_l1 = float(trapezoid(np.abs(u), grid))
    if not initial_l1 > 0.0:
        raise PreconditionError("u0 vanishes on the grid")

    faces = face_coefficients(medium, grid)
    main = (faces[:-1] + faces[1:]) / dx**2 - 1j * sigma
    off = -faces[1:-1] / dx**2
    half = 0.5j * dt
    banded = np.zeros((3, count - 1), dtype=complex)
    banded[0, 1:] = half * off
    banded[1, :] = 1.0 + half * main
    banded[2, :-1] = half * off

    steps = int(round(t_final / dt))
    field = u[1:-1]
    times, sups = [0.0], [float(np.abs(field).max())]
    fields = [u.copy()] if store_fields else None
    log_rows = []
    norm2 = float(np.vdot(field, field).real) * dx
    max_defect = 0.0
    boundary_ratio = 0.0
    sponged = sponge_width > 0.0 and sigma_max > 0.0
    left_cell, right_cell = _edge_faces(grid, half_width - sponge_width)
    initial_norm2, inward = norm2, 0.0
    start = time.perf_counter()
    for step in range(1, steps + 1):
        rhs = (1.0 - half * main) * field
        rhs[:-1] -= half * off * field[1:]
        rhs[1:] -= half * off * field[:-1]
        new = solve_banded((1, 1), banded, rhs)
        mid = 0.5 * (new + field)
        absorbed = 2.0 * dt * float(np.sum(sigma * np.abs(mid) ** 2)) * dx
        if sponged:
            # positive J points right: inward is J < 0 on the right edge, J > 0 on the left
            inward += dt * (max(-_cell_flux(faces, mid, right_cell, dx), 0.0)
                            + max(_cell_flux(faces, mid, left_cell, dx), 0.0))
        new_norm2 = float(np.vdot(new, new).real) * dx
        defect = abs(new_norm2 - norm2 + absorbed) / norm2 if norm2 > 0.0 else 0.0
        max_defect = max(max_defect, defect)
        log_rows.append((step, step * dt, new_norm2, absorbed, defect))
        field, norm2 = new, new_norm2

        peak = float(np.abs(field).max())
        edge = float(max(np.abs(field[:MONITOR_NODES]).max(), np.abs(field[-MONITOR_NODES:]).max()))
        if peak > 0.0:
            boundary_ratio = max(boundary_ratio, edge / peak)
        if step % snapshot_every == 0 or step == steps:
            times.append(step * dt)
            sups.append(peak)
            if store_fields:
                fields.append(np.concatenate([[0.0], field, [0.0]]))

    if max_defect > BALANCE_TOLERANCE:
        logger.warning("Discrete L2 balance defect %.3g exceeds %.1g", max_defect, BALANCE_TOLERANCE)
    inward_flux = inward / initial_norm2
    if sponged:
        sponge_ok = inward_flux <= SPONGE_REFLECTION_LIMIT
        if not sponge_ok:
            logger.warning(
                "Inward flux through the sponge edges reached %.3g of ||u0||^2; widen or soften the sponge",
                inward_flux,
            )
    else:
        sponge_ok = boundary_ratio <= SPONGE_MONITOR_LIMIT
        if not sponge_ok:
            logger.warning(
                "Wall amplitude reached %.3g of the field maximum; widen the domain or add a sponge",
                boundary_ratio,
            )
    logger.info(
        "Schrodinger run: %d nodes, %d steps in %.2fs, max balance defect %.3g",
        count + 1, steps, time.perf_counter() - start, max_defect,
    )
    return SchrodingerRun(
        grid=grid,
        dx=dx,
        dt=dt,
        t_final=steps * dt,
        times=np.array(times),
        sup_norms=np.array(sups),
        snapshots=np.array(fields) if store_fields else None,
        norm_log=pd.DataFrame(log_rows, columns=["step", "t", "norm2", "absorbed", "defect"]),
        initial_l1=initial_l1,
        max_balance_defect=max_defect,
        boundary_ratio=boundary_ratio,
        inward_flux=inward_flux,
        sponge_ok=sponge_ok,
    )


def schrodinger_decay_ratio(run: SchrodingerRun, allow_sponge_violation: bool = False) -> pd.DataFrame:
    """sqrt(t) ||u(t)||_inf / ||u0||_1 over the positive snapshot times."""
    if not (run.sponge_ok or allow_sponge_violation):
        raise PreconditionError(
            f"sponge monitor tripped (inward flux {run.inward_flux:.3g}, wall ratio {run.boundary_ratio:.3g}); "
            "decay ratios would include reflections"
        )
    positive = run.times > 0.0
    t = run.times[positive]
    return pd.DataFrame({"t": t, "ratio": np.sqrt(t) * run.sup_norms[positive] / run.initial_l1})


def free_decay_limit(a: float = 1.0) -> float:
    """(4 pi a)^(-1/2), the t -> infinity ratio for constant a."""
    return FREE_DECAY_CONSTANT / math.sqrt(a)
