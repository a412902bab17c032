"""
Exact event-driven solver for v_tt - d_x(a d_x v) = 0 with Dirac data.

Initial data v(0) = delta_y, v_t(0) = 0 splits into two pulses moving at
speed 1/b_k. Amplitudes are time-profile weights: a pulse of weight w
crossing a point contributes w delta(t - t_cross) to v(t, point), so the
two initial pulses carry b_k / 2 each. At an interface, with impedance
Z = 1/b, a pulse from the layer with impedance Z_from splits into

    reflected   r = (Z_from - Z_to) / (Z_from + Z_to)
    transmitted tau = 2 Z_from / (Z_from + Z_to)

which is continuity of v and a v_x. Z_from r^2 + Z_to tau^2 = Z_from holds
at every split.
"""

import heapq
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from src.data.numerics import DEFAULT_DEGREE_CAP, MAX_EVENTS, PRUNING_FLOOR, TIME_TOLERANCE
from src.models.errors import PreconditionError, SourceError
from src.models.medium import LaminarMedium
from src.models.resolvent import q_sequence
from src.models.series import ap_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Pulse:
    layer: int  # 0-based
    position: float
    direction: int  # +1 right, -1 left
    amplitude: float
    birth_time: float


@dataclass(frozen=True)
class ImpulseTrain:
    """Arrivals (t, amplitude) at a probe for t >= 0, time-sorted."""

    probe: float
    events: tuple[tuple[float, float], ...]
    truncation_mass: float = 0.0
    pending_mass: float = 0.0
    complete: bool = True
    max_flux_defect: float = 0.0
    event_count: int = 0

    def total_mass(self) -> float:
        return math.fsum(abs(a) for _, a in self.events)

    def mirrored(self) -> "ImpulseTrain":
        """The even extension v(-t) = v(t); an arrival at t = 0 is kept once."""
        negative = tuple((-t, a) for t, a in reversed(self.events) if t > 0.0)
        return replace(self, events=negative + self.events)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.events), columns=["t", "amplitude"])


def impedance_split(z_from: float, z_to: float) -> tuple[float, float, float]:
    """(r, tau, relative flux defect) for a pulse leaving impedance z_from."""
    r = (z_from - z_to) / (z_from + z_to)
    tau = 2.0 * z_from / (z_from + z_to)
    defect = abs(z_from * r * r + z_to * tau * tau - z_from) / z_from
    return r, tau, defect


def _arrival_scale(t: float) -> float:
    """t up to 1, 1 + log t beyond: equal steps are absolute below 1 and relative above."""
    return t if t <= 1.0 else 1.0 + math.log(t)


def _same_arrival(t1: float, t2: float, tolerance: float) -> bool:
    return abs(_arrival_scale(t1) - _arrival_scale(t2)) <= tolerance


def _merge_key(t: float, tolerance: float) -> int:
    """Bin of width ``tolerance`` on the arrival scale; matches sit in the same or an adjacent bin."""
    return int(round(_arrival_scale(t) / tolerance))


def _merge_events(events: list[tuple[float, float]], tolerance: float) -> tuple[tuple[float, float], ...]:
    merged: list[list[float]] = []
    for t, a in sorted(events):
        if merged and _same_arrival(merged[-1][0], t, tolerance):
            merged[-1][1] += a
        else:
            merged.append([t, a])
    return tuple((t, a) for t, a in merged if a != 0.0)


def _check_inputs(medium: LaminarMedium, y: float, probe: float, floor: float) -> int:
    if not floor > 0.0:
        raise PreconditionError("the pruning floor must be positive")
    x = medium.interfaces
    if y in x:
        raise SourceError(f"source position {y} lies on an interface")
    if probe in x:
        raise PreconditionError(f"probe {probe} lies on an interface")
    return int(medium.layer_of(y))


def wave_ray_trace(
    medium: LaminarMedium,
    y: float,
    probe: float,
    t_max: float,
    floor: float = PRUNING_FLOOR,
    max_events: int = MAX_EVENTS,
    time_tolerance: float = TIME_TOLERANCE,
) -> ImpulseTrain:
    """
    Arrivals at ``probe`` up to ``t_max`` for Dirac data at ``y``.

    Pulses whose weight falls below floor * (initial weight) are dropped into
    truncation_mass; pulses still travelling at t_max go to pending_mass.
    Pulses reaching the same interface from the same side within the time
    tolerance are merged before splitting.

    Returns:
        ImpulseTrain; ``complete`` is False when max_events interface hits
        were processed before t_max.
    """
    source_layer = _check_inputs(medium, y, probe, floor)
    b = medium.slowness
    x = medium.interfaces
    n = medium.n_layers
    w0 = b[source_layer] / 2.0
    cutoff = floor * w0

    crossings: list[tuple[float, float]] = []
    queue: list[tuple[float, int, int, int, int]] = []  # (time, seq, interface, direction, key)
    waiting: dict[tuple[int, int, int], list[float]] = {}  # -> [time, weight]
    seq = 0
    truncation = 0.0

    def launch(layer: int, position: float, direction: int, weight: float, time: float) -> None:
        nonlocal seq, truncation
        if abs(weight) < cutoff:
            truncation += abs(weight)
            return
        interface = layer if direction > 0 else layer - 1
        end = x[interface] if 0 <= interface < n - 1 else direction * math.inf
        if (probe - position) * direction >= 0.0 and (end - probe) * direction > 0.0:
            crossing = time + abs(probe - position) * b[layer]
            if crossing <= t_max:
                crossings.append((crossing, weight))
        if not 0 <= interface < n - 1:
            return
        arrival = time + abs(end - position) * b[layer]
        key = _merge_key(arrival, time_tolerance)
        for neighbour in (key, key - 1, key + 1):
            slot = waiting.get((interface, direction, neighbour))
            if slot is not None and _same_arrival(slot[0], arrival, time_tolerance):
                slot[1] += weight
                return
        waiting[(interface, direction, key)] = [arrival, weight]
        heapq.heappush(queue, (arrival, seq, interface, direction, key))
        seq += 1

    launch(source_layer, y, +1, w0, 0.0)
    launch(source_layer, y, -1, w0, 0.0)

    impedance = [1.0 / v for v in b]
    event_count = 0
    max_defect = 0.0
    complete = True
    while queue:
        time, _, interface, direction, key = queue[0]
        if time > t_max:
            break
        if event_count >= max_events:
            complete = False
            logger.warning("Event budget of %d exhausted at t=%.6g", max_events, time)
            break
        heapq.heappop(queue)
        _, weight = waiting.pop((interface, direction, key))
        event_count += 1
        here, there = (interface, interface + 1) if direction > 0 else (interface + 1, interface)
        r, tau, defect = impedance_split(impedance[here], impedance[there])
        max_defect = max(max_defect, defect)
        launch(here, x[interface], -direction, r * weight, time)
        launch(there, x[interface], direction, tau * weight, time)

    pending = math.fsum(abs(slot[1]) for slot in waiting.values())
    train = ImpulseTrain(
        probe=probe,
        events=_merge_events(crossings, time_tolerance),
        truncation_mass=truncation,
        pending_mass=pending,
        complete=complete,
        max_flux_defect=max_defect,
        event_count=event_count,
    )
    logger.debug(
        "Ray trace probe=%.6g: %d interface events, %d arrivals, truncated %.3g, pending %.3g",
        probe, event_count, len(train.events), truncation, pending,
    )
    return train


def wave_dispersion_ratio(
    medium: LaminarMedium,
    y: float,
    probes,
    t_max: float,
    floor: float = PRUNING_FLOOR,
    max_events: int = MAX_EVENTS,
) -> dict:
    """
    sup over probes of int |v(t, probe)| dt over t in R, for unit Dirac data.

    Returns:
        Dict with ratio, error (twice the truncated plus pending mass of the
        maximizing probe), probe and a per-probe DataFrame.
    """
    rows = []
    for probe in probes:
        train = wave_ray_trace(medium, y, float(probe), t_max, floor, max_events)
        mirrored = train.mirrored()
        rows.append({
            "probe": float(probe),
            "mass": mirrored.total_mass(),
            "error": 2.0 * (train.truncation_mass + train.pending_mass),
            "arrivals": len(train.events),
            "complete": train.complete,
            "max_flux_defect": train.max_flux_defect,
        })
    table = pd.DataFrame(rows)
    best = table.loc[table["mass"].idxmax()]
    return {
        "ratio": float(best["mass"]),
        "error": float(best["error"]),
        "probe": float(best["probe"]),
        "probes": table,
    }


def predicted_reflections(
    medium: LaminarMedium,
    y: float,
    probe: float,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    count: int | None = None,
) -> pd.DataFrame:
    """
    Reflected arrivals predicted by the Q_n series for y, probe in the last layer.

    The multi-index j of the unmodulated Q_n series arrives at
    b_n (y + probe - 2 x_{n-1}) + sum_k j_k lambda_k with weight -(b_n / 2) c_j.
    """
    n = medium.n_layers
    if n < 2:
        return pd.DataFrame(columns=["t", "amplitude", "index"])
    last = medium.interfaces[-1]
    if not (y > last and probe > last):
        raise PreconditionError("source and probe must both lie in the last layer")
    series = q_sequence(medium.profile, degree_cap)[-1]
    bn = medium.slowness[-1]
    lam = np.asarray(medium.profile.generators, dtype=float)
    base = bn * (y + probe - 2.0 * last)
    delays = base + (series.exponents @ lam if len(lam) else np.zeros(series.size))
    table = pd.DataFrame({
        "t": delays,
        "amplitude": -0.5 * bn * series.coefficients.real,
        "index": [" ".join(map(str, row)) for row in series.exponents],
    }).sort_values("t", kind="stable").reset_index(drop=True)
    return table if count is None else table.head(count)


def predicted_wave_ratio(medium: LaminarMedium, degree_cap: int = DEFAULT_DEGREE_CAP) -> dict:
    """
    b_n (1 + ||Q_n||) as a bracket: the mirrored arrival mass at a probe in
    the last layer for a source there, when the round-trip times are
    rationally independent.
    """
    bn = medium.slowness[-1]
    if medium.n_layers < 2:
        return {"lower": bn, "upper": bn}
    norm = ap_norm(q_sequence(medium.profile, degree_cap)[-1])
    return {"lower": bn * (1.0 + norm.lower), "upper": bn * (1.0 + norm.upper)}
