"""
The verify-all suite: every acceptance criterion as one PASS/FAIL row.

Criteria that depend on empirically defined constants (the part count n*
reaching 0.9 tan 1, the layered Schrodinger maxima) compare against
data/regression/constants.json and report the values to record when a
constant is missing.
"""

import logging
import math
import time

import numpy as np
import pandas as pd

from src.data.numerics import (
    BALANCE_TOLERANCE,
    COEFFICIENT_RANGE,
    FLUX_TOLERANCE,
    TAN_BOUND_SLACK,
)
from src.models.errors import DispersionError
from src.models.experiments import get_default_medium
from src.models.medium import (
    build_medium,
    coefficient_variation,
    log_variation,
    random_medium,
    synthesize_counterexample,
)
from src.models.partitions import (
    Partition,
    counterexample_min_parts,
    f_lower_table,
    find_heavy_partition,
    hyperbolic_check,
    partition_bound,
    search_uniform_partition,
    transfer_matrix_norms,
    uniform_partition,
    upper_bounds_respect_tan,
)
from src.models.resolvent import oracle_sweep, verify_tan_bound
from src.models.schrodinger import (
    free_decay_limit,
    gaussian_profile,
    schrodinger_decay_ratio,
    schrodinger_evolve,
)
from src.models.wave_rays import predicted_reflections, wave_dispersion_ratio, wave_ray_trace

logger = logging.getLogger(__name__)

# Largest cap per layer count that keeps the multi-index expansion small
SWEEP_DEGREE_CAPS = {2: 30, 3: 30, 4: 24, 5: 14, 6: 10, 7: 8, 8: 6}

F_TABLE_X = 1.0
F_TABLE_FRACTION = 0.9


def _row(criterion: int, name: str, passed: bool, value, detail: str) -> dict:
    return {"criterion": criterion, "name": name, "passed": bool(passed), "value": value, "detail": detail}


def check_variation_identity(rng: np.random.Generator, count: int = 200) -> dict:
    worst, sandwich = 0.0, True
    for _ in range(count):
        medium = random_medium(rng, int(rng.integers(1, 51)))
        var_log = log_variation(medium)
        identity = 4.0 * medium.profile.arctanh_sum
        worst = max(worst, abs(identity - var_log) / max(var_log, 1e-300))
        var_a = coefficient_variation(medium)
        slack = 1e-12 * max(1.0, var_log)
        sandwich &= var_a / medium.upper - slack <= var_log <= var_a / medium.lower + slack
    return _row(1, "variation identity", worst <= 1e-12 and sandwich, worst,
                f"{count} media, max relative gap {worst:.3g}, sandwich {'holds' if sandwich else 'fails'}")


def check_tan_bound(rng: np.random.Generator, count: int = 100, degree_cap: int = 30) -> dict:
    worst = -math.inf
    checked = 0
    while checked < count:
        n = int(rng.integers(2, 9))
        medium = random_medium(rng, n, a_range=(0.7, 1.4))
        if medium.profile.arctanh_sum > math.pi / 2 - 0.1:
            continue
        report = verify_tan_bound(medium.profile, min(degree_cap, SWEEP_DEGREE_CAPS[n]))
        worst = max(worst, report["upper"] - report["bound"])
        checked += 1
    return _row(2, "tan bound", worst <= TAN_BOUND_SLACK, worst,
                f"{count} media, max (upper - tan) = {worst:.3g}")


def check_oracle(rng: np.random.Generator, media_per_n: int = 2) -> tuple[dict, pd.DataFrame]:
    sweep = oracle_sweep(rng, media_per_n=media_per_n)
    usable = sweep[~sweep["flagged"]]
    c_err = float(usable["rel_err"].max())
    det_err = float(usable["det_rel_err"].max())
    back_err = float(usable["backsub_err"].max())
    passed = c_err <= 1e-9 and det_err <= 1e-10 and back_err <= 1e-9
    return _row(3, "closed form vs oracle", passed, c_err,
                f"{len(sweep)} solves ({int(sweep['flagged'].sum())} flagged), "
                f"c2n {c_err:.3g}, det {det_err:.3g}, back-substitution {back_err:.3g}"), sweep


def check_transfer_matrices(rng: np.random.Generator, count: int = 50) -> dict:
    failures = 0
    for _ in range(count):
        d = rng.uniform(0.01, 0.95, size=int(rng.integers(1, 11)))
        norms = transfer_matrix_norms(d)
        hyperbolic = hyperbolic_check(Partition(tuple(np.arctanh(d))))
        failures += not (norms.identities_hold and hyperbolic["passed"])
    return _row(4, "transfer-matrix norms", failures == 0, failures, f"{count} vectors, {failures} failures")


def check_f_table(constants: dict, degree_cap: int = 30) -> tuple[dict, dict]:
    """f_1 at x = 1: doubling chain strictly increasing, uppers below tan 1, n* the fewest parts reaching 0.9 tan 1."""
    table = f_lower_table(F_TABLE_X, 1, 8, degree_cap)
    doubling = table.set_index("n").loc[[1, 2, 4, 8], "lower"].to_numpy()
    strict = bool(np.all(np.diff(doubling) > 0.0))
    uppers_ok = upper_bounds_respect_tan(table, slack=1e-4)
    target = F_TABLE_FRACTION * math.tan(F_TABLE_X)

    recorded = {}
    n_star = constants.get("f_table_n_star")
    if n_star is None:
        search = search_uniform_partition(F_TABLE_X, target, degree_cap, n_start=8)
        n_star, reached = search["n_parts"], search["lower_bound"]
        recorded["f_table_n_star"] = n_star
    else:
        reached = partition_bound(uniform_partition(F_TABLE_X, n_star), 1, degree_cap)["lower"]
    minimal = n_star == 1 or partition_bound(uniform_partition(F_TABLE_X, n_star - 1), 1, degree_cap)["lower"] < target
    passed = strict and uppers_ok and reached >= target and minimal
    detail = (f"doubling chain {'strict' if strict else 'NOT strict'}, uppers "
              f"{'ok' if uppers_ok else 'exceed tan 1'}, n*={n_star} gives {reached:.6g} vs {target:.6g}, "
              f"n*-1 {'falls short' if minimal else 'already reaches it'}")
    return _row(5, "f_1 table at x = 1", passed, reached, detail), recorded


def check_counterexample(target: float, degree_cap: int = 30) -> tuple[dict, object]:
    alpha = math.pi / 2
    search = find_heavy_partition(alpha, target, degree_cap, min_parts=counterexample_min_parts(alpha))
    medium = synthesize_counterexample(alpha, search["partition"])
    low, high = COEFFICIENT_RANGE
    in_range = low < medium.lower and medium.upper < high
    var_gap = abs(log_variation(medium) - 4.0 * alpha)
    passed = search["lower_bound"] >= target and in_range and var_gap <= 1e-10 * max(1.0, 4.0 * alpha)
    detail = (f"{search['n_parts']} parts, lower bound {search['lower_bound']:.6g} ({search['method']}), "
              f"a in [{medium.lower:.4f}, {medium.upper:.4f}], |Var(log a) - 2 pi| = {var_gap:.3g}")
    return _row(6, "counterexample certificate", passed, search["lower_bound"], detail), medium


def check_ray_series(rng: np.random.Generator, degree_cap: int = 30, arrivals: int = 5) -> dict:
    medium = random_medium(rng, 3)
    last = medium.interfaces[-1]
    y, probe = last + 1.0, last + 1.5
    predicted = predicted_reflections(medium, y, probe, degree_cap, count=arrivals)
    t_max = float(predicted["t"].iloc[-1]) + 1.0
    train = wave_ray_trace(medium, y, probe, t_max, floor=1e-15)
    direct = abs(probe - y) * medium.slowness[-1]
    traced = [(t, a) for t, a in train.events if abs(t - direct) > 1e-9][:arrivals]
    if len(traced) < arrivals:
        return _row(7, "ray/series cross-validation", False, math.nan,
                    f"only {len(traced)} reflected arrivals traced")
    t_err = max(abs(t - p) for (t, _), p in zip(traced, predicted["t"]))
    a_err = max(abs(a - p) for (_, a), p in zip(traced, predicted["amplitude"]))
    passed = t_err <= 1e-10 and a_err <= 1e-10 and train.max_flux_defect <= FLUX_TOLERANCE
    return _row(7, "ray/series cross-validation", passed, max(t_err, a_err),
                f"delay error {t_err:.3g}, amplitude error {a_err:.3g}, flux defect {train.max_flux_defect:.3g}")


def check_wave_dichotomy(counterexample=None, t_max: float = 40.0, max_doublings: int = 6) -> dict:
    """Plateau on the preset medium; on a counterexample the ratio must pass m^-2 + 5 within the doublings."""
    preset = get_default_medium("simulate-wave")
    plateau = build_medium(preset["a_values"], preset["interfaces"])
    probes = [-2.0, 0.5, 3.0]
    short = wave_dispersion_ratio(plateau, -0.5, probes, t_max)["ratio"]
    long = wave_dispersion_ratio(plateau, -0.5, probes, 2 * t_max)["ratio"]
    growth = (long - short) / short
    passed = growth < 0.01
    detail = f"plateau ratio {short:.6g} -> {long:.6g} ({growth:.3%})"

    if counterexample is not None:
        last = counterexample.interfaces[-1]
        target = counterexample.lower ** -2 + 5.0
        horizon, ratio, complete = 20.0, 0.0, True
        while ratio <= target and complete and horizon <= 20.0 * 2**max_doublings:
            train = wave_ray_trace(counterexample, last + 1.0, last + 1.5, horizon, floor=1e-9, max_events=200_000)
            ratio, complete = train.mirrored().total_mass(), train.complete
            horizon *= 2
        passed = passed and ratio > target
        detail += f"; counterexample ratio {ratio:.6g} vs m^-2 + 5 = {target:.6g}"
    return _row(8, "wave dispersion dichotomy", passed, growth, detail)


def check_free_decay() -> dict:
    worst, balance = 0.0, 0.0
    for a in (1.0, 4.0):
        medium = build_medium([a], [])
        run = schrodinger_evolve(medium, gaussian_profile, t_final=10.0)
        decay = schrodinger_decay_ratio(run)
        window = decay[(decay["t"] >= 1.0) & (decay["t"] <= 10.0)]
        limit = free_decay_limit(a)
        worst = max(worst, float((window["ratio"] / limit - 1.0).abs().max()))
        balance = max(balance, run.max_balance_defect)
    passed = worst <= 0.02 and balance <= BALANCE_TOLERANCE
    return _row(9, "Schrodinger free decay", passed, worst,
                f"max relative deviation {worst:.3%}, balance defect {balance:.3g}")


def _layered_media(rng: np.random.Generator, count: int) -> list:
    media = []
    while len(media) < count:
        n = int(rng.integers(3, 6))
        medium = random_medium(rng, n, width_range=(1.0, 3.0), start=-2.0)
        if log_variation(medium) / 4.0 <= 1.2:
            media.append(medium)
    return media


def _layered_maxima(media: list, t_final: float) -> list[float]:
    maxima = []
    for medium in media:
        run = schrodinger_evolve(medium, gaussian_profile, t_final=t_final)
        decay = schrodinger_decay_ratio(run)
        maxima.append(float(decay.loc[decay["t"] >= 1.0, "ratio"].max()))
    return maxima


def check_layered_decay(rng: np.random.Generator, constants: dict, count: int = 5, t_final: float = 20.0) -> tuple[dict, dict]:
    """
    Finite decay maxima on random layered media, repr-identical to the frozen ones.

    Without frozen values the maxima are computed twice and must agree
    exactly before they are offered for recording.
    """
    media = _layered_media(rng, count)
    maxima = _layered_maxima(media, t_final)
    key = f"layered_decay_maxima_{count}x{t_final:g}"
    finite = all(math.isfinite(v) for v in maxima)
    recorded = {}
    stored = constants.get(key)
    if stored is None:
        reproduced = _reprs(_layered_maxima(media, t_final)) == _reprs(maxima)
        if reproduced:
            recorded[key] = maxima
        note = "recomputed identically, to record" if reproduced else "NOT reproducible within the run"
    else:
        reproduced = _reprs(stored) == _reprs(maxima)
        note = "reproduced" if reproduced else "differ from the recorded values"
    return _row(10, "Schrodinger layered boundedness", finite and reproduced, max(maxima),
                f"maxima {', '.join(f'{v:.6g}' for v in maxima)} ({note})"), recorded


def _reprs(values) -> list[str]:
    return [repr(float(v)) for v in values]


def run_acceptance(seed: int = 0, quick: bool = False, constants: dict | None = None, degree_cap: int = 30) -> dict:
    """
    Run every criterion.

    Returns:
        Dict with summary (DataFrame: criterion, name, passed, value, detail),
        oracle (the oracle sweep), passed, timings (seconds per criterion)
        and new_constants.
    """
    constants = dict(constants or {})
    rng = np.random.default_rng(seed)
    new_constants: dict = {}
    rows = []
    timings: dict[int, float] = {}
    shared = {"oracle": pd.DataFrame(), "counterexample": None}

    def oracle():
        row, shared["oracle"] = check_oracle(rng, 1 if quick else 2)
        return row

    def f_table():
        row, recorded = check_f_table(constants, degree_cap)
        new_constants.update(recorded)
        return row

    def counterexample():
        row, shared["counterexample"] = check_counterexample(3.0 if quick else 10.0, degree_cap)
        return row

    def layered():
        row, recorded = check_layered_decay(rng, constants, 2 if quick else 5, 10.0 if quick else 20.0)
        new_constants.update(recorded)
        return row

    criteria = [
        (1, "variation identity", lambda: check_variation_identity(rng, 50 if quick else 200)),
        (2, "tan bound", lambda: check_tan_bound(rng, 20 if quick else 100, degree_cap)),
        (3, "closed form vs oracle", oracle),
        (4, "transfer-matrix norms", lambda: check_transfer_matrices(rng, 10 if quick else 50)),
        (5, "f_1 table at x = 1", f_table),
        (6, "counterexample certificate", counterexample),
        (7, "ray/series cross-validation", lambda: check_ray_series(rng, degree_cap)),
        (8, "wave dispersion dichotomy",
         lambda: check_wave_dichotomy(None if quick else shared["counterexample"])),
        (9, "Schrodinger free decay", check_free_decay),
        (10, "Schrodinger layered boundedness", layered),
    ]
    for number, name, check in criteria:
        start = time.perf_counter()
        try:
            row = check()
        except DispersionError as exc:
            logger.error("Criterion %d (%s) raised: %s", number, name, exc)
            row = _row(number, name, False, math.nan, f"{type(exc).__name__}: {exc}")
        timings[number] = time.perf_counter() - start
        logger.info("Criterion %d %s: %s (%.2fs)", number, name, "PASS" if row["passed"] else "FAIL", timings[number])
        rows.append(row)

    summary = pd.DataFrame(rows, columns=["criterion", "name", "passed", "value", "detail"])
    return {
        "summary": summary,
        "oracle": shared["oracle"],
        "passed": bool(summary["passed"].all()),
        "timings": timings,
        "new_constants": new_constants,
    }
