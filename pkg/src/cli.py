"""
Command-line experiment runner.

    python -m src <command> [--config FILE] [--output-dir DIR] [--seed N]
                  [--plots] [--log-level LEVEL] [key=value ...]

Every command writes config.json and report.json into its output directory,
plus CSV tables and, with --plots, figures. Exit status is 0 when every check
passed, 1 when a check failed and 2 for configuration or precondition errors.
"""

import argparse
import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from src.data.experiment_config import (
    ExperimentConfig,
    build_config,
    load_config_file,
    parse_override,
    worker_count,
)
from src.data.medium_store import save_medium
from src.data.numerics import BALANCE_TOLERANCE, COEFFICIENT_RANGE, FLUX_TOLERANCE
from src.data.regression_store import load_constants, record_constants
from src.models.acceptance import run_acceptance
from src.models.errors import (
    ConfigError,
    DispersionError,
    MediumError,
    PreconditionError,
    SearchBudgetError,
    SourceError,
)
from src.models.experiments import EXPERIMENTS
from src.models.medium import coefficient_variation, log_variation, synthesize_counterexample
from src.models.partitions import (
    counterexample_min_parts,
    f_lower_table,
    find_heavy_partition,
    upper_bounds_respect_tan,
)
from src.models.resolvent import oracle_sweep, q_sequence, verify_tan_bound
from src.models.schrodinger import (
    free_decay_limit,
    gaussian_profile,
    schrodinger_decay_ratio,
    schrodinger_evolve,
)
from src.models.series import ap_norm
from src.models.wave_rays import predicted_wave_ratio, wave_dispersion_ratio, wave_ray_trace
from src.visualization import charts
from src.visualization.formatters import format_interval, format_verdict, write_csv

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(data: dict, path: Path) -> Path:
    """Indented JSON with sorted keys; floats keep their repr."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _require_medium(config: ExperimentConfig):
    if config.medium is None:
        raise ConfigError(f"{config.command} needs a medium", path="/medium")
    return config.medium


# --- Commands ---
# Each takes the resolved config and its output directory and returns
# (report, figures); the report carries "passed".

def bound_check(config: ExperimentConfig, out: Path) -> tuple[dict, dict]:
    """Certified ||Q_n|| bracket against tan(sum arctanh|d_k|), with per-k norms."""
    medium = _require_medium(config)
    p = config.params
    result = verify_tan_bound(medium.profile, p["degree_cap"], p["floor"])

    rows = []
    partial = 0.0
    d = medium.profile.coefficients
    for k, series in enumerate(q_sequence(medium.profile, p["degree_cap"], p["floor"]), start=2):
        partial += math.atanh(abs(d[k - 2]))
        norm = ap_norm(series)
        rows.append({"k": k, "lower": norm.lower, "upper": norm.upper,
                     "arctanh_sum": partial, "tan_bound": math.tan(partial)})
    write_csv(pd.DataFrame(rows, columns=["k", "lower", "upper", "arctanh_sum", "tan_bound"]),
              out / "q_norms.csv")

    report = {
        "n_layers": medium.n_layers,
        "norm_lower": result["lower"],
        "norm_upper": result["upper"],
        "bound": result["bound"],
        "arctanh_sum": result["arctanh_sum"],
        "log_variation": log_variation(medium),
        "coefficient_variation": coefficient_variation(medium),
        "passed": result["passed"],
    }
    print(f"bound-check: ||Q_n|| in {format_interval(result['norm'])}, "
          f"tan bound {result['bound']:.4f}: {format_verdict(result['passed'])}")
    return report, {"medium": charts.medium_profile_chart(medium.a_values, medium.interfaces)}


def fr_table(config: ExperimentConfig, out: Path) -> tuple[dict, dict]:
    p = config.params
    table = f_lower_table(p["x"], p["r"], p["n_max"], p["degree_cap"], p["power_levels"],
                          workers=worker_count())
    write_csv(table, out / "f_table.csv")
    best = table.loc[table["f_lower"].idxmax()]
    target = float(table["target_tan_r_x"].iloc[0])
    passed = upper_bounds_respect_tan(table)
    report = {
        "x": p["x"],
        "r": p["r"],
        "best_lower": float(best["f_lower"]),
        "best_n": int(best["n"]),
        "target_tan_r_x": target,
        "fraction_of_target": float(best["f_lower"]) / target,
        "uppers_respect_tan": passed,
        "passed": passed,
    }
    print(f"fr-table: best lower {report['best_lower']:.6f} at n={report['best_n']} "
          f"vs tan^r x = {target:.6f}: {format_verdict(passed)}")
    return report, {"f_table": charts.f_table_chart(table)}


def counterexample(config: ExperimentConfig, out: Path) -> tuple[dict, dict]:
    """Heavy partition of alpha reaching N, and the medium it induces."""
    p = config.params
    alpha, target = p["alpha"], p["N"]
    min_parts = counterexample_min_parts(alpha)
    try:
        search = find_heavy_partition(alpha, target, p["degree_cap"], p["n_start"], p["n_max"],
                                      min_parts, p["power_levels"])
    except SearchBudgetError as exc:
        logger.error("%s (best lower bound %.6g)", exc, exc.best_bound)
        print(f"counterexample: best lower bound {exc.best_bound:.6f} < {target}: FAIL")
        return {"alpha": alpha, "target": target, "best_lower_bound": exc.best_bound, "passed": False}, {}

    write_csv(search["history"], out / "search.csv")
    medium = synthesize_counterexample(alpha, search["partition"], p["width_scale"])
    save_medium(medium, out / "medium.json")

    low, high = COEFFICIENT_RANGE
    in_range = low < medium.lower and medium.upper < high
    variation_gap = abs(log_variation(medium) - 4.0 * alpha)
    passed = search["lower_bound"] >= target and in_range and variation_gap <= 1e-10 * max(1.0, 4.0 * alpha)
    report = {
        "alpha": alpha,
        "target": target,
        "n_parts": search["n_parts"],
        "lower_bound": search["lower_bound"],
        "method": search["method"],
        "a_min": medium.lower,
        "a_max": medium.upper,
        "log_variation": log_variation(medium),
        "variation_gap": variation_gap,
        "passed": passed,
    }
    print(f"counterexample: {search['n_parts']} parts, certified ||R(t)|| >= {search['lower_bound']:.6f} "
          f"(target {target}), a in [{medium.lower:.4f}, {medium.upper:.4f}]: {format_verdict(passed)}")
    return report, {"medium": charts.medium_profile_chart(medium.a_values, medium.interfaces)}


def oracle_test(config: ExperimentConfig, out: Path) -> tuple[dict, dict]:
    p = config.params
    if not p["xi_min"] < p["xi_max"]:
        raise ConfigError("xi_max must exceed xi_min", path="/params/xi_max")
    rng = np.random.default_rng(config.seed)
    sweep = oracle_sweep(rng, tuple(p["n_values"]), p["media_per_n"], p["frequency_count"],
                         (p["xi_min"], p["xi_max"]), condition_limit=p["condition_limit"])
    write_csv(sweep, out / "oracle.csv")

    usable = sweep[~sweep["flagged"]]
    if usable.empty:
        c_err = det_err = back_err = math.nan
    else:
        c_err = float(usable["rel_err"].max())
        det_err = float(usable["det_rel_err"].max())
        back_err = float(usable["backsub_err"].max())
    passed = c_err <= 1e-9 and det_err <= 1e-10 and back_err <= 1e-9
    report = {
        "solves": len(sweep),
        "flagged": int(sweep["flagged"].sum()),
        "max_rel_err": c_err,
        "max_det_rel_err": det_err,
        "max_backsub_err": back_err,
        "passed": passed,
    }
    print(f"oracle-test: {len(sweep)} solves, c2n {c_err:.3g}, det {det_err:.3g}, "
          f"back-substitution {back_err:.3g}: {format_verdict(passed)}")
    return report, {}


def simulate_wave(config: ExperimentConfig, out: Path) -> tuple[dict, dict]:
    medium = _require_medium(config)
    p = config.params
    result = wave_dispersion_ratio(medium, p["y"], p["probes"], p["t_max"], p["pruning_floor"], p["max_events"])
    probes = result["probes"]
    write_csv(probes, out / "probes.csv")
    train = wave_ray_trace(medium, p["y"], result["probe"], p["t_max"], p["pruning_floor"], p["max_events"])
    write_csv(train.to_frame(), out / "impulse_train.csv")

    complete = bool(probes["complete"].all())
    flux = float(probes["max_flux_defect"].max())
    passed = complete and flux <= FLUX_TOLERANCE
    report = {
        "ratio": result["ratio"],
        "error": result["error"],
        "probe": result["probe"],
        "m": medium.lower,
        "complete": complete,
        "max_flux_defect": flux,
        "passed": passed,
    }
    if medium.n_layers > 1 and p["y"] > medium.interfaces[-1]:
        predicted = predicted_wave_ratio(medium, p["degree_cap"])
        report["predicted_lower"] = predicted["lower"]
        report["predicted_upper"] = predicted["upper"]
    print(f"simulate-wave: sup ratio {result['ratio']:.6f} +- {result['error']:.2g} at probe "
          f"{result['probe']:g}: {format_verdict(passed)}")
    return report, {"impulse_train": charts.impulse_train_chart(train.to_frame(), result["probe"])}


def simulate_schrodinger(config: ExperimentConfig, out: Path) -> tuple[dict, dict]:
    medium = _require_medium(config)
    p = config.params
    run = schrodinger_evolve(
        medium,
        lambda x: gaussian_profile(x, p["center"], p["s"]),
        p["t_final"],
        dx=p["dx"],
        dt=p["dt"],
        half_width=p["half_width"],
        sponge_width=p["sponge_width"],
        sigma_max=p["sigma_max"],
        snapshot_every=p["snapshot_every"],
    )
    decay = schrodinger_decay_ratio(run, allow_sponge_violation=True)
    write_csv(decay, out / "decay.csv")
    write_csv(run.norm_log, out / "norm_log.csv")

    late = decay[decay["t"] >= 1.0]
    window = late if not late.empty else decay
    max_ratio = float(window["ratio"].max()) if not window.empty else math.nan
    limit = free_decay_limit(float(medium.a_at(p["center"])))
    passed = run.sponge_ok and run.max_balance_defect <= BALANCE_TOLERANCE and math.isfinite(max_ratio)
    report = {
        "t_final": run.t_final,
        "max_ratio": max_ratio,
        "final_ratio": float(decay["ratio"].iloc[-1]) if not decay.empty else math.nan,
        "free_limit": limit,
        "max_balance_defect": run.max_balance_defect,
        "boundary_ratio": run.boundary_ratio,
        "inward_flux": run.inward_flux,
        "sponge_ok": run.sponge_ok,
        "passed": passed,
    }
    print(f"simulate-schrodinger: max decay ratio {max_ratio:.6f} (free {limit:.6f}), "
          f"balance defect {run.max_balance_defect:.2g}: {format_verdict(passed)}")
    return report, {"decay": charts.decay_ratio_chart(decay, limit)}


def verify_all(config: ExperimentConfig, out: Path, record_regressions: bool = False) -> tuple[dict, dict]:
    result = run_acceptance(config.seed, config.params["quick"], load_constants())
    summary = result["summary"]
    write_csv(summary, out / "summary.csv")
    if not result["oracle"].empty:
        write_csv(result["oracle"], out / "oracle.csv")

    new = result["new_constants"]
    if new and record_regressions:
        record_constants(new)
    elif new:
        logger.warning("Regression constants not recorded (%s); rerun with --record-regressions",
                       ", ".join(sorted(new)))

    for row in summary.itertuples(index=False):
        print(f"{row.criterion:>2} {format_verdict(row.passed)} {row.name}: {row.detail}")
    report = {
        "criteria": summary.to_dict(orient="records"),
        "timings": {str(k): v for k, v in result["timings"].items()},
        "new_constants": sorted(new),
        "recorded": bool(new) and record_regressions,
        "passed": result["passed"],
    }
    return report, {}


COMMANDS = {
    "bound-check": bound_check,
    "fr-table": fr_table,
    "counterexample": counterexample,
    "oracle-test": oracle_test,
    "simulate-wave": simulate_wave,
    "simulate-schrodinger": simulate_schrodinger,
}


def run(config: ExperimentConfig, plots: bool = False, record_regressions: bool = False) -> int:
    """
    Execute one resolved config and write its artifacts.

    Returns:
        EXIT_PASS or EXIT_FAIL from the report's verdict.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(config.to_dict(), out / "config.json")
    logger.info("Running %s into %s (seed %d)", config.command, out, config.seed)

    if config.command == "verify-all":
        report, figures = verify_all(config, out, record_regressions)
    else:
        report, figures = COMMANDS[config.command](config, out)
    write_json({"command": config.command, **report}, out / "report.json")

    if plots:
        for name, fig in figures.items():
            saved = charts.save_figure(fig, out / name)
            logger.info("Wrote %s", saved)
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--output-dir", help="Artifact directory (default output/<command>)")
    common.add_argument("--seed", type=int, help="Seed for randomized sweeps")
    common.add_argument("--plots", action="store_true", help="Also write figures (SVG, HTML fallback)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--record-regressions", action="store_true",
                        help="verify-all: store missing regression constants")
    common.add_argument("overrides", nargs="*", metavar="key=value", help="Parameter overrides")

    parser = argparse.ArgumentParser(
        prog="python -m src",
        description="Dispersion bounds and simulations on laminar media.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")
    for key, experiment in EXPERIMENTS.items():
        commands.add_parser(key, parents=[common], help=experiment["description"],
                            description=experiment["description"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        raw = load_config_file(args.config) if args.config else {}
        overrides = dict(parse_override(item) for item in args.overrides)
        config = build_config(raw, args.command, overrides, args.output_dir, args.seed)
        return run(config, plots=args.plots, record_regressions=args.record_regressions)
    except (ConfigError, PreconditionError, SourceError, MediumError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG
    except DispersionError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL
