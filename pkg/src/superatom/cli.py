"""Command-line entry point: run one experiment, emit CSV/JSON artifacts.

Usage: superatom-sim <experiment> --config FILE --out DIR [--workers K] [--seed S]

Exit codes: 0 success, 2 configuration error, 3 capacity exceeded,
4 numerical failure.  Outputs are deterministic for identical inputs
apart from the timestamp field in summary.json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .basis import CapacityError
from .config import EXPERIMENTS, ConfigError, ion_config, parse_config, protocol_config
from .dynamics import NumericalFailure, Trajectory
from .hamiltonians import TWO_PI, UnsupportedRegimeError
from .ion_escape import simulate_escape
from .protocol import (
    PoissonEnsemble,
    collapse_revival_demo,
    poisson_average,
    resolve_protocol,
    run_protocol,
    scan_decoherence,
    scan_delta_c,
    scan_omega_c,
)

TRAJECTORY_COLUMNS = ("p_G", "p_E", "p_R", "p_E2", "p_ER", "p_ryd")
INFIDELITY_EPS = 1e-12


def _fmt(x) -> str:
    """Serialize one value with 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if not np.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.12g}"


def _round12(obj):
    """Recursively clamp floats to 12 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if not np.isfinite(v) else float(f"{v:.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_trajectory(path: Path, traj: Trajectory) -> None:
    """trajectory.csv with the fixed column order; absent observables skipped."""
    cols = [c for c in TRAJECTORY_COLUMNS if c in traj.populations]
    has_infid = "p_ryd" in traj.populations and "p_ER" in traj.populations
    header = ["time_us"] + cols + (["infidelity"] if has_infid else [])
    rows = []
    for k, t in enumerate(traj.times):
        row = [t] + [traj.populations[c][k] for c in cols]
        if has_infid:
            p_ryd = traj.populations["p_ryd"][k]
            p_er = traj.populations["p_ER"][k]
            row.append(None if p_ryd <= INFIDELITY_EPS else (p_ryd - p_er) / p_ryd)
        rows.append(row)
    write_csv(path, header, rows)


def write_summary(path: Path, rc, resolved: dict, results: dict) -> None:
    payload = {
        "experiment": rc.experiment,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": dict(rc.provided),
        "resolved": resolved,
        "results": results,
    }
    with open(path, "w") as fh:
        json.dump(_round12(payload), fh, indent=2)
        fh.write("\n")


def _resolved_dict(res) -> dict:
    """Both conventions for every resolved laser parameter."""
    p = res.params
    return {
        "n_atoms": res.spec.n_atoms,
        "omega_p_mhz": p.omega_p / TWO_PI,
        "omega_c_mhz": p.omega_c / TWO_PI,
        "delta_p_mhz": p.delta_p / TWO_PI,
        "delta_c_mhz": p.delta_c / TWO_PI,
        "omega_eff_mhz": res.omega_eff / TWO_PI,
        "delta_eff_mhz": res.delta_eff / TWO_PI,
        "delta_p_resonance_mhz": res.delta_p_resonance / TWO_PI,
        "omega_p_rad_per_us": p.omega_p,
        "omega_c_rad_per_us": p.omega_c,
        "delta_p_rad_per_us": p.delta_p,
        "delta_c_rad_per_us": p.delta_c,
        "omega_eff_rad_per_us": res.omega_eff,
        "delta_eff_rad_per_us": res.delta_eff,
        "pulse_time_us": res.pulse_time,
    }


def _run_rabi(rc, out: Path, workers: int) -> None:
    cfg, model, n_times = protocol_config(rc)
    result = run_protocol(cfg, model=model, n_times=n_times)
    write_trajectory(out / "trajectory.csv", result.trajectory)
    write_summary(
        out / "summary.json",
        rc,
        {**_resolved_dict(result.resolved), "model": model},
        {
            "success_probability": result.success_probability,
            "infidelity": result.infidelity,
        },
    )


def _run_scan_dc(rc, out: Path, workers: int) -> None:
    cfg, model, _ = protocol_config(rc)
    v = rc.values
    ratios = np.linspace(v["ratio_min"], v["ratio_max"], v["n_points"])
    scan = scan_delta_c(cfg, ratios, model=model, n_workers=workers)
    write_csv(
        out / "scan.csv",
        ["delta_c_over_omega_c", "success", "infidelity"],
        [(r.x, r.success, r.infidelity) for r in scan.rows],
    )
    write_summary(
        out / "summary.json",
        rc,
        {**_resolved_dict(resolve_protocol(cfg)), "model": model},
        {"minimum": scan.minimum},
    )


def _run_scan_oc(rc, out: Path, workers: int) -> None:
    cfg, model, _ = protocol_config(rc)
    v = rc.values
    grid = TWO_PI * np.geomspace(
        v["omega_c_min_mhz"], v["omega_c_max_mhz"], v["n_points"]
    )
    scan = scan_omega_c(cfg, grid, model=model, n_workers=workers)
    write_csv(
        out / "scan.csv",
        ["omega_c_mhz", "success", "infidelity", "bound"],
        [(r.x / TWO_PI, r.success, r.infidelity, r.extra["bound"]) for r in scan.rows],
    )
    xs = np.log([r.x for r in scan.rows])
    ys = np.log([r.infidelity for r in scan.rows])
    slope = float(np.polyfit(xs, ys, 1)[0])
    write_summary(
        out / "summary.json",
        rc,
        {**_resolved_dict(resolve_protocol(cfg)), "model": model},
        {
            "log_log_slope": slope,
            "bound_satisfied": bool(
                all(r.infidelity <= r.extra["bound"] for r in scan.rows)
            ),
        },
    )


def _run_scan_n(rc, out: Path, workers: int) -> None:
    cfg, model, _ = protocol_config(rc)
    v = rc.values
    ensemble = PoissonEnsemble.from_mean(
        v["poisson_mean"], half_width_sigmas=v["half_width_sigmas"]
    )
    avg = poisson_average(cfg, ensemble, model=model, n_workers=workers)
    ns, ws = ensemble.weights()
    write_csv(
        out / "scan.csv",
        ["n_atoms", "weight", "success", "infidelity"],
        [
            (int(r.x), w, r.success, r.infidelity)
            for r, w in zip(avg.per_n, ws)
        ],
    )
    write_summary(
        out / "summary.json",
        rc,
        {**_resolved_dict(resolve_protocol(cfg)), "model": model},
        {
            "mean_success": avg.mean_success,
            "mean_infidelity": avg.mean_infidelity,
            "unconditional_mean_infidelity": avg.unconditional_mean_infidelity,
            "fixed_n_success": avg.fixed_n.success,
            "fixed_n_infidelity": avg.fixed_n.infidelity,
        },
    )


def _run_lindblad_scan(rc, out: Path, workers: int) -> None:
    cfg, _, _ = protocol_config(rc)
    v = rc.values
    grid = TWO_PI * np.linspace(v["gamma_min_mhz"], v["gamma_max_mhz"], v["n_points"])
    scan = scan_decoherence(cfg, v["channel"], grid, n_workers=workers)
    write_csv(
        out / "scan.csv",
        ["gamma_mhz", "success", "infidelity"],
        [(r.x / TWO_PI, r.success, r.infidelity) for r in scan.rows],
    )
    write_summary(
        out / "summary.json",
        rc,
        {**_resolved_dict(resolve_protocol(cfg)), "channel": v["channel"]},
        {
            # slope converted to infidelity per MHz of Gamma/2pi
            "slope_per_mhz": scan.slope * TWO_PI,
            "slope_per_decay": scan.slope_per_decay,
            "integrated_population_us": scan.integrated_population,
            "intercept": scan.intercept,
            "r_squared": scan.r_squared,
        },
    )


def _run_ion_mc(rc, out: Path, workers: int, seed: int | None) -> None:
    cfg = ion_config(rc)
    if seed is not None:
        cfg = replace(cfg, rng_seed=seed)
    result = simulate_escape(cfg, n_workers=workers)
    thresholds = np.geomspace(1e-4, 10.0, 26)
    write_csv(
        out / "scan.csv",
        ["phase_threshold_rad", "fraction_significant"],
        list(zip(thresholds, result.threshold_curve(thresholds))),
    )
    write_summary(
        out / "summary.json",
        rc,
        {
            "rng_seed": cfg.rng_seed,
            "n_trajectories": cfg.n_trajectories,
            "time_step_ns": cfg.time_step,
            "differential_polarizability_si": cfg.differential_polarizability,
        },
        {
            "escape_time_ns": result.escape_time,
            "escape_time_std_ns": result.escape_time_std,
            "fraction_significant": result.fraction_significant,
            "phase_threshold_rad": cfg.phase_threshold,
            "external_field_phase_rad": result.external_field_phase,
            "n_close_collisions": result.n_close_collisions,
            "energy_balance_error": result.energy_balance_error,
        },
    )


def _run_jc_demo(rc, out: Path, workers: int) -> None:
    from .basis import EnsembleSpec
    from .hamiltonians import LaserParams

    v = rc.values
    spec = EnsembleSpec(v["n_atoms"])
    params = LaserParams(
        omega_p=TWO_PI * v["omega_p_mhz"],
        omega_c=TWO_PI * v["omega_c_mhz"],
        delta_p=0.0,
        delta_c=0.0,
    )
    times = np.linspace(0.0, v["total_time_us"], v["n_times"])[1:]
    traj = collapse_revival_demo(spec, params, v["probe_pulse_time_us"], times)
    write_trajectory(out / "trajectory.csv", traj)
    write_summary(
        out / "summary.json",
        rc,
        {
            "n_atoms": v["n_atoms"],
            "omega_p_mhz": v["omega_p_mhz"],
            "omega_c_mhz": v["omega_c_mhz"],
            "probe_pulse_time_us": v["probe_pulse_time_us"],
        },
        {"max_p_rydberg": float(np.max(traj.populations["p_ryd"]))},
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="superatom-sim",
        description="Heralded W-state protocol simulations",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("SUPERATOM_WORKERS", "1")),
    )
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        rc = parse_config(text, args.experiment)
        args.out.mkdir(parents=True, exist_ok=True)
        if args.experiment == "rabi":
            _run_rabi(rc, args.out, args.workers)
        elif args.experiment == "scan-dc":
            _run_scan_dc(rc, args.out, args.workers)
        elif args.experiment == "scan-oc":
            _run_scan_oc(rc, args.out, args.workers)
        elif args.experiment == "scan-n":
            _run_scan_n(rc, args.out, args.workers)
        elif args.experiment == "lindblad-scan":
            _run_lindblad_scan(rc, args.out, args.workers)
        elif args.experiment == "ion-mc":
            _run_ion_mc(rc, args.out, args.workers, args.seed)
        else:
            _run_jc_demo(rc, args.out, args.workers)
    except (ConfigError, UnsupportedRegimeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
