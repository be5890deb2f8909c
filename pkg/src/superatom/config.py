"""Flat key=value run configuration: parsing, validation, unit conversion.

User-facing frequencies are nu = Omega/2pi in MHz (decay rates likewise
Gamma/2pi); times are us, except ion-mc where they are ns.  Internal
values are angular (rad/us).  Unknown keys are rejected with their line
number; every derived quantity is resolved before a run starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import N_MAX_PRODUCT_VECTOR, EnsembleSpec
from .dynamics import DecoherenceRates
from .hamiltonians import TWO_PI, LaserParams
from .ion_escape import IonEscapeConfig
from .protocol import AUTO_DELTA_P, MODELS, ProtocolConfig

EXPERIMENTS = (
    "rabi", "scan-dc", "scan-oc", "scan-n", "lindblad-scan", "ion-mc", "jc-demo",
)


class ConfigError(ValueError):
    """Invalid, missing, unknown or conflicting configuration input."""


@dataclass(frozen=True)
class Key:
    """One schema entry: how to parse a value and whether it must appear."""

    parse: object  # str -> typed value, raises ValueError
    required: bool = False
    default: object = None


def _float(lo=None, hi=None, lo_open=False):
    def conv(s):
        v = float(s)
        if not np.isfinite(v):
            raise ValueError("must be finite")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise ValueError(f"must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and v > hi:
            raise ValueError(f"must be <= {hi}")
        return v

    return conv


def _int(lo=None):
    def conv(s):
        v = int(s)
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}")
        return v

    return conv


def _choice(*opts):
    def conv(s):
        if s not in opts:
            raise ValueError(f"must be one of {opts}")
        return s

    return conv


_PROTOCOL_BASE = {
    "n_atoms": Key(_int(1), required=True),
    "delta_p_mhz": Key(_float()),  # absent -> resonance + compensation
    "pulse_time_us": Key(_float(0, lo_open=True)),
    "n_times": Key(_int(2), default=201),
    "model": Key(_choice(*MODELS)),
    "gamma_e_mhz": Key(_float(0), default=0.0),
    "gamma_r_mhz": Key(_float(0), default=0.0),
    "gamma_d_mhz": Key(_float(0), default=0.0),
    "gamma_coll_mhz": Key(_float(0), default=0.0),
}

# (key_a, key_b, "exactly-one" | "at-most-one") enforced after parsing
SCHEMAS: dict[str, tuple[dict, list]] = {
    "rabi": (
        {
            **_PROTOCOL_BASE,
            "omega_c_mhz": Key(_float(0, lo_open=True), required=True),
            "omega_p_mhz": Key(_float(0, lo_open=True)),
            "omega_eff_target_mhz": Key(_float(0, lo_open=True)),
            "delta_c_mhz": Key(_float()),
            "delta_c_over_omega_c": Key(_float(-3.0, 1.0)),
        },
        [
            ("omega_p_mhz", "omega_eff_target_mhz", "exactly-one"),
            ("delta_c_mhz", "delta_c_over_omega_c", "exactly-one"),
        ],
    ),
    "scan-dc": (
        {
            **_PROTOCOL_BASE,
            "omega_c_mhz": Key(_float(0, lo_open=True), required=True),
            "omega_eff_target_mhz": Key(_float(0, lo_open=True), required=True),
            "ratio_min": Key(_float(-3.0, 1.0), default=-3.0),
            "ratio_max": Key(_float(-3.0, 1.0), default=0.5),
            "n_points": Key(_int(2), default=36),
        },
        [],
    ),
    "scan-oc": (
        {
            **_PROTOCOL_BASE,
            "omega_eff_target_mhz": Key(_float(0, lo_open=True), required=True),
            "omega_c_min_mhz": Key(_float(0, lo_open=True), default=20.0),
            "omega_c_max_mhz": Key(_float(0, lo_open=True), default=200.0),
            "n_points": Key(_int(2), default=7),
        },
        [],
    ),
    "scan-n": (
        {
            **{k: v for k, v in _PROTOCOL_BASE.items() if k != "n_atoms"},
            "poisson_mean": Key(_float(1.0), required=True),
            "omega_c_mhz": Key(_float(0, lo_open=True), required=True),
            "omega_eff_target_mhz": Key(_float(0, lo_open=True), required=True),
            "delta_c_over_omega_c": Key(_float(-3.0, 1.0), default=-0.5),
            "half_width_sigmas": Key(_float(1.0), default=6.0),
        },
        [],
    ),
    "lindblad-scan": (
        {
            **_PROTOCOL_BASE,
            "omega_c_mhz": Key(_float(0, lo_open=True), required=True),
            "omega_eff_target_mhz": Key(_float(0, lo_open=True), required=True),
            "delta_c_over_omega_c": Key(_float(-3.0, 1.0), default=-0.5),
            "channel": Key(_choice("gamma_e", "gamma_r", "gamma_d"), required=True),
            "gamma_min_mhz": Key(_float(0), default=0.0),
            "gamma_max_mhz": Key(_float(0, lo_open=True), required=True),
            "n_points": Key(_int(2), default=6),
        },
        [],
    ),
    "jc-demo": (
        {
            "n_atoms": Key(_int(1), required=True),
            "omega_p_mhz": Key(_float(0, lo_open=True), required=True),
            "omega_c_mhz": Key(_float(0, lo_open=True), required=True),
            "probe_pulse_time_us": Key(_float(0, lo_open=True), required=True),
            "total_time_us": Key(_float(0, lo_open=True), required=True),
            "n_times": Key(_int(2), default=801),
        },
        [],
    ),
    "ion-mc": (
        {
            "ramp_field_max_v_per_m": Key(_float(0), default=1e5),
            "ramp_time_ns": Key(_float(0, lo_open=True), default=300.0),
            "trap_diameter_um": Key(_float(0, lo_open=True), default=1.0),
            "trap_volume_um3": Key(_float(0, lo_open=True), default=1.0),
            "n_atoms": Key(_int(2), default=100),
            "ion_mass_amu": Key(_float(0, lo_open=True), default=88.0),
            "differential_polarizability_si": Key(
                _float(0), default=IonEscapeConfig.differential_polarizability
            ),
            "phase_threshold_rad": Key(_float(0, lo_open=True), default=0.01),
            "softening_radius_um": Key(_float(0, lo_open=True), default=5e-3),
            "n_trajectories": Key(_int(1), default=100),
            "seed": Key(_int(0), default=0),
            "ion_start": Key(_choice("uniform", "center"), default="uniform"),
            "time_step_ns": Key(_float(0, lo_open=True), default=0.1),
            "max_time_ns": Key(_float(0, lo_open=True)),
        },
        [],
    ),
}


@dataclass
class RunConfig:
    """A fully validated experiment configuration."""

    experiment: str
    values: dict  # typed values with defaults applied
    provided: dict = field(default_factory=dict)  # raw strings, as given


def parse_config(text: str, experiment: str) -> RunConfig:
    """Parse flat key=value text against the experiment's schema."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}"
        )
    schema, conflicts = SCHEMAS[experiment]
    provided: dict[str, str] = {}
    lines: dict[str, int] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key=value, got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "experiment":
            if val != experiment:
                raise ConfigError(
                    f"line {ln}: config is for experiment {val!r}, "
                    f"but {experiment!r} was requested"
                )
            continue
        if key not in schema:
            raise ConfigError(f"line {ln}: unknown key {key!r} for {experiment}")
        if key in provided:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        provided[key] = val
        lines[key] = ln

    missing = [k for k, spec in schema.items() if spec.required and k not in provided]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(sorted(missing))}")
    for a, b, rule in conflicts:
        have = (a in provided) + (b in provided)
        if have == 2:
            raise ConfigError(
                f"line {lines[b]}: {a!r} and {b!r} conflict; give only one"
            )
        if have == 0 and rule == "exactly-one":
            raise ConfigError(f"exactly one of {a!r}, {b!r} is required")

    values: dict = {}
    for key, spec in schema.items():
        if key in provided:
            try:
                values[key] = spec.parse(provided[key])
            except ValueError as exc:
                raise ConfigError(
                    f"line {lines[key]}: invalid value for {key!r}: {exc}"
                ) from exc
        elif spec.default is not None:
            values[key] = spec.default
    return RunConfig(experiment=experiment, values=values, provided=provided)


def _resolve_delta_c(values: dict, omega_c: float) -> float:
    if "delta_c_mhz" in values:
        return TWO_PI * values["delta_c_mhz"]
    return values["delta_c_over_omega_c"] * omega_c


def protocol_config(rc: RunConfig) -> tuple[ProtocolConfig, str, int]:
    """(ProtocolConfig, model, n_times) for the protocol-type experiments.

    For scans the returned config is the sweep baseline; the grid axis is
    substituted per point by the scan routine.
    """
    v = rc.values
    if rc.experiment == "scan-oc":
        omega_c = TWO_PI * v["omega_c_min_mhz"]
        delta_c = -omega_c / 2.0
        n_atoms = v["n_atoms"]
    elif rc.experiment == "scan-n":
        omega_c = TWO_PI * v["omega_c_mhz"]
        delta_c = _resolve_delta_c(v, omega_c)
        n_atoms = int(round(v["poisson_mean"]))
    else:
        omega_c = TWO_PI * v["omega_c_mhz"]
        delta_c = _resolve_delta_c(v, omega_c) if rc.experiment != "scan-dc" \
            else -omega_c / 2.0
        n_atoms = v["n_atoms"]

    omega_p = TWO_PI * v["omega_p_mhz"] if "omega_p_mhz" in v else 0.0
    target = (
        TWO_PI * v["omega_eff_target_mhz"]
        if "omega_eff_target_mhz" in v
        else None
    )
    delta_p = TWO_PI * v["delta_p_mhz"] if "delta_p_mhz" in v else AUTO_DELTA_P
    params = LaserParams(
        omega_p=omega_p, omega_c=omega_c, delta_p=delta_p, delta_c=delta_c
    )
    rates = DecoherenceRates(
        gamma_e=TWO_PI * v.get("gamma_e_mhz", 0.0),
        gamma_r=TWO_PI * v.get("gamma_r_mhz", 0.0),
        gamma_d=TWO_PI * v.get("gamma_d_mhz", 0.0),
        gamma_coll=TWO_PI * v.get("gamma_coll_mhz", 0.0),
    )
    cfg = ProtocolConfig(
        spec=EnsembleSpec(n_atoms),
        params=params,
        rates=rates,
        pulse_time=v.get("pulse_time_us"),
        effective_rabi_target=target,
    )
    if "model" in v:
        model = v["model"]
    elif rc.experiment == "lindblad-scan":
        model = "lindblad"
    elif rc.experiment == "rabi" and not rates.all_zero:
        model = "lindblad"
    elif rc.experiment == "rabi" and n_atoms <= N_MAX_PRODUCT_VECTOR:
        model = "full"
    else:
        model = "dicke"
    return cfg, model, v.get("n_times", 201)


def ion_config(rc: RunConfig) -> IonEscapeConfig:
    v = rc.values
    return IonEscapeConfig(
        ramp_field_max=v["ramp_field_max_v_per_m"],
        ramp_time=v["ramp_time_ns"],
        trap_diameter=v["trap_diameter_um"],
        trap_volume=v["trap_volume_um3"],
        n_atoms=v["n_atoms"],
        ion_mass=v["ion_mass_amu"],
        differential_polarizability=v["differential_polarizability_si"],
        phase_threshold=v["phase_threshold_rad"],
        softening_radius=v["softening_radius_um"],
        n_trajectories=v["n_trajectories"],
        rng_seed=v["seed"],
        ion_start=v["ion_start"],
        time_step=v["time_step_ns"],
        max_time=v.get("max_time_ns"),
    )
