"""Classical Monte Carlo of the heralding ion's escape from the trap.

After photoionization the ion is extracted by a linearly ramped electric
field.  While it crosses the cloud, its Coulomb field Stark-shifts the
remaining atoms and imprints a phase on each g-e coherence,
phi_i = (d_alpha / 2 hbar) * Integral E_ion(r_i(t))^2 dt.
We integrate the ion's Newtonian motion with velocity-Verlet, accumulate
the per-spectator phases, and report the fraction of atoms whose phase
exceeds a configurable threshold.  Spectators are neutral and frozen on
the ~25 ns escape timescale; the photoelectron leaves far faster than the
ion and its integrated Stark exposure is bounded by the ion's, so it is
not simulated.

Internally SI units (m, s, V/m); the config speaks ns / um.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

E_CHARGE = 1.602176634e-19  # C
HBAR = 1.054571817e-34  # J s
AMU = 1.66053906892e-27  # kg
K_COULOMB = 8.9875517862e9  # N m^2 / C^2

# Differential dc polarizability of the 88Sr 5s2 1S0 - 5s5p 3P0 clock
# transition, literature value (external input, not derived here).
SR_CLOCK_DIFF_POLARIZABILITY = 4.078e-39  # C m^2 / V

NO_ESCAPE = float("inf")


@dataclass(frozen=True)
class IonEscapeConfig:
    """Extraction-field ramp, trap geometry and Monte Carlo controls."""

    ramp_field_max: float = 1e5  # V/m (1 kV/cm)
    ramp_time: float = 300.0  # ns
    trap_diameter: float = 1.0  # um, escape distance for the ion
    trap_volume: float = 1.0  # um^3, sampling volume for atom positions
    n_atoms: int = 100
    ion_mass: float = 88.0  # amu
    differential_polarizability: float = SR_CLOCK_DIFF_POLARIZABILITY  # C m^2/V
    phase_threshold: float = 0.01  # rad; "significant" phase (artifact choice)
    softening_radius: float = 5e-3  # um; closer approaches count as collisions
    n_trajectories: int = 100
    rng_seed: int = 0
    ion_start: str = "uniform"  # "uniform" in the cloud or "center"
    time_step: float = 0.1  # ns, velocity-Verlet step
    max_time: float | None = None  # ns horizon; default 10x ramp_time

    def __post_init__(self):
        positive = (
            "ramp_time", "trap_diameter", "trap_volume", "ion_mass",
            "phase_threshold", "softening_radius", "time_step",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.ramp_field_max < 0:
            raise ValueError("ramp_field_max must be >= 0")
        if self.n_atoms < 2:
            raise ValueError("need at least one spectator atom")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.differential_polarizability < 0:
            raise ValueError("differential_polarizability must be >= 0")
        if self.ion_start not in ("uniform", "center"):
            raise ValueError("ion_start must be 'uniform' or 'center'")
        if self.time_step > 0.1 + 1e-12:
            raise ValueError("time_step must be <= 0.1 ns")

    @property
    def horizon(self) -> float:
        return 10.0 * self.ramp_time if self.max_time is None else self.max_time


@dataclass
class EscapeResult:
    """Aggregate of the escape kinematics and spectator phase statistics."""

    escape_time: float  # ns (inf when the ion never exits within the horizon)
    escape_time_std: float  # ns, spread over trajectories
    per_atom_phases: np.ndarray  # rad, (n_trajectories * (n_atoms-1),)
    fraction_significant: float
    external_field_phase: float  # rad, from the ramp field itself
    n_close_collisions: int
    energy_balance_error: float  # relative |KE - work| at exit, worst case

    def threshold_curve(self, thresholds) -> np.ndarray:
        """fraction_significant as a function of the phase threshold."""
        th = np.asarray(thresholds, dtype=float)
        ph = self.per_atom_phases
        return np.array([np.mean(ph > t) for t in th])


def ballistic_escape_time(cfg: IonEscapeConfig) -> float:
    """Closed-form time (ns) to travel one trap diameter under the ramp.

    During the ramp the acceleration is a(t) = qE_max t / (m tau), so
    x(t) = qE_max t^3 / (6 m tau); invert for x = trap_diameter.
    """
    if cfg.ramp_field_max == 0:
        return NO_ESCAPE
    m = cfg.ion_mass * AMU
    tau = cfg.ramp_time * 1e-9
    d = cfg.trap_diameter * 1e-6
    t = (6.0 * m * tau * d / (E_CHARGE * cfg.ramp_field_max)) ** (1.0 / 3.0)
    if t <= tau:
        return t * 1e9
    # past the ramp the field is constant; continue with matched x, v
    x_tau = E_CHARGE * cfg.ramp_field_max * tau**2 / (6.0 * m)
    v_tau = E_CHARGE * cfg.ramp_field_max * tau / (2.0 * m)
    a = E_CHARGE * cfg.ramp_field_max / m
    dt = (-v_tau + np.sqrt(v_tau**2 + 2.0 * a * (d - x_tau))) / a
    return (tau + dt) * 1e9


def ramp_field_phase(cfg: IonEscapeConfig, t_ns: float | None = None) -> float:
    """Phase (rad) the ramp field itself puts on a g-e coherence by time t.

    phi(t) = (d_alpha / 2 hbar) E_max^2 t^3 / (3 tau^2) while ramping,
    then grows linearly at the full field.  Default t is the escape time.
    """
    if t_ns is None:
        t_ns = ballistic_escape_time(cfg)
    if not np.isfinite(t_ns):
        return 0.0
    t = t_ns * 1e-9
    tau = cfg.ramp_time * 1e-9
    pref = cfg.differential_polarizability / (2.0 * HBAR) * cfg.ramp_field_max**2
    if t <= tau:
        return pref * t**3 / (3.0 * tau**2)
    return pref * (tau / 3.0 + (t - tau))


def _field_at(t: float, cfg: IonEscapeConfig) -> float:
    tau = cfg.ramp_time * 1e-9
    if t >= tau:
        return cfg.ramp_field_max
    return cfg.ramp_field_max * t / tau


def _single_trajectory(cfg: IonEscapeConfig, index: int) -> dict:
    """One escape trajectory with its own counter-based RNG stream."""
    rng = np.random.default_rng([cfg.rng_seed, index])
    side = cfg.trap_volume ** (1.0 / 3.0) * 1e-6  # m, cubic sampling volume
    spectators = rng.uniform(-side / 2, side / 2, size=(cfg.n_atoms - 1, 3))
    if cfg.ion_start == "uniform":
        pos = rng.uniform(-side / 2, side / 2, size=3)
    else:
        pos = np.zeros(3)
    start = pos.copy()

    m = cfg.ion_mass * AMU
    dt = cfg.time_step * 1e-9
    d_escape = cfg.trap_diameter * 1e-6
    r_soft = cfg.softening_radius * 1e-6
    phase_pref = cfg.differential_polarizability / (2.0 * HBAR)
    e_sq_pref = (K_COULOMB * E_CHARGE) ** 2  # E_ion^2 = (kq)^2 / r^4

    vel = np.zeros(3)
    t = 0.0
    work = 0.0
    phases = np.zeros(cfg.n_atoms - 1)
    collided = np.zeros(cfg.n_atoms - 1, dtype=bool)

    def coulomb_rate(p):
        d2 = ((spectators - p) ** 2).sum(axis=1)
        collided[d2 < r_soft**2] = True
        return e_sq_pref / np.maximum(d2, r_soft**2) ** 2

    rate = coulomb_rate(pos)
    accel = np.array([0.0, 0.0, E_CHARGE * _field_at(t, cfg) / m])
    escape_t = NO_ESCAPE
    horizon = cfg.horizon * 1e-9
    while t < horizon:
        new_pos = pos + vel * dt + 0.5 * accel * dt**2
        new_accel = np.array([0.0, 0.0, E_CHARGE * _field_at(t + dt, cfg) / m])
        new_vel = vel + 0.5 * (accel + new_accel) * dt
        work += E_CHARGE * 0.5 * (
            _field_at(t, cfg) + _field_at(t + dt, cfg)
        ) * (new_pos[2] - pos[2])
        new_rate = coulomb_rate(new_pos)
        phases += phase_pref * 0.5 * (rate + new_rate) * dt
        pos, vel, accel, rate = new_pos, new_vel, new_accel, new_rate
        t += dt
        if np.linalg.norm(pos - start) >= d_escape:
            escape_t = t
            break

    kinetic = 0.5 * m * float(vel @ vel)
    energy_err = abs(kinetic - work) / work if work > 0 else 0.0
    phases[collided] = np.inf  # close collisions count as significant
    return {
        "escape_time": escape_t * 1e9 if np.isfinite(escape_t) else NO_ESCAPE,
        "phases": phases,
        "n_collisions": int(collided.sum()),
        "energy_error": energy_err,
    }


def _traj_job(args):
    cfg, index = args
    return index, _single_trajectory(cfg, index)


def simulate_escape(cfg: IonEscapeConfig, n_workers: int = 1) -> EscapeResult:
    """Run the Monte Carlo; deterministic for a given seed at any worker count."""
    jobs = [(cfg, i) for i in range(cfg.n_trajectories)]
    if n_workers > 1 and cfg.n_trajectories > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = dict(pool.map(_traj_job, jobs, chunksize=8))
        outs = [results[i] for i in range(cfg.n_trajectories)]
    else:
        outs = [_single_trajectory(cfg, i) for i in range(cfg.n_trajectories)]

    times = np.array([o["escape_time"] for o in outs])
    phases = np.concatenate([o["phases"] for o in outs])
    finite = times[np.isfinite(times)]
    if finite.size == 0:
        esc, esc_std = NO_ESCAPE, 0.0
    else:
        esc, esc_std = float(finite.mean()), float(finite.std())
    return EscapeResult(
        escape_time=esc,
        escape_time_std=esc_std,
        per_atom_phases=phases,
        fraction_significant=float(np.mean(phases > cfg.phase_threshold)),
        external_field_phase=ramp_field_phase(cfg, esc if np.isfinite(esc) else None),
        n_close_collisions=sum(o["n_collisions"] for o in outs),
        energy_balance_error=max(o["energy_error"] for o in outs),
    )
