"""Time evolution: exact pure-state propagation and Lindblad master equation.

Pure states under a constant Hamiltonian are propagated by spectral
decomposition (no integrator error).  Density matrices evolve under
rho' = -i[H, rho] + sum_k Gamma_k (L rho L^+ - 1/2 {L^+L, rho}) with an
adaptive embedded Runge-Kutta integrator on the vectorized density matrix.
Positivity is monitored, not enforced: a violation beyond tolerance fails
the run instead of being silently projected away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .basis import (
    LEVEL_E,
    LEVEL_G,
    LEVEL_R,
    BasisError,
    CapacityError,
    DickeIndex,
    EnsembleSpec,
    N_MAX_PRODUCT_DENSITY,
    dicke_dimension,
    dicke_position,
    dicke_vector,
    enumerate_dicke,
    product_basis,
    symmetrizer,
)

NORM_TOL = 1e-10
TRACE_TOL = 1e-7
HERM_TOL = 1e-8
POSITIVITY_TOL = 1e-6


class NumericalFailure(RuntimeError):
    """Integrator failed or a conservation/positivity check was violated."""


@dataclass(frozen=True)
class DecoherenceRates:
    """Decay/dephasing rates, angular rad/us.

    gamma_e: spontaneous decay e -> g, gamma_r: Rydberg decay r -> e,
    gamma_d: per-atom dephasing of the Rydberg state, gamma_coll:
    collective dephasing of the symmetric Dicke states.
    """

    gamma_e: float = 0.0
    gamma_r: float = 0.0
    gamma_d: float = 0.0
    gamma_coll: float = 0.0

    def __post_init__(self):
        for name in ("gamma_e", "gamma_r", "gamma_d", "gamma_coll"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def any_single_atom(self) -> bool:
        return self.gamma_e > 0 or self.gamma_r > 0 or self.gamma_d > 0

    @property
    def all_zero(self) -> bool:
        return not self.any_single_atom and self.gamma_coll == 0


@dataclass
class Trajectory:
    """Sampled populations of labeled observables along an evolution."""

    times: np.ndarray
    populations: dict = field(default_factory=dict)
    norm_or_trace: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        self.times = t


def propagate_pure(h: np.ndarray, psi0: np.ndarray, times) -> np.ndarray:
    """psi(t) = exp(-i H t) psi0 via eigendecomposition; returns (T, dim)."""
    times = np.asarray(times, dtype=float)
    if h.shape[0] != h.shape[1] or h.shape[0] != psi0.shape[0]:
        raise BasisError(f"dimension mismatch: H {h.shape}, psi0 {psi0.shape}")
    if np.max(np.abs(h - h.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(h))):
        raise ValueError("Hamiltonian is not Hermitian")
    evals, evecs = np.linalg.eigh(h)
    c0 = evecs.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, evals))
    states = (phases * c0) @ evecs.T
    norms = np.linalg.norm(states, axis=1)
    if np.max(np.abs(norms - 1.0)) > NORM_TOL:
        raise NumericalFailure("norm not conserved in pure propagation")
    return states


def lindblad_operators(
    rates: DecoherenceRates, spec: EnsembleSpec, basis: str
) -> list[tuple[float, np.ndarray]]:
    """Jump operators as (rate, matrix) pairs in the requested basis.

    Single-atom channels (gamma_e, gamma_r, gamma_d) individually break the
    exchange symmetry and require the product basis; collective dephasing
    alone is diagonal in the Dicke basis and is allowed there.
    """
    if rates.any_single_atom and basis != "product":
        raise BasisError("single-atom decoherence channels require the product basis")
    ops: list[tuple[float, np.ndarray]] = []
    if basis == "product":
        pb = product_basis(spec)
        single = {
            "gamma_e": (LEVEL_E, LEVEL_G),  # |g><e|
            "gamma_r": (LEVEL_R, LEVEL_E),  # |e><r|
            "gamma_d": (LEVEL_R, LEVEL_R),  # |r><r|
        }
        for name, (src, dst) in single.items():
            rate = getattr(rates, name)
            if rate <= 0:
                continue
            for k in range(spec.n_atoms):
                op = np.zeros((pb.dim, pb.dim))
                for i, c in enumerate(pb.states):
                    if c[k] == src:
                        target = c[:k] + (dst,) + c[k + 1 :]
                        op[pb.index[target], i] = 1.0
                ops.append((rate, op))
        if rates.gamma_coll > 0:
            S = symmetrizer(spec)
            for col in range(S.shape[1]):
                v = S[:, col]
                ops.append((rates.gamma_coll, np.outer(v, v)))
    elif basis == "dicke":
        if rates.gamma_coll > 0:
            dim = dicke_dimension(spec.n_atoms)
            for a in range(dim):
                op = np.zeros((dim, dim))
                op[a, a] = 1.0
                ops.append((rates.gamma_coll, op))
    else:
        raise BasisError(f"unsupported basis for Lindblad operators: {basis!r}")
    return ops


def evolve_lindblad(
    h: np.ndarray,
    jumps: list[tuple[float, np.ndarray]],
    rho0: np.ndarray,
    times,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_dim: int | None = None,
) -> np.ndarray:
    """Integrate the master equation; returns (T, dim, dim) density matrices.

    Trace, Hermiticity and positivity are checked at every output time.
    """
    times = np.asarray(times, dtype=float)
    dim = h.shape[0]
    if max_dim is None:
        max_dim = max(
            dicke_dimension(64), 2 ** N_MAX_PRODUCT_DENSITY
            + N_MAX_PRODUCT_DENSITY * 2 ** (N_MAX_PRODUCT_DENSITY - 1)
        )
    if dim > max_dim:
        raise CapacityError(f"Lindblad dimension {dim} exceeds capacity {max_dim}")
    if rho0.shape != (dim, dim):
        raise BasisError(f"rho0 shape {rho0.shape} incompatible with H {h.shape}")

    # Precompute the superoperator pieces acting on rho as a matrix.
    h_c = h.astype(complex)
    jump_terms = []
    anticomm = np.zeros((dim, dim), dtype=complex)
    for rate, op in jumps:
        l = op.astype(complex)
        jump_terms.append((rate, l, l.conj().T))
        anticomm += rate * (l.conj().T @ l)

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (h_c @ rho - rho @ h_c)
        drho -= 0.5 * (anticomm @ rho + rho @ anticomm)
        for rate, l, ld in jump_terms:
            drho += rate * (l @ rho @ ld)
        return drho.ravel()

    t0, t1 = 0.0, float(times[-1])
    sol = solve_ivp(
        rhs,
        (t0, t1),
        rho0.astype(complex).ravel(),
        t_eval=times,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise NumericalFailure(f"master-equation integration failed: {sol.message}")
    rhos = sol.y.T.reshape(len(times), dim, dim)
    for k, rho in enumerate(rhos):
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise NumericalFailure(f"trace {tr} at t={times[k]}")
        if np.max(np.abs(rho - rho.conj().T)) > HERM_TOL:
            raise NumericalFailure(f"Hermiticity violated at t={times[k]}")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -POSITIVITY_TOL:
            raise NumericalFailure(f"positivity violated at t={times[k]}")
    return rhos


@dataclass
class Observables:
    """Herald-related populations of a single state or density matrix."""

    p_rydberg: float
    p_er: float
    p_g: float
    p_e2: float
    infidelity_fraction: float | None  # None: undefined (no Rydberg population)


UNDEFINED_FIDELITY_EPS = 1e-12


def observables(
    state: np.ndarray, spec: EnsembleSpec, basis: str, eps: float = UNDEFINED_FIDELITY_EPS
) -> Observables:
    """Success/fidelity observables in the product or Dicke basis.

    p_rydberg is the total population with one atom in r, p_er the
    population of the symmetric |ER> state.  The false-herald fraction
    (p_rydberg - p_er)/p_rydberg is None when p_rydberg <= eps.
    """
    if basis == "product":
        pb = product_basis(spec)
        counts = pb.excitation_counts()
        if state.ndim == 2:
            pops = np.diag(state).real
        else:
            pops = np.abs(state) ** 2
        p_ryd = float(pops[counts[:, 1] == 1].sum())

        def _overlap_pop(vec):
            if vec is None:
                return 0.0
            if state.ndim == 2:
                return float((vec @ state @ vec).real)
            return float(np.abs(vec @ state) ** 2)

        er = dicke_vector(spec, DickeIndex(1, 1)) if spec.n_atoms >= 2 else None
        e2 = dicke_vector(spec, DickeIndex(2, 0)) if spec.n_atoms >= 2 else None
        p_er = _overlap_pop(er)
        p_e2 = _overlap_pop(e2)
        p_g = float(pops[pb.index[(LEVEL_G,) * spec.n_atoms]])
    elif basis == "dicke":
        if state.ndim == 2:
            pops = np.diag(state).real
        else:
            pops = np.abs(state) ** 2
        s_flags = np.array([idx.s for idx in enumerate_dicke(spec)])
        p_ryd = float(pops[s_flags == 1].sum())
        p_er = (
            float(pops[dicke_position(spec, DickeIndex(1, 1))])
            if spec.n_atoms >= 2
            else 0.0
        )
        p_g = float(pops[0])
        p_e2 = (
            float(pops[dicke_position(spec, DickeIndex(2, 0))])
            if spec.n_atoms >= 2
            else 0.0
        )
    else:
        raise BasisError(f"observables undefined for basis {basis!r}")
    infid = None if p_ryd <= eps else (p_ryd - p_er) / p_ryd
    return Observables(p_ryd, p_er, p_g, p_e2, infid)
