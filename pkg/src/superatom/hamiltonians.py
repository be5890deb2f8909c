"""Driven three-level ensemble Hamiltonians and dressed-state constructions.

All frequencies and energies are angular (rad/us) internally.  User-facing
constructors accept ordinary frequencies nu = Omega/2pi in MHz, matching the
usual experimental "Omega/2pi = 10 MHz" convention.

In the rotating frame the single-atom diagonal is (0, -delta_p,
-delta_p - delta_c) for (g, e, r); the probe couples g-e with Omega_p/2 and
the coupling laser couples e-r with Omega_c/2.  Under perfect blockade the
coupling laser splits into 2x2 blocks between |E^n R^0> and |E^{n-1} R^1>;
diagonalizing those blocks gives the dressed states |n+->.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from .basis import (
    LEVEL_E,
    LEVEL_G,
    LEVEL_R,
    BasisError,
    DickeIndex,
    EnsembleSpec,
    collective_raising_element,
    dicke_dimension,
    dicke_position,
    enumerate_dicke,
    product_basis,
)

TWO_PI = 2.0 * pi


class UnsupportedRegimeError(ValueError):
    """Closed-form reduction requested outside its validity regime."""


@dataclass(frozen=True)
class LaserParams:
    """Probe/coupling Rabi frequencies and detunings, angular rad/us."""

    omega_p: float
    omega_c: float
    delta_p: float
    delta_c: float

    def __post_init__(self):
        if self.omega_p < 0:
            raise ValueError("omega_p must be >= 0")
        if self.omega_c <= 0:
            raise ValueError("omega_c must be > 0")

    @classmethod
    def from_mhz(cls, nu_p, nu_c, nu_delta_p, nu_delta_c) -> "LaserParams":
        """Build from ordinary frequencies nu = Omega/2pi in MHz."""
        return cls(
            TWO_PI * nu_p, TWO_PI * nu_c, TWO_PI * nu_delta_p, TWO_PI * nu_delta_c
        )

    def replace(self, **kw) -> "LaserParams":
        d = dict(
            omega_p=self.omega_p,
            omega_c=self.omega_c,
            delta_p=self.delta_p,
            delta_c=self.delta_c,
        )
        d.update(kw)
        return LaserParams(**d)


@dataclass(frozen=True)
class DressedState:
    """Eigenstate of the coupling-laser 2x2 block with total excitation n."""

    n: int
    branch: str  # "+" (higher energy) or "-"
    energy: float
    composition: np.ndarray  # amplitudes on (|E^n R^0>, |E^{n-1} R^1>)


@dataclass(frozen=True)
class EffectiveTwoLevel:
    """Adiabatic-elimination reduction to the {|G>, |2+>} pair."""

    omega_eff: float
    delta_eff: float
    target_composition: np.ndarray  # |2+> on (|E^2>, |ER>)


def build_product_hamiltonian(params: LaserParams, spec: EnsembleSpec) -> np.ndarray:
    """Hamiltonian over the blockade-truncated product basis.

    Diagonal of a configuration with j atoms in e and s in r is
    -j*delta_p - s*(delta_p + delta_c); off-diagonals are Omega_p/2 per
    single-atom g<->e flip and Omega_c/2 per e<->r flip.  Couplings into
    doubly-Rydberg states are absent by construction of the basis.
    """
    pb = product_basis(spec)
    counts = pb.excitation_counts()
    h = np.zeros((pb.dim, pb.dim))
    diag = -counts[:, 0] * params.delta_p - counts[:, 1] * (
        params.delta_p + params.delta_c
    )
    np.fill_diagonal(h, diag)
    for i, c in enumerate(pb.states):
        for k in range(spec.n_atoms):
            if c[k] == LEVEL_G:
                flipped = c[:k] + (LEVEL_E,) + c[k + 1 :]
                h[i, pb.index[flipped]] += params.omega_p / 2.0
            elif c[k] == LEVEL_E:
                flipped_g = c[:k] + (LEVEL_G,) + c[k + 1 :]
                h[i, pb.index[flipped_g]] += params.omega_p / 2.0
                flipped_r = c[:k] + (LEVEL_R,) + c[k + 1 :]
                if flipped_r in pb.index:
                    h[i, pb.index[flipped_r]] += params.omega_c / 2.0
            else:  # LEVEL_R
                flipped_e = c[:k] + (LEVEL_E,) + c[k + 1 :]
                h[i, pb.index[flipped_e]] += params.omega_c / 2.0
    return h


def build_dicke_hamiltonian(params: LaserParams, spec: EnsembleSpec) -> np.ndarray:
    """Hamiltonian over the 2N+1 symmetric Dicke states.

    Probe couplings are collectively enhanced:
    (Omega_p/2)*sqrt((j+1)(N-j-s)) within each s sector; the coupling
    laser links |E^{j+1} R^0> and |E^j R^1> with (Omega_c/2)*sqrt(j+1).
    """
    idxs = enumerate_dicke(spec)
    dim = dicke_dimension(spec.n_atoms)
    h = np.zeros((dim, dim))
    for a, idx in enumerate(idxs):
        h[a, a] = -idx.j * params.delta_p - idx.s * (params.delta_p + params.delta_c)
        up = DickeIndex(idx.j + 1, idx.s)
        if up.admissible(spec):
            b = dicke_position(spec, up)
            el = params.omega_p / 2.0 * collective_raising_element(
                spec, idx.j, idx.s, "ge"
            )
            h[a, b] += el
            h[b, a] += el
        if idx.s == 1:
            up_c = DickeIndex(idx.j + 1, 0)
            b = dicke_position(spec, up_c)
            el = params.omega_c / 2.0 * collective_raising_element(
                spec, idx.j, 1, "er"
            )
            h[a, b] += el
            h[b, a] += el
    return h


def dressed_block(params: LaserParams, n: int) -> tuple[DressedState, DressedState]:
    """Diagonalize the coupling-laser 2x2 block at total excitation n.

    Block basis is (|E^n R^0>, |E^{n-1} R^1>) with diagonal
    (-n*delta_p, -n*delta_p - delta_c) and off-diagonal sqrt(n)*Omega_c/2.
    Returns (plus, minus); "+" is the higher-energy branch.
    """
    if n < 1:
        raise ValueError("dressed blocks exist for n >= 1")
    block = np.array(
        [
            [-n * params.delta_p, sqrt(n) * params.omega_c / 2.0],
            [sqrt(n) * params.omega_c / 2.0, -n * params.delta_p - params.delta_c],
        ]
    )
    evals, evecs = np.linalg.eigh(block)  # ascending
    minus = DressedState(n, "-", float(evals[0]), evecs[:, 0].copy())
    plus = DressedState(n, "+", float(evals[1]), evecs[:, 1].copy())
    # fix the sign convention: |E^n> component non-negative
    for st in (plus, minus):
        if st.composition[0] < 0:
            st.composition[:] = -st.composition
    return plus, minus


def resonance_probe_detuning(
    omega_c: float, delta_c: float, n: int = 2, branch: str = "+"
) -> float:
    """Probe detuning that tunes the chosen dressed state to zero energy.

    E(n, +-) = -n*delta_p - delta_c/2 +- sqrt(delta_c^2/4 + n*omega_c^2/4),
    so E = 0 at delta_p = (-delta_c/2 +- sqrt(...))/n.  For n=2, "+" this is
    the closed form (-delta_c/2 + sqrt(delta_c^2/4 + omega_c^2/2))/2.
    """
    if omega_c <= 0:
        raise ValueError("omega_c must be > 0")
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    root = sqrt(delta_c**2 / 4.0 + n * omega_c**2 / 4.0)
    sign = 1.0 if branch == "+" else -1.0
    return (-delta_c / 2.0 + sign * root) / n


def dicke_to_dressed(params: LaserParams, spec: EnsembleSpec) -> np.ndarray:
    """Orthogonal matrix whose columns are the dressed states in Dicke order.

    Column ordering mirrors the Dicke ordering: |G>, then per excitation
    number n the "+" branch in the (n, 0) slot and the "-" branch in the
    (n-1, 1) slot.
    """
    dim = dicke_dimension(spec.n_atoms)
    u = np.zeros((dim, dim))
    u[0, 0] = 1.0
    for n in range(1, spec.n_atoms + 1):
        plus, minus = dressed_block(params, n)
        a = dicke_position(spec, DickeIndex(n, 0))
        b = dicke_position(spec, DickeIndex(n - 1, 1))
        u[[a, b], a] = plus.composition
        u[[a, b], b] = minus.composition
    return u


RESTRICTED_LABELS = ("G", "1+", "1-", "2+", "3+", "3-")


@dataclass(frozen=True)
class RestrictedModel:
    """Reduced Hamiltonian over a subset of dressed states.

    dicke_columns maps reduced-space amplitudes back to the Dicke basis.
    """

    h: np.ndarray
    labels: tuple
    dicke_columns: np.ndarray  # (2N+1, len(labels))


def _dressed_label_position(spec: EnsembleSpec, label: str) -> int:
    if label == "G":
        return 0
    n, branch = int(label[:-1]), label[-1]
    if branch == "+":
        return dicke_position(spec, DickeIndex(n, 0))
    return dicke_position(spec, DickeIndex(n - 1, 1))


def build_restricted_hamiltonian(
    params: LaserParams, spec: EnsembleSpec
) -> RestrictedModel:
    """Dressed-basis Hamiltonian restricted to {G, 1+, 1-, 2+, 3+, 3-}.

    For N = 2 the n = 3 states are absent and are dropped.
    """
    if spec.n_atoms < 2:
        raise BasisError("restricted model needs N >= 2")
    labels = RESTRICTED_LABELS if spec.n_atoms >= 3 else ("G", "1+", "1-", "2+")
    u = dicke_to_dressed(params, spec)
    h_dressed = u.T @ build_dicke_hamiltonian(params, spec) @ u
    cols = [_dressed_label_position(spec, lab) for lab in labels]
    return RestrictedModel(
        h=h_dressed[np.ix_(cols, cols)], labels=labels, dicke_columns=u[:, cols]
    )


def effective_two_level(params: LaserParams, spec: EnsembleSpec) -> EffectiveTwoLevel:
    """Closed-form adiabatic elimination at delta_c = -omega_c/2.

    Omega_eff = sqrt(2/3)*sqrt(N(N-1))*omega_p^2/omega_c and
    Delta_eff = (2N-7)/3 * omega_p^2/omega_c.  These forms hold only at
    delta_c = -omega_c/2, where |2+> = (|E^2> + sqrt(2)|ER>)/sqrt(3).
    """
    if spec.n_atoms < 2:
        raise BasisError("effective two-level model needs N >= 2")
    if abs(params.delta_c + params.omega_c / 2.0) > 1e-9 * params.omega_c:
        raise UnsupportedRegimeError(
            "closed-form elimination requires delta_c = -omega_c/2"
        )
    N = spec.n_atoms
    omega_eff = sqrt(2.0 / 3.0) * sqrt(N * (N - 1)) * params.omega_p**2 / params.omega_c
    delta_eff = (2 * N - 7) / 3.0 * params.omega_p**2 / params.omega_c
    comp = np.array([1.0 / sqrt(3.0), sqrt(2.0 / 3.0)])
    return EffectiveTwoLevel(omega_eff, delta_eff, comp)


def second_order_reduction(
    params: LaserParams, spec: EnsembleSpec
) -> tuple[float, float, float]:
    """Numeric second-order reduction to {|G>, |2+>} at arbitrary delta_c.

    Assumes delta_p is at (or near) the |2+> resonance so that |G> and |2+>
    are quasi-degenerate at zero energy.  Returns (omega_eff, shift_g,
    shift_2p): the magnitude of the second-order Rabi coupling and the
    level shifts of |G> and |2+> from the off-resonant dressed states.
    """
    if spec.n_atoms < 2:
        raise BasisError("reduction needs N >= 2")
    u = dicke_to_dressed(params, spec)
    h = u.T @ build_dicke_hamiltonian(params, spec) @ u
    energies = np.diag(u.T @ build_dicke_hamiltonian(
        params.replace(omega_p=0.0), spec) @ u)
    i_g = 0
    i_2p = _dressed_label_position(spec, "2+")
    omega_eff = 0.0
    shift_g = 0.0
    shift_2p = 0.0
    for k in range(h.shape[0]):
        if k in (i_g, i_2p):
            continue
        if abs(energies[k]) < 1e-12 * params.omega_c:
            continue  # accidental degeneracy; excluded from scans
        omega_eff += 2.0 * h[i_2p, k] * h[k, i_g] / (-energies[k])
        shift_g += h[i_g, k] ** 2 / (-energies[k])
        shift_2p += h[i_2p, k] ** 2 / (-energies[k])
    return abs(omega_eff), shift_g, shift_2p


def build_jc_hamiltonian(params: LaserParams, spec: EnsembleSpec) -> np.ndarray:
    """Jaynes-Cummings form of the Dicke-basis Hamiltonian (same matrix).

    The mapping is a relabeling: j plays the role of the photon number and
    s that of the two-level atom, with the coupling laser as the vacuum
    Rabi coupling sqrt(j+1)*omega_c/2 and the probe as a coherent drive.
    """
    return build_dicke_hamiltonian(params, spec)


def jc_label_map(spec: EnsembleSpec) -> dict:
    """Dicke label -> (photon number, atom state) under the JC mapping."""
    return {
        (idx.j, idx.s): (idx.j, "excited" if idx.s else "ground")
        for idx in enumerate_dicke(spec)
    }


def quantum_fisher_dicke(n_atoms: int, m: int) -> float:
    """Quantum Fisher information N + 2m(N-m) of the Dicke state with m excitations."""
    if not 0 <= m <= n_atoms:
        raise ValueError(f"need 0 <= m <= N, got m={m}, N={n_atoms}")
    return float(n_atoms + 2 * m * (n_atoms - m))
