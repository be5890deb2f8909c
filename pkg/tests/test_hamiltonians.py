import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superatom.basis import DickeIndex, EnsembleSpec, dicke_position, symmetrizer
from superatom.hamiltonians import (
    TWO_PI,
    LaserParams,
    UnsupportedRegimeError,
    build_dicke_hamiltonian,
    build_jc_hamiltonian,
    build_product_hamiltonian,
    build_restricted_hamiltonian,
    dicke_to_dressed,
    dressed_block,
    effective_two_level,
    jc_label_map,
    quantum_fisher_dicke,
    resonance_probe_detuning,
    second_order_reduction,
)

laser_params = st.builds(
    LaserParams,
    omega_p=st.floats(0.0, 50.0),
    omega_c=st.floats(1.0, 500.0),
    delta_p=st.floats(-200.0, 200.0),
    delta_c=st.floats(-200.0, 200.0),
)


class TestLaserParams:
    def test_from_mhz(self):
        p = LaserParams.from_mhz(0.7, 10.0, 5.0, -5.0)
        assert p.omega_p == pytest.approx(TWO_PI * 0.7)
        assert p.delta_c == pytest.approx(-TWO_PI * 5.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            LaserParams(-1.0, 10.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            LaserParams(1.0, 0.0, 0.0, 0.0)

    def test_replace(self):
        p = LaserParams(1.0, 10.0, 0.0, 0.0)
        q = p.replace(delta_c=-5.0)
        assert q.delta_c == -5.0 and q.omega_c == 10.0


class TestHermiticity:
    @settings(max_examples=40, deadline=None)
    @given(laser_params, st.integers(1, 6))
    def test_product_hermitian(self, params, n):
        h = build_product_hamiltonian(params, EnsembleSpec(n))
        assert np.allclose(h, h.T, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(laser_params, st.integers(1, 12))
    def test_dicke_hermitian(self, params, n):
        h = build_dicke_hamiltonian(params, EnsembleSpec(n))
        assert np.allclose(h, h.T, atol=1e-12)


class TestBasisEquivalence:
    @settings(max_examples=25, deadline=None)
    @given(laser_params, st.integers(2, 5))
    def test_symmetrized_product_equals_dicke(self, params, n):
        """S^T H_product S = H_dicke to 1e-10 (exchange symmetry)."""
        spec = EnsembleSpec(n)
        S = symmetrizer(spec)
        hp = build_product_hamiltonian(params, spec)
        hd = build_dicke_hamiltonian(params, spec)
        assert np.max(np.abs(S.T @ hp @ S - hd)) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(laser_params, st.integers(2, 5))
    def test_symmetric_block_decouples(self, params, n):
        """H_product maps the symmetric manifold into itself."""
        spec = EnsembleSpec(n)
        S = symmetrizer(spec)
        hp = build_product_hamiltonian(params, spec)
        hs = hp @ S
        assert np.max(np.abs(hs - S @ (S.T @ hs))) < 1e-10


class TestDressedStates:
    @settings(max_examples=40, deadline=None)
    @given(laser_params, st.integers(1, 6))
    def test_eigen_equation(self, params, n):
        block = np.array(
            [
                [-n * params.delta_p, np.sqrt(n) * params.omega_c / 2],
                [np.sqrt(n) * params.omega_c / 2,
                 -n * params.delta_p - params.delta_c],
            ]
        )
        plus, minus = dressed_block(params, n)
        for st_ in (plus, minus):
            assert np.allclose(
                block @ st_.composition, st_.energy * st_.composition, atol=1e-8
            )
        assert plus.energy >= minus.energy
        assert plus.composition[0] >= 0 and minus.composition[0] >= 0

    def test_energies_closed_form(self):
        params = LaserParams(0.0, 40.0, 3.0, -20.0)
        for n in (1, 2, 3):
            plus, minus = dressed_block(params, n)
            root = np.sqrt(params.delta_c**2 / 4 + n * params.omega_c**2 / 4)
            base = -n * params.delta_p - params.delta_c / 2
            assert plus.energy == pytest.approx(base + root)
            assert minus.energy == pytest.approx(base - root)

    def test_resonance_zeroes_dressed_energy(self):
        omega_c, delta_c = 100.0, -37.0
        dp = resonance_probe_detuning(omega_c, delta_c)
        params = LaserParams(0.0, omega_c, dp, delta_c)
        plus, _ = dressed_block(params, 2)
        assert plus.energy == pytest.approx(0.0, abs=1e-10)

    def test_two_plus_composition_at_canonical_point(self):
        # at delta_c = -omega_c/2: |2+> = (|E^2> + sqrt(2)|ER>)/sqrt(3)
        omega_c = 80.0
        dp = resonance_probe_detuning(omega_c, -omega_c / 2)
        params = LaserParams(0.0, omega_c, dp, -omega_c / 2)
        plus, _ = dressed_block(params, 2)
        assert np.allclose(
            plus.composition, [1 / np.sqrt(3), np.sqrt(2 / 3)], atol=1e-12
        )

    @settings(max_examples=30, deadline=None)
    @given(laser_params, st.integers(2, 6))
    def test_dicke_to_dressed_orthogonal(self, params, n):
        u = dicke_to_dressed(params, EnsembleSpec(n))
        assert np.allclose(u.T @ u, np.eye(u.shape[0]), atol=1e-12)

    def test_dressed_basis_diagonalizes_coupling(self):
        params = LaserParams(0.0, 60.0, 4.0, -30.0)
        spec = EnsembleSpec(4)
        u = dicke_to_dressed(params, spec)
        h = u.T @ build_dicke_hamiltonian(params, spec) @ u
        assert np.max(np.abs(h - np.diag(np.diag(h)))) < 1e-10


class TestEffectiveModel:
    @pytest.mark.parametrize("n", [2, 3, 4, 10, 100])
    def test_closed_forms(self, n):
        omega_p, omega_c = 2.0, 120.0
        dp = resonance_probe_detuning(omega_c, -omega_c / 2)
        params = LaserParams(omega_p, omega_c, dp, -omega_c / 2)
        eff = effective_two_level(params, EnsembleSpec(n))
        assert eff.omega_eff == pytest.approx(
            np.sqrt(2 / 3) * np.sqrt(n * (n - 1)) * omega_p**2 / omega_c
        )
        assert eff.delta_eff == pytest.approx((2 * n - 7) / 3 * omega_p**2 / omega_c)

    def test_regime_guard(self):
        params = LaserParams(1.0, 100.0, 0.0, -30.0)
        with pytest.raises(UnsupportedRegimeError):
            effective_two_level(params, EnsembleSpec(3))

    @pytest.mark.parametrize("n", [3, 4, 10, 50])
    def test_numeric_reduction_matches_closed_form(self, n):
        """At delta_c=-omega_c/2 the generic second-order reduction agrees."""
        omega_p, omega_c = 1.5, 90.0
        dp = resonance_probe_detuning(omega_c, -omega_c / 2)
        params = LaserParams(omega_p, omega_c, dp, -omega_c / 2)
        eff = effective_two_level(params, EnsembleSpec(n))
        w, sg, s2 = second_order_reduction(params, EnsembleSpec(n))
        assert w == pytest.approx(eff.omega_eff, rel=1e-10)
        assert s2 - sg == pytest.approx(eff.delta_eff, rel=1e-9, abs=1e-12)

    def test_omega_eff_scales_quadratically_in_probe(self):
        omega_c = 100.0
        dp = resonance_probe_detuning(omega_c, -omega_c / 2)
        spec = EnsembleSpec(5)
        w1, *_ = second_order_reduction(
            LaserParams(1.0, omega_c, dp, -omega_c / 2), spec
        )
        w2, *_ = second_order_reduction(
            LaserParams(2.0, omega_c, dp, -omega_c / 2), spec
        )
        assert w2 == pytest.approx(4 * w1, rel=1e-12)


class TestRestrictedModel:
    def test_labels_and_dimension(self):
        params = LaserParams(1.0, 50.0, 5.0, -25.0)
        rm = build_restricted_hamiltonian(params, EnsembleSpec(4))
        assert rm.labels == ("G", "1+", "1-", "2+", "3+", "3-")
        assert rm.h.shape == (6, 6)
        assert rm.dicke_columns.shape == (9, 6)

    def test_n2_drops_triply_excited(self):
        params = LaserParams(1.0, 50.0, 5.0, -25.0)
        rm = build_restricted_hamiltonian(params, EnsembleSpec(2))
        assert rm.labels == ("G", "1+", "1-", "2+")
        assert rm.h.shape == (4, 4)

    def test_projection_of_full_hamiltonian(self):
        """The reduced block is exactly P H P in the dressed frame."""
        params = LaserParams(0.9, 70.0, 6.0, -35.0)
        spec = EnsembleSpec(5)
        rm = build_restricted_hamiltonian(params, spec)
        hd = build_dicke_hamiltonian(params, spec)
        want = rm.dicke_columns.T @ hd @ rm.dicke_columns
        assert np.allclose(rm.h, want, atol=1e-12)


class TestJaynesCummingsView:
    def test_same_matrix(self):
        params = LaserParams(1.0, 30.0, 0.0, 0.0)
        spec = EnsembleSpec(6)
        assert np.array_equal(
            build_jc_hamiltonian(params, spec), build_dicke_hamiltonian(params, spec)
        )

    def test_label_map(self):
        m = jc_label_map(EnsembleSpec(3))
        assert m[(0, 0)] == (0, "ground")
        assert m[(2, 1)] == (2, "excited")
        assert len(m) == 7

    def test_vacuum_rabi_splitting(self):
        # j=0, s-sector pair |R>,|E>: coupling sqrt(1)*omega_c/2
        params = LaserParams(0.0, 24.0, 0.0, 0.0)
        plus, minus = dressed_block(params, 1)
        assert plus.energy - minus.energy == pytest.approx(params.omega_c)


class TestQuantumFisher:
    @given(st.integers(1, 200))
    def test_w_state_value(self, n):
        # m=1 ("W state"): F_Q = 3N - 2
        assert quantum_fisher_dicke(n, 1) == 3 * n - 2

    @given(st.integers(2, 200), st.integers(0, 200))
    def test_bounds(self, n, m):
        if m > n:
            with pytest.raises(ValueError):
                quantum_fisher_dicke(n, m)
        else:
            f = quantum_fisher_dicke(n, m)
            assert n <= f <= n + n * n / 2 + 1
            # half-filled Dicke state maximizes F_Q
            assert f <= quantum_fisher_dicke(n, n // 2) + 2
