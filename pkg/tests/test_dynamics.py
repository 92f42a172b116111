import numpy as np
import pytest

from oracles import (
    dense_adiabat,
    dense_isochore,
    energy_frame_commutator_norm,
    gibbs_b_expm,
    random_valid_b,
)
from spinotto import dynamics as dyn
from spinotto.algebra import gibbs_b, hamiltonian
from spinotto.errors import InvalidTemperature, NonPhysicalState
from spinotto.thermo import energy, energy_entropy

OM_B, OM_A, J = 12.6355, 5.08364, 2.0
HOT = dyn.IsochoreParams(OM_B, 7.5, 1.16748, -0.05)
COLD = dyn.IsochoreParams(OM_A, 1.5, 1.16748, -0.06)


class TestAdiabatPropagate:
    def test_matches_dense_oracle_unitary(self, rng):
        p = dyn.AdiabatParams(OM_B, OM_A, 0.01478, 0.0, n_seg=48)
        for _ in range(8):
            b0 = random_valid_b(rng)
            b1, _, _ = dyn.adiabat_propagate(p, J, b0)
            b_ref = dense_adiabat(b0, OM_B, OM_A, 0.01478, J, 0.0, 48)
            assert np.abs(b1 - b_ref).max() < 1e-8

    def test_matches_dense_oracle_dephasing(self, rng):
        p = dyn.AdiabatParams(OM_B, OM_A, 0.01478, 1.28, n_seg=48)
        for _ in range(8):
            b0 = random_valid_b(rng)
            b1, _, _ = dyn.adiabat_propagate(p, J, b0)
            b_ref = dense_adiabat(b0, OM_B, OM_A, 0.01478, J, 1.28, 48)
            assert np.abs(b1 - b_ref).max() < 1e-8

    def test_uncoupled_field_keeps_populations(self, rng):
        # with J = 0 every H(t) commutes with every other: <H>/Omega frozen
        p = dyn.AdiabatParams(8.0, 3.0, 0.21, 0.0, n_seg=64)
        b0 = random_valid_b(rng)
        _, _, tr = dyn.adiabat_propagate(p, 0.0, b0)
        ratio = (tr.omega * tr.b[:, 0]) / tr.omega
        assert np.abs(ratio - ratio[0]).max() < 1e-12

    def test_strong_dephasing_keeps_energy_diagonal(self):
        # residual coherence is the adiabatic lag ~ theta_dot/(2 Lambda
        # Omega^2); it shrinks with Lambda and S_E stays flat
        b0 = gibbs_b(OM_B, J, 7.5)
        p = dyn.AdiabatParams(OM_B, OM_A, 0.01478, 500.0, n_seg=512)
        _, _, tr = dyn.adiabat_propagate(p, J, b0)
        s_e = [energy_entropy(bb, om, J) for bb, om in zip(tr.b, tr.omega)]
        assert max(s_e) - min(s_e) < 1e-4
        for i in (128, 256, 384, 512):
            assert energy_frame_commutator_norm(tr.b[i], tr.omega[i], J) < 1e-2

        p10 = dyn.AdiabatParams(OM_B, OM_A, 0.01478, 5000.0, n_seg=512)
        _, _, tr10 = dyn.adiabat_propagate(p10, J, b0)
        assert (energy_frame_commutator_norm(tr10.b[-1], OM_A, J)
                < 0.5 * energy_frame_commutator_norm(tr.b[-1], OM_A, J))

    def test_transverse_norm_conserved_when_unitary(self, rng):
        p = dyn.AdiabatParams(OM_B, OM_A, 0.05, 0.0, n_seg=128)
        for _ in range(5):
            b0 = random_valid_b(rng)
            b1, _, _ = dyn.adiabat_propagate(p, J, b0)
            assert abs(np.linalg.norm(b1[:3]) - np.linalg.norm(b0[:3])) < 1e-10

    def test_conserved_components(self, rng):
        for lam in (0.0, 1.28):
            p = dyn.AdiabatParams(OM_A, OM_B, 0.0069, lam, n_seg=64)
            b0 = random_valid_b(rng)
            b1, amap, _ = dyn.adiabat_propagate(p, J, b0)
            assert b1[3] == pytest.approx(b0[3], abs=1e-14)
            assert b1[4] == pytest.approx(b0[4], abs=1e-14)
            assert np.abs(amap.M[3:, :3]).max() == 0.0
            assert np.abs(amap.M[:3, 3:]).max() == 0.0

    def test_segment_convergence_order(self):
        # midpoint sampling of the ramp converges at second order
        b0 = gibbs_b(OM_B, J, 7.5)
        p = lambda n: dyn.AdiabatParams(OM_B, OM_A, 0.01478, 0.0, n_seg=n)
        b_n = {n: dyn.adiabat_propagate(p(n), J, b0)[0]
               for n in (64, 128, 256)}
        d1 = np.linalg.norm(b_n[128] - b_n[64])
        d2 = np.linalg.norm(b_n[256] - b_n[128])
        order = np.log2(d1 / d2)
        assert order > 1.8

    def test_positivity_guard(self):
        bad = np.array([0.34, 0.0, 0.0, 0.0, -0.5])   # eigenvalue < 0
        p = dyn.AdiabatParams(OM_B, OM_A, 0.01, 0.0, n_seg=8)
        with pytest.raises(NonPhysicalState):
            dyn.adiabat_propagate(p, J, bad)


class TestIsochoreGenerator:
    def test_gibbs_fixed_point_random(self, rng):
        for _ in range(20):
            omega = rng.uniform(1.0, 15.0)
            jj = rng.uniform(0.0, 4.0)
            T = rng.uniform(0.5, 10.0)
            G, g = dyn.isochore_generator(
                dyn.IsochoreParams(omega, T, 1.0, 0.0), jj)
            b_star = gibbs_b_expm(omega, jj, T)
            assert np.abs(G @ b_star + g).max() < 1e-10

    def test_closure(self):
        for iso in (HOT, COLD):
            fn = dyn.liouvillian_action(iso.omega, J, iso.T, iso.Gamma,
                                        iso.gamma)
            assert dyn.closure_residual(fn) < 1e-12

    def test_pure_dephasing_conserves_energy(self, rng):
        G, g = dyn.isochore_generator(
            dyn.IsochoreParams(OM_B, 7.5, 0.0, 0.05), J)
        h = np.array([OM_B, J, 0.0, 0.0, 0.0])
        for _ in range(10):
            b = random_valid_b(rng)
            assert abs(h @ (G @ b + g)) < 1e-12

    def test_relaxation_eigenvalue_matches_gamma(self):
        # slowest population-relaxation rate is Gamma by construction
        for iso in (HOT, COLD, dyn.IsochoreParams(3.0, 2.0, 0.5, 0.0)):
            G, _ = dyn.isochore_generator(
                dyn.IsochoreParams(iso.omega, iso.T, iso.Gamma, 0.0), J)
            w = np.linalg.eigvals(G)
            real_modes = w[np.abs(w.imag) < 1e-9]
            assert np.min(np.abs(-real_modes.real - iso.Gamma)) < 1e-10

    def test_monotone_energy_relaxation(self):
        b = gibbs_b(OM_B, J, 0.8)    # far below hot equilibrium
        prop = dyn.isochore_propagator(HOT, J)
        energies = []
        for t in np.linspace(0.0, 4.0, 40):
            energies.append(energy(prop.affine(float(t)).apply(b), OM_B, J))
        diffs = np.diff(energies)
        assert np.all(diffs > -1e-12)

    def test_degenerate_zero_basis_invariance(self, rng):
        # mixing the two zero-energy eigenvectors must not change the
        # projected generator (only spectral projectors may matter)
        from spinotto.algebra import energy_eigensystem

        iso = HOT
        evals, v = energy_eigensystem(hamiltonian(iso.omega, J))
        theta, phi = rng.uniform(0, 2 * np.pi, 2)
        u = np.array([[np.cos(theta), -np.sin(theta) * np.exp(1j * phi)],
                      [np.sin(theta) * np.exp(-1j * phi), np.cos(theta)]])
        mixed = v.copy()
        mixed[:, 1:3] = v[:, 1:3] @ u

        gap = evals[0] - evals[1]
        x = np.exp(-gap / iso.T)
        k = iso.Gamma / (1.0 + x)
        jumps = []
        for m in (mixed[:, 1], mixed[:, 2]):
            jumps.append((np.outer(m, mixed[:, 0].conj()), k))
            jumps.append((np.outer(mixed[:, 0], m.conj()), k * x))
            jumps.append((np.outer(mixed[:, 3], m.conj()), k))
            jumps.append((np.outer(m, mixed[:, 3].conj()), k * x))

        hmat = hamiltonian(iso.omega, J).matrix

        def apply(rho):
            out = -1j * (hmat @ rho - rho @ hmat)
            for L, rate in jumps:
                Ld = L.conj().T
                anti = Ld @ L
                out = out + rate * (L @ rho @ Ld
                                    - 0.5 * (anti @ rho + rho @ anti))
            inner = hmat @ rho - rho @ hmat
            return out - abs(iso.gamma) * (hmat @ inner - inner @ hmat)

        G_mixed, g_mixed = dyn.project_generator(apply)
        G_ref, g_ref = dyn.isochore_generator(iso, J)
        assert np.abs(G_mixed - G_ref).max() < 1e-12
        assert np.abs(g_mixed - g_ref).max() < 1e-12

    def test_invalid_temperature(self):
        with pytest.raises(InvalidTemperature):
            dyn.IsochoreParams(5.0, -1.0, 1.0)


class TestIsochorePropagate:
    def test_zero_time_is_identity(self):
        b0 = gibbs_b(OM_A, J, 4.0)
        b1, amap, _ = dyn.isochore_propagate(HOT, J, 0.0, b0)
        assert np.abs(amap.M - np.eye(5)).max() == 0.0
        assert np.abs(amap.c).max() == 0.0
        assert np.abs(b1 - b0).max() == 0.0

    def test_long_time_reaches_gibbs(self, rng):
        target = gibbs_b_expm(HOT.omega, J, HOT.T)
        for _ in range(5):
            b0 = random_valid_b(rng)
            b1, _, _ = dyn.isochore_propagate(HOT, J, 50.0 / HOT.Gamma, b0)
            assert np.abs(b1 - target).max() < 1e-8

    def test_matches_dense_oracle(self, rng):
        for iso in (HOT, COLD):
            for _ in range(5):
                b0 = random_valid_b(rng)
                tau = 0.37
                b1, _, _ = dyn.isochore_propagate(iso, J, tau, b0)
                b_ref = dense_isochore(b0, iso.omega, J, iso.T, iso.Gamma,
                                       iso.gamma, tau)
                assert np.abs(b1 - b_ref).max() < 1e-9

    def test_trace_samples_exact(self, rng):
        b0 = random_valid_b(rng)
        _, _, trace = dyn.isochore_propagate(HOT, J, 0.9, b0, n_samples=6)
        t, bs = trace
        for i, ti in enumerate(t):
            direct, _, _ = dyn.isochore_propagate(HOT, J, float(ti), b0)
            assert np.abs(bs[i] - direct).max() < 1e-10

    def test_coherence_decay_rate_equals_gamma_without_pure_dephasing(self):
        iso = dyn.IsochoreParams(OM_B, 7.5, 1.16748, 0.0)
        G, _ = dyn.isochore_generator(iso, J)
        w = np.linalg.eigvals(G)
        pair = w[np.abs(w.imag) > 1.0]
        assert np.abs(-pair.real - iso.Gamma).max() < 1e-10


class TestDephasingTimes:
    def test_t2_equals_t1_without_pure_dephasing(self):
        iso = dyn.IsochoreParams(OM_B, 7.5, 1.16748, 0.0)
        t1, t2, t2s = dyn.dephasing_times(iso, J)
        assert t1 == pytest.approx(1.0 / 1.16748, rel=1e-12)
        assert t2 == pytest.approx(t1, rel=1e-10)
        assert t2s == np.inf

    def test_pure_dephasing_only(self):
        iso = dyn.IsochoreParams(OM_B, 7.5, 0.0, 0.05)
        t1, t2, t2s = dyn.dephasing_times(iso, J)
        Om2 = OM_B ** 2 + J ** 2
        assert t2s == pytest.approx(1.0 / (2 * 0.05 * Om2), rel=1e-12)
        assert t2 == pytest.approx(t2s, rel=1e-9)
        assert t1 == np.inf

    def test_both_rates_zero(self):
        with pytest.raises(ZeroDivisionError):
            dyn.dephasing_times(dyn.IsochoreParams(OM_B, 7.5, 0.0, 0.0), J)

    def test_combined_rates(self):
        t1, t2, _ = dyn.dephasing_times(HOT, J)
        Om2 = OM_B ** 2 + J ** 2
        expected = 1.0 / (1.16748 + 2 * 0.05 * Om2)
        assert t2 == pytest.approx(expected, rel=1e-9)


class TestAffineMap:
    def test_composition_is_associative(self, rng):
        maps = []
        for _ in range(3):
            maps.append(dyn.AffineMap(rng.normal(size=(5, 5)),
                                      rng.normal(size=5)))
        a, b, c = maps
        left = (a @ b) @ c
        right = a @ (b @ c)
        assert np.abs(left.M - right.M).max() < 1e-12
        assert np.abs(left.c - right.c).max() < 1e-12

    def test_composition_matches_sequential_application(self, rng):
        hot = dyn.isochore_propagator(HOT, J).affine(0.3)
        ad = dyn.adiabat_map(dyn.AdiabatParams(OM_B, OM_A, 0.01, 0.5,
                                               n_seg=32), J)
        b0 = random_valid_b(rng)
        assert np.abs((ad @ hot).apply(b0)
                      - ad.apply(hot.apply(b0))).max() < 1e-12

    def test_maps_preserve_positivity(self, rng):
        from spinotto.algebra import state_from_b

        hot = dyn.isochore_propagator(HOT, J).affine(0.5)
        ad = dyn.adiabat_map(dyn.AdiabatParams(OM_B, OM_A, 0.01478, 0.0,
                                               n_seg=64), J)
        for m in (hot, ad):
            for _ in range(100):
                state_from_b(m.apply(random_valid_b(rng)))


def test_adiabat_params_validation():
    with pytest.raises(ValueError):
        dyn.AdiabatParams(1.0, 2.0, -0.1)
    with pytest.raises(ValueError):
        dyn.AdiabatParams(1.0, 2.0, 0.1, Lambda=-1.0)
    with pytest.raises(ValueError):
        dyn.AdiabatParams(1.0, 2.0, 0.1, n_seg=0)
    with pytest.raises(ValueError):
        dyn.AdiabatParams(1.0, 2.0, 0.1, ladder="cubic")


def test_segment_ladder_conventions():
    mid = dyn.segment_ladder(0.0, 1.0, 4, "midpoint")
    assert np.abs(mid - np.array([0.125, 0.375, 0.625, 0.875])).max() < 1e-15
    end = dyn.segment_ladder(0.0, 1.0, 4, "endpoint")
    assert np.abs(end - np.array([0.25, 0.5, 0.75, 1.0])).max() < 1e-15
