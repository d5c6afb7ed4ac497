import numpy as np
import pytest

from eetsim import (
    DensityMatrix,
    RstState,
    NoiseSpec,
    TimeGrid,
    assemble_sigma,
    build_aggregate,
    initial_rst_mixed,
    initial_rst_pure,
    make_chain,
    normalize_sigma,
    propagate_classical_rst,
    propagate_lindblad,
    pure_density,
    run_kubo_ensemble,
)
from eetsim.errors import NormCollapse, NotPositive, ZeroState


class TestInitialStates:
    def test_localized_real_start(self):
        rst = initial_rst_pure([1.0, 0.0])
        assert rst.r[0, 0] == 1.0 and np.abs(rst.r).sum() == 1.0
        assert np.all(rst.s == 0.0) and np.all(rst.t == 0.0)
        sigma = assemble_sigma(rst).data
        assert np.array_equal(sigma, np.diag([1.0, 0.0]).astype(complex))

    def test_complex_superposition_bilinears(self):
        c = np.array([1.0, 1.0j]) / np.sqrt(2.0)
        rst = initial_rst_pure(c)
        assert np.allclose(rst.r, np.diag([0.5, 0.0]))
        assert np.allclose(rst.s, np.diag([0.0, 0.5]))
        assert np.allclose(rst.t, [[0.0, 0.5], [0.0, 0.0]])
        sigma = assemble_sigma(rst).data
        assert np.isclose(sigma[0, 1], -0.5j)
        assert np.allclose(sigma, np.outer(c, c.conj()))

    def test_zero_state_rejected(self):
        with pytest.raises(ZeroState):
            initial_rst_pure([0.0, 0.0])

    def test_mixed_maximally_mixed(self):
        rst = initial_rst_mixed(DensityMatrix(0.5 * np.eye(2)))
        assert np.allclose(rst.r, 0.5 * np.eye(2))
        assert np.allclose(rst.s, 0.0)
        assert np.allclose(rst.t, 0.0)
        assert np.allclose(assemble_sigma(rst).data, 0.5 * np.eye(2))

    def test_mixed_reduces_to_pure(self):
        pure = initial_rst_pure([1.0, 0.0])
        mixed = initial_rst_mixed(pure_density([1.0, 0.0]))
        assert np.allclose(pure.r, mixed.r)
        assert np.allclose(pure.s, mixed.s)
        assert np.allclose(pure.t, mixed.t)

    def test_mixture_reconstructs_density(self):
        psi_a = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0)
        psi_b = np.array([1.0, -1.0j, 1.0 + 1.0j]) / 2.0
        # orthogonalize b against a
        psi_b = psi_b - np.vdot(psi_a, psi_b) * psi_a
        psi_b = psi_b / np.sqrt(np.vdot(psi_b, psi_b).real)
        rho = 0.7 * np.outer(psi_a, psi_a.conj()) + 0.3 * np.outer(psi_b, psi_b.conj())
        rst = initial_rst_mixed(DensityMatrix(rho))
        assert np.abs(assemble_sigma(rst).data - rho).max() < 1e-12

    def test_not_positive_rejected(self):
        bad = DensityMatrix(np.diag([1.01, -0.01]), psd_tol=0.1)
        with pytest.raises(NotPositive):
            initial_rst_mixed(bad)


class TestAssembleNormalize:
    def test_zero_moments(self):
        zero = RstState(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
        assert np.all(assemble_sigma(zero).data == 0.0)

    def test_symmetric_t_gives_real_sigma(self):
        r = np.array([[0.5, 0.1], [0.1, 0.3]])
        s = np.array([[0.2, 0.0], [0.0, 0.1]])
        t = np.array([[0.1, 0.2], [0.2, 0.4]])
        rst = RstState(r, s, t)
        assert np.abs(assemble_sigma(rst).data.imag).max() == 0.0

    def test_normalize_diagonal(self):
        dm, norm = normalize_sigma(np.diag([2.0, 2.0]).astype(complex))
        assert norm == 4.0
        assert np.allclose(dm.data, np.diag([0.5, 0.5]))

    def test_normalize_unit_pure(self):
        c = np.array([0.6, 0.8j])
        dm, norm = normalize_sigma(np.outer(c, c.conj()))
        assert np.isclose(norm, 1.0)
        assert np.allclose(dm.data, np.outer(c, c.conj()))

    def test_negative_trace_collapses(self):
        with pytest.raises(NormCollapse):
            normalize_sigma(np.diag([-0.05, -0.05]).astype(complex))


class TestPropagation:
    def test_single_site_population_constant(self):
        model = build_aggregate([4.0], np.zeros((1, 1)), [0.0])
        grid = TimeGrid(0.0, 5.0, 51)
        traj = propagate_classical_rst(model, initial_rst_pure([1.0 + 0.0j]), grid)
        assert np.abs(traj.populations() - 1.0).max() < 1e-12
        assert np.abs(traj.norm_factor - 1.0).max() < 1e-10

    def test_single_site_noise_preserves_modulus(self):
        model = build_aggregate([3.0], np.zeros((1, 1)), [2.0])
        grid = TimeGrid(0.0, 4.0, 41)
        traj = propagate_classical_rst(model, initial_rst_pure([1.0 + 0.0j]), grid)
        assert np.abs(traj.norm_factor - 1.0).max() < 1e-10

    def test_uncoupled_dimer_matches_quantum(self):
        # V = 0: dephasing acts identically in both theories
        model = build_aggregate([0.0, 0.0], np.zeros((2, 2)), [1.0, 1.0])
        rho0 = DensityMatrix(np.full((2, 2), 0.5))
        grid = TimeGrid(0.0, 5.0, 51)
        classical = propagate_classical_rst(model, initial_rst_mixed(rho0), grid)
        quantum = propagate_lindblad(model, rho0, grid)
        diff = max(
            np.abs(a.data - b.data).max()
            for a, b in zip(classical.sigma_normalized, quantum.states)
        )
        assert diff < 1e-10
        assert np.abs(classical.coherence(0, 1) - 0.5 * np.exp(-grid.times)).max() < 1e-8

    def test_rs_symmetry_preserved(self):
        model, init = make_chain(7, 1.0, 8.0, 0.7, 3)
        grid = TimeGrid(0.0, 6.0, 31)
        traj = propagate_classical_rst(model, initial_rst_pure(init.amplitudes), grid)
        for st in traj.states:
            scale = max(1.0, np.abs(st.r).max(), np.abs(st.s).max())
            assert np.abs(st.r - st.r.T).max() < 1e-10 * scale
            assert np.abs(st.s - st.s.T).max() < 1e-10 * scale

    def test_sigma_positive_semidefinite(self):
        model, init = make_chain(4, 1.0, 2.0, 0.5, 1)
        grid = TimeGrid(0.0, 8.0, 41)
        traj = propagate_classical_rst(model, initial_rst_pure(init.amplitudes), grid)
        for st in traj.states:
            sigma = assemble_sigma(st)
            assert sigma.min_eigenvalue() > -1e-8

    def test_normalized_output_unit_trace(self):
        model, init = make_chain(3, 1.0, 1.0, 0.3, 0)
        grid = TimeGrid(0.0, 5.0, 26)
        traj = propagate_classical_rst(model, initial_rst_pure(init.amplitudes), grid)
        for dm in traj.sigma_normalized:
            assert abs(dm.trace - 1.0) < 1e-12
        assert np.all(traj.norm_factor > 0.0)

    def test_energy_shift_changes_dynamics(self):
        # contrast with the quantum invariance: absolute frequency matters here
        grid = TimeGrid(0.0, 5.0, 51)
        runs = []
        for eps in (40.0, 1.0):
            model, init = make_chain(2, 1.0, eps, 1.0, 0)
            traj = propagate_classical_rst(model, initial_rst_pure(init.amplitudes), grid)
            runs.append(traj.populations())
        assert np.abs(runs[0] - runs[1]).max() > 1e-4

    def test_matches_kubo_ensemble(self):
        # the trajectory ensemble is the defining model; the moment system
        # must reproduce it within Monte-Carlo resolution
        model, init = make_chain(2, 1.0, 10.0, 1.0, 0)
        grid = TimeGrid(0.0, 4.0, 41)
        traj = propagate_classical_rst(model, initial_rst_pure(init.amplitudes), grid)
        sigma = np.array([assemble_sigma(st).data for st in traj.states])
        ens = run_kubo_ensemble(model, init.amplitudes, grid,
                                NoiseSpec(gamma=model.gamma, seed=777), n_traj=2000)
        err = np.abs(ens.mean_bilinear - sigma)
        bound = 5.0 * ens.standard_error() + 1e-9
        assert np.all(err <= bound)
