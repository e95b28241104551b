import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvdual import (
    DriveConfig,
    EvolutionSettings,
    LindbladIntegrityError,
    NvParameters,
    build_level_model,
    evolve,
    fluorescence,
    initial_state_unpolarized,
    lindblad_rhs,
    time_averaged_fluorescence,
)
from nvdual.dynamics import check_density_matrix, hermiticity_defect, liouvillian_matrix
from nvdual.model import LevelModel
from nvdual.spinops import expm

from conftest import two_level_lindblad_system


def expm_propagate(h, collapse_ops, rho0, t):
    """Vectorized-Liouvillian propagation oracle."""
    n = rho0.shape[0]
    liou = liouvillian_matrix(h, collapse_ops)
    vec = rho0.flatten(order="F")
    out = expm(liou * t) @ vec
    return out.reshape(n, n, order="F")


def small_model(with_rf=True, collapse=True, dephase_op=True):
    """3-level test system with a cosine-modulated diagonal term."""
    h = 2 * math.pi * np.diag([0.0, 3.0e6, 1.0e6]).astype(complex)
    h[0, 1] = h[1, 0] = 2 * math.pi * 0.4e6
    h_rf = 2 * math.pi * 1.0e6 * np.diag([0.0, 1.0, -0.5]).astype(complex)
    ops = []
    if collapse:
        op1 = np.zeros((3, 3), complex)
        op1[2, 1] = math.sqrt(3.0e6)
        op2 = np.zeros((3, 3), complex)
        op2[0, 2] = math.sqrt(2.0e6)
        ops += [op1, op2]
        if dephase_op:
            ops.append(math.sqrt(2 * 1e5) * np.diag([0.0, 1.0, -1.0]).astype(complex))
    proj = np.diag([0.0, 1.0, 0.0]).astype(complex)
    if not with_rf:
        h_rf = np.zeros_like(h_rf)
    return LevelModel(h_drift=h, h_rf_coupling=h_rf, collapse_ops=tuple(ops),
                      fluorescence_projector=proj, f_rf=5e6)


def small_drives(omega_rf=1.0e6):
    return DriveConfig(f_mw=0.0, omega_mw=0.0, f_rf=5e6, omega_rf=omega_rf,
                       omega_opt=0.0)


def small_settings(dt_max=2e-9):
    return EvolutionSettings(dt_max=dt_max, transient_time=1e-6,
                             average_periods=2, dephasing_rate=0.0)


def rho_mixed(n):
    return np.eye(n, dtype=complex) / n


class TestInitialState:
    def test_trace_one(self):
        rho = initial_state_unpolarized()
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)

    def test_ground_block_uniform(self):
        rho = initial_state_unpolarized()
        assert np.allclose(np.diagonal(rho)[:9].real, 1.0 / 9.0)

    def test_excited_and_singlet_empty(self):
        rho = initial_state_unpolarized()
        assert np.max(np.abs(np.diagonal(rho)[9:])) == 0.0
        assert np.max(np.abs(rho - np.diag(np.diagonal(rho)))) == 0.0


class TestLindbladRhs:
    def test_stationary_eigenprojector(self):
        h = np.diag([1.0, 5.0, 9.0]).astype(complex) * 1e6
        proj = np.zeros((3, 3), complex)
        proj[1, 1] = 1.0
        assert np.max(np.abs(lindblad_rhs(proj, h, []))) < 1e-12

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_trace_preserving(self, seed):
        rng = np.random.default_rng(seed)
        n = 4
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = 0.5 * (a + a.conj().T)
        ops = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(3)]
        r = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho = r @ r.conj().T
        rho /= np.trace(rho)
        scale = max(np.max(np.abs(lindblad_rhs(rho, h, ops))), 1.0)
        assert abs(np.trace(lindblad_rhs(rho, h, ops))) < 1e-12 * scale

    def test_amplitude_damping_closed_form(self):
        gamma = 2.0e6
        h, ops = two_level_lindblad_system(gamma)
        rho = np.array([[0.4, 0.2 - 0.1j], [0.2 + 0.1j, 0.6]], dtype=complex)
        out = lindblad_rhs(rho, np.zeros_like(h), ops)
        # textbook 2-level damping: pop decays at gamma, coherence at gamma/2
        assert out[1, 1].real == pytest.approx(-gamma * 0.6, rel=1e-12)
        assert out[0, 0].real == pytest.approx(gamma * 0.6, rel=1e-12)
        assert out[0, 1] == pytest.approx(-0.5 * gamma * rho[0, 1], rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lindblad_rhs(np.eye(2, dtype=complex), np.eye(3, dtype=complex), [])


class TestEvolveOracles:
    def test_zero_time_identity(self):
        m = small_model()
        rho0 = rho_mixed(3)
        out = evolve(rho0, m, small_drives(), small_settings(), 0.0)
        assert np.array_equal(out, rho0)

    def test_expm_oracle_small(self):
        m = small_model(with_rf=False)
        d = small_drives(omega_rf=0.0)
        rho0 = rho_mixed(3)
        t = 0.8e-6
        out = evolve(rho0, m, d, small_settings(dt_max=1e-9), t)
        ref = expm_propagate(m.h_drift, m.collapse_ops, rho0, t)
        assert np.max(np.abs(out - ref)) < 1e-8

    def test_expm_oracle_full_19_level(self, params_strained):
        d = DriveConfig(f_mw=2.8705e9, omega_rf=0.0)
        m = build_level_model(params_strained, d)
        s = EvolutionSettings(dt_max=1e-9, dephasing_rate=2 * math.pi * 0.3e6)
        rho0 = initial_state_unpolarized()
        t = 0.5e-6
        out = evolve(rho0, m, d, s, t)
        from nvdual.dynamics import _collapse_list

        ref = expm_propagate(m.h_drift, _collapse_list(m, s), rho0, t)
        assert np.max(np.abs(out - ref)) < 1e-8

    def test_piecewise_cos_oracle(self):
        # piecewise-constant propagator with 10^3 segments per RF period
        m = small_model()
        d = small_drives()
        rho0 = rho_mixed(3)
        periods = 3
        t_final = periods / d.f_rf
        out = evolve(rho0, m, d, small_settings(dt_max=1e-9), t_final)
        segments = 1000
        dt = (1.0 / d.f_rf) / segments
        vec = rho0.flatten(order="F")
        for k in range(segments * periods):
            t_mid = (k + 0.5) * dt
            h = m.h_drift + m.h_rf_coupling * math.cos(2 * math.pi * d.f_rf * t_mid)
            vec = expm(liouvillian_matrix(h, m.collapse_ops) * dt) @ vec
        ref = vec.reshape(3, 3, order="F")
        assert np.max(np.abs(out - ref)) < 1e-6

    def test_dense_fallback_matches_packed(self):
        # an operator with two nonzero entries forces the dense path
        m = small_model()
        bad = np.zeros((3, 3), complex)
        bad[0, 1] = bad[1, 2] = math.sqrt(0.5e6)
        m_dense = LevelModel(h_drift=m.h_drift, h_rf_coupling=m.h_rf_coupling,
                             collapse_ops=m.collapse_ops + (bad,),
                             fluorescence_projector=m.fluorescence_projector,
                             f_rf=m.f_rf)
        d = small_drives(omega_rf=0.0)
        rho0 = rho_mixed(3)
        t = 0.4e-6
        out = evolve(rho0, m_dense, d, small_settings(dt_max=1e-9), t)
        ref = expm_propagate(m_dense.h_drift, m_dense.collapse_ops, rho0, t)
        assert np.max(np.abs(out - ref)) < 1e-8


class TestEvolveInvariants:
    def test_trace_hermiticity_positivity(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        s = EvolutionSettings(dt_max=4e-9)
        rho = evolve(initial_state_unpolarized(), m, drives_default, s, 5e-6)
        assert abs(np.trace(rho).real - 1.0) < 1e-8
        assert hermiticity_defect(rho) < 1e-10
        assert np.linalg.eigvalsh(rho).min() >= -1e-6

    def test_unitary_purity_conserved(self):
        # drives on, dissipation off: trace(rho^2) is constant
        m = small_model(collapse=False)
        d = small_drives()
        psi = np.array([1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2)
        rho0 = np.outer(psi, psi.conj())
        out = evolve(rho0, m, d, small_settings(dt_max=1e-9), 2e-6)
        purity0 = np.trace(rho0 @ rho0).real
        purity1 = np.trace(out @ out).real
        assert purity1 == pytest.approx(purity0, abs=1e-8)

    def test_integrity_abort_on_coarse_step(self):
        # a 50 ns step is unstable against the 83 MHz radiative decay
        p = NvParameters()
        d = DriveConfig()
        m = build_level_model(p, d)
        s = EvolutionSettings(dt_max=50e-9)
        with pytest.raises(LindbladIntegrityError):
            evolve(initial_state_unpolarized(), m, d, s, 20e-6)

    def test_check_density_matrix_rejects_bad_trace(self):
        rho = np.eye(3, dtype=complex)
        with pytest.raises(LindbladIntegrityError):
            check_density_matrix(rho)

    def test_halving_dt_converged(self, params_strained):
        # order-4 convergence evidence at the stiffest acceptance corner
        p = NvParameters(e_x=15e6)
        d = DriveConfig(f_mw=2.87e9 - 30e6)
        m = build_level_model(p, d)
        vals = []
        for dt_max in (2e-9, 1e-9):
            s = EvolutionSettings(dt_max=dt_max, transient_time=20e-6,
                                  average_periods=10)
            vals.append(time_averaged_fluorescence(m, d, s))
        assert abs(vals[0] - vals[1]) / abs(vals[1]) < 1e-5


class TestFluorescence:
    def test_unpolarized_ground_is_dark(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        assert fluorescence(initial_state_unpolarized(), m) == 0.0

    def test_pure_excited_is_bright(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        rho = np.zeros((19, 19), complex)
        rho[10, 10] = 1.0
        assert fluorescence(rho, m) == pytest.approx(1.0)

    def test_steady_pumped_state_bounded(self, params_strained, drives_default, fast_settings):
        m = build_level_model(params_strained, drives_default)
        rho = evolve(initial_state_unpolarized(), m, drives_default, fast_settings, 10e-6)
        value = fluorescence(rho, m)
        assert 0.0 < value < 1.0


class TestTimeAveragedFluorescence:
    def test_baseline_independent_of_carrier(self, params_strained, fast_settings):
        values = []
        for f_mw in (2.85e9, 2.87e9, 2.89e9):
            d = DriveConfig(f_mw=f_mw, omega_mw=0.0)
            m = build_level_model(params_strained, d)
            values.append(time_averaged_fluorescence(m, d, fast_settings))
        assert max(values) - min(values) < 1e-10

    def test_on_resonance_dip(self, params_strained):
        # MW at the m_I = 0 transition (D + E) must reduce fluorescence
        s = EvolutionSettings(dt_max=4e-9, transient_time=10e-6, average_periods=4)
        d_off = DriveConfig(omega_mw=0.0, omega_rf=0.0)
        m_off = build_level_model(params_strained, d_off)
        base = time_averaged_fluorescence(m_off, d_off, s)
        d_on = DriveConfig(f_mw=2.87e9 + 2e6, omega_mw=0.5e6, omega_rf=0.0)
        m_on = build_level_model(params_strained, d_on)
        assert time_averaged_fluorescence(m_on, d_on, s) < base

    def test_averaging_window_convergence(self, params_strained):
        # doubling the averaging window is inert once the transient has passed
        p = NvParameters(e_x=2e6)
        d = DriveConfig(f_mw=2.8705e9)
        m = build_level_model(p, d)
        vals = []
        for periods in (10, 20):
            s = EvolutionSettings(dt_max=4e-9, transient_time=20e-6,
                                  average_periods=periods)
            vals.append(time_averaged_fluorescence(m, d, s))
        assert abs(vals[1] - vals[0]) / abs(vals[0]) < 1e-4

    def test_deterministic(self, params_strained, drives_default, fast_settings):
        m = build_level_model(params_strained, drives_default)
        v1 = time_averaged_fluorescence(m, drives_default, fast_settings)
        v2 = time_averaged_fluorescence(m, drives_default, fast_settings)
        assert v1 == v2
