import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvdual.model import (
    DIM,
    TWO_PI,
    DriveConfig,
    FieldVector,
    NvParameters,
    build_ground_hamiltonian,
    build_level_model,
    ground_dephasing_operator,
    orientation_projections,
)

D_GS = 2.87e9
A_PAR = -2.16e6
A_PERP = -2.7e6
P_QUAD = -4.95e6


def eigvals_hz(p, b=FieldVector()):
    return np.linalg.eigvalsh(build_ground_hamiltonian(p, b)) / TWO_PI


class TestNvParameters:
    def test_paper_defaults(self):
        p = NvParameters()
        assert p.d_gs == 2.87e9
        assert p.g_s == 2.003
        assert p.g_i == 0.403
        assert p.a_par == -2.16e6
        assert p.a_perp == -2.7e6
        assert p.p_quad == -4.95e6
        assert p.mu_b == 13.996e9
        assert p.mu_n == 7.622e6

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            NvParameters(gamma_rad=-1.0)
        with pytest.raises(ValueError):
            NvParameters(singlet_branching_to_0=1.5)

    def test_drive_validation(self):
        with pytest.raises(ValueError):
            DriveConfig(omega_rf=1e6, f_rf=0.0)
        with pytest.raises(ValueError):
            DriveConfig(omega_mw=-1.0)


class TestGroundHamiltonian:
    @given(
        st.floats(-2e-3, 2e-3), st.floats(-2e-3, 2e-3), st.floats(-2e-3, 2e-3),
        st.floats(0, 15e6), st.floats(-15e6, 15e6),
    )
    @settings(max_examples=50, deadline=None)
    def test_hermitian_for_all_inputs(self, bx, by, bz, ex, ey):
        p = NvParameters(e_x=ex, e_y=ey)
        h = build_ground_hamiltonian(p, FieldVector(bx=bx, by=by, bz=bz))
        scale = max(np.linalg.norm(h), 1.0)
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * scale

    @given(st.floats(-1e-3, 1e-3), st.floats(0, 10e6))
    @settings(max_examples=20, deadline=None)
    def test_trace_is_quadrupole_only(self, bz, ex):
        # Sz^2 - S^2/3 and all Zeeman/strain/hyperfine terms are traceless on
        # the 9-dim space; only P Iz^2 survives: trace = 2 pi * 6 P.
        h = build_ground_hamiltonian(NvParameters(e_x=ex), FieldVector(bz=bz))
        assert np.trace(h).real == pytest.approx(TWO_PI * 6 * P_QUAD, rel=1e-12)

    def test_zero_field_gaps_cluster_at_d(self):
        vals = eigvals_hz(NvParameters())
        lower, upper = vals[:3], vals[3:]
        gaps = upper[:, None] - lower[None, :]
        assert np.all(np.abs(gaps - D_GS) < 12e6)

    def test_zero_field_degeneracy_pattern(self):
        # E = 0: hyperfine pattern from A_par and P alone, groups (1, 2, 2, 2, 2)
        vals = eigvals_hz(NvParameters())
        groups = [[vals[0]]]
        for v in vals[1:]:
            if v - groups[-1][-1] < 0.2e6:
                groups[-1].append(v)
            else:
                groups.append([v])
        sizes = sorted(len(g) for g in groups)
        assert sizes == [1, 2, 2, 2, 2]
        for g in groups:
            assert max(g) - min(g) < 10e3  # A_perp second-order scale

    @staticmethod
    def _expected_levels(e_strain):
        # Pair blocks {|+1,n>, |-1,n>} have diagonal D + P n^2 +/- A_par n and
        # strain coupling E, so eigenvalues D + P n^2 +/- sqrt((A_par n)^2 + E^2).
        levels = []
        for n in (-1, 0, 1):
            levels.append(-2.0 / 3.0 * D_GS + P_QUAD * n * n)
            gap = math.hypot(A_PAR * n, e_strain)
            for sign in (-1, 1):
                levels.append(D_GS / 3.0 + P_QUAD * n * n + sign * gap)
        return np.sort(levels)

    def test_strain_spectrum_reduced_model(self):
        # With the transverse hyperfine coupling off, the analytic block
        # diagonalization is exact: m_I = 0 pair splits by 2E, m_I = +/-1
        # pairs by 2 sqrt(A_par^2 + E^2).
        vals = eigvals_hz(NvParameters(e_x=2e6, a_perp=0.0))
        expected = self._expected_levels(2e6)
        assert np.allclose(vals, expected, atol=1e-3 * np.max(np.abs(expected)) * 1e-6)
        assert np.max(np.abs(vals - expected)) < 5.0  # Hz

    def test_strain_splittings_full_model_tolerance(self):
        # Full default parameters: A_perp shifts the pair gaps at the kHz scale.
        vals = eigvals_hz(NvParameters(e_x=2e6))
        expected = self._expected_levels(2e6)
        assert np.max(np.abs(np.sort(vals) - expected)) < 10e3

    def test_axial_zeeman_gap(self):
        # 1 mT, E = 0: m_s = +/-1 (m_I = 0) gap = 2 g_s mu_B B = 56.068 MHz
        p = NvParameters(a_perp=0.0)
        vals = eigvals_hz(p, FieldVector(bz=1e-3))
        upper = np.sort(vals[3:])
        expected = 2 * 2.003 * 13.996e9 * 1e-3
        # the m_I = 0 levels carry no hyperfine/quadrupole shift: they are the
        # extremal +/- g_s mu_B B levels of each electron branch
        m_i0_gap = upper[5] - upper[2]
        assert m_i0_gap == pytest.approx(expected, rel=1e-9)


class TestLevelModel:
    def test_block_diagonal_without_drives(self, params_strained):
        d = DriveConfig(omega_mw=0.0, omega_rf=0.0, omega_opt=0.0)
        m = build_level_model(params_strained, d)
        h = m.h_drift
        assert np.max(np.abs(h[0:9, 9:19])) == 0.0
        assert np.max(np.abs(h[9:18, 18:19])) == 0.0

    def test_hermitian(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        assert np.max(np.abs(m.h_drift - m.h_drift.conj().T)) < 1e-10
        assert np.max(np.abs(m.h_rf_coupling - m.h_rf_coupling.conj().T)) < 1e-10

    def test_collapse_channel_count(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        # 9 radiative + 6 ISC(ms=+/-1) + 3 ISC(ms=0) + 9 singlet exits
        assert len(m.collapse_ops) == 27

    def test_collapse_rate_accounting(self, params_strained, drives_default):
        p = params_strained
        m = build_level_model(p, drives_default)
        total = sum(np.abs(op) ** 2 for op in m.collapse_ops)
        # each excited level decays at gamma_rad + its ISC rate
        assert total[0, 9] == pytest.approx(p.gamma_rad)
        assert total[18, 9] == pytest.approx(p.gamma_isc_pm1)
        assert total[18, 12] == pytest.approx(p.gamma_isc_0)
        # singlet exit rates sum to gamma_singlet
        assert np.sum(total[:, 18]) == pytest.approx(p.gamma_singlet, rel=1e-12)
        # branching: 0.8 into m_s = 0, remainder split equally
        assert np.sum(total[3:6, 18]) == pytest.approx(0.8 * p.gamma_singlet, rel=1e-12)
        assert np.sum(total[0:3, 18]) == pytest.approx(0.1 * p.gamma_singlet, rel=1e-12)

    def test_fluorescence_projector(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        proj = m.fluorescence_projector
        assert np.max(np.abs(proj @ proj - proj)) < 1e-14
        assert np.trace(proj).real == pytest.approx(9.0)

    def test_mw_coupling_equal_magnitude(self, params_strained):
        d = DriveConfig(omega_mw=0.5e6, omega_rf=0.0, omega_opt=0.0)
        m = build_level_model(params_strained, d)
        up = abs(m.h_drift[0, 3])    # |+1,+1><0,+1|
        down = abs(m.h_drift[6, 3])  # |-1,+1><0,+1|
        assert up == pytest.approx(down, rel=1e-12)
        assert up == pytest.approx(TWO_PI * 0.25e6, rel=1e-12)

    def test_rf_coupling_is_longitudinal(self, params_strained, drives_default):
        m = build_level_model(params_strained, drives_default)
        diag = np.diagonal(m.h_rf_coupling).real / TWO_PI
        expected = drives_default.omega_rf * np.array(
            [1, 1, 1, 0, 0, 0, -1, -1, -1] * 2 + [0], dtype=float
        )
        assert np.allclose(diag, expected)
        assert np.max(np.abs(m.h_rf_coupling - np.diag(np.diagonal(m.h_rf_coupling)))) == 0.0

    def test_counter_rotating_flag_adds_spin_flip_terms(self, params_strained, drives_default):
        m_rwa = build_level_model(params_strained, drives_default)
        m_full = build_level_model(params_strained, drives_default,
                                   keep_counter_rotating=True)
        # the A_perp flip-flop couples the m_s = 0 block to m_s = +/-1
        block_rwa = m_rwa.h_drift[3:6, 0:3]
        block_full = m_full.h_drift[3:6, 0:3]
        assert np.max(np.abs(block_rwa)) > 0  # MW coupling lives there
        assert np.max(np.abs(block_full - block_rwa)) > TWO_PI * 1e6

    def test_optical_frame_choice(self, params_strained, drives_default):
        m_res = build_level_model(params_strained, drives_default)
        m_lit = build_level_model(params_strained, drives_default,
                                  resonant_optical_frame=False)
        # literal frame leaves the d_es - d_gs mismatch on excited m_s = +/-1
        diff = (m_lit.h_drift - m_res.h_drift).real
        assert diff[9, 9] == pytest.approx(
            TWO_PI * (params_strained.d_es - params_strained.d_gs), rel=1e-12
        )
        assert abs(diff[12, 12]) < 1e-6

    def test_dephasing_operator_shape(self):
        op = ground_dephasing_operator()
        assert op.shape == (DIM, DIM)
        assert np.allclose(np.diagonal(op).real[:9], [1, 1, 1, 0, 0, 0, -1, -1, -1])
        assert np.max(np.abs(op[9:, 9:])) == 0.0


class TestOrientationProjections:
    def test_aligned_class(self):
        b = 0.5e-3
        u = b / math.sqrt(3)
        fields = orientation_projections(FieldVector(bx=u, by=u, bz=u))
        assert fields[0].bz == pytest.approx(b, rel=1e-12)
        assert fields[0].bx == pytest.approx(0.0, abs=1e-18)

    def test_misaligned_classes_third(self):
        b = 0.5e-3
        u = b / math.sqrt(3)
        fields = orientation_projections(FieldVector(bx=u, by=u, bz=u))
        for f in fields[1:]:
            assert abs(f.bz) == pytest.approx(b / 3, rel=1e-12)
            assert f.bx == pytest.approx(b * math.sqrt(8) / 3, rel=1e-12)

    def test_zero_field(self):
        for f in orientation_projections(FieldVector()):
            assert f.bz == 0.0 and f.bx == 0.0

    def test_zero_axis_rejected(self):
        with pytest.raises(ValueError):
            orientation_projections(FieldVector(bz=1e-3), axes=[(0.0, 0.0, 0.0)])
