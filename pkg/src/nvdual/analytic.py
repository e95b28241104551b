"""Closed-form reduced models of the RF-modulated m_s = +/-1 level pair.

Covers the eigenlevel curves versus axial field, the two-level
Landau-Zener Hamiltonian of the strain-coupled pair, its dressed
(Bessel-weighted) effective couplings, the sideband ladder, and a
piecewise-exact Floquet propagator used as the numerical oracle for all
of them.  Frequencies in Hz unless a matrix is returned (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import jv

from .model import TWO_PI, FieldVector, NvParameters, build_ground_hamiltonian
from .spinops import expm


@dataclass(frozen=True)
class TwoLevelParams:
    """Strain-coupled |-1, m_I> / |+1, m_I> pair under longitudinal RF drive."""

    e_strain: float = 2.0e6
    a_par: float = -2.16e6
    omega_rf: float = 1.5e6
    f_rf: float = 5.0e6

    def __post_init__(self):
        if self.omega_rf > 0 and self.f_rf <= 0:
            raise ValueError("f_rf must be > 0 whenever omega_rf > 0")


@dataclass(frozen=True)
class DressedModel:
    """Mixing angle, static gap and Bessel-weighted drive harmonics (Hz)."""

    theta: float
    delta: float
    couplings: tuple  # ((n, omega_tilde_n), ...)

    def coupling(self, n: int) -> float:
        for k, val in self.couplings:
            if k == n:
                return val
        raise KeyError(f"harmonic {n} not computed")


@dataclass(frozen=True)
class EigenlevelCurves:
    """Ground-state levels and MW transition frequencies versus axial field.

    ``eigenvalues[i, j]`` is the j-th level (Hz, sorted ascending) at field
    ``b_axial[i]``; ``transitions[i, k]`` are the six nuclear-spin-preserving
    m_s = 0 -> +/-1 transition frequencies (Hz), ordered by (m_I, branch).
    """

    b_axial: np.ndarray
    eigenvalues: np.ndarray
    transitions: np.ndarray


def _dominant_index(weights: np.ndarray) -> int:
    return int(np.argmax(weights))


def eigenlevels_vs_field(p: NvParameters, e_strain: float, b_axial) -> EigenlevelCurves:
    """Diagonalize the ground Hamiltonian over an axial-field grid.

    Transition frequencies pair each m_s = +/-1 eigenstate with the
    m_s = 0 eigenstate of matching dominant nuclear projection, since the
    MW probe preserves the nuclear spin.
    """
    b_axial = np.asarray(b_axial, dtype=float)
    params = replace(p, e_x=e_strain, e_y=0.0)
    n_b = b_axial.size
    eigvals = np.empty((n_b, 9))
    transitions = np.empty((n_b, 6))
    # weights of the product-basis groups: electron index blocks of 3
    for i, bz in enumerate(b_axial):
        h = build_ground_hamiltonian(params, FieldVector(bz=bz))
        vals, vecs = np.linalg.eigh(h)
        vals = vals / TWO_PI
        eigvals[i] = vals
        pops = np.abs(vecs) ** 2  # rows: product basis, cols: eigenstates
        elec_weight = pops.reshape(3, 3, 9).sum(axis=1)  # (electron block, eigenstate)
        nuc_weight = pops.reshape(3, 3, 9).sum(axis=0)   # (nuclear index, eigenstate)
        zero_states = [j for j in range(9) if _dominant_index(elec_weight[:, j]) == 1]
        other_states = [j for j in range(9) if j not in zero_states]
        lower = {}
        for j in zero_states:
            lower.setdefault(_dominant_index(nuc_weight[:, j]), j)
        cols = []
        for j in sorted(other_states, key=lambda j: (_dominant_index(nuc_weight[:, j]), eigvals[i, j])):
            n_dom = _dominant_index(nuc_weight[:, j])
            base = lower.get(n_dom, zero_states[0] if zero_states else 0)
            cols.append(vals[j] - vals[base])
        transitions[i] = cols[:6]
    return EigenlevelCurves(b_axial=b_axial, eigenvalues=eigvals, transitions=transitions)


def two_level_hamiltonian(p: TwoLevelParams, t: float) -> np.ndarray:
    """Instantaneous pair Hamiltonian (rad/s) in the {|-1,+1>, |+1,+1>} basis."""
    mod = p.omega_rf * math.cos(TWO_PI * p.f_rf * t)
    return TWO_PI * np.array(
        [
            [-p.a_par + mod, p.e_strain],
            [p.e_strain, p.a_par - mod],
        ],
        dtype=np.complex128,
    )


def _mixing_angle(e_strain: float, a_par: float) -> float:
    """Half the rotation diagonalizing the static pair, tan(2 theta) = -E/A_par."""
    if a_par == 0.0:
        return math.pi / 4.0
    return 0.5 * math.atan(-e_strain / a_par)


def dressed_model(p: TwoLevelParams, n_max: int = 3) -> DressedModel:
    """Bessel-weighted effective couplings of the longitudinally driven pair.

    Omega~_n = -Omega_RF sin(2 theta) J_n(2 (Omega_RF / f_RF) cos(2 theta)),
    with the modulation index formed from the Hz-convention ratio.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    theta = _mixing_angle(p.e_strain, p.a_par)
    delta = math.hypot(p.a_par, p.e_strain)
    if p.f_rf > 0:
        arg = 2.0 * (p.omega_rf / p.f_rf) * math.cos(2.0 * theta)
    else:
        arg = 0.0
    couplings = []
    for n in range(-n_max, n_max + 1):
        val = -p.omega_rf * math.sin(2.0 * theta) * float(jv(n, arg))
        couplings.append((n, val))
    return DressedModel(theta=theta, delta=delta, couplings=tuple(couplings))


def lzt_resonance(p: TwoLevelParams) -> float:
    """RF frequency (Hz) at which the pair undergoes a Landau-Zener transition,
    i.e. where the drive quantum matches the static gap: f_RF = 2 sqrt(A_par^2 + E^2)."""
    return 2.0 * math.hypot(p.a_par, p.e_strain)


def sideband_model(p: TwoLevelParams, n: int) -> tuple:
    """n-th order sideband: (position offset n*f_RF in Hz, coupling E*J_n(m) in Hz)
    with modulation index m = Omega_RF / f_RF."""
    m = p.omega_rf / p.f_rf if p.f_rf > 0 else 0.0
    return (n * p.f_rf, p.e_strain * float(jv(n, m)))


def predicted_splitting(p: TwoLevelParams, n_star: int = 0) -> float:
    """Drive-induced splitting 2|Omega~_{n*}| (Hz) of the probed transition."""
    model = dressed_model(p, n_max=abs(n_star))
    return 2.0 * abs(model.coupling(n_star))


def two_level_propagator(p: TwoLevelParams, segments_per_period: int = 1024,
                         periods: int = 1) -> np.ndarray:
    """Propagator over ``periods`` drive periods by piecewise-constant expm.

    Midpoint-sampled segments; independent of the dressed-model formulas,
    which makes it the quantitative oracle for them.
    """
    if p.f_rf <= 0:
        raise ValueError("two_level_propagator needs f_rf > 0")
    t_period = 1.0 / p.f_rf
    dt = t_period / segments_per_period
    u = np.eye(2, dtype=np.complex128)
    for k in range(segments_per_period):
        t_mid = (k + 0.5) * dt
        u = expm(-1j * dt * two_level_hamiltonian(p, t_mid)) @ u
    if periods > 1:
        u = np.linalg.matrix_power(u, periods)
    return u


def two_level_quasienergy_gap(p: TwoLevelParams, segments_per_period: int = 1024) -> float:
    """Quasi-energy gap (Hz) of the driven pair, folded into the first zone."""
    u = two_level_propagator(p, segments_per_period)
    t_period = 1.0 / p.f_rf
    phases = np.angle(np.linalg.eigvals(u))
    eps = -phases / (TWO_PI * t_period)  # quasi-energies in Hz
    gap = abs(eps[0] - eps[1]) % p.f_rf
    if gap > p.f_rf / 2.0:
        gap = p.f_rf - gap
    return float(gap)
