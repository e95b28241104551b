"""Physical model assembly: Hamiltonians, drives, collapse operators.

Level layout of the 19-dimensional model (index order):

    0..8   ground-state triplet x 14N nuclear spin, |m_s, m_I> with both
           subspaces ordered |+1>, |0>, |-1>  (index = 3*i_s + i_n)
    9..17  excited-state triplet x nuclear spin, same ordering
    18     metastable singlet

Unit convention: every user-facing frequency is plain Hz; the single factor
of 2*pi is applied here, so all Hamiltonian matrices are angular (rad/s).
Magnetic fields are Tesla in the NV frame (z along the N-V axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spinops import dag, kron, spin1_operators

TWO_PI = 2.0 * math.pi

DIM = 19
N_GROUND = 9
GROUND = slice(0, 9)
EXCITED = slice(9, 18)
SINGLET = 18

#: The four NV orientation classes of the diamond lattice (unit vectors).
NV_AXES = (
    (1.0, 1.0, 1.0),
    (1.0, -1.0, -1.0),
    (-1.0, 1.0, -1.0),
    (-1.0, -1.0, 1.0),
)

_S = spin1_operators()
_I3 = np.eye(3, dtype=np.complex128)


@dataclass(frozen=True)
class NvParameters:
    """Ground/excited spin Hamiltonian constants and dissipation rates.

    Frequencies in Hz (signs follow the usual 14N conventions: negative
    a_par, a_perp, p_quad), g-factors dimensionless, magnetons in Hz/T,
    rates in 1/s.
    """

    d_gs: float = 2.87e9
    e_x: float = 0.0
    e_y: float = 0.0
    a_par: float = -2.16e6
    a_perp: float = -2.7e6
    p_quad: float = -4.95e6
    g_s: float = 2.003
    g_i: float = 0.403
    mu_b: float = 13.996e9
    mu_n: float = 7.622e6
    d_es: float = 1.42e9
    es_hyperfine_scale: float = 1.0
    e_x_es: float = 0.0
    e_y_es: float = 0.0
    gamma_rad: float = 1.0 / 12e-9
    gamma_isc_pm1: float = 1.0 / 24e-9
    gamma_isc_0: float = 1.0 / 240e-9
    gamma_singlet: float = 1.0 / 250e-9
    singlet_branching_to_0: float = 0.8

    def __post_init__(self):
        for name in ("gamma_rad", "gamma_isc_pm1", "gamma_isc_0", "gamma_singlet"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.singlet_branching_to_0 <= 1.0:
            raise ValueError("singlet_branching_to_0 must lie in [0, 1]")


@dataclass(frozen=True)
class DriveConfig:
    """Drive tones: MW carrier/Rabi, RF modulation, optical pumping Rabi (Hz)."""

    f_mw: float = 2.87e9
    omega_mw: float = 0.5e6
    f_rf: float = 5.0e6
    omega_rf: float = 1.5e6
    omega_opt: float = 2.0e6

    def __post_init__(self):
        for name in ("omega_mw", "omega_rf", "omega_opt"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.omega_rf > 0 and self.f_rf <= 0:
            raise ValueError("f_rf must be > 0 whenever omega_rf > 0")


@dataclass(frozen=True)
class FieldVector:
    """Static magnetic field in the NV frame (Tesla)."""

    bx: float = 0.0
    by: float = 0.0
    bz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.bx, self.by, self.bz)):
            raise ValueError("field components must be finite")

    def magnitude(self) -> float:
        return math.sqrt(self.bx**2 + self.by**2 + self.bz**2)


@dataclass(frozen=True)
class LevelModel:
    """Assembled 19-level model in the MW rotating frame.

    ``h_drift`` is the time-independent part, ``h_rf_coupling`` the operator
    multiplied by cos(2*pi*f_rf*t); both angular (rad/s) and Hermitian.
    """

    h_drift: np.ndarray
    h_rf_coupling: np.ndarray
    collapse_ops: tuple
    fluorescence_projector: np.ndarray
    f_rf: float = 0.0
    drives: DriveConfig = field(default=DriveConfig(omega_mw=0.0, omega_rf=0.0, omega_opt=0.0))

    @property
    def dim(self) -> int:
        return self.h_drift.shape[0]


def _electron_op(op: np.ndarray) -> np.ndarray:
    """Electron operator on a 9-dim electron (x) nuclear block."""
    return kron(op, _I3)


def _nuclear_op(op: np.ndarray) -> np.ndarray:
    return kron(_I3, op)


def _strain_term(e_x: float, e_y: float) -> np.ndarray:
    """Transverse zero-field-splitting term -E_x(Sx^2-Sy^2) + E_y(SxSy+SySx), Hz."""
    sx, sy = _S.sx, _S.sy
    term = -e_x * (sx @ sx - sy @ sy) + e_y * (sx @ sy + sy @ sx)
    return _electron_op(term)


def build_ground_hamiltonian(p: NvParameters, b: FieldVector = FieldVector()) -> np.ndarray:
    """Ground-state 9x9 Hamiltonian in the lab frame, angular units (rad/s).

    Includes zero-field splitting, transverse strain/electric terms, electron
    and nuclear Zeeman couplings, axial and transverse hyperfine couplings
    and the nuclear quadrupole term.  Hermitian by construction.
    """
    sx, sy, sz = _S.sx, _S.sy, _S.sz
    sz2 = sz @ sz
    s_squared = 2.0 * _I3  # S=1 Casimir

    h = p.d_gs * _electron_op(sz2 - s_squared / 3.0)
    h = h + _strain_term(p.e_x, p.e_y)
    h = h + p.g_s * p.mu_b * (
        b.bx * _electron_op(sx) + b.by * _electron_op(sy) + b.bz * _electron_op(sz)
    )
    h = h + p.a_par * kron(sz, sz) + p.a_perp * (kron(sx, sx) + kron(sy, sy))
    h = h + p.p_quad * _nuclear_op(sz2)
    h = h - p.g_i * p.mu_n * (
        b.bx * _nuclear_op(sx) + b.by * _nuclear_op(sy) + b.bz * _nuclear_op(sz)
    )
    return TWO_PI * h


def _secular_spin_block(
    p: NvParameters,
    b: FieldVector,
    *,
    e_x: float,
    e_y: float,
    a_par: float,
    keep_counter_rotating: bool,
) -> np.ndarray:
    """Spin-triplet block terms that survive the MW rotating-wave approximation.

    The A_perp flip-flop and the transverse electron Zeeman terms flip m_s
    by one and therefore oscillate at the MW carrier frequency in the
    rotating frame; they are dropped unless ``keep_counter_rotating`` asks
    for the static (non-secular) variant used by the comparison tests.
    Strain couples m_s = +1 <-> -1 and commutes with the frame generator,
    so it stays exact.  Angular units.
    """
    sx, sy, sz = _S.sx, _S.sy, _S.sz
    h = _strain_term(e_x, e_y)
    h = h + p.g_s * p.mu_b * b.bz * _electron_op(sz)
    h = h + a_par * kron(sz, sz)
    h = h + p.p_quad * _nuclear_op(sz @ sz)
    h = h - p.g_i * p.mu_n * (
        b.bx * _nuclear_op(sx) + b.by * _nuclear_op(sy) + b.bz * _nuclear_op(sz)
    )
    if keep_counter_rotating:
        h = h + p.a_perp * (kron(sx, sx) + kron(sy, sy))
        h = h + p.g_s * p.mu_b * (b.bx * _electron_op(sx) + b.by * _electron_op(sy))
    return TWO_PI * h


def _mw_coupling() -> np.ndarray:
    """Rotating-wave MW coupling operator on the ground block (unit amplitude).

    Couples |0, m_I> to |+1, m_I> and |-1, m_I> with equal magnitude; the
    relative 90-degree phase makes both strain-split superpositions of the
    m_s = +/-1 manifold equally bright under the e_y = 0 strain convention
    (a single linearly polarized antenna drives both observed peaks).
    """
    raise_plus = np.zeros((3, 3), dtype=np.complex128)
    raise_plus[0, 1] = 1.0
    raise_minus = np.zeros((3, 3), dtype=np.complex128)
    raise_minus[2, 1] = 1.0j
    c = _electron_op(raise_plus + raise_minus)
    return c + dag(c)


def build_level_model(
    p: NvParameters,
    d: DriveConfig,
    b: FieldVector = FieldVector(),
    *,
    keep_counter_rotating: bool = False,
    resonant_optical_frame: bool = True,
) -> LevelModel:
    """Assemble the 19-level model in the MW rotating frame.

    The frame rotates at f_mw on every m_s = +/-1 level (ground and excited),
    which keeps the spin-conserving optical drive time independent.  The
    optical drive is modeled as a coherent coupling at Rabi ``omega_opt``
    that is resonant within each spin manifold (room-temperature broadband
    pumping); ``resonant_optical_frame=False`` instead leaves the
    d_es - d_gs manifold mismatch in the excited block, which detunes the
    m_s = +/-1 optical transitions by ~1.45 GHz and suppresses their
    pumping (kept only for comparison tests).

    Collapse operators: 9 radiative (spin/nuclear-spin conserving), 6 ISC
    from excited m_s = +/-1, 3 ISC from excited m_s = 0, and 9 singlet-exit
    channels distributing population over m_s per ``singlet_branching_to_0``
    and equally over m_I.
    """
    sz = _S.sz
    sz2_9 = _electron_op(sz @ sz)

    h = np.zeros((DIM, DIM), dtype=np.complex128)

    # Ground block: secular spin terms, rotating-frame shift, MW coupling.
    g_block = _secular_spin_block(
        p, b, e_x=p.e_x, e_y=p.e_y, a_par=p.a_par,
        keep_counter_rotating=keep_counter_rotating,
    )
    g_block = g_block + TWO_PI * (p.d_gs - d.f_mw) * sz2_9
    g_block = g_block + TWO_PI * (d.omega_mw / 2.0) * _mw_coupling()
    h[GROUND, GROUND] = g_block

    # Excited block: same structure with scaled hyperfine and its own strain.
    e_block = _secular_spin_block(
        p, b, e_x=p.e_x_es, e_y=p.e_y_es, a_par=p.es_hyperfine_scale * p.a_par,
        keep_counter_rotating=keep_counter_rotating,
    )
    if resonant_optical_frame:
        e_block = e_block + TWO_PI * (p.d_gs - d.f_mw) * sz2_9
    else:
        e_block = e_block + TWO_PI * (p.d_es - d.f_mw) * sz2_9
    h[EXCITED, EXCITED] = e_block

    # Spin-conserving optical drive between corresponding hyperfine levels.
    opt = TWO_PI * (d.omega_opt / 2.0) * np.eye(N_GROUND, dtype=np.complex128)
    h[EXCITED, GROUND] = opt
    h[GROUND, EXCITED] = opt.conj().T

    # Longitudinal RF modulation of both triplet blocks.
    h_rf = np.zeros((DIM, DIM), dtype=np.complex128)
    sz_9 = _electron_op(sz)
    h_rf[GROUND, GROUND] = TWO_PI * d.omega_rf * sz_9
    h_rf[EXCITED, EXCITED] = TWO_PI * d.omega_rf * sz_9

    collapse = _collapse_operators(p)

    proj = np.zeros((DIM, DIM), dtype=np.complex128)
    for i in range(9, 18):
        proj[i, i] = 1.0

    return LevelModel(
        h_drift=h,
        h_rf_coupling=h_rf,
        collapse_ops=collapse,
        fluorescence_projector=proj,
        f_rf=d.f_rf,
        drives=d,
    )


def _collapse_operators(p: NvParameters) -> tuple:
    """The 27 jump operators of the optical pumping cycle (19x19 each)."""

    def jump(rate: float, dst: int, src: int) -> np.ndarray:
        op = np.zeros((DIM, DIM), dtype=np.complex128)
        op[dst, src] = math.sqrt(rate)
        return op

    ops = []
    # Radiative decay, preserving electron and nuclear spin.
    for i in range(N_GROUND):
        ops.append(jump(p.gamma_rad, i, 9 + i))
    # ISC from excited m_s = +/-1 (electron indices 0 and 2).
    for i_s in (0, 2):
        for i_n in range(3):
            ops.append(jump(p.gamma_isc_pm1, SINGLET, 9 + 3 * i_s + i_n))
    # ISC from excited m_s = 0.
    for i_n in range(3):
        ops.append(jump(p.gamma_isc_0, SINGLET, 9 + 3 + i_n))
    # Singlet decay to ground, branching over m_s, equal over m_I.
    w = {
        0: (1.0 - p.singlet_branching_to_0) / 2.0,
        1: p.singlet_branching_to_0,
        2: (1.0 - p.singlet_branching_to_0) / 2.0,
    }
    for i_s in range(3):
        for i_n in range(3):
            ops.append(jump(p.gamma_singlet * w[i_s] / 3.0, 3 * i_s + i_n, SINGLET))
    return tuple(ops)


def ground_dephasing_operator() -> np.ndarray:
    """Unscaled Sz (x) identity on the ground block, zero elsewhere.

    The dynamics module multiplies this by sqrt(2*dephasing_rate) to form
    the optional pure-dephasing collapse channel.
    """
    op = np.zeros((DIM, DIM), dtype=np.complex128)
    op[GROUND, GROUND] = _electron_op(_S.sz)
    return op


def orientation_projections(b_lab: FieldVector, axes=None) -> list:
    """Resolve a lab-frame field into NV-frame components per orientation class.

    For each of the four <111> NV orientation classes (or the unit vectors
    given in ``axes``) the lab field is decomposed into an axial component
    (returned as bz) and a transverse magnitude (returned as bx, with by=0;
    the azimuth around the NV axis is physically free at this level).
    """
    if axes is None:
        axes = NV_AXES
    b = np.array([b_lab.bx, b_lab.by, b_lab.bz], dtype=float)
    out = []
    for axis in axes:
        a = np.array(axis, dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValueError("orientation axis must have nonzero length")
        a = a / norm
        axial = float(np.dot(b, a))
        transverse = float(np.linalg.norm(b - axial * a))
        out.append(FieldVector(bx=transverse, by=0.0, bz=axial))
    return out
