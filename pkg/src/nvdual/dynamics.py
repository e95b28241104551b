"""Time evolution of the density matrix under the Lindblad master equation.

The integrator is a fixed-step classical 4th-order scheme with

    dt = min(dt_max, 1/(50 f_rf), 1/(50 max_Rabi)),

applied to H(t) = h_drift + h_rf_coupling * cos(2 pi f_rf t) plus the
model's collapse operators (and the optional ground-state pure-dephasing
channel).  Fixed stepping makes every run bit-reproducible and lets sweep
points execute concurrently without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .model import DIM, N_GROUND, DriveConfig, LevelModel, ground_dephasing_operator
from .spinops import kron

_CHECK_INTERVAL = 4096  # steps between integrity checks


@dataclass(frozen=True)
class EvolutionSettings:
    """Integration controls; dephasing_rate is an extra ground-state channel (1/s)."""

    dt_max: float = 2e-9
    rel_tol: float = 1e-8
    transient_time: float = 20e-6
    average_periods: int = 10
    dephasing_rate: float = 2.0 * math.pi * 0.3e6

    def __post_init__(self):
        if self.dt_max <= 0:
            raise ValueError("dt_max must be > 0")
        if self.average_periods < 1:
            raise ValueError("average_periods must be >= 1")
        if self.dephasing_rate < 0:
            raise ValueError("dephasing_rate must be >= 0")


class LindbladIntegrityError(RuntimeError):
    """Raised when the evolved state violates density-matrix invariants.

    Signals a too-large step size (or a malformed model); carries the
    offending diagnostic in the message.
    """


def initial_state_unpolarized() -> np.ndarray:
    """Maximally mixed state over the 9 ground hyperfine levels."""
    rho = np.zeros((DIM, DIM), dtype=np.complex128)
    for i in range(N_GROUND):
        rho[i, i] = 1.0 / N_GROUND
    return rho


def hermiticity_defect(rho: np.ndarray) -> float:
    return float(np.max(np.abs(rho - rho.conj().T)))


def check_density_matrix(rho, *, trace_tol=1e-8, herm_tol=1e-10, eig_floor=-1e-6):
    """Raise LindbladIntegrityError unless rho is a valid density matrix."""
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise LindbladIntegrityError(f"trace deviates from 1 by {abs(tr - 1.0):.3e}")
    defect = hermiticity_defect(rho)
    if defect > herm_tol:
        raise LindbladIntegrityError(f"hermiticity defect {defect:.3e}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < eig_floor:
        raise LindbladIntegrityError(f"negative eigenvalue {lam.min():.3e}")


def lindblad_rhs(rho: np.ndarray, h_t: np.ndarray, collapse_ops) -> np.ndarray:
    """-i[H, rho] + sum_k (L rho L^+ - {L^+ L, rho}/2); reference implementation."""
    rho = np.asarray(rho, dtype=np.complex128)
    h_t = np.asarray(h_t, dtype=np.complex128)
    if rho.shape != h_t.shape:
        raise ValueError("dimension mismatch between rho and H")
    out = -1j * (h_t @ rho - rho @ h_t)
    for op in collapse_ops:
        op = np.asarray(op, dtype=np.complex128)
        if op.shape != rho.shape:
            raise ValueError("dimension mismatch in collapse operator")
        ldag = op.conj().T
        ldl = ldag @ op
        out = out + op @ rho @ ldag - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def liouvillian_matrix(h: np.ndarray, collapse_ops) -> np.ndarray:
    """Column-stacking superoperator; expm of this is the propagation oracle."""
    n = h.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    liou = -1j * (kron(eye, h) - kron(h.T, eye))
    for op in collapse_ops:
        op = np.asarray(op, dtype=np.complex128)
        ldl = op.conj().T @ op
        liou = liou + kron(op.conj(), op)
        liou = liou - 0.5 * (kron(eye, ldl) + kron(ldl.T, eye))
    return liou


def _step_size(drives: DriveConfig, settings: EvolutionSettings) -> float:
    dt = settings.dt_max
    if drives.omega_rf > 0 and drives.f_rf > 0:
        dt = min(dt, 1.0 / (50.0 * drives.f_rf))
    max_rabi = max(drives.omega_mw, drives.omega_rf, drives.omega_opt)
    if max_rabi > 0:
        dt = min(dt, 1.0 / (50.0 * max_rabi))
    return dt


def _collapse_list(model: LevelModel, settings: EvolutionSettings):
    ops = list(model.collapse_ops)
    if settings.dephasing_rate > 0 and model.dim == DIM:
        ops.append(math.sqrt(2.0 * settings.dephasing_rate) * ground_dephasing_operator())
    return ops


class _Propagator:
    """One packed (or dense-fallback) integrator bound to a model + drives."""

    def __init__(self, model: LevelModel, drives: DriveConfig, settings: EvolutionSettings):
        self.settings = settings
        self.dt = _step_size(drives, settings)
        self.w_rf = 2.0 * math.pi * drives.f_rf if drives.omega_rf > 0 else 0.0
        self.proj = np.real(np.diagonal(model.fluorescence_projector)).copy()
        ops = _collapse_list(model, settings)
        self.gen = _engine.pack_generator(
            model.h_drift, model.h_rf_coupling, ops, self.w_rf, self.proj
        )
        if self.gen is None:
            self._dense = (model.h_drift, model.h_rf_coupling, ops)
        self.t = 0.0
        self.trace0 = None

    def start(self, rho0: np.ndarray) -> None:
        self.t = 0.0
        self.trace0 = float(np.trace(rho0).real)
        if self.gen is not None:
            self.state = _engine.to_picture(np.array(rho0, dtype=np.complex128), self.gen, 0.0)
        else:
            self.state = np.array(rho0, dtype=np.complex128)

    def advance(self, duration: float, average: bool = False) -> float:
        """Run for ``duration`` seconds; return window-averaged observable."""
        if duration <= 0.0:
            return 0.0
        n = max(1, int(math.ceil(duration / self.dt - 1e-12)))
        dt_eff = duration / n
        acc = 0.0
        done = 0
        while done < n:
            chunk = min(_CHECK_INTERVAL, n - done)
            t0 = self.t + done * dt_eff
            if self.gen is not None:
                part = _engine.run_packed(self.state, self.gen, t0, dt_eff, chunk, average)
            else:
                h, hrf, ops = self._dense
                part = _engine.run_dense(
                    self.state, h, hrf, self.w_rf, ops, self.proj, t0, dt_eff, chunk, average
                )
            acc += part * chunk
            done += chunk
            self._integrity_check()
        self.t += duration
        return acc / n if average else 0.0

    def result(self) -> np.ndarray:
        if self.gen is not None:
            return _engine.from_picture(self.state, self.gen, self.t)
        return self.state.copy()

    def _integrity_check(self) -> None:
        tol = 100.0 * self.settings.rel_tol
        drift = abs(float(np.trace(self.state).real) - self.trace0)
        if drift > tol:
            raise LindbladIntegrityError(
                f"trace drifted by {drift:.3e} (tolerance {tol:.1e}); "
                "reduce dt_max or check the model"
            )
        defect = hermiticity_defect(self.state)
        if defect > tol:
            raise LindbladIntegrityError(
                f"hermiticity defect {defect:.3e} (tolerance {tol:.1e}); "
                "reduce dt_max or check the model"
            )


def evolve(rho0, model: LevelModel, drives: DriveConfig,
           settings: EvolutionSettings, t_final: float) -> np.ndarray:
    """Integrate the master equation for ``t_final`` seconds.

    Returns the final density matrix (model frame).  The output satisfies
    the density-matrix invariants or a LindbladIntegrityError is raised.
    """
    rho0 = np.asarray(rho0, dtype=np.complex128)
    if rho0.shape != model.h_drift.shape:
        raise ValueError("rho0 dimension does not match the model")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    if t_final == 0.0:
        return rho0.copy()
    prop = _Propagator(model, drives, settings)
    prop.start(rho0)
    prop.advance(t_final)
    rho = prop.result()
    check_density_matrix(rho, trace_tol=max(1e-8, 100 * settings.rel_tol))
    return rho


def fluorescence(rho: np.ndarray, model: LevelModel) -> float:
    """trace(fluorescence_projector . rho); population of the excited levels."""
    return float(np.real(np.trace(model.fluorescence_projector @ rho)))


def time_averaged_fluorescence(model: LevelModel, drives: DriveConfig,
                               settings: EvolutionSettings) -> float:
    """Steady fluorescence level for one drive configuration.

    Evolves the unpolarized ground state through ``transient_time``, then
    averages the fluorescence over ``average_periods`` full RF periods
    (a fixed 10 us window when the RF drive is off).  Deterministic for
    fixed settings.
    """
    if model.dim != DIM:
        raise ValueError("time_averaged_fluorescence expects the 19-level model")
    if drives.omega_rf > 0:
        window = settings.average_periods / drives.f_rf
    else:
        window = 10e-6
    prop = _Propagator(model, drives, settings)
    prop.start(initial_state_unpolarized())
    prop.advance(settings.transient_time)
    value = prop.advance(window, average=True)
    check_density_matrix(prop.result(), trace_tol=max(1e-8, 100 * settings.rel_tol))
    return value
