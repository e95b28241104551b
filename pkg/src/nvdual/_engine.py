"""Fixed-step RK4 propagation kernels for the Lindblad master equation.

The master equation is integrated in an interaction picture that absorbs
the diagonal of the drift Hamiltonian together with the (diagonal)
longitudinal RF modulation into exact phase factors

    theta_i(t) = d_i * t + r_i * sin(w t) / w,

so the classical 4th-order scheme only has to resolve the genuine
couplings (MW, optical, strain) and the dissipator.  Populations, trace,
Hermiticity and the spectrum of rho are untouched by the picture change,
and every jump operator of the optical cycle is a single |a><b| transfer,
which makes the dissipator O(n^2):

    rho_dot = -i[V~(t), rho] + sum_k rate_k * rho_ss |d_k><d_k| - M o rho

with M_ij = (gamma_out_i + gamma_out_j)/2 + sum_diag (l_i - l_j)^2 / 2.

Collapse-operator lists that do not fit this structure (arbitrary user
matrices) fall back to a dense numpy right-hand side with identical
stepping, so both paths integrate the same equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency
    def njit(*args, **kwargs):
        def wrap(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return wrap


@dataclass
class PackedGenerator:
    """Structured form of (h_drift, h_rf_coupling, collapse_ops)."""

    v: np.ndarray          # off-diagonal static couplings (complex, rad/s)
    dvec: np.ndarray       # drift diagonal (real, rad/s)
    rvec: np.ndarray       # RF-coupling diagonal (real, rad/s)
    w_rf: float            # angular RF frequency (rad/s); 0 disables the tone
    decay: np.ndarray      # elementwise decay mask M (real, 1/s)
    gain_dst: np.ndarray   # transfer destinations (int64)
    gain_src: np.ndarray   # transfer sources (int64)
    gain_rate: np.ndarray  # transfer rates (float, 1/s)
    proj: np.ndarray       # observable diagonal weights (real)


def pack_generator(h_drift, h_rf, collapse_ops, w_rf, proj_diag):
    """Build the structured generator, or return None if unpackable.

    Requirements for the fast path: ``h_rf`` diagonal with real diagonal,
    and every collapse operator either a single off-diagonal entry
    (population transfer) or a real diagonal matrix (pure dephasing).
    """
    dim = h_drift.shape[0]
    rdiag = np.diagonal(h_rf)
    if np.max(np.abs(h_rf - np.diag(rdiag))) > 0 or np.max(np.abs(rdiag.imag)) > 0:
        return None

    dvec = np.diagonal(h_drift).real.copy()
    if np.max(np.abs(np.diagonal(h_drift).imag)) > 1e-9 * max(np.max(np.abs(dvec)), 1.0):
        return None
    v = h_drift - np.diag(np.diagonal(h_drift))

    gamma_out = np.zeros(dim)
    decay = np.zeros((dim, dim))
    dst, src, rate = [], [], []
    for op in collapse_ops:
        op = np.asarray(op)
        nz = np.argwhere(np.abs(op) > 0)
        if nz.size == 0:
            continue
        if len(nz) == 1 and nz[0][0] != nz[0][1]:
            a, b = int(nz[0][0]), int(nz[0][1])
            r = float(abs(op[a, b]) ** 2)
            dst.append(a)
            src.append(b)
            rate.append(r)
            gamma_out[b] += r
        elif np.all(nz[:, 0] == nz[:, 1]):
            ell = np.diagonal(op)
            if np.max(np.abs(ell.imag)) > 0:
                return None
            ell = ell.real
            decay += 0.5 * (ell[:, None] - ell[None, :]) ** 2
        else:
            return None
    decay += 0.5 * (gamma_out[:, None] + gamma_out[None, :])

    return PackedGenerator(
        v=np.ascontiguousarray(v, dtype=np.complex128),
        dvec=np.ascontiguousarray(dvec, dtype=np.float64),
        rvec=np.ascontiguousarray(rdiag.real, dtype=np.float64),
        w_rf=float(w_rf),
        decay=np.ascontiguousarray(decay, dtype=np.float64),
        gain_dst=np.asarray(dst, dtype=np.int64),
        gain_src=np.asarray(src, dtype=np.int64),
        gain_rate=np.asarray(rate, dtype=np.float64),
        proj=np.ascontiguousarray(proj_diag, dtype=np.float64),
    )


@njit(cache=True)
def _phases(t, dvec, rvec, w, ph):
    n = dvec.shape[0]
    if w > 0.0:
        s = math.sin(w * t) / w
        for i in range(n):
            th = dvec[i] * t + rvec[i] * s
            ph[i] = complex(math.cos(th), math.sin(th))
    else:
        for i in range(n):
            th = dvec[i] * t
            ph[i] = complex(math.cos(th), math.sin(th))


@njit(cache=True)
def _rhs(t, rho, out, v, dvec, rvec, w, decay, gdst, gsrc, grate, ph, vt):
    n = rho.shape[0]
    _phases(t, dvec, rvec, w, ph)
    for i in range(n):
        pi = ph[i]
        for j in range(n):
            vt[i, j] = v[i, j] * pi * np.conj(ph[j])
    a = np.dot(vt, rho)
    for i in range(n):
        for j in range(n):
            c = a[i, j] - np.conj(a[j, i])
            out[i, j] = complex(c.imag, -c.real) - decay[i, j] * rho[i, j]
    for k in range(gdst.shape[0]):
        out[gdst[k], gdst[k]] += grate[k] * rho[gsrc[k], gsrc[k]]


@njit(cache=True)
def _observable(rho, proj):
    n = rho.shape[0]
    val = 0.0
    for i in range(n):
        val += proj[i] * rho[i, i].real
    return val


@njit(cache=True)
def _rk4_run(rho, v, dvec, rvec, w, decay, gdst, gsrc, grate, proj,
             t0, dt, n_steps, average):
    """Advance n_steps of size dt from t0; rho is the interaction-picture
    state and is updated in place.  Returns the trapezoidal average of the
    observable over the window when ``average`` is true, else 0."""
    n = rho.shape[0]
    ph = np.empty(n, dtype=np.complex128)
    vt = np.empty((n, n), dtype=np.complex128)
    k1 = np.empty((n, n), dtype=np.complex128)
    k2 = np.empty((n, n), dtype=np.complex128)
    k3 = np.empty((n, n), dtype=np.complex128)
    k4 = np.empty((n, n), dtype=np.complex128)
    stage = np.empty((n, n), dtype=np.complex128)

    acc = 0.0
    if average:
        acc += 0.5 * _observable(rho, proj)
    for step in range(n_steps):
        t = t0 + step * dt
        _rhs(t, rho, k1, v, dvec, rvec, w, decay, gdst, gsrc, grate, ph, vt)
        half = 0.5 * dt
        for i in range(n):
            for j in range(n):
                stage[i, j] = rho[i, j] + half * k1[i, j]
        _rhs(t + half, stage, k2, v, dvec, rvec, w, decay, gdst, gsrc, grate, ph, vt)
        for i in range(n):
            for j in range(n):
                stage[i, j] = rho[i, j] + half * k2[i, j]
        _rhs(t + half, stage, k3, v, dvec, rvec, w, decay, gdst, gsrc, grate, ph, vt)
        for i in range(n):
            for j in range(n):
                stage[i, j] = rho[i, j] + dt * k3[i, j]
        _rhs(t + dt, stage, k4, v, dvec, rvec, w, decay, gdst, gsrc, grate, ph, vt)
        sixth = dt / 6.0
        for i in range(n):
            for j in range(n):
                rho[i, j] += sixth * (k1[i, j] + 2.0 * (k2[i, j] + k3[i, j]) + k4[i, j])
        if average:
            weight = 0.5 if step == n_steps - 1 else 1.0
            acc += weight * _observable(rho, proj)
    if average and n_steps > 0:
        acc /= n_steps
    return acc


def run_packed(rho_tilde, gen: PackedGenerator, t0, dt, n_steps, average=False):
    """Drive the compiled kernel on the interaction-picture state (in place)."""
    return _rk4_run(
        rho_tilde, gen.v, gen.dvec, gen.rvec, gen.w_rf, gen.decay,
        gen.gain_dst, gen.gain_src, gen.gain_rate, gen.proj,
        float(t0), float(dt), int(n_steps), bool(average),
    )


def picture_phases(gen: PackedGenerator, t: float) -> np.ndarray:
    """Phase vector exp(i theta(t)) mapping rho to the interaction picture."""
    th = gen.dvec * t
    if gen.w_rf > 0.0:
        th = th + gen.rvec * (math.sin(gen.w_rf * t) / gen.w_rf)
    return np.exp(1j * th)


def to_picture(rho: np.ndarray, gen: PackedGenerator, t: float) -> np.ndarray:
    ph = picture_phases(gen, t)
    return rho * np.outer(ph, ph.conj())


def from_picture(rho_tilde: np.ndarray, gen: PackedGenerator, t: float) -> np.ndarray:
    ph = picture_phases(gen, t)
    return rho_tilde * np.outer(ph.conj(), ph)


# ---------------------------------------------------------------------------
# Dense fallback for arbitrary collapse operators (reference path).

def run_dense(rho, h_drift, h_rf, w_rf, collapse_ops, proj_diag,
              t0, dt, n_steps, average=False):
    """Numpy RK4 with the full dissipator; state updated in place (model frame)."""
    ls = np.array([np.asarray(op, dtype=np.complex128) for op in collapse_ops])
    have_ops = ls.size > 0
    if have_ops:
        ls_dag = ls.conj().transpose(0, 2, 1)
        ldl = np.einsum("kij,kjl->il", ls_dag, ls)

    def rhs(t, r):
        h = h_drift if w_rf == 0.0 else h_drift + math.cos(w_rf * t) * h_rf
        out = -1j * (h @ r - r @ h)
        if have_ops:
            out = out + np.einsum("kij,jl,kml->im", ls, r, ls.conj())
            out = out - 0.5 * (ldl @ r + r @ ldl)
        return out

    proj = np.asarray(proj_diag, dtype=float)
    acc = 0.0
    if average:
        acc += 0.5 * float(np.real(np.diagonal(rho)) @ proj)
    for step in range(n_steps):
        t = t0 + step * dt
        k1 = rhs(t, rho)
        k2 = rhs(t + dt / 2, rho + (dt / 2) * k1)
        k3 = rhs(t + dt / 2, rho + (dt / 2) * k2)
        k4 = rhs(t + dt, rho + dt * k3)
        rho += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if average:
            weight = 0.5 if step == n_steps - 1 else 1.0
            acc += weight * float(np.real(np.diagonal(rho)) @ proj)
    if average and n_steps > 0:
        acc /= n_steps
    return acc
