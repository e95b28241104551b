"""Dense complex linear algebra primitives and spin-1 operators.

Matrices are plain ``numpy.ndarray`` of dtype complex128.  The basis
ordering is fixed package-wide: electron (x) nuclear, each subspace ordered
|+1>, |0>, |-1>.  All operators built here are dimensionless; frequency
prefactors (including the single factor of 2*pi) are applied at Hamiltonian
assembly in :mod:`nvdual.model`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SpinOperators:
    """The standard spin-1 matrices in the |+1>, |0>, |-1> ordering."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    splus: np.ndarray
    sminus: np.ndarray


def spin1_operators() -> SpinOperators:
    """Return spin-1 operators satisfying [sx, sy] = i sz and cyclic."""
    sqrt2 = np.sqrt(2.0)
    splus = np.array(
        [[0, sqrt2, 0], [0, 0, sqrt2], [0, 0, 0]], dtype=np.complex128
    )
    sminus = splus.conj().T
    sx = (splus + sminus) / 2.0
    sy = (splus - sminus) / 2.0j
    sz = np.diag(np.array([1.0, 0.0, -1.0], dtype=np.complex128))
    return SpinOperators(sx=sx, sy=sy, sz=sz, splus=splus, sminus=sminus)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m).conj().T


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    """Check M = M^dagger to within ``tol`` relative to the matrix norm."""
    m = np.asarray(m)
    scale = max(np.linalg.norm(m), 1.0)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol * scale)


def expm(m: np.ndarray, tolerance: float = 1e-12) -> np.ndarray:
    """Matrix exponential of a square complex matrix.

    Backed by the scaling-and-squaring Pade approximation of
    ``scipy.linalg.expm``, which is accurate to machine precision and
    therefore meets any ``tolerance`` >= 1e-14 requested here.  Serves as
    the propagation oracle for the dynamics tests.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expm requires a square matrix, got shape {m.shape}")
    if tolerance < 1e-14:
        raise ValueError("tolerance below 1e-14 is not attainable in float64")
    return scipy.linalg.expm(m)
