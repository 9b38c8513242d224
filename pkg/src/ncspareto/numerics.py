"""Dense real-matrix kernel used by every other module.

Small matrices only (the switched closed loops here are at most 6x6), so
the routines favour robustness over asymptotic speed.  The heavy lifting
is delegated to LAPACK via numpy/scipy: ``expm`` is scaling-and-squaring
with a Pade approximant, ``eigvals`` is Hessenberg reduction plus shifted
QR, ``eigh`` is the symmetric QR algorithm.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import NumericalError

# Symmetry tolerance accepted by sym_eig (absolute, on max |S - S^T|).
SYMMETRY_TOL = 1e-12
# Eigenvalues above -PSD_CLAMP_TOL are accepted as nonnegative after projection.
PSD_CLAMP_TOL = 1e-10


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def mat_exp(A, t: float = 1.0) -> np.ndarray:
    """Matrix exponential exp(A*t)."""
    A = _as_square(A)
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    return expm(A * t)


def spectral_radius(A) -> float:
    """Largest eigenvalue magnitude of a (possibly non-symmetric) matrix."""
    A = _as_square(A)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(ev)))


def sym_eig(S, tol: float = SYMMETRY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues ascending, orthonormal eigenvectors as columns).
    """
    S = _as_square(S)
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return w, V


def psd_project(S) -> np.ndarray:
    """Nearest (Frobenius) positive-semidefinite matrix to a symmetric S."""
    w, V = sym_eig(S)
    w = np.maximum(w, 0.0)
    P = (V * w) @ V.T
    return 0.5 * (P + P.T)
