"""Input and invariant checks in the style of ``sklearn.utils.validation``.

Each ``check_*`` returns the validated (converted) input or raises.
"""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .errors import LengthMismatch
from .phasematch import check_betas

__all__ = [
    "check_betas",
    "check_commutation",
    "check_correlation_matrix",
    "check_frequency_grid",
    "check_iq_samples",
    "check_loss_db",
    "check_symplectic",
]


def check_frequency_grid(freqs, name="freqs"):
    """Positive, strictly increasing 1-D frequency grid (Hz)."""
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(f)) or f[0] <= 0 or np.any(np.diff(f) <= 0):
        raise ValueError(f"{name} must be positive and strictly increasing")
    return f


def check_loss_db(db, name="loss"):
    """Insertion loss in dB, which must be <= 0."""
    db = float(db)
    if not np.isfinite(db) or db > 0:
        raise ValueError(f"{name} must be a finite value <= 0 dB")
    return db


def check_iq_samples(samples, min_samples=1):
    """``(n, 2)`` finite float array of (I, Q) samples."""
    x = check_array(samples, dtype=float)
    if x.shape[1] != 2:
        raise ValueError("samples must have two columns (I, Q)")
    if x.shape[0] < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.shape[0]}")
    return x


def check_correlation_matrix(C):
    """Square ``2n x 2n`` complex correlation matrix."""
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] % 2:
        raise LengthMismatch("correlation matrix must be 2n x 2n")
    return C


def check_commutation(C, atol=1e-8):
    """Largest deviation of ``<c_i c_j†> - <c_j† c_i>`` from ``δ_ij``.

    Raises ``ValueError`` above ``atol``; returns the deviation otherwise.
    """
    C = check_correlation_matrix(C)
    n = C.shape[0] // 2
    err = float(np.max(np.abs(C[:n, n:] - C[n:, :n].T - np.eye(n))))
    if err > atol:
        raise ValueError(f"commutation relations violated by {err:.3g}")
    return err


def check_symplectic(S, atol=1e-8):
    """Largest entry of ``S K S† - K``; raises ``ValueError`` above ``atol``."""
    S = np.asarray(S, dtype=complex)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        raise LengthMismatch("transfer matrix must be 2n x 2n")
    n = S.shape[0] // 2
    K = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
    err = float(np.max(np.abs(S @ K @ S.conj().T - K)))
    if err > atol:
        raise ValueError(f"transfer matrix is not symplectic (deviation {err:.3g})")
    return err
