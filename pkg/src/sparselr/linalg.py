"""Dense linear-algebra primitives shared by the solvers.

Everything here is a thin, validated layer over LAPACK (via numpy): thin SVD,
singular-value soft-thresholding, operator norm, and minimum-norm least
squares. Matrices are plain float64 ``np.ndarray``s; no sparse formats.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class SvdFactors(NamedTuple):
    """Thin SVD ``u @ diag(s) @ vt`` with singular values sorted descending."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, raising ValueError otherwise."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array, raising ValueError otherwise."""
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def svd(m) -> SvdFactors:
    """Thin SVD of a dense matrix.

    Returns factors whose product reconstructs the input to a relative
    max-abs error of 1e-8; singular values are non-negative and
    non-increasing.
    """
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdFactors(u, s, vt)


def svt(m, tau: float) -> np.ndarray:
    """Singular-value soft-thresholding: shrink every singular value by tau.

    Computes ``u @ diag(max(s - tau, 0)) @ vt``, the proximal operator of
    ``tau * nuclear_norm`` under a squared Frobenius coupling.
    """
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    u, s, vt = svd(m)
    shrunk = np.maximum(s - tau, 0.0)
    return (u * shrunk) @ vt


def operator_norm(m) -> float:
    """Largest singular value of a dense matrix."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def nuclear_norm(m) -> float:
    """Sum of singular values."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False).sum())


# Singular values below RCOND * s_max are treated as zero in least_squares;
# fixed so results are reproducible across runs and platforms.
RCOND = 1e-10


def least_squares(x, y) -> np.ndarray:
    """Minimum-norm minimizer of ``||x @ beta - y||_2`` (pseudo-inverse solve)."""
    a = as_matrix(x, "design matrix")
    b = as_vector(y, "target")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"design has {a.shape[0]} rows but target has {b.shape[0]}")
    beta, *_ = np.linalg.lstsq(a, b, rcond=RCOND)
    return beta
