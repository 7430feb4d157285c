"""Sparse recovery on a dense design: LASSO coordinate descent and IMATCS.

LASSO solves ``min ||X b - y||^2 + lam * ||b||_1`` (note: no 1/2 factor on
the quadratic, so the identity-design solution soft-thresholds at lam/2).
IMATCS alternates a gradient step with hard thresholding under a
geometrically decaying threshold; the exact schedule and step policy are
implementation choices exposed through ImatConfig, since "adaptive
thresholding" admits several variants in the literature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .linalg import as_matrix, as_vector

DEFAULT_ZERO_TOL = 1e-8


class DivergenceRiskWarning(UserWarning):
    """Step size large enough that the thresholded iteration can diverge."""


@dataclass(frozen=True)
class SparseVector:
    """Coefficient vector with a tolerance defining its support."""

    entries: np.ndarray
    zero_tol: float = DEFAULT_ZERO_TOL

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 1:
            raise ValueError(f"entries must be 1-D, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("entries contain non-finite values")
        if self.zero_tol < 0:
            raise ValueError(f"zero_tol must be non-negative, got {self.zero_tol}")
        object.__setattr__(self, "entries", e)

    def __len__(self) -> int:
        return self.entries.shape[0]


def support(beta: SparseVector) -> np.ndarray:
    """Ascending indices i with |beta_i| > zero_tol."""
    return np.flatnonzero(np.abs(beta.entries) > beta.zero_tol)


@dataclass(frozen=True)
class LassoConfig:
    lam: float
    max_sweeps: int = 10_000
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be at least 1, got {self.max_sweeps}")
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")


@dataclass(frozen=True)
class ImatConfig:
    """IMATCS parameters. tau0/step default to data-driven values at solve
    time: tau0 = ||X.T y||_inf and step = 1 / operator_norm(X)^2."""

    tau0: float | None = None
    decay: float = 0.85
    step: float | None = None
    tau_floor: float = 0.0
    max_iters: int = 300
    rel_tol: float = 1e-7

    def __post_init__(self):
        if self.tau0 is not None and self.tau0 <= 0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")
        if self.step is not None and self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.tau_floor < 0:
            raise ValueError(f"tau_floor must be non-negative, got {self.tau_floor}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")


def _gram_pair(
    x: np.ndarray, y: np.ndarray, gram: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    if gram is None:
        gram = x.T @ x
    elif gram.shape != (x.shape[1], x.shape[1]):
        raise ValueError(f"gram shape {gram.shape} does not match {x.shape[1]} columns")
    return np.ascontiguousarray(gram), x.T @ y


def lasso(x, y, cfg: LassoConfig, gram: np.ndarray | None = None) -> SparseVector:
    """L1-penalized least squares via cyclic coordinate descent.

    The output satisfies the stationarity conditions of the penalized
    objective to within the configured tolerance; all-zero columns get
    coefficient 0 by convention. ``gram`` optionally supplies a precomputed
    ``x.T @ x`` (e.g. rebuilt cheaply from a low-rank factorization).
    """
    a = as_matrix(x, "design matrix")
    b = as_vector(y, "target")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"design has {a.shape[0]} rows but target has {b.shape[0]}")
    g, xty = _gram_pair(a, b, gram)
    beta = np.zeros(a.shape[1])
    kernels.cd_sweeps(g, xty, beta, cfg.lam, cfg.max_sweeps, cfg.rel_tol)
    return SparseVector(beta)


def imatcs(
    x,
    y,
    cfg: ImatConfig = ImatConfig(),
    gram: np.ndarray | None = None,
    sq_opnorm: float | None = None,
) -> SparseVector:
    """Iterative adaptive hard thresholding for sparse recovery.

    Iterates ``beta <- hard_threshold(beta + step * X.T (y - X beta), tau_k)``
    with ``tau_k = max(tau0 * decay^k, tau_floor)``. Entries outside the final
    active set are exactly zero. Warns when ``step * operator_norm(X)^2 >= 2``
    (the un-thresholded gradient iteration diverges in that regime).
    ``gram``/``sq_opnorm`` optionally supply precomputed ``x.T @ x`` and
    ``operator_norm(x)**2``.
    """
    a = as_matrix(x, "design matrix")
    b = as_vector(y, "target")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"design has {a.shape[0]} rows but target has {b.shape[0]}")
    gram, xty = _gram_pair(a, b, gram)
    if sq_opnorm is None:
        # largest eigenvalue of X^T X = operator_norm(X)^2
        sq_opnorm = float(np.linalg.eigvalsh(gram)[-1]) if gram.size else 0.0
    step = cfg.step if cfg.step is not None else (1.0 / sq_opnorm if sq_opnorm > 0 else 1.0)
    if step * sq_opnorm >= 2.0:
        warnings.warn(
            f"step {step:g} times squared operator norm {sq_opnorm:g} is >= 2; "
            "the iteration may diverge",
            DivergenceRiskWarning,
            stacklevel=2,
        )
    tau0 = cfg.tau0 if cfg.tau0 is not None else float(np.max(np.abs(xty), initial=0.0))
    beta = np.zeros(a.shape[1])
    kernels.imatcs_iters(
        gram, xty, beta, tau0, cfg.decay, step, cfg.tau_floor, cfg.max_iters, cfg.rel_tol
    )
    return SparseVector(beta)
