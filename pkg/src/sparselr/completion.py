"""Soft-impute style matrix completion on explicitly masked matrices.

The solver minimizes ``||P_obs(X - M)||_F^2 + lam * ||X||_*`` by repeatedly
filling the unobserved entries from the current iterate and shrinking all
singular values by ``lam / 2``. Two budgets are provided: a cheap capped pass
(``Budget.QUICK``) and an accurate pass (``Budget.ACCURATE``).
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg import as_matrix, nuclear_norm


class DegenerateInputError(ValueError):
    """Raised when a masked matrix has no observed entries."""


@dataclass(frozen=True)
class MaskedMatrix:
    """A dense value grid plus a boolean mask of which entries are observed.

    Unobserved positions are stored as 0 but are never read as data: every
    consumer goes through ``observed``. The constructor normalizes the
    unobserved positions to 0, so two masked matrices that agree on the
    observed entries are identical arrays.
    """

    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        obs = np.asarray(self.observed, dtype=bool)
        if vals.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {vals.shape}")
        if obs.shape != vals.shape:
            raise ValueError(
                f"mask shape {obs.shape} does not match values shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals[obs])):
            raise ValueError("observed entries contain non-finite values")
        object.__setattr__(self, "values", np.where(obs, vals, 0.0))
        object.__setattr__(self, "observed", obs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_observed(self) -> int:
        return int(self.observed.sum())

    @property
    def observed_fraction(self) -> float:
        return self.n_observed / self.values.size

    def take_rows(self, rows) -> "MaskedMatrix":
        """Masked matrix restricted to the given row indices."""
        idx = np.asarray(rows, dtype=int)
        return MaskedMatrix(self.values[idx], self.observed[idx])


class Budget(Enum):
    QUICK = "quick"
    ACCURATE = "accurate"


QUICK_MAX_ITERS = 5
QUICK_REL_TOL = 1e-2
ACCURATE_MAX_ITERS = 500
ACCURATE_REL_TOL = 1e-6


@dataclass(frozen=True)
class CompletionConfig:
    """Completion hyperparameters: nuclear-norm weight and stopping rule."""

    lambda1: float
    max_iters: int = ACCURATE_MAX_ITERS
    rel_tol: float = ACCURATE_REL_TOL
    budget: Budget = Budget.ACCURATE

    def __post_init__(self):
        if self.lambda1 < 0:
            raise ValueError(f"lambda1 must be non-negative, got {self.lambda1}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")

    @classmethod
    def quick(cls, lambda1: float) -> "CompletionConfig":
        return cls(lambda1, QUICK_MAX_ITERS, QUICK_REL_TOL, Budget.QUICK)

    @classmethod
    def accurate(cls, lambda1: float) -> "CompletionConfig":
        return cls(lambda1, ACCURATE_MAX_ITERS, ACCURATE_REL_TOL, Budget.ACCURATE)


@dataclass
class CompletionResult:
    completed: np.ndarray
    objective_trace: np.ndarray
    iterations_used: int
    converged: bool
    iterates: list[np.ndarray] | None = field(default=None, repr=False)
    # thin SVD of `completed` (left vectors, shrunk singular values, right
    # vectors), available whenever the run shrank (lambda1 > 0); lets
    # downstream solvers form X'X in O(n^2 k) instead of O(m n^2)
    factors: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False
    )


def eval_objective(x, masked: MaskedMatrix, lam: float) -> float:
    """Sum of squared errors on the observed entries plus ``lam * ||x||_*``."""
    a = as_matrix(x)
    if a.shape != masked.shape:
        raise ValueError(f"shape {a.shape} does not match input {masked.shape}")
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    obs = masked.observed
    sq = float(np.sum((a[obs] - masked.values[obs]) ** 2))
    if lam == 0.0:
        return sq
    return sq + lam * nuclear_norm(a)


def soft_impute(
    masked: MaskedMatrix,
    cfg: CompletionConfig,
    x0: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> CompletionResult:
    """Iterate ``X <- shrink(fill(X))`` until the relative change is small.

    ``fill`` replaces the unobserved entries of the data with the current
    iterate; ``shrink`` soft-thresholds all singular values by ``lambda1/2``.
    Starts from the zero matrix unless ``x0`` warm-starts it. The objective
    value after each iteration is recorded and is non-increasing.

    Raises DegenerateInputError when nothing is observed.
    """
    if masked.n_observed == 0:
        raise DegenerateInputError("masked matrix has no observed entries")
    obs = masked.observed
    data = masked.values
    if x0 is None:
        x = np.zeros_like(data)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != data.shape:
            raise ValueError(f"warm start shape {x.shape} does not match {data.shape}")
    tau = cfg.lambda1 / 2.0
    trace: list[float] = []
    iterates: list[np.ndarray] = []
    factors = None
    converged = False
    iters = 0
    for _ in range(cfg.max_iters):
        iters += 1
        z = np.where(obs, data, x)
        if tau > 0.0:
            u, s, vt = np.linalg.svd(z, full_matrices=False)
            shrunk = np.maximum(s - tau, 0.0)
            x_new = (u * shrunk) @ vt
            factors = (u, shrunk, vt)
            obj = float(np.sum((x_new[obs] - data[obs]) ** 2)) + cfg.lambda1 * float(
                shrunk.sum()
            )
        else:
            x_new = z
            obj = float(np.sum((x_new[obs] - data[obs]) ** 2))
        trace.append(obj)
        if keep_iterates:
            iterates.append(x_new.copy())
        change = np.linalg.norm(x_new - x) / max(1.0, np.linalg.norm(x))
        x = x_new
        if change <= cfg.rel_tol:
            converged = True
            break
    return CompletionResult(
        completed=x,
        objective_trace=np.asarray(trace),
        iterations_used=iters,
        converged=converged,
        iterates=iterates if keep_iterates else None,
        factors=factors,
    )


def quick_complete(masked: MaskedMatrix, lambda1: float) -> CompletionResult:
    """Cheap completion pass: soft_impute at the QUICK budget (5 iterations)."""
    return soft_impute(masked, CompletionConfig.quick(lambda1))


class CompletionCache:
    """Memo for cold-start soft_impute solves.

    Cross-validation re-solves the identical completion subproblem for every
    point of the sparse-penalty grid; keying on (input digest, lambda,
    stopping rule) makes those hits free. Only cold starts are cached (warm
    starts depend on the caller's iterate). Cached results are shared:
    treat ``completed`` as read-only.
    """

    def __init__(self):
        self._store: dict[tuple, CompletionResult] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(masked: MaskedMatrix, cfg: CompletionConfig) -> tuple:
        digest = hashlib.sha1(
            np.ascontiguousarray(masked.values).tobytes()
            + np.packbits(masked.observed).tobytes()
        ).hexdigest()
        return (digest, masked.shape, cfg.lambda1, cfg.max_iters, cfg.rel_tol)

    def solve(self, masked: MaskedMatrix, cfg: CompletionConfig) -> CompletionResult:
        key = self._key(masked, cfg)
        with self._lock:
            hit = self._store.get(key)
        if hit is None:
            hit = soft_impute(masked, cfg)
            with self._lock:
                self._store[key] = hit
        return hit

    def __len__(self) -> int:
        return len(self._store)
