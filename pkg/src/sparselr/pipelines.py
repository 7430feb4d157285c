"""End-to-end recovery strategies on a masked low-rank design.

Three pipelines:

* ``two_step``: accurate completion of the whole matrix, then one sparse
  solve.
* ``four_step``: cheap completion + sparse solve alternated to a coarse
  tolerance to estimate the support, then column restriction and an accurate
  re-run to a fine tolerance, then re-embedding to full length.
* ``augmented_four_step``: the four-step phase structure, but every
  completion operates on the design concatenated with the label column (all
  of it observed); the appended column is re-imposed to ``X @ beta`` after
  each sparse step.

Each phase alternates {complete, sparse-solve} until consecutive coefficient
vectors move less than the phase tolerance, warm-starting the completion
from the previous iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .completion import (
    ACCURATE_MAX_ITERS,
    ACCURATE_REL_TOL,
    QUICK_MAX_ITERS,
    QUICK_REL_TOL,
    Budget,
    CompletionCache,
    CompletionConfig,
    MaskedMatrix,
    soft_impute,
)
from .linalg import as_vector, least_squares
from .solvers import DEFAULT_ZERO_TOL, ImatConfig, LassoConfig, SparseVector, imatcs, lasso, support


class FinalSolver(Enum):
    LASSO = "lasso"
    IMATCS = "imat"


@dataclass(frozen=True)
class PipelineParams:
    """Knobs shared by all pipelines.

    ``outer_tol`` stops the coarse (support-finding) alternation;
    ``refine_tol`` stops the restricted re-run and must be smaller.
    ``lambda1`` weighs the completion's nuclear norm, ``lambda2`` the sparse
    stage (L1 weight for LASSO, terminal threshold floor for IMATCS).
    The quick/accurate fields override the completion budgets when a caller
    needs a different accuracy/cost trade-off.
    """

    lambda1: float
    lambda2: float
    outer_tol: float = 1e-3
    refine_tol: float = 1e-5
    final_solver: FinalSolver = FinalSolver.IMATCS
    max_outer: int = 50
    zero_tol: float = DEFAULT_ZERO_TOL
    quick_max_iters: int = QUICK_MAX_ITERS
    quick_rel_tol: float = QUICK_REL_TOL
    accurate_max_iters: int = ACCURATE_MAX_ITERS
    accurate_rel_tol: float = ACCURATE_REL_TOL

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalties must be non-negative")
        if self.outer_tol <= 0 or self.refine_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.refine_tol >= self.outer_tol:
            raise ValueError(
                f"refine_tol ({self.refine_tol}) must be smaller than outer_tol ({self.outer_tol})"
            )
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")

    def quick_cfg(self) -> CompletionConfig:
        return CompletionConfig(self.lambda1, self.quick_max_iters, self.quick_rel_tol, Budget.QUICK)

    def accurate_cfg(self) -> CompletionConfig:
        return CompletionConfig(
            self.lambda1, self.accurate_max_iters, self.accurate_rel_tol, Budget.ACCURATE
        )


@dataclass
class RecoveryResult:
    """Recovered coefficients plus per-stage bookkeeping."""

    beta_hat: SparseVector
    support_estimate: np.ndarray
    stage_times: dict[str, float]
    outer_iterations: dict[str, int]
    objective_traces: dict[str, list[float]]
    converged: bool


class EmptySupportError(RuntimeError):
    """The support-finding phase returned no nonzero coefficients.

    Carries the phase result in ``partial`` so callers can fall back to the
    whole-matrix pipeline or score the (near-zero) coefficients directly.
    """

    def __init__(self, message: str, partial: RecoveryResult):
        super().__init__(message)
        self.partial = partial


OuterCallback = Callable[[str, np.ndarray, np.ndarray, np.ndarray | None], None]


def restrict_columns(masked: MaskedMatrix, support_idx) -> MaskedMatrix:
    """Keep only the given columns (values and mask alike)."""
    idx = np.asarray(support_idx, dtype=int)
    n = masked.shape[1]
    if idx.size == 0:
        raise ValueError("support is empty")
    if np.any(idx < 0) or np.any(idx >= n):
        raise ValueError(f"support indices out of range for {n} columns")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("support indices must be strictly ascending")
    return MaskedMatrix(masked.values[:, idx], masked.observed[:, idx])


def embed_support(beta_s: SparseVector, support_idx, n: int) -> SparseVector:
    """Place the restricted coefficients back into a length-n vector of zeros."""
    idx = np.asarray(support_idx, dtype=int)
    if idx.size != len(beta_s):
        raise ValueError(f"{len(beta_s)} coefficients but {idx.size} support indices")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError(f"support indices out of range for length {n}")
    out = np.zeros(n)
    out[idx] = beta_s.entries
    return SparseVector(out, beta_s.zero_tol)


def _check_dims(masked: MaskedMatrix, y: np.ndarray) -> None:
    if masked.shape[0] != y.shape[0]:
        raise ValueError(f"matrix has {masked.shape[0]} rows but y has {y.shape[0]}")


def _solve_sparse(
    x: np.ndarray,
    y: np.ndarray,
    params: PipelineParams,
    factors=None,
    n_design: int | None = None,
) -> np.ndarray:
    """Sparse stage; reuses the completion's SVD factors for X'X when given."""
    gram = None
    sq_opnorm = None
    if factors is not None:
        _, s, vt = factors
        if n_design is not None:
            # factors describe the augmented matrix; slicing the right
            # vectors gives the design block's gram exactly, but its
            # operator norm is no longer s[0], so leave it to the solver
            vt = vt[:, :n_design]
        elif s.size:
            sq_opnorm = float(s[0] ** 2)
        keep = s > 0.0
        gram = (vt[keep].T * s[keep] ** 2) @ vt[keep]
    if params.final_solver is FinalSolver.LASSO:
        return lasso(x, y, LassoConfig(lam=params.lambda2), gram=gram).entries
    return imatcs(
        x, y, ImatConfig(tau_floor=params.lambda2), gram=gram, sq_opnorm=sq_opnorm
    ).entries


def _augment(masked: MaskedMatrix, y: np.ndarray) -> MaskedMatrix:
    """Append the label vector as a fully observed extra column."""
    values = np.hstack([masked.values, y[:, None]])
    observed = np.hstack([masked.observed, np.ones((y.shape[0], 1), dtype=bool)])
    return MaskedMatrix(values, observed)


def _run_alternation(
    design: MaskedMatrix,
    y: np.ndarray,
    params: PipelineParams,
    cfg: CompletionConfig,
    tol: float,
    cache: CompletionCache | None,
    augmented: bool,
    callback: OuterCallback | None,
    phase: str,
):
    """Alternate {complete, sparse solve} until ``||b_k - b_{k+1}|| <= tol``.

    Returns (beta, n_outer, completion trace, converged, completion seconds,
    sparse seconds). The coefficient vector is initialized from the
    pseudo-inverse of the zero-filled design; if that already agrees with the
    zero vector to tolerance, no alternation runs.
    """
    n = design.shape[1]
    comp_input = _augment(design, y) if augmented else design

    t0 = time.perf_counter()
    beta_cur = least_squares(design.values, y)
    t_sparse = time.perf_counter() - t0
    t_complete = 0.0

    trace: list[float] = []
    warm: np.ndarray | None = None
    outer = 0
    converged = bool(np.linalg.norm(beta_cur) <= tol)
    while not converged and outer < params.max_outer:
        outer += 1
        t0 = time.perf_counter()
        if warm is None and cache is not None:
            res = cache.solve(comp_input, cfg)
        else:
            res = soft_impute(comp_input, cfg, x0=warm)
        t_complete += time.perf_counter() - t0
        trace.extend(res.objective_trace.tolist())

        x_design = res.completed[:, :n] if augmented else res.completed
        t0 = time.perf_counter()
        beta_new = _solve_sparse(
            x_design, y, params, factors=res.factors, n_design=n if augmented else None
        )
        t_sparse += time.perf_counter() - t0

        if augmented:
            warm = np.hstack([x_design, (x_design @ beta_new)[:, None]])
        else:
            warm = res.completed
        if callback is not None:
            callback(phase, x_design, beta_new, warm[:, -1] if augmented else None)

        change = float(np.linalg.norm(beta_new - beta_cur))
        beta_cur = beta_new
        if change <= tol:
            converged = True
    return beta_cur, outer, trace, converged, t_complete, t_sparse


def two_step(
    masked: MaskedMatrix,
    y,
    params: PipelineParams,
    cache: CompletionCache | None = None,
) -> RecoveryResult:
    """Accurate completion of the full matrix, then one sparse solve."""
    yv = as_vector(y, "labels")
    _check_dims(masked, yv)
    cfg = params.accurate_cfg()
    t0 = time.perf_counter()
    res = cache.solve(masked, cfg) if cache is not None else soft_impute(masked, cfg)
    t_mc2 = time.perf_counter() - t0
    t0 = time.perf_counter()
    beta = SparseVector(
        _solve_sparse(res.completed, yv, params, factors=res.factors), params.zero_tol
    )
    t_solver = time.perf_counter() - t0
    return RecoveryResult(
        beta_hat=beta,
        support_estimate=support(beta),
        stage_times={"mc2": t_mc2, "solver": t_solver},
        outer_iterations={"mc2": res.iterations_used},
        objective_traces={"mc2": res.objective_trace.tolist()},
        converged=res.converged,
    )


def _four_step_impl(
    masked: MaskedMatrix,
    y: np.ndarray,
    params: PipelineParams,
    cache: CompletionCache | None,
    callback: OuterCallback | None,
    augmented: bool,
) -> RecoveryResult:
    yv = as_vector(y, "labels")
    _check_dims(masked, yv)
    n = masked.shape[1]

    beta_a, outer_a, trace_a, conv_a, t_mc1, t_sup = _run_alternation(
        masked, yv, params, params.quick_cfg(), params.outer_tol, cache, augmented, callback, "phase_a"
    )
    support_idx = np.flatnonzero(np.abs(beta_a) > params.zero_tol)
    if support_idx.size == 0:
        partial = RecoveryResult(
            beta_hat=SparseVector(beta_a, params.zero_tol),
            support_estimate=support_idx,
            stage_times={"mc1": t_mc1, "support_solver": t_sup, "mc2": 0.0, "solver": 0.0},
            outer_iterations={"phase_a": outer_a, "phase_b": 0},
            objective_traces={"phase_a": trace_a, "phase_b": []},
            converged=conv_a,
        )
        raise EmptySupportError("support estimate is empty after the coarse phase", partial)

    restricted = restrict_columns(masked, support_idx)
    beta_b, outer_b, trace_b, conv_b, t_mc2, t_solver = _run_alternation(
        restricted,
        yv,
        params,
        params.accurate_cfg(),
        params.refine_tol,
        cache,
        augmented,
        callback,
        "phase_b",
    )
    beta_full = embed_support(SparseVector(beta_b, params.zero_tol), support_idx, n)
    return RecoveryResult(
        beta_hat=beta_full,
        support_estimate=support(beta_full),
        stage_times={"mc1": t_mc1, "support_solver": t_sup, "mc2": t_mc2, "solver": t_solver},
        outer_iterations={"phase_a": outer_a, "phase_b": outer_b},
        objective_traces={"phase_a": trace_a, "phase_b": trace_b},
        converged=conv_a and conv_b,
    )


def four_step(
    masked: MaskedMatrix,
    y,
    params: PipelineParams,
    cache: CompletionCache | None = None,
    outer_callback: OuterCallback | None = None,
) -> RecoveryResult:
    """Coarse support estimate, column restriction, accurate re-run, re-embed.

    Raises EmptySupportError (carrying the coarse-phase result) when the
    support estimate comes back empty.
    """
    return _four_step_impl(masked, y, params, cache, outer_callback, augmented=False)


def augmented_four_step(
    masked: MaskedMatrix,
    y,
    params: PipelineParams,
    cache: CompletionCache | None = None,
    outer_callback: OuterCallback | None = None,
) -> RecoveryResult:
    """Four-step variant whose completions run on ``[X | y]``.

    The label column is fully observed, so completing it jointly lets the
    labels inform the recovered design; after each sparse step the appended
    column of the carried iterate is re-imposed to ``X @ beta`` exactly.
    """
    return _four_step_impl(masked, y, params, cache, outer_callback, augmented=True)
