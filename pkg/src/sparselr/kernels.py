"""Hot inner loops: coordinate descent and adaptive hard thresholding.

Both kernels are written as plain numpy loops and jitted with numba when it
is available. Set ``SPARSELR_NO_NUMBA=1`` (or numba's own
``NUMBA_DISABLE_JIT``) to force the pure-numpy path; results are identical
either way, only speed differs. ``benchmarks/kernel_bench.py`` measures the
gap.

Both kernels work on the Gram form (``gram = X.T @ X``, ``xty = X.T @ y``),
which the callers precompute once: every sweep is then O(n^2) instead of
O(m*n), and the design matrix itself never enters the loop.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _numba_enabled() -> bool:
    if os.environ.get("SPARSELR_NO_NUMBA", "").strip().lower() not in ("", "0", "false"):
        return False
    if os.environ.get("NUMBA_DISABLE_JIT", "0") not in ("", "0"):
        return False
    return True


def cd_sweeps_py(gram, xty, beta, lam, max_sweeps, rel_tol):
    """Cyclic coordinate descent for ``||X b - y||^2 + lam * ||b||_1``.

    Covariance-update form: maintains ``gram @ beta`` incrementally. ``beta``
    is updated in place; returns the number of sweeps used. Convergence is
    declared when the largest coordinate move in a sweep is at most
    ``rel_tol * max(1, ||beta||_inf)``. Zero-norm columns keep coefficient 0.
    """
    n = beta.shape[0]
    gb = gram @ beta
    half = 0.5 * lam
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        max_delta = 0.0
        max_abs = 0.0
        for j in range(n):
            djj = gram[j, j]
            if djj <= 0.0:
                continue
            rho = xty[j] - gb[j] + djj * beta[j]
            if rho > half:
                b_new = (rho - half) / djj
            elif rho < -half:
                b_new = (rho + half) / djj
            else:
                b_new = 0.0
            delta = b_new - beta[j]
            if delta != 0.0:
                beta[j] = b_new
                gb += delta * gram[:, j]
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            if abs(b_new) > max_abs:
                max_abs = abs(b_new)
        scale = max_abs if max_abs > 1.0 else 1.0
        if max_delta <= rel_tol * scale:
            break
    return sweeps


def imatcs_iters_py(gram, xty, beta, tau0, decay, step, tau_floor, max_iters, rel_tol):
    """Gradient step + hard threshold with a geometrically decaying threshold.

    Iterates ``beta <- hard_threshold(beta + step * (xty - gram @ beta),
    max(tau0 * decay^k, tau_floor))``. ``beta`` is updated in place; returns
    the number of iterations used.

    The relative-change stop is armed only once the threshold schedule is
    exhausted (``decay^k <= rel_tol`` or the floor is reached): before that a
    small change can just mean the threshold has not yet crossed the next
    coefficient magnitude, not that the recursion is done.
    """
    n = beta.shape[0]
    tau = tau0
    sched = 1.0
    iters = 0
    for _ in range(max_iters):
        iters += 1
        if tau < tau_floor:
            tau = tau_floor
        z = beta + step * (xty - gram @ beta)
        change_sq = 0.0
        prev_sq = 0.0
        for j in range(n):
            zj = z[j]
            if zj > tau or zj < -tau:
                b_new = zj
            else:
                b_new = 0.0
            d = b_new - beta[j]
            change_sq += d * d
            prev_sq += beta[j] * beta[j]
            beta[j] = b_new
        exhausted = sched <= rel_tol or tau <= tau_floor
        tau *= decay
        sched *= decay
        denom = math.sqrt(prev_sq)
        if denom < 1.0:
            denom = 1.0
        if exhausted and math.sqrt(change_sq) <= rel_tol * denom:
            break
    return iters


USING_NUMBA = False
if _numba_enabled():
    try:
        from numba import njit

        cd_sweeps = njit(cache=True)(cd_sweeps_py)
        imatcs_iters = njit(cache=True)(imatcs_iters_py)
        USING_NUMBA = True
    except ImportError:
        cd_sweeps = cd_sweeps_py
        imatcs_iters = imatcs_iters_py
else:
    cd_sweeps = cd_sweeps_py
    imatcs_iters = imatcs_iters_py
