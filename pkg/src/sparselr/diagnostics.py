"""Numerical probes for the completion-then-regress error analysis.

Tracks how far intermediate completion iterates sit from the final one (in
operator norm), the deviation quantities that distance controls, the scale
factors appearing in the coefficient error bounds, a sampled check of the
lower restricted-eigenvalue condition, and an audit that evaluates all of
these along an actual solver trace. The audit measures; it does not prove.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector, operator_norm
from .solvers import LassoConfig, SparseVector, lasso
from .synth import Instance


def gap_opnorm(x_current, x_limit) -> float:
    """Operator norm of the gap between an iterate and the limit matrix."""
    a = as_matrix(x_current, "current iterate")
    b = as_matrix(x_limit, "limit")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return operator_norm(a - b)


@dataclass(frozen=True)
class BoundInputs:
    """Scalar inputs to the deviation scales and coefficient error bounds.

    ``gap_norm`` is the iterate-to-limit operator norm, ``limit_norm`` the
    operator norm of the limit itself, ``label_norm`` the l2 norm of the
    labels, ``coef_radius`` the assumed l2 radius of the coefficients,
    ``curvature``/``re_tol`` the lower-RE constants, ``penalty`` the sparse
    penalty in force, and ``bound_const`` the universal constant (reported
    as a parameter, never fitted).
    """

    gap_norm: float
    limit_norm: float
    label_norm: float
    coef_radius: float
    s: int
    m: int
    n: int
    curvature: float
    re_tol: float = 0.0
    penalty: float = 0.0
    bound_const: float = 1.0

    def __post_init__(self):
        if min(self.gap_norm, self.limit_norm, self.label_norm) < 0:
            raise ValueError("norms must be non-negative")
        if self.coef_radius <= 0:
            raise ValueError("coef_radius must be positive")
        if self.m < 1 or self.n < 1:
            raise ValueError("dimensions must be positive")
        if self.re_tol < 0 or self.penalty < 0:
            raise ValueError("re_tol and penalty must be non-negative")
        if self.bound_const <= 0:
            raise ValueError("bound_const must be positive")


def _rate(m: int, n: int) -> float:
    if n < 2:
        raise ValueError(f"need at least 2 columns for log(n), got {n}")
    return math.sqrt(math.log(n) / m)


def deviation_scale_labels(inputs: BoundInputs) -> float:
    """Scale factor from the labels: ``label_norm * gap_norm / sqrt(log n / m)``."""
    return inputs.label_norm * inputs.gap_norm / _rate(inputs.m, inputs.n)


def deviation_scale_gram(inputs: BoundInputs) -> float:
    """Scale factor from the Gram gap:
    ``3 * gap * (2 * limit + gap) * coef_radius / sqrt(log n / m)``."""
    g = inputs.gap_norm
    return 3.0 * g * (2.0 * inputs.limit_norm + g) * inputs.coef_radius / _rate(inputs.m, inputs.n)


def deviation_scale(inputs: BoundInputs) -> float:
    """Pointwise maximum of the label and Gram scale factors."""
    return max(deviation_scale_labels(inputs), deviation_scale_gram(inputs))


def deviation_lhs(x_current, x_limit, y, beta) -> tuple[float, float]:
    """The two deviation quantities controlled by the iterate gap.

    Returns ``(||(X_k - X_lim)^T y||_inf, ||(X_k^T X_k - X_lim^T X_lim) b||_inf)``.
    """
    a = as_matrix(x_current, "current iterate")
    lim = as_matrix(x_limit, "limit")
    yv = as_vector(y, "labels")
    b = beta.entries if isinstance(beta, SparseVector) else as_vector(beta, "beta")
    if a.shape != lim.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {lim.shape}")
    if a.shape[0] != yv.shape[0] or a.shape[1] != b.shape[0]:
        raise ValueError("labels or beta do not match the matrix dimensions")
    dev_labels = float(np.max(np.abs((a - lim).T @ yv), initial=0.0))
    dev_gram = float(np.max(np.abs(a.T @ (a @ b) - lim.T @ (lim @ b)), initial=0.0))
    return dev_labels, dev_gram


@dataclass(frozen=True)
class ReProbeReport:
    holds: bool
    worst_margin: float
    n_probes: int


# Violations smaller than this (on unit-norm probes) are float noise.
_RE_SLACK = 1e-9


def check_lower_re(
    gamma, curvature: float, re_tol: float, probes: int = 10_000, seed: int = 0
) -> ReProbeReport:
    """Sampled falsification probe of the lower restricted-eigenvalue bound.

    Tests ``t' G t >= curvature * ||t||_2^2 - re_tol * ||t||_1^2`` on random
    Gaussian, sparse, and sign vectors plus every standard basis vector.
    A clean pass is evidence, not a certificate.
    """
    g = as_matrix(gamma, "gamma")
    n = g.shape[0]
    if g.shape[0] != g.shape[1]:
        raise ValueError(f"matrix must be square, got {g.shape}")
    g = 0.5 * (g + g.T)
    if probes < 0:
        raise ValueError("probes must be non-negative")
    rng = np.random.default_rng(seed)

    def margin(t: np.ndarray) -> float:
        nt = np.linalg.norm(t)
        if nt == 0:
            return math.inf
        t = t / nt
        lhs = float(t @ (g @ t))
        rhs = curvature - re_tol * float(np.sum(np.abs(t))) ** 2
        return lhs - rhs

    worst = math.inf
    count = 0
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        worst = min(worst, margin(e))
        count += 1
    kinds = max(1, probes // 3)
    for _ in range(kinds):
        worst = min(worst, margin(rng.standard_normal(n)))
        count += 1
    for _ in range(kinds):
        k = int(rng.integers(1, max(2, n // 4 + 1)))
        t = np.zeros(n)
        idx = rng.choice(n, size=min(k, n), replace=False)
        t[idx] = rng.standard_normal(idx.size)
        worst = min(worst, margin(t))
        count += 1
    for _ in range(kinds):
        worst = min(worst, margin(rng.choice([-1.0, 1.0], size=n)))
        count += 1
    return ReProbeReport(holds=bool(worst >= -_RE_SLACK), worst_margin=float(worst), n_probes=count)


@dataclass(frozen=True)
class ErrorBounds:
    """Coefficient error bounds and the side condition they require."""

    l2_bound: float
    l1_bound: float
    dominant_term: float
    side_condition_holds: bool


def error_bounds(inputs: BoundInputs) -> ErrorBounds:
    """L2/L1 coefficient error bounds driven by the deviation scale.

    ``dominant = max(deviation_scale * sqrt(log n / m), penalty)``;
    l2 bound is ``bound_const * sqrt(s) / curvature`` times dominant, l1
    bound is ``8 * bound_const * s / curvature`` times dominant (their ratio
    is 8*sqrt(s) by construction). Also reports whether
    ``sqrt(s) * re_tol <= min(curvature / (128 sqrt(s)), scale * rate)``.
    """
    if inputs.curvature <= 0:
        raise ValueError(f"curvature must be positive, got {inputs.curvature}")
    rate = _rate(inputs.m, inputs.n)
    scaled = deviation_scale(inputs) * rate
    dominant = max(scaled, inputs.penalty)
    rs = math.sqrt(inputs.s)
    l2 = inputs.bound_const * rs / inputs.curvature * dominant
    l1 = 8.0 * inputs.bound_const * inputs.s / inputs.curvature * dominant
    side = rs * inputs.re_tol <= min(inputs.curvature / (128.0 * rs), scaled) if inputs.s > 0 else True
    return ErrorBounds(l2_bound=l2, l1_bound=l1, dominant_term=dominant, side_condition_holds=side)


@dataclass(frozen=True)
class AuditParams:
    """Constants the audit reports against (none are fitted from data)."""

    penalty: float = 0.1
    bound_const: float = 1.0
    curvature: float = 1.0
    re_tol: float = 0.0
    coef_radius: float | None = None  # default: 1.1 * ||beta_true||_2


# Relative slack for flagging the gap-norm sequence as non-increasing;
# absorbs float noise only.
_MONOTONE_SLACK = 1e-12


@dataclass
class BoundAudit:
    """Everything measured along one completion trace."""

    gap_norms: list[float]
    gap_nonincreasing: bool
    dev_labels: list[float]
    dev_gram: list[float]
    label_bounds: list[float]  # gap_norm * ||y||_2 per iterate
    gram_bounds: list[float]  # 3*gap*(2*limit+gap)*coef_radius per iterate
    scale_bounds: list[float]  # deviation_scale * sqrt(log n / m) per iterate
    labels_ok: bool
    gram_ok: bool
    coef_err_l2: list[float]
    coef_err_l1: list[float]
    coef_l2_bounds: list[float]
    coef_l1_bounds: list[float]
    l1_ball_ok: list[bool]  # ||beta_k||_1 <= coef_radius * sqrt(s) per iterate
    side_condition_holds: bool
    params: AuditParams = field(repr=False, default_factory=AuditParams)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "params"}
        d["params"] = self.params.__dict__.copy()
        return d


def run_bound_audit(instance: Instance, si_trace, params: AuditParams = AuditParams()) -> BoundAudit:
    """Evaluate the deviation inequalities and error bounds along a trace.

    ``si_trace`` holds successive completion iterates; the last one is
    treated as the limit. For each iterate the audit computes the gap norm,
    the two deviation quantities with their bounds, and a sparse solve whose
    coefficient error is compared against the bound formulas (as ratios
    parameterized by the reported constants).
    """
    trace = [as_matrix(x, f"iterate {i}") for i, x in enumerate(si_trace)]
    if len(trace) < 2:
        raise ValueError(f"need at least 2 iterates to audit, got {len(trace)}")
    limit = trace[-1]
    m, n = limit.shape
    y = as_vector(instance.y, "labels")
    beta_true = instance.beta_true.entries
    s = max(1, int(np.count_nonzero(beta_true)))
    radius = params.coef_radius
    if radius is None:
        radius = 1.1 * float(np.linalg.norm(beta_true))
        if radius == 0.0:
            radius = 1.0
    limit_norm = operator_norm(limit)
    label_norm = float(np.linalg.norm(y))

    gaps, devs_y, devs_g = [], [], []
    label_bounds, gram_bounds, scale_bounds = [], [], []
    err2, err1, b2, b1, ball_ok = [], [], [], [], []
    side_ok = True
    for x_k in trace:
        gap = gap_opnorm(x_k, limit)
        dy, dg = deviation_lhs(x_k, limit, y, beta_true)
        inputs = BoundInputs(
            gap_norm=gap,
            limit_norm=limit_norm,
            label_norm=label_norm,
            coef_radius=radius,
            s=s,
            m=m,
            n=n,
            curvature=params.curvature,
            re_tol=params.re_tol,
            penalty=params.penalty,
            bound_const=params.bound_const,
        )
        bounds = error_bounds(inputs)
        beta_k = lasso(x_k, y, LassoConfig(lam=params.penalty)).entries
        gaps.append(gap)
        devs_y.append(dy)
        devs_g.append(dg)
        label_bounds.append(gap * label_norm)
        gram_bounds.append(3.0 * gap * (2.0 * limit_norm + gap) * radius)
        scale_bounds.append(deviation_scale(inputs) * _rate(m, n))
        err2.append(float(np.linalg.norm(beta_k - beta_true)))
        err1.append(float(np.sum(np.abs(beta_k - beta_true))))
        b2.append(bounds.l2_bound)
        b1.append(bounds.l1_bound)
        ball_ok.append(bool(np.sum(np.abs(beta_k)) <= radius * math.sqrt(s)))
        side_ok = side_ok and bounds.side_condition_holds

    g = np.asarray(gaps)
    slack = _MONOTONE_SLACK * (g[0] if g[0] > 0 else 1.0)
    nonincreasing = bool(np.all(np.diff(g) <= slack))
    return BoundAudit(
        gap_norms=gaps,
        gap_nonincreasing=nonincreasing,
        dev_labels=devs_y,
        dev_gram=devs_g,
        label_bounds=label_bounds,
        gram_bounds=gram_bounds,
        scale_bounds=scale_bounds,
        labels_ok=bool(all(d <= b for d, b in zip(devs_y, label_bounds))),
        gram_ok=bool(all(d <= b for d, b in zip(devs_g, gram_bounds))),
        coef_err_l2=err2,
        coef_err_l1=err1,
        coef_l2_bounds=b2,
        coef_l1_bounds=b1,
        l1_ball_ok=ball_ok,
        side_condition_holds=side_ok,
        params=params,
    )
