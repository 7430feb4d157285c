"""Reproducible synthetic instances: low-rank design, Bernoulli mask,
sparse coefficients, noisy labels, and a 4/5 train-test split.

Every generator derives its own RNG stream from (seed, purpose tag), so
adding a generator never perturbs the draws of the existing ones, and the
same seed always reproduces the same instance bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .completion import MaskedMatrix
from .linalg import as_matrix
from .solvers import SparseVector

_PURPOSE_CODES = {
    "low_rank": 101,
    "mask": 102,
    "beta": 103,
    "labels": 104,
    "split": 105,
}

# Minimum magnitude for nonzero coefficients: keeps them separated from zero
# so support recovery is well-posed.
MIN_COEF_MAGNITUDE = 0.1

TRAIN_FRACTION = 4 / 5


def _rng(seed: int, purpose: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), _PURPOSE_CODES[purpose]]))


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one synthetic instance."""

    m: int
    n: int
    r: int
    s: int
    alpha_obs: float
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"dimensions must be positive, got {self.m}x{self.n}")
        if not 0 <= self.r <= min(self.m, self.n):
            raise ValueError(f"rank {self.r} out of range for {self.m}x{self.n}")
        if not 0 <= self.s <= self.n:
            raise ValueError(f"sparsity {self.s} out of range for n={self.n}")
        if not 0.0 < self.alpha_obs <= 1.0:
            raise ValueError(f"alpha_obs must lie in (0, 1], got {self.alpha_obs}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")


@dataclass(frozen=True)
class Instance:
    """A realized experiment: ground truth plus what the solvers may see."""

    x_true: np.ndarray
    masked: MaskedMatrix
    beta_true: SparseVector
    y: np.ndarray
    train_rows: np.ndarray
    test_rows: np.ndarray


def gen_low_rank(m: int, n: int, r: int, seed: int) -> np.ndarray:
    """Rank-r matrix from orthonormalized Gaussian factors.

    Left/right factors are Q factors of standard Gaussian matrices; the r
    singular values are absolute values of standard Gaussians (magnitudes,
    since singular values cannot be negative).
    """
    if r > min(m, n) or r < 0:
        raise ValueError(f"rank {r} out of range for a {m}x{n} matrix")
    if r == 0:
        return np.zeros((m, n))
    rng = _rng(seed, "low_rank")
    u, _ = np.linalg.qr(rng.standard_normal((m, r)))
    v, _ = np.linalg.qr(rng.standard_normal((n, r)))
    d = np.abs(rng.standard_normal(r))
    return (u * d) @ v.T


def apply_bernoulli_mask(m, alpha_obs: float, seed: int) -> MaskedMatrix:
    """Observe each entry independently with probability alpha_obs."""
    a = as_matrix(m)
    if not 0.0 <= alpha_obs <= 1.0:
        raise ValueError(f"alpha_obs must lie in [0, 1], got {alpha_obs}")
    rng = _rng(seed, "mask")
    observed = rng.random(a.shape) < alpha_obs
    return MaskedMatrix(a, observed)


def gen_sparse_beta(n: int, s: int, seed: int) -> SparseVector:
    """Exactly s nonzero Gaussian coefficients at uniform random positions.

    Magnitudes below MIN_COEF_MAGNITUDE are redrawn.
    """
    if s > n or s < 0:
        raise ValueError(f"sparsity {s} out of range for n={n}")
    rng = _rng(seed, "beta")
    beta = np.zeros(n)
    if s == 0:
        return SparseVector(beta)
    idx = rng.choice(n, size=s, replace=False)
    vals = rng.standard_normal(s)
    small = np.abs(vals) < MIN_COEF_MAGNITUDE
    while np.any(small):
        vals[small] = rng.standard_normal(int(small.sum()))
        small = np.abs(vals) < MIN_COEF_MAGNITUDE
    beta[idx] = vals
    return SparseVector(beta)


def gen_labels(x, beta, noise_sigma: float, seed: int) -> np.ndarray:
    """Labels ``y = x @ beta + noise_sigma * g`` with standard Gaussian g."""
    a = as_matrix(x)
    b = beta.entries if isinstance(beta, SparseVector) else np.asarray(beta, dtype=float)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"design has {a.shape[1]} columns but beta has {b.shape[0]}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be non-negative, got {noise_sigma}")
    y = a @ b
    if noise_sigma > 0:
        y = y + noise_sigma * _rng(seed, "labels").standard_normal(a.shape[0])
    return y


def split_train_test(m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random partition of {0..m-1} with round(4m/5) training rows."""
    if m < 5:
        raise ValueError(f"need at least 5 rows to split, got {m}")
    n_train = round(TRAIN_FRACTION * m)
    perm = _rng(seed, "split").permutation(m)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def generate_instance(spec: ExperimentSpec) -> Instance:
    """Draw a full instance from the spec, deterministically in its seed."""
    x_true = gen_low_rank(spec.m, spec.n, spec.r, spec.seed)
    masked = apply_bernoulli_mask(x_true, spec.alpha_obs, spec.seed)
    beta_true = gen_sparse_beta(spec.n, spec.s, spec.seed)
    y = gen_labels(x_true, beta_true, spec.noise_sigma, spec.seed)
    train_rows, test_rows = split_train_test(spec.m, spec.seed)
    return Instance(x_true, masked, beta_true, y, train_rows, test_rows)


# On-disk layout (see README): spec.json holds the ExperimentSpec fields plus
# the train/test row indices; the arrays live in one CSV each.
_SPEC_FILE = "spec.json"
_FILES = {
    "x_true": "x_true.csv",
    "values": "values.csv",
    "mask": "mask.csv",
    "beta": "beta.csv",
    "y": "y.csv",
}


def save_instance(path, spec: ExperimentSpec, instance: Instance) -> None:
    """Write an instance directory: spec.json plus one CSV per array."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    header = {
        "m": spec.m,
        "n": spec.n,
        "r": spec.r,
        "s": spec.s,
        "alpha_obs": spec.alpha_obs,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "train_rows": instance.train_rows.tolist(),
        "test_rows": instance.test_rows.tolist(),
    }
    (out / _SPEC_FILE).write_text(json.dumps(header, indent=2))
    np.savetxt(out / _FILES["x_true"], instance.x_true, delimiter=",", fmt="%.17g")
    np.savetxt(out / _FILES["values"], instance.masked.values, delimiter=",", fmt="%.17g")
    np.savetxt(out / _FILES["mask"], instance.masked.observed.astype(int), delimiter=",", fmt="%d")
    np.savetxt(out / _FILES["beta"], instance.beta_true.entries, delimiter=",", fmt="%.17g")
    np.savetxt(out / _FILES["y"], instance.y, delimiter=",", fmt="%.17g")


def load_instance(path) -> tuple[ExperimentSpec, Instance]:
    """Read back an instance directory written by save_instance."""
    src = Path(path)
    header = json.loads((src / _SPEC_FILE).read_text())
    spec = ExperimentSpec(
        m=header["m"],
        n=header["n"],
        r=header["r"],
        s=header["s"],
        alpha_obs=header["alpha_obs"],
        noise_sigma=header["noise_sigma"],
        seed=header["seed"],
    )
    x_true = np.loadtxt(src / _FILES["x_true"], delimiter=",", ndmin=2)
    values = np.loadtxt(src / _FILES["values"], delimiter=",", ndmin=2)
    mask = np.loadtxt(src / _FILES["mask"], delimiter=",", ndmin=2).astype(bool)
    beta = np.loadtxt(src / _FILES["beta"], delimiter=",", ndmin=1)
    y = np.loadtxt(src / _FILES["y"], delimiter=",", ndmin=1)
    instance = Instance(
        x_true=x_true,
        masked=MaskedMatrix(values, mask),
        beta_true=SparseVector(beta),
        y=y,
        train_rows=np.asarray(header["train_rows"], dtype=int),
        test_rows=np.asarray(header["test_rows"], dtype=int),
    )
    return spec, instance
