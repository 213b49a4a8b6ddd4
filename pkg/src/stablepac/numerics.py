"""Deterministic numerical primitives shared by the whole package.

Everything here is reproducible by construction: power iteration starts from
fixed vectors, sums are accumulated in ascending index order, and random
sources are seeded PCG64 generators.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DegenerateTruncationError, InstabilityError

# Power iteration on the Gram matrix: convergence tolerance on the Rayleigh
# quotient and hard iteration cap.
_POWER_TOL = 1e-12
_POWER_MAX_ITER = 10_000

# Lyapunov series: stop when the increment norm drops below this, give up
# after this many terms.
_LYAP_INCREMENT_TOL = 1e-14
_LYAP_MAX_TERMS = 100_000


def seeded_rng(seed: int) -> np.random.Generator:
    """Return a PCG64-backed generator. Identical seed, identical stream."""
    return np.random.Generator(np.random.PCG64(seed))


def check_finite_matrix(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Coerce to a float64 2-d array and reject non-finite entries."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _power_iterate(gram: np.ndarray, v: np.ndarray) -> float:
    """Largest eigenvalue estimate of a symmetric PSD matrix from one start vector."""
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        return 0.0
    v = v / nrm
    lam = 0.0
    for _ in range(_POWER_MAX_ITER):
        w = gram @ v
        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            # v lies in the kernel; this start contributes nothing.
            return 0.0
        v = w / wn
        lam_new = float(v @ (gram @ v))
        if abs(lam_new - lam) <= _POWER_TOL * max(1.0, lam_new):
            return lam_new
        lam = lam_new
    return lam


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value via power iteration on ``m.T @ m``.

    Deterministic: iterates from the all-ones vector, plus a second fixed
    start (1, 1/2, 1/3, ...) that cannot be orthogonal to the dominant
    eigenvector at the same time as the first, and takes the larger estimate.
    """
    m = check_finite_matrix(m)
    if m.size == 0:
        return 0.0
    gram = m.T @ m
    n = gram.shape[0]
    v_ones = np.ones(n)
    v_harmonic = 1.0 / np.arange(1.0, n + 1.0)
    lam = max(_power_iterate(gram, v_ones), _power_iterate(gram, v_harmonic))
    return math.sqrt(max(lam, 0.0))


def log_mean_exp(values: Sequence[float]) -> float:
    """ln((1/n) * sum(exp(v_i))) with max-shift stabilisation.

    Accumulation runs in ascending index order so the result is bit-identical
    no matter how the caller produced the list.
    """
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise ValueError("log_mean_exp needs a nonempty 1-d list of values")
    if not np.all(np.isfinite(vals)):
        raise ValueError("log_mean_exp values must be finite")
    shift = float(np.max(vals))
    acc = 0.0
    for v in vals:
        acc += math.exp(v - shift)
    return shift + math.log(acc / vals.size)


def truncated_gaussian(
    rng: np.random.Generator, std: float, bound: float, n: int
) -> np.ndarray:
    """n i.i.d. draws from N(0, std^2) conditioned on |value| <= bound.

    Plain rejection sampling in fixed-size chunks; deterministic for a given
    generator state.
    """
    if std <= 0 or bound <= 0:
        raise ValueError("std and bound must be positive")
    if n <= 0:
        raise ValueError("n must be a positive integer")
    if bound / std < 1e-6:
        raise DegenerateTruncationError(
            f"bound/std = {bound / std:.3e} is too small; rejection would stall"
        )
    out = np.empty(n)
    filled = 0
    # Oversample by the inverse acceptance probability to keep chunk count low.
    accept_p = math.erf(bound / (std * math.sqrt(2.0)))
    chunk = max(64, int(1.2 * n / accept_p) + 1)
    while filled < n:
        draws = rng.normal(0.0, std, size=chunk)
        kept = draws[np.abs(draws) <= bound]
        take = min(kept.size, n - filled)
        out[filled : filled + take] = kept[:take]
        filled += take
    return out


def discrete_lyapunov(a: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve a.T @ P @ a - P + q = 0 by summing the series sum_k (a.T)^k q a^k.

    Requires the spectral radius of ``a`` to be below one; divergence of the
    series is detected and reported as instability.
    """
    a = check_finite_matrix(a, "a")
    q = check_finite_matrix(q, "q")
    if a.shape[0] != a.shape[1] or a.shape != q.shape:
        raise ValueError("a and q must be square matrices of the same size")
    scale = max(float(np.linalg.norm(q)), 1.0)
    p = q.copy()
    term = q.copy()
    for _ in range(_LYAP_MAX_TERMS):
        term = a.T @ term @ a
        inc = float(np.linalg.norm(term))
        if not math.isfinite(inc) or inc > 1e12 * scale:
            raise InstabilityError("Lyapunov series diverges: spectral radius of a is >= 1")
        p += term
        if inc < _LYAP_INCREMENT_TOL * scale:
            # Symmetrise to remove floating-point drift.
            return 0.5 * (p + p.T)
    raise InstabilityError(
        f"Lyapunov series did not converge within {_LYAP_MAX_TERMS} terms"
    )
