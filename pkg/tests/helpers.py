"""Shared builders and oracles for the test suite."""

import math

import numpy as np

from stablepac import RnnSystem, activation


def eig_spectral_norm(m):
    """Independent oracle: largest singular value from an eigen-solve of m.T m."""
    m = np.asarray(m, dtype=float)
    return math.sqrt(max(np.max(np.linalg.eigvalsh(m.T @ m)), 0.0))


def random_contractive_system(rng, n_s=None, n_v=None, n_y=None, tau_range=(0.2, 0.95)):
    """Random block certified by the contraction condition, with scaled A."""
    n_s = n_s or int(rng.integers(1, 4))
    n_v = n_v or int(rng.integers(1, 3))
    n_y = n_y or int(rng.integers(1, 3))
    kind_f = rng.choice(["relu", "tanh", "identity", "sigmoid"])
    kind_g = rng.choice(["relu", "tanh", "identity", "sigmoid"])
    sigma_f = activation(kind_f)
    a = rng.normal(0, 1, size=(n_s, n_s))
    target_tau = rng.uniform(*tau_range)
    norm_a = np.linalg.norm(a, 2)
    if norm_a > 0:
        a *= target_tau / (sigma_f.lipschitz * norm_a)
    return RnnSystem(
        a=a,
        b=rng.normal(0, 1, size=(n_s, n_v)),
        b_s=rng.normal(0, 0.3, size=n_s),
        c=rng.normal(0, 1, size=(n_y, n_s)),
        d=rng.normal(0, 1, size=(n_y, n_v)),
        b_y=rng.normal(0, 0.3, size=n_y),
        sigma_f=sigma_f,
        sigma_g=activation(kind_g),
    )


def zero_bias_contractive_predictor(rng, x_sup, n_s=2, n_v=1, n_y=1):
    """Random certified predictor whose steady state obeys the amplitude bound.

    The state activation fixes sigma_f(0) = 0 and the state bias is kept
    within the input-gain envelope (lip * ||b_s|| <= l_v * x_sup), which makes
    the transient-gap inequality deterministic rather than statistical.
    """
    sigma_f = activation(str(rng.choice(["relu", "tanh", "identity"])))
    a = rng.normal(0, 1, size=(n_s, n_s))
    a *= rng.uniform(0.1, 0.9) / (sigma_f.lipschitz * max(np.linalg.norm(a, 2), 1e-9))
    b = rng.normal(0, 1, size=(n_s, n_v))
    l_v = sigma_f.lipschitz * np.linalg.norm(b, 2)
    b_s = rng.normal(0, 1, size=n_s)
    cap = 0.9 * l_v * x_sup / sigma_f.lipschitz
    if np.linalg.norm(b_s) > cap:
        b_s *= cap / np.linalg.norm(b_s)
    return RnnSystem(
        a=a,
        b=b,
        b_s=b_s,
        c=rng.normal(0, 1, size=(n_y, n_s)),
        d=rng.normal(0, 1, size=(n_y, n_v)),
        b_y=rng.normal(0, 0.3, size=n_y),
        sigma_f=sigma_f,
        sigma_g=activation("tanh"),
    )
