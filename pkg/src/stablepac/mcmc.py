"""Random-walk Metropolis-Hastings sampling in the log domain.

One chain is strictly sequential and deterministic given its seed; callers
wanting several chains run them with independent seeds and concatenate in
chain order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidStartError
from .numerics import seeded_rng


@dataclass(frozen=True)
class ChainConfig:
    """Chain length, burn-in, thinning, proposal scale, and seed."""

    steps: int
    burn_in: int
    thin: int
    proposal_std: float
    seed: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if not 0 <= self.burn_in < self.steps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < steps")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.proposal_std <= 0:
            raise ValueError("proposal_std must be positive")


@dataclass(frozen=True)
class ChainResult:
    """Retained states with their log-densities and acceptance bookkeeping."""

    samples: np.ndarray        # (kept, d)
    log_densities: np.ndarray  # (kept,)
    kept_steps: np.ndarray     # (kept,) 1-based step index of each retained state
    accepted: int
    steps: int


def mh_sample(
    log_density: Callable[[np.ndarray], float],
    init: np.ndarray,
    cfg: ChainConfig,
) -> ChainResult:
    """Gaussian random-walk chain targeting exp(log_density).

    Proposals use coordinatewise std ``cfg.proposal_std`` and are accepted
    with probability min(1, exp(delta log-density)); proposals landing at
    -inf are always rejected.  Retains the post-burn-in states thinned by
    ``cfg.thin``: exactly floor((steps - burn_in)/thin) of them.
    """
    x = np.asarray(init, dtype=float).copy()
    ld = float(log_density(x))
    if not math.isfinite(ld):
        raise InvalidStartError(f"log density at the initial point is {ld}")
    rng = seeded_rng(cfg.seed)
    d = x.size
    kept = []
    kept_ld = []
    kept_steps = []
    accepted = 0
    for step in range(1, cfg.steps + 1):
        prop = x + cfg.proposal_std * rng.normal(size=d)
        u = rng.uniform()
        ld_prop = float(log_density(prop))
        if ld_prop > -math.inf and (
            ld_prop >= ld or (u > 0.0 and math.log(u) < ld_prop - ld)
        ):
            x = prop
            ld = ld_prop
            accepted += 1
        if step > cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
            kept.append(x.copy())
            kept_ld.append(ld)
            kept_steps.append(step)
    return ChainResult(
        samples=np.array(kept).reshape(len(kept), d),
        log_densities=np.array(kept_ld),
        kept_steps=np.array(kept_steps, dtype=int),
        accepted=accepted,
        steps=cfg.steps,
    )


def mh_sample_chains(
    log_density: Callable[[np.ndarray], float],
    init: np.ndarray,
    cfg: ChainConfig,
    n_chains: int,
) -> ChainResult:
    """Run ``n_chains`` independent chains and merge them in chain order.

    Chain k uses seed ``cfg.seed + k``; the merged result concatenates the
    retained states chain by chain, so it is deterministic regardless of how
    the chains were scheduled.
    """
    if n_chains < 1:
        raise ValueError("n_chains must be positive")
    results = [
        mh_sample(log_density, init, replace_seed(cfg, cfg.seed + k))
        for k in range(n_chains)
    ]
    return ChainResult(
        samples=np.concatenate([r.samples for r in results]),
        log_densities=np.concatenate([r.log_densities for r in results]),
        kept_steps=np.concatenate([r.kept_steps for r in results]),
        accepted=sum(r.accepted for r in results),
        steps=sum(r.steps for r in results),
    )


def replace_seed(cfg: ChainConfig, seed: int) -> ChainConfig:
    return ChainConfig(
        steps=cfg.steps,
        burn_in=cfg.burn_in,
        thin=cfg.thin,
        proposal_std=cfg.proposal_std,
        seed=seed,
    )


def chain_diagnostics(samples: np.ndarray, accepted: int, proposals: int) -> dict:
    """Acceptance rate plus per-coordinate mean and standard deviation."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("chain is empty")
    if proposals < 1 or not 0 <= accepted <= proposals:
        raise ValueError("need 0 <= accepted <= proposals with proposals >= 1")
    return {
        "acceptance_rate": accepted / proposals,
        "mean": samples.mean(axis=0),
        "std": samples.std(axis=0),
    }


def save_chain(result: ChainResult, path: str) -> None:
    """Dump retained states as CSV: step, theta_0.., log_density."""
    d = result.samples.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"theta_{i}" for i in range(d)] + ["log_density"])
        for k in range(result.samples.shape[0]):
            row = [str(int(result.kept_steps[k]))]
            row += [repr(float(v)) for v in result.samples[k]]
            row.append(repr(float(result.log_densities[k])))
            writer.writerow(row)
