"""Data-distribution constants derived from a generator certificate.

The data process is assumed to be the steady-state output of a certified
generator driven by bounded i.i.d. noise.  Two scalars summarise it: b_q, an
amplitude bound on the stacked label/input vector, and theta_bar, a weak
dependence coefficient that is zero for i.i.d. data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .certify import GainPair, StabilityConstants, rnn_constants
from .dynsys import RnnSystem
from .errors import NotStableError


@dataclass(frozen=True)
class DataConstants:
    """Amplitude bound b_q, dependence coefficient theta_bar, noise bound e_inf."""

    b_q: float
    theta_bar: float
    e_inf: float

    def __post_init__(self):
        if not (self.b_q > 0 and math.isfinite(self.b_q)):
            raise ValueError(f"b_q must be positive and finite, got {self.b_q}")
        if not (self.theta_bar >= 0 and math.isfinite(self.theta_bar)):
            raise ValueError(f"theta_bar must be nonnegative, got {self.theta_bar}")
        if not (self.e_inf > 0 and math.isfinite(self.e_inf)):
            raise ValueError(f"e_inf must be positive and finite, got {self.e_inf}")


def data_constants(gen: StabilityConstants, e_inf: float) -> DataConstants:
    """Distribution constants of the generator's steady-state output process.

        b_q       = 2 * e_inf * (l_gv + l_v*l_gs/(1-tau))
        theta_bar = 2 * e_inf * l_v*l_gs/(1-tau)^2

    where l_v is the generator's input-to-state gain and l_gs, l_gv its
    output Lipschitz constants.
    """
    if e_inf <= 0:
        raise ValueError("e_inf must be positive")
    if gen.tau >= 1.0:
        raise NotStableError(f"tau = {gen.tau} >= 1", value=gen.tau)
    core = gen.l_v * gen.l_gs / (1.0 - gen.tau)
    return DataConstants(
        b_q=2.0 * e_inf * (gen.l_gv + core),
        theta_bar=2.0 * e_inf * core / (1.0 - gen.tau),
        e_inf=e_inf,
    )


def saturation_bound(sys: RnnSystem) -> float | None:
    """Euclidean amplitude cap from a saturating output activation.

    tanh and sigmoid confine each output coordinate to (-1, 1), so the
    stacked output norm cannot exceed sqrt(n_y).  None for non-saturating
    activations; callers take the minimum with the formula bound.
    """
    if sys.sigma_g.kind in ("tanh", "sigmoid"):
        return math.sqrt(sys.n_y)
    return None


def generator_data_constants(sys: RnnSystem, e_inf: float) -> DataConstants:
    """Full pipeline for an explicit generator model, with the amplitude cap.

    Certifies the generator, evaluates data_constants, and replaces b_q by
    min(formula, saturation bound); the bound formulas are monotone in b_q,
    so the cap is always valid.
    """
    dc = data_constants(rnn_constants(sys), e_inf)
    cap = saturation_bound(sys)
    if cap is not None and cap < dc.b_q:
        dc = replace(dc, b_q=cap)
    return dc


def predictor_mixing(data: DataConstants, gh: GainPair) -> tuple[float, float]:
    """Dependence coefficient and amplitude of the joint (label, prediction) process.

    Returns (theta_o, o_inf) with theta_o = theta_bar*g + b_q*h and
    o_inf = b_q*g.
    """
    return data.theta_bar * gh.g + data.b_q * gh.h, data.b_q * gh.g
