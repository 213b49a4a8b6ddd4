"""State-space blocks of the affine-then-activation (RNN) shape, and their simulation.

A system is

    s(t+1) = sigma_f(A s(t) + B v(t) + b_s)
    y(t)   = sigma_g(C s(t) + D v(t) + b_y)

Steady-state behaviour (the trajectory the system settles into regardless of
the initial state) is approximated by running from the zero state over a
burn-in prefix whose length is derived from the contraction certificate.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .errors import NotStableError
from .numerics import check_finite_matrix

if TYPE_CHECKING:
    from .certify import StabilityConstants

# kind -> (elementwise map, global Lipschitz constant)
_ACTIVATION_TABLE: dict[str, tuple[Callable[[np.ndarray], np.ndarray], float]] = {
    "relu": (lambda x: np.maximum(x, 0.0), 1.0),
    "tanh": (np.tanh, 1.0),
    # 0.5*(1+tanh(x/2)) is the logistic function, stable for large |x|
    "sigmoid": (lambda x: 0.5 * (1.0 + np.tanh(0.5 * x)), 0.25),
    "identity": (lambda x: x, 1.0),
}


@dataclass(frozen=True)
class Activation:
    """Elementwise activation with its global Lipschitz constant."""

    kind: str
    lipschitz: float

    def __post_init__(self):
        if self.kind not in _ACTIVATION_TABLE:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.lipschitz != _ACTIVATION_TABLE[self.kind][1]:
            raise ValueError(
                f"lipschitz constant {self.lipschitz} does not match table value "
                f"for {self.kind!r}"
            )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return _ACTIVATION_TABLE[self.kind][0](x)


def activation(kind: str) -> Activation:
    """Build an Activation with the table Lipschitz constant for ``kind``."""
    if kind not in _ACTIVATION_TABLE:
        raise ValueError(f"unknown activation kind {kind!r}")
    return Activation(kind, _ACTIVATION_TABLE[kind][1])


@dataclass(frozen=True)
class RnnSystem:
    """One affine-then-activation state-space block.

    Shapes: a (n_s, n_s), b (n_s, n_v), b_s (n_s,), c (n_y, n_s),
    d (n_y, n_v), b_y (n_y,).
    """

    a: np.ndarray
    b: np.ndarray
    b_s: np.ndarray
    c: np.ndarray
    d: np.ndarray
    b_y: np.ndarray
    sigma_f: Activation
    sigma_g: Activation

    def __post_init__(self):
        a = check_finite_matrix(self.a, "a")
        b = check_finite_matrix(self.b, "b")
        c = check_finite_matrix(self.c, "c")
        d = check_finite_matrix(self.d, "d")
        b_s = np.asarray(self.b_s, dtype=float)
        b_y = np.asarray(self.b_y, dtype=float)
        if not (np.all(np.isfinite(b_s)) and np.all(np.isfinite(b_y))):
            raise ValueError("bias vectors contain non-finite entries")
        n_s, n_v, n_y = a.shape[0], b.shape[1], c.shape[0]
        if a.shape != (n_s, n_s):
            raise ValueError("a must be square")
        if b.shape != (n_s, n_v) or b_s.shape != (n_s,):
            raise ValueError("b / b_s dimensions inconsistent with a")
        if c.shape != (n_y, n_s) or d.shape != (n_y, n_v) or b_y.shape != (n_y,):
            raise ValueError("c / d / b_y dimensions inconsistent")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b_s", b_s)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "b_y", b_y)

    @property
    def n_s(self) -> int:
        return self.a.shape[0]

    @property
    def n_v(self) -> int:
        return self.b.shape[1]

    @property
    def n_y(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """Observed input/output pairs of one run: inputs (n, n_x), outputs (n, n_y)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError("inputs and outputs must have the same length")
        if inputs.shape[0] == 0:
            raise ValueError("trajectory must be nonempty")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(outputs))):
            raise ValueError("trajectory contains non-finite entries")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @property
    def length(self) -> int:
        return self.inputs.shape[0]


def simulate(
    sys: RnnSystem, s0: np.ndarray, inputs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Run the recursion over ``inputs`` and return (states, outputs).

    states[t] is the state at time t (states[0] = s0) and outputs[t] the
    output at time t; both have the same length as the input list.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    s = np.asarray(s0, dtype=float)
    if s.shape != (sys.n_s,):
        raise ValueError(f"s0 must have dimension {sys.n_s}, got shape {s.shape}")
    if x.shape[1] != sys.n_v:
        raise ValueError(f"inputs must have dimension {sys.n_v}, got {x.shape[1]}")
    n = x.shape[0]
    states = np.empty((n, sys.n_s))
    outputs = np.empty((n, sys.n_y))
    for t in range(n):
        states[t] = s
        outputs[t] = sys.sigma_g(sys.c @ s + sys.d @ x[t] + sys.b_y)
        s = sys.sigma_f(sys.a @ s + sys.b @ x[t] + sys.b_s)
    return states, outputs


def simulate_series(
    sys1: RnnSystem,
    sys2: RnnSystem,
    s0_1: np.ndarray,
    s0_2: np.ndarray,
    inputs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lockstep simulation of two blocks in series (output of sys1 drives sys2).

    Returns (stacked_states, mid_outputs, outputs) where stacked_states[t] is
    the concatenated state [s1(t); s2(t)].  The arithmetic per step is
    identical to simulating the blocks one after the other, so both routes
    produce bit-identical trajectories.
    """
    if sys1.n_y != sys2.n_v:
        raise ValueError("output dimension of sys1 must match input dimension of sys2")
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    s1 = np.asarray(s0_1, dtype=float)
    s2 = np.asarray(s0_2, dtype=float)
    n = x.shape[0]
    stacked = np.empty((n, sys1.n_s + sys2.n_s))
    mid = np.empty((n, sys1.n_y))
    out = np.empty((n, sys2.n_y))
    for t in range(n):
        stacked[t, : sys1.n_s] = s1
        stacked[t, sys1.n_s :] = s2
        y1 = sys1.sigma_g(sys1.c @ s1 + sys1.d @ x[t] + sys1.b_y)
        mid[t] = y1
        out[t] = sys2.sigma_g(sys2.c @ s2 + sys2.d @ y1 + sys2.b_y)
        s1 = sys1.sigma_f(sys1.a @ s1 + sys1.b @ x[t] + sys1.b_s)
        s2 = sys2.sigma_f(sys2.a @ s2 + sys2.b @ y1 + sys2.b_s)
    return stacked, mid, out


def burn_in_length(consts: "StabilityConstants", s0_bound: float, tol: float) -> int:
    """Smallest T with c * tau^T * (s0_bound + c/(1-tau)) <= tol.

    The bracketed factor bounds the distance between any start state within
    ``s0_bound`` of the origin and the steady-state trajectory, whose norm is
    at most c/(1-tau) for unit-bounded inputs.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if s0_bound < 0:
        raise ValueError("s0_bound must be nonnegative")
    if consts.tau >= 1.0:
        raise NotStableError(
            f"contraction factor tau={consts.tau} >= 1", value=consts.tau
        )
    factor = consts.c * (s0_bound + consts.c / (1.0 - consts.tau))
    if factor <= tol:
        return 0
    if consts.tau == 0.0:
        return 1
    # Closed-form estimate, then settle the boundary exactly.
    t = max(0, math.ceil(math.log(tol / factor) / math.log(consts.tau)))
    while t > 0 and factor * consts.tau ** (t - 1) <= tol:
        t -= 1
    while factor * consts.tau**t > tol:
        t += 1
    return t


def steady_state_outputs(
    sys: RnnSystem, inputs_with_prefix: np.ndarray, burn_in: int
) -> np.ndarray:
    """Outputs after a burn-in prefix, starting from the zero state.

    Approximates the steady-state output trajectory for the post-prefix
    window within the tolerance that produced ``burn_in``.
    """
    x = np.atleast_2d(np.asarray(inputs_with_prefix, dtype=float))
    if burn_in < 0 or burn_in >= x.shape[0]:
        raise ValueError("burn_in must satisfy 0 <= burn_in < len(inputs)")
    _, outputs = simulate(sys, np.zeros(sys.n_s), x)
    return outputs[burn_in:]


# ---------------------------------------------------------------------------
# Model and trajectory files


def model_to_dict(sys: RnnSystem) -> dict:
    return {
        "n_s": sys.n_s,
        "n_v": sys.n_v,
        "n_y": sys.n_y,
        "sigma_f": sys.sigma_f.kind,
        "sigma_g": sys.sigma_g.kind,
        "A": sys.a.tolist(),
        "B": sys.b.tolist(),
        "b_s": sys.b_s.tolist(),
        "C": sys.c.tolist(),
        "D": sys.d.tolist(),
        "b_y": sys.b_y.tolist(),
    }


def model_from_dict(doc: dict) -> RnnSystem:
    sys = RnnSystem(
        a=np.array(doc["A"], dtype=float),
        b=np.array(doc["B"], dtype=float),
        b_s=np.array(doc["b_s"], dtype=float),
        c=np.array(doc["C"], dtype=float),
        d=np.array(doc["D"], dtype=float),
        b_y=np.array(doc["b_y"], dtype=float),
        sigma_f=activation(doc["sigma_f"]),
        sigma_g=activation(doc["sigma_g"]),
    )
    for key in ("n_s", "n_v", "n_y"):
        if key in doc and doc[key] != getattr(sys, key):
            raise ValueError(f"declared {key}={doc[key]} does not match matrix shapes")
    return sys


def save_model(sys: RnnSystem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(sys), fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> RnnSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_trajectory(traj: Trajectory, path: str) -> None:
    """Write a trajectory as CSV with header t, x_0.., y_0.. (round-trip exact)."""
    m, p = traj.inputs.shape[1], traj.outputs.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(m)] + [f"y_{i}" for i in range(p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(traj.length):
            row = [str(t)]
            row += [repr(float(v)) for v in traj.inputs[t]]
            row += [repr(float(v)) for v in traj.outputs[t]]
            writer.writerow(row)


def load_trajectory(path: str) -> Trajectory:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        m = sum(1 for h in header if h.startswith("x_"))
        rows = [[float(v) for v in row[1:]] for row in reader]
    data = np.array(rows)
    return Trajectory(inputs=data[:, :m], outputs=data[:, m:])
