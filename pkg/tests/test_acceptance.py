"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  Criterion 2 executes the
full benchmark configuration once (a few minutes); everything else is fast.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from helpers import (
    eig_spectral_norm,
    random_contractive_system,
    zero_bias_contractive_predictor,
)
from stablepac import (
    DataConstants,
    ExperimentConfig,
    LossSpec,
    SampleRecord,
    StabilityConstants,
    Trajectory,
    build_reference_generator,
    burn_in_length,
    data_constants,
    discrete_lyapunov,
    empirical_loss,
    gain_pair,
    generate_dataset,
    generator_data_constants,
    gibbs_estimates,
    infinite_horizon_loss,
    log_mean_exp,
    loss_lipschitz,
    loss_value,
    pac_bound,
    psi1_exponent,
    psi2_exponent,
    psi_hat,
    rnn_constants,
    series_compose,
    simulate,
    simulate_series,
    spectral_norm,
    transient_gap_bound,
)

SQUARE = LossSpec(kind="square")


def report(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {criterion:2d}: {status} -- {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="session")
def full_benchmark():
    """One full run of the reference configuration, shared by criterion 2."""
    from stablepac import run_experiment

    cfg = ExperimentConfig()
    t0 = time.time()
    reports = run_experiment(cfg)
    elapsed = time.time() - t0
    return cfg, reports, elapsed


def test_criterion_1_data_constant_reproduction():
    t0 = time.time()
    dc = data_constants(rnn_constants(build_reference_generator()), 1.27)
    elapsed = time.time() - t0
    b_ok = abs(dc.b_q - math.sqrt(2.0)) / math.sqrt(2.0) < 0.02
    t_ok = abs(dc.theta_bar - 2.0) / 2.0 < 0.02
    report(
        1,
        b_ok and t_ok and elapsed < 1.0,
        f"b_q={dc.b_q:.5f} (target sqrt(2)={math.sqrt(2):.5f}), "
        f"theta_bar={dc.theta_bar:.5f} (target 2.0), {elapsed:.3f}s",
    )


def test_criterion_2_non_vacuity_crossover(full_benchmark):
    cfg, reports, elapsed = full_benchmark
    medians = {}
    for n in cfg.n_grid:
        medians[n] = float(np.median([r.total for r in reports if r.n == n]))
    # first grid point whose median is below 1.0 with all later ones below too
    n_star = None
    for i, n in enumerate(cfg.n_grid):
        if all(medians[m] < 1.0 for m in cfg.n_grid[i:]):
            n_star = n
            break
    per_seed = {}
    for seed in range(cfg.n_seeds):
        per_seed[seed] = next(
            (n for n in cfg.n_grid if all(
                r.total < 1.0 for r in reports if r.seed == seed and r.n >= n
            )),
            None,
        )
    print(f"[acceptance] criterion  2: medians by n: "
          + ", ".join(f"{n}:{medians[n]:.3f}" for n in cfg.n_grid))
    print(f"[acceptance] criterion  2: crossover per seed: {per_seed}")
    ok = n_star is not None and n_star <= 50 and elapsed <= 600.0
    report(
        2,
        ok,
        f"median crossover n*={n_star} (required <= 50), runtime {elapsed:.0f}s "
        f"(budget 600s)",
    )


def test_invariant_monotone_median_trend(full_benchmark):
    # not a numbered criterion: median total bound is non-increasing across
    # the grid once n >= 50, with 2% wiggle between adjacent grid points
    cfg, reports, _ = full_benchmark
    medians = [
        float(np.median([r.total for r in reports if r.n == n]))
        for n in cfg.n_grid
        if n >= 50
    ]
    for prev, nxt in zip(medians, medians[1:]):
        assert nxt <= prev * 1.02, f"median trend violated: {prev} -> {nxt}"


def test_criterion_3_rate_check():
    t0 = time.time()
    rng = np.random.default_rng(303)
    dc = DataConstants(b_q=1.4, theta_bar=2.0, e_inf=1.27)
    kl = 0.9
    ok = True
    detail = []
    for n in (500, 1000, 5000, 20_000):
        records = []
        for _ in range(200):
            consts = StabilityConstants(
                c=float(rng.uniform(1, 2)),
                tau=float(rng.uniform(0, 0.9)),
                l_v=float(rng.uniform(0, 1)),
                l_gs=float(rng.uniform(0, 1)),
                l_gv=float(rng.uniform(0, 1)),
            )
            gh = gain_pair(consts)
            l_ell = 2.0 * dc.b_q * gh.g + 0.05
            s0_norm = float(rng.uniform(0, 1))
            records.append((consts, gh, l_ell, s0_norm))

        def r_at(m):
            recs = [
                SampleRecord(
                    theta=np.zeros(1),
                    s0_norm=s0,
                    constants=c,
                    gh=gh,
                    l_ell=l,
                    emp_loss=0.0,
                    psi1_exp=psi1_exponent(math.sqrt(m), m, l, dc, gh),
                    psi2_exp=psi2_exponent(math.sqrt(m), m, l, c, dc.b_q, gh, s0),
                )
                for (c, gh, l, s0) in records
            ]
            return pac_bound(math.sqrt(m), 0.025, kl, psi_hat(recs))

        ratio = r_at(4 * n) / r_at(n)
        detail.append(f"n={n}: {ratio:.4f}")
        ok = ok and 0.45 < ratio < 0.55
    elapsed = time.time() - t0
    report(3, ok and elapsed < 1.0, "r_4n/r_n " + ", ".join(detail) + f", {elapsed:.2f}s")


def test_criterion_4_transient_gap_oracle():
    t0 = time.time()
    rng = np.random.default_rng(404)
    n, prefix = 50, 60
    worst = 0.0
    for _ in range(100):
        data = generate_dataset(int(rng.integers(0, 10_000)), prefix + n)
        x_sup = float(np.max(np.abs(data.inputs)))
        sys_ = zero_bias_contractive_predictor(rng, x_sup)
        consts = rnn_constants(sys_)
        window = Trajectory(inputs=data.inputs[prefix:], outputs=data.outputs[prefix:])
        s0 = rng.normal(0, 0.5, size=2)
        l_hat = empirical_loss(SQUARE, sys_, s0, window)
        v_n = infinite_horizon_loss(SQUARE, sys_, data, prefix)
        b_q = float(max(np.max(np.abs(data.inputs)), np.max(np.abs(data.outputs))))
        # tanh output and |labels| < 1: loss Lipschitz constant 2 * (1 + 1)
        bound = transient_gap_bound(consts, 4.0, b_q, float(np.linalg.norm(s0)), n)
        slack = abs(l_hat - v_n) - bound
        worst = max(worst, slack)
    elapsed = time.time() - t0
    report(
        4,
        worst <= 1e-6 and elapsed < 30.0,
        f"worst |L_hat - V_n| - bound = {worst:.3e} (allowed 1e-6), {elapsed:.1f}s",
    )


def test_criterion_5_uec_contraction_suite():
    t0 = time.time()
    rng = np.random.default_rng(505)
    violations = 0
    for _ in range(100):
        sys_ = random_contractive_system(rng, tau_range=(0.6, 0.95))
        tau = rnn_constants(sys_).tau
        inputs = rng.uniform(-1, 1, size=(50, sys_.n_v))
        for _ in range(10):
            s0a = rng.normal(size=sys_.n_s)
            s0b = rng.normal(size=sys_.n_s)
            sa, _ = simulate(sys_, s0a, inputs)
            sb, _ = simulate(sys_, s0b, inputs)
            gaps = np.linalg.norm(sa - sb, axis=1)
            envelope = np.linalg.norm(s0a - s0b) * tau ** np.arange(50)
            violations += int(np.any(gaps > envelope + 1e-12))

        # fading-memory inequality for perturbed inputs from equal starts
        consts = rnn_constants(sys_)
        v2 = inputs + rng.uniform(-0.5, 0.5, size=inputs.shape)
        s1, _ = simulate(sys_, np.zeros(sys_.n_s), inputs)
        s2, _ = simulate(sys_, np.zeros(sys_.n_s), v2)
        dv = np.linalg.norm(inputs - v2, axis=1)
        for t in range(1, 50):
            rhs = consts.l_v * sum(
                consts.tau ** (k - 1) * dv[t - k] for k in range(1, t + 1)
            )
            violations += int(np.linalg.norm(s1[t] - s2[t]) > rhs + 1e-10)
    elapsed = time.time() - t0
    report(
        5,
        violations == 0 and elapsed < 30.0,
        f"{violations} violations over 100 systems x 10 state pairs x 50 steps "
        f"+ input robustness, {elapsed:.1f}s",
    )


def test_criterion_6_composition_consistency():
    t0 = time.time()
    rng = np.random.default_rng(606)
    mismatches = 0
    envelope_violations = 0
    for _ in range(100):
        sys1 = random_contractive_system(rng, tau_range=(0.5, 0.9))
        sys2 = random_contractive_system(rng, n_v=sys1.n_y, tau_range=(0.5, 0.9))
        inputs = rng.uniform(-1, 1, size=(50, sys1.n_v))
        s01, s02 = rng.normal(size=sys1.n_s), rng.normal(size=sys2.n_s)
        st1, mid = simulate(sys1, s01, inputs)
        st2, out = simulate(sys2, s02, mid)
        stacked, mid2, out2 = simulate_series(sys1, sys2, s01, s02, inputs)
        same = (
            np.array_equal(mid, mid2)
            and np.array_equal(out, out2)
            and np.array_equal(stacked, np.hstack([st1, st2]))
        )
        mismatches += int(not same)

        comp = series_compose(rnn_constants(sys1), rnn_constants(sys2))
        stacked_b, _, _ = simulate_series(
            sys1, sys2, rng.normal(size=sys1.n_s), rng.normal(size=sys2.n_s), inputs
        )
        gaps = np.linalg.norm(stacked - stacked_b, axis=1)
        envelope = comp.c * comp.tau ** np.arange(50) * gaps[0]
        envelope_violations += int(np.any(gaps > envelope + 1e-12))
    elapsed = time.time() - t0
    report(
        6,
        mismatches == 0 and envelope_violations == 0,
        f"{mismatches} bit-exactness mismatches, {envelope_violations} envelope "
        f"violations over 100 cascades, {elapsed:.1f}s",
    )


def test_criterion_7_numerics_oracles():
    t0 = time.time()
    rng = np.random.default_rng(707)
    worst_rel = 0.0
    for _ in range(1000):
        rows = int(rng.integers(1, 9))
        cols = int(rng.integers(1, 9))
        m = rng.normal(0, 1, size=(rows, cols)) * float(rng.choice([0.01, 1.0, 100.0]))
        expected = eig_spectral_norm(m)
        got = spectral_norm(m)
        if expected > 0:
            worst_rel = max(worst_rel, abs(got - expected) / expected)
    norm_ok = worst_rel <= 1e-8

    shift_ok = True
    for _ in range(1000):
        v = rng.normal(0, 10, size=int(rng.integers(1, 50)))
        c = float(rng.normal(0, 50))
        err = abs(log_mean_exp(v + c) - (log_mean_exp(v) + c))
        shift_ok = shift_ok and err <= 1e-12 * max(1.0, abs(c))

    lyap_ok = True
    for _ in range(100):
        n = int(rng.integers(1, 6))
        a = rng.normal(0, 1, size=(n, n))
        a *= 0.92 / max(np.max(np.abs(np.linalg.eigvals(a))), 1e-6)
        q = np.eye(n)
        p = discrete_lyapunov(a, q)
        lyap_ok = lyap_ok and np.linalg.norm(a.T @ p @ a - p + q) <= 1e-10
    elapsed = time.time() - t0
    report(
        7,
        norm_ok and shift_ok and lyap_ok,
        f"spectral worst rel err {worst_rel:.2e} (<=1e-8), shift ok={shift_ok}, "
        f"lyapunov residual ok={lyap_ok}, {elapsed:.1f}s",
    )


def test_criterion_8_gibbs_estimator_identities():
    losses = np.array([0.2, 0.9, 0.4])
    z, kl, post = gibbs_estimates(np.ones(3), losses)
    uniform_ok = kl == 0.0 and post == float(np.mean(losses)) and z == 1.0

    z2, kl2, post2 = gibbs_estimates(
        np.array([1.0, math.exp(-1.0)]), np.array([0.0, 1.0])
    )
    # full-precision hand values: 0.110943 and 0.268942 in the 6-digit prints
    worked_ok = (
        abs(kl2 - 0.11094407167172732) <= 1e-6
        and abs(post2 - 0.2689414213699951) <= 1e-6
        and abs(z2 - 1.4621171572600098) <= 1e-6
    )
    report(
        8,
        uniform_ok and worked_ok,
        f"uniform-beta identities exact={uniform_ok}; worked case "
        f"kl={kl2:.9f}, post={post2:.9f}",
    )


def test_criterion_9_softmax_lipschitz_certificate():
    t0 = time.time()
    rng = np.random.default_rng(909)
    eps = 1e-6
    worst = -math.inf
    for _ in range(10_000):
        k = int(rng.integers(2, 6))
        spec = LossSpec(kind="softmax_xent", classes=k)
        y = rng.uniform(0.001, 0.999, size=k)
        yhat = rng.uniform(-5, 5, size=k)
        grad = np.empty(2 * k)
        for i in range(k):
            yp, ym = y.copy(), y.copy()
            yp[i] += eps
            ym[i] -= eps
            grad[i] = (loss_value(spec, yp, yhat) - loss_value(spec, ym, yhat)) / (2 * eps)
        for i in range(k):
            hp, hm = yhat.copy(), yhat.copy()
            hp[i] += eps
            hm[i] -= eps
            grad[k + i] = (loss_value(spec, y, hp) - loss_value(spec, y, hm)) / (2 * eps)
        bound = k * (2.0 * float(np.max(np.abs(yhat))) + math.log(k) + 2.0)
        worst = max(worst, float(np.max(np.abs(grad))) - bound)
    elapsed = time.time() - t0
    report(
        9,
        worst <= 1e-6,
        f"worst gradient-minus-bound = {worst:.3e} (allowed 1e-6) over 1e4 points, "
        f"{elapsed:.1f}s",
    )


def _small_predictor():
    from stablepac import RnnSystem, activation

    rng = np.random.default_rng(77)
    a = rng.normal(0, 1, size=(2, 2))
    a *= 0.5 / np.linalg.norm(a, 2)
    return RnnSystem(
        a=a,
        b=0.4 * rng.normal(0, 1, size=(2, 1)),
        b_s=np.zeros(2),
        c=0.3 * rng.normal(0, 1, size=(1, 2)),
        d=0.3 * rng.normal(0, 1, size=(1, 1)),
        b_y=0.1 * rng.normal(0, 1, size=1),
        sigma_f=activation("relu"),
        sigma_g=activation("tanh"),
    )


def _mgf_estimate(attempt):
    """Monte-Carlo moment estimate for a fixed small generator/predictor pair."""
    n = 20
    prefix = burn_in_length(rnn_constants(build_reference_generator()), 0.0, 1e-9)
    pred = _small_predictor()
    consts = rnn_constants(pred)
    gh = gain_pair(consts)
    dc = generator_data_constants(build_reference_generator(), 1.27)
    l_ell = loss_lipschitz(SQUARE, dc, gh)

    def batch(count, seed0):
        vals = np.empty(count)
        for i in range(count):
            data = generate_dataset(seed0 + i, prefix + n)
            vals[i] = infinite_horizon_loss(SQUARE, pred, data, prefix)
        return vals

    pilot = batch(2000, 500_000 + attempt * 10_000)  # independent E[V_n] estimate
    v_mean = float(np.mean(pilot))
    draws = batch(2000, 700_000 + attempt * 10_000)
    s = 1.0
    estimate = float(np.mean(np.exp(s * (v_mean - draws))))
    inner = dc.b_q * (gh.g + gh.h) + dc.theta_bar * gh.g
    theoretical = math.exp(s**2 * l_ell**2 * inner**2 / (2 * n))
    return estimate, theoretical


def test_criterion_10_mgf_concentration():
    # statistical test; flaky budget is one documented rerun with fresh seeds
    t0 = time.time()
    estimate, theoretical = _mgf_estimate(0)
    attempts = 1
    if estimate > theoretical * 1.1:
        estimate, theoretical = _mgf_estimate(1)
        attempts = 2
    elapsed = time.time() - t0
    report(
        10,
        estimate <= theoretical * 1.1,
        f"mc estimate {estimate:.4f} <= 1.1 * bound {theoretical:.4f} "
        f"({attempts} attempt(s), 2000 realisations, {elapsed:.1f}s)",
    )


def test_criterion_11_end_to_end_determinism(tmp_path):
    import json

    cfg = {
        "n_grid": [5, 20],
        "n_seeds": 2,
        "n_f": 200,
        "chain": {"proposal_std": 0.05, "burn_in": 50, "thin": 1, "base_seed": 0},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outputs = {}
    for label, threads in (("a", "1"), ("b", "4")):
        out_dir = tmp_path / label
        env = dict(os.environ)
        env["OMP_NUM_THREADS"] = threads
        env["OPENBLAS_NUM_THREADS"] = threads
        subprocess.run(
            [sys.executable, "-m", "stablepac.cli", "experiment",
             "--config", str(cfg_path), "--out", str(out_dir)],
            check=True,
            env=env,
            capture_output=True,
        )
        outputs[label] = {
            name: (out_dir / name).read_bytes()
            for name in ("bound_reports.csv", "summary.csv", "generator.json",
                         "trajectory_seed0.csv", "trajectory_seed1.csv")
        }
    same = outputs["a"] == outputs["b"]
    # and a through-the-library rerun in-process
    report(
        11,
        same,
        f"byte-identical CSV/JSON outputs across runs and thread counts: {same}",
    )
