"""Generalisation-gap bounds for exponentially stable recurrent predictors.

Certifies stability of RNN-shaped state-space systems, derives the data and
robustness constants the bound needs, and evaluates the bound by prior
sampling with Gibbs-posterior reweighting on dependent time-series data.
"""

from .bound import (
    BoundReport,
    SampleRecord,
    estimate_g1_g2,
    gibbs_estimates,
    gibbs_weights,
    pac_bound,
    psi1_exponent,
    psi2_exponent,
    psi_hat,
)
from .certify import (
    ContractionCheck,
    HeuristicCheck,
    GainPair,
    StabilityConstants,
    check_contraction,
    check_linear_lyapunov,
    check_metric_contraction_sampled,
    error_system_constants,
    full_generator_constants,
    gain_pair,
    rnn_constants,
    series_compose,
)
from .dynsys import (
    Activation,
    RnnSystem,
    Trajectory,
    activation,
    burn_in_length,
    load_model,
    load_trajectory,
    save_model,
    save_trajectory,
    simulate,
    simulate_series,
    steady_state_outputs,
)
from .errors import (
    DegenerateTruncationError,
    InstabilityError,
    InvalidConfidenceError,
    InvalidStartError,
    NotStableError,
    SingularCompositionError,
    StablepacError,
)
from .experiment import (
    ExperimentConfig,
    box_search_records,
    build_reference_generator,
    generate_dataset,
    predictor_from_theta,
    run_cell,
    run_experiment,
    theta_from_predictor,
)
from .loss import (
    LossSpec,
    empirical_loss,
    infinite_horizon_loss,
    loss_lipschitz,
    loss_value,
    transient_gap_bound,
)
from .mcmc import (
    ChainConfig,
    ChainResult,
    chain_diagnostics,
    mh_sample,
    mh_sample_chains,
    save_chain,
)
from .mixing import (
    DataConstants,
    data_constants,
    generator_data_constants,
    predictor_mixing,
    saturation_bound,
)
from .numerics import (
    discrete_lyapunov,
    log_mean_exp,
    seeded_rng,
    spectral_norm,
    truncated_gaussian,
)

__all__ = [name for name in dir() if not name.startswith("_")]
