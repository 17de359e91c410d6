//! Exact simulation of a central qubit dephased by a bath of independent spins.
//!
//! The qubit couples to each bath spin through a `sigma_z sigma_z` interaction,
//! so the reduced dynamics are solvable in closed form. The crate provides:
//!
//! * [`model`]: domain types and the product-form decoherence factor `r(t)`,
//!   the brute-force `2^N` expansion used as its oracle, the reduced density
//!   matrix and the long-time average of `|r|^2`.
//! * [`spectrum`]: Gray-code enumeration of the `2^N` random-walk eigenenergies
//!   (the local density of states), its characteristic function and the
//!   Gaussian limit parameters.
//! * [`ensembles`]: seeded coupling distributions and deterministic ensemble
//!   averages of `r(t)`.
//! * [`echo`]: partial Loschmidt echo with a reversed and an unreversed bath.
//! * [`analysis`]: log-domain decay fits, Gaussian vs exponential
//!   classification, stretched-exponent slopes and saturation levels.
//! * [`io`]: the JSON environment schema and the CSV exports.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod echo;
pub mod ensembles;
mod error;
pub mod gray;
pub mod io;
pub mod model;
pub mod spectrum;

pub use num_complex::Complex64;

pub use analysis::{
    classify_decay, fit_decay, loglog_slope, loglog_slope_raw, saturation_level, series_ratio,
    Classification, ClassifyOptions, DecayClass, DecayFit, DecayModel, RatioSeries, SlopeFit,
    Window,
};
pub use echo::{
    echo_at_reacquisition, echo_fidelity, echo_series, EchoExperiment, EchoSeries, Reacquisition,
};
pub use ensembles::{
    ensemble_average_r, sample_environment, CouplingDistribution, EnsembleAverage, EnsembleSpec,
};
pub use error::{Error, Result};
pub use model::{
    decoherence_factor, decoherence_factor_expansion, decoherence_series, long_time_avg_sq,
    reduced_density_matrix, BathSpin, DecoherenceSeries, DensityMatrix2, Environment, SystemState,
    DEFAULT_ENUMERATION_CAP, NORMALIZATION_TOLERANCE,
};
pub use spectrum::{
    characteristic_function, enumerate_spectrum, gaussian_params, gaussian_r_approx,
    ldos_gaussian_envelope, lindeberg_diagnostic, Binning, EnergySpectrum, EnumerationOptions,
    GaussianSpectrumParams, LdosHistogram, SpectrumMoments, WalkEnumerator,
};
