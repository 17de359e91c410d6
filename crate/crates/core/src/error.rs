use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value lies outside the domain where the quantity is defined
    /// (non-finite time, negative time, non-positive sample in a log fit, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Amplitudes that do not satisfy `|x|^2 + |y|^2 = 1`.
    #[error("amplitudes not normalized: |x|^2 + |y|^2 = {norm} (tolerance 1e-12)")]
    NotNormalized { norm: f64 },

    /// Exponential-cost enumeration requested above the configured cap.
    #[error("environment has {n} spins, above the enumeration cap of {cap}")]
    Size { n: usize, cap: usize },

    /// Malformed input: too few samples, unsorted grid, mismatched lengths.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("index {index} out of range for {len} realizations")]
    Range { index: usize, len: usize },

    /// A zero-width distribution where a density or ratio needs a scale.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
}
