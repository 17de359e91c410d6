//! Shared inputs for the benchmarks.

use spinbath_core::{sample_environment, CouplingDistribution, EnsembleSpec, Environment};

/// Balanced bath of `n` spins with couplings drawn from `U[0.5, 1.5]`.
pub fn uniform_bath(n: usize, seed: u64) -> Environment {
    let spec = EnsembleSpec::new(
        CouplingDistribution::Uniform { lo: 0.5, hi: 1.5 },
        n,
        1,
        seed,
    );
    sample_environment(&spec, 0).expect("valid spec")
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}
