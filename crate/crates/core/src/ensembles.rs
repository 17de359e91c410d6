//! Seeded coupling ensembles.
//!
//! Realization `i` of an ensemble draws its couplings from a ChaCha8 stream
//! keyed by `(seed, i)`, so any subset of realizations can be generated in any
//! order, on any number of threads, with identical results.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Open01, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{product_form, BathSpin, DecoherenceSeries, Environment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CouplingDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Cauchy law; no mean or variance.
    Lorentzian {
        center: f64,
        gamma: f64,
    },
}

impl CouplingDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && hi > lo,
            Self::Gaussian { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Self::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Self::Lorentzian { center, gamma } => {
                center.is_finite() && gamma.is_finite() && gamma > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "invalid coupling distribution {self:?}"
            )))
        }
    }

    /// Draws one coupling. Lorentzian draws use the inverse CDF
    /// `center + gamma tan(pi (u - 1/2))` and are never clipped.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let bad = |e: &dyn std::fmt::Display| Error::Domain(e.to_string());
        Ok(match *self {
            Self::Uniform { lo, hi } => Uniform::new(lo, hi).map_err(|e| bad(&e))?.sample(rng),
            Self::Gaussian { mu, sigma } => {
                Normal::new(mu, sigma).map_err(|e| bad(&e))?.sample(rng)
            }
            Self::Exponential { rate } => Exp::new(rate).map_err(|e| bad(&e))?.sample(rng),
            Self::Lorentzian { center, gamma } => {
                self.validate()?;
                let u: f64 = Open01.sample(rng);
                center + gamma * (std::f64::consts::PI * (u - 0.5)).tan()
            }
        })
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            Self::Gaussian { mu, .. } => Some(mu),
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Lorentzian { .. } => None,
        }
    }

    /// `E[g^2]`, undefined for the Lorentzian.
    pub fn second_moment(&self) -> Option<f64> {
        match *self {
            Self::Uniform { lo, hi } => Some((lo * lo + lo * hi + hi * hi) / 3.0),
            Self::Gaussian { mu, sigma } => Some(mu * mu + sigma * sigma),
            Self::Exponential { rate } => Some(2.0 / (rate * rate)),
            Self::Lorentzian { .. } => None,
        }
    }
}

/// Clamps couplings to `[-limit, limit]` for display. Statistics must use the
/// unclipped values.
pub fn clip_for_plot(couplings: &[f64], limit: f64) -> Vec<f64> {
    couplings.iter().map(|g| g.clamp(-limit, limit)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dist: CouplingDistribution,
    pub n_spins: usize,
    pub n_realizations: usize,
    pub seed: u64,
    /// `|alpha_k|^2` shared by every spin.
    #[serde(default = "half")]
    pub p_up: f64,
}

fn half() -> f64 {
    0.5
}

impl EnsembleSpec {
    pub fn new(
        dist: CouplingDistribution,
        n_spins: usize,
        n_realizations: usize,
        seed: u64,
    ) -> Self {
        Self {
            dist,
            n_spins,
            n_realizations,
            seed,
            p_up: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if self.n_spins == 0 || self.n_realizations == 0 {
            return Err(Error::Input(
                "ensembles need at least one spin and one realization".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_up) {
            return Err(Error::Domain(format!("p_up {} outside [0, 1]", self.p_up)));
        }
        Ok(())
    }

    /// Random stream of realization `index`.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Couplings of realization `index`, with every `|alpha_k|^2 = p_up` and zero
/// phases.
pub fn sample_environment(spec: &EnsembleSpec, realization_index: usize) -> Result<Environment> {
    spec.validate()?;
    if realization_index >= spec.n_realizations {
        return Err(Error::Range {
            index: realization_index,
            len: spec.n_realizations,
        });
    }
    let mut rng = spec.rng(realization_index);
    (0..spec.n_spins)
        .map(|_| {
            let g = spec.dist.sample(&mut rng)?;
            BathSpin::from_populations(g, spec.p_up, 0.0, 0.0)
        })
        .collect::<Result<Vec<_>>>()
        .map(Environment::new)
}

/// Per-time statistics of `r(t)` over the realizations of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    /// Complex mean `<r(t)>`.
    pub mean: Vec<Complex64>,
    /// `sqrt(<|r - <r>|^2>)`.
    pub std: Vec<f64>,
    /// `<|r(t)|>`.
    pub mean_modulus: Vec<f64>,
}

impl EnsembleAverage {
    pub fn mean_series(&self) -> DecoherenceSeries {
        DecoherenceSeries {
            times: self.times.clone(),
            values: self.mean.clone(),
        }
    }

    /// `|<r(t)>|`.
    pub fn modulus_of_mean(&self) -> Vec<f64> {
        self.mean.iter().map(|z| z.norm()).collect()
    }
}

/// Averages `r(t)` over all realizations. Realizations are evaluated in
/// parallel and accumulated in index order.
pub fn ensemble_average_r(spec: &EnsembleSpec, times: &[f64]) -> Result<EnsembleAverage> {
    spec.validate()?;
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite, got {t}")));
    }
    let runs: Vec<Vec<Complex64>> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(spec, i)?;
            Ok(times.iter().map(|&t| product_form(&env, t)).collect())
        })
        .collect::<Result<_>>()?;

    let m = spec.n_realizations as f64;
    let mut sum = vec![Complex64::new(0.0, 0.0); times.len()];
    let mut sum_mod = vec![0.0; times.len()];
    for run in &runs {
        for ((s, sm), z) in sum.iter_mut().zip(&mut sum_mod).zip(run) {
            *s += z;
            *sm += z.norm();
        }
    }
    let mean: Vec<Complex64> = sum.into_iter().map(|s| s / m).collect();
    let mut var = vec![0.0; times.len()];
    for run in &runs {
        for ((v, z), mu) in var.iter_mut().zip(run).zip(&mean) {
            *v += (z - mu).norm_sqr();
        }
    }
    Ok(EnsembleAverage {
        times: times.to_vec(),
        mean,
        std: var.into_iter().map(|v| (v / m).sqrt()).collect(),
        mean_modulus: sum_mod.into_iter().map(|s| s / m).collect(),
    })
}
