//! Eigenenergies of the coupled qubit + bath as terminal points of random walks.
//!
//! Walk `W` takes step `+g_k` with probability `|alpha_k|^2` or `-g_k` with
//! probability `|beta_k|^2`, once per spin. The weighted set `{(E_W, p_W)}` is
//! the strength function (local density of states), and `r(t)` is its
//! characteristic function.
//!
//! # Enumeration order
//!
//! Spins `0..L` (`L = min(N, 10)`) form a table built by doubling; spins
//! `L..N` are walked in Gray-code order so that successive high patterns differ
//! by one flipped step and cost one addition. Every run of 64 Gray steps starts
//! from an energy summed from scratch, so the blocks are independent and can
//! be filled in parallel with results that do not depend on the thread count.
//!
//! Walk index `i` of an enumerated spectrum decomposes as
//! `i = (gray_index << L) | low_pattern`; bit `k` of a pattern set means spin
//! `k` stepped down (`-g_k`). See [`WalkEnumerator::pattern_of`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gray::{flipped_bit, gray};
use crate::model::{BathSpin, Environment, DEFAULT_ENUMERATION_CAP};

const LOW_BITS: usize = 10;
const GRAY_RUN_BITS: usize = 6;
const QUANTILE_GRID: usize = 4096;
const MAX_BINS: usize = 1 << 20;

/// Default merge tolerance relative to `sum_k |g_k|`.
pub const RELATIVE_MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Largest `N` enumerated; the cost is `2^N`.
    pub cap: usize,
    pub merge_degenerate: bool,
    /// Absolute energy tolerance for merging. `None` uses
    /// `RELATIVE_MERGE_TOLERANCE * sum_k |g_k|`; `Some(0.0)` merges only
    /// bit-identical energies.
    pub merge_tolerance: Option<f64>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            merge_degenerate: false,
            merge_tolerance: None,
        }
    }
}

/// Streams all `2^N` walks of an environment in fixed-size blocks.
#[derive(Debug, Clone)]
pub struct WalkEnumerator<'a> {
    high: &'a [BathSpin],
    low_bits: usize,
    run_bits: usize,
    low_energy: Vec<f64>,
    low_weight: Vec<f64>,
}

impl<'a> WalkEnumerator<'a> {
    pub fn new(env: &'a Environment, cap: usize) -> Result<Self> {
        let n = env.len();
        if n > cap || n >= 48 {
            return Err(Error::Size { n, cap });
        }
        let low_bits = n.min(LOW_BITS);
        let (low, high) = env.spins().split_at(low_bits);

        // Doubling: entry `p | 1 << k` extends entry `p` by spin k's down step.
        let mut low_energy = Vec::with_capacity(1 << low_bits);
        let mut low_weight = Vec::with_capacity(1 << low_bits);
        low_energy.push(0.0);
        low_weight.push(1.0);
        for s in low {
            let len = low_energy.len();
            for p in 0..len {
                let (e, w) = (low_energy[p], low_weight[p]);
                low_energy[p] = e + s.g();
                low_weight[p] = w * s.p_up();
                low_energy.push(e - s.g());
                low_weight.push(w * s.p_down());
            }
        }

        Ok(Self {
            high,
            low_bits,
            run_bits: high.len().min(GRAY_RUN_BITS),
            low_energy,
            low_weight,
        })
    }

    pub fn spin_count(&self) -> usize {
        self.low_bits + self.high.len()
    }

    pub fn walk_count(&self) -> usize {
        1 << self.spin_count()
    }

    /// Walks per block.
    pub fn block_len(&self) -> usize {
        1 << (self.run_bits + self.low_bits)
    }

    pub fn block_count(&self) -> usize {
        1 << (self.high.len() - self.run_bits)
    }

    /// Sign pattern (bit `k` set: spin `k` stepped down) of walk `index`.
    pub fn pattern_of(&self, index: usize) -> u64 {
        let low = index as u64 & ((1 << self.low_bits) - 1);
        let high = gray((index >> self.low_bits) as u64);
        (high << self.low_bits) | low
    }

    fn high_energy(&self, code: u64) -> f64 {
        self.high.iter().enumerate().fold(0.0, |e, (j, s)| {
            if code >> j & 1 == 0 {
                e + s.g()
            } else {
                e - s.g()
            }
        })
    }

    fn high_weight(&self, code: u64) -> f64 {
        self.high.iter().enumerate().fold(1.0, |w, (j, s)| {
            if code >> j & 1 == 0 {
                w * s.p_up()
            } else {
                w * s.p_down()
            }
        })
    }

    /// Writes the energies and weights of block `block` into the two slices,
    /// each of length [`block_len`](Self::block_len).
    pub fn fill_block(&self, block: usize, energies: &mut [f64], weights: &mut [f64]) {
        let low_len = self.low_energy.len();
        let run_len = 1usize << self.run_bits;
        debug_assert_eq!(energies.len(), run_len * low_len);
        debug_assert_eq!(weights.len(), run_len * low_len);

        let m0 = (block as u64) << self.run_bits;
        let mut code = gray(m0);
        let mut e_high = self.high_energy(code);
        for step in 0..run_len {
            if step > 0 {
                let bit = flipped_bit(m0 + step as u64);
                code ^= 1 << bit;
                let g = self.high[bit as usize].g();
                if code >> bit & 1 == 1 {
                    e_high -= 2.0 * g;
                } else {
                    e_high += 2.0 * g;
                }
            }
            let w_high = self.high_weight(code);
            let range = step * low_len..(step + 1) * low_len;
            for ((e, w), (le, lw)) in energies[range.clone()]
                .iter_mut()
                .zip(&mut weights[range])
                .zip(self.low_energy.iter().zip(&self.low_weight))
            {
                *e = e_high + le;
                *w = w_high * lw;
            }
        }
    }

    /// Applies `f` to every block in parallel and returns the results in block
    /// order.
    pub fn fold_blocks<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&[f64], &[f64]) -> R + Sync,
    {
        let len = self.block_len();
        (0..self.block_count())
            .into_par_iter()
            .map_init(
                || (vec![0.0; len], vec![0.0; len]),
                |(energies, weights), block| {
                    self.fill_block(block, energies, weights);
                    f(energies, weights)
                },
            )
            .collect()
    }

    /// Exact weighted mean and variance over all walks (two streaming passes).
    pub fn moments(&self) -> SpectrumMoments {
        moments_of(self)
    }

    /// Strength-function histogram computed without materializing the walks.
    pub fn histogram(&self, binning: Binning) -> Result<LdosHistogram> {
        histogram_of(self, binning)
    }
}

/// Source of `(energies, weights)` chunks, reduced in a fixed order.
trait WalkSource: Sync {
    fn fold_chunks<R: Send, F: Fn(&[f64], &[f64]) -> R + Sync>(&self, f: F) -> Vec<R>;
}

impl WalkSource for WalkEnumerator<'_> {
    fn fold_chunks<R: Send, F: Fn(&[f64], &[f64]) -> R + Sync>(&self, f: F) -> Vec<R> {
        self.fold_blocks(f)
    }
}

impl WalkSource for EnergySpectrum {
    fn fold_chunks<R: Send, F: Fn(&[f64], &[f64]) -> R + Sync>(&self, f: F) -> Vec<R> {
        const CHUNK: usize = 1 << 16;
        self.energies
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(e, w)| f(e, w))
            .collect()
    }
}

/// Weighted mean and variance of a walk distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumMoments {
    pub total_weight: f64,
    pub mean: f64,
    pub variance: f64,
}

fn moments_of<S: WalkSource>(src: &S) -> SpectrumMoments {
    let partial = src.fold_chunks(|e, w| {
        e.iter()
            .zip(w)
            .fold((0.0, 0.0), |(sw, swe), (&e, &w)| (sw + w, swe + w * e))
    });
    let (total_weight, first) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), &(w, we)| (a + w, b + we));
    let mean = first / total_weight;
    let second: f64 = src
        .fold_chunks(|e, w| {
            e.iter()
                .zip(w)
                .map(|(&e, &w)| w * (e - mean) * (e - mean))
                .sum::<f64>()
        })
        .into_iter()
        .sum();
    SpectrumMoments {
        total_weight,
        mean,
        variance: second / total_weight,
    }
}

/// Weighted set of walk energies `{(E_W, p_W)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    energies: Vec<f64>,
    weights: Vec<f64>,
    merged: bool,
}

impl EnergySpectrum {
    /// Builds a spectrum from raw points; weights must be non-negative and
    /// finite.
    pub fn from_points(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (energies, weights): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Input("energies must be finite".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Input(
                "weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            energies,
            weights,
            merged: false,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.energies
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Whether equal energies were merged (energies then strictly increase).
    pub fn is_merged(&self) -> bool {
        self.merged
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn moments(&self) -> SpectrumMoments {
        moments_of(self)
    }

    pub fn histogram(&self, binning: Binning) -> Result<LdosHistogram> {
        histogram_of(self, binning)
    }

    /// Sorts by energy and merges points whose energy lies within `tolerance`
    /// of the first point of their group. The merged energy is that first
    /// (lowest) energy.
    pub fn merged(self, tolerance: f64) -> Self {
        let mut order: Vec<usize> = (0..self.energies.len()).collect();
        order.par_sort_by(|&i, &j| self.energies[i].total_cmp(&self.energies[j]));

        let mut energies: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for i in order {
            let (e, w) = (self.energies[i], self.weights[i]);
            match energies.last() {
                Some(&head) if e - head <= tolerance => *weights.last_mut().unwrap() += w,
                _ => {
                    energies.push(e);
                    weights.push(w);
                }
            }
        }
        Self {
            energies,
            weights,
            merged: true,
        }
    }

    /// Distribution of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &EnergySpectrum) -> EnergySpectrum {
        let mut energies = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (e1, w1) in self.points() {
            for (e2, w2) in other.points() {
                energies.push(e1 + e2);
                weights.push(w1 * w2);
            }
        }
        EnergySpectrum {
            energies,
            weights,
            merged: false,
        }
    }
}

/// Enumerates every walk of `env` with the default cap and merge tolerance.
pub fn enumerate_spectrum(env: &Environment, merge_degenerate: bool) -> Result<EnergySpectrum> {
    enumerate_spectrum_with(
        env,
        &EnumerationOptions {
            merge_degenerate,
            ..Default::default()
        },
    )
}

pub fn enumerate_spectrum_with(
    env: &Environment,
    opts: &EnumerationOptions,
) -> Result<EnergySpectrum> {
    let walks = WalkEnumerator::new(env, opts.cap)?;
    let total = walks.walk_count();
    let block = walks.block_len();
    let mut energies = vec![0.0; total];
    let mut weights = vec![0.0; total];
    energies
        .par_chunks_mut(block)
        .zip(weights.par_chunks_mut(block))
        .enumerate()
        .for_each(|(b, (e, w))| walks.fill_block(b, e, w));

    let spectrum = EnergySpectrum {
        energies,
        weights,
        merged: false,
    };
    if !opts.merge_degenerate {
        return Ok(spectrum);
    }
    let tolerance = match opts.merge_tolerance {
        Some(tol) if tol >= 0.0 && tol.is_finite() => tol,
        Some(tol) => return Err(Error::Input(format!("merge tolerance {tol} must be >= 0"))),
        None => RELATIVE_MERGE_TOLERANCE * env.couplings().map(f64::abs).sum::<f64>(),
    };
    Ok(spectrum.merged(tolerance))
}

/// `sum_W p_W e^{i E_W t}`.
pub fn characteristic_function(spec: &EnergySpectrum, t: f64) -> Complex64 {
    spec.points().fold(Complex64::new(0.0, 0.0), |acc, (e, w)| {
        acc + Complex64::from_polar(w, e * t)
    })
}

/// Mean `sum_k a_k` and standard deviation `sqrt(sum_k b_k^2)` of the walk
/// energy, with `a_k = (|alpha_k|^2 - |beta_k|^2) g_k` and
/// `b_k^2 = 4 |alpha_k|^2 |beta_k|^2 g_k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpectrumParams {
    pub mean: f64,
    pub std: f64,
}

impl GaussianSpectrumParams {
    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    /// Gaussian decay time `T` in `|r| = exp(-(t/T)^2)`, i.e. `sqrt(2)/B_N`.
    pub fn decay_time(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.std
    }
}

pub fn gaussian_params(env: &Environment) -> GaussianSpectrumParams {
    let (mean, variance) = env.spins().iter().fold((0.0, 0.0), |(m, v), s| {
        let (p, q, g) = (s.p_up(), s.p_down(), s.g());
        (m + (p - q) * g, v + 4.0 * p * q * g * g)
    });
    GaussianSpectrumParams {
        mean,
        std: variance.sqrt(),
    }
}

/// `e^{i mean t} e^{-std^2 t^2 / 2}`.
pub fn gaussian_r_approx(params: &GaussianSpectrumParams, t: f64) -> Complex64 {
    let v = params.variance();
    Complex64::from_polar((-0.5 * v * t * t).exp(), params.mean * t)
}

/// Normal density with the walk's mean and variance.
pub fn ldos_gaussian_envelope(params: &GaussianSpectrumParams, energy: f64) -> Result<f64> {
    if !(params.std > 0.0) {
        return Err(Error::Degenerate(
            "Gaussian envelope needs a positive spectral width".into(),
        ));
    }
    let z = (energy - params.mean) / params.std;
    Ok((-0.5 * z * z).exp() / (params.std * (2.0 * std::f64::consts::PI).sqrt()))
}

/// `max_k |g_k - a_k| / B_N`. Small values mean no single step dominates the
/// variance of the walk.
pub fn lindeberg_diagnostic(env: &Environment) -> Result<f64> {
    let params = gaussian_params(env);
    if !(params.std > 0.0) {
        return Err(Error::Degenerate(
            "Lindeberg ratio undefined for zero spectral width".into(),
        ));
    }
    let largest = env
        .spins()
        .iter()
        .map(|s| (s.g() - (s.p_up() - s.p_down()) * s.g()).abs())
        .fold(0.0, f64::max);
    Ok(largest / params.std)
}

/// Histogram bin selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Binning {
    /// Width `2 IQR / n^{1/3}` with the weighted interquartile range and `n`
    /// the number of walks with positive weight.
    #[default]
    FreedmanDiaconis,
    Count(usize),
    Width(f64),
}

/// Binned strength function; `density[i]` is bin mass over bin width.
#[derive(Debug, Clone, PartialEq)]
pub struct LdosHistogram {
    pub lo: f64,
    pub width: f64,
    pub density: Vec<f64>,
}

impl LdosHistogram {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|i| self.lo + (i as f64 + 0.5) * self.width)
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width
    }
}

struct Support {
    lo: f64,
    hi: f64,
    count: usize,
}

fn support_of<S: WalkSource>(src: &S) -> Option<Support> {
    let parts = src.fold_chunks(|e, w| {
        e.iter().zip(w).filter(|(_, &w)| w > 0.0).fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0usize),
            |(lo, hi, n), (&e, _)| (lo.min(e), hi.max(e), n + 1),
        )
    });
    let (lo, hi, count) = parts.into_iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0usize),
        |(lo, hi, n), (l, h, c)| (lo.min(l), hi.max(h), n + c),
    );
    (count > 0).then_some(Support { lo, hi, count })
}

fn bin_masses<S: WalkSource>(src: &S, lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let parts = src.fold_chunks(|e, w| {
        let mut mass = vec![0.0; bins];
        for (&e, &w) in e.iter().zip(w) {
            if w > 0.0 {
                let idx = (((e - lo) / width).floor().max(0.0) as usize).min(bins - 1);
                mass[idx] += w;
            }
        }
        mass
    });
    parts.into_iter().fold(vec![0.0; bins], |mut acc, part| {
        acc.iter_mut().zip(part).for_each(|(a, p)| *a += p);
        acc
    })
}

fn weighted_quantile(mass: &[f64], lo: f64, width: f64, q: f64) -> f64 {
    let total: f64 = mass.iter().sum();
    let target = q * total;
    let mut cum = 0.0;
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 && cum + m >= target {
            return lo + (i as f64 + (target - cum) / m) * width;
        }
        cum += m;
    }
    lo + mass.len() as f64 * width
}

fn histogram_of<S: WalkSource>(src: &S, binning: Binning) -> Result<LdosHistogram> {
    let support = support_of(src)
        .ok_or_else(|| Error::Degenerate("spectrum carries no positive weight".into()))?;
    let range = support.hi - support.lo;
    if range <= 0.0 {
        let density = bin_masses(src, support.lo - 0.5, 1.0, 1);
        return Ok(LdosHistogram {
            lo: support.lo - 0.5,
            width: 1.0,
            density,
        });
    }

    let width = match binning {
        Binning::Count(0) => return Err(Error::Input("bin count must be positive".into())),
        Binning::Count(n) => range / n as f64,
        Binning::Width(w) if w > 0.0 && w.is_finite() => w,
        Binning::Width(w) => return Err(Error::Input(format!("bin width {w} must be positive"))),
        Binning::FreedmanDiaconis => {
            let fine_width = range / QUANTILE_GRID as f64;
            let fine = bin_masses(src, support.lo, fine_width, QUANTILE_GRID);
            let iqr = weighted_quantile(&fine, support.lo, fine_width, 0.75)
                - weighted_quantile(&fine, support.lo, fine_width, 0.25);
            let h = 2.0 * iqr / (support.count as f64).cbrt();
            if h > 0.0 {
                h
            } else {
                range
            }
        }
    };
    let bins = ((range / width).ceil() as usize).max(1);
    if bins > MAX_BINS {
        return Err(Error::Input(format!(
            "{bins} bins requested, above the limit of {MAX_BINS}"
        )));
    }
    let mut density = bin_masses(src, support.lo, width, bins);
    density.iter_mut().for_each(|d| *d /= width);
    Ok(LdosHistogram {
        lo: support.lo,
        width,
        density,
    })
}
