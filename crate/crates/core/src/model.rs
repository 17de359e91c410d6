//! Domain types of the qubit + spin-bath model and the closed-form
//! decoherence factor.
//!
//! Units are natural (`hbar = 1`): couplings are energies, times are inverse
//! energies. Bath spin `k` contributes the factor
//! `|alpha_k|^2 e^{i g_k t} + |beta_k|^2 e^{-i g_k t}` to `r(t)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|x|^2 + |y|^2 = 1` for every pair of amplitudes.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Largest bath enumerated term by term unless a caller raises the cap.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

fn check_normalized(x: Complex64, y: Complex64) -> Result<()> {
    let norm = x.norm_sqr() + y.norm_sqr();
    if !norm.is_finite() || (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// State `a|0> + b|1>` of the central qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    a: Complex64,
    b: Complex64,
    p0: f64,
    p1: f64,
}

impl SystemState {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        check_normalized(a, b)?;
        Ok(Self {
            a,
            b,
            p0: a.norm_sqr(),
            p1: b.norm_sqr(),
        })
    }

    /// `sqrt(p0)|0> + e^{i phase} sqrt(1 - p0)|1>`.
    pub fn from_population(p0: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) || !phase.is_finite() {
            return Err(Error::Domain(format!(
                "population {p0} must lie in [0, 1] and phase {phase} must be finite"
            )));
        }
        let state = Self::new(
            Complex64::new(p0.sqrt(), 0.0),
            Complex64::from_polar((1.0 - p0).sqrt(), phase),
        )?;
        Ok(Self {
            p0,
            p1: 1.0 - p0,
            ..state
        })
    }

    /// Equal superposition `(|0> + |1>)/sqrt(2)`.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a: Complex64::new(h, 0.0),
            b: Complex64::new(h, 0.0),
            p0: 0.5,
            p1: 0.5,
        }
    }

    /// Pointer state `|0>`.
    pub fn zero() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            p0: 1.0,
            p1: 0.0,
        }
    }

    /// Pointer state `|1>`.
    pub fn one() -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(1.0, 0.0),
            p0: 0.0,
            p1: 1.0,
        }
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// `|a|^2`.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `|b|^2`.
    pub fn p1(&self) -> f64 {
        self.p1
    }
}

/// One environment spin: coupling `g` and initial amplitudes on up/down.
///
/// The populations are kept alongside the amplitudes so that a spin built
/// from `p_up = 1/2` reports exactly `1/2` rather than `|sqrt(1/2)|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpin {
    g: f64,
    alpha: Complex64,
    beta: Complex64,
    p_up: f64,
    p_down: f64,
}

impl BathSpin {
    pub fn new(g: f64, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::Domain(format!("coupling must be finite, got {g}")));
        }
        check_normalized(alpha, beta)?;
        Ok(Self {
            g,
            alpha,
            beta,
            p_up: alpha.norm_sqr(),
            p_down: beta.norm_sqr(),
        })
    }

    /// Builds the amplitudes `sqrt(p_up) e^{i phase_alpha}` and
    /// `sqrt(1 - p_up) e^{i phase_beta}`.
    pub fn from_populations(g: f64, p_up: f64, phase_alpha: f64, phase_beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_up) {
            return Err(Error::Domain(format!(
                "p_up must lie in [0, 1], got {p_up}"
            )));
        }
        if !phase_alpha.is_finite() || !phase_beta.is_finite() {
            return Err(Error::Domain("phases must be finite".into()));
        }
        let spin = Self::new(
            g,
            Complex64::from_polar(p_up.sqrt(), phase_alpha),
            Complex64::from_polar((1.0 - p_up).sqrt(), phase_beta),
        )?;
        Ok(Self {
            p_up,
            p_down: 1.0 - p_up,
            ..spin
        })
    }

    /// Maximally mixed-weight spin, `|alpha|^2 = |beta|^2 = 1/2`.
    pub fn balanced(g: f64) -> Result<Self> {
        Self::from_populations(g, 0.5, 0.0, 0.0)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `|alpha|^2`, weight of the `+g` step.
    pub fn p_up(&self) -> f64 {
        self.p_up
    }

    /// `|beta|^2`, weight of the `-g` step.
    pub fn p_down(&self) -> f64 {
        self.p_down
    }

    /// This spin's factor of `r(t)`.
    #[inline]
    pub fn factor(&self, t: f64) -> Complex64 {
        let (s, c) = (self.g * t).sin_cos();
        let (p, q) = (self.p_up(), self.p_down());
        Complex64::new((p + q) * c, (p - q) * s)
    }
}

/// Ordered collection of bath spins. The empty environment is legal and
/// leaves the qubit untouched.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Environment {
    spins: Vec<BathSpin>,
}

impl Environment {
    pub fn new(spins: Vec<BathSpin>) -> Self {
        Self { spins }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// All spins with `|alpha|^2 = 1/2` and real amplitudes.
    pub fn balanced(couplings: &[f64]) -> Result<Self> {
        Self::uniform_weights(couplings, 0.5)
    }

    /// All spins with the same `|alpha|^2 = p_up` and zero phases.
    pub fn uniform_weights(couplings: &[f64], p_up: f64) -> Result<Self> {
        couplings
            .iter()
            .map(|&g| BathSpin::from_populations(g, p_up, 0.0, 0.0))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn spins(&self) -> &[BathSpin] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn couplings(&self) -> impl Iterator<Item = f64> + '_ {
        self.spins.iter().map(BathSpin::g)
    }

    /// Disjoint union `self ⊕ other`; spins of `self` come first.
    pub fn concat(&self, other: &Environment) -> Environment {
        let mut spins = self.spins.clone();
        spins.extend_from_slice(&other.spins);
        Environment { spins }
    }
}

impl FromIterator<BathSpin> for Environment {
    fn from_iter<I: IntoIterator<Item = BathSpin>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite, got {t}")))
    }
}

/// Product-form decoherence factor
/// `r(t) = prod_k (|alpha_k|^2 e^{i g_k t} + |beta_k|^2 e^{-i g_k t})`.
///
/// Linear in `N`; exactly `1` at `t = 0` and for the empty environment.
pub fn decoherence_factor(env: &Environment, t: f64) -> Result<Complex64> {
    check_time(t)?;
    Ok(product_form(env, t))
}

#[inline]
pub(crate) fn product_form(env: &Environment, t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    env.spins
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.factor(t))
}

/// Brute-force evaluation of `r(t)` as the sum over all `2^N` sign patterns.
///
/// Each pattern is summed from scratch, independently of the Gray-code path in
/// [`crate::spectrum`]; it exists to cross-check the product form.
pub fn decoherence_factor_expansion(env: &Environment, t: f64, cap: usize) -> Result<Complex64> {
    check_time(t)?;
    let n = env.len();
    if n > cap || n >= usize::BITS as usize {
        return Err(Error::Size { n, cap });
    }
    let spins = env.spins();
    let mut acc = Complex64::new(0.0, 0.0);
    for mask in 0usize..(1usize << n) {
        let mut energy = 0.0;
        let mut weight = 1.0;
        for (k, s) in spins.iter().enumerate() {
            if mask >> k & 1 == 0 {
                energy += s.g;
                weight *= s.p_up();
            } else {
                energy -= s.g;
                weight *= s.p_down();
            }
        }
        acc += Complex64::from_polar(weight, energy * t);
    }
    Ok(acc)
}

/// Time grid with the decoherence factor evaluated at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl DecoherenceSeries {
    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `r(t)` on every point of `times`, evaluated in parallel and assembled in
/// grid order.
pub fn decoherence_series(env: &Environment, times: &[f64]) -> Result<DecoherenceSeries> {
    times.iter().try_for_each(|&t| check_time(t))?;
    let values = times.par_iter().map(|&t| product_form(env, t)).collect();
    Ok(DecoherenceSeries {
        times: times.to_vec(),
        values,
    })
}

/// Qubit density matrix, row-major `[[rho00, rho01], [rho10, rho11]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub rho00: Complex64,
    pub rho01: Complex64,
    pub rho10: Complex64,
    pub rho11: Complex64,
}

impl DensityMatrix2 {
    pub fn trace(&self) -> Complex64 {
        self.rho00 + self.rho11
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.rho00.re + self.rho11.re);
        let half_gap = 0.5 * (self.rho00.re - self.rho11.re);
        let off = 0.5 * (self.rho01 + self.rho10.conj());
        let radius = (half_gap * half_gap + off.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn purity(&self) -> f64 {
        self.rho00.norm_sqr()
            + self.rho11.norm_sqr()
            + self.rho01.norm_sqr()
            + self.rho10.norm_sqr()
    }

    /// Hermiticity, unit trace and positivity, each to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let hermitian = (self.rho01 - self.rho10.conj()).norm() <= tol
            && self.rho00.im.abs() <= tol
            && self.rho11.im.abs() <= tol;
        let unit_trace = (self.trace() - Complex64::new(1.0, 0.0)).norm() <= tol;
        hermitian && unit_trace && self.eigenvalues()[0] >= -tol
    }
}

/// Reduced density matrix of the qubit at time `t`:
/// diagonal `|a|^2, |b|^2`, coherence `a conj(b) r(t)`.
pub fn reduced_density_matrix(
    sys: &SystemState,
    env: &Environment,
    t: f64,
) -> Result<DensityMatrix2> {
    let r = decoherence_factor(env, t)?;
    let rho01 = sys.a * sys.b.conj() * r;
    Ok(DensityMatrix2 {
        rho00: Complex64::new(sys.p0, 0.0),
        rho01,
        rho10: rho01.conj(),
        rho11: Complex64::new(sys.p1, 0.0),
    })
}

/// Long-time average of `|r(t)|^2` for incommensurate couplings:
/// `2^{-N} prod_k (1 + (|alpha_k|^2 - |beta_k|^2)^2)`.
pub fn long_time_avg_sq(env: &Environment) -> f64 {
    env.spins
        .iter()
        .map(|s| {
            let bias = s.p_up() - s.p_down();
            0.5 * (1.0 + bias * bias)
        })
        .product()
}
