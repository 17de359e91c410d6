//! Partial Loschmidt echo.
//!
//! The bath splits into an unreversed part `E'` and a reversed part `E''`.
//! Up to `t_R` both evolve forward; afterwards `E''` runs backwards, so its
//! decoherence factor is evaluated at `2 t_R - t`. The qubit fidelity with its
//! initial state is
//! `mu(t) = |a|^4 + |b|^4 + 2 |a b|^2 Re[r'(t) r''(t_eff)]`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{product_form, Environment, SystemState};
use crate::spectrum::{gaussian_params, gaussian_r_approx, GaussianSpectrumParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EchoExperiment {
    sys: SystemState,
    env_unreversed: Environment,
    env_reversed: Environment,
    t_reversal: f64,
}

impl EchoExperiment {
    pub fn new(
        sys: SystemState,
        env_unreversed: Environment,
        env_reversed: Environment,
        t_reversal: f64,
    ) -> Result<Self> {
        if !(t_reversal.is_finite() && t_reversal >= 0.0) {
            return Err(Error::Domain(format!(
                "reversal time must be finite and >= 0, got {t_reversal}"
            )));
        }
        Ok(Self {
            sys,
            env_unreversed,
            env_reversed,
            t_reversal,
        })
    }

    pub fn sys(&self) -> &SystemState {
        &self.sys
    }

    pub fn env_unreversed(&self) -> &Environment {
        &self.env_unreversed
    }

    pub fn env_reversed(&self) -> &Environment {
        &self.env_reversed
    }

    pub fn t_reversal(&self) -> f64 {
        self.t_reversal
    }

    /// Same baths and state, different reversal time.
    pub fn with_reversal_time(&self, t_reversal: f64) -> Result<Self> {
        Self::new(
            self.sys,
            self.env_unreversed.clone(),
            self.env_reversed.clone(),
            t_reversal,
        )
    }

    /// Plateau `|a|^4 + |b|^4` reached when the decoherence factor vanishes.
    pub fn mu_infinity(&self) -> f64 {
        let (pa, pb) = (self.sys.p0(), self.sys.p1());
        pa * pa + pb * pb
    }

    fn fidelity_of(&self, r: Complex64) -> f64 {
        let (pa, pb) = (self.sys.p0(), self.sys.p1());
        pa * pa + pb * pb + 2.0 * pa * pb * r.re
    }

    /// Maps a fidelity to `(mu - mu_inf) / (1 - mu_inf)`, the real part of the
    /// net decoherence factor.
    pub fn normalized_signal(&self, mu: f64) -> Result<f64> {
        let span = 1.0 - self.mu_infinity();
        if span <= 0.0 {
            return Err(Error::Degenerate(
                "pointer states carry no echo signal".into(),
            ));
        }
        Ok((mu - self.mu_infinity()) / span)
    }

    /// Effective evolution time of the reversed bath at lab time `t`.
    fn reversed_time(&self, t: f64) -> f64 {
        if t < self.t_reversal {
            t
        } else {
            2.0 * self.t_reversal - t
        }
    }

    /// Net decoherence factor `r'(t) r''(t_eff)`.
    pub fn net_decoherence_factor(&self, t: f64) -> Result<Complex64> {
        check_lab_time(t)?;
        Ok(product_form(&self.env_unreversed, t)
            * product_form(&self.env_reversed, self.reversed_time(t)))
    }

    fn gaussian_net_factor(
        &self,
        t: f64,
        unrev: &GaussianSpectrumParams,
        rev: &GaussianSpectrumParams,
    ) -> Complex64 {
        gaussian_r_approx(unrev, t) * gaussian_r_approx(rev, self.reversed_time(t))
    }

    /// Fidelity predicted by the Gaussian approximants of both baths.
    pub fn gaussian_prediction(&self, t: f64) -> Result<f64> {
        check_lab_time(t)?;
        let unrev = gaussian_params(&self.env_unreversed);
        let rev = gaussian_params(&self.env_reversed);
        Ok(self.fidelity_of(self.gaussian_net_factor(t, &unrev, &rev)))
    }
}

fn check_lab_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "echo time must be finite and >= 0, got {t}"
        )))
    }
}

/// Exact fidelity `mu(t)` from the product-form decoherence factors.
pub fn echo_fidelity(exp: &EchoExperiment, t: f64) -> Result<f64> {
    Ok(exp.fidelity_of(exp.net_decoherence_factor(t)?))
}

/// Echo read out at `t = 2 t_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reacquisition {
    pub t_reversal: f64,
    /// Exact `mu(2 t_R)`.
    pub mu: f64,
    /// `1 - mu(2 t_R)`.
    pub deficit: f64,
    /// Gaussian modulus `exp(-2 B'^2 t_R^2)` of `r'(2 t_R)`; equals
    /// `exp(-2 sum g'^2 t_R^2)` for balanced spins.
    pub predicted_decay: f64,
    /// `mu(2 t_R)` with `r'` replaced by its Gaussian approximant.
    pub predicted_mu: f64,
}

pub fn echo_at_reacquisition(exp: &EchoExperiment) -> Reacquisition {
    let t = 2.0 * exp.t_reversal;
    let r = product_form(&exp.env_unreversed, t) * product_form(&exp.env_reversed, 0.0);
    let mu = exp.fidelity_of(r);
    let unrev = gaussian_params(&exp.env_unreversed);
    let predicted = gaussian_r_approx(&unrev, t);
    Reacquisition {
        t_reversal: exp.t_reversal,
        mu,
        deficit: 1.0 - mu,
        predicted_decay: predicted.norm(),
        predicted_mu: exp.fidelity_of(predicted),
    }
}

/// [`echo_at_reacquisition`] over a grid of reversal times.
pub fn reacquisition_sweep(
    exp: &EchoExperiment,
    t_reversals: &[f64],
) -> Result<Vec<Reacquisition>> {
    t_reversals
        .par_iter()
        .map(|&t_r| {
            exp.with_reversal_time(t_r)
                .map(|e| echo_at_reacquisition(&e))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoSeries {
    pub times: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_gaussian_prediction: Vec<f64>,
}

/// Fidelity over an ascending grid: forward evolution before `t_R`, partial
/// reversal afterwards.
pub fn echo_series(exp: &EchoExperiment, times: &[f64]) -> Result<EchoSeries> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Input(
            "echo time grid must be sorted ascending".into(),
        ));
    }
    times.iter().try_for_each(|&t| check_lab_time(t))?;
    let unrev = gaussian_params(&exp.env_unreversed);
    let rev = gaussian_params(&exp.env_reversed);
    let (mu, predicted): (Vec<f64>, Vec<f64>) = times
        .par_iter()
        .map(|&t| {
            let exact = product_form(&exp.env_unreversed, t)
                * product_form(&exp.env_reversed, exp.reversed_time(t));
            (
                exp.fidelity_of(exact),
                exp.fidelity_of(exp.gaussian_net_factor(t, &unrev, &rev)),
            )
        })
        .unzip();
    Ok(EchoSeries {
        times: times.to_vec(),
        mu,
        mu_gaussian_prediction: predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::decoherence_factor;

    fn balanced(gs: &[f64]) -> Environment {
        Environment::balanced(gs).unwrap()
    }

    #[test]
    fn complete_reversal_returns_to_one() {
        let exp = EchoExperiment::new(
            SystemState::plus(),
            Environment::empty(),
            balanced(&[0.3, 1.2, 0.8, 2.2]),
            1.7,
        )
        .unwrap();
        let mu = echo_fidelity(&exp, 3.4).unwrap();
        assert!((mu - 1.0).abs() < 1e-12);
        let re = echo_at_reacquisition(&exp);
        assert!((re.mu - 1.0).abs() < 1e-12);
        assert!(re.deficit.abs() < 1e-12);
    }

    #[test]
    fn pointer_state_is_echo_proof() {
        for sys in [SystemState::zero(), SystemState::one()] {
            let exp =
                EchoExperiment::new(sys, balanced(&[0.9, 1.4]), balanced(&[0.2]), 0.8).unwrap();
            for t in [0.0, 0.4, 0.8, 1.3, 1.6, 5.0] {
                assert_eq!(echo_fidelity(&exp, t).unwrap(), 1.0);
            }
            assert!(exp.normalized_signal(1.0).is_err());
        }
    }

    #[test]
    fn unreversed_bath_degrades_echo() {
        let exp = EchoExperiment::new(
            SystemState::plus(),
            balanced(&[0.5; 4]),
            Environment::empty(),
            1.0,
        )
        .unwrap();
        let mu = echo_fidelity(&exp, 2.0).unwrap();
        // 1/2 + cos^4(1)/2, evaluated independently.
        assert!((mu - 0.542_610_564_559_238_7).abs() < 1e-15);
    }

    #[test]
    fn zero_reversal_time_or_empty_unreversed_bath() {
        let exp = EchoExperiment::new(
            SystemState::plus(),
            balanced(&[1.0, 2.0]),
            balanced(&[3.0]),
            0.0,
        )
        .unwrap();
        let re = echo_at_reacquisition(&exp);
        assert_eq!(re.mu, 1.0);
        assert_eq!(re.deficit, 0.0);

        for t_r in [0.3, 2.0, 9.1] {
            let exp = EchoExperiment::new(
                SystemState::plus(),
                Environment::empty(),
                balanced(&[3.0]),
                t_r,
            )
            .unwrap();
            assert_eq!(echo_at_reacquisition(&exp).deficit, 0.0);
        }
    }

    #[test]
    fn negative_time_rejected() {
        let exp = EchoExperiment::new(SystemState::plus(), balanced(&[1.0]), balanced(&[1.0]), 1.0)
            .unwrap();
        assert!(matches!(echo_fidelity(&exp, -0.1), Err(Error::Domain(_))));
        assert!(EchoExperiment::new(
            SystemState::plus(),
            Environment::empty(),
            Environment::empty(),
            -1.0
        )
        .is_err());
    }

    #[test]
    fn forward_phase_factorizes() {
        let e1 = balanced(&[0.4, 1.1, 0.7]);
        let e2 = Environment::uniform_weights(&[0.9, 1.6], 0.3).unwrap();
        let exp = EchoExperiment::new(SystemState::plus(), e1.clone(), e2.clone(), 5.0).unwrap();
        let joint = e1.concat(&e2);
        for t in [0.0, 0.5, 1.9, 4.2] {
            let net = exp.net_decoherence_factor(t).unwrap();
            let split = decoherence_factor(&e1, t).unwrap() * decoherence_factor(&e2, t).unwrap();
            let whole = decoherence_factor(&joint, t).unwrap();
            assert!((net - split).norm() < 1e-12);
            assert!((net - whole).norm() < 1e-12);
        }
    }

    #[test]
    fn continuous_at_reversal() {
        let sys = SystemState::from_population(0.3, 0.4).unwrap();
        let exp = EchoExperiment::new(sys, balanced(&[0.4, 1.1]), balanced(&[0.9, 1.3, 0.2]), 1.25)
            .unwrap();
        let t_r = exp.t_reversal();
        let forward = exp.fidelity_of(
            product_form(exp.env_unreversed(), t_r) * product_form(exp.env_reversed(), t_r),
        );
        assert_eq!(echo_fidelity(&exp, t_r).unwrap(), forward);
        let eps = 1e-9;
        let left = echo_fidelity(&exp, t_r - eps).unwrap();
        let right = echo_fidelity(&exp, t_r + eps).unwrap();
        assert!((left - right).abs() < 1e-8);
    }

    #[test]
    fn full_reversal_series_is_mirror_symmetric() {
        let exp = EchoExperiment::new(
            SystemState::plus(),
            Environment::empty(),
            balanced(&[0.3, 0.8, 1.7, 0.55]),
            2.0,
        )
        .unwrap();
        for s in [0.0, 0.25, 0.5, 1.0, 1.5, 2.0] {
            let before = echo_fidelity(&exp, 2.0 - s).unwrap();
            let after = echo_fidelity(&exp, 2.0 + s).unwrap();
            assert!((before - after).abs() < 1e-14, "s={s}");
        }
    }

    #[test]
    fn series_matches_pointwise_and_reacquisition() {
        let exp = EchoExperiment::new(
            SystemState::plus(),
            balanced(&[0.2, 0.35, 0.15]),
            balanced(&[0.9, 1.3]),
            1.5,
        )
        .unwrap();
        let times: Vec<f64> = (0..=30).map(|i| i as f64 * 0.1).collect();
        let series = echo_series(&exp, &times).unwrap();
        for (t, mu) in times.iter().zip(&series.mu) {
            assert_eq!(*mu, echo_fidelity(&exp, *t).unwrap());
            assert!((-1e-12..=1.0 + 1e-12).contains(mu));
        }
        let re = echo_at_reacquisition(&exp);
        assert!((series.mu[30] - re.mu).abs() < 1e-15);
        assert!(echo_series(&exp, &[0.0, 0.2, 0.1]).is_err());
        assert!(echo_series(&exp, &[-0.1, 0.2]).is_err());
    }

    #[test]
    fn empty_baths_give_constant_unit_series() {
        let exp = EchoExperiment::new(
            SystemState::plus(),
            Environment::empty(),
            Environment::empty(),
            0.7,
        )
        .unwrap();
        let series = echo_series(&exp, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert!(series.mu.iter().all(|&m| m == 1.0));
        assert!(series.mu_gaussian_prediction.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn gaussian_prediction_for_balanced_unreversed_bath() {
        let gs = [0.2, 0.5, 0.3, 0.4];
        let exp = EchoExperiment::new(
            SystemState::plus(),
            balanced(&gs),
            Environment::empty(),
            0.6,
        )
        .unwrap();
        let re = echo_at_reacquisition(&exp);
        let sum_sq: f64 = gs.iter().map(|g| g * g).sum();
        assert!((re.predicted_decay - (-2.0 * sum_sq * 0.36f64).exp()).abs() < 1e-15);
        assert!((re.predicted_mu - (0.5 + 0.5 * re.predicted_decay)).abs() < 1e-15);
    }

    #[test]
    fn reacquisition_ignores_the_reversed_bath() {
        let unrev = balanced(&[0.3, 0.6, 0.45]);
        let base = EchoExperiment::new(
            SystemState::plus(),
            unrev.clone(),
            Environment::empty(),
            0.9,
        )
        .unwrap();
        let reference = echo_at_reacquisition(&base).mu;
        for rev in [
            balanced(&[5.0]),
            balanced(&[0.1, 0.2, 7.0, 1.1]),
            Environment::empty(),
        ] {
            let exp = EchoExperiment::new(SystemState::plus(), unrev.clone(), rev, 0.9).unwrap();
            assert_eq!(echo_at_reacquisition(&exp).mu, reference);
        }
    }
}
