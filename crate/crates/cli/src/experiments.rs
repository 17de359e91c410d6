//! The five experiments and the files each one writes.
//!
//! | experiment    | files                                                                   |
//! |---------------|-------------------------------------------------------------------------|
//! | `decoherence` | `environment.json`, `decoherence.csv`, `walk.csv`, `fit.json`, `report.json` |
//! | `spectrum`    | `environment.json`, `spectrum.csv` (small baths), `ldos.csv`, `ldos_gaussian.csv`, `decoherence.csv`, `fit.json`, `report.json` |
//! | `ensemble`    | `environment_0.json`, `ensemble.csv`, `fit.json`                        |
//! | `echo`        | `environment.json`, `environment_reversed.json`, `echo.csv`, `echo_sweep.csv`, `slope.json` |
//! | `saturation`  | `saturation.json`                                                       |

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use spinbath_core::analysis::{window_until_below, Window};
use spinbath_core::spectrum::enumerate_spectrum_with;
use spinbath_core::{
    classify_decay, decoherence_series, echo, fit_decay, gaussian_params, io,
    ldos_gaussian_envelope, lindeberg_diagnostic, loglog_slope, loglog_slope_raw, long_time_avg_sq,
    sample_environment, saturation_level, Classification, ClassifyOptions, DecayModel,
    EchoExperiment, EnumerationOptions, Environment, Error, GaussianSpectrumParams, SlopeFit,
    WalkEnumerator,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::RunDir;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run_into(c: &ExperimentConfig, dir: &mut RunDir) -> Result<()> {
    match c.experiment {
        ExperimentKind::Decoherence => decoherence(c, dir),
        ExperimentKind::Spectrum => spectrum(c, dir),
        ExperimentKind::Ensemble => ensemble(c, dir),
        ExperimentKind::Echo => echo_experiment(c, dir),
        ExperimentKind::Saturation => saturation(c, dir),
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn first_environment(c: &ExperimentConfig) -> Result<Environment> {
    Ok(sample_environment(&c.bath.ensemble(c.seed), 0)?)
}

fn fit_window(c: &ExperimentConfig, times: &[f64], values: &[f64]) -> Result<Window> {
    if let Some(w) = c.fit.window {
        return Ok(w);
    }
    window_until_below(times, values, c.fit.threshold).ok_or_else(|| {
        Error::Input(format!(
            "signal drops below fit threshold {} within the first two samples; set fit.window",
            c.fit.threshold
        ))
        .into()
    })
}

#[derive(Serialize)]
struct GaussianReport {
    mean: f64,
    std: f64,
    variance: f64,
    decay_time: f64,
}

impl From<GaussianSpectrumParams> for GaussianReport {
    fn from(p: GaussianSpectrumParams) -> Self {
        Self {
            mean: p.mean,
            std: p.std,
            variance: p.variance(),
            decay_time: p.decay_time(),
        }
    }
}

#[derive(Serialize)]
struct DecoherenceReport {
    n_spins: usize,
    gaussian: GaussianReport,
    lindeberg: Option<f64>,
    long_time_rms: f64,
    classification: Classification,
}

fn decoherence(c: &ExperimentConfig, dir: &mut RunDir) -> Result<()> {
    let env = first_environment(c)?;
    dir.write_json("environment.json", &env)?;

    let times = c.times.values();
    let series = decoherence_series(&env, &times)?;
    dir.write_with("decoherence.csv", |w| io::write_decoherence_csv(w, &series))?;
    dir.write_with("walk.csv", |w| {
        write_walk(w, &env, &c.decoherence.walk_times)
    })?;

    let moduli = series.moduli();
    let window = fit_window(c, &times, &moduli)?;
    let fit = fit_decay(&times, &moduli, DecayModel::Gaussian, window)?;
    dir.write_json("fit.json", &fit)?;
    dir.write_json(
        "report.json",
        &DecoherenceReport {
            n_spins: env.len(),
            gaussian: gaussian_params(&env).into(),
            lindeberg: lindeberg_diagnostic(&env).ok(),
            long_time_rms: long_time_avg_sq(&env).sqrt(),
            classification: classify_decay(&times, &moduli, window, ClassifyOptions::default())?,
        },
    )
}

/// Partial products of the per-spin factors: the path `r(t)` takes in the
/// complex plane as spins are added one at a time.
fn write_walk(w: &mut Vec<u8>, env: &Environment, times: &[f64]) -> std::io::Result<()> {
    writeln!(w, "t,spins,re,im")?;
    for &t in times {
        let mut z = spinbath_core::Complex64::new(1.0, 0.0);
        writeln!(w, "{},0,{},{}", num(t), num(z.re), num(z.im))?;
        for (k, s) in env.spins().iter().enumerate() {
            z *= s.factor(t);
            writeln!(w, "{},{},{},{}", num(t), k + 1, num(z.re), num(z.im))?;
        }
    }
    w.flush()
}

#[derive(Serialize)]
struct Moments {
    mean: f64,
    variance: f64,
}

#[derive(Serialize)]
struct LdosReport {
    bins: usize,
    lo: f64,
    width: f64,
    binned: Moments,
    /// Largest `|histogram - envelope|` over bin centers.
    envelope_sup_deviation: Option<f64>,
    envelope_peak: Option<f64>,
}

#[derive(Serialize)]
struct SpectrumReport {
    n_spins: usize,
    walks: u64,
    distinct_energies: Option<usize>,
    exact: Moments,
    gaussian: GaussianReport,
    lindeberg: Option<f64>,
    ldos: LdosReport,
}

fn spectrum(c: &ExperimentConfig, dir: &mut RunDir) -> Result<()> {
    let env = first_environment(c)?;
    dir.write_json("environment.json", &env)?;

    let walker = WalkEnumerator::new(&env, c.bath.enumeration_cap)?;
    let exact = walker.moments();
    let params = gaussian_params(&env);

    let mut distinct = None;
    if env.len() <= c.spectrum.export_max_spins {
        let opts = EnumerationOptions {
            cap: c.bath.enumeration_cap,
            merge_degenerate: c.spectrum.merge,
            merge_tolerance: None,
        };
        let spec = enumerate_spectrum_with(&env, &opts)?;
        distinct = Some(spec.len());
        dir.write_with("spectrum.csv", |w| io::write_spectrum_csv(w, &spec))?;
    }

    let hist = walker.histogram(c.spectrum.binning.into())?;
    dir.write_with("ldos.csv", |w| io::write_ldos_csv(w, &hist))?;
    let envelope: Option<Vec<f64>> = (params.std > 0.0)
        .then(|| {
            hist.centers()
                .map(|e| ldos_gaussian_envelope(&params, e))
                .collect()
        })
        .transpose()?;
    if let Some(env_density) = &envelope {
        dir.write_with("ldos_gaussian.csv", |w| {
            writeln!(w, "bin_center,density")?;
            for (e, d) in hist.centers().zip(env_density) {
                writeln!(w, "{},{}", num(e), num(*d))?;
            }
            w.flush()
        })?;
    }

    let times = c.times.values();
    let series = decoherence_series(&env, &times)?;
    dir.write_with("decoherence.csv", |w| io::write_decoherence_csv(w, &series))?;
    let moduli = series.moduli();
    let fit = fit_decay(
        &times,
        &moduli,
        DecayModel::Gaussian,
        fit_window(c, &times, &moduli)?,
    )?;
    dir.write_json("fit.json", &fit)?;

    let mass: Vec<f64> = hist.density.iter().map(|d| d * hist.width).collect();
    let total: f64 = mass.iter().sum();
    let binned_mean = hist.centers().zip(&mass).map(|(e, m)| e * m).sum::<f64>() / total;
    let binned_var = hist
        .centers()
        .zip(&mass)
        .map(|(e, m)| m * (e - binned_mean).powi(2))
        .sum::<f64>()
        / total;
    let sup = envelope.as_ref().map(|env_density| {
        hist.density
            .iter()
            .zip(env_density)
            .map(|(d, e)| (d - e).abs())
            .fold(0.0, f64::max)
    });
    let peak = (params.std > 0.0)
        .then(|| ldos_gaussian_envelope(&params, params.mean))
        .transpose()?;
    dir.write_json(
        "report.json",
        &SpectrumReport {
            n_spins: env.len(),
            walks: walker.walk_count() as u64,
            distinct_energies: distinct,
            exact: Moments {
                mean: exact.mean,
                variance: exact.variance,
            },
            gaussian: params.into(),
            lindeberg: lindeberg_diagnostic(&env).ok(),
            ldos: LdosReport {
                bins: hist.density.len(),
                lo: hist.lo,
                width: hist.width,
                binned: Moments {
                    mean: binned_mean,
                    variance: binned_var,
                },
                envelope_sup_deviation: sup,
                envelope_peak: peak,
            },
        },
    )
}

fn ensemble(c: &ExperimentConfig, dir: &mut RunDir) -> Result<()> {
    let spec = c.bath.ensemble(c.seed);
    dir.write_json("environment_0.json", &sample_environment(&spec, 0)?)?;

    let times = c.times.values();
    let avg = spinbath_core::ensemble_average_r(&spec, &times)?;
    let modulus = avg.modulus_of_mean();
    dir.write_with("ensemble.csv", |w| {
        writeln!(w, "t,mean_re,mean_im,mean_abs,std,mean_modulus")?;
        for i in 0..times.len() {
            let z = avg.mean[i];
            writeln!(
                w,
                "{},{},{},{},{},{}",
                num(times[i]),
                num(z.re),
                num(z.im),
                num(modulus[i]),
                num(avg.std[i]),
                num(avg.mean_modulus[i])
            )?;
        }
        w.flush()
    })?;

    // Fit the modulus of the complex mean.
    let window = fit_window(c, &times, &modulus)?;
    let class = classify_decay(&times, &modulus, window, ClassifyOptions::default())?;
    dir.write_json("fit.json", &class)
}

#[derive(Serialize)]
struct SlopeReport {
    /// `ln(-ln s)` against `ln t_R` with `s` the normalized signal.
    stretched: SlopeFit,
    /// Same regression on the unnormalized excess `mu - mu_inf`.
    raw: Option<SlopeFit>,
    mu_infinity: f64,
    points: usize,
}

/// Widest run of reversal times, starting at the first point with
/// `s <= hi`, over which `lo <= s <= hi` holds.
fn signal_window(t_r: &[f64], signal: &[f64], [lo, hi]: [f64; 2]) -> Option<Window> {
    let start = signal.iter().position(|&s| s <= hi)?;
    let len = signal[start..]
        .iter()
        .take_while(|&&s| s >= lo && s <= hi)
        .count();
    if len < 2 {
        return None;
    }
    Window::new(t_r[start], t_r[start + len - 1]).ok()
}

fn echo_experiment(c: &ExperimentConfig, dir: &mut RunDir) -> Result<()> {
    let unreversed = first_environment(c)?;
    let reversed = if c.echo.reversed.n_spins == 0 {
        Environment::empty()
    } else {
        sample_environment(&c.echo.reversed_spec(c.seed), 0)?
    };
    dir.write_json("environment.json", &unreversed)?;
    dir.write_json("environment_reversed.json", &reversed)?;

    let exp = EchoExperiment::new(c.system.state()?, unreversed, reversed, c.echo.trace_time())?;
    let series = echo::echo_series(&exp, &c.times.values())?;
    dir.write_with("echo.csv", |w| io::write_echo_csv(w, &series))?;

    let t_r = c.echo.t_r.values();
    let sweep = echo::reacquisition_sweep(&exp, &t_r)?;
    let signal: Vec<f64> = sweep
        .iter()
        .map(|r| exp.normalized_signal(r.mu))
        .collect::<std::result::Result<_, _>>()?;
    dir.write_with("echo_sweep.csv", |w| {
        writeln!(w, "t_r,mu,deficit,normalized_signal,predicted_mu")?;
        for (r, s) in sweep.iter().zip(&signal) {
            writeln!(
                w,
                "{},{},{},{},{}",
                num(r.t_reversal),
                num(r.mu),
                num(r.deficit),
                num(*s),
                num(r.predicted_mu)
            )?;
        }
        w.flush()
    })?;

    let window = match c.echo.slope_window {
        Some(w) => w,
        None => signal_window(&t_r, &signal, c.echo.signal_range).ok_or_else(|| {
            Error::Input(format!(
                "fewer than two reversal times with normalized signal in {:?}; widen echo.t_r",
                c.echo.signal_range
            ))
        })?,
    };
    let stretched = loglog_slope(&t_r, &signal, window)?;
    let mu_inf = exp.mu_infinity();
    let excess: Vec<f64> = sweep.iter().map(|r| r.mu - mu_inf).collect();
    let raw = loglog_slope_raw(&t_r, &excess, window).ok();
    let points = t_r.iter().filter(|t| window.contains(**t)).count();
    dir.write_json(
        "slope.json",
        &SlopeReport {
            stretched,
            raw,
            mu_infinity: mu_inf,
            points,
        },
    )
}

#[derive(Serialize)]
struct RealizationLevel {
    realization: usize,
    rms: f64,
    /// `sqrt` of the infinite-time average of `|r|^2`.
    long_time_rms: f64,
}

#[derive(Serialize)]
struct SaturationReport {
    n_spins: usize,
    window: [f64; 2],
    samples: usize,
    /// `2^{-N/2}`.
    scale: f64,
    mean_rms: f64,
    realizations: Vec<RealizationLevel>,
}

fn saturation(c: &ExperimentConfig, dir: &mut RunDir) -> Result<()> {
    let spec = c.bath.ensemble(c.seed);
    let times = c.times.values();
    let levels = (0..spec.n_realizations)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(&spec, i)?;
            let series = decoherence_series(&env, &times)?;
            Ok(RealizationLevel {
                realization: i,
                rms: saturation_level(&series.moduli()),
                long_time_rms: long_time_avg_sq(&env).sqrt(),
            })
        })
        .collect::<std::result::Result<Vec<_>, Error>>()?;
    let mean_rms = levels.iter().map(|l| l.rms).sum::<f64>() / levels.len() as f64;
    dir.write_json(
        "saturation.json",
        &SaturationReport {
            n_spins: spec.n_spins,
            window: [c.times.start, c.times.stop],
            samples: times.len(),
            scale: 2f64.powf(-(spec.n_spins as f64) / 2.0),
            mean_rms,
            realizations: levels,
        },
    )
}
