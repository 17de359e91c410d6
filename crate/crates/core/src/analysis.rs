//! Decay-law fits on sampled series.
//!
//! All fits are ordinary least squares in the log domain:
//! `ln y = ln A - (t/T)^2` for the Gaussian model and `ln y = ln A - t/T` for
//! the exponential one. Windows are always explicit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    Gaussian,
    Exponential,
}

/// Closed time interval `[lo, hi]`, serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && hi > lo {
            Ok(Self { lo, hi })
        } else {
            Err(Error::Input(format!(
                "window [{lo}, {hi}] must satisfy lo < hi"
            )))
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

impl From<[f64; 2]> for Window {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Window> for [f64; 2] {
    fn from(w: Window) -> Self {
        [w.lo, w.hi]
    }
}

/// Result of [`fit_decay`].
///
/// `timescale` is `+inf` when the data do not decay across the window
/// (serialized as `null` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub timescale: f64,
    pub amplitude: f64,
    /// RMS residual of the log-domain fit.
    pub residual_rms: f64,
    pub window: Window,
}

impl DecayFit {
    pub fn rate(&self) -> f64 {
        1.0 / self.timescale
    }

    pub fn predict(&self, t: f64) -> f64 {
        let x = t / self.timescale;
        match self.model {
            DecayModel::Gaussian => self.amplitude * (-x * x).exp(),
            DecayModel::Exponential => self.amplitude * (-x).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// OLS standard error of the slope.
    pub stderr: f64,
    pub window: Window,
}

struct Line {
    slope: f64,
    intercept: f64,
    stderr: f64,
    rss: f64,
    x_span: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Result<Line> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (sxx, sxy) = x.iter().zip(y).fold((0.0, 0.0), |(sxx, sxy), (&xi, &yi)| {
        let dx = xi - mx;
        (sxx + dx * dx, sxy + dx * (yi - my))
    });
    if !(sxx > 0.0) {
        return Err(Error::Input(
            "regressor has zero spread over the window".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        })
        .sum();
    let stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    Ok(Line {
        slope,
        intercept,
        stderr,
        rss,
        x_span: hi - lo,
    })
}

fn windowed<'a>(
    times: &'a [f64],
    values: &'a [f64],
    window: Window,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    if times.len() != values.len() {
        return Err(Error::Input(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    Window::new(window.lo, window.hi)?;
    let pts = times
        .iter()
        .copied()
        .zip(values.iter().copied())
        .filter(move |(t, _)| window.contains(*t));
    Ok(pts)
}

/// Least-squares fit of `model` to the samples with `t` inside `window`.
pub fn fit_decay(
    times: &[f64],
    values: &[f64],
    model: DecayModel,
    window: Window,
) -> Result<DecayFit> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (t, v) in windowed(times, values, window)? {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "log-domain fit needs positive samples, got {v} at t = {t}"
            )));
        }
        x.push(match model {
            DecayModel::Gaussian => t * t,
            DecayModel::Exponential => t,
        });
        y.push(v.ln());
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::Input(format!(
            "{} points in window, need at least {MIN_FIT_POINTS}",
            x.len()
        )));
    }
    let line = ols(&x, &y)?;
    let rate = -line.slope;
    // Less than 1e-12 of log decay across the window counts as no decay.
    let timescale = if rate * line.x_span <= 1e-12 {
        f64::INFINITY
    } else {
        match model {
            DecayModel::Gaussian => 1.0 / rate.sqrt(),
            DecayModel::Exponential => 1.0 / rate,
        }
    };
    Ok(DecayFit {
        model,
        timescale,
        amplitude: line.intercept.exp(),
        residual_rms: (line.rss / x.len() as f64).sqrt(),
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayClass {
    Gaussian,
    Exponential,
    Ambiguous,
}

/// Thresholds below which the two residuals count as tied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub relative_tie: f64,
    pub absolute_tie: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            relative_tie: 0.05,
            absolute_tie: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: DecayClass,
    pub gaussian: DecayFit,
    pub exponential: DecayFit,
}

impl Classification {
    /// Fit of the winning model, `None` when ambiguous.
    pub fn best(&self) -> Option<&DecayFit> {
        match self.class {
            DecayClass::Gaussian => Some(&self.gaussian),
            DecayClass::Exponential => Some(&self.exponential),
            DecayClass::Ambiguous => None,
        }
    }
}

/// Fits both models and picks the one with the smaller log-domain residual.
///
/// Near `t = 0` any smooth even decay looks like `1 - c t^2`, so a window that
/// covers less than about one e-folding usually comes back
/// [`DecayClass::Ambiguous`].
pub fn classify_decay(
    times: &[f64],
    values: &[f64],
    window: Window,
    opts: ClassifyOptions,
) -> Result<Classification> {
    let gaussian = fit_decay(times, values, DecayModel::Gaussian, window)?;
    let exponential = fit_decay(times, values, DecayModel::Exponential, window)?;
    let (rg, re) = (gaussian.residual_rms, exponential.residual_rms);
    let tie = (opts.relative_tie * rg.max(re)).max(opts.absolute_tie);
    let class = if (rg - re).abs() <= tie {
        DecayClass::Ambiguous
    } else if rg < re {
        DecayClass::Gaussian
    } else {
        DecayClass::Exponential
    };
    Ok(Classification {
        class,
        gaussian,
        exponential,
    })
}

fn stretched_fit(times: &[f64], signal: &[f64], window: Window) -> Result<SlopeFit> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (t, s) in windowed(times, signal, window)? {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("log-log fit needs t > 0, got {t}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "signal must lie strictly inside (0, 1), got {s} at t = {t}"
            )));
        }
        x.push(t.ln());
        y.push((-s.ln()).ln());
    }
    if x.len() < 2 {
        return Err(Error::Input(format!(
            "{} points in window, need at least 2",
            x.len()
        )));
    }
    let line = ols(&x, &y)?;
    Ok(SlopeFit {
        slope: line.slope,
        intercept: line.intercept,
        stderr: line.stderr,
        window,
    })
}

/// Stretched-exponent slope: OLS of `ln(-ln s)` on `ln t`, where
/// `s = (mu - mu_inf) / (1 - mu_inf)` is the normalized echo signal.
///
/// Returns `p` exactly for `s = exp(-(t/T)^p)`, so a Gaussian echo deficit
/// has slope 2.
pub fn loglog_slope(
    t_reversal: &[f64],
    normalized_signal: &[f64],
    window: Window,
) -> Result<SlopeFit> {
    stretched_fit(t_reversal, normalized_signal, window)
}

/// Same regression on the unnormalized excess `mu - mu_inf`. The missing
/// normalization bends the line, so the slope drifts away from the decay
/// exponent; kept for comparison with plots of the raw excess.
pub fn loglog_slope_raw(t_reversal: &[f64], excess: &[f64], window: Window) -> Result<SlopeFit> {
    stretched_fit(t_reversal, excess, window)
}

/// RMS of `|r|` over the supplied samples, meant for a window past the
/// initial decay. Returns NaN for an empty slice.
pub fn saturation_level(moduli: &[f64]) -> f64 {
    (moduli.iter().map(|m| m * m).sum::<f64>() / moduli.len() as f64).sqrt()
}

/// From the first grid time to the last time before the samples first drop
/// below `threshold`. `None` if fewer than two points qualify.
pub fn window_until_below(times: &[f64], values: &[f64], threshold: f64) -> Option<Window> {
    let end = values
        .iter()
        .position(|&v| v < threshold)
        .unwrap_or(values.len().min(times.len()));
    if end < 2 {
        return None;
    }
    Window::new(times[0], times[end - 1]).ok()
}

/// Default decay window: from the start of the grid to the onset of
/// saturation, taken as the first time `|r| < 3 * plateau`.
pub fn default_decay_window(times: &[f64], moduli: &[f64], plateau: f64) -> Option<Window> {
    window_until_below(times, moduli, 3.0 * plateau)
}

/// Pointwise ratio on a shared grid; points with a zero or non-finite
/// denominator are masked.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl RatioSeries {
    /// Unmasked `(times, values)`, ready for [`fit_decay`].
    pub fn valid_points(&self) -> (Vec<f64>, Vec<f64>) {
        self.times
            .iter()
            .zip(&self.values)
            .filter_map(|(&t, v)| v.map(|v| (t, v)))
            .unzip()
    }

    pub fn masked_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

pub fn series_ratio(times: &[f64], numer: &[f64], denom: &[f64]) -> Result<RatioSeries> {
    if numer.len() != times.len() || denom.len() != times.len() {
        return Err(Error::Input("ratio series must share one grid".into()));
    }
    let values = numer
        .iter()
        .zip(denom)
        .map(|(&n, &d)| (d != 0.0 && d.is_finite()).then(|| n / d))
        .collect();
    Ok(RatioSeries {
        times: times.to_vec(),
        values,
    })
}
