//! File formats.
//!
//! An environment serializes as a JSON array with one object per spin:
//!
//! ```json
//! [{"g": 0.7, "p_up": 0.5, "phase_alpha": 0.0, "phase_beta": 0.0}]
//! ```
//!
//! `p_up = |alpha|^2`; the loader rebuilds `alpha = sqrt(p_up) e^{i phase_alpha}`
//! and `beta = sqrt(1 - p_up) e^{i phase_beta}`. Phases default to zero.
//!
//! CSV exports carry a one-line header and one row per sample. Floats are
//! written in Rust's shortest round-trip form.

use std::io::{self, Write};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::echo::EchoSeries;
use crate::model::{BathSpin, DecoherenceSeries, Environment};
use crate::spectrum::{EnergySpectrum, LdosHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinRecord {
    pub g: f64,
    pub p_up: f64,
    #[serde(default)]
    pub phase_alpha: f64,
    #[serde(default)]
    pub phase_beta: f64,
}

impl From<&BathSpin> for SpinRecord {
    fn from(s: &BathSpin) -> Self {
        Self {
            g: s.g(),
            p_up: s.p_up(),
            phase_alpha: s.alpha().arg(),
            phase_beta: s.beta().arg(),
        }
    }
}

impl TryFrom<SpinRecord> for BathSpin {
    type Error = crate::Error;

    fn try_from(r: SpinRecord) -> crate::Result<Self> {
        BathSpin::from_populations(r.g, r.p_up, r.phase_alpha, r.phase_beta)
    }
}

impl Serialize for Environment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.spins().iter().map(SpinRecord::from))
    }
}

impl<'de> Deserialize<'de> for Environment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let records = Vec::<SpinRecord>::deserialize(deserializer)?;
        records
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                BathSpin::try_from(r).map_err(|e| D::Error::custom(format!("spin {k}: {e}")))
            })
            .collect()
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_spectrum_csv<W: Write>(mut w: W, spec: &EnergySpectrum) -> io::Result<()> {
    writeln!(w, "energy,weight")?;
    for (e, p) in spec.points() {
        writeln!(w, "{},{}", num(e), num(p))?;
    }
    w.flush()
}

pub fn write_ldos_csv<W: Write>(mut w: W, hist: &LdosHistogram) -> io::Result<()> {
    writeln!(w, "bin_center,density")?;
    for (c, d) in hist.centers().zip(&hist.density) {
        writeln!(w, "{},{}", num(c), num(*d))?;
    }
    w.flush()
}

pub fn write_echo_csv<W: Write>(mut w: W, series: &EchoSeries) -> io::Result<()> {
    writeln!(w, "t,mu,mu_gaussian_prediction")?;
    for ((t, mu), g) in series
        .times
        .iter()
        .zip(&series.mu)
        .zip(&series.mu_gaussian_prediction)
    {
        writeln!(w, "{},{},{}", num(*t), num(*mu), num(*g))?;
    }
    w.flush()
}

/// `t,re,im,abs` rows of a decoherence series.
pub fn write_decoherence_csv<W: Write>(mut w: W, series: &DecoherenceSeries) -> io::Result<()> {
    writeln!(w, "t,re,im,abs")?;
    for (t, z) in series.times.iter().zip(&series.values) {
        writeln!(
            w,
            "{},{},{},{}",
            num(*t),
            num(z.re),
            num(z.im),
            num(z.norm())
        )?;
    }
    w.flush()
}
