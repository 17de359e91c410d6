//! Experiment configuration: one JSON document per run.
//!
//! ```json
//! {
//!   "experiment": "decoherence",
//!   "seed": 7,
//!   "bath": {"n_spins": 8, "couplings": {"kind": "uniform", "lo": 0.5, "hi": 1.5}},
//!   "times": {"start": 0.0, "stop": 2.0, "points": 201}
//! }
//! ```
//!
//! Every other section has defaults. Individual fields can be overridden with
//! dot paths (`bath.n_spins=24`) before the document is deserialized.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spinbath_core::analysis::Window;
use spinbath_core::{Binning, CouplingDistribution, EnsembleSpec, SystemState};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Decoherence,
    Spectrum,
    Ensemble,
    Echo,
    Saturation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Decoherence => "decoherence",
            Self::Spectrum => "spectrum",
            Self::Ensemble => "ensemble",
            Self::Echo => "echo",
            Self::Saturation => "saturation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub bath: BathConfig,
    pub times: Grid,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub decoherence: DecoherenceConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub echo: EchoConfig,
    /// Run directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Sampled bath. `realizations` only matters for `ensemble` and `saturation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub n_spins: usize,
    pub couplings: CouplingDistribution,
    #[serde(default = "half")]
    pub p_up: f64,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

impl BathConfig {
    pub fn ensemble(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            dist: self.couplings,
            n_spins: self.n_spins,
            n_realizations: self.realizations,
            seed,
            p_up: self.p_up,
        }
    }
}

/// `points` evenly spaced samples from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }

    fn check(&self, field: &str, nonnegative: bool, report: &mut Vec<Violation>) {
        if self.points < 2 {
            report.push(Violation::new(
                format!("{field}.points"),
                format!("grid needs at least 2 points, got {}", self.points),
            ));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            report.push(Violation::new(field, "start and stop must be finite"));
        } else if self.stop <= self.start {
            report.push(Violation::new(
                field,
                format!("stop {} must exceed start {}", self.stop, self.start),
            ));
        }
        if nonnegative && self.start < 0.0 {
            report.push(Violation::new(
                format!("{field}.start"),
                format!("must be >= 0, got {}", self.start),
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `|a|^2`.
    #[serde(default = "half")]
    pub p0: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            p0: 0.5,
            phase: 0.0,
        }
    }
}

impl SystemConfig {
    pub fn state(&self) -> spinbath_core::Result<SystemState> {
        SystemState::from_population(self.p0, self.phase)
    }
}

/// Decay fit window. Without an explicit `window` the fit runs from the first
/// grid time until the fitted quantity drops below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            window: None,
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceConfig {
    /// Times at which the per-spin partial products are exported.
    #[serde(default = "default_walk_times")]
    pub walk_times: Vec<f64>,
}

impl Default for DecoherenceConfig {
    fn default() -> Self {
        Self {
            walk_times: default_walk_times(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BinningConfig {
    #[default]
    FreedmanDiaconis,
    Count(usize),
    Width(f64),
}

impl From<BinningConfig> for Binning {
    fn from(b: BinningConfig) -> Self {
        match b {
            BinningConfig::FreedmanDiaconis => Binning::FreedmanDiaconis,
            BinningConfig::Count(n) => Binning::Count(n),
            BinningConfig::Width(w) => Binning::Width(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "yes")]
    pub merge: bool,
    #[serde(default)]
    pub binning: BinningConfig,
    /// Largest bath whose full list of walk energies is written out.
    #[serde(default = "default_export_max")]
    pub export_max_spins: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            merge: true,
            binning: BinningConfig::default(),
            export_max_spins: default_export_max(),
        }
    }
}

/// Bath whose Hamiltonian is reversed at `t_R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReversedBath {
    #[serde(default)]
    pub n_spins: usize,
    #[serde(default = "default_reversed_couplings")]
    pub couplings: CouplingDistribution,
    #[serde(default = "half")]
    pub p_up: f64,
}

impl Default for ReversedBath {
    fn default() -> Self {
        Self {
            n_spins: 0,
            couplings: default_reversed_couplings(),
            p_up: 0.5,
        }
    }
}

/// Partial echo. The unreversed bath is `bath`; the echo is read out at
/// `2 t_R` for every `t_R` on the grid. The slope fit uses `slope_window`
/// when given, otherwise the reversal times whose normalized signal lies in
/// `signal_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoConfig {
    #[serde(default)]
    pub reversed: ReversedBath,
    #[serde(default = "default_t_r")]
    pub t_r: Grid,
    /// Reversal time of the exported `mu(t)` trace; defaults to the middle of
    /// the `t_r` grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_t_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_window: Option<Window>,
    #[serde(default = "default_signal_range")]
    pub signal_range: [f64; 2],
}

impl Default for EchoConfig {
    fn default() -> Self {
        Self {
            reversed: ReversedBath::default(),
            t_r: default_t_r(),
            trace_t_r: None,
            slope_window: None,
            signal_range: default_signal_range(),
        }
    }
}

impl EchoConfig {
    pub fn reversed_spec(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            dist: self.reversed.couplings,
            n_spins: self.reversed.n_spins,
            n_realizations: 1,
            seed: seed.wrapping_add(1),
            p_up: self.reversed.p_up,
        }
    }

    pub fn trace_time(&self) -> f64 {
        self.trace_t_r
            .unwrap_or(0.5 * (self.t_r.start + self.t_r.stop))
    }
}

fn half() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_cap() -> usize {
    spinbath_core::DEFAULT_ENUMERATION_CAP
}

fn default_threshold() -> f64 {
    0.05
}

fn default_export_max() -> usize {
    16
}

fn default_walk_times() -> Vec<f64> {
    (0..7).map(|i| 0.25 * i as f64).collect()
}

fn default_reversed_couplings() -> CouplingDistribution {
    CouplingDistribution::Uniform { lo: 0.5, hi: 1.5 }
}

fn default_t_r() -> Grid {
    Grid {
        start: 0.0,
        stop: 0.5,
        points: 51,
    }
}

fn default_signal_range() -> [f64; 2] {
    [0.05, 0.95]
}

/// Largest enumeration cap accepted; walk patterns are 64-bit masks.
pub const MAX_ENUMERATION_CAP: usize = 40;

/// One violated constraint, addressed by its dot path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

fn check_bath(
    field: &str,
    n_spins: usize,
    dist: &CouplingDistribution,
    p_up: f64,
    allow_empty: bool,
    report: &mut Vec<Violation>,
) {
    if n_spins == 0 && !allow_empty {
        report.push(Violation::new(
            format!("{field}.n_spins"),
            "need at least one spin",
        ));
    }
    if let Err(e) = dist.validate() {
        report.push(Violation::new(format!("{field}.couplings"), e.to_string()));
    }
    if !(0.0..=1.0).contains(&p_up) {
        report.push(Violation::new(
            format!("{field}.p_up"),
            format!("must lie in [0, 1], got {p_up}"),
        ));
    }
}

/// Every violated constraint; empty for a runnable config.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    let mut report = Vec::new();
    let kind = config.experiment;
    let bath = &config.bath;
    check_bath(
        "bath",
        bath.n_spins,
        &bath.couplings,
        bath.p_up,
        false,
        &mut report,
    );
    if bath.realizations == 0 {
        report.push(Violation::new(
            "bath.realizations",
            "need at least one realization",
        ));
    }
    if bath.enumeration_cap > MAX_ENUMERATION_CAP {
        report.push(Violation::new(
            "bath.enumeration_cap",
            format!(
                "at most {MAX_ENUMERATION_CAP}, got {}",
                bath.enumeration_cap
            ),
        ));
    }
    if kind == ExperimentKind::Spectrum && bath.n_spins > bath.enumeration_cap {
        report.push(Violation::new(
            "bath.n_spins",
            format!(
                "{} spins exceed enumeration_cap {}; raise the cap to enumerate 2^N walks",
                bath.n_spins, bath.enumeration_cap
            ),
        ));
    }
    config
        .times
        .check("times", kind == ExperimentKind::Echo, &mut report);

    if !(0.0..=1.0).contains(&config.system.p0) {
        report.push(Violation::new(
            "system.p0",
            format!("must lie in [0, 1], got {}", config.system.p0),
        ));
    }
    if !config.system.phase.is_finite() {
        report.push(Violation::new("system.phase", "must be finite"));
    }

    if let Some(w) = config.fit.window {
        if Window::new(w.lo, w.hi).is_err() {
            report.push(Violation::new(
                "fit.window",
                format!("need lo < hi, got [{}, {}]", w.lo, w.hi),
            ));
        }
    }
    if !(config.fit.threshold > 0.0 && config.fit.threshold < 1.0) {
        report.push(Violation::new(
            "fit.threshold",
            format!("must lie in (0, 1), got {}", config.fit.threshold),
        ));
    }

    if kind == ExperimentKind::Decoherence {
        for (i, t) in config.decoherence.walk_times.iter().enumerate() {
            if !t.is_finite() {
                report.push(Violation::new(
                    format!("decoherence.walk_times.{i}"),
                    "must be finite",
                ));
            }
        }
    }

    if kind == ExperimentKind::Spectrum {
        match config.spectrum.binning {
            BinningConfig::Count(0) => report.push(Violation::new(
                "spectrum.binning.count",
                "need at least one bin",
            )),
            BinningConfig::Width(w) if !(w > 0.0 && w.is_finite()) => report.push(Violation::new(
                "spectrum.binning.width",
                format!("must be positive, got {w}"),
            )),
            _ => {}
        }
    }

    if kind == ExperimentKind::Echo {
        let echo = &config.echo;
        let rev = &echo.reversed;
        check_bath(
            "echo.reversed",
            rev.n_spins,
            &rev.couplings,
            rev.p_up,
            true,
            &mut report,
        );
        echo.t_r.check("echo.t_r", true, &mut report);
        if let Some(t) = echo.trace_t_r {
            if !(t.is_finite() && t >= 0.0) {
                report.push(Violation::new(
                    "echo.trace_t_r",
                    format!("must be >= 0, got {t}"),
                ));
            }
        }
        if let Some(w) = echo.slope_window {
            if Window::new(w.lo, w.hi).is_err() {
                report.push(Violation::new(
                    "echo.slope_window",
                    format!("need lo < hi, got [{}, {}]", w.lo, w.hi),
                ));
            }
        }
        let [lo, hi] = echo.signal_range;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            report.push(Violation::new(
                "echo.signal_range",
                format!("need 0 < lo < hi < 1, got [{lo}, {hi}]"),
            ));
        }
        if config.system.p0 == 0.0 || config.system.p0 == 1.0 {
            report.push(Violation::new(
                "system.p0",
                "pointer states show no echo; use 0 < p0 < 1",
            ));
        }
    }
    report
}

/// Sets the value at a dot path, creating objects along the way. Numeric
/// segments index into arrays. The value is parsed as JSON and falls back to
/// a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!(
            "override `{assignment}` is not of the form path=value"
        ))
    })?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!(
            "override `{assignment}` has an empty path segment"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for segment in path.split('.') {
        node = match node {
            Value::Array(items) => {
                let i: usize = segment.parse().map_err(|_| {
                    CliError::Config(format!(
                        "override `{path}`: `{segment}` does not index an array"
                    ))
                })?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| {
                    CliError::Config(format!(
                        "override `{path}`: index {i} out of range for length {len}"
                    ))
                })?
            }
            other => {
                if !other.is_object() {
                    *other = Value::Object(Default::default());
                }
                other
                    .as_object_mut()
                    .expect("just made an object")
                    .entry(segment)
                    .or_insert(Value::Null)
            }
        };
    }
    *node = value;
    Ok(())
}

/// Parses a config document and applies the overrides in order.
pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let syntax = |e: serde_json::Error| CliError::Config(format!("config: {e}"));
    if overrides.is_empty() {
        // Direct parse keeps line and column in diagnostics.
        return serde_json::from_str(text).map_err(syntax);
    }
    let mut doc: Value = serde_json::from_str(text).map_err(syntax)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    serde_json::from_value(doc)
        .map_err(|e| CliError::Config(format!("config after overrides: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "decoherence",
        "bath": {"n_spins": 8, "couplings": {"kind": "uniform", "lo": 0.5, "hi": 1.5}},
        "times": {"start": 0.0, "stop": 2.0, "points": 11}
    }"#;

    #[test]
    fn minimal_config_is_valid() {
        let c = parse(MINIMAL, &[]).unwrap();
        assert!(validate(&c).is_empty());
        assert_eq!(c.bath.p_up, 0.5);
        assert_eq!(c.spectrum.export_max_spins, 16);
        assert_eq!(c.times.values().len(), 11);
        assert_eq!(*c.times.values().last().unwrap(), 2.0);
    }

    #[test]
    fn overrides_follow_dot_paths() {
        let c = parse(
            MINIMAL,
            &[
                "bath.couplings={\"kind\":\"lorentzian\",\"center\":0,\"gamma\":0.1}".into(),
                "bath.n_spins=3".into(),
                "experiment=spectrum".into(),
                "spectrum.binning={\"count\":7}".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.experiment, ExperimentKind::Spectrum);
        assert_eq!(c.bath.n_spins, 3);
        assert_eq!(c.spectrum.binning, BinningConfig::Count(7));
        assert!(matches!(
            c.bath.couplings,
            CouplingDistribution::Lorentzian { .. }
        ));

        let mut v = serde_json::json!({"a": [1, 2]});
        apply_override(&mut v, "a.1=5").unwrap();
        assert_eq!(v["a"][1], 5);
        assert!(apply_override(&mut v, "a.9=5").is_err());
        assert!(apply_override(&mut v, "a..b=5").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn every_violation_is_listed() {
        let c = parse(
            MINIMAL,
            &[
                "times.points=1".into(),
                "bath.couplings={\"kind\":\"lorentzian\",\"center\":0,\"gamma\":-1}".into(),
                "bath.p_up=2".into(),
                "fit.threshold=0".into(),
            ],
        )
        .unwrap();
        let fields: Vec<_> = validate(&c).into_iter().map(|v| v.field).collect();
        for f in [
            "times.points",
            "bath.couplings",
            "bath.p_up",
            "fit.threshold",
        ] {
            assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse(
            "{\n  \"experiment\": \"decoherence\",\n  \"bogus\": 1\n}",
            &[],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
    }
}
