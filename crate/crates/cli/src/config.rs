//! Run configuration: a TOML document with the top-level keys `opo1`,
//! `opo2`, `chain`, `fs`, `duration`, `mode`, `repetitions`, `seed` and
//! `output_dir`, plus optional `[analysis]`, `[spectra]`, `[sweep]` and
//! `[optimize]` tables.

use std::path::{Path, PathBuf};

use eprsim::analysis::{DbAveraging, WelchConfig};
use eprsim::detection::DetectionChain;
use eprsim::modeopt::{FamilyKind, ModeFamily, MIN_BUDGET};
use eprsim::spectra::{Branch, NYQUIST_DEVIATION_LIMIT};
use eprsim::{epr_spectra, opo_spectrum, EprSpectra, OpoParams, TemporalMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub opo1: OpoParams,
    pub opo2: OpoParams,
    #[serde(default)]
    pub chain: DetectionChain,
    /// Synthesis sample rate, Hz. The chain samples down to `chain.adc_rate`.
    pub fs: f64,
    /// Length of one repetition, s.
    pub duration: f64,
    pub mode: TemporalMode,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub spectra: SpectraConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub optimize: OptimizeConfig,
}

fn default_repetitions() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub averaging: DbAveraging,
    pub welch: WelchConfig,
    /// Rows in `trace.csv`.
    pub trace_rows: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            averaging: DbAveraging::Decibel,
            welch: WelchConfig::default(),
            trace_rows: 50,
        }
    }
}

/// Grids of the analytic `spectra` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points_per_decade: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub f_points_per_decade: usize,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            t_min: 0.01e-6,
            t_max: 10e-6,
            t_points_per_decade: 50,
            f_min: 1e3,
            f_max: 100e6,
            f_points_per_decade: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Mode duration T, s.
    T,
    /// Pump parameter of both OPOs.
    PumpParam,
    /// Efficiency of both OPOs.
    Efficiency,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::T => "t_s",
            SweepVariable::PumpParam => "pump_param",
            SweepVariable::Efficiency => "efficiency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Log spacing (T sweeps) or linear spacing.
    pub log: bool,
    /// Monte Carlo spot checks at the two grid endpoints.
    pub monte_carlo: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::T,
            min: 0.05e-6,
            max: 1e-6,
            points: 50,
            log: true,
            monte_carlo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub family: FamilyKind,
    pub budget: usize,
    /// Per-parameter search bounds; family defaults when absent.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::Square,
            budget: 200,
            bounds: None,
        }
    }
}

impl OptimizeConfig {
    pub fn family(&self) -> Result<ModeFamily> {
        match &self.bounds {
            None => Ok(ModeFamily::with_default_bounds(self.family)),
            Some(b) => {
                ModeFamily::new(self.family, b.clone()).map_err(|e| CliError::config("optimize.bounds", e.to_string()))
            }
        }
    }
}

/// The subset of a configuration that determines results: everything but
/// `output_dir`.
#[derive(Serialize)]
struct Canonical<'a> {
    opo1: &'a OpoParams,
    opo2: &'a OpoParams,
    chain: &'a DetectionChain,
    fs: f64,
    duration: f64,
    mode: &'a TemporalMode,
    repetitions: usize,
    seed: u64,
    analysis: &'a AnalysisConfig,
    spectra: &'a SpectraConfig,
    sweep: &'a SweepConfig,
    optimize: &'a OptimizeConfig,
}

/// Where a validation error points: dotted field path plus the source line
/// when the key appears literally.
fn locate(source: Option<&str>, field: &str) -> Option<usize> {
    let src = source?;
    let (table, key) = match field.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", field),
    };
    let mut current = String::new();
    let mut table_line = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table {
                table_line = Some(i + 1);
            }
            continue;
        }
        let k = line.split('=').next().unwrap_or("").trim();
        if line.contains('=') && k == key && current == table {
            return Some(i + 1);
        }
    }
    table_line
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
            field: None,
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate_with_source(Some(text))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, source: Option<&str>) -> Result<()> {
        let fail = |field: &str, message: String| CliError::Config {
            field: Some(field.to_string()),
            line: locate(source, field),
            message,
        };
        let core = |prefix: &str, e: eprsim::Error| {
            let field = match &e {
                eprsim::Error::InvalidParameter { name, .. } => format!("{prefix}.{name}"),
                eprsim::Error::AboveThreshold(_) => format!("{prefix}.pump_param"),
                _ => prefix.to_string(),
            };
            fail(&field, e.to_string())
        };
        self.opo1.validate().map_err(|e| core("opo1", e))?;
        self.opo2.validate().map_err(|e| core("opo2", e))?;
        self.spectra_checked()
            .map_err(|e| fail("opo2.squeeze_phase", e.to_string()))?;
        for (name, v) in [("fs", self.fs), ("duration", self.duration)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(fail(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.repetitions < 1 {
            return Err(fail("repetitions", "must be >= 1".into()));
        }
        for d in self.chain.validate(self.fs).map_err(|e| core("chain", e))? {
            log::warn!("chain: {d}");
        }
        self.mode.validate().map_err(|e| core("mode", e))?;
        if self.mode.duration() > self.duration {
            return Err(fail(
                "mode.duration",
                format!(
                    "mode ({} s) longer than a repetition ({} s)",
                    self.mode.duration(),
                    self.duration
                ),
            ));
        }
        let out_samples = (self.duration * self.chain.adc_rate).round() as usize;
        let window = self.mode.duration() * self.chain.adc_rate;
        if (window - window.round()).abs() > 1e-6 * window {
            log::warn!(
                "mode duration spans {window:.3} ADC samples; extraction uses {}",
                window.round()
            );
        }
        if (self.mode.duration() * self.chain.adc_rate).round() < 1.0 {
            return Err(fail("mode.duration", "shorter than one ADC sample".into()));
        }
        // Every input beam must be representable at the synthesis rate.
        for (field, opo) in [("opo1", &self.opo1), ("opo2", &self.opo2)] {
            for branch in [Branch::Squeezed, Branch::Antisqueezed] {
                let psd = opo_spectrum(opo, branch).map_err(|e| core(field, e))?;
                let dev = psd.nyquist_deviation(self.fs);
                if dev > NYQUIST_DEVIATION_LIMIT {
                    return Err(fail(
                        "fs",
                        format!(
                            "{field} spectrum deviates from vacuum by {dev:.4} at fs/2 (limit {NYQUIST_DEVIATION_LIMIT}); raise fs"
                        ),
                    ));
                }
            }
        }
        self.analysis.welch.validate().map_err(|e| core("analysis.welch", e))?;
        if self.analysis.welch.segment_len > out_samples {
            return Err(fail(
                "analysis.welch.segment_len",
                format!("exceeds the {out_samples} samples of one repetition"),
            ));
        }
        let sp = &self.spectra;
        if !(sp.t_min > 0.0 && sp.t_max > sp.t_min && sp.f_min > 0.0 && sp.f_max > sp.f_min) {
            return Err(fail("spectra", "grids need 0 < min < max".into()));
        }
        if sp.t_points_per_decade < 50 || sp.f_points_per_decade < 1 {
            return Err(fail(
                "spectra.t_points_per_decade",
                "need at least 50 points per decade".into(),
            ));
        }
        if self.optimize.budget < MIN_BUDGET {
            return Err(fail("optimize.budget", format!("must be >= {MIN_BUDGET}")));
        }
        self.optimize.family().map_err(|e| match e {
            CliError::Config { message, .. } => fail("optimize.bounds", message),
            other => other,
        })?;
        Ok(())
    }

    fn spectra_checked(&self) -> eprsim::Result<EprSpectra> {
        epr_spectra(&self.opo1, &self.opo2)
    }

    /// Analytic EPR spectra of the configured OPO pair.
    pub fn epr_spectra(&self) -> Result<EprSpectra> {
        self.spectra_checked().map_err(CliError::stage("spectra"))
    }

    /// Stable hash of everything that affects results.
    pub fn fingerprint(&self) -> String {
        let canonical = Canonical {
            opo1: &self.opo1,
            opo2: &self.opo2,
            chain: &self.chain,
            fs: self.fs,
            duration: self.duration,
            mode: &self.mode,
            repetitions: self.repetitions,
            seed: self.seed,
            analysis: &self.analysis,
            spectra: &self.spectra,
            sweep: &self.sweep,
            optimize: &self.optimize,
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
fs = 200e6
duration = 2e-3
seed = 7

[opo1]
pump_param = 0.3
hwhm = 7e6
efficiency = 0.9
squeeze_phase = "P"

[opo2]
pump_param = 0.25
hwhm = 7e6
efficiency = 0.9
squeeze_phase = "X"

[mode]
kind = "square"
duration = 0.2e-6
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.repetitions, 10);
        assert_eq!(c.chain, DetectionChain::default());
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.fingerprint().len(), 16);
    }

    #[test]
    fn round_trip_keeps_fingerprint() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        let again = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.fingerprint(), again.fingerprint());
        let mut moved = c.clone();
        moved.output_dir = PathBuf::from("elsewhere");
        assert_eq!(c.fingerprint(), moved.fingerprint());
        moved.seed += 1;
        assert_ne!(c.fingerprint(), moved.fingerprint());
    }

    #[test]
    fn field_errors_carry_line_numbers() {
        let bad = MINIMAL.replace("pump_param = 0.25", "pump_param = 1.5");
        match RunConfig::from_toml(&bad).unwrap_err() {
            CliError::Config { field, line, .. } => {
                assert_eq!(field.as_deref(), Some("opo2.pump_param"));
                assert_eq!(line, Some(bad.lines().position(|l| l.contains("1.5")).unwrap() + 1));
            }
            e => panic!("{e}"),
        }
        let typo = MINIMAL.replace("seed = 7", "sede = 7");
        match RunConfig::from_toml(&typo).unwrap_err() {
            CliError::Config { line, message, .. } => {
                assert_eq!(line, Some(4), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn low_rate_is_rejected() {
        let bad = MINIMAL.replace("fs = 200e6", "fs = 50e6");
        let e = RunConfig::from_toml(&bad).unwrap_err();
        assert!(
            matches!(&e, CliError::Config { field: Some(f), .. } if f == "fs"),
            "{e}"
        );
    }

    #[test]
    fn same_quadrature_is_ambiguous() {
        let bad = MINIMAL.replace("squeeze_phase = \"X\"", "squeeze_phase = \"P\"");
        assert!(RunConfig::from_toml(&bad).is_err());
    }
}
