//! TOML experiment files.
//!
//! A file names one or more runs, each a complete [`ExperimentConfig`], plus
//! optional analysis and spectrum settings. Unknown keys are rejected.
//!
//! Units: noise strengths are `rms2` (mean-square value of the detuning in
//! units of the Rabi frequency, or of the fractional amplitude error); times
//! and block lengths are counted in primitive π/2-pulse durations or gates as
//! the key name says; angular frequencies are in radians per π/2-time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::ExperimentConfig;
use crate::error::{Error, Result};
use crate::filterfn::Overlap;
use crate::noise::Channel;
use crate::pulses::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, rename = "run")]
    pub runs: Vec<RunEntry>,
    #[serde(default)]
    pub analysis: Option<AnalysisSpec>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub label: String,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Realization orderings averaged into the ensemble trajectory.
    #[serde(default = "default_reorderings")]
    pub reorderings: usize,
    #[serde(default)]
    pub permutation_seed: u64,
    /// Fit the mixed-noise variance model to every run.
    #[serde(default)]
    pub fit_components: bool,
    /// Largest lag for the error autocorrelation, in gates; 0 disables it.
    #[serde(default)]
    pub autocorrelation_max_lag: usize,
}

fn default_reorderings() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub families: Vec<Family>,
    pub channel: Channel,
    /// Clifford label whose schedule is analyzed.
    pub clifford: u8,
    /// Band edges as multiples of `2π/T`, with `T` the gate duration.
    pub band_lo_rel: f64,
    pub band_hi_rel: f64,
    pub points: usize,
    /// Low-frequency cutoff of the `1/ω` input, as a multiple of `2π/T`.
    pub cutoff_rel: f64,
    #[serde(default)]
    pub overlap: Overlap,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut labels = std::collections::HashSet::new();
        for run in &self.runs {
            if !labels.insert(run.label.as_str()) {
                return Err(Error::Config(format!("duplicate run label {:?}", run.label)));
            }
            run.experiment.validate().map_err(|e| Error::Config(format!("run {:?}: {e}", run.label)))?;
        }
        if let Some(a) = &self.analysis {
            if a.reorderings == 0 {
                return Err(Error::Config("analysis.reorderings must be at least 1".into()));
            }
        }
        if let Some(s) = &self.spectrum {
            if !(s.band_lo_rel > 0.0 && s.band_hi_rel > s.band_lo_rel && s.points >= 2 && s.cutoff_rel >= 0.0) {
                return Err(Error::Config("spectrum band, points or cutoff out of range".into()));
            }
            crate::rotations::CliffordIndex::new(s.clifford).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn run(&self, label: &str) -> Option<&ExperimentConfig> {
        self.runs.iter().find(|r| r.label == label).map(|r| &r.experiment)
    }
}
