//! TOML experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chsh::ChshSettings;
use crate::conversion::{ConversionParams, SourceKind, SourceModel};
use crate::counts::DetectionModel;
use crate::efficiency::{BudgetInputs, EfficiencyParams};
use crate::error::{Error, Result};
use crate::quantum::BellKind;
use crate::tomography::{AscentSettings, Normalization, TomographyOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Weight of `|φ+⟩` in the Werner mixture.
    pub werner_p: f64,
    pub pair_rate_cps: f64,
}

impl SourceConfig {
    pub fn model(&self) -> SourceModel {
        SourceModel { kind: SourceKind::Werner { p: self.werner_p }, pair_rate: self.pair_rate_cps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub channel: ConversionParams,
    /// Detected rate for an input the channel passes completely.
    pub photon_rate_cps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionStages {
    pub input: DetectionModel,
    pub output: DetectionModel,
}

/// Acquisition time per setting for each measurement, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub input_state_s: f64,
    pub output_state_s: f64,
    pub process_s: f64,
    pub chsh_s: f64,
    /// Use expected counts instead of Poisson draws.
    #[serde(default)]
    pub noiseless: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default = "default_reconstructor")]
    pub state_reconstructor: String,
    #[serde(default = "default_reconstructor")]
    pub process_reconstructor: String,
    #[serde(default)]
    pub normalization: NormalizationName,
    #[serde(default)]
    pub subtract_accidentals: bool,
    #[serde(default = "default_reference")]
    pub reference: String,
    #[serde(default)]
    pub mc_samples: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_reconstructor() -> String {
    "mle".into()
}

fn default_reference() -> String {
    "phi+".into()
}

fn default_max_iterations() -> usize {
    AscentSettings::default().max_iterations
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationName {
    #[default]
    PerBasis,
    Fitted,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig {
            state_reconstructor: default_reconstructor(),
            process_reconstructor: default_reconstructor(),
            normalization: NormalizationName::PerBasis,
            subtract_accidentals: false,
            reference: default_reference(),
            mc_samples: 0,
            max_iterations: default_max_iterations(),
        }
    }
}

impl TomographyConfig {
    pub fn options(&self) -> Result<TomographyOptions> {
        let reference: BellKind = self.reference.parse()?;
        Ok(TomographyOptions {
            ascent: AscentSettings { max_iterations: self.max_iterations, ..Default::default() },
            normalization: match self.normalization {
                NormalizationName::PerBasis => Normalization::PerBasis,
                NormalizationName::Fitted => Normalization::Fitted,
            },
            trace_preserving: true,
            subtract_accidentals: self.subtract_accidentals,
            reference,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyConfig {
    pub crystal: EfficiencyParams,
    pub budget: BudgetInputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub source: SourceConfig,
    /// Channel applied to the second photon of each pair.
    pub conversion: ConversionParams,
    /// Channel probed by single-photon process tomography.
    pub process: ProcessConfig,
    pub detection: DetectionStages,
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub chsh: ChshSettings,
    #[serde(default)]
    pub tomography: TomographyConfig,
    pub efficiency: EfficiencyConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.source.model().validate().map_err(wrap)?;
        self.conversion.validate().map_err(wrap)?;
        self.process.channel.validate().map_err(wrap)?;
        if !(self.process.photon_rate_cps >= 0.0) {
            return Err(Error::Config("process.photon_rate_cps must be non-negative".into()));
        }
        self.detection.input.validate().map_err(wrap)?;
        self.detection.output.validate().map_err(wrap)?;
        let a = &self.acquisition;
        for (name, v) in [
            ("input_state_s", a.input_state_s),
            ("output_state_s", a.output_state_s),
            ("process_s", a.process_s),
            ("chsh_s", a.chsh_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("acquisition.{name} must be positive, got {v}")));
            }
        }
        self.chsh.validate().map_err(wrap)?;
        self.tomography.options().map_err(wrap)?;
        let names = crate::tomography::state_reconstructors().names();
        if !names.contains(&self.tomography.state_reconstructor.as_str()) {
            return Err(Error::Config(format!(
                "unknown state reconstructor {:?}, expected one of {names:?}",
                self.tomography.state_reconstructor
            )));
        }
        let names = crate::tomography::process_reconstructors().names();
        if !names.contains(&self.tomography.process_reconstructor.as_str()) {
            return Err(Error::Config(format!(
                "unknown process reconstructor {:?}, expected one of {names:?}",
                self.tomography.process_reconstructor
            )));
        }
        self.efficiency.crystal.validate().map_err(wrap)?;
        crate::efficiency::efficiency_budget(&self.efficiency.crystal, &self.efficiency.budget)
            .map_err(wrap)?;
        Ok(())
    }
}
