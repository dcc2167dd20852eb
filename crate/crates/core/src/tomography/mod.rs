//! Maximum-likelihood reconstruction of two-qubit states and single-qubit
//! processes from coincidence counts.

mod likelihood;
pub mod montecarlo;
pub mod optimize;
pub mod process;
pub mod registry;
pub mod state;

use crate::counts::{CountRecord, Setting};
use crate::error::{Error, Result};
use crate::quantum::{BellKind, DensityMatrix, MetricReport, Pol};

pub use montecarlo::monte_carlo_errors;
pub use optimize::AscentSettings;
pub use process::{mle_process, process_fidelity, process_purity, ChiMatrix};
pub use registry::{process_reconstructors, state_reconstructors, Reconstructor, Registry};
pub use state::{linear_inversion_state, mle_state};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomographyKind {
    /// Two-photon state: 6 × 6 analyzer pairs.
    State2q,
    /// Single-photon process: 6 inputs × 6 analyzers.
    Process1q,
}

/// All 36 ordered label pairs, first index slowest. For processes the first
/// label is the prepared input and the second the analyzer.
pub fn tomography_settings(_kind: TomographyKind) -> Vec<(Setting, Setting)> {
    Pol::ALL
        .iter()
        .flat_map(|&a| Pol::ALL.iter().map(move |&b| (Setting::Label(a), Setting::Label(b))))
        .collect()
}

/// Removes estimated accidentals, clamping at zero.
pub fn subtract_accidentals(records: &[CountRecord]) -> Vec<CountRecord> {
    records
        .iter()
        .map(|r| CountRecord {
            coincidences: (r.coincidences - r.accidental_estimate).max(0.0),
            ..r.clone()
        })
        .collect()
}

/// How the per-setting count scale is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Summed counts over each complete orthogonal-outcome group.
    #[default]
    PerBasis,
    /// One global scale fitted alongside the state parameters.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyOptions {
    pub ascent: AscentSettings,
    pub normalization: Normalization,
    /// Enforce trace preservation during process fits instead of normalizing afterwards.
    pub trace_preserving: bool,
    pub subtract_accidentals: bool,
    /// Target for the state fidelity metric.
    pub reference: BellKind,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        TomographyOptions {
            ascent: AscentSettings::default(),
            normalization: Normalization::PerBasis,
            trace_preserving: true,
            subtract_accidentals: false,
            reference: BellKind::PhiPlus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    State(DensityMatrix),
    Process(ChiMatrix),
}

#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub estimate: Estimate,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub metrics: MetricReport,
    /// Normalized log-likelihood after each accepted optimizer step.
    pub likelihood_trace: Vec<f64>,
}

impl TomographyResult {
    pub fn state(&self) -> Option<&DensityMatrix> {
        match &self.estimate {
            Estimate::State(rho) => Some(rho),
            Estimate::Process(_) => None,
        }
    }

    pub fn process(&self) -> Option<&ChiMatrix> {
        match &self.estimate {
            Estimate::Process(chi) => Some(chi),
            Estimate::State(_) => None,
        }
    }
}

/// Groups records into complete orthogonal-outcome sets keyed by basis pair.
///
/// Returns, for each record, the index of its group; errors if any group is
/// missing one of its four outcomes.
pub(crate) fn basis_groups(records: &[CountRecord]) -> Result<Vec<usize>> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut groups = Vec::with_capacity(records.len());
    for r in records {
        let (a, b) = match (r.setting_a.label(), r.setting_b.label()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::MissingSetting(format!(
                    "tomography needs labeled settings, got ({}, {})",
                    r.setting_a, r.setting_b
                )))
            }
        };
        if !seen.insert((a, b)) {
            return Err(Error::InvalidParameter(format!("duplicate setting ({a}, {b})")));
        }
        let key = (a.basis(), b.basis());
        let idx = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
            keys.push(key);
            keys.len() - 1
        });
        groups.push(idx);
    }
    for r in records {
        let (a, b) = (r.setting_a.label().unwrap(), r.setting_b.label().unwrap());
        for (x, y) in [(a.orthogonal(), b), (a, b.orthogonal()), (a.orthogonal(), b.orthogonal())] {
            if !seen.contains(&(x, y)) {
                return Err(Error::MissingSetting(format!("({x}, {y})")));
            }
        }
    }
    Ok(groups)
}
