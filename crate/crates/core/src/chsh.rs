//! Polarization correlations and the CHSH parameter, from states or counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{CountRecord, Setting};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix};
use crate::quantum::{DensityMatrix, Pauli, Pol};
use crate::tomography::montecarlo::resample;

/// Analyzer angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSettings {
    #[serde(rename = "alpha_deg")]
    pub alpha: f64,
    #[serde(rename = "alpha_prime_deg")]
    pub alpha_prime: f64,
    #[serde(rename = "beta_deg")]
    pub beta: f64,
    #[serde(rename = "beta_prime_deg")]
    pub beta_prime: f64,
}

impl Default for ChshSettings {
    /// Maximal-violation angles for `|φ+⟩`.
    fn default() -> Self {
        ChshSettings { alpha: 0.0, alpha_prime: 45.0, beta: 22.5, beta_prime: 67.5 }
    }
}

impl ChshSettings {
    pub fn validate(&self) -> Result<()> {
        for a in [self.alpha, self.alpha_prime, self.beta, self.beta_prime] {
            if !(0.0..180.0).contains(&a) {
                return Err(Error::InvalidParameter(format!("analyzer angle {a} outside [0, 180)")));
            }
        }
        Ok(())
    }

    /// The four (a, b) pairs in the order E(α,β), E(α,β′), E(α′,β), E(α′,β′).
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.alpha, self.beta),
            (self.alpha, self.beta_prime),
            (self.alpha_prime, self.beta),
            (self.alpha_prime, self.beta_prime),
        ]
    }

    /// The 16 analyzer combinations: each pair with all orthogonal variants.
    pub fn measurement_settings(&self) -> Vec<(Setting, Setting)> {
        self.pairs()
            .iter()
            .flat_map(|&(a, b)| {
                let (ao, bo) = (orthogonal_angle(a), orthogonal_angle(b));
                [(a, b), (a, bo), (ao, b), (ao, bo)]
                    .map(|(x, y)| (Setting::Angle(x), Setting::Angle(y)))
            })
            .collect()
    }
}

pub fn orthogonal_angle(a: f64) -> f64 {
    (a + 90.0).rem_euclid(180.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    pub correlations: [f64; 4],
    pub correlation_sigmas: [f64; 4],
    pub s_value: f64,
    pub s_sigma: f64,
}

/// `A(θ) = cos 2θ σ_Z + sin 2θ σ_X`.
pub fn analyzer_observable(angle_deg: f64) -> CMatrix {
    let t = 2.0 * angle_deg.to_radians();
    Pauli::z().scale(t.cos()) + Pauli::x().scale(t.sin())
}

pub fn correlation_from_state(rho: &DensityMatrix, a: f64, b: f64) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let obs = kron(&analyzer_observable(a), &analyzer_observable(b));
    Ok(rho.expectation(&obs).clamp(-1.0, 1.0))
}

/// Correlation and first-order Poisson error from counts at
/// (a, b), (a, b⊥), (a⊥, b), (a⊥, b⊥).
pub fn correlation_from_counts(n_ab: f64, n_ab_perp: f64, n_aperp_b: f64, n_aperp_bperp: f64) -> Result<(f64, f64)> {
    let same = n_ab + n_aperp_bperp;
    let diff = n_ab_perp + n_aperp_b;
    let total = same + diff;
    if !(total > 0.0) {
        return Err(Error::AllZeroCounts);
    }
    let e = (same - diff) / total;
    // ∂E/∂same = 2 diff / N², ∂E/∂diff = −2 same / N², Var(n) = n.
    let sigma = (4.0 * same * diff / total.powi(3)).sqrt();
    Ok((e, sigma))
}

fn setting_angle(s: &Setting) -> Option<f64> {
    match s {
        Setting::Angle(a) => Some(a.rem_euclid(180.0)),
        Setting::Label(Pol::H) => Some(0.0),
        Setting::Label(Pol::V) => Some(90.0),
        Setting::Label(Pol::D) => Some(45.0),
        Setting::Label(Pol::A) => Some(135.0),
        Setting::Label(_) => None,
    }
}

fn same_angle(x: f64, y: f64) -> bool {
    let d = (x - y).rem_euclid(180.0);
    d < 1e-9 || 180.0 - d < 1e-9
}

fn find_counts(records: &[CountRecord], a: f64, b: f64) -> Result<f64> {
    records
        .iter()
        .find(|r| match (setting_angle(&r.setting_a), setting_angle(&r.setting_b)) {
            (Some(x), Some(y)) => same_angle(x, a) && same_angle(y, b),
            _ => false,
        })
        .map(|r| r.coincidences)
        .ok_or_else(|| Error::MissingSetting(format!("({a}°, {b}°)")))
}

pub enum ChshInput<'a> {
    State(&'a DensityMatrix),
    Counts(&'a [CountRecord]),
}

/// `S = E(α,β) − E(α,β′) + E(α′,β) + E(α′,β′)` with delta-method error.
pub fn chsh_s(settings: &ChshSettings, input: ChshInput<'_>) -> Result<ChshResult> {
    settings.validate()?;
    let mut correlations = [0.0; 4];
    let mut sigmas = [0.0; 4];
    for (i, &(a, b)) in settings.pairs().iter().enumerate() {
        let (e, s) = match &input {
            ChshInput::State(rho) => (correlation_from_state(rho, a, b)?, 0.0),
            ChshInput::Counts(records) => {
                let (ao, bo) = (orthogonal_angle(a), orthogonal_angle(b));
                correlation_from_counts(
                    find_counts(records, a, b)?,
                    find_counts(records, a, bo)?,
                    find_counts(records, ao, b)?,
                    find_counts(records, ao, bo)?,
                )?
            }
        };
        correlations[i] = e;
        sigmas[i] = s;
    }
    let s_value = correlations[0] - correlations[1] + correlations[2] + correlations[3];
    let s_sigma = sigmas.iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(ChshResult { correlations, correlation_sigmas: sigmas, s_value, s_sigma })
}

/// Spread of S under Poisson resampling of the counts.
pub fn chsh_monte_carlo_sigma(
    settings: &ChshSettings,
    records: &[CountRecord],
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .filter_map(|s| chsh_s(settings, ChshInput::Counts(&resample(records, seed, s))).ok())
        .map(|r| r.s_value)
        .collect();
    if values.len() < 2 {
        return Err(Error::MonteCarlo { failed: n_samples - values.len(), total: n_samples });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}
