//! Poisson-resampling error bars for any reconstructor.

use rayon::prelude::*;

use super::registry::Reconstructor;
use crate::counts::{sample_poisson, substream, CountRecord};
use crate::error::{Error, Result};
use crate::quantum::{Measured, MetricReport};

/// Largest tolerated fraction of failed resamples.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary {
    pub report: MetricReport,
    pub samples: usize,
    pub failures: usize,
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Resamples every coincidence count as Poisson around its observed value.
pub fn resample(records: &[CountRecord], seed: u64, sample: u64) -> Vec<CountRecord> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut rng = substream(seed, i as u64, sample);
            CountRecord { coincidences: sample_poisson(&mut rng, r.coincidences), ..r.clone() }
        })
        .collect()
}

/// Standard errors of the reconstructor's metrics; values come from `central`.
pub fn monte_carlo_errors(
    records: &[CountRecord],
    reconstructor: &dyn Reconstructor,
    central: &MetricReport,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {n_samples}")));
    }
    let outcomes: Vec<Option<MetricReport>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| reconstructor.reconstruct(&resample(records, seed, s)).ok().map(|r| r.metrics))
        .collect();
    let ok: Vec<MetricReport> = outcomes.iter().flatten().copied().collect();
    let failures = n_samples - ok.len();
    if failures as f64 > MAX_FAILURE_FRACTION * n_samples as f64 || ok.len() < 2 {
        return Err(Error::MonteCarlo { failed: failures, total: n_samples });
    }
    let fidelity: Vec<f64> = ok.iter().map(|m| m.fidelity.value).collect();
    let purity: Vec<f64> = ok.iter().map(|m| m.purity.value).collect();
    let tangle = match central.tangle {
        Some(t) => {
            let values: Vec<f64> = ok.iter().filter_map(|m| m.tangle.map(|t| t.value)).collect();
            Some(Measured { value: t.value, std_error: sample_std(&values) })
        }
        None => None,
    };
    Ok(MonteCarloSummary {
        report: MetricReport {
            fidelity: Measured { value: central.fidelity.value, std_error: sample_std(&fidelity) },
            purity: Measured { value: central.purity.value, std_error: sample_std(&purity) },
            tangle,
        },
        samples: n_samples,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::TomographyResult;

    struct Failing;

    impl Reconstructor for Failing {
        fn name(&self) -> &'static str {
            "failing"
        }
        fn reconstruct(&self, _: &[CountRecord]) -> Result<TomographyResult> {
            Err(Error::AllZeroCounts)
        }
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(sample_std(&[2.0, 2.0, 2.0]), 0.0);
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        let r = monte_carlo_errors(&[], &Failing, &MetricReport::default(), 1, 0);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn failures_are_counted() {
        let recs = vec![CountRecord::new(crate::quantum::Pol::H, crate::quantum::Pol::H, 1.0, 5.0)];
        let r = monte_carlo_errors(&recs, &Failing, &MetricReport::default(), 10, 0);
        assert!(matches!(r, Err(Error::MonteCarlo { failed: 10, total: 10 })));
    }

    #[test]
    fn resampling_is_deterministic() {
        let recs = vec![CountRecord::new(crate::quantum::Pol::H, crate::quantum::Pol::V, 1.0, 500.0); 3];
        assert_eq!(resample(&recs, 7, 2), resample(&recs, 7, 2));
        assert_ne!(resample(&recs, 7, 2), resample(&recs, 7, 3));
    }
}
