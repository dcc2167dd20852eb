#![allow(dead_code)]

use polconv::conversion::SourceModel;
use polconv::counts::{expected_counts, CountRecord, DetectionModel, Setting};
use polconv::linalg::{trace_product, CMatrix};
use polconv::quantum::{projector, DensityMatrix, Pol};
use polconv::tomography::{tomography_settings, ChiMatrix, TomographyKind};

/// Noise-free state-tomography counts with `pairs` detected pairs per basis.
pub fn noiseless_state_counts(rho: &DensityMatrix, pairs: f64) -> Vec<CountRecord> {
    let source = SourceModel::werner(1.0, pairs);
    expected_counts(
        rho,
        &tomography_settings(TomographyKind::State2q),
        &source,
        &DetectionModel::default(),
        1.0,
    )
}

/// Noise-free process-tomography counts for an arbitrary χ.
pub fn noiseless_process_counts(chi: &ChiMatrix, photons: f64) -> Vec<CountRecord> {
    let mut out = Vec::new();
    for &input in &Pol::ALL {
        let rho_out: CMatrix = chi.apply(&projector(input));
        for &analyzer in &Pol::ALL {
            let n = photons * trace_product(&projector(analyzer), &rho_out).re.max(0.0);
            out.push(CountRecord::new(Setting::Label(input), Setting::Label(analyzer), 1.0, n));
        }
    }
    out
}
