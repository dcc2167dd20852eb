//! Two-qubit state reconstruction: linear inversion and maximum likelihood.

use nalgebra::{DMatrix, DVector};

use super::likelihood::{gram, lower_factor, lower_from_params, params_from_lower, params_gradient, PoissonModel};
use super::optimize::maximize;
use super::{basis_groups, subtract_accidentals, Estimate, Normalization, TomographyOptions, TomographyResult};
use crate::counts::CountRecord;
use crate::error::{Error, Result};
use crate::linalg::{c, kron, trace, trace_product, CMatrix};
use crate::quantum::{bell_state, DensityMatrix, MetricReport, Pauli};

const DIM: usize = 4;

fn pauli_pair_basis() -> Vec<CMatrix> {
    let paulis = Pauli::basis();
    let mut out = Vec::with_capacity(16);
    for a in &paulis {
        for b in &paulis {
            out.push(kron(a, b).unscale(2.0));
        }
    }
    out
}

fn check_counts(records: &[CountRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::MissingSetting("no records".into()));
    }
    if let Some(r) = records.iter().find(|r| !(r.coincidences >= 0.0) || !(r.duration > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "invalid record ({}, {}): {} counts over {} s",
            r.setting_a, r.setting_b, r.coincidences, r.duration
        )));
    }
    let total: f64 = records.iter().map(|r| r.coincidences).sum();
    if total <= 0.0 {
        return Err(Error::AllZeroCounts);
    }
    Ok(total)
}

/// Least-squares inversion of normalized frequencies onto the Pauli-pair basis.
///
/// The result is Hermitian with unit trace but may have negative eigenvalues.
pub fn linear_inversion_state(records: &[CountRecord]) -> Result<CMatrix> {
    check_counts(records)?;
    let groups = basis_groups(records)?;
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let mut rate_sum = vec![0.0; n_groups];
    for (r, &g) in records.iter().zip(&groups) {
        rate_sum[g] += r.coincidences / r.duration;
    }
    let basis = pauli_pair_basis();
    let rows: Vec<(usize, f64)> = records
        .iter()
        .zip(&groups)
        .enumerate()
        .filter(|(_, (_, &g))| rate_sum[g] > 0.0)
        .map(|(i, (r, &g))| (i, r.coincidences / r.duration / rate_sum[g]))
        .collect();
    let design = DMatrix::<f64>::from_fn(rows.len(), basis.len(), |i, k| {
        trace_product(&records[rows[i].0].joint_projector(), &basis[k]).re
    });
    let freqs = DVector::<f64>::from_iterator(rows.len(), rows.iter().map(|(_, f)| *f));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rank < basis.len() {
        return Err(Error::RankDeficient { rank, expected: basis.len() });
    }
    let coeffs = svd.solve(&freqs, 1e-12 * smax).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rho = CMatrix::zeros(DIM, DIM);
    for (k, b) in basis.iter().enumerate() {
        rho += b.scale(coeffs[k]);
    }
    let tr = trace(&rho).re;
    Ok(crate::linalg::hermitian_part(&rho).unscale(tr))
}

struct StateFit {
    model: PoissonModel,
    fitted_gain: bool,
}

impl StateFit {
    fn build(records: &[CountRecord], normalization: Normalization) -> Result<Self> {
        let total = check_counts(records)?;
        let groups = basis_groups(records)?;
        let n_groups = groups.iter().max().map_or(0, |g| g + 1);
        let scales = match normalization {
            Normalization::PerBasis => {
                let mut counts = vec![0.0; n_groups];
                let mut time = vec![0.0; n_groups];
                let mut size = vec![0.0; n_groups];
                for (r, &g) in records.iter().zip(&groups) {
                    counts[g] += r.coincidences;
                    time[g] += r.duration;
                    size[g] += 1.0;
                }
                records
                    .iter()
                    .zip(&groups)
                    .map(|(r, &g)| counts[g] * size[g] / time[g] * r.duration)
                    .collect()
            }
            Normalization::Fitted => {
                let time: f64 = records.iter().map(|r| r.duration).sum();
                let rate = total * 4.0 / time;
                records.iter().map(|r| rate * r.duration).collect()
            }
        };
        Ok(StateFit {
            model: PoissonModel {
                ops: records.iter().map(CountRecord::joint_projector).collect(),
                counts: records.iter().map(|r| r.coincidences).collect(),
                scales,
                weight: total,
            },
            fitted_gain: normalization == Normalization::Fitted,
        })
    }

    fn gain(&self, params: &[f64]) -> f64 {
        if self.fitted_gain {
            params[16].exp()
        } else {
            1.0
        }
    }

    fn state_of(params: &[f64]) -> (CMatrix, CMatrix, f64) {
        let t = lower_from_params(&params[..16], DIM);
        let g = gram(&t);
        let norm = trace(&g).re;
        (t, g.unscale(norm), norm)
    }

    fn objective(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (t, rho, norm) = Self::state_of(params);
        let (value, grad, d_gain) = self.model.value_and_gradient(&rho, self.gain(params));
        let g_rho = trace_product(&grad, &rho).re;
        let mut shifted = grad;
        for i in 0..DIM {
            shifted[(i, i)] -= c(g_rho, 0.0);
        }
        let h = (shifted * t.adjoint()).unscale(norm);
        let mut out = params_gradient(&h, DIM);
        if self.fitted_gain {
            out.push(d_gain);
        }
        (value, out)
    }
}

fn starting_point(records: &[CountRecord]) -> CMatrix {
    let mixed = CMatrix::identity(DIM, DIM).unscale(DIM as f64);
    let guess = linear_inversion_state(records)
        .ok()
        .and_then(|m| DensityMatrix::project(&m).ok())
        .map(|rho| rho.into_matrix().scale(0.98) + mixed.scale(0.02))
        .unwrap_or_else(|| mixed.clone());
    lower_factor(&guess).unwrap_or_else(|| lower_factor(&mixed).expect("identity is positive definite"))
}

/// Maximum-likelihood two-qubit state with `ρ = T†T / Tr(T†T)`.
pub fn mle_state(records: &[CountRecord], options: &TomographyOptions) -> Result<TomographyResult> {
    let records = if options.subtract_accidentals {
        subtract_accidentals(records)
    } else {
        records.to_vec()
    };
    let fit = StateFit::build(&records, options.normalization)?;
    let mut x0 = params_from_lower(&starting_point(&records));
    if fit.fitted_gain {
        x0.push(0.0);
    }
    let outcome = maximize(|p| fit.objective(p), &x0, &options.ascent);
    assert!(
        outcome.history.windows(2).all(|w| w[1] >= w[0]),
        "log-likelihood decreased during ascent"
    );
    if !outcome.converged {
        return Err(Error::NonConvergence {
            iterations: outcome.iterations,
            last_increment: outcome.last_increment,
        });
    }
    let (_, rho, _) = StateFit::state_of(&outcome.x);
    let rho = DensityMatrix::from_psd(&rho)?;
    let metrics = MetricReport::for_state(&rho, &bell_state(options.reference))?;
    Ok(TomographyResult {
        log_likelihood: outcome.value * fit.model.weight,
        iterations: outcome.iterations,
        converged: outcome.converged,
        metrics,
        likelihood_trace: outcome.history,
        estimate: Estimate::State(rho),
    })
}

/// Log-likelihood of `rho` under the per-basis normalization, for comparisons.
pub fn state_log_likelihood(records: &[CountRecord], rho: &DensityMatrix) -> Result<f64> {
    let fit = StateFit::build(records, Normalization::PerBasis)?;
    Ok(fit.model.value(rho.matrix(), 1.0) * fit.model.weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{expected_counts, DetectionModel};
    use crate::conversion::SourceModel;
    use crate::quantum::{fidelity, trace_distance, BellKind};
    use crate::tomography::{tomography_settings, TomographyKind};

    fn noiseless(rho: &DensityMatrix, rate: f64) -> Vec<CountRecord> {
        expected_counts(
            rho,
            &tomography_settings(TomographyKind::State2q),
            &SourceModel::werner(1.0, rate),
            &DetectionModel::default(),
            1.0,
        )
    }

    #[test]
    fn linear_inversion_exact_on_bell_state() {
        let phi = bell_state(BellKind::PhiPlus).density();
        let est = linear_inversion_state(&noiseless(&phi, 1000.0)).unwrap();
        assert!(crate::linalg::max_abs_diff(&est, phi.matrix()) < 1e-10);
        let mixed = DensityMatrix::maximally_mixed(4);
        let est = linear_inversion_state(&noiseless(&mixed, 1000.0)).unwrap();
        assert!(crate::linalg::max_abs_diff(&est, mixed.matrix()) < 1e-10);
    }

    #[test]
    fn mle_on_noiseless_bell_state() {
        let phi = bell_state(BellKind::PhiPlus);
        let res = mle_state(&noiseless(&phi.density(), 1500.0), &TomographyOptions::default()).unwrap();
        assert!(res.converged);
        let f = fidelity(res.state().unwrap(), &phi).unwrap();
        assert!(f > 1.0 - 1e-6, "fidelity {f}");
    }

    #[test]
    fn mle_with_fitted_scale_matches() {
        let rho = DensityMatrix::werner(0.8).unwrap();
        let data = noiseless(&rho, 2000.0);
        let opts = TomographyOptions { normalization: Normalization::Fitted, ..Default::default() };
        let res = mle_state(&data, &opts).unwrap();
        assert!(trace_distance(res.state().unwrap().matrix(), rho.matrix()) < 1e-6);
    }

    #[test]
    fn all_zero_counts_rejected() {
        let mut data = noiseless(&DensityMatrix::maximally_mixed(4), 10.0);
        for r in &mut data {
            r.coincidences = 0.0;
        }
        assert!(matches!(mle_state(&data, &TomographyOptions::default()), Err(Error::AllZeroCounts)));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let data = noiseless(&DensityMatrix::werner(0.9).unwrap(), 1000.0);
        let mut opts = TomographyOptions::default();
        opts.ascent.max_iterations = 1;
        assert!(matches!(mle_state(&data, &opts), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn incomplete_data_rejected() {
        let data = noiseless(&DensityMatrix::maximally_mixed(4), 10.0);
        assert!(linear_inversion_state(&data[..35]).is_err());
        assert!(mle_state(&data[..35], &TomographyOptions::default()).is_err());
    }
}
