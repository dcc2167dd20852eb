//! Single-qubit process tomography in the Pauli (I, X, Y, Z) basis.

use super::likelihood::{gram, lower_factor, lower_from_params, params_gradient, PoissonModel};
use super::optimize::{maximize, numerical_gradient, AscentOutcome};
use super::{subtract_accidentals, Estimate, TomographyOptions, TomographyResult};
use crate::counts::CountRecord;
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eigenvalues, is_hermitian, trace, trace_product, CMatrix};
use crate::quantum::{Measured, MetricReport, Pauli};

const HERMITIAN_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = -1e-10;

/// Process matrix `χ` with `E(ρ) = Σ χ_mn σ_m ρ σ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix(CMatrix);

impl ChiMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(Error::DimensionMismatch { expected: 4, got: m.nrows() });
        }
        if !is_hermitian(&m, HERMITIAN_TOL) {
            return Err(Error::InvalidState("process matrix is not Hermitian".into()));
        }
        let tr = trace(&m).re;
        if !(tr > 0.0 && tr <= 1.0 + 1e-10) {
            return Err(Error::InvalidState(format!("process matrix trace {tr} outside (0, 1]")));
        }
        if hermitian_eigenvalues(&m)[0] < EIGEN_TOL {
            return Err(Error::InvalidState("process matrix is not positive".into()));
        }
        Ok(ChiMatrix(m))
    }

    /// Process of a single-qubit unitary.
    pub fn from_unitary(u: &CMatrix) -> Self {
        let coeffs: Vec<_> = Pauli::basis().iter().map(|s| trace_product(s, u) / 2.0).collect();
        ChiMatrix(CMatrix::from_fn(4, 4, |m, n| coeffs[m] * coeffs[n].conj()))
    }

    pub fn identity_process() -> Self {
        Self::from_unitary(&linalg::identity(2))
    }

    /// Fully depolarizing channel.
    pub fn depolarizing() -> Self {
        ChiMatrix(linalg::identity(4).unscale(4.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        apply_chi(&self.0, rho)
    }

    /// Largest deviation of `Σ χ_mn σ_n σ_m` from the identity.
    pub fn trace_preservation_error(&self) -> f64 {
        linalg::max_abs_diff(&completeness(&self.0), &linalg::identity(2))
    }
}

fn apply_chi(chi: &CMatrix, rho: &CMatrix) -> CMatrix {
    let paulis = Pauli::basis();
    let mut out = CMatrix::zeros(2, 2);
    for (m, sm) in paulis.iter().enumerate() {
        let left = sm * rho;
        for (n, sn) in paulis.iter().enumerate() {
            if chi[(m, n)] != linalg::ZERO {
                out += (&left * sn) * chi[(m, n)];
            }
        }
    }
    out
}

/// `Σ χ_mn σ_n σ_m`, equal to the identity for trace-preserving maps.
fn completeness(chi: &CMatrix) -> CMatrix {
    let paulis = Pauli::basis();
    let mut s = CMatrix::zeros(2, 2);
    for m in 0..4 {
        for n in 0..4 {
            s += (&paulis[n] * &paulis[m]) * chi[(m, n)];
        }
    }
    linalg::hermitian_part(&s)
}

/// Rescales a CP map to be trace preserving: `E'(ρ) = E(S^{-1/2} ρ S^{-1/2})`.
fn make_trace_preserving(chi: &CMatrix) -> Option<CMatrix> {
    let s = completeness(chi);
    if hermitian_eigenvalues(&s)[0] <= 1e-300 {
        return None;
    }
    let inv_root = linalg::hermitian_map(&s, |v| 1.0 / v.sqrt());
    let paulis = Pauli::basis();
    let a = CMatrix::from_fn(4, 4, |k, m| trace_product(&paulis[k], &(&paulis[m] * &inv_root)) / 2.0);
    Some(linalg::hermitian_part(&(&a * chi * a.adjoint())))
}

/// `Tr(χ χ_ideal)`; for a rank-one ideal this is the process fidelity.
pub fn process_fidelity(chi: &ChiMatrix, ideal: &ChiMatrix) -> f64 {
    trace_product(chi.matrix(), ideal.matrix()).re.clamp(0.0, 1.0)
}

pub fn process_purity(chi: &ChiMatrix) -> f64 {
    linalg::frobenius_sq(chi.matrix()).clamp(0.0, 1.0)
}

/// Hermitian `Q` with `Tr[P E(ρ)] = Tr(χ Q)`.
fn response_operator(input: &CMatrix, analyzer: &CMatrix) -> CMatrix {
    let paulis = Pauli::basis();
    CMatrix::from_fn(4, 4, |b, a| trace(&(&paulis[b] * analyzer * &paulis[a] * input)))
}

struct ProcessFit {
    model: PoissonModel,
    trace_preserving: bool,
}

impl ProcessFit {
    fn build(records: &[CountRecord], trace_preserving: bool) -> Result<Self> {
        if records.iter().any(|r| !(r.coincidences >= 0.0) || !(r.duration > 0.0)) {
            return Err(Error::InvalidParameter("negative counts or non-positive duration".into()));
        }
        let total: f64 = records.iter().map(|r| r.coincidences).sum();
        if total <= 0.0 {
            return Err(Error::AllZeroCounts);
        }
        // Per (input, analyzer basis) pair of orthogonal outcomes.
        let mut keys: Vec<(crate::quantum::Pol, usize)> = Vec::new();
        let mut group_of = Vec::with_capacity(records.len());
        for r in records {
            let (input, analyzer) = match (r.setting_a.label(), r.setting_b.label()) {
                (Some(i), Some(a)) => (i, a),
                _ => return Err(Error::MissingSetting("process data needs labeled settings".into())),
            };
            let key = (input, analyzer.basis());
            let g = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                keys.push(key);
                keys.len() - 1
            });
            group_of.push(g);
        }
        basis_groups_single(records)?;
        let scales: Vec<f64> = if trace_preserving {
            let mut counts = vec![0.0; keys.len()];
            let mut time = vec![0.0; keys.len()];
            let mut size = vec![0.0; keys.len()];
            for (r, &g) in records.iter().zip(&group_of) {
                counts[g] += r.coincidences;
                time[g] += r.duration;
                size[g] += 1.0;
            }
            records
                .iter()
                .zip(&group_of)
                .map(|(r, &g)| counts[g] * size[g] / time[g] * r.duration)
                .collect()
        } else {
            let time: f64 = records.iter().map(|r| r.duration).sum();
            let rate = total * 2.0 / time;
            records.iter().map(|r| rate * r.duration).collect()
        };
        let ops = records
            .iter()
            .map(|r| response_operator(&r.setting_a.projector(), &r.setting_b.projector()))
            .collect();
        Ok(ProcessFit {
            model: PoissonModel { ops, counts: records.iter().map(|r| r.coincidences).collect(), scales, weight: total },
            trace_preserving,
        })
    }

    fn chi_of(&self, params: &[f64]) -> Option<CMatrix> {
        let chi = gram(&lower_from_params(params, 4));
        if self.trace_preserving {
            make_trace_preserving(&chi)
        } else {
            Some(chi)
        }
    }

    fn value(&self, params: &[f64]) -> f64 {
        match self.chi_of(params) {
            Some(chi) => self.model.value(&chi, 1.0),
            None => f64::NEG_INFINITY,
        }
    }

    fn objective(&self, params: &[f64]) -> (f64, Vec<f64>) {
        if self.trace_preserving {
            let value = self.value(params);
            let mut f = |p: &[f64]| self.value(p);
            (value, numerical_gradient(&mut f, params, 1e-5))
        } else {
            let t = lower_from_params(params, 4);
            let (value, grad, _) = self.model.value_and_gradient(&gram(&t), 1.0);
            (value, params_gradient(&(grad * t.adjoint()), 4))
        }
    }
}

/// Every (input, analyzer) pair must come with the orthogonal analyzer.
fn basis_groups_single(records: &[CountRecord]) -> Result<()> {
    let pairs: std::collections::BTreeSet<_> = records
        .iter()
        .filter_map(|r| Some((r.setting_a.label()?, r.setting_b.label()?)))
        .collect();
    if pairs.len() != records.len() {
        return Err(Error::InvalidParameter("duplicate process settings".into()));
    }
    for &(input, analyzer) in &pairs {
        if !pairs.contains(&(input, analyzer.orthogonal())) {
            return Err(Error::MissingSetting(format!("({input}, {})", analyzer.orthogonal())));
        }
    }
    let inputs: std::collections::BTreeSet<_> = pairs.iter().map(|p| p.0).collect();
    let bases: std::collections::BTreeSet<_> = inputs
        .iter()
        .map(|p| p.basis())
        .collect();
    if bases.len() < 3 || inputs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "input states {:?} are not informationally complete",
            inputs
        )));
    }
    Ok(())
}

fn ascend(fit: &ProcessFit, x0: &[f64], options: &TomographyOptions) -> Result<AscentOutcome> {
    let outcome = maximize(|p| fit.objective(p), x0, &options.ascent);
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
    Ok(outcome)
}

/// Maximum-likelihood process matrix over completely positive maps.
pub fn mle_process(records: &[CountRecord], options: &TomographyOptions) -> Result<TomographyResult> {
    let records = if options.subtract_accidentals {
        subtract_accidentals(records)
    } else {
        records.to_vec()
    };
    // The unconstrained CP fit is well conditioned; its normalized optimum
    // seeds the trace-preserving refinement.
    let free = ProcessFit::build(&records, false)?;
    let start = lower_factor(&linalg::identity(4).unscale(2.0)).expect("positive definite");
    let x0 = super::likelihood::params_from_lower(&start);
    let mut outcome = ascend(&free, &x0, options)?;
    let mut iterations = outcome.iterations;
    let mut weight = free.model.weight;
    if options.trace_preserving {
        let fit = ProcessFit::build(&records, true)?;
        outcome = ascend(&fit, &outcome.x, options)?;
        iterations += outcome.iterations;
        weight = fit.model.weight;
    }
    let raw = gram(&lower_from_params(&outcome.x, 4));
    let chi = make_trace_preserving(&raw)
        .ok_or_else(|| Error::InvalidState("fitted process annihilates some input".into()))?;
    let chi = ChiMatrix::new(chi)?;
    let ideal = ChiMatrix::identity_process();
    let metrics = MetricReport {
        fidelity: Measured::exact(process_fidelity(&chi, &ideal)),
        purity: Measured::exact(process_purity(&chi)),
        tangle: None,
    };
    Ok(TomographyResult {
        log_likelihood: outcome.value * weight,
        iterations,
        converged: outcome.converged,
        metrics,
        likelihood_trace: outcome.history,
        estimate: Estimate::Process(chi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::counts::{simulate_process_counts, Sampling};
    use crate::conversion::ConversionParams;
    use crate::linalg::max_abs_diff;
    use crate::quantum::{projector, Pol};

    #[test]
    fn identity_and_pauli_processes() {
        let id = ChiMatrix::identity_process();
        assert!((id.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((process_fidelity(&id, &id) - 1.0).abs() < 1e-15);
        assert!((process_purity(&id) - 1.0).abs() < 1e-15);
        let z = ChiMatrix::from_unitary(&Pauli::z());
        assert!(process_fidelity(&z, &id).abs() < 1e-15);
        assert!((process_purity(&ChiMatrix::depolarizing()) - 0.25).abs() < 1e-15);
        assert!(id.trace_preservation_error() < 1e-15);
        assert!(ChiMatrix::depolarizing().trace_preservation_error() < 1e-15);
    }

    #[test]
    fn chi_reproduces_channel_action() {
        let params = ConversionParams { theta: 0.3, dephase: 0.8, ..Default::default() };
        // Phase flip with dephasing: χ restricted to the I/Z block.
        let (d, th) = (params.dephase, params.theta);
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c((1.0 + d * th.cos()) / 2.0, 0.0);
        m[(3, 3)] = c((1.0 - d * th.cos()) / 2.0, 0.0);
        m[(0, 3)] = c(0.0, -d * th.sin() / 2.0);
        m[(3, 0)] = c(0.0, d * th.sin() / 2.0);
        let chi = ChiMatrix::new(m).unwrap();
        for label in Pol::ALL {
            let rho = projector(label);
            let expected = params.apply_single(&rho);
            assert!(max_abs_diff(&chi.apply(&rho), &expected) < 1e-14, "{label}");
        }
    }

    #[test]
    fn trace_preserving_rescale() {
        let mut m = ChiMatrix::identity_process().matrix().scale(0.3);
        m[(1, 1)] = c(0.2, 0.0);
        let tp = make_trace_preserving(&m).unwrap();
        assert!(max_abs_diff(&completeness(&tp), &linalg::identity(2)) < 1e-12);
    }

    #[test]
    fn mle_recovers_identity_process() {
        let data = simulate_process_counts(&ConversionParams::default(), 1e4, 1.0, Sampling::Expected).unwrap();
        let res = mle_process(&data, &TomographyOptions::default()).unwrap();
        let chi = res.process().unwrap();
        assert!(chi.matrix()[(0, 0)].re > 1.0 - 1e-6, "{}", chi.matrix());
        assert!(chi.trace_preservation_error() < 1e-6);
    }

    #[test]
    fn post_normalized_fit() {
        let data = simulate_process_counts(&ConversionParams::default(), 1e4, 1.0, Sampling::Expected).unwrap();
        let opts = TomographyOptions { trace_preserving: false, ..Default::default() };
        let res = mle_process(&data, &opts).unwrap();
        assert!(res.process().unwrap().matrix()[(0, 0)].re > 1.0 - 1e-6);
    }

    #[test]
    fn incomplete_inputs_rejected() {
        let data = simulate_process_counts(&ConversionParams::default(), 1e4, 1.0, Sampling::Expected).unwrap();
        let h_and_v: Vec<_> = data
            .into_iter()
            .filter(|r| matches!(r.setting_a.label(), Some(Pol::H) | Some(Pol::V)))
            .collect();
        assert!(mle_process(&h_and_v, &TomographyOptions::default()).is_err());
    }
}
