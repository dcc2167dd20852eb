//! The entangled-pair source and the polarization-coherent conversion channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, kron, trace, CMatrix, CVector};
use crate::quantum::DensityMatrix;

/// Knobs of the two-crystal conversion stage acting on the second photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversionParams {
    /// Amplitude conversion efficiency of the H crystal.
    pub eta_h: f64,
    /// Amplitude conversion efficiency of the V crystal.
    pub eta_v: f64,
    /// Relative phase between the converted components, radians.
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    /// Fraction of H/V coherence surviving residual temporal walk-off.
    pub dephase: f64,
}

impl Default for ConversionParams {
    fn default() -> Self {
        ConversionParams { eta_h: 1.0, eta_v: 1.0, theta: 0.0, dephase: 1.0 }
    }
}

impl ConversionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_h", self.eta_h), ("eta_v", self.eta_v)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.eta_h * self.eta_h + self.eta_v * self.eta_v <= 0.0 {
            return Err(Error::InvalidParameter("eta_h and eta_v are both zero".into()));
        }
        if !(0.0..=1.0).contains(&self.dephase) {
            return Err(Error::InvalidParameter(format!("dephase = {} outside [0, 1]", self.dephase)));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta is not finite".into()));
        }
        Ok(())
    }

    /// Single-photon filter `diag(η_H, η_V e^{-iθ})`.
    pub fn kraus(&self) -> CMatrix {
        let phase = c(0.0, -self.theta).exp();
        CMatrix::from_diagonal(&CVector::from_row_slice(&[c(self.eta_h, 0.0), phase * self.eta_v]))
    }

    /// Unnormalized single-photon map: filter followed by walk-off dephasing.
    pub fn apply_single(&self, rho: &CMatrix) -> CMatrix {
        let k = self.kraus();
        let mut out = &k * rho * k.adjoint();
        out[(0, 1)] *= self.dephase;
        out[(1, 0)] *= self.dephase;
        out
    }
}

/// Converts the second photon of a two-photon state.
///
/// Returns the postselected (renormalized) output and the success probability
/// `Tr[(I ⊗ K†K) ρ]`.
pub fn convert(rho_in: &DensityMatrix, params: &ConversionParams) -> Result<(DensityMatrix, f64)> {
    params.validate()?;
    if rho_in.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho_in.dim() });
    }
    let k = kron(&CMatrix::identity(2, 2), &params.kraus());
    let mut out = &k * rho_in.matrix() * k.adjoint();
    // Second-photon bit is the low bit of the (HH, HV, VH, VV) index.
    for i in 0..4 {
        for j in 0..4 {
            if (i & 1) != (j & 1) {
                out[(i, j)] *= params.dephase;
            }
        }
    }
    let success = trace(&out).re;
    if !(success > 1e-15) {
        return Err(Error::ZeroSuccessProbability);
    }
    let rho_out = DensityMatrix::from_psd(&out.unscale(success))?;
    Ok((rho_out, success))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    /// Werner mixture with weight `p` on `|φ+⟩`.
    Werner { p: f64 },
    Custom(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub kind: SourceKind,
    /// Generated pair rate, pairs/s.
    pub pair_rate: f64,
}

impl SourceModel {
    pub fn werner(p: f64, pair_rate: f64) -> Self {
        SourceModel { kind: SourceKind::Werner { p }, pair_rate }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate >= 0.0) || !self.pair_rate.is_finite() {
            return Err(Error::InvalidParameter(format!("pair rate {} is invalid", self.pair_rate)));
        }
        source_state(self).map(|_| ())
    }
}

pub fn source_state(model: &SourceModel) -> Result<DensityMatrix> {
    match &model.kind {
        SourceKind::Werner { p } => DensityMatrix::werner(*p),
        SourceKind::Custom(rho) => {
            if rho.dim() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
            }
            DensityMatrix::new(rho.matrix().clone())
        }
    }
}

/// Success probability predicted directly from the filter, for cross-checks.
pub fn success_probability(rho_in: &DensityMatrix, params: &ConversionParams) -> f64 {
    let k = params.kraus();
    let kk = kron(&CMatrix::identity(2, 2), &(k.adjoint() * &k));
    rho_in.expectation(&kk)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::quantum::{bell_state, fidelity, trace_distance, BellKind};
    use std::f64::consts::PI;

    fn phi_plus() -> DensityMatrix {
        bell_state(BellKind::PhiPlus).density()
    }

    #[test]
    fn werner_endpoints() {
        let pure = source_state(&SourceModel::werner(1.0, 1.0)).unwrap();
        assert!(max_abs_diff(pure.matrix(), phi_plus().matrix()) < 1e-15);
        let mixed = source_state(&SourceModel::werner(0.0, 1.0)).unwrap();
        assert!(max_abs_diff(mixed.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
        let w = source_state(&SourceModel::werner(0.925, 1.0)).unwrap();
        let f = fidelity(&w, &bell_state(BellKind::PhiPlus)).unwrap();
        assert!((f - 0.94375).abs() < 1e-12);
    }

    #[test]
    fn invalid_source_rejected() {
        assert!(source_state(&SourceModel::werner(-0.1, 1.0)).is_err());
        assert!(SourceModel::werner(0.5, -1.0).validate().is_err());
    }

    #[test]
    fn identity_channel() {
        let (out, p) = convert(&phi_plus(), &ConversionParams::default()).unwrap();
        assert!(trace_distance(out.matrix(), phi_plus().matrix()) < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_phase_maps_phi_plus_to_phi_minus() {
        let params = ConversionParams { theta: PI, ..Default::default() };
        let (out, _) = convert(&phi_plus(), &params).unwrap();
        let f = fidelity(&out, &bell_state(BellKind::PhiMinus)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_branch_postselection() {
        let params = ConversionParams { eta_v: 0.0, ..Default::default() };
        let (out, p) = convert(&phi_plus(), &params).unwrap();
        let mut hh = CMatrix::zeros(4, 4);
        hh[(0, 0)] = c(1.0, 0.0);
        assert!(max_abs_diff(out.matrix(), &hh) < 1e-12);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_success_probability() {
        let params = ConversionParams { eta_h: 0.0, ..Default::default() };
        let mut hh = CMatrix::zeros(4, 4);
        hh[(0, 0)] = c(1.0, 0.0);
        let rho = DensityMatrix::new(hh).unwrap();
        assert!(matches!(convert(&rho, &params), Err(Error::ZeroSuccessProbability)));
        let both_zero = ConversionParams { eta_h: 0.0, eta_v: 0.0, ..Default::default() };
        assert!(convert(&phi_plus(), &both_zero).is_err());
    }

    #[test]
    fn dephasing_scales_coherence() {
        let params = ConversionParams { dephase: 0.5, ..Default::default() };
        let (out, _) = convert(&phi_plus(), &params).unwrap();
        assert!((out.matrix()[(0, 3)].re - 0.25).abs() < 1e-15);
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = ConversionParams { dephase: 1.5, ..Default::default() };
        assert!(convert(&phi_plus(), &bad).is_err());
        let bad = ConversionParams { eta_h: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
