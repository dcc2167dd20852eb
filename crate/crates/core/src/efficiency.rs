//! Sum-frequency conversion efficiency for focused Gaussian beams, and the
//! bookkeeping that turns measured powers and rates into efficiencies.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyParams {
    pub pump_power_w: f64,
    /// Input (signal) wavelength, m.
    pub lambda_1_m: f64,
    /// Output wavelength, m.
    pub lambda_2_m: f64,
    pub lambda_p_m: f64,
    pub n_1: f64,
    pub n_2: f64,
    pub d_eff_m_per_v: f64,
    pub crystal_length_m: f64,
    pub h_m: f64,
}

impl EfficiencyParams {
    /// One 4.3 mm ppKTP crystal converting 810 nm to 532 nm with a 1550 nm pump.
    ///
    /// `d_eff` is set so that a 1 W pump gives 0.8 % conversion with `h_m = 0.6`.
    pub fn ppktp_810_to_532() -> Self {
        EfficiencyParams {
            pump_power_w: 1.0,
            lambda_1_m: 810e-9,
            lambda_2_m: 532e-9,
            lambda_p_m: 1550e-9,
            n_1: 1.8421,
            n_2: 1.8887,
            d_eff_m_per_v: 7.79e-12,
            crystal_length_m: 4.3e-3,
            h_m: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pump_power_w", self.pump_power_w),
            ("lambda_1_m", self.lambda_1_m),
            ("lambda_2_m", self.lambda_2_m),
            ("lambda_p_m", self.lambda_p_m),
            ("n_1", self.n_1),
            ("n_2", self.n_2),
            ("d_eff_m_per_v", self.d_eff_m_per_v),
            ("crystal_length_m", self.crystal_length_m),
            ("h_m", self.h_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Pump power at which conversion is complete.
pub fn p_max(params: &EfficiencyParams) -> f64 {
    SPEED_OF_LIGHT
        * VACUUM_PERMITTIVITY
        * params.n_1
        * params.n_2
        * params.lambda_1_m
        * params.lambda_2_m
        * params.lambda_p_m
        / (128.0 * params.d_eff_m_per_v.powi(2) * params.crystal_length_m * params.h_m)
}

/// Photon-number conversion efficiency `sin²(π/2 √(P/P_max))`.
pub fn sfg_efficiency(pump_power: f64, p_max: f64) -> f64 {
    let s = (FRAC_PI_2 * (pump_power.max(0.0) / p_max).sqrt()).sin();
    (s * s).clamp(0.0, 1.0)
}

/// Inverts [`sfg_efficiency`] for the `P_max` that yields `efficiency` at `pump_power`.
pub fn p_max_for_efficiency(efficiency: f64, pump_power: f64) -> Result<f64> {
    if !(efficiency > 0.0 && efficiency <= 1.0) || !(pump_power > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cannot invert efficiency {efficiency} at {pump_power} W"
        )));
    }
    let ratio = efficiency.sqrt().asin() / FRAC_PI_2;
    Ok(pump_power / (ratio * ratio))
}

// 15-point Kronrod nodes on [0, 1] and weights; the 7-point Gauss rule uses the odd entries.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of a complex integrand.
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Complex64> {
    let mut intervals = vec![(a, b, gauss_kronrod(&f, a, b))];
    loop {
        let total: Complex64 = intervals.iter().map(|(_, _, (v, _))| *v).sum();
        let err: f64 = intervals.iter().map(|(_, _, (_, e))| *e).sum();
        if err <= abs_tol.max(1e-14 * total.norm()) {
            return Ok(total);
        }
        if intervals.len() >= max_intervals {
            return Err(Error::Integration(format!(
                "error estimate {err:e} above {abs_tol:e} after {max_intervals} intervals"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| (x.1).2 .1.total_cmp(&(y.1).2 .1))
            .map(|(i, _)| i)
            .expect("at least one interval");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gauss_kronrod(&f, lo, mid)));
        intervals.push((mid, hi, gauss_kronrod(&f, mid, hi)));
    }
}

/// Focusing function at fixed phase mismatch `sigma`:
/// `|∫_{-ξ}^{ξ} e^{iστ}/(1+iτ) dτ|² / (4ξ)`.
pub fn focusing_function(xi: f64, sigma: f64) -> Result<f64> {
    let integrand = |tau: f64| Complex64::new(0.0, sigma * tau).exp() / Complex64::new(1.0, tau);
    let value = integrate_adaptive(integrand, -xi, xi, 1e-13 * xi.max(1e-3), 2000)?;
    Ok(value.norm_sqr() / (4.0 * xi))
}

/// Gaussian-beam focusing factor `h(ξ)`, maximized over phase mismatch.
pub fn focusing_factor(xi: f64) -> Result<f64> {
    Ok(optimal_focusing(xi)?.1)
}

/// Returns the optimal phase mismatch and the corresponding focusing factor.
pub fn optimal_focusing(xi: f64) -> Result<(f64, f64)> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!("focusing parameter {xi} must be positive")));
    }
    // Coarse scan; the main lobe sits at positive mismatch for every ξ.
    let (lo, hi, steps) = (-1.0, 4.0, 100);
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let values = grid
        .iter()
        .map(|&s| focusing_function(xi, s))
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(steps)];
    golden_section_max(|s| focusing_function(xi, s), a, b, 1e-10)
}

fn golden_section_max(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a).abs() > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Measured quantities feeding the efficiency budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetInputs {
    /// Converted power measured in the laser calibration, W.
    pub calibration_output_power_w: f64,
    /// Input power of the calibration laser, W.
    pub calibration_input_power_w: f64,
    pub lambda_in_m: f64,
    pub lambda_out_m: f64,
    /// Fractional optical loss between crystal and power meter.
    pub optical_loss: f64,
    pub input_pair_rate_cps: f64,
    pub output_pair_rate_cps: f64,
    pub fiber_coupling: f64,
    /// Each crystal sees only half of the pump.
    pub half_power_factor: f64,
    /// Penalty for the focus sitting between the crystals.
    pub focus_position_factor: f64,
}

impl BudgetInputs {
    pub fn calibration_run() -> Self {
        BudgetInputs {
            calibration_output_power_w: 270e-9,
            calibration_input_power_w: 28e-6,
            lambda_in_m: 810e-9,
            lambda_out_m: 532e-9,
            optical_loss: 0.16,
            input_pair_rate_cps: 7.3e4,
            output_pair_rate_cps: 15.0,
            fiber_coupling: 0.5,
            half_power_factor: 0.5,
            focus_position_factor: 0.82,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("calibration_output_power_w", self.calibration_output_power_w),
            ("calibration_input_power_w", self.calibration_input_power_w),
            ("lambda_in_m", self.lambda_in_m),
            ("lambda_out_m", self.lambda_out_m),
            ("input_pair_rate_cps", self.input_pair_rate_cps),
            ("output_pair_rate_cps", self.output_pair_rate_cps),
            ("fiber_coupling", self.fiber_coupling),
            ("half_power_factor", self.half_power_factor),
            ("focus_position_factor", self.focus_position_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.optical_loss) {
            return Err(Error::InvalidParameter(format!(
                "optical_loss {} outside [0, 1)",
                self.optical_loss
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyBudget {
    pub p_max_w: f64,
    pub theoretical_efficiency: f64,
    /// Photon-number ratio of the detected calibration powers.
    pub calibration_photon_ratio: f64,
    /// Calibration ratio corrected for optical loss.
    pub observed_efficiency: f64,
    /// Output pairs over input pairs.
    pub effective_efficiency: f64,
    /// Effective efficiency corrected for fiber coupling.
    pub intrinsic_efficiency: f64,
    /// Intrinsic efficiency rescaled to a single, fully pumped, centered crystal.
    pub intrinsic_single_crystal: f64,
}

pub fn efficiency_budget(theory: &EfficiencyParams, inputs: &BudgetInputs) -> Result<EfficiencyBudget> {
    theory.validate()?;
    inputs.validate()?;
    let p_max_w = p_max(theory);
    let calibration_photon_ratio = inputs.calibration_output_power_w * inputs.lambda_out_m
        / (inputs.calibration_input_power_w * inputs.lambda_in_m);
    let observed_efficiency = calibration_photon_ratio / (1.0 - inputs.optical_loss);
    let effective_efficiency = inputs.output_pair_rate_cps / inputs.input_pair_rate_cps;
    let intrinsic_efficiency = effective_efficiency / inputs.fiber_coupling;
    let intrinsic_single_crystal =
        intrinsic_efficiency / inputs.half_power_factor / inputs.focus_position_factor;
    Ok(EfficiencyBudget {
        p_max_w,
        theoretical_efficiency: sfg_efficiency(theory.pump_power_w, p_max_w),
        calibration_photon_ratio,
        observed_efficiency,
        effective_efficiency,
        intrinsic_efficiency,
        intrinsic_single_crystal,
    })
}

impl EfficiencyBudget {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("p_max_w", self.p_max_w),
            ("theoretical_efficiency", self.theoretical_efficiency),
            ("calibration_photon_ratio", self.calibration_photon_ratio),
            ("observed_efficiency", self.observed_efficiency),
            ("effective_efficiency", self.effective_efficiency),
            ("intrinsic_efficiency", self.intrinsic_efficiency),
            ("intrinsic_single_crystal", self.intrinsic_single_crystal),
        ]
    }
}

/// Gaussian-beam focusing parameter `L / (2 z_R)` for waist `w0` inside a medium of index `n`.
pub fn focusing_parameter(length_m: f64, waist_m: f64, wavelength_m: f64, n: f64) -> f64 {
    let rayleigh = PI * waist_m * waist_m * n / wavelength_m;
    length_m / (2.0 * rayleigh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_fixtures() {
        assert_eq!(sfg_efficiency(3.0, 3.0), 1.0);
        assert!((sfg_efficiency(1.0, 4.0) - 0.5).abs() < 1e-15);
        assert_eq!(sfg_efficiency(0.0, 4.0), 0.0);
    }

    #[test]
    fn efficiency_monotone_below_p_max() {
        let mut last = -1.0;
        for i in 0..=100 {
            let eta = sfg_efficiency(i as f64 / 100.0 * 7.0, 7.0);
            assert!(eta >= last);
            last = eta;
        }
    }

    #[test]
    fn small_signal_slope() {
        let p_max = 308.0;
        let p = 1e-6;
        let slope = sfg_efficiency(p, p_max) / p;
        let expected = FRAC_PI_2 * FRAC_PI_2 / p_max;
        assert!((slope / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn inversion_round_trips() {
        let pm = p_max_for_efficiency(0.008, 1.0).unwrap();
        assert!((pm - 307.6).abs() < 0.5, "{pm}");
        assert!((sfg_efficiency(1.0, pm) - 0.008).abs() < 1e-15);
        // small-angle oracle
        assert!((FRAC_PI_2 * FRAC_PI_2 / pm - 0.008).abs() < 1e-4);
        assert!(p_max_for_efficiency(0.0, 1.0).is_err());
    }

    #[test]
    fn p_max_scaling() {
        let base = EfficiencyParams::ppktp_810_to_532();
        let longer = EfficiencyParams { crystal_length_m: 2.0 * base.crystal_length_m, ..base };
        assert!((p_max(&longer) / p_max(&base) - 0.5).abs() < 1e-12);
        let stronger = EfficiencyParams { d_eff_m_per_v: 2.0 * base.d_eff_m_per_v, ..base };
        assert!((p_max(&stronger) / p_max(&base) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ppktp_preset_matches_inversion() {
        let pm = p_max(&EfficiencyParams::ppktp_810_to_532());
        assert!((pm - 308.0).abs() < 2.0, "{pm}");
    }

    #[test]
    fn invalid_params() {
        let bad = EfficiencyParams { h_m: 0.0, ..EfficiencyParams::ppktp_810_to_532() };
        assert!(bad.validate().is_err());
        assert!(focusing_factor(0.0).is_err());
        assert!(focusing_factor(-1.0).is_err());
    }

    #[test]
    fn quadrature_of_known_integrals() {
        let v = integrate_adaptive(|t| Complex64::new(t.cos(), 0.0), 0.0, PI / 2.0, 1e-13, 100).unwrap();
        assert!((v.re - 1.0).abs() < 1e-13);
        // ∫ 1/(1+iτ) over [-a, a] = 2 atan(a) (real part), imaginary part cancels
        let v = integrate_adaptive(|t| Complex64::new(1.0, t).inv(), -2.0, 2.0, 1e-13, 100).unwrap();
        assert!((v.re - 2.0 * 2f64.atan()).abs() < 1e-12 && v.im.abs() < 1e-12);
    }

    #[test]
    fn quadrature_reports_failure() {
        let r = integrate_adaptive(|t| Complex64::new(1.0 / t.abs().sqrt(), 0.0), -1.0, 1.0, 1e-15, 4);
        assert!(matches!(r, Err(Error::Integration(_))));
    }

    #[test]
    fn weak_focus_limit() {
        let xi = 1e-3;
        let h = focusing_factor(xi).unwrap();
        assert!((h / xi - 1.0).abs() < 0.01, "{h}");
    }

    #[test]
    fn budget_trivial_chain() {
        let inputs = BudgetInputs {
            calibration_output_power_w: 1e-6,
            calibration_input_power_w: 1e-6,
            lambda_in_m: 800e-9,
            lambda_out_m: 800e-9,
            optical_loss: 0.0,
            ..BudgetInputs::calibration_run()
        };
        let b = efficiency_budget(&EfficiencyParams::ppktp_810_to_532(), &inputs).unwrap();
        assert!((b.observed_efficiency - 1.0).abs() < 1e-15);
    }

    #[test]
    fn budget_intrinsic_chain() {
        let inputs = BudgetInputs {
            input_pair_rate_cps: 1e4,
            output_pair_rate_cps: 2.0,
            ..BudgetInputs::calibration_run()
        };
        let b = efficiency_budget(&EfficiencyParams::ppktp_810_to_532(), &inputs).unwrap();
        assert!((b.effective_efficiency - 2e-4).abs() < 1e-18);
        assert!((b.intrinsic_efficiency - 4e-4).abs() < 1e-18);
    }

    #[test]
    fn focusing_parameter_from_waist() {
        // ξ = L λ / (2 π w0² n)
        let xi = focusing_parameter(4.3e-3, 50e-6, 810e-9, 1.84);
        assert!((xi - 4.3e-3 * 810e-9 / (2.0 * PI * 2.5e-9 * 1.84)).abs() < 1e-12);
    }
}
