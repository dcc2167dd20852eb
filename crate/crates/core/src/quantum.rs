//! One- and two-qubit polarization states and the metrics used to grade them.
//!
//! Two-qubit matrices use the computational order (HH, HV, VH, VV): the first
//! photon is the high bit of the index.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, hermitian_eigenvalues, is_hermitian, kron, outer, psd_sqrt, trace, CMatrix, CVector,
    C64, I, ONE, ZERO,
};

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues down to this are treated as zero.
pub const EIGEN_FLOOR: f64 = -1e-10;

/// The six polarization states used for preparation and analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Pol {
    pub const ALL: [Pol; 6] = [Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L];

    pub fn orthogonal(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
            Pol::D => Pol::A,
            Pol::A => Pol::D,
            Pol::R => Pol::L,
            Pol::L => Pol::R,
        }
    }

    /// Index of the measurement basis this state belongs to (HV, DA, RL).
    pub fn basis(self) -> usize {
        match self {
            Pol::H | Pol::V => 0,
            Pol::D | Pol::A => 1,
            Pol::R | Pol::L => 2,
        }
    }

    pub fn ket(self) -> StateVector {
        let s = FRAC_1_SQRT_2;
        let amps = match self {
            Pol::H => [ONE, ZERO],
            Pol::V => [ZERO, ONE],
            Pol::D => [c(s, 0.0), c(s, 0.0)],
            Pol::A => [c(s, 0.0), c(-s, 0.0)],
            Pol::R => [c(s, 0.0), c(0.0, s)],
            Pol::L => [c(s, 0.0), c(0.0, -s)],
        };
        StateVector(CVector::from_row_slice(&amps))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pol::H => "H",
            Pol::V => "V",
            Pol::D => "D",
            Pol::A => "A",
            Pol::R => "R",
            Pol::L => "L",
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(Pol::H),
            "V" | "v" => Ok(Pol::V),
            "D" | "d" => Ok(Pol::D),
            "A" | "a" => Ok(Pol::A),
            "R" | "r" => Ok(Pol::R),
            "L" | "l" => Ok(Pol::L),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Rank-one projector onto one of the six polarization states.
pub fn projector(label: Pol) -> CMatrix {
    outer(&label.ket().0)
}

/// Projector onto linear polarization at `angle_deg` from horizontal.
pub fn linear_projector(angle_deg: f64) -> CMatrix {
    let t = angle_deg.to_radians();
    outer(&CVector::from_row_slice(&[c(t.cos(), 0.0), c(t.sin(), 0.0)]))
}

/// Pauli matrices in the order I, X, Y, Z.
pub struct Pauli;

impl Pauli {
    pub fn i() -> CMatrix {
        linalg::identity(2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn basis() -> [CMatrix; 4] {
        [Self::i(), Self::x(), Self::y(), Self::z()]
    }
}

/// A normalized pure state of one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let dim = amplitudes.len();
        if dim != 2 && dim != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: dim });
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(StateVector(amplitudes))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(outer(&self.0))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector(self.0.kronecker(&other.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi+" | "phi_plus" => Ok(BellKind::PhiPlus),
            "phi-" | "phi_minus" => Ok(BellKind::PhiMinus),
            "psi+" | "psi_plus" => Ok(BellKind::PsiPlus),
            "psi-" | "psi_minus" => Ok(BellKind::PsiMinus),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        })
    }
}

pub fn bell_state(kind: BellKind) -> StateVector {
    let s = FRAC_1_SQRT_2;
    let amps = match kind {
        BellKind::PhiPlus => [s, 0.0, 0.0, s],
        BellKind::PhiMinus => [s, 0.0, 0.0, -s],
        BellKind::PsiPlus => [0.0, s, s, 0.0],
        BellKind::PsiMinus => [0.0, s, -s, 0.0],
    };
    StateVector(CVector::from_iterator(4, amps.iter().map(|&a| c(a, 0.0))))
}

/// A Hermitian, positive semidefinite, unit-trace operator on 2 or 4 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: CMatrix) -> Result<Self> {
        let dim = m.nrows();
        if !m.is_square() || (dim != 2 && dim != 4) {
            return Err(Error::DimensionMismatch { expected: 4, got: dim });
        }
        if !is_hermitian(&m, HERMITIAN_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = hermitian_eigenvalues(&m)[0];
        if min_eig < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Symmetrizes and rescales a PSD matrix to unit trace.
    pub fn from_psd(m: &CMatrix) -> Result<Self> {
        let h = linalg::hermitian_part(m);
        let tr = trace(&h).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState("non-positive trace".into()));
        }
        Self::new(h.unscale(tr))
    }

    /// Nearest physical state obtained by clipping negative eigenvalues.
    pub fn project(m: &CMatrix) -> Result<Self> {
        Self::from_psd(&linalg::hermitian_map(m, |v| v.max(0.0)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(linalg::identity(dim).unscale(dim as f64))
    }

    /// `p |φ+⟩⟨φ+| + (1 - p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("Werner weight {p} outside [0, 1]")));
        }
        let bell = bell_state(BellKind::PhiPlus).density().0;
        let mixed = linalg::identity(4).unscale(4.0);
        Ok(DensityMatrix(bell.scale(p) + mixed.scale(1.0 - p)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    /// Expectation value `Tr(ρ O)` of a Hermitian observable.
    pub fn expectation(&self, observable: &CMatrix) -> f64 {
        linalg::trace_product(&self.0, observable).re
    }

    /// `U ρ U†`.
    pub fn transform(&self, unitary: &CMatrix) -> DensityMatrix {
        DensityMatrix(unitary * &self.0 * unitary.adjoint())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }
}

pub enum FidelityTarget<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a StateVector> for FidelityTarget<'a> {
    fn from(v: &'a StateVector) -> Self {
        FidelityTarget::Pure(v)
    }
}

impl<'a> From<&'a DensityMatrix> for FidelityTarget<'a> {
    fn from(m: &'a DensityMatrix) -> Self {
        FidelityTarget::Mixed(m)
    }
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Squared Uhlmann fidelity; reduces to `⟨ψ|ρ|ψ⟩` for a pure target.
pub fn fidelity<'a>(rho: &DensityMatrix, target: impl Into<FidelityTarget<'a>>) -> Result<f64> {
    match target.into() {
        FidelityTarget::Pure(psi) => {
            if psi.dim() != rho.dim() {
                return Err(Error::DimensionMismatch { expected: rho.dim(), got: psi.dim() });
            }
            let v = psi.amplitudes();
            let val: C64 = (v.adjoint() * rho.matrix() * v)[(0, 0)];
            Ok(clamp_unit(val.re))
        }
        FidelityTarget::Mixed(sigma) => {
            if sigma.dim() != rho.dim() {
                return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
            }
            let root = psd_sqrt(rho.matrix());
            let inner = &root * sigma.matrix() * &root;
            let lambdas = hermitian_eigenvalues(&inner);
            // Rounding noise on vanishing eigenvalues would otherwise survive the square root.
            let floor = 1e-13 * lambdas.iter().cloned().fold(0.0, f64::max);
            let tr_sqrt: f64 = lambdas.into_iter().filter(|&v| v > floor).map(f64::sqrt).sum();
            Ok(clamp_unit(tr_sqrt * tr_sqrt))
        }
    }
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    let p = linalg::frobenius_sq(rho.matrix());
    p.clamp(1.0 / rho.dim() as f64, 1.0)
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let yy = kron(&Pauli::y(), &Pauli::y());
    let flipped = &yy * rho.matrix().conjugate() * &yy;
    // The square roots of spec(ρ ρ̃) equal the spectrum of sqrt(√ρ ρ̃ √ρ), which is Hermitian.
    let root = psd_sqrt(rho.matrix());
    let r = &root * flipped * &root;
    let eig = hermitian_eigenvalues(&r);
    let floor = 1e-13 * eig.iter().cloned().fold(0.0, f64::max);
    let mut lambdas: Vec<f64> = eig
        .into_iter()
        .map(|v| if v > floor { v.sqrt() } else { 0.0 })
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Squared concurrence.
pub fn tangle(rho: &DensityMatrix) -> Result<f64> {
    let c = concurrence(rho)?;
    Ok(clamp_unit(c * c))
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = linalg::hermitian_part(&(a - b));
    0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>()
}

/// A metric value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measured {
    pub value: f64,
    pub std_error: f64,
}

impl Measured {
    pub fn exact(value: f64) -> Self {
        Measured { value, std_error: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub fidelity: Measured,
    pub purity: Measured,
    /// Absent for single-qubit processes.
    pub tangle: Option<Measured>,
}

impl MetricReport {
    pub fn for_state(rho: &DensityMatrix, target: &StateVector) -> Result<Self> {
        Ok(MetricReport {
            fidelity: Measured::exact(fidelity(rho, target)?),
            purity: Measured::exact(purity(rho)),
            tangle: if rho.dim() == 4 { Some(Measured::exact(tangle(rho)?)) } else { None },
        })
    }
}

/// Random states and unitaries for property tests and calibration runs.
pub mod random {
    use super::*;

    fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Haar-random pure state.
    pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
        let v = CVector::from_fn(dim, |_, _| gaussian_complex(rng));
        StateVector::normalized(v).expect("gaussian vector is nonzero")
    }

    /// Hilbert-Schmidt random mixed state (full rank almost surely).
    pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
        let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
        DensityMatrix::from_psd(&(&g * g.adjoint())).expect("Ginibre product is PSD")
    }

    /// Random state of the given rank: a mixture of `rank` Haar-random pure states.
    pub fn density_matrix_of_rank<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        rank: usize,
    ) -> DensityMatrix {
        let g = CMatrix::from_fn(dim, rank, |_, _| gaussian_complex(rng));
        DensityMatrix::from_psd(&(&g * g.adjoint())).expect("Ginibre product is PSD")
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase correction.
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
        let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let phases = CMatrix::from_diagonal(&CVector::from_fn(dim, |i, _| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                ONE
            }
        }));
        q * phases
    }

    pub fn product_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
        density_matrix(rng, 2).tensor(&density_matrix(rng, 2))
    }
}
