//! Poisson likelihood for counts that are linear in a Hermitian matrix, and the
//! lower-triangular (Cholesky-style) parameterization used by the fits.

use crate::linalg::{c, trace_product, CMatrix};

pub(crate) const MU_FLOOR: f64 = 1e-12;

/// Counts `n_r` with means `μ_r = scale_r · Tr(X O_r)`.
pub(crate) struct PoissonModel {
    pub ops: Vec<CMatrix>,
    pub counts: Vec<f64>,
    pub scales: Vec<f64>,
    /// Total counts; the objective is divided by this.
    pub weight: f64,
}

impl PoissonModel {
    pub fn probabilities(&self, x: &CMatrix) -> Vec<f64> {
        self.ops.iter().map(|o| trace_product(x, o).re).collect()
    }

    /// Normalized log-likelihood `Σ (n ln μ − μ) / W` with `0 ln 0 = 0`.
    pub fn value(&self, x: &CMatrix, gain: f64) -> f64 {
        self.probabilities(x)
            .iter()
            .zip(&self.counts)
            .zip(&self.scales)
            .map(|((p, &n), &s)| {
                let mu = (gain * s * p).max(MU_FLOOR);
                let log_term = if n > 0.0 { n * mu.ln() } else { 0.0 };
                log_term - mu
            })
            .sum::<f64>()
            / self.weight
    }

    /// Value, matrix gradient `G` (so that `df = Tr(G dX)`), and `∂f/∂ln(gain)`.
    pub fn value_and_gradient(&self, x: &CMatrix, gain: f64) -> (f64, CMatrix, f64) {
        let dim = x.nrows();
        let mut grad = CMatrix::zeros(dim, dim);
        let mut value = 0.0;
        let mut d_gain = 0.0;
        for ((o, &n), &s) in self.ops.iter().zip(&self.counts).zip(&self.scales) {
            let p = trace_product(x, o).re;
            let raw = gain * s * p;
            let mu = raw.max(MU_FLOOR);
            value += if n > 0.0 { n * mu.ln() } else { 0.0 } - mu;
            let factor = n / mu - 1.0;
            grad += o.scale(factor * gain * s);
            d_gain += factor * raw;
        }
        (value / self.weight, grad.unscale(self.weight), d_gain / self.weight)
    }
}

/// Number of real parameters of a `dim × dim` lower-triangular factor.
pub(crate) fn param_count(dim: usize) -> usize {
    dim * dim
}

/// Builds lower-triangular `T` from parameters: real diagonal first, then
/// (re, im) of each strictly lower entry in row-major order.
pub(crate) fn lower_from_params(params: &[f64], dim: usize) -> CMatrix {
    let mut t = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        t[(i, i)] = c(params[i], 0.0);
    }
    let mut k = dim;
    for i in 0..dim {
        for j in 0..i {
            t[(i, j)] = c(params[k], params[k + 1]);
            k += 2;
        }
    }
    t
}

/// Maps `H` with `df = 2 Re Tr(H dT)` onto the parameter gradient.
pub(crate) fn params_gradient(h: &CMatrix, dim: usize) -> Vec<f64> {
    let mut g = vec![0.0; param_count(dim)];
    for i in 0..dim {
        g[i] = 2.0 * h[(i, i)].re;
    }
    let mut k = dim;
    for i in 0..dim {
        for j in 0..i {
            g[k] = 2.0 * h[(j, i)].re;
            g[k + 1] = -2.0 * h[(j, i)].im;
            k += 2;
        }
    }
    g
}

/// Lower-triangular `T` with `T†T = m` for a positive-definite `m`.
pub(crate) fn lower_factor(m: &CMatrix) -> Option<CMatrix> {
    let dim = m.nrows();
    // Reverse the index order, factor, and reverse back to get an upper factor U with U U† = m.
    let flipped = CMatrix::from_fn(dim, dim, |i, j| m[(dim - 1 - i, dim - 1 - j)]);
    let l = flipped.cholesky()?.unpack();
    let upper = CMatrix::from_fn(dim, dim, |i, j| l[(dim - 1 - i, dim - 1 - j)]);
    Some(upper.adjoint())
}

pub(crate) fn params_from_lower(t: &CMatrix) -> Vec<f64> {
    let dim = t.nrows();
    let mut p = vec![0.0; param_count(dim)];
    for i in 0..dim {
        p[i] = t[(i, i)].re;
    }
    let mut k = dim;
    for i in 0..dim {
        for j in 0..i {
            p[k] = t[(i, j)].re;
            p[k + 1] = t[(i, j)].im;
            k += 2;
        }
    }
    p
}

pub(crate) fn gram(t: &CMatrix) -> CMatrix {
    t.adjoint() * t
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ZERO};
    use crate::quantum::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factor_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random::density_matrix(&mut rng, 4);
        let t = lower_factor(rho.matrix()).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(t[(i, j)], ZERO);
            }
        }
        assert!(max_abs_diff(&gram(&t), rho.matrix()) < 1e-12);
        let p = params_from_lower(&t);
        assert_eq!(p.len(), 16);
        assert!(max_abs_diff(&lower_from_params(&p, 4), &t) < 1e-15);
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random::density_matrix(&mut rng, 4).into_matrix();
        let x0: Vec<f64> = (0..16).map(|i| 0.3 + 0.05 * i as f64).collect();
        // f(T) = Tr(G T†T)
        let f = |p: &[f64]| trace_product(&g, &gram(&lower_from_params(p, 4))).re;
        let t = lower_from_params(&x0, 4);
        let analytic = params_gradient(&(&g * t.adjoint()), 4);
        for i in 0..16 {
            let mut up = x0.clone();
            let mut down = x0.clone();
            up[i] += 1e-6;
            down[i] -= 1e-6;
            let fd = (f(&up) - f(&down)) / 2e-6;
            assert!((fd - analytic[i]).abs() < 1e-7, "param {i}: {fd} vs {}", analytic[i]);
        }
    }
}
