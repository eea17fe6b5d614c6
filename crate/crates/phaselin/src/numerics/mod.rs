//! Shared numerical primitives: vector kernels, quantiles, sign-invariant
//! distance, power iteration, CG, the fast Walsh-Hadamard transform, and
//! seeded random generation.

mod cg;
mod eigen;
mod fwht;
mod quantile;
mod rng;

pub use cg::{conjugate_gradient, CgOutcome};
pub use eigen::{
    extreme_eigenvector, power_iteration, Extreme, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL,
};
pub use fwht::{fwht, fwht_in_place};
pub use quantile::{median, quantile};
pub use rng::{derive_seed, SeededRng};

use crate::error::{Error, Result};

/// Dot product with four accumulators so the sum order is fixed and the
/// compiler can vectorize it.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(x: &mut [f64], s: f64) {
    for xi in x.iter_mut() {
        *xi *= s;
    }
}

/// ‖a − b‖₂ without materializing the difference.
pub fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        let d = ai - bi;
        s += d * d;
    }
    s.sqrt()
}

/// Distance to a signal up to global sign: min(‖x − x⋆‖, ‖x + x⋆‖).
pub fn dist_to_signal(x: &[f64], x_star: &[f64]) -> Result<f64> {
    if x.len() != x_star.len() {
        return Err(Error::LengthMismatch(x.len(), x_star.len()));
    }
    let mut minus = 0.0;
    let mut plus = 0.0;
    for (xi, si) in x.iter().zip(x_star) {
        let d = xi - si;
        let s = xi + si;
        minus += d * d;
        plus += s * s;
    }
    Ok(minus.min(plus).sqrt())
}

/// Elementwise shrinkage toward `center`:
/// center_i + sign(v_i − center_i) · max(|v_i − center_i| − kappa, 0).
pub fn soft_threshold(v: &[f64], center: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if v.len() != center.len() {
        return Err(Error::LengthMismatch(v.len(), center.len()));
    }
    if kappa < 0.0 {
        return Err(Error::NegativeThreshold(kappa));
    }
    Ok(v.iter()
        .zip(center)
        .map(|(&vi, &ci)| {
            let d = vi - ci;
            ci + d.signum() * (d.abs() - kappa).max(0.0)
        })
        .collect())
}

/// A symmetric linear map given implicitly by its action on a vector.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// out = op · v
    fn apply(&self, v: &[f64], out: &mut [f64]);

    fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply(v, &mut out);
        out
    }
}

/// Dense symmetric matrix in row-major storage.
pub struct DenseSymmetric {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = dot(&self.data[i * self.n..(i + 1) * self.n], v);
        }
    }
}

/// Wraps a closure as a symmetric operator.
pub struct FnOperator<F: Fn(&[f64], &mut [f64])> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (self.f)(v, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_examples() {
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(dist_to_signal(&x, &x).unwrap(), 0.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(dist_to_signal(&neg, &x).unwrap(), 0.0);
        let d = dist_to_signal(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dist_length_mismatch() {
        assert!(matches!(
            dist_to_signal(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0], &[0.0], 1.0).unwrap(), vec![2.0]);
        let c = vec![4.0, -1.5, 0.0];
        assert_eq!(soft_threshold(&c, &c, 7.3).unwrap(), c);
        assert_eq!(soft_threshold(&[-0.5], &[0.0], 1.0).unwrap(), vec![0.0]);
        assert!(soft_threshold(&[1.0], &[0.0], -0.1).is_err());
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..13).map(|i| i as f64 * 0.7 - 3.0).collect();
        let b: Vec<f64> = (0..13).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
